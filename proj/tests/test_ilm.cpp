#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "ilmlab/ilm.hpp"

using namespace ilmlab;

namespace {

PosteriorGrid make_grid(std::vector<std::vector<double>> prob_rows) {
  PosteriorGrid g;
  g.num_labels = static_cast<int>(prob_rows.front().size()) - 1;
  for (auto& row : prob_rows) {
    std::vector<double> lr;
    for (double p : row) lr.push_back(p > 0 ? std::log(p) : kLogZero);
    g.log_rows.push_back(std::move(lr));
  }
  return g;
}

World two_grid_world() {
  World w;
  w.vocab.labels = {"a", "b"};
  w.entries.push_back({make_grid({{0.5, 0.3, 0.2}, {0.1, 0.6, 0.3}}), 0.5});
  w.entries.push_back({make_grid({{0.1, 0.6, 0.3}, {0.5, 0.3, 0.2}}), 0.5});
  w.max_len = 2;
  return w;
}

}  // namespace

TEST_CASE("frame prior is the weighted frame average") {
  World w = two_grid_world();
  Dataset data{{0, {0, 1}, {}, 1.0}};
  FramePrior p = estimate_frame_prior(data, w);
  REQUIRE(p.probs.size() == 3);
  CHECK(p.probs[0] == doctest::Approx(0.3).epsilon(1e-12));
  CHECK(p.probs[1] == doctest::Approx(0.45).epsilon(1e-12));
  CHECK(p.probs[2] == doctest::Approx(0.25).epsilon(1e-12));
  // weights shift the average toward the heavier grid's frames
  World skewed;
  skewed.vocab.labels = {"a", "b"};
  skewed.entries.push_back(
      {make_grid({{0.5, 0.3, 0.2}, {0.1, 0.6, 0.3}}), 0.5});
  skewed.entries.push_back(
      {make_grid({{0.1, 0.8, 0.1}, {0.1, 0.8, 0.1}}), 0.5});
  skewed.max_len = 2;
  Dataset mixed{{0, {0, 1}, {}, 1.0}, {1, {1}, {}, 3.0}};
  FramePrior q = estimate_frame_prior(mixed, skewed);
  double total = 0.0;
  for (double x : q.probs) total += x;
  CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(q.probs[1] > p.probs[1]);
}

TEST_CASE("unigram from prior renormalizes the blank away") {
  FramePrior p{{0.3, 0.45, 0.25}};
  CtxLM uni = unigram_from_prior(p);
  CHECK_FALSE(uni.models_eos());
  auto row = uni.prob_row({});
  CHECK(row[0] == doctest::Approx(0.4).epsilon(1e-12));
  CHECK(row[1] == doctest::Approx(0.6).epsilon(1e-12));
  CHECK(row[2] == doctest::Approx(0.0));
  FramePrior degenerate{{0.0, 0.0, 1.0}};
  CHECK_THROWS_AS(unigram_from_prior(degenerate), ValidationError);
}

TEST_CASE("exact ILM sequence probability") {
  World w = two_grid_world();
  CHECK(exact_ilm_seq(w, {0, 1}) == doctest::Approx(0.165).epsilon(1e-12));
  CHECK(exact_ilm_seq(w, {}) == doctest::Approx(0.06).epsilon(1e-12));
}

TEST_CASE("exact ILM posterior mixes grid rows by prefix evidence") {
  World w = two_grid_world();
  auto row = exact_ilm_posterior(w, {});
  // both grids have prefix mass 1, so this is the plain prior mixture
  CHECK(row[0] == doctest::Approx(0.5 * 0.52 + 0.5 * 0.25).epsilon(1e-12));
  CHECK(row[1] == doctest::Approx(0.5 * 0.42 + 0.5 * 0.69).epsilon(1e-12));
  CHECK(row[2] == doctest::Approx(0.06).epsilon(1e-12));
  double total = 0.0;
  for (double x : row) total += x;
  CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
  CHECK_THROWS_AS(exact_ilm_posterior(w, {0, 0}), DeadPrefixError);
}

TEST_CASE("world sequence distribution is a distribution") {
  World w = two_grid_world();
  auto dist = exact_world_seq_distribution(w);
  double total = 0.0;
  for (const auto& [seq, p] : dist) {
    CHECK(p == doctest::Approx(exact_ilm_seq(w, seq)).epsilon(1e-12));
    total += p;
  }
  CHECK(total == doctest::Approx(1.0).epsilon(1e-10));
}

TEST_CASE("perplexity identities") {
  CtxLM uniform(2, 0);  // 1/3 per step incl. EOS
  std::vector<Labels> eval{{0, 1}, {1}};
  CHECK(perplexity(uniform, eval) == doctest::Approx(3.0).epsilon(1e-12));
  CtxLM no_eos(2, 0, /*models_eos=*/false);
  CHECK(perplexity(no_eos, eval) == doctest::Approx(2.0).epsilon(1e-12));
  // a model with a true zero gets rescued by the floor only
  CtxLM spiky = unigram_from_prior(FramePrior{{1.0, 0.0, 0.0}});
  CHECK(perplexity(spiky, {{1}}, -30.0) ==
        doctest::Approx(std::exp(30.0)).epsilon(1e-9));
  CHECK(std::isinf(perplexity(spiky, {{1}}, kLogZero)));
}

TEST_CASE("prior validation") {
  FramePrior bad{{0.5, 0.2, 0.2}};
  CHECK_THROWS_AS(bad.validate(), ValidationError);
  FramePrior ok{{0.3, 0.45, 0.25}};
  ok.validate();
}
