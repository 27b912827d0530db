#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <set>

#include "ilmlab/ilm.hpp"
#include "ilmlab/io.hpp"
#include "ilmlab/worldgen.hpp"

using namespace ilmlab;

TEST_CASE("generated worlds are valid and deterministic") {
  WorldSpec spec;
  spec.num_labels = 3;
  spec.t_min = 2;
  spec.t_max = 5;
  spec.num_grids = 6;
  spec.seed = 42;
  World a = build_world(spec);
  a.validate();
  CHECK(a.num_grids() == 6);
  for (const auto& e : a.entries) {
    CHECK(e.grid.frames() >= 2);
    CHECK(e.grid.frames() <= 5);
    CHECK(e.prior > 0.0);
  }
  World b = build_world(spec);
  CHECK(world_to_json(a).dump() == world_to_json(b).dump());
  spec.seed = 43;
  World c = build_world(spec);
  CHECK(world_to_json(a).dump() != world_to_json(c).dump());
}

TEST_CASE("low concentration sharpens rows") {
  WorldSpec spec;
  spec.num_labels = 3;
  spec.num_grids = 10;
  spec.concentration = 0.1;
  spec.seed = 7;
  World sharp = build_world(spec);
  spec.concentration = 1.0;
  World neutral = build_world(spec);
  auto mean_row_max = [](const World& w) {
    double acc = 0.0;
    int rows = 0;
    for (const auto& e : w.entries)
      for (const auto& row : e.grid.log_rows) {
        double mx = 0.0;
        for (double lp : row) mx = std::max(mx, std::exp(lp));
        acc += mx;
        ++rows;
      }
    return acc / rows;
  };
  CHECK(mean_row_max(sharp) > mean_row_max(neutral));
  CHECK(mean_row_max(sharp) >= 0.8);
}

TEST_CASE("sampled pairs carry consistent boundaries") {
  WorldSpec spec;
  spec.num_labels = 2;
  spec.num_grids = 4;
  spec.seed = 3;
  World w = build_world(spec);
  Dataset data = sample_dataset(w, 60, 5);
  CHECK(data.size() == 60);
  for (const auto& pair : data) {
    validate_pair(pair, w, /*require_boundaries=*/true);
    REQUIRE(pair.boundaries.size() == pair.labels.size());
    int prev = 0;
    for (int b : pair.boundaries) {
      CHECK(b > prev);
      prev = b;
    }
    CHECK(prev <= w.grid(pair.grid_id).frames());
  }
  Dataset again = sample_dataset(w, 60, 5);
  for (size_t i = 0; i < data.size(); ++i) {
    CHECK(data[i].grid_id == again[i].grid_id);
    CHECK(data[i].labels == again[i].labels);
    CHECK(data[i].boundaries == again[i].boundaries);
  }
}

TEST_CASE("sample frequencies track the world distribution") {
  WorldSpec spec;
  spec.num_labels = 2;
  spec.t_min = 2;
  spec.t_max = 3;
  spec.num_grids = 3;
  spec.seed = 19;
  World w = build_world(spec);
  Dataset data = sample_dataset(w, 4000, 77);
  auto exact = exact_world_seq_distribution(w);
  std::map<Labels, double> freq;
  for (const auto& p : data) freq[p.labels] += 1.0 / data.size();
  for (const auto& [seq, prob] : exact)
    if (prob > 0.05) CHECK(freq[seq] == doctest::Approx(prob).epsilon(0.15));
}

TEST_CASE("enumerated joint realizes the world distribution") {
  WorldSpec spec;
  spec.num_labels = 2;
  spec.t_min = 2;
  spec.t_max = 3;
  spec.num_grids = 3;
  spec.seed = 11;
  World w = build_world(spec);
  Dataset joint = enumerate_joint(w);
  double total = 0.0;
  std::map<Labels, double> marginal;
  for (const auto& p : joint) {
    CHECK(p.weight > 0.0);
    total += p.weight;
    marginal[p.labels] += p.weight;
  }
  CHECK(total == doctest::Approx(1.0).epsilon(1e-9));
  for (const auto& [seq, prob] : exact_world_seq_distribution(w))
    if (prob > 0)
      CHECK(marginal[seq] == doctest::Approx(prob).epsilon(1e-9));
}

TEST_CASE("count LM with additive smoothing") {
  std::vector<Labels> corpus{{0}, {0}, {1}};
  CtxLM lm = make_elm(corpus, 0, 1e-9, 2);
  auto row = lm.prob_row({});
  // counts: a 2, b 1, EOS 3
  CHECK(row[0] == doctest::Approx(2.0 / 6).epsilon(1e-6));
  CHECK(row[1] == doctest::Approx(1.0 / 6).epsilon(1e-6));
  CHECK(row[2] == doctest::Approx(3.0 / 6).epsilon(1e-6));
  CtxLM smoothed = make_elm(corpus, 0, 1.0, 2);
  auto srow = smoothed.prob_row({});
  CHECK(srow[0] == doctest::Approx(3.0 / 9).epsilon(1e-12));
  CHECK(srow[1] == doctest::Approx(2.0 / 9).epsilon(1e-12));
  // unseen contexts fall back to uniform
  CtxLM trigram = make_elm(corpus, 2, 0.5, 2);
  auto unseen = trigram.prob_row({1, 1});
  for (double p : unseen) CHECK(p == doctest::Approx(1.0 / 3).epsilon(1e-12));
  // order-1 counts after 'a': only EOS observed
  CtxLM bigram = make_elm(corpus, 1, 0.5, 2);
  auto after_a = bigram.prob_row({0});
  CHECK(after_a[2] > after_a[0]);
  CHECK_THROWS_AS(make_elm({}, 1, 0.5, 2), ValidationError);
  CHECK_THROWS_AS(make_elm(corpus, -1, 0.5, 2), ValidationError);
  CHECK_THROWS_AS(make_elm(corpus, 0, 0.0, 2), ValidationError);
}

TEST_CASE("markov worlds respect the template statistics") {
  MarkovWorldSpec spec;
  spec.num_labels = 3;
  spec.num_grids = 12;
  spec.noise = 0.2;
  spec.initial = {1.0, 0.0, 0.0};
  spec.transition = {{0.0, 1.0, 0.0}, {0.0, 0.0, 1.0}, {1.0, 0.0, 0.0}};
  spec.stop_prob = 0.4;
  spec.seed = 4;
  World w = build_markov_world(spec);
  w.validate();
  // every template obeys the cycle a->b->c->a, visible as the most
  // likely collapse of each grid
  for (const auto& e : w.entries) {
    auto dist = brute_force_seq_distribution(e.grid, w.max_len);
    const Labels* best = nullptr;
    double bp = -1.0;
    for (const auto& [seq, p] : dist)
      if (p > bp) {
        bp = p;
        best = &seq;
      }
    REQUIRE(best != nullptr);
    for (size_t i = 1; i < best->size(); ++i)
      CHECK((*best)[i] == ((*best)[i - 1] + 1) % 3);
  }
}

TEST_CASE("cross-domain suite is coherent") {
  CrossDomainRecipe recipe;
  recipe.elm_corpus_size = 60;
  recipe.train_size = 40;
  recipe.tune_size = 10;
  recipe.eval_size = 20;
  CrossDomainSuite suite = cross_domain_suite(recipe, 123);
  suite.source.validate();
  suite.target.validate();
  CHECK(suite.source_train.size() == 40);
  CHECK(suite.target_tune.size() == 10);
  CHECK(suite.target_eval.size() == 20);
  for (const auto& p : suite.source_train)
    validate_pair(p, suite.source, /*require_boundaries=*/true);
  for (const auto& p : suite.target_eval) validate_pair(p, suite.target);
  CHECK(suite.source_elm.num_labels() == recipe.num_labels);
  CHECK(suite.target_elm.context_order() == recipe.elm_order);
  // deterministic
  CrossDomainSuite again = cross_domain_suite(recipe, 123);
  Vocabulary v = suite.source.vocab;
  CHECK(ctxlm_to_json(suite.target_elm, v).dump() ==
        ctxlm_to_json(again.target_elm, v).dump());
  CHECK(world_to_json(suite.source).dump() ==
        world_to_json(again.source).dump());
}
