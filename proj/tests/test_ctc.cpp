#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "ilmlab/ctc.hpp"
#include "ilmlab/rng.hpp"
#include "ilmlab/verify.hpp"

using namespace ilmlab;

namespace {

PosteriorGrid grid2ab() {
  // frame 1: a 0.5, b 0.3, blank 0.2; frame 2: a 0.1, b 0.6, blank 0.3
  PosteriorGrid g;
  g.num_labels = 2;
  g.log_rows = {{std::log(0.5), std::log(0.3), std::log(0.2)},
                {std::log(0.1), std::log(0.6), std::log(0.3)}};
  return g;
}

}  // namespace

TEST_CASE("collapse removes repeats then blanks") {
  CHECK(collapse({0, 0, 2, 1, 1, 2, 1}, 2) == Labels{0, 1, 1});
  CHECK(collapse({2, 2, 2}, 2) == Labels{});
  CHECK(collapse({}, 2) == Labels{});
  CHECK(collapse({0, 2, 0}, 2) == Labels{0, 0});
}

TEST_CASE("alignment feasibility") {
  CHECK(min_alignment_length({}) == 0);
  CHECK(min_alignment_length({0, 1}) == 2);
  CHECK(min_alignment_length({0, 0}) == 3);
  CHECK(min_alignment_length({0, 0, 0}) == 5);
  CHECK(alignment_feasible({0, 1}, 2));
  CHECK_FALSE(alignment_feasible({0, 0}, 2));
}

TEST_CASE("worked grid sequence probabilities") {
  const auto g = grid2ab();
  CHECK(std::exp(ctc_log_prob(g, {0, 1})) == doctest::Approx(0.30).epsilon(1e-12));
  CHECK(std::exp(ctc_log_prob(g, {})) == doctest::Approx(0.06).epsilon(1e-12));
  CHECK(std::exp(ctc_log_prob(g, {0})) == doctest::Approx(0.22).epsilon(1e-12));
  CHECK(std::exp(ctc_log_prob(g, {1})) == doctest::Approx(0.39).epsilon(1e-12));
  CHECK(std::exp(ctc_log_prob(g, {1, 0})) == doctest::Approx(0.03).epsilon(1e-12));
  CHECK(ctc_log_prob(g, {0, 0}) == kLogZero);  // needs 3 frames
}

TEST_CASE("worked grid prefix probabilities") {
  const auto g = grid2ab();
  CHECK(prefix_log_prob(g, {}) == doctest::Approx(0.0));
  CHECK(std::exp(prefix_log_prob(g, {0})) == doctest::Approx(0.52).epsilon(1e-12));
  CHECK(std::exp(prefix_log_prob(g, {1})) == doctest::Approx(0.42).epsilon(1e-12));
  CHECK(std::exp(prefix_log_prob(g, {0, 1})) == doctest::Approx(0.30).epsilon(1e-12));
  CHECK(prefix_log_prob(g, {0, 0}) == kLogZero);
}

TEST_CASE("worked grid posterior rows") {
  const auto g = grid2ab();
  auto r0 = label_posterior_row(g, {});
  REQUIRE(r0.size() == 3);
  CHECK(r0[0] == doctest::Approx(0.52).epsilon(1e-12));
  CHECK(r0[1] == doctest::Approx(0.42).epsilon(1e-12));
  CHECK(r0[2] == doctest::Approx(0.06).epsilon(1e-12));
  auto r1 = label_posterior_row(g, {0});
  CHECK(r1[0] == doctest::Approx(0.0));
  CHECK(r1[1] == doctest::Approx(0.30 / 0.52).epsilon(1e-12));
  CHECK(r1[2] == doctest::Approx(0.22 / 0.52).epsilon(1e-12));
  auto r2 = label_posterior_row(g, {0, 1});
  CHECK(r2[2] == doctest::Approx(1.0));
  CHECK_THROWS_AS(label_posterior_row(g, {0, 0}), DeadPrefixError);
}

TEST_CASE("worked grid full sequence distribution") {
  const auto dist = brute_force_seq_distribution(grid2ab(), 2);
  CHECK(dist.at({}) == doctest::Approx(0.06).epsilon(1e-12));
  CHECK(dist.at({0}) == doctest::Approx(0.22).epsilon(1e-12));
  CHECK(dist.at({1}) == doctest::Approx(0.39).epsilon(1e-12));
  CHECK(dist.at({0, 1}) == doctest::Approx(0.30).epsilon(1e-12));
  CHECK(dist.at({1, 0}) == doctest::Approx(0.03).epsilon(1e-12));
  double total = 0.0;
  for (const auto& [seq, p] : dist) total += p;
  CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("forward matches enumeration on random grids") {
  for (int trial = 0; trial < 20; ++trial) {
    auto rng = make_rng(0xAB12, trial);
    int v = 1 + static_cast<int>(rng() % 3);
    int t = 1 + static_cast<int>(rng() % 5);
    PosteriorGrid g = random_grid(rng, v, t);
    auto dist = brute_force_seq_distribution(g, t);
    double total = 0.0;
    for (const auto& [seq, p] : dist) {
      total += p;
      CHECK(std::abs(ctc_log_prob(g, seq) - std::log(p)) < 1e-9);
    }
    CHECK(total == doctest::Approx(1.0).epsilon(1e-9));
  }
}

TEST_CASE("prefix consistency and monotonicity") {
  for (int trial = 0; trial < 20; ++trial) {
    auto rng = make_rng(0xAB34, trial);
    int v = 2;
    int t = 2 + static_cast<int>(rng() % 4);
    PosteriorGrid g = random_grid(rng, v, t);
    std::vector<Labels> prefixes = {{}, {0}, {1}, {0, 1}, {1, 1}};
    for (const auto& prefix : prefixes) {
      double lp = prefix_log_prob(g, prefix);
      if (lp == kLogZero) continue;
      // P(prefix,...) = sum_a P(prefix.a,...) + P(prefix)
      double acc = std::exp(ctc_log_prob(g, prefix));
      for (int a = 0; a < v; ++a) {
        Labels ext = prefix;
        ext.push_back(a);
        double elp = prefix_log_prob(g, ext);
        CHECK(elp <= lp + 1e-12);  // monotone
        if (elp != kLogZero) acc += std::exp(elp);
      }
      CHECK(acc == doctest::Approx(std::exp(lp)).epsilon(1e-9));
    }
  }
}

TEST_CASE("validation and guard errors") {
  PosteriorGrid g = grid2ab();
  CHECK_THROWS_AS(ctc_log_prob(g, {0, 2}), InputDomainError);
  CHECK_THROWS_AS(ctc_log_prob(g, {-1}), InputDomainError);
  PosteriorGrid bad = g;
  bad.log_rows[0][0] = std::log(0.9);  // row no longer sums to 1
  CHECK_THROWS_AS(bad.validate(), ValidationError);
  PosteriorGrid empty;
  empty.num_labels = 2;
  CHECK_THROWS_AS(empty.validate(), ValidationError);
  CHECK_THROWS_AS(brute_force_seq_distribution(g, 2, /*max_paths=*/2),
                  GuardExceededError);
}
