#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "ilmlab/losses.hpp"
#include "ilmlab/rng.hpp"
#include "ilmlab/verify.hpp"

using namespace ilmlab;

namespace {

PosteriorGrid grid2ab() {
  PosteriorGrid g;
  g.num_labels = 2;
  g.log_rows = {{std::log(0.5), std::log(0.3), std::log(0.2)},
                {std::log(0.1), std::log(0.6), std::log(0.3)}};
  return g;
}

World one_grid_world() {
  World w;
  w.vocab.labels = {"a", "b"};
  w.entries.push_back({grid2ab(), 1.0});
  w.max_len = 2;
  return w;
}

// Random logits on every context up to depth 2 over {a,b}.
CtxLM random_student(int num_labels, int context_order, std::uint64_t seed) {
  CtxLM lm(num_labels, context_order);
  auto rng = make_rng(0xfeed, seed);
  std::vector<Labels> prefixes{{}};
  for (int a = 0; a < num_labels; ++a) {
    prefixes.push_back({a});
    for (int b = 0; b < num_labels; ++b) prefixes.push_back({a, b});
  }
  for (const auto& p : prefixes) {
    std::vector<double> z;
    for (int i = 0; i <= num_labels; ++i)
      z.push_back(2.0 * uniform01(rng) - 1.0);
    lm.set_logits(lm.context_key(p), z);
  }
  return lm;
}

}  // namespace

TEST_CASE("label KD on the worked grid, uniform student") {
  World world = one_grid_world();
  TeacherOracle teacher(world);
  CtxLM student(2, kFullContext);
  Dataset batch{{0, {0, 1}, {}, 1.0}};
  LossResult res = kd_label_loss(student, batch, teacher);
  CHECK(res.loss == doctest::Approx(1.7413744918480742).epsilon(1e-12));
  // order FULL: three contexts [], [a], [a,b]
  REQUIRE(res.grad.size() == 3);
  const auto& g0 = res.grad.at(ContextKey{});
  CHECK(g0[0] == doctest::Approx(1.0 / 3 - 0.52).epsilon(1e-12));
  CHECK(g0[1] == doctest::Approx(1.0 / 3 - 0.42).epsilon(1e-12));
  CHECK(g0[2] == doctest::Approx(1.0 / 3 - 0.06).epsilon(1e-12));
  // order-0 student accumulates everything on one context
  CtxLM flat(2, 0);
  LossResult fres = kd_label_loss(flat, batch, teacher);
  REQUIRE(fres.grad.size() == 1);
  const auto& g = fres.grad.at(ContextKey{});
  CHECK(g[0] == doctest::Approx(0.48).epsilon(1e-10));
  CHECK(g[1] == doctest::Approx(0.003076923076923088).epsilon(1e-9));
  CHECK(g[2] == doctest::Approx(-0.4830769230769232).epsilon(1e-10));
}

TEST_CASE("loss vanishes when the student equals the teacher") {
  World world = one_grid_world();
  TeacherOracle teacher(world);
  CtxLM student(2, kFullContext);
  Dataset batch{{0, {0, 1}, {}, 1.0}};
  for (const Labels& prefix : {Labels{}, Labels{0}, Labels{0, 1}}) {
    auto row = label_posterior_row(world.grid(0), prefix);
    std::vector<double> logits;
    for (double p : row) logits.push_back(p > 0 ? std::log(p) : -300.0);
    student.set_logits(student.context_key(prefix), logits);
  }
  LossResult res = kd_label_loss(student, batch, teacher);
  CHECK(res.loss == doctest::Approx(0.0).epsilon(1e-9));
  for (const auto& [key, g] : res.grad)
    for (double x : g) CHECK(std::abs(x) < 1e-9);
}

TEST_CASE("KL non-negativity on random students") {
  World world = one_grid_world();
  TeacherOracle teacher(world);
  Dataset batch{{0, {0, 1}, {}, 1.0}, {0, {1}, {}, 1.0}};
  for (int trial = 0; trial < 10; ++trial) {
    auto rng = make_rng(0x5eed, trial);
    CtxLM student(2, 1);
    for (const Labels& p : {Labels{}, Labels{0}, Labels{1}}) {
      std::vector<double> z;
      for (int i = 0; i < 3; ++i) z.push_back(2.0 * uniform01(rng) - 1.0);
      student.set_logits(student.context_key(p), z);
    }
    CHECK(kd_label_loss(student, batch, teacher).loss >= -1e-12);
    CHECK(kd_label_loss_smoothed(student, batch, teacher, 0.3).loss >= -1e-12);
  }
}

TEST_CASE("dead training prefix is an error for the plain criterion") {
  World world = one_grid_world();
  TeacherOracle teacher(world);
  CtxLM student(2, 0);
  Dataset batch{{0, {0, 0}, {}, 1.0}};  // needs 3 frames, grid has 2
  CHECK_THROWS_AS(kd_label_loss(student, batch, teacher), DeadPrefixError);
}

TEST_CASE("beta weights") {
  CHECK(beta_weight(0, 0, 4, 0.5) == doctest::Approx(0.5 + 0.125));
  CHECK(beta_weight(0, 1, 4, 0.5) == doctest::Approx(0.125));
  CHECK(beta_weight(0, 1, 4, 1.0) == doctest::Approx(0.0));
  CHECK(beta_weight(2, 2, 4, 0.0) == doctest::Approx(0.25));
  double row = 0.0;
  for (int np = 0; np < 4; ++np) row += beta_weight(1, np, 4, 0.3);
  CHECK(row == doctest::Approx(1.0));
}

TEST_CASE("alpha=1 smoothing reduces to the plain criterion") {
  World world = one_grid_world();
  TeacherOracle teacher(world);
  CtxLM student = random_student(2, 1, 7);
  Dataset batch{{0, {0, 1}, {}, 1.0}, {0, {1}, {}, 1.0}, {0, {}, {}, 1.0}};
  LossResult plain = kd_label_loss(student, batch, teacher);
  LossResult smoothed = kd_label_loss_smoothed(student, batch, teacher, 1.0);
  CHECK(smoothed.loss == doctest::Approx(plain.loss).epsilon(1e-12));
}

TEST_CASE("smoothed criterion matches its direct-sum oracle") {
  World world = one_grid_world();
  TeacherOracle teacher(world);
  CtxLM student = random_student(2, kFullContext, 11);
  Dataset batch{{0, {0, 1}, {}, 1.0}, {0, {1}, {}, 1.0}};
  for (double alpha : {0.0, 0.3, 0.5, 1.0}) {
    double direct = smoothed_label_loss_direct(student, batch, teacher, alpha);
    double impl = kd_label_loss_smoothed(student, batch, teacher, alpha).loss;
    CHECK(impl == doctest::Approx(direct).epsilon(1e-10));
  }
  CHECK_THROWS_AS(kd_label_loss_smoothed(student, batch, teacher, 1.5),
                  ValidationError);
}

TEST_CASE("masked criterion edge rates") {
  World world = one_grid_world();
  TeacherOracle teacher(world);
  CtxLM student(2, 0);
  Dataset batch{{0, {0, 1}, {1, 2}, 1.0}};
  auto rng = make_rng(9, 9);
  LossResult none = kd_label_loss_masked(student, batch, teacher, 0.0,
                                         MaskPolicy::uniform(), rng);
  CHECK(none.loss == doctest::Approx(0.0));
  CHECK(none.grad.empty());
  LossResult all = kd_label_loss_masked(student, batch, teacher, 1.0,
                                        MaskPolicy::uniform(), rng);
  CHECK(all.loss > 0.0);
  // boundaries are mandatory
  Dataset no_bounds{{0, {0, 1}, {}, 1.0}};
  CHECK_THROWS_AS(kd_label_loss_masked(student, no_bounds, teacher, 0.5,
                                       MaskPolicy::uniform(), rng),
                  ValidationError);
}

TEST_CASE("masked grid rewrites exactly the masked spans") {
  PosteriorGrid g = grid2ab();
  TrainingPair pair{0, {0, 1}, {1, 2}, 1.0};
  PosteriorGrid m = masked_grid(g, pair, {1}, MaskPolicy::blank());
  CHECK(m.log_rows[0][2] == doctest::Approx(0.0));  // blank prob 1
  CHECK(m.log_rows[1] == g.log_rows[1]);            // untouched
  PosteriorGrid u = masked_grid(g, pair, {2}, MaskPolicy::uniform());
  CHECK(u.log_rows[0] == g.log_rows[0]);
  CHECK(std::exp(u.log_rows[1][0]) == doctest::Approx(1.0 / 3));
  FramePrior bad{{0.5, 0.5}};  // one label only, grid has two
  CHECK_THROWS_AS(masked_grid(g, pair, {1}, MaskPolicy::from_prior(bad)),
                  ValidationError);
}

TEST_CASE("sequence KD on the worked grid") {
  World world = one_grid_world();
  TeacherOracle teacher(world);
  CtxLM student(2, 0);
  Dataset batch{{0, {0, 1}, {}, 1.0}};
  LossResult res = kd_seq_loss(student, batch, teacher, 1.0);
  // P(ab) * (log P(ab) - 3 log(1/3))
  CHECK(res.loss == doctest::Approx(0.6275592185035179).epsilon(1e-12));
}

TEST_CASE("cross entropy on transcriptions") {
  CtxLM student(2, 0);
  Dataset batch{{0, {0, 1}, {}, 1.0}};
  LossResult res = ce_transcription_loss(student, batch);
  CHECK(res.loss == doctest::Approx(3.295836866004329).epsilon(1e-12));
  const auto& g = res.grad.at(ContextKey{});
  // 3 positions of uniform q minus one-hots on a, b, EOS
  CHECK(g[0] == doctest::Approx(0.0));
  CHECK(g[1] == doctest::Approx(0.0));
  CHECK(g[2] == doctest::Approx(0.0));
}

TEST_CASE("analytic gradients match finite differences") {
  World world = one_grid_world();
  TeacherOracle teacher(world);
  Dataset batch{{0, {0, 1}, {1, 2}, 1.0}, {0, {1}, {2}, 2.0}};
  CtxLM student = random_student(2, 1, 3);
  auto check_fd = [&](const std::function<LossResult(const CtxLM&)>& fn) {
    CHECK(gradient_fd_error(student, fn) < 1e-5);
  };
  check_fd([&](const CtxLM& s) { return kd_label_loss(s, batch, teacher); });
  check_fd([&](const CtxLM& s) {
    return kd_label_loss_smoothed(s, batch, teacher, 0.4);
  });
  check_fd([&](const CtxLM& s) {
    auto rng = make_rng(77, 1);
    return kd_label_loss_masked(s, batch, teacher, 0.6,
                                MaskPolicy::uniform(), rng);
  });
  check_fd([&](const CtxLM& s) { return kd_seq_loss(s, batch, teacher, 0.5); });
  check_fd([&](const CtxLM& s) { return ce_transcription_loss(s, batch); });
}

TEST_CASE("empty or zero-weight batches are rejected") {
  World world = one_grid_world();
  TeacherOracle teacher(world);
  CtxLM student(2, 0);
  Dataset empty;
  CHECK_THROWS_AS(kd_label_loss(student, empty, teacher), ValidationError);
  Dataset zero{{0, {0}, {}, 0.0}};
  CHECK_THROWS_AS(kd_label_loss(student, zero, teacher), ValidationError);
}
