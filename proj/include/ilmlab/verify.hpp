#pragma once

#include <functional>
#include <ostream>

#include "ilmlab/losses.hpp"
#include "ilmlab/worldgen.hpp"

namespace ilmlab {

// Random row-stochastic grid for oracle checks (neutral Gumbel-softmax
// rows, platform-independent sampling).
PosteriorGrid random_grid(std::mt19937_64& rng, int num_labels, int frames);

// Central finite differences on every logit touched by the analytic
// gradient. Returns the worst relative error.
double gradient_fd_error(
    const CtxLM& student,
    const std::function<LossResult(const CtxLM&)>& loss_fn, double h = 1e-5);

// Direct evaluation of the smoothed label-KD criterion over the support
// of the smoothed empirical distribution (oracle for the beta double
// sum). Unit pair weights only.
double smoothed_label_loss_direct(const CtxLM& student, const Dataset& batch,
                                  TeacherOracle& teacher, double alpha);

// Numbered acceptance checks; each prints one pass/fail line. The last
// argument of the cross-domain check receives a written analysis when
// the directional claim does not hold.
bool check_ctc_oracle(std::ostream& out);
bool check_posterior_rows(std::ostream& out);
bool check_exact_training_optimum(std::ostream& out);
bool check_smoothing_identity(std::ostream& out);
bool check_gradients(std::ostream& out);
bool check_smoothing_reduction(std::ostream& out);
bool check_decoder_oracle(std::ostream& out);
bool check_frame_prior(std::ostream& out);
bool check_cross_domain(std::ostream& out, std::string* analysis);
bool check_reproducibility(std::ostream& out);

// The oracle suite behind `verify`: every check except the soft
// cross-domain analogue. Returns true iff all pass.
bool run_verification(std::ostream& out);

}  // namespace ilmlab
