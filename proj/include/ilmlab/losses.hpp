#pragma once

#include <random>

#include "ilmlab/ctxlm.hpp"
#include "ilmlab/ilm.hpp"
#include "ilmlab/world.hpp"

namespace ilmlab {

struct LossResult {
  double loss = 0.0;
  GradTable grad;
};

// How masked label spans are rewritten before querying the teacher.
struct MaskPolicy {
  enum Kind { kUniform, kBlank, kPrior } kind = kUniform;
  FramePrior prior;  // used by kPrior only

  static MaskPolicy uniform() { return {kUniform, {}}; }
  static MaskPolicy blank() { return {kBlank, {}}; }
  static MaskPolicy from_prior(FramePrior p) { return {kPrior, std::move(p)}; }
};

// In-batch smoothing weights: beta(n,n') = delta(n,n') * alpha + (1-alpha)/N.
double beta_weight(int n, int n_prime, int batch_size, double alpha);

// Per-position KL from the CTC teacher to the student, teacher rows via
// prefix-probability ratios. Gradients are analytic softmax gradients,
// accumulated per context key. Pair weights are normalized so that a
// unit-weight batch of size N carries the usual 1/N factor and an
// enumerated joint (weights summing to 1) realizes the exact expectation.
LossResult kd_label_loss(const CtxLM& student, const Dataset& batch,
                         TeacherOracle& teacher);

// Smoothed variant: every label sequence is scored against every grid in
// the batch with beta weights (O(B^2) teacher walks). Dead cross-prefixes
// contribute zero from the first dead position onward.
LossResult kd_label_loss_smoothed(const CtxLM& student, const Dataset& batch,
                                  TeacherOracle& teacher, double alpha);

// Masked variant: label positions are dropped with probability p_mask;
// teacher rows come from a grid whose masked spans were rewritten per
// `policy`. Requires boundaries on every pair.
LossResult kd_label_loss_masked(const CtxLM& student, const Dataset& batch,
                                TeacherOracle& teacher, double p_mask,
                                const MaskPolicy& policy, std::mt19937_64& rng);

// Sequence-level KD with the same beta smoothing.
LossResult kd_seq_loss(const CtxLM& student, const Dataset& batch,
                       TeacherOracle& teacher, double alpha);

// Plain cross entropy on the transcriptions (transcription-LM baseline).
LossResult ce_transcription_loss(const CtxLM& student, const Dataset& batch);

// Grid with the frame spans of the given label positions rewritten.
PosteriorGrid masked_grid(const PosteriorGrid& grid, const TrainingPair& pair,
                          const std::vector<int>& masked_positions,
                          const MaskPolicy& policy);

}  // namespace ilmlab
