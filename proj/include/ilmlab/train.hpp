#pragma once

#include <optional>

#include "ilmlab/losses.hpp"

namespace ilmlab {

enum class Criterion { kLabel, kLabelSmoothed, kLabelMasked, kSeq, kCe };
enum class TrainMode { kSampled, kExactExpectation };

Criterion parse_criterion(const std::string& name);
std::string criterion_name(Criterion c);

struct TrainConfig {
  Criterion criterion = Criterion::kLabel;
  TrainMode mode = TrainMode::kSampled;
  double step_size = 0.5;
  int epochs = 50;
  int batch_size = 8;
  std::uint64_t seed = 1;
  double alpha = 0.5;          // smoothing interpolation
  double p_mask = 0.4;         // masking rate
  MaskPolicy mask_policy = MaskPolicy::uniform();
  int snapshot_period = 0;     // 0 = no snapshots
  // exact_expectation mode keeps stepping until the max gradient-norm
  // per context drops below this, or `epochs` is hit
  double exact_tolerance = 0.0;
};

struct TrainResult {
  CtxLM model;
  std::vector<double> loss_trace;  // one entry per epoch
  std::vector<CtxLM> snapshots;
  bool diverged = false;
  int epochs_run = 0;
};

// Gradient descent with a fixed step size; deterministic given the seed.
// In sampled mode the dataset is reshuffled per epoch into minibatches.
// In exact_expectation mode the batch is the enumerated weighted joint of
// the world, so the optimized objective is the criterion under the true
// distribution (label criterion runs through a per-context aggregation
// of the identical gradient for speed).
TrainResult train(CtxLM student, const Dataset& dataset, const World& world,
                  const TrainConfig& config);

}  // namespace ilmlab
