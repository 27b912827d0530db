#pragma once

#include "ilmlab/decoder.hpp"
#include "ilmlab/world.hpp"

namespace ilmlab {

struct ScaleGridPoint {
  double lambda1 = 0.0;
  double lambda2 = 0.0;
  double lambda3 = 0.0;
  double ler = 1.0;
  bool decode_failed = false;
};

struct ScaleGridResult {
  std::vector<ScaleGridPoint> points;
  ScaleGridPoint selected;
};

// Exhaustive grid evaluation of fusion scales by corpus label error rate
// on the tuning split. Deterministic selection: minimum LER, ties broken
// by smallest lambda2, then lambda3, then lambda1. A decode failure at a
// grid point is recorded as LER 1.0 with a flag.
ScaleGridResult tune_scales(const World& world, const Dataset& split,
                            const CtxLM* elm, const CtxLM* ilm,
                            const FramePrior* prior,
                            const std::vector<double>& grid1,
                            const std::vector<double>& grid2,
                            const std::vector<double>& grid3,
                            DecodeMode mode, int beam);

// Corpus LER of decoding every pair in the split with fixed scales:
// total edit distance over total reference length.
double corpus_ler(const World& world, const Dataset& split, const CtxLM* elm,
                  const CtxLM* ilm, const FramePrior* prior,
                  const FusionScales& scales);

}  // namespace ilmlab
