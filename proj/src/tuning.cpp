#include "ilmlab/tuning.hpp"

#include <algorithm>

namespace ilmlab {

double corpus_ler(const World& world, const Dataset& split, const CtxLM* elm,
                  const CtxLM* ilm, const FramePrior* prior,
                  const FusionScales& scales) {
  if (split.empty()) throw ValidationError("empty decode split");
  long distance = 0;
  long ref_len = 0;
  for (const auto& pair : split) {
    validate_pair(pair, world);
    DecodeResult dec =
        decode_fused(world.grid(pair.grid_id), elm, ilm, prior, scales);
    distance += label_error_rate(dec.best, pair.labels).distance;
    ref_len += static_cast<long>(pair.labels.size());
  }
  return static_cast<double>(distance) / std::max<long>(1, ref_len);
}

ScaleGridResult tune_scales(const World& world, const Dataset& split,
                            const CtxLM* elm, const CtxLM* ilm,
                            const FramePrior* prior,
                            const std::vector<double>& grid1,
                            const std::vector<double>& grid2,
                            const std::vector<double>& grid3,
                            DecodeMode mode, int beam) {
  if (grid1.empty() || grid2.empty() || grid3.empty())
    throw ValidationError("empty scale grid");
  if (split.empty()) throw ValidationError("empty tuning split");
  ScaleGridResult res;
  for (double l1 : grid1) {
    for (double l2 : grid2) {
      for (double l3 : grid3) {
        ScaleGridPoint pt{l1, l2, l3, 1.0, false};
        FusionScales scales;
        scales.lambda1 = l1;
        scales.lambda2 = l2;
        scales.lambda3 = l3;
        scales.mode = mode;
        scales.beam = beam;
        try {
          pt.ler = corpus_ler(world, split, elm, ilm, prior, scales);
        } catch (const DecodeFailureError&) {
          pt.ler = 1.0;
          pt.decode_failed = true;
        }
        res.points.push_back(pt);
      }
    }
  }
  auto selection_better = [](const ScaleGridPoint& a, const ScaleGridPoint& b) {
    if (a.ler != b.ler) return a.ler < b.ler;
    if (a.lambda2 != b.lambda2) return a.lambda2 < b.lambda2;
    if (a.lambda3 != b.lambda3) return a.lambda3 < b.lambda3;
    return a.lambda1 < b.lambda1;
  };
  res.selected = res.points.front();
  for (const auto& pt : res.points)
    if (selection_better(pt, res.selected)) res.selected = pt;
  return res;
}

}  // namespace ilmlab
