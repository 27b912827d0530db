#pragma once

#include <optional>

#include "ilmlab/ctxlm.hpp"
#include "ilmlab/ilm.hpp"

namespace ilmlab {

enum class DecodeMode { kViterbiMax, kFullSum };

DecodeMode parse_decode_mode(const std::string& name);
std::string decode_mode_name(DecodeMode mode);

inline constexpr int kUnlimitedBeam = 0;

struct FusionScales {
  double lambda1 = 0.0;  // ELM
  double lambda2 = 0.0;  // ILM
  double lambda3 = 0.0;  // frame-level prior
  DecodeMode mode = DecodeMode::kViterbiMax;
  int beam = 16;         // kUnlimitedBeam = exhaustive
  bool lm_eos = true;    // apply EOS-level ELM/ILM factors at finalization
};

struct DecodeResult {
  Labels best;
  double log_score = kLogZero;
  std::vector<std::pair<Labels, double>> n_best;
};

// log q(y) = log P(y) - lambda3 * log P_FP(y), per symbol including
// blank, not renormalized. Prior entries are floored at exp(log_floor).
std::vector<double> apply_frame_prior(const std::vector<double>& log_row,
                                      const FramePrior& prior, double lambda3,
                                      double log_floor = -30.0);

// Time-synchronous prefix search over (prefix, blank/non-blank) score
// states with shallow fusion and ILM correction. Any of elm/ilm/prior
// may be null. Deterministic tie-break: higher score, then shorter
// sequence, then lexicographic (ties within 1e-9).
DecodeResult decode_fused(const PosteriorGrid& grid, const CtxLM* elm,
                          const CtxLM* ilm, const FramePrior* prior,
                          const FusionScales& scales);

// Exhaustive oracle: scores every collapsible label sequence under the
// identical fused objective.
DecodeResult brute_force_decode(const PosteriorGrid& grid, const CtxLM* elm,
                                const CtxLM* ilm, const FramePrior* prior,
                                const FusionScales& scales,
                                std::uint64_t max_paths = 1u << 22);

struct EditStats {
  int distance = 0;
  double rate = 0.0;
};

EditStats label_error_rate(const Labels& hyp, const Labels& ref);

}  // namespace ilmlab
