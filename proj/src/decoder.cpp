#include "ilmlab/decoder.hpp"

#include <algorithm>
#include <cmath>
#include <map>

namespace ilmlab {

DecodeMode parse_decode_mode(const std::string& name) {
  if (name == "viterbi_max") return DecodeMode::kViterbiMax;
  if (name == "full_sum") return DecodeMode::kFullSum;
  throw ValidationError("unknown decode mode: " + name);
}

std::string decode_mode_name(DecodeMode mode) {
  return mode == DecodeMode::kViterbiMax ? "viterbi_max" : "full_sum";
}

std::vector<double> apply_frame_prior(const std::vector<double>& log_row,
                                      const FramePrior& prior, double lambda3,
                                      double log_floor) {
  if (prior.probs.size() != log_row.size())
    throw ValidationError("frame prior width mismatch");
  std::vector<double> out(log_row.size());
  for (size_t y = 0; y < log_row.size(); ++y) {
    double lp_prior = prior.probs[y] > 0.0
                          ? std::max(std::log(prior.probs[y]), log_floor)
                          : log_floor;
    out[y] = (log_row[y] == kLogZero) ? kLogZero
                                      : log_row[y] - lambda3 * lp_prior;
  }
  return out;
}

namespace {

// Scores equal within this are tie-broken structurally (shorter, then
// lexicographic); both search and oracle use the same comparator.
constexpr double kTieEps = 1e-9;

bool better(double score_a, const Labels& a, double score_b, const Labels& b) {
  if (score_a > score_b + kTieEps) return true;
  if (score_b > score_a + kTieEps) return false;
  if (a.size() != b.size()) return a.size() < b.size();
  return a < b;
}

struct Fusion {
  const CtxLM* elm;
  const CtxLM* ilm;
  double l1, l2;
  bool lm_eos;

  double emit(const Labels& prefix, int a) const {
    double s = 0.0;
    if (elm && l1 != 0.0) s += l1 * elm->step_log_prob(prefix, a);
    if (ilm && l2 != 0.0) s -= l2 * ilm->step_log_prob(prefix, a);
    return s;
  }
  // EOS factors are applied per model capability (order-0 priors have
  // no EOS and are skipped)
  double finalize(const Labels& seq) const {
    if (!lm_eos) return 0.0;
    double s = 0.0;
    if (elm && l1 != 0.0 && elm->models_eos())
      s += l1 * elm->step_log_prob(seq, elm->eos_index());
    if (ilm && l2 != 0.0 && ilm->models_eos())
      s -= l2 * ilm->step_log_prob(seq, ilm->eos_index());
    return s;
  }
  double lm_seq(const Labels& seq) const {
    double s = 0.0;
    Labels prefix;
    prefix.reserve(seq.size());
    for (int a : seq) {
      s += emit(prefix, a);
      prefix.push_back(a);
    }
    return s + finalize(seq);
  }
};

struct Hyp {
  double log_b = kLogZero;
  double log_nb = kLogZero;
  double lm = 0.0;  // accumulated fused LM factor over emitted labels
};

std::vector<std::vector<double>> adjusted_rows(const PosteriorGrid& grid,
                                               const FramePrior* prior,
                                               double lambda3) {
  std::vector<std::vector<double>> rows;
  rows.reserve(grid.log_rows.size());
  for (const auto& row : grid.log_rows)
    rows.push_back(prior ? apply_frame_prior(row, *prior, lambda3) : row);
  return rows;
}

}  // namespace

DecodeResult decode_fused(const PosteriorGrid& grid, const CtxLM* elm,
                          const CtxLM* ilm, const FramePrior* prior,
                          const FusionScales& scales) {
  if (scales.beam < 0) throw ValidationError("beam must be >= 1 or unlimited");
  const int V = grid.num_labels;
  const int blank = V;
  if ((elm && elm->num_labels() != V) || (ilm && ilm->num_labels() != V))
    throw ValidationError("LM vocabulary size mismatch");
  const bool sum = scales.mode == DecodeMode::kFullSum;
  auto acc = [sum](double a, double b) {
    return sum ? log_add(a, b) : std::max(a, b);
  };
  const Fusion fusion{elm, ilm, scales.lambda1, scales.lambda2, scales.lm_eos};
  const auto rows = adjusted_rows(grid, prior, scales.lambda3);

  std::map<Labels, Hyp> current;
  current[{}] = Hyp{kLogZero, kLogZero, 0.0};
  current[{}].log_b = 0.0;

  for (const auto& row : rows) {
    std::map<Labels, Hyp> next;
    for (const auto& [prefix, h] : current) {
      double both = acc(h.log_b, h.log_nb);
      if (both == kLogZero) continue;
      // stay on the same prefix: blank, or repeat of the last label
      Hyp& stay = next.try_emplace(prefix).first->second;
      stay.lm = h.lm;
      if (row[blank] != kLogZero)
        stay.log_b = acc(stay.log_b, both + row[blank]);
      if (!prefix.empty() && h.log_nb != kLogZero &&
          row[prefix.back()] != kLogZero)
        stay.log_nb = acc(stay.log_nb, h.log_nb + row[prefix.back()]);
      // emit a new label
      for (int a = 0; a < V; ++a) {
        if (row[a] == kLogZero) continue;
        double from = (!prefix.empty() && a == prefix.back()) ? h.log_b : both;
        if (from == kLogZero) continue;
        Labels ext = prefix;
        ext.push_back(a);
        auto [it, inserted] = next.try_emplace(std::move(ext));
        if (inserted) it->second.lm = h.lm + fusion.emit(prefix, a);
        it->second.log_nb = acc(it->second.log_nb, from + row[a]);
      }
    }
    // beam pruning on acoustic + accumulated LM score
    if (scales.beam != kUnlimitedBeam &&
        next.size() > static_cast<size_t>(scales.beam)) {
      std::vector<std::pair<const Labels*, double>> ranked;
      ranked.reserve(next.size());
      for (const auto& [prefix, h] : next)
        ranked.emplace_back(&prefix, acc(h.log_b, h.log_nb) + h.lm);
      std::sort(ranked.begin(), ranked.end(), [](const auto& x, const auto& y) {
        return better(x.second, *x.first, y.second, *y.first);
      });
      std::map<Labels, Hyp> pruned;
      for (int i = 0; i < scales.beam; ++i)
        pruned.emplace(*ranked[i].first, next.at(*ranked[i].first));
      next = std::move(pruned);
    }
    current = std::move(next);
  }

  std::vector<std::pair<Labels, double>> finals;
  for (const auto& [prefix, h] : current) {
    double acoustic = acc(h.log_b, h.log_nb);
    if (acoustic == kLogZero) continue;
    finals.emplace_back(prefix, acoustic + h.lm + fusion.finalize(prefix));
  }
  if (finals.empty()) throw DecodeFailureError("all hypotheses have zero mass");
  std::sort(finals.begin(), finals.end(), [](const auto& x, const auto& y) {
    return better(x.second, x.first, y.second, y.first);
  });
  size_t n = scales.beam == kUnlimitedBeam
                 ? finals.size()
                 : std::min(finals.size(), static_cast<size_t>(scales.beam));
  DecodeResult res;
  res.best = finals.front().first;
  res.log_score = finals.front().second;
  res.n_best.assign(finals.begin(), finals.begin() + n);
  return res;
}

namespace {
void score_alignments(const std::vector<std::vector<double>>& rows, int V,
                      int t, double acc_score, std::vector<int>& alignment,
                      bool sum, std::map<Labels, double>& groups) {
  if (t == static_cast<int>(rows.size())) {
    Labels seq = collapse(alignment, V);
    auto [it, inserted] = groups.try_emplace(std::move(seq), acc_score);
    if (!inserted)
      it->second =
          sum ? log_add(it->second, acc_score) : std::max(it->second, acc_score);
    return;
  }
  for (int y = 0; y <= V; ++y) {
    if (rows[t][y] == kLogZero) continue;
    alignment.push_back(y);
    score_alignments(rows, V, t + 1, acc_score + rows[t][y], alignment, sum,
                     groups);
    alignment.pop_back();
  }
}
}  // namespace

DecodeResult brute_force_decode(const PosteriorGrid& grid, const CtxLM* elm,
                                const CtxLM* ilm, const FramePrior* prior,
                                const FusionScales& scales,
                                std::uint64_t max_paths) {
  double log_paths = grid.frames() * std::log(grid.num_labels + 1.0);
  if (log_paths > std::log(static_cast<double>(max_paths)))
    throw GuardExceededError("decode oracle enumeration guard exceeded");
  const Fusion fusion{elm, ilm, scales.lambda1, scales.lambda2, scales.lm_eos};
  const auto rows = adjusted_rows(grid, prior, scales.lambda3);
  std::map<Labels, double> groups;
  std::vector<int> alignment;
  score_alignments(rows, grid.num_labels, 0, 0.0, alignment,
                   scales.mode == DecodeMode::kFullSum, groups);
  DecodeResult res;
  bool any = false;
  for (const auto& [seq, acoustic] : groups) {
    if (acoustic == kLogZero) continue;
    double score = acoustic + fusion.lm_seq(seq);
    if (!any || better(score, seq, res.log_score, res.best)) {
      res.best = seq;
      res.log_score = score;
    }
    any = true;
  }
  if (!any) throw DecodeFailureError("no collapsible sequence has mass");
  res.n_best = {{res.best, res.log_score}};
  return res;
}

EditStats label_error_rate(const Labels& hyp, const Labels& ref) {
  const size_t H = hyp.size(), R = ref.size();
  std::vector<int> prev(R + 1), cur(R + 1);
  for (size_t j = 0; j <= R; ++j) prev[j] = static_cast<int>(j);
  for (size_t i = 1; i <= H; ++i) {
    cur[0] = static_cast<int>(i);
    for (size_t j = 1; j <= R; ++j) {
      int sub = prev[j - 1] + (hyp[i - 1] == ref[j - 1] ? 0 : 1);
      cur[j] = std::min({sub, prev[j] + 1, cur[j - 1] + 1});
    }
    prev.swap(cur);
  }
  EditStats stats;
  stats.distance = prev[R];
  stats.rate = static_cast<double>(stats.distance) /
               std::max<size_t>(1, ref.size());
  return stats;
}

}  // namespace ilmlab
