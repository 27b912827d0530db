#include "ilmlab/ilm.hpp"

#include <algorithm>
#include <cmath>

namespace ilmlab {

void FramePrior::validate(double tol) const {
  if (probs.size() < 2) throw ValidationError("frame prior too short");
  double s = 0.0;
  for (double p : probs) {
    if (p < 0.0 || std::isnan(p))
      throw ValidationError("frame prior entry out of range");
    s += p;
  }
  if (std::abs(s - 1.0) > tol)
    throw ValidationError("frame prior does not sum to 1");
}

FramePrior estimate_frame_prior(const Dataset& dataset, const World& world) {
  if (dataset.empty()) throw ValidationError("empty dataset");
  const int width = world.vocab.size() + 1;
  std::vector<double> acc(width, 0.0);
  double total_frames = 0.0;
  for (const auto& pair : dataset) {
    validate_pair(pair, world);
    const PosteriorGrid& g = world.grid(pair.grid_id);
    for (const auto& row : g.log_rows)
      for (int y = 0; y < width; ++y)
        acc[y] += pair.weight * std::exp(row[y]);
    total_frames += pair.weight * g.frames();
  }
  if (total_frames <= 0.0) throw ValidationError("dataset has zero weight");
  for (double& p : acc) p /= total_frames;
  FramePrior prior{std::move(acc)};
  prior.validate();
  return prior;
}

CtxLM unigram_from_prior(const FramePrior& prior) {
  prior.validate();
  const int V = prior.num_labels();
  double nonblank = 0.0;
  for (int a = 0; a < V; ++a) nonblank += prior.probs[a];
  if (nonblank <= 0.0)
    throw ValidationError("frame prior has all mass on blank");
  CtxLM lm(V, 0, /*models_eos=*/false);
  std::vector<double> logits(V + 1, 0.0);
  for (int a = 0; a < V; ++a) {
    double p = prior.probs[a] / nonblank;
    logits[a] = (p > 0.0) ? std::log(p) : kLogZero;
  }
  logits[V] = 0.0;  // ignored, models_eos is false
  lm.set_logits(lm.context_key({}), std::move(logits));
  return lm;
}

double exact_ilm_seq(const World& world, const Labels& seq) {
  double p = 0.0;
  for (const auto& e : world.entries) {
    double lp = ctc_log_prob(e.grid, seq);
    if (lp != kLogZero) p += e.prior * std::exp(lp);
  }
  return p;
}

std::vector<double> exact_ilm_posterior(const World& world,
                                        const Labels& prefix) {
  const int V = world.vocab.size();
  std::vector<double> out(V + 1, 0.0);
  double denom = 0.0;
  for (const auto& e : world.entries) {
    if (e.prior == 0.0) continue;
    double plp = prefix_log_prob(e.grid, prefix);
    if (plp == kLogZero) continue;
    double w = e.prior * std::exp(plp);  // prop. to Pr(X_k|prefix)
    const auto row = label_posterior_row(e.grid, prefix);
    for (int a = 0; a <= V; ++a) out[a] += w * row[a];
    denom += w;
  }
  if (denom <= 0.0)
    throw DeadPrefixError("exact_ilm_posterior: prefix dead in every grid");
  for (double& x : out) x /= denom;
  return out;
}

std::map<Labels, double> exact_world_seq_distribution(const World& world) {
  std::map<Labels, double> out;
  for (const auto& e : world.entries) {
    auto dist = brute_force_seq_distribution(e.grid, world.max_len);
    for (const auto& [seq, p] : dist) out[seq] += e.prior * p;
  }
  return out;
}

double perplexity(const CtxLM& model, const std::vector<Labels>& eval_set,
                  double log_floor) {
  if (eval_set.empty()) throw ValidationError("empty evaluation set");
  double nll = 0.0;
  long steps = 0;
  for (const Labels& seq : eval_set) {
    Labels prefix;
    prefix.reserve(seq.size());
    auto step = [&](int sym) {
      // floor rescues -inf as well; pass log_floor = -inf to disable
      double lp = std::max(model.step_log_prob(prefix, sym), log_floor);
      nll -= lp;
      ++steps;
    };
    for (int a : seq) {
      step(a);
      prefix.push_back(a);
    }
    if (model.models_eos()) step(model.eos_index());
  }
  if (std::isinf(nll)) return std::numeric_limits<double>::infinity();
  return std::exp(nll / static_cast<double>(steps));
}

}  // namespace ilmlab
