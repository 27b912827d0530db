#pragma once

#include "ilmlab/ctxlm.hpp"
#include "ilmlab/world.hpp"

namespace ilmlab {

// Per-frame marginal over labels + blank, averaged over all training
// frames (weights respected).
struct FramePrior {
  std::vector<double> probs;  // V+1, blank last

  int num_labels() const { return static_cast<int>(probs.size()) - 1; }
  void validate(double tol = 1e-9) const;
};

FramePrior estimate_frame_prior(const Dataset& dataset, const World& world);

// Order-0 LM from the prior with the blank mass renormalized away. The
// result never models EOS; decoding skips the ILM EOS factor for it.
CtxLM unigram_from_prior(const FramePrior& prior);

// Exact ILM of an enumerable world: P_ILM(seq) = sum_k Pr(X_k) P(seq|X_k).
double exact_ilm_seq(const World& world, const Labels& seq);

// Exact ILM label posterior over V+ for a prefix that is live somewhere
// in the world: a Pr(X_k|prefix)-weighted mixture of per-grid rows.
std::vector<double> exact_ilm_posterior(const World& world,
                                        const Labels& prefix);

// Full exact sequence distribution of the world (enumeration oracle).
std::map<Labels, double> exact_world_seq_distribution(const World& world);

// exp of mean negative log-likelihood per step, EOS counted once per
// sequence when the model has one. log_floor guards evaluation only.
double perplexity(const CtxLM& model, const std::vector<Labels>& eval_set,
                  double log_floor = -30.0);

}  // namespace ilmlab
