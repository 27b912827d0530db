#pragma once

#include "ilmlab/ctxlm.hpp"
#include "ilmlab/world.hpp"

namespace ilmlab {

// Random row-stochastic worlds. `concentration` is a softmax temperature
// on Gumbel logits: small values give sharp rows (c <= 0.15 yields a row
// max >= 0.9 in practice), 1.0 is a neutral draw.
struct WorldSpec {
  int num_labels = 2;
  int t_min = 2;
  int t_max = 4;
  int num_grids = 3;
  double concentration = 1.0;
  std::uint64_t seed = 1;
  int max_len = 0;  // 0 = use t_max
};

World build_world(const WorldSpec& spec);

// Worlds whose sequence statistics follow a label Markov chain: each grid
// is built around a template sequence drawn from the chain, with rows
// (1-noise) * alignment one-hot + noise * uniform.
struct MarkovWorldSpec {
  int num_labels = 3;
  int t_min = 3;
  int t_max = 5;
  int num_grids = 8;
  double noise = 0.3;
  std::vector<double> initial;                 // V entries
  std::vector<std::vector<double>> transition;  // V x V
  double stop_prob = 0.35;  // chance of ending the template per step
  std::uint64_t seed = 1;
};

World build_markov_world(const MarkovWorldSpec& spec);

// Draw (grid, labels, boundaries) pairs: grid ~ Pr(X), then a concrete
// alignment from the grid's per-frame rows; boundaries are the last
// frame of each label run.
Dataset sample_dataset(const World& world, int n, std::uint64_t seed);

// Fully enumerated weighted joint support (X_k, a); weights sum to 1.
Dataset enumerate_joint(const World& world);

// Additive-smoothed count LM of order k over V+ (EOS counted at ends).
// num_labels 0 infers the vocabulary size from the corpus.
CtxLM make_elm(const std::vector<Labels>& corpus, int order, double delta,
               int num_labels = 0);

// A source/target pair of Markov worlds sharing a vocabulary, with the
// target transition statistics re-weighted. Knob values live in the
// recipe (JSON-loadable), not in code.
struct CrossDomainRecipe {
  int num_labels = 3;
  int t_min = 3;
  int t_max = 5;
  int num_grids = 8;
  double source_noise = 0.35;
  double target_noise = 0.35;
  double stop_prob = 0.35;
  double skew = 6.0;          // source transition sharpening
  int elm_order = 2;
  double elm_delta = 0.2;
  int elm_corpus_size = 400;
  int train_size = 300;
  int tune_size = 60;
  int eval_size = 150;
};

struct CrossDomainSuite {
  World source;
  World target;
  Dataset source_train;   // ILM training data (source domain)
  Dataset target_tune;    // scale tuning split (target domain)
  Dataset target_eval;    // evaluation split (target domain)
  CtxLM source_elm;
  CtxLM target_elm;
};

CrossDomainSuite cross_domain_suite(const CrossDomainRecipe& recipe,
                                    std::uint64_t seed);

}  // namespace ilmlab
