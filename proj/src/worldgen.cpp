#include "ilmlab/worldgen.hpp"

#include <algorithm>
#include <cmath>

#include "ilmlab/rng.hpp"

namespace ilmlab {

namespace {

Vocabulary default_vocab(int num_labels) {
  Vocabulary v;
  for (int i = 0; i < num_labels; ++i)
    v.labels.push_back("l" + std::to_string(i));
  return v;
}

double gumbel(std::mt19937_64& rng) {
  double u = uniform01(rng);
  // clamp away from 0/1
  u = std::min(std::max(u, 1e-300), 1.0 - 1e-16);
  return -std::log(-std::log(u));
}

std::vector<double> normalized_exp_draws(std::mt19937_64& rng, int n) {
  std::vector<double> w(n);
  double total = 0.0;
  for (double& x : w) {
    x = -std::log(std::max(uniform01(rng), 1e-300));
    total += x;
  }
  for (double& x : w) x /= total;
  return w;
}

int sample_index(std::mt19937_64& rng, const std::vector<double>& probs) {
  double u = uniform01(rng);
  double acc = 0.0;
  for (size_t i = 0; i < probs.size(); ++i) {
    acc += probs[i];
    if (u < acc) return static_cast<int>(i);
  }
  return static_cast<int>(probs.size()) - 1;
}

std::vector<double> normalize(std::vector<double> v) {
  double s = 0.0;
  for (double x : v) s += x;
  if (s <= 0.0) throw ValidationError("cannot normalize zero vector");
  for (double& x : v) x /= s;
  return v;
}

}  // namespace

World build_world(const WorldSpec& spec) {
  if (spec.num_labels < 1 || spec.num_grids < 1 || spec.t_min < 1 ||
      spec.t_max < spec.t_min || spec.concentration <= 0.0)
    throw ValidationError("invalid world spec");
  auto rng = make_rng(spec.seed, 0x776f726cull);
  World world;
  world.vocab = default_vocab(spec.num_labels);
  world.max_len = spec.max_len > 0 ? spec.max_len : spec.t_max;
  const int width = spec.num_labels + 1;
  for (int k = 0; k < spec.num_grids; ++k) {
    PosteriorGrid grid;
    grid.num_labels = spec.num_labels;
    int T = uniform_int(rng, spec.t_min, spec.t_max);
    for (int t = 0; t < T; ++t) {
      std::vector<double> logits(width);
      for (double& x : logits) x = gumbel(rng) / spec.concentration;
      grid.log_rows.push_back(log_softmax(logits));
    }
    world.entries.push_back({std::move(grid), 0.0});
  }
  auto priors = normalized_exp_draws(rng, spec.num_grids);
  for (int k = 0; k < spec.num_grids; ++k) world.entries[k].prior = priors[k];
  world.validate();
  return world;
}

World build_markov_world(const MarkovWorldSpec& spec) {
  if (spec.num_labels < 1 || spec.num_grids < 1 || spec.t_min < 1 ||
      spec.t_max < spec.t_min || spec.noise < 0.0 || spec.noise > 1.0)
    throw ValidationError("invalid markov world spec");
  const int V = spec.num_labels;
  std::vector<double> initial =
      spec.initial.empty() ? std::vector<double>(V, 1.0 / V)
                           : normalize(spec.initial);
  std::vector<std::vector<double>> transition = spec.transition;
  if (transition.empty())
    transition.assign(V, std::vector<double>(V, 1.0 / V));
  for (auto& row : transition) row = normalize(row);

  auto rng = make_rng(spec.seed, 0x6d6b7277ull);
  World world;
  world.vocab = default_vocab(V);
  world.max_len = spec.t_max;
  const int blank = V;
  for (int k = 0; k < spec.num_grids; ++k) {
    int T = uniform_int(rng, spec.t_min, spec.t_max);
    // template sequence from the chain, kept alignment-feasible for T
    Labels tmpl;
    tmpl.push_back(sample_index(rng, initial));
    while (uniform01(rng) >= spec.stop_prob) {
      int next = sample_index(rng, transition[tmpl.back()]);
      Labels cand = tmpl;
      cand.push_back(next);
      if (!alignment_feasible(cand, T)) break;
      tmpl = std::move(cand);
    }
    // one frame per label, forced blank between repeats, blanks padded
    // at the end
    std::vector<int> alignment;
    for (size_t s = 0; s < tmpl.size(); ++s) {
      if (s > 0 && tmpl[s] == tmpl[s - 1]) alignment.push_back(blank);
      alignment.push_back(tmpl[s]);
    }
    while (static_cast<int>(alignment.size()) < T) alignment.push_back(blank);

    PosteriorGrid grid;
    grid.num_labels = V;
    for (int t = 0; t < T; ++t) {
      std::vector<double> row(V + 1, spec.noise / (V + 1));
      row[alignment[t]] += 1.0 - spec.noise;
      for (double& p : row) p = std::log(p);
      grid.log_rows.push_back(std::move(row));
    }
    world.entries.push_back({std::move(grid), 0.0});
  }
  auto priors = normalized_exp_draws(rng, spec.num_grids);
  for (int k = 0; k < spec.num_grids; ++k) world.entries[k].prior = priors[k];
  world.validate();
  return world;
}

Dataset sample_dataset(const World& world, int n, std::uint64_t seed) {
  if (n < 1) throw ValidationError("sample count must be >= 1");
  world.validate();
  auto rng = make_rng(seed, 0x64617461ull);
  std::vector<double> priors;
  for (const auto& e : world.entries) priors.push_back(e.prior);
  Dataset out;
  out.reserve(n);
  for (int i = 0; i < n; ++i) {
    TrainingPair pair;
    pair.grid_id = sample_index(rng, priors);
    const PosteriorGrid& grid = world.grid(pair.grid_id);
    const int blank = grid.num_labels;
    int prev = blank;
    for (int t = 0; t < grid.frames(); ++t) {
      std::vector<double> probs(grid.columns());
      for (int y = 0; y < grid.columns(); ++y)
        probs[y] = std::exp(grid.log_rows[t][y]);
      int y = sample_index(rng, probs);
      if (y != blank) {
        if (y != prev) {
          pair.labels.push_back(y);
          pair.boundaries.push_back(t + 1);
        } else {
          pair.boundaries.back() = t + 1;  // run continues
        }
      }
      prev = y;
    }
    pair.weight = 1.0;
    out.push_back(std::move(pair));
  }
  return out;
}

Dataset enumerate_joint(const World& world) {
  world.validate();
  Dataset out;
  for (int k = 0; k < world.num_grids(); ++k) {
    const auto& entry = world.entries[k];
    if (entry.prior == 0.0) continue;
    auto dist = brute_force_seq_distribution(entry.grid, world.max_len);
    for (const auto& [seq, p] : dist) {
      if (p <= 0.0) continue;
      TrainingPair pair;
      pair.grid_id = k;
      pair.labels = seq;
      pair.weight = entry.prior * p;
      out.push_back(std::move(pair));
    }
  }
  return out;
}

CtxLM make_elm(const std::vector<Labels>& corpus, int order, double delta,
               int num_labels) {
  if (corpus.empty()) throw ValidationError("empty ELM corpus");
  if (delta <= 0.0) throw ValidationError("additive smoothing needs delta > 0");
  if (order < 0) throw ValidationError("ELM order must be >= 0");
  int V = num_labels;
  if (V == 0)
    for (const auto& seq : corpus)
      for (int a : seq) V = std::max(V, a + 1);
  if (V == 0) throw ValidationError("ELM corpus has no labels");
  for (const auto& seq : corpus) check_labels(seq, V);
  CtxLM lm(V, order);
  std::map<ContextKey, std::vector<double>> counts;
  for (const auto& seq : corpus) {
    Labels prefix;
    prefix.reserve(seq.size());
    auto bump = [&](int sym) {
      auto& c = counts.try_emplace(lm.context_key(prefix),
                                   std::vector<double>(V + 1, 0.0))
                    .first->second;
      c[sym] += 1.0;
    };
    for (int a : seq) {
      bump(a);
      prefix.push_back(a);
    }
    bump(lm.eos_index());
  }
  // softmax(log(c + delta)) is exactly the additive-smoothed conditional;
  // unseen contexts fall back to the lazy uniform row
  for (auto& [key, c] : counts) {
    std::vector<double> logits(V + 1);
    for (int a = 0; a <= V; ++a) logits[a] = std::log(c[a] + delta);
    lm.set_logits(key, std::move(logits));
  }
  return lm;
}

CrossDomainSuite cross_domain_suite(const CrossDomainRecipe& recipe,
                                    std::uint64_t seed) {
  const int V = recipe.num_labels;
  if (V < 2) throw ValidationError("cross-domain recipe needs >= 2 labels");
  // source prefers the forward cycle i -> i+1, target the backward one
  auto cycle = [&](int shift) {
    std::vector<std::vector<double>> m(V, std::vector<double>(V, 1.0));
    for (int i = 0; i < V; ++i) m[i][(i + shift + V) % V] += recipe.skew;
    return m;
  };
  MarkovWorldSpec src;
  src.num_labels = V;
  src.t_min = recipe.t_min;
  src.t_max = recipe.t_max;
  src.num_grids = recipe.num_grids;
  src.noise = recipe.source_noise;
  src.stop_prob = recipe.stop_prob;
  src.transition = cycle(+1);
  src.seed = derive_seed(seed, 1);
  MarkovWorldSpec tgt = src;
  tgt.noise = recipe.target_noise;
  tgt.transition = cycle(-1);
  tgt.seed = derive_seed(seed, 2);

  CrossDomainSuite suite;
  suite.source = build_markov_world(src);
  suite.target = build_markov_world(tgt);
  suite.source_train =
      sample_dataset(suite.source, recipe.train_size, derive_seed(seed, 3));
  suite.target_tune =
      sample_dataset(suite.target, recipe.tune_size, derive_seed(seed, 4));
  suite.target_eval =
      sample_dataset(suite.target, recipe.eval_size, derive_seed(seed, 5));

  auto corpus_of = [&](const World& world, std::uint64_t s) {
    std::vector<Labels> corpus;
    for (const auto& pair :
         sample_dataset(world, recipe.elm_corpus_size, s))
      corpus.push_back(pair.labels);
    return corpus;
  };
  suite.source_elm = make_elm(corpus_of(suite.source, derive_seed(seed, 6)),
                              recipe.elm_order, recipe.elm_delta, V);
  suite.target_elm = make_elm(corpus_of(suite.target, derive_seed(seed, 7)),
                              recipe.elm_order, recipe.elm_delta, V);
  return suite;
}

}  // namespace ilmlab
