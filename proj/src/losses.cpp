#include "ilmlab/losses.hpp"

#include <cmath>

namespace ilmlab {

namespace {

double normalized_weights(const Dataset& batch, std::vector<double>* out) {
  if (batch.empty()) throw ValidationError("empty batch");
  double total = 0.0;
  for (const auto& p : batch) {
    if (p.weight < 0.0) throw ValidationError("negative pair weight");
    total += p.weight;
  }
  if (total <= 0.0) throw ValidationError("batch has zero total weight");
  out->clear();
  out->reserve(batch.size());
  for (const auto& p : batch) out->push_back(p.weight / total);
  return total;
}

// Accumulate w * KL(p || q_theta(.|ctx)) and its logit gradient.
void add_kl_term(const CtxLM& student, const Labels& prefix,
                 const std::vector<double>& teacher_row, double w,
                 LossResult* res) {
  if (w == 0.0) return;
  const auto lq = student.log_prob_row(prefix);
  const ContextKey key = student.context_key(prefix);
  auto& g = res->grad
                .try_emplace(key, std::vector<double>(teacher_row.size(), 0.0))
                .first->second;
  for (size_t a = 0; a < teacher_row.size(); ++a) {
    double p = teacher_row[a];
    double q = (lq[a] == kLogZero) ? 0.0 : std::exp(lq[a]);
    if (p > 0.0) res->loss += w * p * (std::log(p) - lq[a]);
    g[a] += w * (q - p);
  }
}

// Per-position KD walk of `labels` against grid `grid_id`, all positions
// weighted by w. Stops silently at a dead cross-prefix when tolerate_dead.
void kd_walk(const CtxLM& student, TeacherOracle& teacher, int grid_id,
             const Labels& labels, double w, bool tolerate_dead,
             LossResult* res) {
  if (w == 0.0) return;
  Labels prefix;
  prefix.reserve(labels.size());
  for (size_t s = 0; s <= labels.size(); ++s) {
    if (teacher.prefix_lp(grid_id, prefix) == kLogZero) {
      if (tolerate_dead) return;  // zero mass from here on
      throw DeadPrefixError("dead prefix at position " + std::to_string(s) +
                            " on grid " + std::to_string(grid_id));
    }
    add_kl_term(student, prefix, teacher.posterior_row(grid_id, prefix), w,
                res);
    if (s < labels.size()) prefix.push_back(labels[s]);
  }
}

}  // namespace

double beta_weight(int n, int n_prime, int batch_size, double alpha) {
  return (n == n_prime ? alpha : 0.0) + (1.0 - alpha) / batch_size;
}

LossResult kd_label_loss(const CtxLM& student, const Dataset& batch,
                         TeacherOracle& teacher) {
  std::vector<double> w;
  normalized_weights(batch, &w);
  LossResult res;
  for (size_t n = 0; n < batch.size(); ++n) {
    validate_pair(batch[n], teacher.world());
    kd_walk(student, teacher, batch[n].grid_id, batch[n].labels, w[n],
            /*tolerate_dead=*/false, &res);
  }
  return res;
}

LossResult kd_label_loss_smoothed(const CtxLM& student, const Dataset& batch,
                                  TeacherOracle& teacher, double alpha) {
  if (alpha < 0.0 || alpha > 1.0)
    throw ValidationError("alpha must be in [0,1]");
  std::vector<double> w;
  normalized_weights(batch, &w);
  LossResult res;
  for (size_t n = 0; n < batch.size(); ++n)
    validate_pair(batch[n], teacher.world());
  for (size_t n = 0; n < batch.size(); ++n) {
    for (size_t np = 0; np < batch.size(); ++np) {
      // weighted generalization of beta(n,n')/N; reduces to it for
      // unit weights
      double coeff = (n == np ? alpha * w[n] : 0.0) + (1.0 - alpha) * w[n] * w[np];
      kd_walk(student, teacher, batch[np].grid_id, batch[n].labels, coeff,
              /*tolerate_dead=*/true, &res);
    }
  }
  return res;
}

PosteriorGrid masked_grid(const PosteriorGrid& grid, const TrainingPair& pair,
                          const std::vector<int>& masked_positions,
                          const MaskPolicy& policy) {
  const int V = grid.num_labels;
  std::vector<double> repl(V + 1, kLogZero);
  switch (policy.kind) {
    case MaskPolicy::kUniform:
      repl.assign(V + 1, -std::log(V + 1.0));
      break;
    case MaskPolicy::kBlank:
      repl[V] = 0.0;
      break;
    case MaskPolicy::kPrior:
      policy.prior.validate();
      if (policy.prior.num_labels() != V)
        throw ValidationError("mask prior vocabulary mismatch");
      for (int y = 0; y <= V; ++y)
        repl[y] = policy.prior.probs[y] > 0.0 ? std::log(policy.prior.probs[y])
                                              : kLogZero;
      break;
  }
  PosteriorGrid out = grid;
  for (int s : masked_positions) {
    // span (t_{s-1}, t_s], 1-based frames
    int lo = (s == 1) ? 0 : pair.boundaries[s - 2];
    int hi = pair.boundaries[s - 1];
    for (int t = lo; t < hi; ++t) out.log_rows[t] = repl;
  }
  return out;
}

LossResult kd_label_loss_masked(const CtxLM& student, const Dataset& batch,
                                TeacherOracle& teacher, double p_mask,
                                const MaskPolicy& policy,
                                std::mt19937_64& rng) {
  if (p_mask < 0.0 || p_mask > 1.0)
    throw ValidationError("p_mask must be in [0,1]");
  std::vector<double> w;
  normalized_weights(batch, &w);
  auto uniform01 = [&rng]() { return (rng() >> 11) * 0x1.0p-53; };
  LossResult res;
  for (size_t n = 0; n < batch.size(); ++n) {
    const TrainingPair& pair = batch[n];
    validate_pair(pair, teacher.world(), /*require_boundaries=*/true);
    const int S = static_cast<int>(pair.labels.size());
    std::vector<int> masked;
    for (int s = 1; s <= S; ++s)
      if (uniform01() < p_mask) masked.push_back(s);
    if (masked.empty()) continue;
    PosteriorGrid mg =
        masked_grid(teacher.world().grid(pair.grid_id), pair, masked, policy);
    for (int s : masked) {
      Labels prefix(pair.labels.begin(), pair.labels.begin() + (s - 1));
      if (prefix_log_prob(mg, prefix) == kLogZero)
        throw DeadPrefixError("masking killed prefix at position " +
                              std::to_string(s));
      add_kl_term(student, prefix, label_posterior_row(mg, prefix), w[n], &res);
    }
  }
  return res;
}

LossResult kd_seq_loss(const CtxLM& student, const Dataset& batch,
                       TeacherOracle& teacher, double alpha) {
  if (alpha < 0.0 || alpha > 1.0)
    throw ValidationError("alpha must be in [0,1]");
  std::vector<double> w;
  normalized_weights(batch, &w);
  for (const auto& p : batch) validate_pair(p, teacher.world());
  LossResult res;
  for (size_t n = 0; n < batch.size(); ++n) {
    const Labels& seq = batch[n].labels;
    double student_lp = student.seq_log_prob(seq);
    for (size_t np = 0; np < batch.size(); ++np) {
      double coeff = (n == np ? alpha * w[n] : 0.0) + (1.0 - alpha) * w[n] * w[np];
      if (coeff == 0.0) continue;
      double t_lp = teacher.seq_lp(batch[np].grid_id, seq);
      if (t_lp == kLogZero) continue;  // P log P -> 0
      double p = std::exp(t_lp);
      res.loss += coeff * p * (t_lp - student_lp);
      // d/dz [-coeff * p * log q(seq)] along the student's step rows
      double scale = coeff * p;
      Labels prefix;
      prefix.reserve(seq.size());
      auto add_step = [&](int sym) {
        const auto q = student.prob_row(prefix);
        const ContextKey key = student.context_key(prefix);
        auto& g =
            res.grad.try_emplace(key, std::vector<double>(q.size(), 0.0))
                .first->second;
        for (size_t a = 0; a < q.size(); ++a)
          g[a] += scale * (q[a] - (static_cast<int>(a) == sym ? 1.0 : 0.0));
      };
      for (int a : seq) {
        add_step(a);
        prefix.push_back(a);
      }
      if (student.models_eos()) add_step(student.eos_index());
    }
  }
  return res;
}

LossResult ce_transcription_loss(const CtxLM& student, const Dataset& batch) {
  std::vector<double> w;
  normalized_weights(batch, &w);
  LossResult res;
  for (size_t n = 0; n < batch.size(); ++n) {
    const Labels& seq = batch[n].labels;
    check_labels(seq, student.num_labels());
    Labels prefix;
    prefix.reserve(seq.size());
    auto add_step = [&](int sym) {
      const auto lq = student.log_prob_row(prefix);
      res.loss -= w[n] * lq[sym];
      const ContextKey key = student.context_key(prefix);
      auto& g = res.grad.try_emplace(key, std::vector<double>(lq.size(), 0.0))
                    .first->second;
      for (size_t a = 0; a < lq.size(); ++a) {
        double q = (lq[a] == kLogZero) ? 0.0 : std::exp(lq[a]);
        g[a] += w[n] * (q - (static_cast<int>(a) == sym ? 1.0 : 0.0));
      }
    };
    for (int a : seq) {
      add_step(a);
      prefix.push_back(a);
    }
    if (student.models_eos()) add_step(student.eos_index());
  }
  return res;
}

}  // namespace ilmlab
