#pragma once

#include <map>

#include "ilmlab/types.hpp"

namespace ilmlab {

// Context key element used for left-padding short histories.
inline constexpr int kBos = -1;

inline constexpr int kFullContext = -1;  // context_order value for FULL

using ContextKey = std::vector<int>;
using GradTable = std::map<ContextKey, std::vector<double>>;

// Tabular softmax autoregressive LM over V+ = labels + EOS (index V).
// context_order 0 keys everything on the empty context, k >= 1 keys on
// the last k labels (BOS-padded), kFullContext keys on the whole prefix.
// Rows are lazily created with zero logits (uniform distribution).
class CtxLM {
 public:
  CtxLM() = default;
  CtxLM(int num_labels, int context_order, bool models_eos = true)
      : num_labels_(num_labels),
        context_order_(context_order),
        models_eos_(models_eos) {}

  int num_labels() const { return num_labels_; }
  int eos_index() const { return num_labels_; }
  int context_order() const { return context_order_; }
  bool models_eos() const { return models_eos_; }

  ContextKey context_key(const Labels& prefix) const;

  // log q(.|prefix) over V+; for models_eos()==false the EOS entry is
  // kLogZero and the labels renormalize among themselves.
  std::vector<double> log_prob_row(const Labels& prefix) const;
  std::vector<double> prob_row(const Labels& prefix) const;

  // symbol in 0..V (V = EOS).
  double step_log_prob(const Labels& prefix, int symbol) const;

  // log q(seq . EOS) when the model has EOS, else log q(seq).
  double seq_log_prob(const Labels& seq) const;

  const std::vector<double>& logits(const ContextKey& key) const;
  void set_logits(const ContextKey& key, std::vector<double> logits);
  const std::map<ContextKey, std::vector<double>>& table() const {
    return table_;
  }

  // theta <- theta - step * grad, creating rows on demand.
  void apply_gradient(const GradTable& grad, double step);

 private:
  int num_labels_ = 0;
  int context_order_ = 0;
  bool models_eos_ = true;
  std::map<ContextKey, std::vector<double>> table_;

  static const std::vector<double>& zero_row(int width);
};

}  // namespace ilmlab
