#include "ilmlab/ctxlm.hpp"

#include <algorithm>

namespace ilmlab {

ContextKey CtxLM::context_key(const Labels& prefix) const {
  check_labels(prefix, num_labels_);
  if (context_order_ == kFullContext) return prefix;
  const int k = context_order_;
  ContextKey key(static_cast<size_t>(k), kBos);
  const int n = static_cast<int>(prefix.size());
  for (int i = 0; i < k; ++i) {
    int src = n - k + i;
    if (src >= 0) key[i] = prefix[src];
  }
  return key;
}

const std::vector<double>& CtxLM::zero_row(int width) {
  static std::map<int, std::vector<double>> cache;
  auto it = cache.find(width);
  if (it == cache.end())
    it = cache.emplace(width, std::vector<double>(width, 0.0)).first;
  return it->second;
}

const std::vector<double>& CtxLM::logits(const ContextKey& key) const {
  auto it = table_.find(key);
  if (it != table_.end()) return it->second;
  return zero_row(num_labels_ + 1);
}

void CtxLM::set_logits(const ContextKey& key, std::vector<double> logits) {
  if (static_cast<int>(logits.size()) != num_labels_ + 1)
    throw ValidationError("logit row width mismatch");
  table_[key] = std::move(logits);
}

std::vector<double> CtxLM::log_prob_row(const Labels& prefix) const {
  std::vector<double> z = logits(context_key(prefix));
  if (!models_eos_) z[num_labels_] = kLogZero;
  return log_softmax(z);
}

std::vector<double> CtxLM::prob_row(const Labels& prefix) const {
  std::vector<double> row = log_prob_row(prefix);
  for (double& x : row) x = (x == kLogZero) ? 0.0 : std::exp(x);
  return row;
}

double CtxLM::step_log_prob(const Labels& prefix, int symbol) const {
  if (symbol < 0 || symbol > num_labels_)
    throw InputDomainError("symbol out of range");
  return log_prob_row(prefix)[symbol];
}

double CtxLM::seq_log_prob(const Labels& seq) const {
  double lp = 0.0;
  Labels prefix;
  prefix.reserve(seq.size());
  for (int a : seq) {
    lp += step_log_prob(prefix, a);
    prefix.push_back(a);
  }
  if (models_eos_) lp += step_log_prob(prefix, eos_index());
  return lp;
}

void CtxLM::apply_gradient(const GradTable& grad, double step) {
  for (const auto& [key, g] : grad) {
    auto it = table_.find(key);
    if (it == table_.end())
      it = table_.emplace(key, std::vector<double>(num_labels_ + 1, 0.0)).first;
    for (size_t i = 0; i < g.size(); ++i) it->second[i] -= step * g[i];
  }
}

}  // namespace ilmlab
