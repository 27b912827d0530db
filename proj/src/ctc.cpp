#include "ilmlab/ctc.hpp"

#include <algorithm>
#include <cmath>

namespace ilmlab {

void Vocabulary::validate() const {
  if (labels.empty()) throw ValidationError("vocabulary must be non-empty");
  for (const auto& l : labels) {
    if (l.empty()) throw ValidationError("empty label symbol");
    if (std::count(labels.begin(), labels.end(), l) != 1)
      throw ValidationError("duplicate label symbol: " + l);
  }
}

void PosteriorGrid::validate(double tol) const {
  if (frames() < 1) throw ValidationError("grid needs at least one frame");
  if (num_labels < 1) throw ValidationError("grid needs at least one label");
  for (const auto& row : log_rows) {
    if (static_cast<int>(row.size()) != columns())
      throw ValidationError("grid row width mismatch");
    double s = 0.0;
    for (double lp : row) {
      if (std::isnan(lp) || lp > 1e-12)
        throw ValidationError("grid row entry is not a log-probability");
      s += std::exp(lp);
    }
    if (std::abs(s - 1.0) > tol)
      throw ValidationError("grid row does not sum to 1");
  }
}

void check_labels(const Labels& seq, int num_labels) {
  for (int a : seq)
    if (a < 0 || a >= num_labels)
      throw InputDomainError("label index out of range: " + std::to_string(a));
}

Labels collapse(const std::vector<int>& alignment, int num_labels) {
  const int blank = num_labels;
  Labels out;
  int prev = -1;
  for (int y : alignment) {
    if (y < 0 || y > blank)
      throw InputDomainError("alignment symbol out of range: " +
                             std::to_string(y));
    if (y != prev && y != blank) out.push_back(y);
    prev = y;
  }
  return out;
}

int min_alignment_length(const Labels& seq) {
  int n = static_cast<int>(seq.size());
  for (size_t i = 1; i < seq.size(); ++i)
    if (seq[i] == seq[i - 1]) ++n;
  return n;
}

bool alignment_feasible(const Labels& seq, int frames) {
  return min_alignment_length(seq) <= frames;
}

double ctc_log_prob(const PosteriorGrid& grid, const Labels& seq) {
  check_labels(seq, grid.num_labels);
  const int T = grid.frames();
  const int S = static_cast<int>(seq.size());
  const int blank = grid.num_labels;
  if (!alignment_feasible(seq, T)) return kLogZero;

  // States 0..2S over the blank-augmented sequence; even = blank slots.
  const int U = 2 * S + 1;
  auto sym = [&](int u) { return (u % 2 == 0) ? blank : seq[u / 2]; };

  std::vector<double> alpha(U, kLogZero), next(U);
  alpha[0] = grid.log_rows[0][blank];
  if (S > 0) alpha[1] = grid.log_rows[0][seq[0]];
  for (int t = 1; t < T; ++t) {
    const auto& row = grid.log_rows[t];
    for (int u = 0; u < U; ++u) {
      double m = alpha[u];
      if (u >= 1) m = log_add(m, alpha[u - 1]);
      if (u >= 2 && sym(u) != blank && sym(u) != sym(u - 2))
        m = log_add(m, alpha[u - 2]);
      next[u] = (m == kLogZero) ? kLogZero : m + row[sym(u)];
    }
    alpha.swap(next);
  }
  double r = alpha[U - 1];
  if (S > 0) r = log_add(r, alpha[U - 2]);
  return r;
}

double prefix_log_prob(const PosteriorGrid& grid, const Labels& prefix) {
  check_labels(prefix, grid.num_labels);
  const int T = grid.frames();
  const int S = static_cast<int>(prefix.size());
  const int blank = grid.num_labels;
  if (S == 0) return 0.0;
  if (!alignment_feasible(prefix, T)) return kLogZero;

  // a_b[j] / a_nb[j]: mass of alignments through frame t whose collapse
  // equals prefix[0..j), last frame blank / = prefix[j-1]. Once the full
  // prefix is matched, the remaining frames contribute total mass 1
  // (rows are normalized), so we only accumulate first-entry mass.
  std::vector<double> a_b(S, kLogZero), a_nb(S, kLogZero);
  std::vector<double> n_b(S), n_nb(S);
  a_b[0] = 0.0;  // empty alignment before frame 1
  double total = kLogZero;
  for (int t = 0; t < T; ++t) {
    const auto& row = grid.log_rows[t];
    for (int j = 0; j < S; ++j) {
      n_b[j] = log_add(a_b[j], a_nb[j]);
      n_b[j] = (n_b[j] == kLogZero) ? kLogZero : n_b[j] + row[blank];
      n_nb[j] = (a_nb[j] == kLogZero)
                    ? kLogZero
                    : a_nb[j] + row[j > 0 ? prefix[j - 1] : blank];
    }
    for (int j = 0; j < S; ++j) {
      // emit prefix[j] from state j
      double from = a_b[j];
      if (j > 0 && prefix[j] != prefix[j - 1]) from = log_add(from, a_nb[j]);
      if (from == kLogZero) continue;
      double emitted = from + row[prefix[j]];
      if (j + 1 < S)
        n_nb[j + 1] = log_add(n_nb[j + 1], emitted);
      else
        total = log_add(total, emitted);
    }
    a_b.swap(n_b);
    a_nb.swap(n_nb);
  }
  return total;
}

std::vector<double> label_posterior_row(const PosteriorGrid& grid,
                                        const Labels& prefix) {
  const int V = grid.num_labels;
  double denom = prefix_log_prob(grid, prefix);
  if (denom == kLogZero)
    throw DeadPrefixError("label_posterior_row: prefix has zero mass");
  std::vector<double> out(V + 1, 0.0);
  Labels ext = prefix;
  ext.push_back(0);
  for (int a = 0; a < V; ++a) {
    ext.back() = a;
    double num = prefix_log_prob(grid, ext);
    out[a] = (num == kLogZero) ? 0.0 : std::exp(num - denom);
  }
  double complete = ctc_log_prob(grid, prefix);
  out[V] = (complete == kLogZero) ? 0.0 : std::exp(complete - denom);
  return out;
}

namespace {
void enumerate_rec(const PosteriorGrid& grid, int t, double acc,
                   std::vector<int>& alignment, std::map<Labels, double>& out,
                   int max_len) {
  if (t == grid.frames()) {
    Labels seq = collapse(alignment, grid.num_labels);
    if (static_cast<int>(seq.size()) <= max_len) out[seq] += std::exp(acc);
    return;
  }
  const auto& row = grid.log_rows[t];
  for (int y = 0; y <= grid.num_labels; ++y) {
    if (row[y] == kLogZero) continue;
    alignment.push_back(y);
    enumerate_rec(grid, t + 1, acc + row[y], alignment, out, max_len);
    alignment.pop_back();
  }
}
}  // namespace

std::map<Labels, double> brute_force_seq_distribution(const PosteriorGrid& grid,
                                                      int max_len,
                                                      std::uint64_t max_paths) {
  double log_paths = grid.frames() * std::log(grid.num_labels + 1.0);
  if (log_paths > std::log(static_cast<double>(max_paths)))
    throw GuardExceededError("brute force enumeration guard exceeded");
  std::map<Labels, double> out;
  std::vector<int> alignment;
  enumerate_rec(grid, 0, 0.0, alignment, out, max_len);
  return out;
}

}  // namespace ilmlab
