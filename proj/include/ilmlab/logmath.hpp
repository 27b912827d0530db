#pragma once

#include <cmath>
#include <limits>
#include <span>
#include <vector>

namespace ilmlab {

// Sentinel for log(0). All DP in this project runs in log space.
inline constexpr double kLogZero = -std::numeric_limits<double>::infinity();

inline double log_add(double a, double b) {
  if (a == kLogZero) return b;
  if (b == kLogZero) return a;
  if (a < b) std::swap(a, b);
  return a + std::log1p(std::exp(b - a));
}

inline double log_sum(std::span<const double> xs) {
  double m = kLogZero;
  for (double x : xs)
    if (x > m) m = x;
  if (m == kLogZero) return kLogZero;
  double s = 0.0;
  for (double x : xs)
    if (x != kLogZero) s += std::exp(x - m);
  return m + std::log(s);
}

inline std::vector<double> log_softmax(std::span<const double> logits) {
  std::vector<double> out(logits.begin(), logits.end());
  double z = log_sum(logits);
  for (double& x : out) x = (x == kLogZero) ? kLogZero : x - z;
  return out;
}

inline std::vector<double> softmax(std::span<const double> logits) {
  std::vector<double> out = log_softmax(logits);
  for (double& x : out) x = std::exp(x);
  return out;
}

}  // namespace ilmlab
