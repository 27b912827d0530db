#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "ilmlab/logmath.hpp"

namespace ilmlab {

// Error taxonomy. CLI maps ValidationError to exit code 1, everything
// else to exit code 2.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct ValidationError : Error {
  using Error::Error;
};
struct InputDomainError : Error {
  using Error::Error;
};
struct DeadPrefixError : Error {
  using Error::Error;
};
struct GuardExceededError : Error {
  using Error::Error;
};
struct DecodeFailureError : Error {
  using Error::Error;
};

// Label indices 0..V-1. Blank lives at index V on the grid side, EOS at
// index V on the LM side; neither ever appears inside a LabelSequence.
using Labels = std::vector<int>;

struct Vocabulary {
  std::vector<std::string> labels;

  int size() const { return static_cast<int>(labels.size()); }
  int blank_index() const { return size(); }
  int eos_index() const { return size(); }

  void validate() const;
};

// T x (V+1) row-stochastic matrix of per-frame posteriors, stored as
// log-probabilities. Stands in for the CTC output P(y_t|h_t).
struct PosteriorGrid {
  int num_labels = 0;                        // V; blank is column V
  std::vector<std::vector<double>> log_rows;  // T rows, each V+1 wide

  int frames() const { return static_cast<int>(log_rows.size()); }
  int columns() const { return num_labels + 1; }

  void validate(double tol = 1e-9) const;
};

void check_labels(const Labels& seq, int num_labels);

}  // namespace ilmlab
