#pragma once

#include <map>
#include <utility>

#include "ilmlab/ctc.hpp"
#include "ilmlab/types.hpp"

namespace ilmlab {

// Finite joint distribution over inputs: a mixture of posterior grids
// with prior weights Pr(X_k). Makes every ILM quantity exactly
// computable by enumeration.
struct World {
  Vocabulary vocab;
  struct Entry {
    PosteriorGrid grid;
    double prior = 0.0;  // Pr(X_k)
  };
  std::vector<Entry> entries;
  int max_len = 0;  // enumeration bound on collapsed sequence length

  int num_grids() const { return static_cast<int>(entries.size()); }
  const PosteriorGrid& grid(int id) const;
  void validate(double tol = 1e-12) const;
};

// (grid, labels, boundaries, weight). boundaries[s] is the 1-based end
// frame of label s; empty when the pair was not produced by alignment
// sampling (e.g. enumerated joints).
struct TrainingPair {
  int grid_id = 0;
  Labels labels;
  std::vector<int> boundaries;
  double weight = 1.0;
};

using Dataset = std::vector<TrainingPair>;

void validate_pair(const TrainingPair& pair, const World& world,
                   bool require_boundaries = false);

// Memoizing view of the CTC teacher over a fixed world. Losses go
// through this so repeated prefix queries (training epochs) stay cheap.
class TeacherOracle {
 public:
  explicit TeacherOracle(const World& world) : world_(&world) {}

  const World& world() const { return *world_; }
  const std::vector<double>& posterior_row(int grid_id, const Labels& prefix);
  double prefix_lp(int grid_id, const Labels& prefix);
  double seq_lp(int grid_id, const Labels& seq);

 private:
  const World* world_;
  std::map<std::pair<int, Labels>, std::vector<double>> row_cache_;
  std::map<std::pair<int, Labels>, double> prefix_cache_;
  std::map<std::pair<int, Labels>, double> seq_cache_;
};

}  // namespace ilmlab
