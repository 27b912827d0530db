#include "ilmlab/world.hpp"

#include <cmath>

namespace ilmlab {

const PosteriorGrid& World::grid(int id) const {
  if (id < 0 || id >= num_grids())
    throw InputDomainError("grid id out of range: " + std::to_string(id));
  return entries[id].grid;
}

void World::validate(double tol) const {
  vocab.validate();
  if (entries.empty()) throw ValidationError("world has no grids");
  double total = 0.0;
  for (const auto& e : entries) {
    if (e.prior < 0.0) throw ValidationError("negative grid prior");
    if (e.grid.num_labels != vocab.size())
      throw ValidationError("grid vocabulary size mismatch");
    e.grid.validate();
    total += e.prior;
  }
  if (std::abs(total - 1.0) > tol)
    throw ValidationError("grid priors do not sum to 1");
  if (max_len < 0) throw ValidationError("negative max_len");
}

void validate_pair(const TrainingPair& pair, const World& world,
                   bool require_boundaries) {
  const PosteriorGrid& g = world.grid(pair.grid_id);
  check_labels(pair.labels, g.num_labels);
  if (pair.weight < 0.0) throw ValidationError("negative pair weight");
  if (pair.boundaries.empty() && !pair.labels.empty()) {
    if (require_boundaries)
      throw ValidationError("training pair is missing label boundaries");
    return;
  }
  if (pair.boundaries.size() != pair.labels.size())
    throw ValidationError("boundary count != label count");
  int prev = 0;
  for (int t : pair.boundaries) {
    if (t <= prev || t > g.frames())
      throw ValidationError("label boundaries must be strictly increasing "
                            "and within the grid");
    prev = t;
  }
}

const std::vector<double>& TeacherOracle::posterior_row(int grid_id,
                                                        const Labels& prefix) {
  auto key = std::make_pair(grid_id, prefix);
  auto it = row_cache_.find(key);
  if (it == row_cache_.end())
    it = row_cache_
             .emplace(key, label_posterior_row(world_->grid(grid_id), prefix))
             .first;
  return it->second;
}

double TeacherOracle::prefix_lp(int grid_id, const Labels& prefix) {
  auto key = std::make_pair(grid_id, prefix);
  auto it = prefix_cache_.find(key);
  if (it == prefix_cache_.end())
    it = prefix_cache_
             .emplace(key, prefix_log_prob(world_->grid(grid_id), prefix))
             .first;
  return it->second;
}

double TeacherOracle::seq_lp(int grid_id, const Labels& seq) {
  auto key = std::make_pair(grid_id, seq);
  auto it = seq_cache_.find(key);
  if (it == seq_cache_.end())
    it = seq_cache_.emplace(key, ctc_log_prob(world_->grid(grid_id), seq))
             .first;
  return it->second;
}

}  // namespace ilmlab
