#pragma once

#include <map>

#include "ilmlab/types.hpp"

namespace ilmlab {

// Standard CTC collapse: drop repeats, then blanks.
Labels collapse(const std::vector<int>& alignment, int num_labels);

// Minimum alignment length for seq: one frame per label plus a blank
// between every repeated pair. Structural feasibility check that lets
// callers tell "no alignment exists" apart from numerical underflow.
int min_alignment_length(const Labels& seq);
bool alignment_feasible(const Labels& seq, int frames);

// log P(seq|X): forward algorithm over the blank-augmented lattice.
// Returns kLogZero when no alignment fits.
double ctc_log_prob(const PosteriorGrid& grid, const Labels& seq);

// log P(prefix,...|X): mass of all complete label sequences having
// `prefix` as prefix (including `prefix` itself). Empty prefix -> 0.
double prefix_log_prob(const PosteriorGrid& grid, const Labels& prefix);

// Posterior over V+ = labels + EOS (EOS at index V) given a live prefix:
//   entry(a)   = P(prefix.a,...|X) / P(prefix,...|X)
//   entry(EOS) = P(prefix|X)       / P(prefix,...|X)
// Throws DeadPrefixError when the prefix has zero mass.
std::vector<double> label_posterior_row(const PosteriorGrid& grid,
                                        const Labels& prefix);

// Exhaustive (V+1)^T enumeration oracle. Guard refuses grids with more
// than max_paths alignments.
std::map<Labels, double> brute_force_seq_distribution(
    const PosteriorGrid& grid, int max_len,
    std::uint64_t max_paths = 1u << 22);

}  // namespace ilmlab
