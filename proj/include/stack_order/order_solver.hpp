#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "stack_order/edge_classifier.hpp"

namespace stack_order {

using Permutation = std::vector<std::size_t>;

/// Recovers a full order from pairwise probabilities.
///
/// Tournament: edge x -> y iff p_xy > p_yx; an exact tie points from the
/// lower index. Kahn's algorithm then repeatedly emits the zero-indegree
/// node with the largest win margin sum_y (p_xy - 0.5) over all y != x
/// (ties: lower index). When no remaining node has indegree zero, the
/// surviving edge with the smallest |p_xy - 0.5| is deleted (ties: smallest
/// (x, y)) and the search resumes.
Permutation topological_order(const PairwiseMatrix& matrix);

/// Inverse permutation: positions[order[k]] = k.
Permutation rank_to_positions(std::span<const std::size_t> order);

bool is_permutation(std::span<const std::size_t> p);

}  // namespace stack_order
