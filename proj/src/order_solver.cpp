#include "stack_order/order_solver.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace stack_order {

bool is_permutation(std::span<const std::size_t> p) {
  std::vector<bool> seen(p.size(), false);
  for (std::size_t v : p) {
    if (v >= p.size() || seen[v]) return false;
    seen[v] = true;
  }
  return true;
}

Permutation rank_to_positions(std::span<const std::size_t> order) {
  if (!is_permutation(order)) throw std::invalid_argument("rank_to_positions: input is not a permutation");
  Permutation pos(order.size());
  for (std::size_t k = 0; k < order.size(); ++k) pos[order[k]] = k;
  return pos;
}

Permutation topological_order(const PairwiseMatrix& matrix) {
  const std::size_t n = matrix.size();
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double a = matrix(i, j), b = matrix(j, i);
      if (!std::isfinite(a) || !std::isfinite(b) || a < 0.0 || a > 1.0 || b < 0.0 || b > 1.0) {
        throw std::invalid_argument("topological_order: invalid probabilities at (" + std::to_string(i) + ", " +
                                    std::to_string(j) + ")");
      }
    }
  }

  // edge[x][y] == true means x is predicted before y
  std::vector<std::vector<bool>> edge(n, std::vector<bool>(n, false));
  std::vector<double> margin(n, 0.0);
  for (std::size_t x = 0; x < n; ++x) {
    for (std::size_t y = 0; y < n; ++y) {
      if (x == y) continue;
      margin[x] += matrix(x, y) - 0.5;
      if (x < y) {
        const bool forward = matrix(x, y) >= matrix(y, x);  // tie -> lower index first
        edge[x][y] = forward;
        edge[y][x] = !forward;
      }
    }
  }

  std::vector<std::size_t> indegree(n, 0);
  for (std::size_t x = 0; x < n; ++x)
    for (std::size_t y = 0; y < n; ++y)
      if (edge[x][y]) ++indegree[y];

  std::vector<bool> placed(n, false);
  Permutation order;
  order.reserve(n);
  while (order.size() < n) {
    std::size_t best = n;
    for (std::size_t x = 0; x < n; ++x) {
      if (placed[x] || indegree[x] != 0) continue;
      if (best == n || margin[x] > margin[best]) best = x;
    }
    if (best != n) {
      placed[best] = true;
      order.push_back(best);
      for (std::size_t y = 0; y < n; ++y) {
        if (edge[best][y]) {
          edge[best][y] = false;
          --indegree[y];
        }
      }
      continue;
    }
    // Every remaining node has an incoming edge: drop the least confident.
    double weakest = std::numeric_limits<double>::infinity();
    std::size_t wx = n, wy = n;
    for (std::size_t x = 0; x < n; ++x) {
      if (placed[x]) continue;
      for (std::size_t y = 0; y < n; ++y) {
        if (!edge[x][y]) continue;
        const double confidence = std::abs(matrix(x, y) - 0.5);
        if (confidence < weakest) {
          weakest = confidence;
          wx = x;
          wy = y;
        }
      }
    }
    edge[wx][wy] = false;
    --indegree[wy];
  }
  return order;
}

}  // namespace stack_order
