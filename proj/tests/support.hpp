// Shared fixtures and statistical helpers for the unit tests.
#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "gibbsum/models.hpp"

namespace testsupport {

// Two spins joined by one edge: Z(beta) = 2 + 2 exp(-beta).
inline gibbsum::IsingModel single_edge_ising() { return gibbsum::IsingModel(2, {{0, 1}}); }

// Triangle with k colors. For k = 3: Z(beta) = 6 + 18 exp(-beta) + 3 exp(-3 beta).
inline gibbsum::PottsModel triangle_potts(int k) {
  return gibbsum::PottsModel(3, {{0, 1}, {1, 2}, {0, 2}}, k);
}

inline gibbsum::IsingModel cycle_ising(int n) {
  std::vector<std::pair<int, int>> edges;
  for (int i = 0; i < n; ++i) edges.push_back({i, (i + 1) % n});
  return gibbsum::IsingModel(n, edges);
}

inline gibbsum::PottsModel cycle_potts(int n, int k) {
  std::vector<std::pair<int, int>> edges;
  for (int i = 0; i < n; ++i) edges.push_back({i, (i + 1) % n});
  return gibbsum::PottsModel(n, edges, k);
}

// 3x3 square grid, open boundary: 9 spins, 12 edges, 512 states.
inline gibbsum::IsingModel grid_ising_3x3() {
  std::vector<std::pair<int, int>> edges;
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) {
      const int v = 3 * r + c;
      if (c + 1 < 3) edges.push_back({v, v + 1});
      if (r + 1 < 3) edges.push_back({v, v + 3});
    }
  return gibbsum::IsingModel(9, edges);
}

// Pearson statistic over cells with expected probability above floor_p; cells
// below the floor are pooled into one bucket to keep the approximation valid.
inline double chi_square_statistic(const std::vector<std::uint64_t>& observed,
                                   const std::vector<double>& expected_probs,
                                   std::uint64_t total, double floor_p, int* df_out) {
  double stat = 0.0;
  double pooled_p = 0.0;
  std::uint64_t pooled_o = 0;
  int cells = 0;
  for (std::size_t i = 0; i < observed.size(); ++i) {
    const double e = expected_probs[i] * static_cast<double>(total);
    if (expected_probs[i] < floor_p) {
      pooled_p += expected_probs[i];
      pooled_o += observed[i];
      continue;
    }
    const double d = static_cast<double>(observed[i]) - e;
    stat += d * d / e;
    ++cells;
  }
  if (pooled_p > 0.0) {
    const double e = pooled_p * static_cast<double>(total);
    const double d = static_cast<double>(pooled_o) - e;
    stat += d * d / e;
    ++cells;
  }
  *df_out = cells - 1;
  return stat;
}

// Upper 0.001 quantile of chi-square via the Wilson-Hilferty cube approximation.
inline double chi_square_crit_999(int df) {
  const double z = 3.0902;  // standard normal upper 0.001 point
  const double a = 2.0 / (9.0 * df);
  const double c = 1.0 - a + z * std::sqrt(a);
  return df * c * c * c;
}

}  // namespace testsupport
