#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "ddica/matrix.hpp"

namespace ddica {

// Permutation-matched evaluation. Signals are rows: pred and truth are p x N.
struct MatchResult {
    std::vector<std::size_t> permutation;  // truth i is matched to pred row permutation[i]
    std::vector<int> signs;                // +-1 per truth source (correlation mode only)
    std::vector<double> per_source;
    double average = 0.0;
};

double pearson(std::span<const double> a, std::span<const double> b);

// Minimum-cost assignment of every row of an r x c cost matrix (r <= c) to a
// distinct column. Returns column index per row.
std::vector<std::size_t> hungarian(const Matrix& cost);

// Exhaustive counterpart of hungarian, for cross-checking (r <= c <= 10).
std::vector<std::size_t> brute_force_assignment(const Matrix& cost);

// Maximizes mean |rho| over permutations; throws on constant rows.
MatchResult matched_abs_corr(const Matrix& pred, const Matrix& truth);

// Minimizes mean per-source RMSE over permutations, no sign flips.
MatchResult matched_rmse(const Matrix& pred, const Matrix& truth);

// k x N centers against p x N truth (k >= p): best injective assignment by RMSE.
MatchResult match_centers_to_truth(const Matrix& centers, const Matrix& truth);

double rmse(std::span<const double> a, std::span<const double> b);

}  // namespace ddica
