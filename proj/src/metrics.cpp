#include "ddica/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace ddica {

double pearson(std::span<const double> a, std::span<const double> b) {
    require(a.size() == b.size() && a.size() >= 2, "pearson: need equal lengths >= 2");
    const double n = static_cast<double>(a.size());
    const double ma = std::accumulate(a.begin(), a.end(), 0.0) / n;
    const double mb = std::accumulate(b.begin(), b.end(), 0.0) / n;
    double sab = 0.0, saa = 0.0, sbb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        sab += (a[i] - ma) * (b[i] - mb);
        saa += (a[i] - ma) * (a[i] - ma);
        sbb += (b[i] - mb) * (b[i] - mb);
    }
    if (!(saa > 0.0) || !(sbb > 0.0)) throw std::invalid_argument("pearson: constant signal");
    return std::clamp(sab / std::sqrt(saa * sbb), -1.0, 1.0);
}

double rmse(std::span<const double> a, std::span<const double> b) {
    require(a.size() == b.size() && !a.empty(), "rmse: need equal non-empty lengths");
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
    return std::sqrt(s / static_cast<double>(a.size()));
}

// Shortest augmenting path (Jonker-Volgenant style potentials), O(r^2 c).
std::vector<std::size_t> hungarian(const Matrix& cost) {
    const std::size_t r = cost.rows(), c = cost.cols();
    require(r >= 1 && r <= c, "hungarian: need 1 <= rows <= cols");
    for (double v : cost.values())
        if (!std::isfinite(v)) throw std::invalid_argument("hungarian: non-finite cost");
    constexpr double inf = std::numeric_limits<double>::infinity();
    std::vector<double> u(r + 1, 0.0), v(c + 1, 0.0);
    std::vector<std::size_t> match(c + 1, 0), way(c + 1, 0);  // match[col] = row (1-based)
    for (std::size_t i = 1; i <= r; ++i) {
        match[0] = i;
        std::size_t j0 = 0;
        std::vector<double> minv(c + 1, inf);
        std::vector<char> used(c + 1, 0);
        do {
            used[j0] = 1;
            const std::size_t i0 = match[j0];
            double delta = inf;
            std::size_t j1 = 0;
            for (std::size_t j = 1; j <= c; ++j) {
                if (used[j]) continue;
                const double cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
                if (cur < minv[j]) {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if (minv[j] < delta) {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for (std::size_t j = 0; j <= c; ++j) {
                if (used[j]) {
                    u[match[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
        } while (match[j0] != 0);
        do {
            const std::size_t j1 = way[j0];
            match[j0] = match[j1];
            j0 = j1;
        } while (j0 != 0);
    }
    std::vector<std::size_t> out(r);
    for (std::size_t j = 1; j <= c; ++j)
        if (match[j] != 0) out[match[j] - 1] = j - 1;
    return out;
}

std::vector<std::size_t> brute_force_assignment(const Matrix& cost) {
    const std::size_t r = cost.rows(), c = cost.cols();
    require(r >= 1 && r <= c && c <= 10, "brute_force_assignment: need 1 <= rows <= cols <= 10");
    std::vector<std::size_t> best, cur;
    std::vector<char> used(c, 0);
    double best_cost = std::numeric_limits<double>::infinity();
    auto rec = [&](auto&& self, double acc) -> void {
        if (cur.size() == r) {
            if (acc < best_cost) {
                best_cost = acc;
                best = cur;
            }
            return;
        }
        for (std::size_t j = 0; j < c; ++j) {
            if (used[j]) continue;
            used[j] = 1;
            cur.push_back(j);
            self(self, acc + cost(cur.size() - 1, j));
            cur.pop_back();
            used[j] = 0;
        }
    };
    rec(rec, 0.0);
    return best;
}

namespace {

void require_same_shape(const Matrix& pred, const Matrix& truth) {
    if (pred.rows() != truth.rows() || pred.cols() != truth.cols())
        throw std::invalid_argument("shape mismatch: pred " + std::to_string(pred.rows()) + "x" +
                                    std::to_string(pred.cols()) + ", truth " +
                                    std::to_string(truth.rows()) + "x" + std::to_string(truth.cols()));
    require(pred.rows() >= 1 && pred.cols() >= 1, "empty signals");
}

// cost(i, j): truth i against candidate j; small problems solved exhaustively.
std::vector<std::size_t> assign(const Matrix& cost) {
    return cost.cols() <= 8 ? brute_force_assignment(cost) : hungarian(cost);
}

MatchResult finish(std::vector<std::size_t> perm, std::vector<double> per_source) {
    MatchResult m;
    m.permutation = std::move(perm);
    m.per_source = std::move(per_source);
    m.average = std::accumulate(m.per_source.begin(), m.per_source.end(), 0.0) /
                static_cast<double>(m.per_source.size());
    return m;
}

MatchResult match_by_rmse(const Matrix& candidates, const Matrix& truth) {
    const std::size_t p = truth.rows(), k = candidates.rows();
    Matrix cost(p, k);
    for (std::size_t i = 0; i < p; ++i)
        for (std::size_t j = 0; j < k; ++j) cost(i, j) = rmse(candidates.row(j), truth.row(i));
    auto perm = assign(cost);
    std::vector<double> per(p);
    for (std::size_t i = 0; i < p; ++i) per[i] = cost(i, perm[i]);
    return finish(std::move(perm), std::move(per));
}

}  // namespace

MatchResult matched_abs_corr(const Matrix& pred, const Matrix& truth) {
    require_same_shape(pred, truth);
    const std::size_t p = truth.rows();
    Matrix rho(p, p), cost(p, p);
    for (std::size_t i = 0; i < p; ++i)
        for (std::size_t j = 0; j < p; ++j) {
            rho(i, j) = pearson(pred.row(j), truth.row(i));
            cost(i, j) = -std::abs(rho(i, j));
        }
    auto perm = assign(cost);
    std::vector<double> per(p);
    std::vector<int> signs(p);
    for (std::size_t i = 0; i < p; ++i) {
        per[i] = std::abs(rho(i, perm[i]));
        signs[i] = rho(i, perm[i]) < 0.0 ? -1 : 1;
    }
    MatchResult m = finish(std::move(perm), std::move(per));
    m.signs = std::move(signs);
    return m;
}

MatchResult matched_rmse(const Matrix& pred, const Matrix& truth) {
    require_same_shape(pred, truth);
    return match_by_rmse(pred, truth);
}

MatchResult match_centers_to_truth(const Matrix& centers, const Matrix& truth) {
    if (centers.rows() < truth.rows())
        throw std::invalid_argument("match_centers_to_truth: " + std::to_string(centers.rows()) +
                                    " centers for " + std::to_string(truth.rows()) + " sources");
    if (centers.cols() != truth.cols())
        throw std::invalid_argument("match_centers_to_truth: signal length mismatch");
    return match_by_rmse(centers, truth);
}

}  // namespace ddica
