#include "ddica/linalg.hpp"

#include <cblas.h>
#include <lapacke.h>

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "ddica/errors.hpp"
#include "ddica/simd/kernels.hpp"

namespace ddica {

SymMatrix::SymMatrix(Matrix m) : m_(std::move(m)) {
    require(m_.rows() == m_.cols(), "SymMatrix: matrix is not square");
    require(m_.rows() >= 1, "SymMatrix: dimension must be >= 1");
    const std::size_t n = m_.rows();
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            const double avg = 0.5 * (m_(i, j) + m_(j, i));
            m_(i, j) = avg;
            m_(j, i) = avg;
        }
    }
}

namespace {

void check_finite(const SymMatrix& m) {
    for (double v : m.matrix().values())
        if (!std::isfinite(v)) throw std::invalid_argument("sym_eig: non-finite matrix entry");
}

// LAPACK returns ascending order; flip to descending.
std::vector<double> solve(const SymMatrix& m, bool with_vectors, Matrix* vectors) {
    check_finite(m);
    const int n = static_cast<int>(m.n());
    Matrix a = m.matrix();
    std::vector<double> w(m.n());
    const lapack_int info = LAPACKE_dsyevd(LAPACK_ROW_MAJOR, with_vectors ? 'V' : 'N', 'U', n,
                                           a.data(), n, w.data());
    if (info < 0) throw std::invalid_argument("sym_eig: illegal argument " + std::to_string(-info));
    if (info > 0)
        throw ConvergenceError("sym_eig: eigensolver failed to converge (" + std::to_string(info) +
                                   " off-diagonal elements did not converge)",
                               info);
    std::reverse(w.begin(), w.end());
    if (with_vectors) {
        *vectors = Matrix(m.n(), m.n());
        for (std::size_t r = 0; r < m.n(); ++r) {
            auto src = a.row(r);
            auto dst = vectors->row(r);
            std::reverse_copy(src.begin(), src.end(), dst.begin());
        }
    }
    return w;
}

void clamp_psd(std::vector<double>& values) {
    double trace = 0.0;
    for (double v : values) trace += v;
    const double floor = -1e-10 * std::max(std::abs(trace), 1e-300);
    for (double& v : values) {
        if (v < floor)
            throw std::domain_error("psd_eig: eigenvalue " + std::to_string(v) +
                                    " violates positive semi-definiteness");
        if (v < 0.0) v = 0.0;
    }
}

}  // namespace

EigenPair sym_eig(const SymMatrix& m) {
    EigenPair e;
    e.values = solve(m, true, &e.vectors);
    return e;
}

std::vector<double> sym_eigvals(const SymMatrix& m) { return solve(m, false, nullptr); }

EigenPair psd_eig(const SymMatrix& m) {
    EigenPair e = sym_eig(m);
    clamp_psd(e.values);
    return e;
}

std::vector<double> psd_eigvals(const SymMatrix& m) {
    auto v = sym_eigvals(m);
    clamp_psd(v);
    return v;
}

EigenPair sym_eig_above(const SymMatrix& m, double threshold) {
    check_finite(m);
    const std::size_t n = m.n();
    double bound = 0.0;  // Gershgorin bound on the spectrum
    for (std::size_t r = 0; r < n; ++r) {
        double s = 0.0;
        for (double v : m.matrix().row(r)) s += std::abs(v);
        bound = std::max(bound, s);
    }
    EigenPair e;
    if (!(bound > threshold)) {
        e.vectors = Matrix(n, 0);
        return e;
    }
    Matrix a = m.matrix();
    std::vector<double> w(n);
    Matrix z(n, n);
    std::vector<lapack_int> support(2 * n);
    lapack_int found = 0;
    const auto ni = static_cast<lapack_int>(n);
    const lapack_int info =
        LAPACKE_dsyevr(LAPACK_ROW_MAJOR, 'V', 'V', 'U', ni, a.data(), ni, threshold, 2.0 * bound, 0, 0,
                       0.0, &found, w.data(), z.data(), ni, support.data());
    if (info < 0) throw std::invalid_argument("sym_eig_above: illegal argument " + std::to_string(-info));
    if (info > 0) throw ConvergenceError("sym_eig_above: eigensolver failed to converge", info);
    const auto k = static_cast<std::size_t>(found);
    e.values.assign(w.begin(), w.begin() + static_cast<std::ptrdiff_t>(k));
    std::reverse(e.values.begin(), e.values.end());
    e.vectors = Matrix(n, k);
    for (std::size_t r = 0; r < n; ++r)
        for (std::size_t j = 0; j < k; ++j) e.vectors(r, j) = z(r, k - 1 - j);
    return e;
}

SymMatrix hadamard(const SymMatrix& a, const SymMatrix& b) {
    if (a.n() != b.n())
        throw std::invalid_argument("hadamard: dimension mismatch (" + std::to_string(a.n()) +
                                    " vs " + std::to_string(b.n()) + ")");
    Matrix out(a.n(), a.n());
    simd::kernels().hadamard(a.data(), b.data(), out.data(), out.size());
    return SymMatrix(std::move(out));
}

NormalizedGram trace_normalize(const SymMatrix& k) {
    const double tr = k.trace();
    if (!(tr > 0.0)) throw std::domain_error("trace_normalize: trace must be positive");
    Matrix m = k.matrix();
    const double inv = 1.0 / tr;
    for (double& v : m.values()) v *= inv;
    return NormalizedGram(SymMatrix(std::move(m)));
}

SymMatrix spectral_grad(const EigenPair& eig, const std::function<double(double)>& fprime) {
    const std::size_t n = eig.vectors.rows();
    std::vector<std::size_t> keep;
    std::vector<double> weights;
    for (std::size_t j = 0; j < eig.values.size(); ++j) {
        const double w = fprime(eig.values[j]);
        if (w != 0.0) {
            keep.push_back(j);
            weights.push_back(w);
        }
    }
    Matrix out(n, n);
    if (keep.empty()) return SymMatrix(std::move(out));

    const std::size_t r = keep.size();
    Matrix v(n, r), scaled(n, r);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t c = 0; c < r; ++c) {
            const double x = eig.vectors(i, keep[c]);
            v(i, c) = x;
            scaled(i, c) = x * weights[c];
        }
    }
    cblas_dgemm(CblasRowMajor, CblasNoTrans, CblasTrans, static_cast<int>(n), static_cast<int>(n),
                static_cast<int>(r), 1.0, scaled.data(), static_cast<int>(r), v.data(),
                static_cast<int>(r), 0.0, out.data(), static_cast<int>(n));
    return SymMatrix(std::move(out));
}

SymMatrix spectral_grad(const SymMatrix& m, const std::function<double(double)>& fprime) {
    return spectral_grad(sym_eig(m), fprime);
}

double frobenius_dot(const SymMatrix& a, const SymMatrix& b) {
    require(a.n() == b.n(), "frobenius_dot: dimension mismatch");
    return simd::kernels().dot(a.data(), b.data(), a.matrix().size());
}

}  // namespace ddica
