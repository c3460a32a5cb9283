#pragma once

#include <cstddef>
#include <functional>
#include <vector>

#include "ddica/matrix.hpp"

namespace ddica {

// Square matrix that is exactly symmetric: the constructor averages the input
// with its transpose, so entries(i,j) == entries(j,i) bit for bit.
class SymMatrix {
public:
    SymMatrix() = default;
    explicit SymMatrix(Matrix m);
    explicit SymMatrix(std::size_t n) : m_(n, n) {}

    std::size_t n() const noexcept { return m_.rows(); }
    double operator()(std::size_t i, std::size_t j) const noexcept { return m_(i, j); }
    const Matrix& matrix() const noexcept { return m_; }
    const double* data() const noexcept { return m_.data(); }
    double trace() const { return m_.trace(); }

private:
    Matrix m_;
};

// Symmetric PSD matrix with unit trace.
class NormalizedGram {
public:
    std::size_t n() const noexcept { return m_.n(); }
    double operator()(std::size_t i, std::size_t j) const noexcept { return m_(i, j); }
    const SymMatrix& matrix() const noexcept { return m_; }
    const double* data() const noexcept { return m_.data(); }

private:
    friend NormalizedGram trace_normalize(const SymMatrix& k);
    explicit NormalizedGram(SymMatrix m) : m_(std::move(m)) {}
    SymMatrix m_;
};

struct EigenPair {
    std::vector<double> values;  // descending
    Matrix vectors;              // column j pairs with values[j]
};

// Eigenvalues below this are clamped before logarithms and fractional powers.
inline constexpr double kEigenClamp = 1e-12;

// Full symmetric eigendecomposition; eigenvalues descending. Throws
// ConvergenceError when the solver does not converge.
EigenPair sym_eig(const SymMatrix& m);

// Eigenvalues only, descending.
std::vector<double> sym_eigvals(const SymMatrix& m);

// sym_eig for matrices that must be PSD (Gram matrices). Eigenvalues below
// -1e-10 * trace throw std::domain_error; smaller negatives are clamped to 0.
EigenPair psd_eig(const SymMatrix& m);
std::vector<double> psd_eigvals(const SymMatrix& m);

// Eigenpairs with eigenvalue > threshold only, descending; vectors is n x m.
// Much cheaper than sym_eig when few eigenvalues clear the threshold.
EigenPair sym_eig_above(const SymMatrix& m, double threshold);

SymMatrix hadamard(const SymMatrix& a, const SymMatrix& b);

// k / trace(k). Throws std::domain_error when trace(k) <= 0.
NormalizedGram trace_normalize(const SymMatrix& k);

// Gradient of tr f(M) with respect to M: sum_n f'(lambda_n) v_n v_n^T.
// Terms whose derivative is exactly zero are skipped.
SymMatrix spectral_grad(const SymMatrix& m, const std::function<double(double)>& fprime);
SymMatrix spectral_grad(const EigenPair& eig, const std::function<double(double)>& fprime);

// Frobenius inner product sum_ij a_ij b_ij.
double frobenius_dot(const SymMatrix& a, const SymMatrix& b);

}  // namespace ddica
