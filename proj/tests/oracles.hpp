#pragma once

// Reference implementations used as test oracles. Deliberately naive and
// independent of the BLAS/LAPACK-backed library code.

#include <cmath>
#include <vector>

namespace oracle {

// Cyclic Jacobi eigenvalues of a dense symmetric matrix (row-major).
inline std::vector<double> jacobi_eigenvalues(std::vector<double> a, std::size_t n) {
    for (int sweep = 0; sweep < 100; ++sweep) {
        double off = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = i + 1; j < n; ++j) off += a[i * n + j] * a[i * n + j];
        if (off < 1e-30) break;
        for (std::size_t p = 0; p < n; ++p)
            for (std::size_t q = p + 1; q < n; ++q) {
                const double apq = a[p * n + q];
                if (std::abs(apq) < 1e-300) continue;
                const double theta = (a[q * n + q] - a[p * n + p]) / (2.0 * apq);
                const double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0), s = t * c;
                for (std::size_t k = 0; k < n; ++k) {
                    const double akp = a[k * n + p], akq = a[k * n + q];
                    a[k * n + p] = c * akp - s * akq;
                    a[k * n + q] = s * akp + c * akq;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    const double apk = a[p * n + k], aqk = a[q * n + k];
                    a[p * n + k] = c * apk - s * aqk;
                    a[q * n + k] = s * apk + c * aqk;
                }
            }
    }
    std::vector<double> ev(n);
    for (std::size_t i = 0; i < n; ++i) ev[i] = a[i * n + i];
    return ev;
}

// Unit-trace Gaussian Gram of the Hadamard product over the given channels.
inline std::vector<double> joint_gram(const std::vector<std::vector<double>>& channels, double sigma) {
    const std::size_t n = channels.front().size();
    std::vector<double> k(n * n, 1.0);
    for (const auto& x : channels)
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j)
                k[i * n + j] *= std::exp(-(x[i] - x[j]) * (x[i] - x[j]) / (2.0 * sigma * sigma));
    double tr = 0.0;
    for (std::size_t i = 0; i < n; ++i) tr += k[i * n + i];
    for (double& v : k) v /= tr;
    return k;
}

inline double renyi_bits(const std::vector<double>& gram, std::size_t n, double alpha) {
    double s = 0.0;
    for (double l : jacobi_eigenvalues(gram, n))
        if (l >= 1e-12) s += std::pow(l, alpha);
    return std::log2(s) / (1.0 - alpha);
}

inline double entropy_of(const std::vector<std::vector<double>>& channels, double sigma, double alpha) {
    return renyi_bits(joint_gram(channels, sigma), channels.front().size(), alpha);
}

}  // namespace oracle
