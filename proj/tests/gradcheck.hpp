#pragma once

// Central finite differences of TC(network(batch)) against backpropagation.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <random>
#include <span>
#include <vector>

#include "ddica/entropy.hpp"
#include "ddica/network.hpp"

namespace gradcheck {

struct Result {
    std::size_t checked = 0;
    std::size_t failures = 0;
    std::size_t kink_retries = 0;  // stencils that crossed a ReLU kink
    double worst_rel = 0.0;
};

// Sign pattern of every ReLU input; a change between stencil points means the
// central difference straddles a kink.
inline std::vector<bool> relu_pattern(std::span<const ddica::LayerSpec> specs, const ddica::BatchActivations& cache) {
    std::vector<bool> pattern;
    for (std::size_t l = 0; l < specs.size(); ++l)
        if (specs[l].kind == ddica::LayerKind::relu)
            for (double v : cache.inputs[l].values()) pattern.push_back(v > 0.0);
    return pattern;
}

// Relative error is |analytic - fd| / max(|analytic|, |fd|, floor); the floor
// keeps finite-difference round-off (~1e-9 absolute at h = 1e-5) from
// dominating near-zero derivatives. A stencil that crosses a ReLU kink is
// retried with h / 10, up to twice. max_coords == 0 checks every parameter;
// otherwise a seeded subset is drawn.
inline Result network_tc(std::span<const ddica::LayerSpec> specs, ddica::NetworkParams params,
                         const ddica::Matrix& batch, const ddica::EntropyConfig& cfg, double h = 1e-5,
                         double rel_tol = 1e-3, std::size_t max_coords = 0, std::uint64_t seed = 0,
                         double floor = 1e-4) {
    using namespace ddica;
    const ForwardResult fwd = forward(params, specs, batch);
    const TcEvaluation tc = evaluate_tc(fwd.outputs, cfg, true);
    const NetworkGrads grads = backward(params, specs, fwd.cache, tc.gradient);

    std::vector<double> analytic;
    for (const auto& d : grads) {
        analytic.insert(analytic.end(), d.weight.values().begin(), d.weight.values().end());
        analytic.insert(analytic.end(), d.bias.begin(), d.bias.end());
    }
    std::vector<double*> ptrs = params.parameter_pointers();
    std::vector<std::size_t> coords(ptrs.size());
    std::iota(coords.begin(), coords.end(), std::size_t{0});
    if (max_coords != 0 && max_coords < coords.size()) {
        std::mt19937_64 rng(seed);
        std::shuffle(coords.begin(), coords.end(), rng);
        coords.resize(max_coords);
    }

    const std::vector<bool> base = relu_pattern(specs, fwd.cache);
    Result r;
    for (std::size_t i : coords) {
        const double saved = *ptrs[i];
        double fd = 0.0;
        double step = h;
        for (int attempt = 0; attempt < 3; ++attempt, step /= 10.0) {
            *ptrs[i] = saved + step;
            const ForwardResult up = forward(params, specs, batch);
            *ptrs[i] = saved - step;
            const ForwardResult down = forward(params, specs, batch);
            *ptrs[i] = saved;
            fd = (total_correlation(up.outputs, cfg) - total_correlation(down.outputs, cfg)) / (2.0 * step);
            if (relu_pattern(specs, up.cache) == base && relu_pattern(specs, down.cache) == base) break;
            if (attempt < 2) ++r.kink_retries;
        }
        const double scale = std::max({std::abs(fd), std::abs(analytic[i]), floor});
        const double rel = std::abs(fd - analytic[i]) / scale;
        r.worst_rel = std::max(r.worst_rel, rel);
        ++r.checked;
        if (rel > rel_tol) ++r.failures;
    }
    return r;
}

// d TC / d samples from tc_gradient against central differences on every entry.
inline Result samples_tc(const ddica::Matrix& samples, const ddica::EntropyConfig& cfg, double h = 1e-5,
                         double rel_tol = 1e-3, double floor = 1e-4) {
    using namespace ddica;
    const auto channels = channels_from_columns(samples);
    const auto analytic = tc_gradient(channels, cfg);
    Matrix x = samples;
    Result r;
    for (std::size_t n = 0; n < x.rows(); ++n)
        for (std::size_t c = 0; c < x.cols(); ++c) {
            const double saved = x(n, c);
            x(n, c) = saved + h;
            const double up = total_correlation(x, cfg);
            x(n, c) = saved - h;
            const double down = total_correlation(x, cfg);
            x(n, c) = saved;
            const double fd = (up - down) / (2.0 * h);
            const double an = analytic[c][n];
            const double rel = std::abs(fd - an) / std::max({std::abs(fd), std::abs(an), floor});
            r.worst_rel = std::max(r.worst_rel, rel);
            ++r.checked;
            if (rel > rel_tol) ++r.failures;
        }
    return r;
}

}  // namespace gradcheck
