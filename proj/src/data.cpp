#include "ddica/data.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>

namespace ddica {

double apply_nonlinearity(Nonlinearity f, double u) {
    switch (f) {
        case Nonlinearity::tanh: return std::tanh(u);
        case Nonlinearity::cubic_avg: return 0.5 * (u + u * u * u);
        case Nonlinearity::exp: return std::exp(u);
    }
    throw std::invalid_argument("unknown nonlinearity");
}

std::string to_string(Nonlinearity f) {
    switch (f) {
        case Nonlinearity::tanh: return "tanh";
        case Nonlinearity::cubic_avg: return "cubic_avg";
        case Nonlinearity::exp: return "exp";
    }
    return "unknown";
}

double determinant3(const Matrix& m) {
    require(m.rows() == 3 && m.cols() == 3, "determinant3: need a 3x3 matrix");
    return m(0, 0) * (m(1, 1) * m(2, 2) - m(1, 2) * m(2, 1)) -
           m(0, 1) * (m(1, 0) * m(2, 2) - m(1, 2) * m(2, 0)) +
           m(0, 2) * (m(1, 0) * m(2, 1) - m(1, 1) * m(2, 0));
}

PnlSpec default_pnl_spec(std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    PnlSpec spec;
    do {
        for (double& v : spec.mixing.values()) v = u(rng);
    } while (std::abs(determinant3(spec.mixing)) <= 0.3);
    return spec;
}

Matrix apply_pnl(const Matrix& sources, const PnlSpec& spec) {
    require(sources.rows() == 3, "apply_pnl: sources must be 3 x N");
    require(sources.cols() >= 1, "apply_pnl: no samples");
    const double det = determinant3(spec.mixing);
    if (!(std::abs(det) > 1e-12)) throw std::invalid_argument("apply_pnl: singular mixing matrix");
    for (double v : sources.values())
        if (!std::isfinite(v)) throw std::invalid_argument("apply_pnl: non-finite source");

    const Matrix mixed = matmul(sources, spec.mixing, true, true);  // N x 3
    const std::size_t n = mixed.rows();
    Matrix out(n, 3);
    for (std::size_t j = 0; j < 3; ++j) {
        double peak = 0.0;
        for (std::size_t r = 0; r < n; ++r) peak = std::max(peak, std::abs(mixed(r, j)));
        const double shrink = peak > 4.0 ? 4.0 / peak : 1.0;
        for (std::size_t r = 0; r < n; ++r)
            out(r, j) = apply_nonlinearity(spec.nonlinearities[j], shrink * mixed(r, j));
    }
    return out;
}

Matrix generate_pnl(const Matrix& sources, const PnlSpec& spec) {
    return zscore(apply_pnl(sources, spec));
}

std::vector<double> zscore(std::vector<double> v) {
    if (v.empty()) return v;
    double mean = 0.0;
    for (double x : v) mean += x;
    mean /= static_cast<double>(v.size());
    double var = 0.0;
    for (double x : v) var += (x - mean) * (x - mean);
    var /= static_cast<double>(v.size());
    const double sd = std::sqrt(var);
    const bool constant = !(sd > 1e-300) || sd <= 1e-12 * std::max(1.0, std::abs(mean));
    for (double& x : v) x = constant ? 0.0 : (x - mean) / sd;
    return v;
}

Matrix zscore(const Matrix& m) {
    Matrix out(m.rows(), m.cols());
    for (std::size_t c = 0; c < m.cols(); ++c) out.set_column(c, zscore(m.column(c)));
    return out;
}

std::vector<double> speech_surrogate(std::size_t n, std::uint64_t seed, double pitch_hz,
                                     double sample_rate) {
    require(pitch_hz > 0.0 && sample_rate > 2.0 * pitch_hz, "speech_surrogate: bad pitch");
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::uniform_real_distribution<double> unit(0.0, 1.0);

    std::vector<double> out(n, 0.0);
    double phase = 0.0;
    double log_pitch = 0.0;
    std::size_t pos = 0;
    while (pos < n) {
        const auto syllable = static_cast<std::size_t>(sample_rate * (0.08 + 0.22 * unit(rng)));
        const auto pause = static_cast<std::size_t>(sample_rate * (0.02 + 0.12 * unit(rng)));
        const double gain = 0.3 + 0.7 * unit(rng);
        // Per-syllable formant tilt: weights harmonics differently each time.
        const double tilt = 0.6 + 0.8 * unit(rng);
        for (std::size_t k = 0; k < syllable && pos < n; ++k, ++pos) {
            log_pitch += 0.002 * gauss(rng) - 0.001 * log_pitch;
            const double f0 = pitch_hz * std::exp(log_pitch);
            phase += 2.0 * std::numbers::pi * f0 / sample_rate;
            if (phase > 2.0 * std::numbers::pi) phase -= 2.0 * std::numbers::pi;
            double v = 0.0;
            for (int h = 1; h * f0 < 0.45 * sample_rate && h <= 24; ++h)
                v += std::sin(h * phase) / std::pow(static_cast<double>(h), tilt);
            const double w =
                0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(k) /
                                     static_cast<double>(syllable));
            out[pos] = gain * w * v + 0.01 * gauss(rng);
        }
        for (std::size_t k = 0; k < pause && pos < n; ++k, ++pos) out[pos] = 0.01 * gauss(rng);
    }
    return zscore(std::move(out));
}

namespace {

std::vector<double> uniform_noise(std::size_t n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::vector<double> v(n);
    for (double& x : v) x = u(rng);
    return zscore(std::move(v));
}

Matrix stack_rows(const std::vector<double>& a, const std::vector<double>& b,
                  const std::vector<double>& c) {
    const std::size_t n = a.size();
    Matrix m(3, n);
    std::copy(a.begin(), a.end(), m.row(0).begin());
    std::copy(b.begin(), b.end(), m.row(1).begin());
    std::copy(c.begin(), c.end(), m.row(2).begin());
    return m;
}

}  // namespace

Matrix synthetic_pnl_sources(std::size_t n, std::uint64_t seed) {
    require(n >= 2, "synthetic_pnl_sources: need at least 2 samples");
    return stack_rows(speech_surrogate(n, seed * 3 + 1, 120.0),
                      speech_surrogate(n, seed * 3 + 2, 210.0), uniform_noise(n, seed * 3 + 3));
}

Matrix pnl_sources_from_signals(const std::vector<double>& a, const std::vector<double>& b,
                                std::size_t n, std::uint64_t seed) {
    const std::size_t common = std::min(a.size(), b.size());
    if (n == 0) n = common;
    require(n >= 2, "pnl_sources_from_signals: need at least 2 samples");
    if (n > common)
        throw std::invalid_argument("pnl_sources_from_signals: signals hold " +
                                    std::to_string(common) + " samples, " + std::to_string(n) +
                                    " requested");
    return stack_rows(zscore(std::vector<double>(a.begin(), a.begin() + n)),
                      zscore(std::vector<double>(b.begin(), b.begin() + n)),
                      uniform_noise(n, seed));
}

double spectral_angle_deg(std::span<const double> a, std::span<const double> b) {
    require(a.size() == b.size(), "spectral_angle_deg: length mismatch");
    double ab = 0.0, aa = 0.0, bb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        ab += a[i] * b[i];
        aa += a[i] * a[i];
        bb += b[i] * b[i];
    }
    require(aa > 0.0 && bb > 0.0, "spectral_angle_deg: zero vector");
    const double c = std::clamp(ab / std::sqrt(aa * bb), -1.0, 1.0);
    return std::acos(c) * 180.0 / std::numbers::pi;
}

void validate_scene(const HsiScene& scene) {
    require(scene.rows * scene.cols == scene.pixels(), "scene: rows x cols != pixel count");
    if (scene.abundances.empty()) return;
    const std::size_t p = scene.abundances.cols();
    require(scene.abundances.rows() == scene.pixels(), "scene: abundance rows != pixels");
    require(scene.bands() > p, "scene: need more bands than sources");
    if (!scene.endmembers.empty())
        require(scene.endmembers.rows() == p && scene.endmembers.cols() == scene.bands(),
                "scene: endmember shape mismatch");
    for (std::size_t r = 0; r < scene.pixels(); ++r) {
        double s = 0.0;
        for (double a : scene.abundances.row(r)) {
            require(a >= 0.0, "scene: negative abundance at pixel " + std::to_string(r));
            s += a;
        }
        require(std::abs(s - 1.0) <= 1e-6, "scene: abundances at pixel " + std::to_string(r) +
                                               " sum to " + std::to_string(s));
    }
}

namespace {

// Sum of a few Gaussian absorption/reflection bumps over a positive baseline.
std::vector<double> random_spectrum(std::size_t d, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::vector<double> s(d, 0.05 + 0.1 * unit(rng));
    const int bumps = 2 + static_cast<int>(unit(rng) * 3.0);
    for (int b = 0; b < bumps; ++b) {
        const double centre = unit(rng) * static_cast<double>(d - 1);
        const double width = (0.04 + 0.12 * unit(rng)) * static_cast<double>(d);
        const double height = 0.2 + 0.8 * unit(rng);
        for (std::size_t i = 0; i < d; ++i) {
            const double z = (static_cast<double>(i) - centre) / width;
            s[i] += height * std::exp(-0.5 * z * z);
        }
    }
    return s;
}

}  // namespace

HsiScene generate_synthetic_hu(std::size_t p, std::size_t d, std::size_t n_pixels,
                               std::uint64_t seed, const SyntheticHuOptions& opts) {
    require(p >= 2, "generate_synthetic_hu: need at least 2 endmembers");
    require(d > p, "generate_synthetic_hu: need more bands than endmembers");
    require(n_pixels >= 2, "generate_synthetic_hu: need at least 2 pixels");
    require(opts.dirichlet_concentration > 0.0, "generate_synthetic_hu: concentration must be > 0");

    std::mt19937_64 rng(seed);
    HsiScene scene;
    scene.rows = 1;
    for (std::size_t r = 1; r * r <= n_pixels; ++r)
        if (n_pixels % r == 0) scene.rows = r;
    scene.cols = n_pixels / scene.rows;

    scene.endmembers = Matrix(p, d);
    std::size_t placed = 0;
    for (int attempt = 0; placed < p; ++attempt) {
        if (attempt > 10000)
            throw std::runtime_error("generate_synthetic_hu: could not place well-separated endmembers");
        const auto s = random_spectrum(d, rng);
        bool ok = true;
        for (std::size_t q = 0; q < placed && ok; ++q)
            ok = spectral_angle_deg(s, scene.endmembers.row(q)) >= opts.min_spectral_angle_deg;
        if (ok) std::copy(s.begin(), s.end(), scene.endmembers.row(placed++).begin());
    }
    for (std::size_t q = 0; q < p; ++q) scene.names.push_back("em" + std::to_string(q));

    std::gamma_distribution<double> gamma(opts.dirichlet_concentration, 1.0);
    scene.abundances = Matrix(n_pixels, p);
    for (std::size_t r = 0; r < n_pixels; ++r) {
        auto row = scene.abundances.row(r);
        double sum = 0.0;
        while (!(sum > 0.0)) {
            sum = 0.0;
            for (double& a : row) sum += (a = gamma(rng));
        }
        for (double& a : row) a /= sum;
    }

    scene.cube = matmul(scene.abundances, scene.endmembers);
    if (!opts.noiseless) {
        std::normal_distribution<double> gauss(0.0, 1.0);
        Matrix noise(n_pixels, d);
        for (double& v : noise.values()) v = gauss(rng);
        const double signal_power = std::pow(frobenius_norm(scene.cube), 2);
        const double noise_power = std::pow(frobenius_norm(noise), 2);
        const double scale = std::sqrt(signal_power / (noise_power * std::pow(10.0, opts.snr_db / 10.0)));
        for (std::size_t i = 0; i < noise.size(); ++i) scene.cube.data()[i] += scale * noise.data()[i];
    }
    return scene;
}

}  // namespace ddica
