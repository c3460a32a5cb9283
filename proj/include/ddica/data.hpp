#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "ddica/matrix.hpp"

namespace ddica {

enum class Nonlinearity { tanh, cubic_avg, exp };

double apply_nonlinearity(Nonlinearity f, double u);
std::string to_string(Nonlinearity f);

// Post-nonlinear mixture: x_j = f_j((M s)_j).
struct PnlSpec {
    Matrix mixing = Matrix::identity(3);
    std::array<Nonlinearity, 3> nonlinearities{Nonlinearity::tanh, Nonlinearity::cubic_avg,
                                               Nonlinearity::exp};
    bool noise_channel = true;
};

// Mixing entries uniform(-1, 1), resampled until |det| > 0.3.
PnlSpec default_pnl_spec(std::uint64_t seed);

double determinant3(const Matrix& m);

// Pre-standardization PNL observations (N x 3) from sources (3 x N). Row j of
// the mixing matrix is shrunk so that max_n |(M s)_j| <= 4, which keeps exp()
// in range. Throws std::invalid_argument for a singular mixing matrix.
Matrix apply_pnl(const Matrix& sources, const PnlSpec& spec);

// apply_pnl followed by per-channel z-scoring.
Matrix generate_pnl(const Matrix& sources, const PnlSpec& spec);

// Per-column z-score (population std). Constant columns become zeros.
Matrix zscore(const Matrix& m);
std::vector<double> zscore(std::vector<double> v);

// Seeded speech-like test signal: a glottal-pulse-rich harmonic series with a
// wandering pitch, gated by syllable envelopes separated by pauses. Heavy
// tailed like real speech; not a substitute for recorded audio.
std::vector<double> speech_surrogate(std::size_t n, std::uint64_t seed, double pitch_hz,
                                     double sample_rate = 16000.0);

// Three PNL sources (3 x n): two speech surrogates and uniform(-1, 1) noise,
// each z-scored.
Matrix synthetic_pnl_sources(std::size_t n, std::uint64_t seed);

// Two recorded signals plus uniform(-1, 1) noise, each z-scored; both signals
// are truncated to n samples (or their common length when n == 0).
Matrix pnl_sources_from_signals(const std::vector<double>& a, const std::vector<double>& b,
                                std::size_t n, std::uint64_t seed);

struct HsiScene {
    std::size_t rows = 0;
    std::size_t cols = 0;
    Matrix cube;        // pixels x bands
    Matrix endmembers;  // sources x bands; may be empty for loaded scenes
    Matrix abundances;  // pixels x sources; may be empty when no ground truth
    std::vector<std::string> names;

    std::size_t pixels() const noexcept { return cube.rows(); }
    std::size_t bands() const noexcept { return cube.cols(); }
};

// Throws std::invalid_argument when abundances are off the simplex or d <= p.
void validate_scene(const HsiScene& scene);

struct SyntheticHuOptions {
    double snr_db = 30.0;
    bool noiseless = false;
    double dirichlet_concentration = 0.5;
    double min_spectral_angle_deg = 15.0;
};

HsiScene generate_synthetic_hu(std::size_t p, std::size_t d, std::size_t n_pixels,
                               std::uint64_t seed, const SyntheticHuOptions& opts = {});

double spectral_angle_deg(std::span<const double> a, std::span<const double> b);

}  // namespace ddica
