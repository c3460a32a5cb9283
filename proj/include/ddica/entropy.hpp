#pragma once

// Matrix-based Renyi alpha-order entropy estimator on scalar channels, the
// total correlation built from it, and its gradient with respect to the raw
// channel samples. All entropies are in bits.

#include <cstddef>
#include <span>
#include <vector>

#include "ddica/linalg.hpp"
#include "ddica/matrix.hpp"

namespace ddica {

// One scalar channel observed over a mini-batch of N >= 2 samples.
struct ChannelBatch {
    std::vector<double> values;
    std::size_t channel_id = 0;

    ChannelBatch() = default;
    ChannelBatch(std::vector<double> v, std::size_t id = 0);
    std::size_t size() const noexcept { return values.size(); }
};

struct EntropyConfig {
    double alpha = 1.01;  // Renyi order, > 0 and != 1
    double sigma = 0.1;   // Gaussian kernel width

    void validate() const;
};

// Columns of a sample matrix as channels.
std::vector<ChannelBatch> channels_from_columns(const Matrix& samples);

// K(n,m) = exp(-(x_n - x_m)^2 / (2 sigma^2)), normalized to unit trace.
NormalizedGram gaussian_gram(const ChannelBatch& c, double sigma);

double renyi_entropy(const NormalizedGram& a, double alpha);

// Entropy of the trace-normalized Hadamard product of the grams.
double joint_entropy(std::span<const NormalizedGram> grams, double alpha);

// sum_i H(channel_i) - H(all channels).
double total_correlation(std::span<const ChannelBatch> channels, const EntropyConfig& cfg);
double total_correlation(const Matrix& samples, const EntropyConfig& cfg);

// d TC / d x_i^n for every channel i and sample n.
std::vector<std::vector<double>> tc_gradient(std::span<const ChannelBatch> channels,
                                             const EntropyConfig& cfg);

struct TcEvaluation {
    double tc = 0.0;
    std::vector<double> marginal;  // H(channel_i)
    double joint = 0.0;
    Matrix gradient;  // N x p, same layout as the sample matrix; empty unless requested
};

// Value and (optionally) gradient in one pass, sharing eigendecompositions.
TcEvaluation evaluate_tc(const Matrix& samples, const EntropyConfig& cfg, bool with_gradient);

// Diagnostic: sum_i [H(x_i) + H(x_{-i}) - H(x)], where x_{-i} joins every
// channel except i. Never used as a training objective.
double pairwise_dependence(std::span<const ChannelBatch> channels, const EntropyConfig& cfg);

// Per-channel terms of pairwise_dependence.
std::vector<double> pairwise_dependence_terms(std::span<const ChannelBatch> channels,
                                              const EntropyConfig& cfg);

// Silverman's rule: n^(-1/(4+p)).
double silverman_width(std::size_t n, std::size_t p);

}  // namespace ddica
