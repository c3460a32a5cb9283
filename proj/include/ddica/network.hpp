#pragma once

// Feed-forward unmixing network with hand-written backpropagation.
//
// Supported layers: dense (y = x W^T + b), ReLU, softmax and ZCA batch
// whitening. Softmax and whitening may only appear once, as the last layer.
// The whitening layer normalizes with the statistics of the batch it sees, so
// a forward pass over the full dataset whitens with full-dataset statistics.

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "ddica/linalg.hpp"
#include "ddica/matrix.hpp"

namespace ddica {

enum class LayerKind { dense, relu, softmax, whitening };

struct LayerSpec {
    LayerKind kind = LayerKind::dense;
    std::size_t in_dim = 0;   // dense only
    std::size_t out_dim = 0;  // dense only
    double eps = 1e-5;        // whitening only

    static LayerSpec dense(std::size_t in, std::size_t out) { return {LayerKind::dense, in, out, 0.0}; }
    static LayerSpec relu() { return {LayerKind::relu, 0, 0, 0.0}; }
    static LayerSpec softmax() { return {LayerKind::softmax, 0, 0, 0.0}; }
    static LayerSpec whitening(double eps = 1e-5) { return {LayerKind::whitening, 0, 0, eps}; }

    bool operator==(const LayerSpec&) const = default;
};

// Throws std::invalid_argument when the chain is malformed.
void validate_specs(std::span<const LayerSpec> specs);
std::size_t input_dim(std::span<const LayerSpec> specs);
std::size_t output_dim(std::span<const LayerSpec> specs);

struct DenseParams {
    Matrix weight;             // out_dim x in_dim
    std::vector<double> bias;  // out_dim

    bool operator==(const DenseParams&) const = default;
};

// One DenseParams per dense layer, in chain order.
struct NetworkParams {
    std::vector<DenseParams> dense;
    std::uint64_t seed = 0;

    std::size_t parameter_count() const;
    // Flat views over every weight and bias, in a fixed order.
    std::vector<double*> parameter_pointers();

    bool operator==(const NetworkParams&) const = default;
};

using NetworkGrads = std::vector<DenseParams>;

// Glorot-uniform weights, zero biases. Identical seeds give identical params.
NetworkParams init_network(std::span<const LayerSpec> specs, std::uint64_t seed);

struct WhiteningCache {
    Matrix centered;   // Y - mean
    EigenPair cov;     // eigenpairs of the batch covariance
    Matrix transform;  // V diag((lambda + eps)^-1/2) V^T
};

struct BatchActivations {
    std::vector<Matrix> inputs;  // input of every layer
    Matrix output;
    WhiteningCache whitening;
    std::uint64_t params_fingerprint = 0;
};

struct ForwardResult {
    Matrix outputs;
    BatchActivations cache;
};

ForwardResult forward(const NetworkParams& params, std::span<const LayerSpec> specs,
                      const Matrix& batch);

// Gradients of a scalar loss with respect to every dense parameter, given
// d loss / d outputs. Throws std::logic_error if params changed since forward.
NetworkGrads backward(const NetworkParams& params, std::span<const LayerSpec> specs,
                      const BatchActivations& cache, const Matrix& grad_out);

struct AdamConfig {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

struct AdamState {
    NetworkGrads m;
    NetworkGrads v;
    std::size_t step = 0;
};

// Standard bias-corrected Adam. With beta1 = beta2 = 0 every coordinate moves
// by lr * g / (|g| + eps), i.e. sign-scaled SGD.
void adam_step(NetworkParams& params, const NetworkGrads& grads, AdamState& state,
               const AdamConfig& cfg);

// Text checkpoint with shape headers; values round-trip exactly.
void save_checkpoint(const std::filesystem::path& path, std::span<const LayerSpec> specs,
                     const NetworkParams& params);

struct Checkpoint {
    std::vector<LayerSpec> specs;
    NetworkParams params;
};
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace ddica
