#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "ddica/matrix.hpp"
#include "ddica/network.hpp"

namespace ddica {

enum class ExperimentKind { pnl, hu };

std::string to_string(ExperimentKind k);
ExperimentKind parse_kind(const std::string& s);

struct UnmixConfig {
    ExperimentKind kind = ExperimentKind::pnl;
    double alpha = 0.75;
    double sigma = 0.1584;
    std::size_t batch = 2000;
    std::vector<std::size_t> hidden{32, 32, 32};
    std::size_t out_units = 3;
    double whiten_eps = 1e-5;  // PNL only
    AdamConfig adam;
    std::size_t iterations = 1500;
    std::size_t restarts = 50;  // ensemble T
    std::size_t clusters = 0;   // ensemble k; 0 means out_units
    std::uint64_t seed = 0;
    std::size_t workers = 1;

    static UnmixConfig pnl_defaults();
    static UnmixConfig hu_defaults(std::size_t sources);

    std::size_t cluster_count() const { return clusters == 0 ? out_units : clusters; }
    // Throws ConfigError.
    void validate() const;
};

// PNL: dense/ReLU stack, linear last dense layer, whitening.
// HU: dense/ReLU stack, softmax.
std::vector<LayerSpec> build_architecture(const UnmixConfig& cfg, std::size_t input_dim);

struct TrainRun {
    UnmixConfig config;
    std::vector<double> history;  // batch TC (bits) before each update
    std::vector<LayerSpec> specs;
    NetworkParams params;
    std::uint64_t seed = 0;
    double seconds = 0.0;
};

using ProgressFn = std::function<void(std::size_t iteration, double tc)>;

// Adam on mini-batch TC. Batches are consecutive slices of a per-epoch
// shuffle. Throws DivergenceError on a non-finite objective or gradient.
TrainRun train_once(const UnmixConfig& cfg, const Matrix& data, std::uint64_t seed,
                    const ProgressFn& progress = {});

// Full-data forward pass; whitening uses full-data statistics. N x p.
Matrix predict_sources(const TrainRun& run, const Matrix& data);

struct KMeansResult {
    Matrix centers;                    // k x dim
    std::vector<std::size_t> assignments;
    std::vector<double> objective;     // after each assignment step
    std::size_t iterations = 0;
};

// Rows of points are the items. k-means++ seeding, Lloyd to a fixed point or
// max_iter. An empty cluster is reseeded with the point farthest from its
// center. Throws std::logic_error if the objective ever increases.
KMeansResult kmeans(const Matrix& points, std::size_t k, std::uint64_t seed,
                    std::size_t max_iter = 300);

struct EnsembleResult {
    Matrix centers;                    // k x N, one source estimate per row
    std::vector<std::size_t> counts;   // members per cluster
    std::size_t restarts = 0;
    std::vector<Matrix> run_sources;   // per restart, N x p
    std::vector<std::vector<double>> histories;
    std::vector<std::size_t> assignments;  // per vector, restart-major
};

// Restart i trains with seed cfg.seed + i; up to cfg.workers restarts run in
// parallel. HU vectors are clustered raw, PNL vectors after z-scoring.
EnsembleResult ensemble_unmix(const UnmixConfig& cfg, const Matrix& data,
                              const ProgressFn& progress = {});

// p*T x N matrix of source vectors in clustering space.
Matrix ensemble_vectors(const UnmixConfig& cfg, const std::vector<Matrix>& run_sources);

}  // namespace ddica
