#include "ddica/trainer.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <limits>
#include <mutex>
#include <numeric>
#include <random>
#include <thread>

#include "ddica/data.hpp"
#include "ddica/entropy.hpp"
#include "ddica/errors.hpp"

namespace ddica {

std::string to_string(ExperimentKind k) { return k == ExperimentKind::pnl ? "pnl" : "hu"; }

ExperimentKind parse_kind(const std::string& s) {
    if (s == "pnl") return ExperimentKind::pnl;
    if (s == "hu") return ExperimentKind::hu;
    throw ConfigError("kind must be 'pnl' or 'hu', got '" + s + "'");
}

UnmixConfig UnmixConfig::pnl_defaults() { return UnmixConfig{}; }

UnmixConfig UnmixConfig::hu_defaults(std::size_t sources) {
    UnmixConfig c;
    c.kind = ExperimentKind::hu;
    c.alpha = 1.01;
    c.sigma = 0.1;
    c.batch = 256;
    c.hidden = {64, 64, 64, 64, 64};
    c.out_units = sources;
    return c;
}

void UnmixConfig::validate() const {
    auto fail = [](const std::string& m) { throw ConfigError(m); };
    if (!(alpha > 0.0) || alpha == 1.0 || !std::isfinite(alpha)) fail("alpha must be > 0 and != 1");
    if (!(sigma > 0.0) || !std::isfinite(sigma)) fail("sigma must be > 0");
    if (batch < 2) fail("batch must be >= 2");
    if (out_units < 2) fail("out_units must be >= 2");
    for (auto h : hidden)
        if (h == 0) fail("hidden widths must be positive");
    if (kind == ExperimentKind::pnl && batch <= out_units) fail("batch must exceed out_units for whitening");
    if (!(whiten_eps >= 0.0)) fail("whiten_eps must be >= 0");
    if (!(adam.lr > 0.0)) fail("lr must be > 0");
    if (!(adam.beta1 >= 0.0 && adam.beta1 < 1.0)) fail("beta1 must be in [0, 1)");
    if (!(adam.beta2 >= 0.0 && adam.beta2 < 1.0)) fail("beta2 must be in [0, 1)");
    if (!(adam.eps > 0.0)) fail("adam_eps must be > 0");
    if (restarts < 1) fail("restarts must be >= 1");
    if (cluster_count() < out_units) fail("clusters must be >= out_units");
    if (cluster_count() > out_units * restarts) fail("clusters must be <= out_units * restarts");
    if (workers < 1) fail("workers must be >= 1");
}

std::vector<LayerSpec> build_architecture(const UnmixConfig& cfg, std::size_t input_dim) {
    require(input_dim >= 1, "build_architecture: input dimension must be >= 1");
    std::vector<LayerSpec> specs;
    std::size_t width = input_dim;
    for (std::size_t h : cfg.hidden) {
        specs.push_back(LayerSpec::dense(width, h));
        specs.push_back(LayerSpec::relu());
        width = h;
    }
    specs.push_back(LayerSpec::dense(width, cfg.out_units));
    if (cfg.kind == ExperimentKind::pnl)
        specs.push_back(LayerSpec::whitening(cfg.whiten_eps));
    else
        specs.push_back(LayerSpec::softmax());
    return specs;
}

namespace {

bool all_finite(std::span<const double> v) {
    return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

bool grads_finite(const NetworkGrads& g) {
    for (const auto& d : g)
        if (!all_finite(d.weight.values()) || !all_finite(d.bias)) return false;
    return true;
}

// Per-epoch shuffled index stream.
class BatchSampler {
public:
    BatchSampler(std::size_t n, std::uint64_t seed) : order_(n), rng_(seed) { reshuffle(); }

    std::vector<std::size_t> next(std::size_t batch) {
        if (pos_ + batch > order_.size()) reshuffle();
        std::vector<std::size_t> out(order_.begin() + static_cast<std::ptrdiff_t>(pos_),
                                     order_.begin() + static_cast<std::ptrdiff_t>(pos_ + batch));
        pos_ += batch;
        return out;
    }

private:
    void reshuffle() {
        std::iota(order_.begin(), order_.end(), std::size_t{0});
        std::shuffle(order_.begin(), order_.end(), rng_);
        pos_ = 0;
    }

    std::vector<std::size_t> order_;
    std::mt19937_64 rng_;
    std::size_t pos_ = 0;
};

}  // namespace

TrainRun train_once(const UnmixConfig& cfg, const Matrix& data, std::uint64_t seed,
                    const ProgressFn& progress) {
    cfg.validate();
    if (data.rows() < cfg.batch)
        throw DataError("data has " + std::to_string(data.rows()) + " rows, batch needs " +
                        std::to_string(cfg.batch));
    if (!all_finite(data.values())) throw DataError("data contains non-finite values");

    const auto start = std::chrono::steady_clock::now();
    TrainRun run;
    run.config = cfg;
    run.seed = seed;
    run.specs = build_architecture(cfg, data.cols());
    run.params = init_network(run.specs, seed);
    run.history.reserve(cfg.iterations);

    const EntropyConfig ecfg{cfg.alpha, cfg.sigma};
    BatchSampler sampler(data.rows(), seed ^ 0x5bd1e995ULL);
    AdamState adam;
    for (std::size_t it = 0; it < cfg.iterations; ++it) {
        const auto idx = sampler.next(cfg.batch);
        const Matrix batch = gather_rows(data, idx);
        ForwardResult fwd;
        TcEvaluation tc;
        try {
            fwd = forward(run.params, run.specs, batch);
            if (!all_finite(fwd.outputs.values()))
                throw DivergenceError("non-finite network output at iteration " + std::to_string(it), it);
            tc = evaluate_tc(fwd.outputs, ecfg, true);
        } catch (const ConvergenceError& e) {
            throw DivergenceError(std::string("numerical failure at iteration ") + std::to_string(it) + ": " +
                                      e.what(),
                                  it);
        }
        if (!std::isfinite(tc.tc) || !all_finite(tc.gradient.values()))
            throw DivergenceError("non-finite total correlation at iteration " + std::to_string(it), it);
        run.history.push_back(tc.tc);
        if (progress) progress(it, tc.tc);
        const NetworkGrads grads = backward(run.params, run.specs, fwd.cache, tc.gradient);
        if (!grads_finite(grads))
            throw DivergenceError("non-finite gradient at iteration " + std::to_string(it), it);
        adam_step(run.params, grads, adam, cfg.adam);
    }
    run.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return run;
}

Matrix predict_sources(const TrainRun& run, const Matrix& data) {
    if (data.rows() == 0) throw DataError("predict_sources: empty data");
    if (data.cols() != input_dim(run.specs))
        throw DataError("predict_sources: data has " + std::to_string(data.cols()) +
                        " columns, network expects " + std::to_string(input_dim(run.specs)));
    return forward(run.params, run.specs, data).outputs;
}

namespace {

double sq_dist(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
    return s;
}

}  // namespace

KMeansResult kmeans(const Matrix& points, std::size_t k, std::uint64_t seed, std::size_t max_iter) {
    const std::size_t n = points.rows(), dim = points.cols();
    require(k >= 1, "kmeans: k must be >= 1");
    require(n >= k, "kmeans: need at least k points (" + std::to_string(n) + " < " + std::to_string(k) + ")");
    require(dim >= 1, "kmeans: points have no coordinates");

    std::mt19937_64 rng(seed);
    KMeansResult res;
    res.centers = Matrix(k, dim);

    // k-means++ seeding.
    std::vector<double> d2(n, std::numeric_limits<double>::infinity());
    std::vector<char> chosen(n, 0);
    std::size_t first = std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
    for (std::size_t c = 0; c < k; ++c) {
        std::size_t pick = first;
        if (c > 0) {
            const double total = std::accumulate(d2.begin(), d2.end(), 0.0);
            if (total > 0.0) {
                double r = std::uniform_real_distribution<double>(0.0, total)(rng);
                pick = n;
                for (std::size_t i = 0; i < n; ++i) {
                    if (d2[i] <= 0.0) continue;
                    pick = i;
                    if ((r -= d2[i]) < 0.0) break;
                }
            } else {
                pick = static_cast<std::size_t>(std::find(chosen.begin(), chosen.end(), 0) - chosen.begin());
            }
        }
        chosen[pick] = 1;
        std::copy(points.row(pick).begin(), points.row(pick).end(), res.centers.row(c).begin());
        for (std::size_t i = 0; i < n; ++i) d2[i] = std::min(d2[i], sq_dist(points.row(i), res.centers.row(c)));
    }

    res.assignments.assign(n, 0);
    std::vector<double> dist(n);
    std::vector<std::size_t> counts(k);
    for (std::size_t it = 0; it < std::max<std::size_t>(max_iter, 1); ++it) {
        bool changed = false;
        double obj = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            std::size_t best = 0;
            double best_d = std::numeric_limits<double>::infinity();
            for (std::size_t c = 0; c < k; ++c) {
                const double d = sq_dist(points.row(i), res.centers.row(c));
                if (d < best_d) {
                    best_d = d;
                    best = c;
                }
            }
            if (it == 0 || best != res.assignments[i]) changed = true;
            res.assignments[i] = best;
            dist[i] = best_d;
            obj += best_d;
        }
        if (!res.objective.empty() && obj > res.objective.back() * (1.0 + 1e-12) + 1e-12)
            throw std::logic_error("kmeans: objective increased");
        res.objective.push_back(obj);
        res.iterations = it + 1;
        if (!changed) break;

        std::fill(counts.begin(), counts.end(), 0);
        for (std::size_t i = 0; i < n; ++i) ++counts[res.assignments[i]];
        for (std::size_t c = 0; c < k; ++c) {
            if (counts[c] != 0) continue;
            const auto far = static_cast<std::size_t>(std::max_element(dist.begin(), dist.end()) - dist.begin());
            --counts[res.assignments[far]];
            res.assignments[far] = c;
            counts[c] = 1;
            dist[far] = 0.0;
        }
        Matrix sums(k, dim);
        for (std::size_t i = 0; i < n; ++i) {
            auto s = sums.row(res.assignments[i]);
            const auto p = points.row(i);
            for (std::size_t j = 0; j < dim; ++j) s[j] += p[j];
        }
        for (std::size_t c = 0; c < k; ++c) {
            if (counts[c] == 0) continue;
            auto dst = res.centers.row(c);
            const auto s = sums.row(c);
            for (std::size_t j = 0; j < dim; ++j) dst[j] = s[j] / static_cast<double>(counts[c]);
        }
    }
    return res;
}

Matrix ensemble_vectors(const UnmixConfig& cfg, const std::vector<Matrix>& run_sources) {
    require(!run_sources.empty(), "ensemble_vectors: no runs");
    const std::size_t n = run_sources.front().rows(), p = run_sources.front().cols();
    Matrix v(run_sources.size() * p, n);
    for (std::size_t r = 0; r < run_sources.size(); ++r) {
        require(run_sources[r].rows() == n && run_sources[r].cols() == p, "ensemble_vectors: shape mismatch");
        for (std::size_t j = 0; j < p; ++j) {
            auto col = run_sources[r].column(j);
            if (cfg.kind == ExperimentKind::pnl) col = zscore(std::move(col));
            std::copy(col.begin(), col.end(), v.row(r * p + j).begin());
        }
    }
    return v;
}

EnsembleResult ensemble_unmix(const UnmixConfig& cfg, const Matrix& data, const ProgressFn& progress) {
    cfg.validate();
    const std::size_t t = cfg.restarts;
    EnsembleResult res;
    res.restarts = t;
    res.run_sources.resize(t);
    res.histories.resize(t);

    std::atomic<std::size_t> next{0};
    std::atomic<std::size_t> done{0};
    std::exception_ptr failure;
    std::mutex mu;
    auto worker = [&] {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= t) return;
            {
                std::lock_guard lock(mu);
                if (failure) return;
            }
            try {
                TrainRun run = train_once(cfg, data, cfg.seed + i);
                Matrix src = predict_sources(run, data);
                std::lock_guard lock(mu);
                res.run_sources[i] = std::move(src);
                res.histories[i] = std::move(run.history);
                const std::size_t d = ++done;
                if (progress) progress(d, res.histories[i].empty() ? 0.0 : res.histories[i].back());
            } catch (...) {
                std::lock_guard lock(mu);
                if (!failure) failure = std::current_exception();
                return;
            }
        }
    };
    const std::size_t workers = std::min(cfg.workers, t);
    if (workers <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }
    if (failure) std::rethrow_exception(failure);

    if (cfg.kind == ExperimentKind::hu) {
        for (const Matrix& s : res.run_sources)
            for (std::size_t r = 0; r < s.rows(); ++r) {
                double sum = 0.0;
                for (double v : s.row(r)) {
                    if (!(v >= 0.0 && v <= 1.0)) throw std::logic_error("ensemble: softmax output outside [0,1]");
                    sum += v;
                }
                if (std::abs(sum - 1.0) > 1e-6) throw std::logic_error("ensemble: softmax row off the simplex");
            }
    }

    const Matrix vectors = ensemble_vectors(cfg, res.run_sources);
    const KMeansResult km = kmeans(vectors, cfg.cluster_count(), cfg.seed);
    res.centers = km.centers;
    res.assignments = km.assignments;
    res.counts.assign(cfg.cluster_count(), 0);
    for (std::size_t a : km.assignments) ++res.counts[a];
    return res;
}

}  // namespace ddica
