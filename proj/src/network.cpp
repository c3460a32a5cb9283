#include "ddica/network.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>

#include "ddica/errors.hpp"

namespace ddica {

void validate_specs(std::span<const LayerSpec> specs) {
    require(!specs.empty(), "network: empty layer list");
    std::size_t width = 0;
    bool seen_dense = false;
    for (std::size_t i = 0; i < specs.size(); ++i) {
        const auto& s = specs[i];
        const bool last = i + 1 == specs.size();
        switch (s.kind) {
            case LayerKind::dense:
                require(s.in_dim > 0 && s.out_dim > 0, "network: dense layer with zero width");
                require(!seen_dense || s.in_dim == width,
                        "network: dense layer " + std::to_string(i) + " expects " +
                            std::to_string(s.in_dim) + " inputs, previous layer gives " +
                            std::to_string(width));
                width = s.out_dim;
                seen_dense = true;
                break;
            case LayerKind::relu:
                require(seen_dense, "network: activation before the first dense layer");
                break;
            case LayerKind::softmax:
            case LayerKind::whitening:
                require(seen_dense, "network: output layer before the first dense layer");
                require(last, "network: softmax/whitening must be the final layer");
                require(s.kind != LayerKind::whitening || s.eps >= 0.0,
                        "network: whitening eps must be >= 0");
                break;
        }
    }
    require(specs.front().kind == LayerKind::dense, "network: first layer must be dense");
}

std::size_t input_dim(std::span<const LayerSpec> specs) {
    validate_specs(specs);
    return specs.front().in_dim;
}

std::size_t output_dim(std::span<const LayerSpec> specs) {
    validate_specs(specs);
    std::size_t w = 0;
    for (const auto& s : specs)
        if (s.kind == LayerKind::dense) w = s.out_dim;
    return w;
}

std::size_t NetworkParams::parameter_count() const {
    std::size_t n = 0;
    for (const auto& d : dense) n += d.weight.size() + d.bias.size();
    return n;
}

std::vector<double*> NetworkParams::parameter_pointers() {
    std::vector<double*> out;
    for (auto& d : dense) {
        for (double& w : d.weight.values()) out.push_back(&w);
        for (double& b : d.bias) out.push_back(&b);
    }
    return out;
}

NetworkParams init_network(std::span<const LayerSpec> specs, std::uint64_t seed) {
    validate_specs(specs);
    NetworkParams p;
    p.seed = seed;
    std::mt19937_64 rng(seed);
    for (const auto& s : specs) {
        if (s.kind != LayerKind::dense) continue;
        const double limit = std::sqrt(6.0 / static_cast<double>(s.in_dim + s.out_dim));
        std::uniform_real_distribution<double> dist(-limit, limit);
        DenseParams d{Matrix(s.out_dim, s.in_dim), std::vector<double>(s.out_dim, 0.0)};
        for (double& w : d.weight.values()) w = dist(rng);
        p.dense.push_back(std::move(d));
    }
    return p;
}

namespace {

std::uint64_t fingerprint(const NetworkParams& params) {
    std::uint64_t h = 1469598103934665603ULL;
    auto mix = [&h](double v) {
        std::uint64_t bits;
        std::memcpy(&bits, &v, sizeof bits);
        h = (h ^ bits) * 1099511628211ULL;
    };
    for (const auto& d : params.dense) {
        for (double w : d.weight.values()) mix(w);
        for (double b : d.bias) mix(b);
    }
    return h;
}

std::size_t dense_count(std::span<const LayerSpec> specs) {
    return static_cast<std::size_t>(
        std::count_if(specs.begin(), specs.end(), [](const auto& s) { return s.kind == LayerKind::dense; }));
}

void check_params(const NetworkParams& params, std::span<const LayerSpec> specs) {
    require(params.dense.size() == dense_count(specs), "network: parameter/layer count mismatch");
    std::size_t k = 0;
    for (const auto& s : specs) {
        if (s.kind != LayerKind::dense) continue;
        const auto& d = params.dense[k++];
        require(d.weight.rows() == s.out_dim && d.weight.cols() == s.in_dim &&
                    d.bias.size() == s.out_dim,
                "network: parameter shape does not match layer spec");
    }
}

Matrix dense_forward(const DenseParams& d, const Matrix& x) {
    Matrix y = matmul(x, d.weight, false, true);
    for (std::size_t r = 0; r < y.rows(); ++r) {
        auto row = y.row(r);
        for (std::size_t c = 0; c < row.size(); ++c) row[c] += d.bias[c];
    }
    return y;
}

Matrix softmax_forward(const Matrix& x) {
    Matrix y(x.rows(), x.cols());
    for (std::size_t r = 0; r < x.rows(); ++r) {
        auto in = x.row(r);
        auto out = y.row(r);
        const double mx = *std::max_element(in.begin(), in.end());
        double sum = 0.0;
        for (std::size_t c = 0; c < in.size(); ++c) {
            out[c] = std::exp(in[c] - mx);
            sum += out[c];
        }
        for (double& v : out) v /= sum;
    }
    return y;
}

double whiten_scale(double lambda, double eps) { return 1.0 / std::sqrt(lambda + eps); }
double whiten_scale_derivative(double lambda, double eps) {
    return -0.5 / ((lambda + eps) * std::sqrt(lambda + eps));
}

Matrix whitening_forward(const Matrix& y, double eps, WhiteningCache& cache) {
    const std::size_t n = y.rows();
    const std::size_t p = y.cols();
    require(n > p, "whitening: batch of " + std::to_string(n) + " rows cannot whiten " +
                       std::to_string(p) + " channels");
    for (double v : y.values())
        if (!std::isfinite(v)) throw ConvergenceError("whitening: non-finite activations", 0);
    cache.centered = y;
    for (std::size_t c = 0; c < p; ++c) {
        double mean = 0.0;
        for (std::size_t r = 0; r < n; ++r) mean += y(r, c);
        mean /= static_cast<double>(n);
        for (std::size_t r = 0; r < n; ++r) cache.centered(r, c) -= mean;
    }
    Matrix cov = matmul(cache.centered, cache.centered, true, false);
    for (double& v : cov.values()) v /= static_cast<double>(n);
    cache.cov = sym_eig(SymMatrix(std::move(cov)));
    for (double& l : cache.cov.values) l = std::max(l, 0.0);

    const Matrix& v = cache.cov.vectors;
    Matrix scaled = v;
    for (std::size_t r = 0; r < p; ++r)
        for (std::size_t c = 0; c < p; ++c) scaled(r, c) *= whiten_scale(cache.cov.values[c], eps);
    cache.transform = matmul(scaled, v, false, true);
    return matmul(cache.centered, cache.transform);
}

Matrix whitening_backward(const WhiteningCache& cache, double eps, const Matrix& dz) {
    const std::size_t n = cache.centered.rows();
    const std::size_t p = cache.centered.cols();
    const Matrix& v = cache.cov.vectors;
    const auto& lam = cache.cov.values;

    Matrix dyc = matmul(dz, cache.transform);
    Matrix dw = matmul(cache.centered, dz, true, false);
    for (std::size_t i = 0; i < p; ++i)
        for (std::size_t j = i + 1; j < p; ++j) {
            const double s = 0.5 * (dw(i, j) + dw(j, i));
            dw(i, j) = s;
            dw(j, i) = s;
        }

    // Daleckii-Krein: d f(C) = V (F o (V^T dC V)) V^T with divided differences F.
    Matrix m = matmul(matmul(v, dw, true, false), v);
    for (std::size_t i = 0; i < p; ++i) {
        for (std::size_t j = 0; j < p; ++j) {
            double f;
            const double gap = lam[i] - lam[j];
            if (std::abs(gap) < 1e-6)
                f = whiten_scale_derivative(0.5 * (lam[i] + lam[j]), eps);
            else
                f = (whiten_scale(lam[i], eps) - whiten_scale(lam[j], eps)) / gap;
            m(i, j) *= f;
        }
    }
    const Matrix grad_cov = matmul(matmul(v, m), v, false, true);
    const Matrix extra = matmul(cache.centered, grad_cov);
    const double two_over_n = 2.0 / static_cast<double>(n);
    for (std::size_t i = 0; i < dyc.size(); ++i) dyc.values()[i] += two_over_n * extra.values()[i];

    for (std::size_t c = 0; c < p; ++c) {
        double mean = 0.0;
        for (std::size_t r = 0; r < n; ++r) mean += dyc(r, c);
        mean /= static_cast<double>(n);
        for (std::size_t r = 0; r < n; ++r) dyc(r, c) -= mean;
    }
    return dyc;
}

}  // namespace

ForwardResult forward(const NetworkParams& params, std::span<const LayerSpec> specs,
                      const Matrix& batch) {
    validate_specs(specs);
    check_params(params, specs);
    require(batch.cols() == specs.front().in_dim,
            "forward: batch has " + std::to_string(batch.cols()) + " columns, network expects " +
                std::to_string(specs.front().in_dim));
    require(batch.rows() >= 1, "forward: empty batch");

    ForwardResult res;
    res.cache.params_fingerprint = fingerprint(params);
    Matrix x = batch;
    std::size_t k = 0;
    for (const auto& s : specs) {
        res.cache.inputs.push_back(x);
        switch (s.kind) {
            case LayerKind::dense:
                x = dense_forward(params.dense[k++], x);
                break;
            case LayerKind::relu:
                for (double& v : x.values()) v = v > 0.0 ? v : 0.0;
                break;
            case LayerKind::softmax:
                x = softmax_forward(x);
                break;
            case LayerKind::whitening:
                x = whitening_forward(x, s.eps, res.cache.whitening);
                break;
        }
    }
    res.cache.output = x;
    res.outputs = std::move(x);
    return res;
}

NetworkGrads backward(const NetworkParams& params, std::span<const LayerSpec> specs,
                      const BatchActivations& cache, const Matrix& grad_out) {
    validate_specs(specs);
    check_params(params, specs);
    if (cache.params_fingerprint != fingerprint(params) || cache.inputs.size() != specs.size())
        throw std::logic_error("backward: activation cache does not belong to these parameters");
    require(grad_out.rows() == cache.output.rows() && grad_out.cols() == cache.output.cols(),
            "backward: gradient shape does not match network output");

    NetworkGrads grads(params.dense.size());
    Matrix g = grad_out;
    std::size_t k = params.dense.size();
    for (std::size_t li = specs.size(); li-- > 0;) {
        const auto& s = specs[li];
        const Matrix& in = cache.inputs[li];
        switch (s.kind) {
            case LayerKind::dense: {
                --k;
                auto& dg = grads[k];
                dg.weight = matmul(g, in, true, false);
                dg.bias.assign(s.out_dim, 0.0);
                for (std::size_t r = 0; r < g.rows(); ++r)
                    for (std::size_t c = 0; c < s.out_dim; ++c) dg.bias[c] += g(r, c);
                if (li > 0) g = matmul(g, params.dense[k].weight);
                break;
            }
            case LayerKind::relu:
                // Subgradient 0 at exactly 0.
                for (std::size_t i = 0; i < g.size(); ++i)
                    if (!(in.values()[i] > 0.0)) g.values()[i] = 0.0;
                break;
            case LayerKind::softmax: {
                const Matrix& y = cache.output;
                for (std::size_t r = 0; r < g.rows(); ++r) {
                    auto gr = g.row(r);
                    auto yr = y.row(r);
                    double dotv = 0.0;
                    for (std::size_t c = 0; c < gr.size(); ++c) dotv += gr[c] * yr[c];
                    for (std::size_t c = 0; c < gr.size(); ++c) gr[c] = yr[c] * (gr[c] - dotv);
                }
                break;
            }
            case LayerKind::whitening:
                g = whitening_backward(cache.whitening, s.eps, g);
                break;
        }
    }
    return grads;
}

void adam_step(NetworkParams& params, const NetworkGrads& grads, AdamState& state,
               const AdamConfig& cfg) {
    require(grads.size() == params.dense.size(), "adam_step: gradient/parameter count mismatch");
    if (state.m.empty()) {
        for (const auto& d : params.dense) {
            state.m.push_back({Matrix(d.weight.rows(), d.weight.cols()), std::vector<double>(d.bias.size())});
            state.v.push_back({Matrix(d.weight.rows(), d.weight.cols()), std::vector<double>(d.bias.size())});
        }
    }
    ++state.step;
    const double t = static_cast<double>(state.step);
    const double c1 = 1.0 - std::pow(cfg.beta1, t);
    const double c2 = 1.0 - std::pow(cfg.beta2, t);
    auto update = [&](std::span<double> w, std::span<const double> g, std::span<double> m,
                      std::span<double> v) {
        require(w.size() == g.size(), "adam_step: gradient shape mismatch");
        for (std::size_t i = 0; i < w.size(); ++i) {
            m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * g[i];
            v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * g[i] * g[i];
            w[i] -= cfg.lr * (m[i] / c1) / (std::sqrt(v[i] / c2) + cfg.eps);
        }
    };
    for (std::size_t k = 0; k < params.dense.size(); ++k) {
        update(params.dense[k].weight.values(), grads[k].weight.values(), state.m[k].weight.values(),
               state.v[k].weight.values());
        update(params.dense[k].bias, grads[k].bias, state.m[k].bias, state.v[k].bias);
    }
}

namespace {

std::string format_double(double v) {
    char buf[32];
    auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

double parse_double(const std::string& tok) {
    double v = 0.0;
    auto res = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (res.ec != std::errc() || res.ptr != tok.data() + tok.size())
        throw DataError("checkpoint: malformed number '" + tok + "'");
    return v;
}

void write_values(std::ostream& os, std::span<const double> v) {
    for (std::size_t i = 0; i < v.size(); ++i) os << (i ? " " : "") << format_double(v[i]);
    os << '\n';
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, std::span<const LayerSpec> specs,
                     const NetworkParams& params) {
    validate_specs(specs);
    check_params(params, specs);
    std::ofstream os(path);
    if (!os) throw DataError("checkpoint: cannot write " + path.string());
    os << "ddica-checkpoint 1\n";
    os << "seed " << params.seed << '\n';
    os << "layers " << specs.size() << '\n';
    for (const auto& s : specs) {
        switch (s.kind) {
            case LayerKind::dense: os << "dense " << s.in_dim << ' ' << s.out_dim << '\n'; break;
            case LayerKind::relu: os << "relu\n"; break;
            case LayerKind::softmax: os << "softmax\n"; break;
            case LayerKind::whitening: os << "whitening " << format_double(s.eps) << '\n'; break;
        }
    }
    for (std::size_t k = 0; k < params.dense.size(); ++k) {
        const auto& d = params.dense[k];
        os << "weight " << k << ' ' << d.weight.rows() << ' ' << d.weight.cols() << '\n';
        for (std::size_t r = 0; r < d.weight.rows(); ++r) write_values(os, d.weight.row(r));
        os << "bias " << k << ' ' << d.bias.size() << '\n';
        write_values(os, d.bias);
    }
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
    std::ifstream is(path);
    if (!is) throw DataError("checkpoint: cannot open " + path.string());
    auto expect = [&](const std::string& word) {
        std::string tok;
        if (!(is >> tok) || tok != word)
            throw DataError("checkpoint: expected '" + word + "', found '" + tok + "'");
    };
    auto read_number = [&]() {
        std::string tok;
        if (!(is >> tok)) throw DataError("checkpoint: unexpected end of file");
        return parse_double(tok);
    };
    auto read_count = [&]() {
        std::size_t n;
        if (!(is >> n)) throw DataError("checkpoint: expected a count");
        return n;
    };

    Checkpoint cp;
    expect("ddica-checkpoint");
    if (read_count() != 1) throw DataError("checkpoint: unsupported version");
    expect("seed");
    if (!(is >> cp.params.seed)) throw DataError("checkpoint: bad seed");
    expect("layers");
    const std::size_t nlayers = read_count();
    for (std::size_t i = 0; i < nlayers; ++i) {
        std::string kind;
        is >> kind;
        if (kind == "dense") {
            const std::size_t in = read_count();
            const std::size_t out = read_count();
            cp.specs.push_back(LayerSpec::dense(in, out));
        } else if (kind == "relu") {
            cp.specs.push_back(LayerSpec::relu());
        } else if (kind == "softmax") {
            cp.specs.push_back(LayerSpec::softmax());
        } else if (kind == "whitening") {
            cp.specs.push_back(LayerSpec::whitening(read_number()));
        } else {
            throw DataError("checkpoint: unknown layer kind '" + kind + "'");
        }
    }
    try {
        validate_specs(cp.specs);
    } catch (const std::invalid_argument& e) {
        throw DataError(std::string("checkpoint: ") + e.what());
    }
    for (const auto& s : cp.specs) {
        if (s.kind != LayerKind::dense) continue;
        const std::size_t k = cp.params.dense.size();
        expect("weight");
        if (read_count() != k) throw DataError("checkpoint: weight blocks out of order");
        const std::size_t rows = read_count();
        const std::size_t cols = read_count();
        if (rows != s.out_dim || cols != s.in_dim) throw DataError("checkpoint: weight shape mismatch");
        DenseParams d{Matrix(rows, cols), std::vector<double>(rows)};
        for (double& w : d.weight.values()) w = read_number();
        expect("bias");
        const std::size_t bias_index = read_count();
        const std::size_t bias_len = read_count();
        if (bias_index != k || bias_len != rows) throw DataError("checkpoint: bias header mismatch");
        for (double& b : d.bias) b = read_number();
        cp.params.dense.push_back(std::move(d));
    }
    return cp;
}

}  // namespace ddica
