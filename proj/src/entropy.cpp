#include "ddica/entropy.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <stdexcept>
#include <string>

#include "ddica/simd/kernels.hpp"

namespace ddica {

ChannelBatch::ChannelBatch(std::vector<double> v, std::size_t id)
    : values(std::move(v)), channel_id(id) {
    require(values.size() >= 2, "ChannelBatch: need at least 2 samples");
    for (double x : values)
        if (!std::isfinite(x)) throw std::invalid_argument("ChannelBatch: non-finite sample");
}

void EntropyConfig::validate() const {
    if (!(alpha > 0.0) || alpha == 1.0 || !std::isfinite(alpha))
        throw std::invalid_argument("EntropyConfig: alpha must be > 0 and != 1");
    if (!(sigma > 0.0) || !std::isfinite(sigma))
        throw std::invalid_argument("EntropyConfig: sigma must be > 0");
}

std::vector<ChannelBatch> channels_from_columns(const Matrix& samples) {
    std::vector<ChannelBatch> out;
    out.reserve(samples.cols());
    for (std::size_t c = 0; c < samples.cols(); ++c) out.emplace_back(samples.column(c), c);
    return out;
}

namespace {

SymMatrix gaussian_kernel(std::span<const double> x, double sigma) {
    const std::size_t n = x.size();
    for (double v : x)
        if (!std::isfinite(v)) throw std::invalid_argument("gaussian_gram: non-finite sample");
    Matrix k(n, n);
    const double scale = -1.0 / (2.0 * sigma * sigma);
    const auto& kern = simd::kernels();
    for (std::size_t i = 0; i < n; ++i) kern.gaussian_row(x.data(), n, x[i], scale, k.row(i).data());
    return SymMatrix(std::move(k));
}

struct Spectrum {
    double entropy = 0.0;
    double power_sum = 0.0;  // sum of lambda^alpha over unclamped eigenvalues
};

Spectrum spectrum_entropy(std::span<const double> eigenvalues, double alpha) {
    Spectrum s;
    for (double l : eigenvalues)
        if (l >= kEigenClamp) s.power_sum += std::pow(l, alpha);
    s.entropy = std::log2(s.power_sum) / (1.0 - alpha);
    return s;
}

// d H / d lambda for an unclamped eigenvalue; clamped eigenvalues do not move H.
auto entropy_derivative(double alpha, double power_sum) {
    const double c = alpha / ((1.0 - alpha) * std::numbers::ln2 * power_sum);
    return [alpha, c](double l) { return l >= kEigenClamp ? c * std::pow(l, alpha - 1.0) : 0.0; };
}

// Only eigenpairs above the clamp affect the entropy or its gradient. A
// single-channel Gram keeps few of them; the joint Gram keeps most, where the
// full solver is faster.
EigenPair retained(const SymMatrix& m) { return sym_eig_above(m, kEigenClamp); }

void validate_samples(const Matrix& samples) {
    require(samples.cols() >= 2, "total correlation needs at least 2 channels");
    require(samples.rows() >= 2, "total correlation needs at least 2 samples");
    for (double v : samples.values())
        if (!std::isfinite(v)) throw std::invalid_argument("total correlation: non-finite sample");
}

Matrix stack_channels(std::span<const ChannelBatch> channels) {
    require(!channels.empty(), "no channels");
    const std::size_t n = channels.front().size();
    Matrix m(n, channels.size());
    for (std::size_t c = 0; c < channels.size(); ++c) {
        if (channels[c].size() != n)
            throw std::invalid_argument("channels differ in length (" + std::to_string(n) + " vs " +
                                        std::to_string(channels[c].size()) + ")");
        m.set_column(c, channels[c].values);
    }
    return m;
}

std::vector<NormalizedGram> grams_of(const Matrix& samples, double sigma) {
    std::vector<NormalizedGram> grams;
    grams.reserve(samples.cols());
    for (std::size_t c = 0; c < samples.cols(); ++c) {
        const auto col = samples.column(c);
        grams.push_back(trace_normalize(gaussian_kernel(col, sigma)));
    }
    return grams;
}

// Hadamard product of the selected grams (unnormalized) and its trace.
SymMatrix hadamard_all(std::span<const NormalizedGram> grams, std::size_t skip = SIZE_MAX) {
    const std::size_t n = grams.front().n();
    Matrix prod(n, n, 1.0);
    const auto& kern = simd::kernels();
    for (std::size_t i = 0; i < grams.size(); ++i) {
        if (i == skip) continue;
        if (grams[i].n() != n) throw std::invalid_argument("joint_entropy: gram dimension mismatch");
        kern.hadamard(prod.data(), grams[i].data(), prod.data(), prod.size());
    }
    return SymMatrix(std::move(prod));
}

}  // namespace

NormalizedGram gaussian_gram(const ChannelBatch& c, double sigma) {
    require(sigma > 0.0, "gaussian_gram: sigma must be > 0");
    return trace_normalize(gaussian_kernel(c.values, sigma));
}

double renyi_entropy(const NormalizedGram& a, double alpha) {
    EntropyConfig{alpha, 1.0}.validate();
    return spectrum_entropy(psd_eigvals(a.matrix()), alpha).entropy;
}

double joint_entropy(std::span<const NormalizedGram> grams, double alpha) {
    require(grams.size() >= 2, "joint_entropy: need at least 2 grams");
    return renyi_entropy(trace_normalize(hadamard_all(grams)), alpha);
}

TcEvaluation evaluate_tc(const Matrix& samples, const EntropyConfig& cfg, bool with_gradient) {
    cfg.validate();
    validate_samples(samples);
    const std::size_t n = samples.rows();
    const std::size_t p = samples.cols();
    const auto grams = grams_of(samples, cfg.sigma);

    SymMatrix product = hadamard_all(grams);
    const double product_trace = product.trace();
    const NormalizedGram joint = trace_normalize(product);

    TcEvaluation out;
    out.marginal.resize(p);

    if (!with_gradient) {
        for (std::size_t i = 0; i < p; ++i)
            out.marginal[i] = spectrum_entropy(retained(grams[i].matrix()).values, cfg.alpha).entropy;
        out.joint = spectrum_entropy(psd_eigvals(joint.matrix()), cfg.alpha).entropy;
        out.tc = -out.joint;
        for (double h : out.marginal) out.tc += h;
        return out;
    }

    std::vector<SymMatrix> marginal_grad;  // dH_i / dA_i
    marginal_grad.reserve(p);
    for (std::size_t i = 0; i < p; ++i) {
        const EigenPair e = retained(grams[i].matrix());
        const Spectrum s = spectrum_entropy(e.values, cfg.alpha);
        out.marginal[i] = s.entropy;
        marginal_grad.push_back(spectral_grad(e, entropy_derivative(cfg.alpha, s.power_sum)));
    }
    SymMatrix joint_grad;  // dH_joint / dJ
    {
        const EigenPair e = psd_eig(joint.matrix());
        const Spectrum s = spectrum_entropy(e.values, cfg.alpha);
        out.joint = s.entropy;
        joint_grad = spectral_grad(e, entropy_derivative(cfg.alpha, s.power_sum));
    }
    out.tc = -out.joint;
    for (double h : out.marginal) out.tc += h;

    // Trace normalization adds identity terms to dTC/dA and dTC/dK. They only
    // touch the diagonal, where d K(n,n) / dx = 0, so they drop out here.
    const double joint_scale = 1.0 / product_trace;
    const double kernel_scale = -2.0 / (cfg.sigma * cfg.sigma);
    const auto& kern = simd::kernels();
    out.gradient = Matrix(n, p);
    std::vector<double> others(n), w(n);
    for (std::size_t i = 0; i < p; ++i) {
        const auto x = samples.column(i);
        const double* a = grams[i].data();
        const double* g = marginal_grad[i].data();
        for (std::size_t r = 0; r < n; ++r) {
            const std::size_t off = r * n;
            std::fill(others.begin(), others.end(), joint_scale);
            for (std::size_t j = 0; j < p; ++j)
                if (j != i) kern.hadamard(others.data(), grams[j].data() + off, others.data(), n);
            kern.hadamard(others.data(), joint_grad.data() + off, others.data(), n);
            for (std::size_t m = 0; m < n; ++m) w[m] = g[off + m] - others[m];
            out.gradient(r, i) = kernel_scale * kern.kernel_grad_row(w.data(), a + off, x.data(), x[r], n);
        }
    }
    return out;
}

double total_correlation(const Matrix& samples, const EntropyConfig& cfg) {
    return evaluate_tc(samples, cfg, false).tc;
}

double total_correlation(std::span<const ChannelBatch> channels, const EntropyConfig& cfg) {
    return total_correlation(stack_channels(channels), cfg);
}

std::vector<std::vector<double>> tc_gradient(std::span<const ChannelBatch> channels,
                                             const EntropyConfig& cfg) {
    const TcEvaluation e = evaluate_tc(stack_channels(channels), cfg, true);
    std::vector<std::vector<double>> out;
    for (std::size_t c = 0; c < e.gradient.cols(); ++c) out.push_back(e.gradient.column(c));
    return out;
}

std::vector<double> pairwise_dependence_terms(std::span<const ChannelBatch> channels,
                                              const EntropyConfig& cfg) {
    cfg.validate();
    const Matrix samples = stack_channels(channels);
    validate_samples(samples);
    const auto grams = grams_of(samples, cfg.sigma);
    const double h_all = renyi_entropy(trace_normalize(hadamard_all(grams)), cfg.alpha);
    std::vector<double> terms;
    for (std::size_t i = 0; i < grams.size(); ++i) {
        const double h_i = renyi_entropy(grams[i], cfg.alpha);
        const double h_rest = renyi_entropy(trace_normalize(hadamard_all(grams, i)), cfg.alpha);
        terms.push_back(h_i + h_rest - h_all);
    }
    return terms;
}

double pairwise_dependence(std::span<const ChannelBatch> channels, const EntropyConfig& cfg) {
    double d = 0.0;
    for (double t : pairwise_dependence_terms(channels, cfg)) d += t;
    return d;
}

double silverman_width(std::size_t n, std::size_t p) {
    require(n >= 2, "silverman_width: n must be >= 2");
    require(p >= 1, "silverman_width: p must be >= 1");
    return std::pow(static_cast<double>(n), -1.0 / (4.0 + static_cast<double>(p)));
}

}  // namespace ddica
