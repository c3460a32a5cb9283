#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <random>

#include "ddica/data.hpp"
#include "ddica/errors.hpp"
#include "ddica/io.hpp"
#include "ddica/linalg.hpp"

using namespace ddica;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / "ddica_test_data";
    fs::create_directories(dir);
    return dir / name;
}

void column_moments(const Matrix& m, std::size_t c, double& mean, double& var) {
    mean = 0.0;
    for (std::size_t r = 0; r < m.rows(); ++r) mean += m(r, c);
    mean /= static_cast<double>(m.rows());
    var = 0.0;
    for (std::size_t r = 0; r < m.rows(); ++r) var += (m(r, c) - mean) * (m(r, c) - mean);
    var /= static_cast<double>(m.rows());
}

Matrix random_sources(std::size_t n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g;
    Matrix s(3, n);
    for (double& v : s.values()) v = g(rng);
    return s;
}

void write_floats(const fs::path& p, const std::vector<float>& v) {
    std::ofstream out(p, std::ios::binary);
    out.write(reinterpret_cast<const char*>(v.data()), static_cast<std::streamsize>(v.size() * sizeof(float)));
}

std::string error_text(auto&& fn) {
    try {
        fn();
    } catch (const DataError& e) {
        return e.what();
    }
    return {};
}

}  // namespace

TEST_CASE("nonlinearities") {
    CHECK(apply_nonlinearity(Nonlinearity::tanh, 0.0) == 0.0);
    CHECK(apply_nonlinearity(Nonlinearity::cubic_avg, 0.0) == 0.0);
    CHECK(apply_nonlinearity(Nonlinearity::exp, 0.0) == 1.0);
    CHECK(apply_nonlinearity(Nonlinearity::cubic_avg, 2.0) == doctest::Approx(5.0));
    CHECK(to_string(Nonlinearity::cubic_avg) == "cubic_avg");
}

TEST_CASE("apply_pnl with identity mixing and zero sources") {
    const Matrix x = apply_pnl(Matrix(3, 4), PnlSpec{});
    REQUIRE(x.rows() == 4);
    REQUIRE(x.cols() == 3);
    for (std::size_t r = 0; r < 4; ++r) {
        CHECK(x(r, 0) == 0.0);
        CHECK(x(r, 1) == 0.0);
        CHECK(x(r, 2) == 1.0);
    }
}

TEST_CASE("PNL outputs are monotone in their source under identity mixing") {
    Matrix s = random_sources(200, 3);
    std::sort(s.row(1).begin(), s.row(1).end());
    for (double& v : s.values()) v *= 0.5;
    const Matrix x = apply_pnl(s, PnlSpec{});
    std::vector<std::size_t> order(200);
    for (std::size_t c = 0; c < 3; ++c) {
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::sort(order.begin(), order.end(), [&](auto a, auto b) { return s(c, a) < s(c, b); });
        for (std::size_t i = 1; i < order.size(); ++i) CHECK(x(order[i - 1], c) <= x(order[i], c));
    }
}

TEST_CASE("generate_pnl outputs are z-scored and deterministic") {
    for (std::uint64_t seed : {1u, 2u, 3u}) {
        const PnlSpec spec = default_pnl_spec(seed);
        CHECK(std::abs(determinant3(spec.mixing)) > 0.3);
        const Matrix s = random_sources(1000, seed + 10);
        const Matrix x = generate_pnl(s, spec);
        for (std::size_t c = 0; c < 3; ++c) {
            double mean, var;
            column_moments(x, c, mean, var);
            CHECK(std::abs(mean) < 1e-9);
            CHECK(std::abs(var - 1.0) < 1e-9);
        }
        CHECK(generate_pnl(s, spec) == x);
    }
}

TEST_CASE("apply_pnl keeps exp in range and rejects singular mixing") {
    PnlSpec spec = default_pnl_spec(5);
    Matrix s = random_sources(500, 6);
    for (double& v : s.values()) v *= 100.0;
    const Matrix x = apply_pnl(s, spec);
    for (std::size_t r = 0; r < x.rows(); ++r) CHECK(x(r, 2) <= std::exp(4.0) * (1 + 1e-12));
    spec.mixing = Matrix(3, 3, {1, 2, 3, 2, 4, 6, 0, 0, 1});
    CHECK_THROWS_AS(apply_pnl(s, spec), std::invalid_argument);
}

TEST_CASE("synthetic PNL sources") {
    const Matrix s = synthetic_pnl_sources(4000, 7);
    REQUIRE(s.rows() == 3);
    REQUIRE(s.cols() == 4000);
    CHECK(synthetic_pnl_sources(4000, 7) == s);
    CHECK(!(synthetic_pnl_sources(4000, 8) == s));
    for (std::size_t c = 0; c < 3; ++c) {
        const auto row = s.row(c);
        const double mean = std::accumulate(row.begin(), row.end(), 0.0) / 4000.0;
        double var = 0.0;
        for (double v : row) var += (v - mean) * (v - mean);
        CHECK(std::abs(mean) < 1e-9);
        CHECK(std::abs(var / 4000.0 - 1.0) < 1e-9);
    }
}

TEST_CASE("zscore") {
    SUBCASE("hand formula") {
        const auto z = zscore(std::vector<double>{1.0, 2.0, 3.0});
        CHECK(z[0] == doctest::Approx(-std::sqrt(1.5)).epsilon(1e-15));
        CHECK(z[1] == 0.0);
        CHECK(z[2] == doctest::Approx(std::sqrt(1.5)).epsilon(1e-15));
    }
    SUBCASE("constant column becomes zeros") {
        Matrix m(5, 2, 3.0);
        for (std::size_t r = 0; r < 5; ++r) m(r, 1) = static_cast<double>(r);
        const Matrix z = zscore(m);
        for (std::size_t r = 0; r < 5; ++r) CHECK(z(r, 0) == 0.0);
    }
    SUBCASE("idempotent") {
        const Matrix z = zscore(random_sources(50, 9));
        CHECK(max_abs_diff(zscore(z), z) < 1e-12);
    }
}

TEST_CASE("WAV") {
    SUBCASE("all-zero file") {
        save_wav(scratch("zero.wav"), WavData{std::vector<double>(100, 0.0), 16000});
        const WavData w = load_wav(scratch("zero.wav"));
        CHECK(w.sample_rate == 16000);
        CHECK(w.samples == std::vector<double>(100, 0.0));
    }
    SUBCASE("max-amplitude square wave") {
        std::vector<double> sq(64);
        for (std::size_t i = 0; i < sq.size(); ++i) sq[i] = i % 2 ? -1.0 : 1.0;
        save_wav(scratch("square.wav"), WavData{sq, 8000});
        CHECK(load_wav(scratch("square.wav")).samples == sq);
    }
    SUBCASE("round trip within quantization") {
        const auto sig = speech_surrogate(3000, 4, 150.0);
        std::vector<double> scaled(sig.size());
        for (std::size_t i = 0; i < sig.size(); ++i) scaled[i] = std::clamp(sig[i] / 8.0, -1.0, 1.0);
        save_wav(scratch("speech.wav"), WavData{scaled, 16000});
        const WavData w = load_wav(scratch("speech.wav"));
        REQUIRE(w.samples.size() == scaled.size());
        for (std::size_t i = 0; i < scaled.size(); ++i) CHECK(std::abs(w.samples[i] - scaled[i]) <= 0.5 / 32767.0 + 1e-15);
    }
    SUBCASE("unsupported encodings name the chunk") {
        save_wav(scratch("bad.wav"), WavData{std::vector<double>(10, 0.1), 16000});
        std::fstream f(scratch("bad.wav"), std::ios::in | std::ios::out | std::ios::binary);
        f.seekp(20);
        const char float_format[2] = {3, 0};
        f.write(float_format, 2);
        f.close();
        const std::string msg = error_text([] { load_wav(scratch("bad.wav")); });
        CHECK(msg.find("chunk 'fmt '") != std::string::npos);

        std::ofstream(scratch("junk.wav")) << "not a wav file at all";
        CHECK(error_text([] { load_wav(scratch("junk.wav")); }).find("RIFF") != std::string::npos);
        CHECK_THROWS_AS(load_wav(scratch("missing.wav")), DataError);
    }
}

TEST_CASE("CSV round trip") {
    Matrix m(3, 2, {0.1, -2.5e-300, 1.0 / 3.0, 7.0, -0.0, 1e17});
    write_csv(scratch("m.csv"), m, {"a", "b,c"});
    const CsvTable t = read_csv(scratch("m.csv"));
    CHECK(t.header == std::vector<std::string>{"a", "b,c"});
    CHECK(t.values == m);
    std::ofstream(scratch("ragged.csv")) << "x,y\n1,2\n3\n";
    CHECK_THROWS_AS(read_csv(scratch("ragged.csv")), DataError);
    std::ofstream(scratch("text.csv")) << "x\nhello\n";
    CHECK_THROWS_AS(read_csv(scratch("text.csv")), DataError);
}

TEST_CASE("synthetic HU scene invariants hold for 50 seeds") {
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        const HsiScene s = generate_synthetic_hu(3, 40, 400, seed);
        CHECK_NOTHROW(validate_scene(s));
        CHECK(s.rows * s.cols == 400);
        CHECK(s.names.size() == 3);
        for (std::size_t r = 0; r < s.pixels(); ++r) {
            double sum = 0.0;
            for (double a : s.abundances.row(r)) {
                CHECK(a >= 0.0);
                sum += a;
            }
            CHECK(std::abs(sum - 1.0) <= 1e-6);
        }
        for (std::size_t i = 0; i < 3; ++i) {
            for (double v : s.endmembers.row(i)) CHECK(v > 0.0);
            for (std::size_t j = i + 1; j < 3; ++j)
                CHECK(spectral_angle_deg(s.endmembers.row(i), s.endmembers.row(j)) >= 15.0);
        }
    }
    CHECK(generate_synthetic_hu(3, 40, 400, 9).cube == generate_synthetic_hu(3, 40, 400, 9).cube);
    CHECK_THROWS_AS(generate_synthetic_hu(3, 3, 100, 1), std::invalid_argument);
    CHECK_THROWS_AS(generate_synthetic_hu(1, 10, 100, 1), std::invalid_argument);
}

TEST_CASE("noiseless synthetic HU cube is exactly A E and has rank <= p") {
    SyntheticHuOptions opts;
    opts.noiseless = true;
    const HsiScene s = generate_synthetic_hu(4, 30, 900, 12, opts);
    CHECK(max_abs_diff(s.cube, matmul(s.abundances, s.endmembers)) <= 1e-12);
    const auto ev = sym_eigvals(SymMatrix(matmul(s.cube, s.cube, true, false)));
    const std::size_t rank = static_cast<std::size_t>(
        std::count_if(ev.begin(), ev.end(), [&](double l) { return l > 1e-10 * ev.front(); }));
    CHECK(rank <= 4);
}

TEST_CASE("synthetic HU noise hits the requested SNR") {
    for (std::uint64_t seed : {1u, 2u, 3u}) {
        const HsiScene s = generate_synthetic_hu(3, 50, 2500, seed);
        const Matrix clean = matmul(s.abundances, s.endmembers);
        double sig = 0.0, noise = 0.0;
        for (std::size_t i = 0; i < clean.size(); ++i) {
            sig += clean.data()[i] * clean.data()[i];
            const double e = s.cube.data()[i] - clean.data()[i];
            noise += e * e;
        }
        CHECK(std::abs(10.0 * std::log10(sig / noise) - 30.0) <= 0.5);
    }
}

TEST_CASE("HSI container") {
    SUBCASE("hand-written 2x2x3 file") {
        std::ofstream(scratch("hand.hdr")) << "# tiny\nrows = 2\ncols = 2\nbands = 3\ndtype = float32\n"
                                              "interleave = bsq\nbyte_order = little\n";
        // Band-major planes: band b holds pixels 0..3 with value 10*b + pixel.
        std::vector<float> v;
        for (int b = 0; b < 3; ++b)
            for (int px = 0; px < 4; ++px) v.push_back(static_cast<float>(10 * b + px) + 0.5f);
        write_floats(scratch("hand.bsq"), v);
        const HsiScene s = load_hsi(scratch("hand.hdr"), scratch("hand.bsq"));
        REQUIRE(s.cube.rows() == 4);
        REQUIRE(s.cube.cols() == 3);
        for (std::size_t px = 0; px < 4; ++px)
            for (std::size_t b = 0; b < 3; ++b) CHECK(s.cube(px, b) == 10.0 * b + px + 0.5);

        v.pop_back();
        write_floats(scratch("short.bsq"), v);
        const std::string msg = error_text([] { load_hsi(scratch("hand.hdr"), scratch("short.bsq")); });
        CHECK(msg.find("expected 48 bytes") != std::string::npos);
        CHECK(msg.find("found 44 bytes") != std::string::npos);
    }
    SUBCASE("malformed headers") {
        std::ofstream(scratch("bad.hdr")) << "rows = 2\ncols = 2\nbands = 3\ndtype = float64\n"
                                             "interleave = bsq\nbyte_order = little\n";
        CHECK_THROWS_AS(load_hsi(scratch("bad.hdr"), scratch("hand.bsq")), DataError);
        std::ofstream(scratch("bad2.hdr")) << "rows = 2\ncols = 2\n";
        CHECK_THROWS_AS(load_hsi(scratch("bad2.hdr"), scratch("hand.bsq")), DataError);
    }
    SUBCASE("save then load is bit-exact for float32 payloads") {
        HsiScene s = generate_synthetic_hu(3, 20, 100, 4);
        for (double& v : s.cube.values()) v = static_cast<float>(v);
        save_hsi(scratch("rt.hdr"), scratch("rt.bsq"), s);
        write_csv(scratch("rt_truth.csv"), s.abundances, s.names);
        const HsiScene back = load_hsi(scratch("rt.hdr"), scratch("rt.bsq"), scratch("rt_truth.csv"));
        CHECK(back.rows == s.rows);
        CHECK(back.cols == s.cols);
        CHECK(back.cube == s.cube);
        CHECK(back.names == s.names);
        CHECK(back.abundances == s.abundances);
    }
}
