#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "ddica/data.hpp"
#include "ddica/errors.hpp"
#include "ddica/metrics.hpp"
#include "ddica/trainer.hpp"

using namespace ddica;

namespace {

UnmixConfig small_pnl() {
    UnmixConfig c = UnmixConfig::pnl_defaults();
    c.batch = 200;
    c.hidden = {16, 16};
    c.iterations = 5;
    c.sigma = 0.5;
    c.adam.lr = 1e-2;
    return c;
}

UnmixConfig small_hu(std::size_t p) {
    UnmixConfig c = UnmixConfig::hu_defaults(p);
    c.batch = 64;
    c.hidden = {16, 16};
    c.iterations = 10;
    c.restarts = 4;
    return c;
}

Matrix pnl_data(std::size_t n, std::uint64_t seed) {
    return generate_pnl(synthetic_pnl_sources(n, seed), default_pnl_spec(seed));
}

Matrix transpose(const Matrix& m) {
    Matrix t(m.cols(), m.rows());
    for (std::size_t r = 0; r < m.rows(); ++r)
        for (std::size_t c = 0; c < m.cols(); ++c) t(c, r) = m(r, c);
    return t;
}

}  // namespace

TEST_CASE("configs validate") {
    CHECK_NOTHROW(UnmixConfig::pnl_defaults().validate());
    CHECK_NOTHROW(UnmixConfig::hu_defaults(5).validate());
    CHECK(UnmixConfig::hu_defaults(5).out_units == 5);
    UnmixConfig c = small_pnl();
    c.alpha = 1.0;
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c = small_pnl();
    c.sigma = 0.0;
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c = small_pnl();
    c.clusters = 2;
    CHECK_THROWS_AS(c.validate(), ConfigError);
    CHECK(parse_kind("hu") == ExperimentKind::hu);
    CHECK_THROWS_AS(parse_kind("ica"), ConfigError);
}

TEST_CASE("architectures follow the experiment kind") {
    const auto pnl = build_architecture(small_pnl(), 3);
    CHECK(pnl.back().kind == LayerKind::whitening);
    CHECK(std::count_if(pnl.begin(), pnl.end(), [](auto& s) { return s.kind == LayerKind::dense; }) == 3);
    const auto hu = build_architecture(UnmixConfig::hu_defaults(3), 156);
    CHECK(hu.back().kind == LayerKind::softmax);
    CHECK(hu.front().in_dim == 156);
    CHECK(std::count_if(hu.begin(), hu.end(), [](auto& s) { return s.kind == LayerKind::dense; }) == 6);
}

TEST_CASE("train_once") {
    const Matrix x = pnl_data(600, 1);
    SUBCASE("zero iterations keep the initial parameters") {
        UnmixConfig c = small_pnl();
        c.iterations = 0;
        const TrainRun run = train_once(c, x, 9);
        CHECK(run.history.empty());
        CHECK(run.params == init_network(run.specs, run.params.seed));
    }
    SUBCASE("same seed, same history; different seed, different history") {
        const TrainRun a = train_once(small_pnl(), x, 3), b = train_once(small_pnl(), x, 3);
        CHECK(a.history == b.history);
        CHECK(a.params == b.params);
        CHECK(a.history.size() == 5);
        CHECK(!(train_once(small_pnl(), x, 4).history == a.history));
    }
    SUBCASE("progress callback sees every iteration") {
        std::vector<std::size_t> seen;
        train_once(small_pnl(), x, 3, [&](std::size_t it, double) { seen.push_back(it); });
        CHECK(seen == std::vector<std::size_t>{0, 1, 2, 3, 4});
    }
    SUBCASE("preconditions") {
        UnmixConfig c = small_pnl();
        c.batch = 601;
        CHECK_THROWS_AS(train_once(c, x, 1), DataError);
    }
    SUBCASE("divergence reports the iteration") {
        UnmixConfig c = small_pnl();
        c.adam.lr = 1e300;
        c.iterations = 50;
        bool diverged = false;
        try {
            train_once(c, x, 1);
        } catch (const DivergenceError& e) {
            diverged = true;
            CHECK(std::string(e.what()).find("iteration") != std::string::npos);
        }
        CHECK(diverged);
    }
}

TEST_CASE("a short PNL run lowers batch TC") {
    UnmixConfig c = small_pnl();
    c.iterations = 150;
    const TrainRun run = train_once(c, pnl_data(1000, 2), 5);
    for (double v : run.history) CHECK(std::isfinite(v));
    auto mean = [](auto b, auto e) { return std::accumulate(b, e, 0.0) / static_cast<double>(e - b); };
    const double head = mean(run.history.begin(), run.history.begin() + 15);
    const double tail = mean(run.history.end() - 15, run.history.end());
    CAPTURE(head);
    CAPTURE(tail);
    CHECK(tail < head);
}

TEST_CASE("predict_sources") {
    const Matrix x = pnl_data(600, 1);
    const TrainRun run = train_once(small_pnl(), x, 2);
    const Matrix s = predict_sources(run, x);
    REQUIRE(s.rows() == 600);
    for (std::size_t c = 0; c < 3; ++c) {
        double mean = 0.0, var = 0.0;
        for (std::size_t r = 0; r < 600; ++r) mean += s(r, c);
        mean /= 600.0;
        for (std::size_t r = 0; r < 600; ++r) var += (s(r, c) - mean) * (s(r, c) - mean);
        CHECK(std::abs(mean) < 1e-9);
        CHECK(std::abs(var / 600.0 - 1.0) < 1e-3);
    }
    CHECK_THROWS_AS(predict_sources(run, Matrix(0, 3)), DataError);
    CHECK_THROWS_AS(predict_sources(run, Matrix(10, 4)), DataError);

    const HsiScene scene = generate_synthetic_hu(3, 12, 400, 1);
    const TrainRun hu = train_once(small_hu(3), scene.cube, 2);
    const Matrix a = predict_sources(hu, scene.cube);
    for (std::size_t r = 0; r < a.rows(); ++r) {
        double sum = 0.0;
        for (double v : a.row(r)) {
            CHECK(v >= 0.0);
            CHECK(v <= 1.0);
            sum += v;
        }
        CHECK(std::abs(sum - 1.0) <= 1e-12);
    }
}

TEST_CASE("kmeans") {
    std::mt19937_64 rng(1);
    std::normal_distribution<double> g(0.0, 0.05);
    SUBCASE("k equals the number of points") {
        Matrix pts(6, 2);
        for (std::size_t i = 0; i < 6; ++i) pts(i, 0) = static_cast<double>(i * i);
        const KMeansResult km = kmeans(pts, 6, 3);
        CHECK(km.objective.back() == 0.0);
        std::vector<std::size_t> a = km.assignments;
        std::sort(a.begin(), a.end());
        CHECK(std::adjacent_find(a.begin(), a.end()) == a.end());
        for (std::size_t i = 0; i < 6; ++i) CHECK(km.centers(km.assignments[i], 0) == pts(i, 0));
    }
    SUBCASE("k = 1 gives the mean") {
        Matrix pts(50, 3);
        for (double& v : pts.values()) v = g(rng) * 20;
        const KMeansResult km = kmeans(pts, 1, 1);
        for (std::size_t c = 0; c < 3; ++c) {
            double m = 0.0;
            for (std::size_t r = 0; r < 50; ++r) m += pts(r, c);
            CHECK(km.centers(0, c) == doctest::Approx(m / 50.0).epsilon(1e-12));
        }
    }
    SUBCASE("two separated blobs") {
        Matrix pts(200, 2);
        for (std::size_t r = 0; r < 200; ++r) {
            pts(r, 0) = (r < 100 ? -2.0 : 3.0) + g(rng);
            pts(r, 1) = (r < 100 ? 1.0 : -1.0) + g(rng);
        }
        const KMeansResult km = kmeans(pts, 2, 4);
        const std::size_t a = km.centers(0, 0) < 0 ? 0 : 1;
        CHECK(std::abs(km.centers(a, 0) + 2.0) < 0.1);
        CHECK(std::abs(km.centers(a, 1) - 1.0) < 0.1);
        CHECK(std::abs(km.centers(1 - a, 0) - 3.0) < 0.1);
        CHECK(std::abs(km.centers(1 - a, 1) + 1.0) < 0.1);
    }
    SUBCASE("objective never increases and results are seeded") {
        for (std::uint64_t seed = 0; seed < 20; ++seed) {
            Matrix pts(120, 4);
            std::mt19937_64 r(seed);
            std::uniform_real_distribution<double> u;
            for (double& v : pts.values()) v = u(r);
            const KMeansResult km = kmeans(pts, 5, seed);
            for (std::size_t i = 1; i < km.objective.size(); ++i) CHECK(km.objective[i] <= km.objective[i - 1]);
            CHECK(km.iterations <= 300);
            CHECK(kmeans(pts, 5, seed).centers == km.centers);
        }
    }
    SUBCASE("argument checks") {
        CHECK_THROWS_AS(kmeans(Matrix(3, 2), 4, 1), std::invalid_argument);
        CHECK_THROWS_AS(kmeans(Matrix(3, 2), 0, 1), std::invalid_argument);
    }
}

TEST_CASE("ensemble_unmix") {
    const HsiScene scene = generate_synthetic_hu(3, 12, 400, 2);
    SUBCASE("T = 1, k = p relabels the single run") {
        UnmixConfig c = small_hu(3);
        c.restarts = 1;
        const EnsembleResult e = ensemble_unmix(c, scene.cube);
        REQUIRE(e.run_sources.size() == 1);
        REQUIRE(e.centers.rows() == 3);
        const Matrix run_rows = transpose(e.run_sources[0]);
        const MatchResult m = matched_rmse(e.centers, run_rows);
        CHECK(m.average == 0.0);
        CHECK(e.counts == std::vector<std::size_t>{1, 1, 1});
    }
    SUBCASE("identical runs cluster onto that run") {
        UnmixConfig c = small_hu(3);
        const TrainRun run = train_once(c, scene.cube, 11);
        const Matrix s = predict_sources(run, scene.cube);
        const Matrix vecs = ensemble_vectors(c, {s, s, s});
        CHECK(vecs.rows() == 9);
        const KMeansResult km = kmeans(vecs, 3, 0);
        CHECK(matched_rmse(km.centers, transpose(s)).average <= 1e-15);
    }
    SUBCASE("results do not depend on the worker count") {
        UnmixConfig c = small_hu(3);
        const EnsembleResult serial = ensemble_unmix(c, scene.cube);
        c.workers = 3;
        const EnsembleResult parallel = ensemble_unmix(c, scene.cube);
        CHECK(serial.centers == parallel.centers);
        CHECK(serial.histories == parallel.histories);
        CHECK(serial.assignments == parallel.assignments);
        CHECK(serial.restarts == 4);
        CHECK(std::accumulate(serial.counts.begin(), serial.counts.end(), std::size_t{0}) == 12);
        for (const Matrix& s : serial.run_sources)
            for (std::size_t r = 0; r < s.rows(); ++r) {
                double sum = 0.0;
                for (double v : s.row(r)) {
                    CHECK(v >= 0.0);
                    CHECK(v <= 1.0);
                    sum += v;
                }
                CHECK(std::abs(sum - 1.0) <= 1e-6);
            }
        for (double v : serial.centers.values()) CHECK(std::isfinite(v));
    }
    SUBCASE("over-clustering and PNL z-scoring") {
        UnmixConfig c = small_hu(3);
        c.clusters = 5;
        CHECK(ensemble_unmix(c, scene.cube).centers.rows() == 5);

        UnmixConfig p = small_pnl();
        p.restarts = 2;
        const EnsembleResult e = ensemble_unmix(p, pnl_data(400, 3));
        for (std::size_t r = 0; r < e.centers.rows(); ++r) {
            const auto row = e.centers.row(r);
            CHECK(std::abs(std::accumulate(row.begin(), row.end(), 0.0) / 400.0) < 1e-9);
        }
    }
}
