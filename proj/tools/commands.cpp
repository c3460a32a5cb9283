#include "commands.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "ddica/data.hpp"
#include "ddica/errors.hpp"
#include "ddica/io.hpp"
#include "ddica/plot.hpp"
#include "ddica/report.hpp"

namespace fs = std::filesystem;

namespace ddica::cli {

namespace {

std::vector<std::string> index_header(std::size_t n) {
    std::vector<std::string> h;
    for (std::size_t i = 0; i < n; ++i) h.push_back(std::to_string(i));
    return h;
}

fs::path prepare_out(const std::string& out) {
    const fs::path dir = out.empty() ? fs::path(".") : fs::path(out);
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw DataError("cannot create output directory " + dir.string() + ": " + ec.message());
    return dir;
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write " + path.string());
    out << text;
}

double median(std::vector<double> v) {
    if (v.empty()) return 0.0;
    std::sort(v.begin(), v.end());
    const std::size_t m = v.size() / 2;
    return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

MatchResult match_sources(const Matrix& pred_rows, const Matrix& truth_rows) {
    if (pred_rows.cols() != truth_rows.cols())
        throw DataError("prediction has " + std::to_string(pred_rows.cols()) + " samples, truth has " +
                        std::to_string(truth_rows.cols()));
    return pred_rows.rows() == truth_rows.rows() ? matched_rmse(pred_rows, truth_rows)
                                                 : match_centers_to_truth(pred_rows, truth_rows);
}

void print_match(const MatchResult& m, const std::string& metric) {
    for (std::size_t i = 0; i < m.per_source.size(); ++i) {
        std::cout << "source " << i << " <- pred " << m.permutation[i];
        if (!m.signs.empty()) std::cout << " sign " << (m.signs[i] < 0 ? "-" : "+");
        std::cout << " " << metric << " " << format_double(m.per_source[i]) << '\n';
    }
    std::cout << "average " << metric << " " << format_double(m.average) << '\n';
}

}  // namespace

Dataset load_dataset(const ConfigFile& cfg) {
    if (cfg.data.empty()) throw ConfigError("no data path given (config key 'data' or --data)");
    Dataset d;
    const fs::path path(cfg.data);
    if (path.extension() == ".hdr") {
        const fs::path raw = cfg.data_raw.empty() ? fs::path(path).replace_extension(".bsq") : fs::path(cfg.data_raw);
        std::optional<fs::path> truth;
        if (!cfg.truth.empty()) truth = cfg.truth;
        HsiScene scene = load_hsi(path, raw, truth);
        d.data = std::move(scene.cube);
        d.truth = std::move(scene.abundances);
        d.truth_names = scene.names;
        d.rows = scene.rows;
        d.cols = scene.cols;
    } else {
        d.data = read_csv(path).values;
        if (!cfg.truth.empty()) {
            CsvTable t = read_csv(cfg.truth);
            d.truth = std::move(t.values);
            d.truth_names = std::move(t.header);
        }
        d.rows = cfg.image_rows;
        d.cols = cfg.image_cols;
    }
    if (d.data.rows() == 0) throw DataError(cfg.data + ": no samples");
    if (!d.truth.empty() && d.truth.rows() != d.data.rows())
        throw DataError("truth has " + std::to_string(d.truth.rows()) + " rows, data has " +
                        std::to_string(d.data.rows()));
    return d;
}

UnmixOutcome run_unmix(const UnmixConfig& cfg, const Dataset& data, bool verbose) {
    UnmixOutcome out;
    ProgressFn progress;
    if (verbose)
        progress = [&](std::size_t done, double tc) {
            std::cerr << "restart " << done << "/" << cfg.restarts << " final TC " << tc << '\n';
        };
    out.ensemble = ensemble_unmix(cfg, data.data, progress);
    if (!data.truth.empty()) {
        const Matrix truth_rows = data.truth.transposed();
        out.match = match_sources(out.ensemble.centers, truth_rows);
        std::vector<double> run_rmse;
        for (const Matrix& s : out.ensemble.run_sources) {
            out.run_matches.push_back(match_sources(s.transposed(), truth_rows));
            run_rmse.push_back(out.run_matches.back().average);
        }
        out.median_run_rmse = median(std::move(run_rmse));
    }
    return out;
}

std::vector<SweepRow> run_sweep(const UnmixConfig& cfg, const Dataset& data,
                                const std::vector<std::size_t>& units, bool verbose) {
    if (data.truth.empty()) throw ConfigError("sweep needs ground truth (config key 'truth')");
    std::vector<SweepRow> rows;
    for (std::size_t u : units) {
        if (u < data.truth.cols())
            throw ConfigError("sweep: " + std::to_string(u) + " units is fewer than " +
                              std::to_string(data.truth.cols()) + " sources");
        UnmixConfig c = cfg;
        c.out_units = u;
        c.clusters = u;
        c.validate();
        const UnmixOutcome o = run_unmix(c, data, verbose);
        rows.push_back({u, o.match->average});
        if (verbose) std::cerr << "units " << u << " rmse " << o.match->average << '\n';
    }
    return rows;
}

namespace {

struct Common {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> workers;
    std::string out;
    std::string data;
    std::string truth;
    std::string kind;
    std::optional<std::size_t> iterations;
    bool verbose = false;
};

void add_common(CLI::App* sub, Common& c) {
    sub->add_option("--config", c.config, "key=value config file");
    sub->add_option("--seed", c.seed, "master seed");
    sub->add_option("--workers", c.workers, "parallel restarts");
    sub->add_option("--out", c.out, "output directory");
}

void add_training(CLI::App* sub, Common& c) {
    sub->add_option("--data", c.data, "mixtures CSV or HSI header");
    sub->add_option("--truth", c.truth, "ground-truth sources CSV");
    sub->add_option("--kind", c.kind, "pnl or hu (when no config is given)");
    sub->add_option("--iterations", c.iterations, "training steps per restart");
    sub->add_flag("-v,--verbose", c.verbose, "progress on stderr");
}

ConfigFile resolve(const Common& c) {
    ConfigFile cfg;
    if (!c.config.empty()) {
        cfg = load_config(c.config);
        if (!c.kind.empty() && parse_kind(c.kind) != cfg.unmix.kind)
            throw ConfigError("--kind contradicts the config file");
    } else {
        cfg = parse_config(c.kind.empty() ? "" : "kind = " + c.kind);
    }
    if (c.seed) cfg.unmix.seed = *c.seed;
    if (c.workers) cfg.unmix.workers = *c.workers;
    if (c.iterations) cfg.unmix.iterations = *c.iterations;
    if (!c.out.empty()) cfg.out = c.out;
    if (!c.data.empty()) cfg.data = c.data;
    if (!c.truth.empty()) cfg.truth = c.truth;
    cfg.unmix.validate();
    return cfg;
}

int cmd_gen_pnl(const Common& c, bool synthetic, const std::vector<std::string>& wavs,
                std::optional<std::size_t> samples) {
    ConfigFile cfg = resolve(c);
    if (samples) cfg.samples = *samples;
    if (!synthetic && wavs.size() != 2) throw ConfigError("gen-pnl needs --synthetic or two --wav paths");
    const std::uint64_t seed = cfg.unmix.seed;
    Matrix sources;
    if (synthetic) {
        sources = synthetic_pnl_sources(cfg.samples, seed);
    } else {
        const WavData a = load_wav(wavs[0]);
        const WavData b = load_wav(wavs[1]);
        if (std::min(a.samples.size(), b.samples.size()) < cfg.samples)
            throw DataError("audio too short: need " + std::to_string(cfg.samples) + " samples, " + wavs[0] +
                            " has " + std::to_string(a.samples.size()) + ", " + wavs[1] + " has " +
                            std::to_string(b.samples.size()));
        sources = pnl_sources_from_signals(a.samples, b.samples, cfg.samples, seed);
    }
    const PnlSpec spec = default_pnl_spec(seed);
    const Matrix mixtures = generate_pnl(sources, spec);

    const fs::path dir = prepare_out(cfg.out);
    write_csv(dir / "sources.csv", sources.transposed(), index_header(3));
    write_csv(dir / "mixtures.csv", mixtures, index_header(3));
    std::string echo = "seed = " + std::to_string(seed) + "\nsamples = " + std::to_string(cfg.samples) +
                       "\nsource = " + (synthetic ? std::string("synthetic") : wavs[0] + "," + wavs[1]) +
                       "\nmixing = ";
    for (std::size_t r = 0; r < 3; ++r)
        for (std::size_t k = 0; k < 3; ++k)
            echo += format_double(spec.mixing(r, k)) + (k < 2 ? "," : (r < 2 ? ";" : "\n"));
    echo += "nonlinearities = ";
    for (std::size_t j = 0; j < 3; ++j) echo += to_string(spec.nonlinearities[j]) + (j < 2 ? "," : "\n");
    write_text(dir / "pnl_spec.txt", echo);
    std::cout << "wrote " << cfg.samples << " samples to " << dir.string() << '\n';
    return 0;
}

int cmd_gen_hu(const Common& c, std::size_t p, std::size_t d, std::size_t n, bool noiseless, double snr) {
    ConfigFile cfg = resolve(c);
    SyntheticHuOptions opts;
    opts.noiseless = noiseless;
    opts.snr_db = snr;
    HsiScene scene;
    try {
        scene = generate_synthetic_hu(p, d, n, cfg.unmix.seed, opts);
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
    const fs::path dir = prepare_out(cfg.out);
    save_hsi(dir / "cube.hdr", dir / "cube.bsq", scene);
    write_csv(dir / "abundances.csv", scene.abundances, scene.names);
    write_csv(dir / "endmembers.csv", scene.endmembers, index_header(d));
    std::cout << "wrote " << scene.rows << "x" << scene.cols << "x" << d << " scene to " << dir.string() << '\n';
    return 0;
}

int cmd_train(const Common& c) {
    const ConfigFile cfg = resolve(c);
    const Dataset data = load_dataset(cfg);
    ProgressFn progress;
    if (c.verbose)
        progress = [&](std::size_t it, double tc) {
            if (it % 50 == 0) std::cerr << "iteration " << it << " TC " << tc << '\n';
        };
    const TrainRun run = train_once(cfg.unmix, data.data, cfg.unmix.seed, progress);
    const Matrix sources = predict_sources(run, data.data);
    const fs::path dir = prepare_out(cfg.out);
    save_checkpoint(dir / "checkpoint.txt", run.specs, run.params);
    write_csv(dir / "sources.csv", sources, index_header(sources.cols()));
    Matrix hist(run.history.size(), 2);
    for (std::size_t i = 0; i < run.history.size(); ++i) {
        hist(i, 0) = static_cast<double>(i);
        hist(i, 1) = run.history[i];
    }
    write_csv(dir / "history.csv", hist, {"iteration", "tc"});
    auto report = train_report(cfg, run);
    if (!data.truth.empty()) {
        const Matrix truth_rows = data.truth.transposed();
        const Matrix pred_rows = sources.transposed();
        if (cfg.unmix.kind == ExperimentKind::pnl && pred_rows.rows() == truth_rows.rows())
            report["abs_corr"] = to_json(matched_abs_corr(pred_rows, truth_rows));
        report["rmse"] = to_json(match_sources(pred_rows, truth_rows));
    }
    write_json(dir / "report.json", report);
    if (!run.history.empty())
        std::cout << "TC " << format_double(run.history.front()) << " -> " << format_double(run.history.back())
                  << " bits over " << run.history.size() << " iterations\n";
    else
        std::cout << "0 iterations\n";
    return 0;
}

int cmd_unmix(const Common& c, std::optional<std::size_t> restarts, std::optional<std::size_t> clusters) {
    ConfigFile cfg = resolve(c);
    if (restarts) cfg.unmix.restarts = *restarts;
    if (clusters) cfg.unmix.clusters = *clusters;
    cfg.unmix.validate();
    const Dataset data = load_dataset(cfg);
    const UnmixOutcome o = run_unmix(cfg.unmix, data, c.verbose);
    const fs::path dir = prepare_out(cfg.out);
    write_csv(dir / "centers.csv", o.ensemble.centers.transposed(), index_header(o.ensemble.centers.rows()));
    auto report = ensemble_report(cfg, o.ensemble);
    if (o.match) {
        report["rmse"] = to_json(*o.match);
        report["median_run_rmse"] = o.median_run_rmse;
        print_match(*o.match, "rmse");
        std::cout << "median single-restart rmse " << format_double(o.median_run_rmse) << '\n';
    }
    write_json(dir / "report.json", report);
    return 0;
}

int cmd_eval(const std::string& pred, const std::string& truth, const std::string& mode, const std::string& out) {
    const Matrix p = read_csv(pred).values.transposed();
    const Matrix t = read_csv(truth).values.transposed();
    MatchResult m;
    if (mode == "corr") {
        if (p.rows() != t.rows() || p.cols() != t.cols())
            throw DataError("shape mismatch: pred " + std::to_string(p.cols()) + "x" + std::to_string(p.rows()) +
                            ", truth " + std::to_string(t.cols()) + "x" + std::to_string(t.rows()));
        m = matched_abs_corr(p, t);
    } else if (mode == "rmse") {
        if (p.rows() < t.rows()) throw DataError("pred has fewer sources than truth");
        m = match_sources(p, t);
    } else {
        throw ConfigError("--mode must be corr or rmse");
    }
    print_match(m, mode == "corr" ? "abs_corr" : "rmse");
    if (!out.empty()) {
        auto j = to_json(m);
        j["mode"] = mode;
        write_json(prepare_out(out) / "eval.json", j);
    }
    return 0;
}

int cmd_sweep(const Common& c, const std::vector<std::size_t>& units) {
    const ConfigFile cfg = resolve(c);
    if (cfg.unmix.kind != ExperimentKind::hu) throw ConfigError("sweep needs kind = hu");
    if (units.empty()) throw ConfigError("sweep needs --units");
    const Dataset data = load_dataset(cfg);
    const auto rows = run_sweep(cfg.unmix, data, units, c.verbose);
    Matrix table(rows.size(), 2);
    for (std::size_t i = 0; i < rows.size(); ++i) {
        table(i, 0) = static_cast<double>(rows[i].units);
        table(i, 1) = rows[i].rmse;
        std::cout << rows[i].units << " units: rmse " << format_double(rows[i].rmse) << '\n';
    }
    write_csv(prepare_out(cfg.out) / "sweep.csv", table, {"units", "rmse"});
    return 0;
}

int cmd_plot(const std::string& csv, const std::string& kind, std::size_t rows, std::size_t cols,
             const std::string& out) {
    const CsvTable t = read_csv(csv);
    if (t.values.rows() == 0) throw DataError(csv + ": no data rows");
    std::string svg;
    if (kind == "traces")
        svg = svg_traces(t.values, t.header);
    else if (kind == "loss")
        svg = svg_loss(t.values);
    else if (kind == "maps") {
        if (rows == 0 || cols == 0) throw ConfigError("maps needs --rows and --cols");
        svg = svg_maps(t.values, rows, cols, t.header);
    } else
        throw ConfigError("--kind must be traces, maps or loss");
    const fs::path path = prepare_out(out) / (kind + ".svg");
    write_text(path, svg);
    std::cout << "wrote " << path.string() << '\n';
    return 0;
}

}  // namespace

int run(int argc, char** argv) {
    CLI::App app{"Deep deterministic ICA: total-correlation unmixing networks"};
    app.require_subcommand(1);
    Common common;

    auto* gen_pnl = app.add_subcommand("gen-pnl", "generate a post-nonlinear mixture");
    add_common(gen_pnl, common);
    bool synthetic = false;
    std::vector<std::string> wavs;
    std::optional<std::size_t> samples;
    gen_pnl->add_flag("--synthetic", synthetic, "use speech surrogates instead of audio files");
    gen_pnl->add_option("--wav", wavs, "two 16-bit mono WAV files")->expected(2);
    gen_pnl->add_option("--samples", samples, "samples per source (default 60000)");

    auto* gen_hu = app.add_subcommand("gen-hu", "generate a synthetic hyperspectral scene");
    add_common(gen_hu, common);
    std::size_t hu_p = 3, hu_d = 50, hu_n = 2500;
    bool noiseless = false;
    double snr = 30.0;
    gen_hu->add_option("--sources", hu_p, "endmembers");
    gen_hu->add_option("--bands", hu_d, "spectral bands");
    gen_hu->add_option("--pixels", hu_n, "pixels");
    gen_hu->add_option("--snr", snr, "signal-to-noise ratio in dB");
    gen_hu->add_flag("--noiseless", noiseless, "omit sensor noise");

    auto* train = app.add_subcommand("train", "train one unmixing network");
    add_common(train, common);
    add_training(train, common);

    auto* unmix = app.add_subcommand("unmix", "multi-restart ensemble with k-means");
    add_common(unmix, common);
    add_training(unmix, common);
    std::optional<std::size_t> restarts, clusters;
    unmix->add_option("--restarts", restarts, "restart count T");
    unmix->add_option("--clusters", clusters, "cluster count k");

    auto* eval = app.add_subcommand("eval", "permutation-matched metrics");
    add_common(eval, common);
    std::string pred_path, truth_path, mode = "rmse";
    eval->add_option("--pred", pred_path, "predicted sources CSV")->required();
    eval->add_option("--truth", truth_path, "true sources CSV")->required();
    eval->add_option("--mode", mode, "corr or rmse");

    auto* sweep = app.add_subcommand("sweep", "ensemble RMSE across output-unit counts");
    add_common(sweep, common);
    add_training(sweep, common);
    std::vector<std::size_t> units;
    sweep->add_option("--units", units, "unit counts, e.g. 3,4,5,6")->delimiter(',');

    auto* plot = app.add_subcommand("plot", "render a CSV as SVG");
    add_common(plot, common);
    std::string plot_csv, plot_kind = "traces";
    std::size_t plot_rows = 0, plot_cols = 0;
    plot->add_option("--csv", plot_csv, "input CSV")->required();
    plot->add_option("--kind", plot_kind, "traces, maps or loss");
    plot->add_option("--rows", plot_rows, "image rows (maps)");
    plot->add_option("--cols", plot_cols, "image columns (maps)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (*gen_pnl) return cmd_gen_pnl(common, synthetic, wavs, samples);
        if (*gen_hu) return cmd_gen_hu(common, hu_p, hu_d, hu_n, noiseless, snr);
        if (*train) return cmd_train(common);
        if (*unmix) return cmd_unmix(common, restarts, clusters);
        if (*eval) return cmd_eval(pred_path, truth_path, mode, common.out);
        if (*sweep) return cmd_sweep(common, units);
        if (*plot) return cmd_plot(plot_csv, plot_kind, plot_rows, plot_cols, common.out);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    } catch (const DataError& e) {
        std::cerr << "data error: " << e.what() << '\n';
        return 3;
    } catch (const DivergenceError& e) {
        std::cerr << "diverged at iteration " << e.iteration() << ": " << e.what() << '\n';
        return 4;
    } catch (const std::invalid_argument& e) {
        std::cerr << "data error: " << e.what() << '\n';
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}

}  // namespace ddica::cli
