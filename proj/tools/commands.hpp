#pragma once

#include <optional>
#include <string>
#include <vector>

#include "ddica/config.hpp"
#include "ddica/metrics.hpp"
#include "ddica/trainer.hpp"

namespace ddica::cli {

struct Dataset {
    Matrix data;   // samples x channels
    Matrix truth;  // samples x sources; empty without ground truth
    std::vector<std::string> truth_names;
    std::size_t rows = 0;  // image geometry when known
    std::size_t cols = 0;
};

// data ending in ".hdr" is an HSI header (payload from data_raw, or the same
// stem with ".bsq"); anything else is a CSV with a header row.
Dataset load_dataset(const ConfigFile& cfg);

struct UnmixOutcome {
    EnsembleResult ensemble;
    std::optional<MatchResult> match;      // ensemble centers vs truth
    std::vector<MatchResult> run_matches;  // each restart vs truth
    double median_run_rmse = 0.0;
};

UnmixOutcome run_unmix(const UnmixConfig& cfg, const Dataset& data, bool verbose = false);

struct SweepRow {
    std::size_t units = 0;
    double rmse = 0.0;
};

// One ensemble per unit count with k = units; needs ground truth.
std::vector<SweepRow> run_sweep(const UnmixConfig& cfg, const Dataset& data,
                                const std::vector<std::size_t>& units, bool verbose = false);

// Entry point; returns the process exit code.
int run(int argc, char** argv);

}  // namespace ddica::cli
