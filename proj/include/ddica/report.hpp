#pragma once

#include <filesystem>

#include <json.hpp>

#include "ddica/config.hpp"
#include "ddica/metrics.hpp"
#include "ddica/trainer.hpp"

namespace ddica {

nlohmann::json to_json(const UnmixConfig& c);
nlohmann::json to_json(const ConfigFile& c);
nlohmann::json to_json(const MatchResult& m);

// config, seed, seconds, iterations, history, initial_tc, final_tc.
nlohmann::json train_report(const ConfigFile& cfg, const TrainRun& run);

// config, restarts, clusters, counts, per-restart final TC.
nlohmann::json ensemble_report(const ConfigFile& cfg, const EnsembleResult& res);

void write_json(const std::filesystem::path& path, const nlohmann::json& j);

}  // namespace ddica
