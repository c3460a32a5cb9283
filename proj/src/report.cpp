#include "ddica/report.hpp"

#include <fstream>

#include "ddica/errors.hpp"

namespace ddica {

using nlohmann::json;

json to_json(const UnmixConfig& c) {
    return json{{"kind", to_string(c.kind)},
                {"alpha", c.alpha},
                {"sigma", c.sigma},
                {"batch", c.batch},
                {"hidden", c.hidden},
                {"out_units", c.out_units},
                {"whiten_eps", c.whiten_eps},
                {"lr", c.adam.lr},
                {"beta1", c.adam.beta1},
                {"beta2", c.adam.beta2},
                {"adam_eps", c.adam.eps},
                {"iterations", c.iterations},
                {"restarts", c.restarts},
                {"clusters", c.cluster_count()},
                {"seed", c.seed},
                {"workers", c.workers}};
}

json to_json(const ConfigFile& c) {
    json j = to_json(c.unmix);
    j["data"] = c.data;
    j["data_raw"] = c.data_raw;
    j["truth"] = c.truth;
    j["image_rows"] = c.image_rows;
    j["image_cols"] = c.image_cols;
    j["samples"] = c.samples;
    j["out"] = c.out;
    j["echo"] = echo_config(c);
    return j;
}

json to_json(const MatchResult& m) {
    json j{{"permutation", m.permutation}, {"per_source", m.per_source}, {"average", m.average}};
    if (!m.signs.empty()) j["signs"] = m.signs;
    return j;
}

json train_report(const ConfigFile& cfg, const TrainRun& run) {
    json j{{"config", to_json(cfg)},
           {"seed", run.seed},
           {"seconds", run.seconds},
           {"iterations", run.history.size()},
           {"history", run.history}};
    if (!run.history.empty()) {
        j["initial_tc"] = run.history.front();
        j["final_tc"] = run.history.back();
    }
    return j;
}

json ensemble_report(const ConfigFile& cfg, const EnsembleResult& res) {
    json finals = json::array();
    for (const auto& h : res.histories) finals.push_back(h.empty() ? json(nullptr) : json(h.back()));
    return json{{"config", to_json(cfg)},
                {"restarts", res.restarts},
                {"clusters", res.centers.rows()},
                {"counts", res.counts},
                {"final_tc", finals}};
}

void write_json(const std::filesystem::path& path, const json& j) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write " + path.string());
    out << j.dump(2) << '\n';
}

}  // namespace ddica
