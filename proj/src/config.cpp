#include "ddica/config.hpp"

#include <charconv>
#include <fstream>
#include <map>
#include <sstream>

#include "ddica/errors.hpp"
#include "ddica/io.hpp"

namespace ddica {

namespace {

std::string trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r");
    return std::string(s.substr(first, last - first + 1));
}

double to_double(const std::string& key, const std::string& v) {
    double out = 0.0;
    const auto res = std::from_chars(v.data(), v.data() + v.size(), out);
    if (res.ec != std::errc() || res.ptr != v.data() + v.size())
        throw ConfigError("'" + key + "': not a number: '" + v + "'");
    return out;
}

std::uint64_t to_uint(const std::string& key, const std::string& v) {
    std::uint64_t out = 0;
    const auto res = std::from_chars(v.data(), v.data() + v.size(), out);
    if (res.ec != std::errc() || res.ptr != v.data() + v.size())
        throw ConfigError("'" + key + "': not a non-negative integer: '" + v + "'");
    return out;
}

std::vector<std::size_t> to_list(const std::string& key, const std::string& v) {
    std::vector<std::size_t> out;
    if (trim(v).empty()) return out;
    std::stringstream ss(v);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(to_uint(key, trim(item)));
    return out;
}

}  // namespace

ConfigFile parse_config(std::string_view text) {
    std::map<std::string, std::string> kv;
    std::istringstream in{std::string(text)};
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        const std::string t = trim(line);
        if (t.empty()) continue;
        const auto eq = t.find('=');
        if (eq == std::string::npos)
            throw ConfigError("config line " + std::to_string(line_no) + ": expected key = value");
        const std::string key = trim(std::string_view(t).substr(0, eq));
        if (key.empty()) throw ConfigError("config line " + std::to_string(line_no) + ": empty key");
        if (!kv.emplace(key, trim(std::string_view(t).substr(eq + 1))).second)
            throw ConfigError("config line " + std::to_string(line_no) + ": duplicate key '" + key + "'");
    }

    ConfigFile c;
    const ExperimentKind kind = kv.count("kind") ? parse_kind(kv["kind"]) : ExperimentKind::pnl;
    c.unmix = kind == ExperimentKind::pnl ? UnmixConfig::pnl_defaults() : UnmixConfig::hu_defaults(3);
    UnmixConfig& u = c.unmix;
    for (const auto& [key, v] : kv) {
        if (key == "kind") continue;
        else if (key == "alpha") u.alpha = to_double(key, v);
        else if (key == "sigma") u.sigma = to_double(key, v);
        else if (key == "batch") u.batch = to_uint(key, v);
        else if (key == "hidden") u.hidden = to_list(key, v);
        else if (key == "out_units") u.out_units = to_uint(key, v);
        else if (key == "whiten_eps") u.whiten_eps = to_double(key, v);
        else if (key == "lr") u.adam.lr = to_double(key, v);
        else if (key == "beta1") u.adam.beta1 = to_double(key, v);
        else if (key == "beta2") u.adam.beta2 = to_double(key, v);
        else if (key == "adam_eps") u.adam.eps = to_double(key, v);
        else if (key == "iterations") u.iterations = to_uint(key, v);
        else if (key == "restarts") u.restarts = to_uint(key, v);
        else if (key == "clusters") u.clusters = to_uint(key, v);
        else if (key == "seed") u.seed = to_uint(key, v);
        else if (key == "workers") u.workers = to_uint(key, v);
        else if (key == "data") c.data = v;
        else if (key == "data_raw") c.data_raw = v;
        else if (key == "truth") c.truth = v;
        else if (key == "image_rows") c.image_rows = to_uint(key, v);
        else if (key == "image_cols") c.image_cols = to_uint(key, v);
        else if (key == "samples") c.samples = to_uint(key, v);
        else if (key == "out") c.out = v;
        else throw ConfigError("unknown config key '" + key + "'");
    }
    u.validate();
    return c;
}

ConfigFile load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

std::string echo_config(const ConfigFile& c) {
    const UnmixConfig& u = c.unmix;
    std::ostringstream os;
    os << "kind = " << to_string(u.kind) << '\n'
       << "alpha = " << format_double(u.alpha) << '\n'
       << "sigma = " << format_double(u.sigma) << '\n'
       << "batch = " << u.batch << '\n'
       << "hidden = ";
    for (std::size_t i = 0; i < u.hidden.size(); ++i) os << (i ? "," : "") << u.hidden[i];
    os << '\n'
       << "out_units = " << u.out_units << '\n'
       << "whiten_eps = " << format_double(u.whiten_eps) << '\n'
       << "lr = " << format_double(u.adam.lr) << '\n'
       << "beta1 = " << format_double(u.adam.beta1) << '\n'
       << "beta2 = " << format_double(u.adam.beta2) << '\n'
       << "adam_eps = " << format_double(u.adam.eps) << '\n'
       << "iterations = " << u.iterations << '\n'
       << "restarts = " << u.restarts << '\n'
       << "clusters = " << u.clusters << '\n'
       << "seed = " << u.seed << '\n'
       << "workers = " << u.workers << '\n'
       << "data = " << c.data << '\n'
       << "data_raw = " << c.data_raw << '\n'
       << "truth = " << c.truth << '\n'
       << "image_rows = " << c.image_rows << '\n'
       << "image_cols = " << c.image_cols << '\n'
       << "samples = " << c.samples << '\n'
       << "out = " << c.out << '\n';
    return os.str();
}

}  // namespace ddica
