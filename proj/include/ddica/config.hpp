#pragma once

// Flat "key = value" run configuration. '#' starts a comment. Unknown keys,
// duplicate keys and malformed values raise ConfigError.
//
// Keys: kind, alpha, sigma, batch, hidden (comma list), out_units,
// whiten_eps, lr, beta1, beta2, adam_eps, iterations, restarts, clusters,
// seed, workers, data, data_raw, truth, image_rows, image_cols, samples, out.

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

#include "ddica/trainer.hpp"

namespace ddica {

struct ConfigFile {
    UnmixConfig unmix;
    std::string data;      // mixtures CSV, cube CSV or HSI header
    std::string data_raw;  // HSI float32 payload when data is an HSI header
    std::string truth;     // ground-truth CSV
    std::size_t image_rows = 0;
    std::size_t image_cols = 0;
    std::size_t samples = 60000;  // generated PNL length
    std::string out;
};

// Defaults depend on kind (pnl or hu); kind may appear anywhere in the text.
ConfigFile parse_config(std::string_view text);
ConfigFile load_config(const std::filesystem::path& path);

// Every key with its value; parse_config(echo_config(c)) reproduces c.
std::string echo_config(const ConfigFile& c);

}  // namespace ddica
