#pragma once

// File formats: PCM16 WAV, CSV matrices and the band-sequential
// hyperspectral container. Every reader throws DataError on malformed input.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "ddica/data.hpp"
#include "ddica/matrix.hpp"

namespace ddica {

struct WavData {
    std::vector<double> samples;  // in [-1, 1]
    std::uint32_t sample_rate = 16000;
};

// Mono 16-bit PCM only. -32768 maps to -1 and 32767 to +1.
WavData load_wav(const std::filesystem::path& path);
void save_wav(const std::filesystem::path& path, const WavData& wav);

struct CsvTable {
    std::vector<std::string> header;
    Matrix values;
};

// Header line plus numeric rows. Fields may be quoted.
CsvTable read_csv(const std::filesystem::path& path);
void write_csv(const std::filesystem::path& path, const Matrix& values,
               const std::vector<std::string>& header);

// Shortest decimal that round-trips exactly.
std::string format_double(double v);

// Header: "key = value" lines naming rows, cols, bands, dtype (float32),
// interleave (bsq) and byte_order (little). Data: raw float32, one full
// rows x cols plane per band, pixel index = row * cols + col.
void save_hsi(const std::filesystem::path& header_path, const std::filesystem::path& data_path,
              const HsiScene& scene);
HsiScene load_hsi(const std::filesystem::path& header_path, const std::filesystem::path& data_path,
                  const std::optional<std::filesystem::path>& truth_csv = std::nullopt);

}  // namespace ddica
