#pragma once

// Deterministic SVG rendering: fixed viewBox, fixed number formatting, no
// timestamps. All functions throw DataError on empty input.

#include <string>
#include <vector>

#include "ddica/matrix.hpp"

namespace ddica {

// One stacked panel per column; one polyline per panel.
std::string svg_traces(const Matrix& values, const std::vector<std::string>& names);

// Column 1 against column 0 (or row index for a single column); one polyline.
std::string svg_loss(const Matrix& values);

// One grayscale raster panel per column, each rows x cols pixels (row-major).
std::string svg_maps(const Matrix& values, std::size_t rows, std::size_t cols,
                     const std::vector<std::string>& names);

}  // namespace ddica
