#include "ddica/plot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "ddica/errors.hpp"

namespace ddica {

namespace {

constexpr double kWidth = 800.0;
constexpr double kPanel = 120.0;
constexpr double kMargin = 20.0;
constexpr std::size_t kMaxVertices = 4000;

std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

std::string escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '&': out += "&amp;"; break;
            case '"': out += "&quot;"; break;
            default: out += c;
        }
    }
    return out;
}

std::string header(double w, double h) {
    return "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 " + num(w) + " " + num(h) +
           "\" width=\"" + num(w) + "\" height=\"" + num(h) + "\">\n" +
           "<rect x=\"0\" y=\"0\" width=\"" + num(w) + "\" height=\"" + num(h) + "\" fill=\"white\"/>\n";
}

std::pair<double, double> range_of(std::span<const double> v) {
    double lo = v[0], hi = v[0];
    for (double x : v) {
        if (!std::isfinite(x)) throw DataError("plot: non-finite value");
        lo = std::min(lo, x);
        hi = std::max(hi, x);
    }
    if (hi - lo <= 0.0) {
        lo -= 0.5;
        hi += 0.5;
    }
    return {lo, hi};
}

std::string polyline(const std::vector<double>& xs, const std::vector<double>& ys, double x0,
                     double y0, double w, double h) {
    const auto [xlo, xhi] = range_of(xs);
    const auto [ylo, yhi] = range_of(ys);
    std::string pts;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        if (i) pts += ' ';
        pts += num(x0 + w * (xs[i] - xlo) / (xhi - xlo)) + "," +
               num(y0 + h - h * (ys[i] - ylo) / (yhi - ylo));
    }
    return "<polyline fill=\"none\" stroke=\"black\" stroke-width=\"1\" points=\"" + pts + "\"/>\n";
}

void require_data(const Matrix& m) {
    if (m.rows() == 0 || m.cols() == 0) throw DataError("plot: empty data");
}

}  // namespace

std::string svg_traces(const Matrix& values, const std::vector<std::string>& names) {
    require_data(values);
    const std::size_t p = values.cols(), n = values.rows();
    const std::size_t stride = (n + kMaxVertices - 1) / kMaxVertices;
    const double height = kMargin + p * (kPanel + kMargin);
    std::string svg = header(kWidth, height);
    for (std::size_t c = 0; c < p; ++c) {
        std::vector<double> xs, ys;
        for (std::size_t r = 0; r < n; r += stride) {
            xs.push_back(static_cast<double>(r));
            ys.push_back(values(r, c));
        }
        if (xs.size() == 1) {
            xs.push_back(xs[0] + 1.0);
            ys.push_back(ys[0]);
        }
        const double y0 = kMargin + c * (kPanel + kMargin);
        const std::string label = c < names.size() ? names[c] : std::to_string(c);
        svg += "<text x=\"" + num(kMargin) + "\" y=\"" + num(y0 - 4.0) + "\" font-size=\"12\">" +
               escape(label) + "</text>\n";
        svg += polyline(xs, ys, kMargin, y0, kWidth - 2 * kMargin, kPanel);
    }
    return svg + "</svg>\n";
}

std::string svg_loss(const Matrix& values) {
    require_data(values);
    std::vector<double> xs, ys;
    for (std::size_t r = 0; r < values.rows(); ++r) {
        xs.push_back(values.cols() >= 2 ? values(r, 0) : static_cast<double>(r));
        ys.push_back(values.cols() >= 2 ? values(r, 1) : values(r, 0));
    }
    const double h = 400.0;
    return header(kWidth, h) + polyline(xs, ys, kMargin, kMargin, kWidth - 2 * kMargin, h - 2 * kMargin) +
           "</svg>\n";
}

std::string svg_maps(const Matrix& values, std::size_t rows, std::size_t cols,
                     const std::vector<std::string>& names) {
    require_data(values);
    if (rows * cols != values.rows())
        throw DataError("plot: image " + std::to_string(rows) + "x" + std::to_string(cols) +
                        " does not cover " + std::to_string(values.rows()) + " pixels");
    const std::size_t p = values.cols();
    const double cell = std::max(1.0, std::floor(200.0 / static_cast<double>(std::max(rows, cols))));
    const double pw = cell * cols, ph = cell * rows;
    std::string svg = header(kMargin + p * (pw + kMargin), ph + 2 * kMargin);
    for (std::size_t c = 0; c < p; ++c) {
        const auto col = values.column(c);
        const auto [lo, hi] = range_of(col);
        const double x0 = kMargin + c * (pw + kMargin);
        const std::string label = c < names.size() ? names[c] : std::to_string(c);
        svg += "<g id=\"panel" + std::to_string(c) + "\"><title>" + escape(label) + "</title>\n";
        for (std::size_t r = 0; r < rows; ++r)
            for (std::size_t k = 0; k < cols; ++k) {
                const double v = (col[r * cols + k] - lo) / (hi - lo);
                const int g = static_cast<int>(std::lround(255.0 * std::clamp(v, 0.0, 1.0)));
                svg += "<rect x=\"" + num(x0 + k * cell) + "\" y=\"" + num(kMargin + r * cell) +
                       "\" width=\"" + num(cell) + "\" height=\"" + num(cell) + "\" fill=\"rgb(" +
                       std::to_string(g) + "," + std::to_string(g) + "," + std::to_string(g) + ")\"/>\n";
            }
        svg += "</g>\n";
    }
    return svg + "</svg>\n";
}

}  // namespace ddica
