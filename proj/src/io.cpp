#include "ddica/io.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <map>
#include <sstream>

#include "ddica/errors.hpp"

static_assert(std::endian::native == std::endian::little, "little-endian host required");

namespace ddica {

namespace {

std::vector<char> read_bytes(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open " + path.string());
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

template <class T>
T read_le(const std::vector<char>& b, std::size_t off) {
    T v;
    std::memcpy(&v, b.data() + off, sizeof(T));
    return v;
}

template <class T>
void write_le(std::ostream& out, T v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

std::string trim(std::string s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string::npos) return {};
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

}  // namespace

WavData load_wav(const std::filesystem::path& path) {
    const auto b = read_bytes(path);
    const std::string where = path.string() + ": ";
    if (b.size() < 12 || std::memcmp(b.data(), "RIFF", 4) != 0 || std::memcmp(b.data() + 8, "WAVE", 4) != 0)
        throw DataError(where + "RIFF header: not a RIFF/WAVE file");

    WavData wav;
    bool have_fmt = false;
    std::size_t off = 12;
    while (off + 8 <= b.size()) {
        const std::string id(b.data() + off, 4);
        const auto len = read_le<std::uint32_t>(b, off + 4);
        const std::size_t body = off + 8;
        if (body + len > b.size())
            throw DataError(where + "chunk '" + id + "' truncated: declares " + std::to_string(len) +
                            " bytes, " + std::to_string(b.size() - body) + " available");
        if (id == "fmt ") {
            if (len < 16) throw DataError(where + "chunk 'fmt ' too short");
            const auto format = read_le<std::uint16_t>(b, body);
            const auto channels = read_le<std::uint16_t>(b, body + 2);
            wav.sample_rate = read_le<std::uint32_t>(b, body + 4);
            const auto bits = read_le<std::uint16_t>(b, body + 14);
            if (format != 1)
                throw DataError(where + "chunk 'fmt ': unsupported encoding " + std::to_string(format) +
                                " (need PCM)");
            if (channels != 1)
                throw DataError(where + "chunk 'fmt ': " + std::to_string(channels) +
                                " channels (need mono)");
            if (bits != 16)
                throw DataError(where + "chunk 'fmt ': " + std::to_string(bits) +
                                "-bit samples (need 16)");
            have_fmt = true;
        } else if (id == "data") {
            if (!have_fmt) throw DataError(where + "chunk 'data' precedes chunk 'fmt '");
            if (len % 2 != 0) throw DataError(where + "chunk 'data': odd byte count");
            wav.samples.resize(len / 2);
            for (std::size_t i = 0; i < wav.samples.size(); ++i) {
                const auto s = read_le<std::int16_t>(b, body + 2 * i);
                wav.samples[i] = s < 0 ? s / 32768.0 : s / 32767.0;
            }
            return wav;
        }
        off = body + len + (len & 1u);
    }
    throw DataError(where + (have_fmt ? "chunk 'data' missing" : "chunk 'fmt ' missing"));
}

void save_wav(const std::filesystem::path& path, const WavData& wav) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write " + path.string());
    const auto bytes = static_cast<std::uint32_t>(wav.samples.size() * 2);
    out.write("RIFF", 4);
    write_le<std::uint32_t>(out, 36 + bytes);
    out.write("WAVEfmt ", 8);
    write_le<std::uint32_t>(out, 16);
    write_le<std::uint16_t>(out, 1);
    write_le<std::uint16_t>(out, 1);
    write_le<std::uint32_t>(out, wav.sample_rate);
    write_le<std::uint32_t>(out, wav.sample_rate * 2);
    write_le<std::uint16_t>(out, 2);
    write_le<std::uint16_t>(out, 16);
    out.write("data", 4);
    write_le<std::uint32_t>(out, bytes);
    for (double x : wav.samples) {
        const double c = std::clamp(x, -1.0, 1.0);
        const auto s = static_cast<std::int16_t>(std::lround(c < 0 ? c * 32768.0 : c * 32767.0));
        write_le<std::int16_t>(out, s);
    }
}

std::string format_double(double v) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line, std::size_t line_no) {
    std::vector<std::string> fields;
    std::string cur;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
                cur += '"';
                ++i;
            } else if (c == '"') {
                quoted = false;
            } else {
                cur += c;
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            fields.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur += c;
        }
    }
    if (quoted) throw DataError("csv line " + std::to_string(line_no) + ": unterminated quote");
    fields.push_back(cur);
    return fields;
}

std::string quote_csv(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string q = "\"";
    for (char c : s) q += c == '"' ? std::string("\"\"") : std::string(1, c);
    return q + "\"";
}

}  // namespace

CsvTable read_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open " + path.string());
    CsvTable t;
    std::string line;
    if (!std::getline(in, line)) throw DataError(path.string() + ": empty csv");
    t.header = split_csv_line(line, 1);
    for (auto& h : t.header) h = trim(h);
    const std::size_t cols = t.header.size();
    std::vector<double> values;
    std::size_t line_no = 1, rows = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        const auto fields = split_csv_line(line, line_no);
        if (fields.size() != cols)
            throw DataError(path.string() + " line " + std::to_string(line_no) + ": " +
                            std::to_string(fields.size()) + " fields, header has " +
                            std::to_string(cols));
        for (const auto& f : fields) {
            const std::string s = trim(f);
            double v = 0.0;
            const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
            if (res.ec != std::errc() || res.ptr != s.data() + s.size())
                throw DataError(path.string() + " line " + std::to_string(line_no) +
                                ": not a number: '" + s + "'");
            values.push_back(v);
        }
        ++rows;
    }
    t.values = Matrix(rows, cols, std::move(values));
    return t;
}

void write_csv(const std::filesystem::path& path, const Matrix& values,
               const std::vector<std::string>& header) {
    require(header.size() == values.cols(), "write_csv: header width != column count");
    std::ofstream out(path);
    if (!out) throw DataError("cannot write " + path.string());
    for (std::size_t c = 0; c < header.size(); ++c) out << (c ? "," : "") << quote_csv(header[c]);
    out << '\n';
    for (std::size_t r = 0; r < values.rows(); ++r) {
        for (std::size_t c = 0; c < values.cols(); ++c)
            out << (c ? "," : "") << format_double(values(r, c));
        out << '\n';
    }
    if (!out) throw DataError("write failed: " + path.string());
}

void save_hsi(const std::filesystem::path& header_path, const std::filesystem::path& data_path,
              const HsiScene& scene) {
    require(scene.rows * scene.cols == scene.pixels(), "save_hsi: rows x cols != pixel count");
    {
        std::ofstream h(header_path);
        if (!h) throw DataError("cannot write " + header_path.string());
        h << "rows = " << scene.rows << "\ncols = " << scene.cols << "\nbands = " << scene.bands()
          << "\ndtype = float32\ninterleave = bsq\nbyte_order = little\n";
        if (!scene.names.empty()) {
            h << "names = ";
            for (std::size_t i = 0; i < scene.names.size(); ++i) h << (i ? "," : "") << scene.names[i];
            h << '\n';
        }
    }
    std::ofstream d(data_path, std::ios::binary);
    if (!d) throw DataError("cannot write " + data_path.string());
    for (std::size_t band = 0; band < scene.bands(); ++band)
        for (std::size_t px = 0; px < scene.pixels(); ++px)
            write_le<float>(d, static_cast<float>(scene.cube(px, band)));
    if (!d) throw DataError("write failed: " + data_path.string());
}

HsiScene load_hsi(const std::filesystem::path& header_path, const std::filesystem::path& data_path,
                  const std::optional<std::filesystem::path>& truth_csv) {
    std::ifstream h(header_path);
    if (!h) throw DataError("cannot open " + header_path.string());
    std::map<std::string, std::string> kv;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(h, line)) {
        ++line_no;
        line = trim(line);
        if (line.empty() || line[0] == '#') continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw DataError(header_path.string() + " line " + std::to_string(line_no) + ": expected key = value");
        kv[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
    }
    auto need = [&](const std::string& key) {
        const auto it = kv.find(key);
        if (it == kv.end()) throw DataError(header_path.string() + ": missing key '" + key + "'");
        return it->second;
    };
    auto need_size = [&](const std::string& key) {
        const std::string v = need(key);
        std::size_t out = 0;
        const auto res = std::from_chars(v.data(), v.data() + v.size(), out);
        if (res.ec != std::errc() || res.ptr != v.data() + v.size() || out == 0)
            throw DataError(header_path.string() + ": '" + key + "' must be a positive integer");
        return out;
    };
    HsiScene scene;
    scene.rows = need_size("rows");
    scene.cols = need_size("cols");
    const std::size_t bands = need_size("bands");
    if (need("dtype") != "float32") throw DataError(header_path.string() + ": dtype must be float32");
    if (need("interleave") != "bsq") throw DataError(header_path.string() + ": interleave must be bsq");
    if (kv.count("byte_order") && kv["byte_order"] != "little")
        throw DataError(header_path.string() + ": byte_order must be little");
    if (kv.count("names")) {
        std::stringstream ss(kv["names"]);
        std::string name;
        while (std::getline(ss, name, ',')) scene.names.push_back(trim(name));
    }

    const auto bytes = read_bytes(data_path);
    const std::size_t pixels = scene.rows * scene.cols;
    const std::size_t expected = pixels * bands * sizeof(float);
    if (bytes.size() != expected)
        throw DataError(data_path.string() + ": expected " + std::to_string(expected) +
                        " bytes, found " + std::to_string(bytes.size()) + " bytes");
    scene.cube = Matrix(pixels, bands);
    for (std::size_t band = 0; band < bands; ++band)
        for (std::size_t px = 0; px < pixels; ++px)
            scene.cube(px, band) = read_le<float>(bytes, (band * pixels + px) * sizeof(float));

    if (truth_csv) {
        CsvTable t = read_csv(*truth_csv);
        if (t.values.rows() != pixels)
            throw DataError(truth_csv->string() + ": " + std::to_string(t.values.rows()) +
                            " rows, scene has " + std::to_string(pixels) + " pixels");
        scene.abundances = std::move(t.values);
        if (scene.names.empty()) scene.names = t.header;
    }
    return scene;
}

}  // namespace ddica
