#pragma once

// File formats. All text formats are line oriented with `#` comment lines;
// doubles are written with shortest round-trip precision so parse-back is
// exact.
//
//   ray set        `U x_t y_t x_r y_r` or `B x_t y_t x_h y_h x_r y_r`
//   travel times   one decimal value per line, index-aligned with the ray set
//   abstract set   `A k i1 ... ik` with indices into the companion ray set
//   grid vector    one value per line, row-major
//   weight matrix  binary container, little endian:
//                    "BRT1" | n f64 | cell_size f64 | rows u64
//                    | rows×u32 entry counts | Σcounts×u32 cell indices
//                    | Σcounts×f64 weights | rows×f64 rhs
//
// Filesystem failures raise io_error; malformed content raises
// std::invalid_argument with the offending path attached.

#include "brt/linsys.hpp"
#include "brt/rays.hpp"

#include <charconv>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

namespace brt {

struct io_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

inline std::string format_double(double v) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

namespace detail {

inline double parse_double(std::string_view token, const std::string& context) {
    double v = 0.0;
    const auto res = std::from_chars(token.data(), token.data() + token.size(), v);
    if (res.ec != std::errc{} || res.ptr != token.data() + token.size())
        throw std::invalid_argument(context + ": bad number '" + std::string(token) + "'");
    return v;
}

inline std::uint64_t parse_uint(std::string_view token, const std::string& context) {
    std::uint64_t v = 0;
    const auto res = std::from_chars(token.data(), token.data() + token.size(), v);
    if (res.ec != std::errc{} || res.ptr != token.data() + token.size())
        throw std::invalid_argument(context + ": bad count '" + std::string(token) + "'");
    return v;
}

inline std::vector<std::string_view> split_ws(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t i = 0;
    while (i < line.size()) {
        while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
        std::size_t j = i;
        while (j < line.size() && line[j] != ' ' && line[j] != '\t' && line[j] != '\r') ++j;
        if (j > i) out.push_back(line.substr(i, j - i));
        i = j;
    }
    return out;
}

inline std::ofstream open_out(const std::filesystem::path& path, std::ios::openmode mode = {}) {
    std::ofstream out(path, mode);
    if (!out) throw io_error("cannot open for writing: " + path.string());
    return out;
}

inline std::ifstream open_in(const std::filesystem::path& path, std::ios::openmode mode = {}) {
    std::ifstream in(path, mode);
    if (!in) throw io_error("cannot open for reading: " + path.string());
    return in;
}

inline void finish_write(std::ofstream& out, const std::filesystem::path& path) {
    out.flush();
    if (!out) throw io_error("write failed: " + path.string());
}

}  // namespace detail

// ---------------------------------------------------------------------------
// ray sets
// ---------------------------------------------------------------------------

inline void write_ray_set(const std::filesystem::path& path, const RaySet& set,
                          std::span<const std::string> extra_comments = {}) {
    auto out = detail::open_out(path);
    out << "# ray set: U x_t y_t x_r y_r | B x_t y_t x_h y_h x_r y_r\n";
    out << "# seed=" << set.seed << "\n";
    for (const auto& c : extra_comments) out << "# " << c << "\n";
    for (const auto& ray : set.rays) {
        if (ray.kind == RayKind::broken) {
            out << "B " << format_double(ray.t.x) << ' ' << format_double(ray.t.y) << ' '
                << format_double(ray.h.x) << ' ' << format_double(ray.h.y) << ' '
                << format_double(ray.r.x) << ' ' << format_double(ray.r.y) << '\n';
        } else {
            out << "U " << format_double(ray.t.x) << ' ' << format_double(ray.t.y) << ' '
                << format_double(ray.r.x) << ' ' << format_double(ray.r.y) << '\n';
        }
    }
    detail::finish_write(out, path);
}

inline RaySet read_ray_set(const std::filesystem::path& path) {
    auto in = detail::open_in(path);
    const std::string ctx = path.string();
    RaySet set;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.rfind("# seed=", 0) == 0) {
            set.seed = detail::parse_uint(std::string_view(line).substr(7), ctx);
            continue;
        }
        const auto tokens = detail::split_ws(line);
        if (tokens.empty() || tokens[0].front() == '#') continue;
        const std::string where = ctx + ":" + std::to_string(lineno);
        if (tokens[0] == "U" && tokens.size() == 5) {
            set.rays.push_back(Ray::unbroken({detail::parse_double(tokens[1], where),
                                              detail::parse_double(tokens[2], where)},
                                             {detail::parse_double(tokens[3], where),
                                              detail::parse_double(tokens[4], where)}));
        } else if (tokens[0] == "B" && tokens.size() == 7) {
            set.rays.push_back(Ray::broken({detail::parse_double(tokens[1], where),
                                            detail::parse_double(tokens[2], where)},
                                           {detail::parse_double(tokens[3], where),
                                            detail::parse_double(tokens[4], where)},
                                           {detail::parse_double(tokens[5], where),
                                            detail::parse_double(tokens[6], where)}));
        } else {
            throw std::invalid_argument(where + ": malformed ray line");
        }
    }
    return set;
}

// ---------------------------------------------------------------------------
// travel times
// ---------------------------------------------------------------------------

inline void write_travel_times(const std::filesystem::path& path, std::span<const double> times) {
    auto out = detail::open_out(path);
    for (double v : times) out << format_double(v) << '\n';
    detail::finish_write(out, path);
}

inline std::vector<double> read_travel_times(const std::filesystem::path& path) {
    auto in = detail::open_in(path);
    const std::string ctx = path.string();
    std::vector<double> out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto tokens = detail::split_ws(line);
        if (tokens.empty() || tokens[0].front() == '#') continue;
        if (tokens.size() != 1)
            throw std::invalid_argument(ctx + ":" + std::to_string(lineno) +
                                        ": expected one value per line");
        out.push_back(detail::parse_double(tokens[0], ctx + ":" + std::to_string(lineno)));
    }
    return out;
}

// ---------------------------------------------------------------------------
// abstract ray sets
// ---------------------------------------------------------------------------

inline const char* to_string(AbstractMode mode) {
    switch (mode) {
        case AbstractMode::off: return "off";
        case AbstractMode::chained: return "chained";
        case AbstractMode::free: return "free";
    }
    return "off";
}

inline AbstractMode abstract_mode_from_string(std::string_view s) {
    if (s == "off") return AbstractMode::off;
    if (s == "chained") return AbstractMode::chained;
    if (s == "free") return AbstractMode::free;
    throw std::invalid_argument("unknown abstract mode '" + std::string(s) + "'");
}

inline void write_abstract_ray_set(const std::filesystem::path& path,
                                   const AbstractRaySet& abstract) {
    auto out = detail::open_out(path);
    out << "# abstract ray set: A k i1 ... ik (indices into the companion ray set)\n";
    out << "# mode=" << to_string(abstract.mode) << "\n";
    for (const auto& ar : abstract.rays) {
        out << "A " << ar.elements.size();
        for (auto idx : ar.elements) out << ' ' << idx;
        out << '\n';
    }
    detail::finish_write(out, path);
}

inline AbstractRaySet read_abstract_ray_set(const std::filesystem::path& path) {
    auto in = detail::open_in(path);
    const std::string ctx = path.string();
    AbstractRaySet abstract;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.rfind("# mode=", 0) == 0) {
            abstract.mode = abstract_mode_from_string(
                detail::split_ws(std::string_view(line).substr(7)).at(0));
            continue;
        }
        const auto tokens = detail::split_ws(line);
        if (tokens.empty() || tokens[0].front() == '#') continue;
        const std::string where = ctx + ":" + std::to_string(lineno);
        if (tokens[0] != "A" || tokens.size() < 2)
            throw std::invalid_argument(where + ": malformed abstract ray line");
        const auto k = detail::parse_uint(tokens[1], where);
        if (tokens.size() != 2 + k)
            throw std::invalid_argument(where + ": element count mismatch");
        AbstractRay ar;
        for (std::size_t i = 0; i < k; ++i)
            ar.elements.push_back(
                static_cast<std::uint32_t>(detail::parse_uint(tokens[2 + i], where)));
        abstract.rays.push_back(std::move(ar));
    }
    return abstract;
}

// ---------------------------------------------------------------------------
// grid vectors
// ---------------------------------------------------------------------------

inline void write_grid_vector(const std::filesystem::path& path, const GridVector& values,
                              const Grid& grid) {
    auto out = detail::open_out(path);
    out << "# grid vector, row-major, n=" << grid.n
        << " cell_size=" << format_double(grid.cell_size) << "\n";
    for (double v : values) out << format_double(v) << '\n';
    detail::finish_write(out, path);
}

inline GridVector read_grid_vector(const std::filesystem::path& path) {
    return read_travel_times(path);  // same line-oriented shape
}

// ---------------------------------------------------------------------------
// weight matrices (binary container)
// ---------------------------------------------------------------------------

namespace detail {

template <typename T>
void put_le(std::string& buf, T v) {
    for (std::size_t i = 0; i < sizeof(T); ++i)
        buf.push_back(static_cast<char>((static_cast<std::uint64_t>(v) >> (8 * i)) & 0xff));
}

inline void put_le_f64(std::string& buf, double v) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, sizeof(bits));
    put_le(buf, bits);
}

struct ByteReader {
    const std::string& data;
    std::size_t pos = 0;
    const std::string& ctx;

    template <typename T>
    T get_le() {
        if (pos + sizeof(T) > data.size())
            throw std::invalid_argument(ctx + ": truncated weight-matrix file");
        std::uint64_t v = 0;
        for (std::size_t i = 0; i < sizeof(T); ++i)
            v |= static_cast<std::uint64_t>(static_cast<unsigned char>(data[pos + i])) << (8 * i);
        pos += sizeof(T);
        return static_cast<T>(v);
    }

    double get_f64() {
        const std::uint64_t bits = get_le<std::uint64_t>();
        double v;
        std::memcpy(&v, &bits, sizeof(v));
        return v;
    }
};

}  // namespace detail

inline void write_weight_matrix(const std::filesystem::path& path, const WeightMatrix& w,
                                const Grid& grid) {
    std::string buf;
    buf.reserve(28 + w.rows() * 12 + w.entries() * 12);
    buf += "BRT1";
    detail::put_le_f64(buf, static_cast<double>(grid.n));
    detail::put_le_f64(buf, grid.cell_size);
    detail::put_le(buf, static_cast<std::uint64_t>(w.rows()));
    for (std::size_t j = 0; j < w.rows(); ++j)
        detail::put_le(buf, static_cast<std::uint32_t>(w.row(j).cells.size()));
    for (std::size_t j = 0; j < w.rows(); ++j)
        for (auto cell : w.row(j).cells) detail::put_le(buf, cell);
    for (std::size_t j = 0; j < w.rows(); ++j)
        for (double v : w.row(j).weights) detail::put_le_f64(buf, v);
    for (std::size_t j = 0; j < w.rows(); ++j) detail::put_le_f64(buf, w.row(j).rhs);

    auto out = detail::open_out(path, std::ios::binary);
    out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
    detail::finish_write(out, path);
}

struct LoadedWeightMatrix {
    WeightMatrix matrix{0};
    int grid_n = 0;
    double cell_size = 0.0;
};

inline LoadedWeightMatrix read_weight_matrix(const std::filesystem::path& path) {
    auto in = detail::open_in(path, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    if (!in) throw io_error("read failed: " + path.string());
    const std::string data = ss.str();
    const std::string ctx = path.string();
    if (data.size() < 28 || data.compare(0, 4, "BRT1") != 0)
        throw std::invalid_argument(ctx + ": not a BRT1 weight-matrix file");
    detail::ByteReader reader{data, 4, ctx};
    const double n_raw = reader.get_f64();
    const double cell_size = reader.get_f64();
    const auto rows = reader.get_le<std::uint64_t>();
    const int n = static_cast<int>(n_raw);
    if (n < 1 || static_cast<double>(n) != n_raw || !(cell_size > 0.0))
        throw std::invalid_argument(ctx + ": bad grid header");

    std::vector<std::uint32_t> counts(rows);
    for (auto& c : counts) c = reader.get_le<std::uint32_t>();

    LoadedWeightMatrix loaded;
    loaded.grid_n = n;
    loaded.cell_size = cell_size;
    loaded.matrix = WeightMatrix(static_cast<std::size_t>(n) * static_cast<std::size_t>(n));

    std::vector<std::vector<std::uint32_t>> cells(rows);
    for (std::uint64_t j = 0; j < rows; ++j) {
        cells[j].resize(counts[j]);
        for (auto& c : cells[j]) c = reader.get_le<std::uint32_t>();
    }
    std::vector<std::vector<double>> weights(rows);
    for (std::uint64_t j = 0; j < rows; ++j) {
        weights[j].resize(counts[j]);
        for (auto& v : weights[j]) v = reader.get_f64();
    }
    for (std::uint64_t j = 0; j < rows; ++j) {
        const double rhs = reader.get_f64();
        try {
            loaded.matrix.append_row(cells[j], weights[j], rhs);
        } catch (const std::invalid_argument& e) {
            throw std::invalid_argument(ctx + ": row " + std::to_string(j) + ": " + e.what());
        }
    }
    if (reader.pos != data.size())
        throw std::invalid_argument(ctx + ": trailing bytes in weight-matrix file");
    return loaded;
}

// ---------------------------------------------------------------------------
// result tables
// ---------------------------------------------------------------------------

struct ResultRow {
    std::string key;  // sweep key, or "Average"
    double error = 0.0;
    double iterations = 0.0;  // double so average rows stay exact
    double reduced_rows = 0.0;
    double wall_time = 0.0;
};

enum class ResultsFormat : std::uint8_t { text_table, csv };

inline ResultsFormat results_format_from_string(std::string_view s) {
    if (s == "table" || s == "text-table") return ResultsFormat::text_table;
    if (s == "csv" || s == "comma-separated") return ResultsFormat::csv;
    throw std::invalid_argument("unknown results format '" + std::string(s) + "'");
}

/// Writes one row per report plus an optional trailing `Average` row.
/// Timings are omitted unless requested, so equal runs emit equal bytes.
inline void emit_results(const std::filesystem::path& path, std::span<const ResultRow> rows,
                         ResultsFormat format, bool include_timings = false,
                         std::span<const std::string> header_comments = {}) {
    auto out = detail::open_out(path);
    for (const auto& c : header_comments) out << "# " << c << "\n";
    std::vector<std::vector<std::string>> table;
    std::vector<std::string> header{"sweep", "error", "iterations", "reduced_rows"};
    if (include_timings) header.push_back("wall_time");
    table.push_back(header);
    for (const auto& row : rows) {
        std::vector<std::string> cols{row.key, format_double(row.error),
                                      format_double(row.iterations),
                                      format_double(row.reduced_rows)};
        if (include_timings) cols.push_back(format_double(row.wall_time));
        table.push_back(std::move(cols));
    }
    if (format == ResultsFormat::csv) {
        for (const auto& cols : table) {
            for (std::size_t i = 0; i < cols.size(); ++i)
                out << cols[i] << (i + 1 < cols.size() ? "," : "");
            out << '\n';
        }
    } else {
        std::vector<std::size_t> width(table[0].size(), 0);
        for (const auto& cols : table)
            for (std::size_t i = 0; i < cols.size(); ++i)
                width[i] = std::max(width[i], cols[i].size());
        for (const auto& cols : table) {
            for (std::size_t i = 0; i < cols.size(); ++i) {
                out << cols[i];
                if (i + 1 < cols.size())
                    out << std::string(width[i] - cols[i].size() + 2, ' ');
            }
            out << '\n';
        }
    }
    detail::finish_write(out, path);
}

inline std::vector<ResultRow> read_results(const std::filesystem::path& path) {
    auto in = detail::open_in(path);
    const std::string ctx = path.string();
    std::vector<ResultRow> rows;
    std::string line;
    bool header_seen = false;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        for (auto& ch : line)
            if (ch == ',') ch = ' ';
        const auto tokens = detail::split_ws(line);
        if (tokens.empty() || tokens[0].front() == '#') continue;
        if (!header_seen) {
            header_seen = true;  // column names
            continue;
        }
        const std::string where = ctx + ":" + std::to_string(lineno);
        if (tokens.size() < 4) throw std::invalid_argument(where + ": short result row");
        ResultRow row;
        row.key = std::string(tokens[0]);
        row.error = detail::parse_double(tokens[1], where);
        row.iterations = detail::parse_double(tokens[2], where);
        row.reduced_rows = detail::parse_double(tokens[3], where);
        if (tokens.size() > 4) row.wall_time = detail::parse_double(tokens[4], where);
        rows.push_back(std::move(row));
    }
    return rows;
}

}  // namespace brt
