#include "kpo/io.hpp"

#include <cstdio>

namespace kpo {

std::string format_double(double value) {
    char buffer[40];
    std::snprintf(buffer, sizeof(buffer), "%.17g", value);
    return buffer;
}

CsvWriter::CsvWriter(const std::filesystem::path& path) : out_(path, std::ios::binary) {
    if (!out_) throw ConfigError("cannot open output file: " + path.string());
}

void CsvWriter::header(const std::vector<std::string>& columns) { row(columns); }

void CsvWriter::row(const std::vector<std::string>& cells) {
    for (size_t i = 0; i < cells.size(); ++i) {
        if (i) out_ << ',';
        out_ << cells[i];
    }
    out_ << '\n';
    if (!out_) throw ConfigError("write failure on CSV output");
}

void CsvWriter::row(std::initializer_list<double> values) {
    std::vector<std::string> cells;
    cells.reserve(values.size());
    for (double v : values) cells.push_back(format_double(v));
    row(cells);
}

void write_points_csv(const std::filesystem::path& path, const std::string& col_a,
                      const std::string& col_b, const std::vector<std::pair<double, double>>& rows) {
    CsvWriter csv(path);
    csv.header({col_a, col_b});
    for (const auto& [a, b] : rows) csv.row({a, b});
}

void write_series_csv(const std::filesystem::path& path, const std::string& value_column,
                      const TimeSeries& series) {
    CsvWriter csv(path);
    csv.header({"t", value_column});
    for (size_t k = 0; k < series.t.size(); ++k) csv.row({series.t[k], series.value[k]});
}

void write_grid_csv(const std::filesystem::path& path, const std::string& col_x,
                    const std::string& col_y, const Grid2D& grid) {
    CsvWriter csv(path);
    csv.header({col_x, col_y, "value"});
    for (int i = 0; i < grid.spec.nx; ++i)
        for (int j = 0; j < grid.spec.ny; ++j)
            csv.row({grid.spec.x_at(i), grid.spec.y_at(j), grid.values(i, j)});
}

std::string fnv1a64_hex(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open file for digest: " + path.string());
    std::uint64_t hash = 0xCBF29CE484222325ULL;
    char buffer[8192];
    while (in.read(buffer, sizeof(buffer)) || in.gcount() > 0) {
        const std::streamsize got = in.gcount();
        for (std::streamsize i = 0; i < got; ++i) {
            hash ^= static_cast<unsigned char>(buffer[i]);
            hash *= 0x100000001B3ULL;
        }
        if (got < static_cast<std::streamsize>(sizeof(buffer))) break;
    }
    char hex[17];
    std::snprintf(hex, sizeof(hex), "%016llx", static_cast<unsigned long long>(hash));
    return hex;
}

} // namespace kpo
