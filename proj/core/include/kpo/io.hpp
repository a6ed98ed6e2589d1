#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "kpo/classical.hpp"
#include "kpo/quantum.hpp"

namespace kpo {

inline constexpr const char* kToolVersion = "0.1.0";

// Shortest representation that round-trips a double (17 significant digits).
std::string format_double(double value);

// Plain-text CSV: header row, one record per line, LF line endings.
class CsvWriter {
public:
    explicit CsvWriter(const std::filesystem::path& path);

    void header(const std::vector<std::string>& columns);
    void row(const std::vector<std::string>& cells);
    void row(std::initializer_list<double> values);

private:
    std::ofstream out_;
};

void write_points_csv(const std::filesystem::path& path, const std::string& col_a,
                      const std::string& col_b, const std::vector<std::pair<double, double>>& rows);
void write_series_csv(const std::filesystem::path& path, const std::string& value_column,
                      const TimeSeries& series);
void write_grid_csv(const std::filesystem::path& path, const std::string& col_x,
                    const std::string& col_y, const Grid2D& grid);

// FNV-1a 64-bit digest of a file's bytes, as 16 hex digits.
std::string fnv1a64_hex(const std::filesystem::path& path);

} // namespace kpo
