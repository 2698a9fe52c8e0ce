#pragma once

#include <cstddef>
#include <istream>
#include <string>
#include <string_view>
#include <vector>

namespace ccd::csv {

/// Shortest round-trip decimal form; empty for NaN (a missing value).
std::string real(double x);

/// Reads a header plus data rows of plain comma-separated fields (no quoting).
class Table {
public:
    static Table read(std::istream& in, const std::vector<std::string>& required_columns);

    std::size_t rows() const noexcept { return rows_.size(); }
    std::size_t column(std::string_view name) const;
    const std::string& at(std::size_t row, std::size_t col) const { return rows_.at(row).at(col); }

    double real_at(std::size_t row, std::size_t col) const;  // NaN for an empty field
    std::size_t count_at(std::size_t row, std::size_t col) const;

private:
    std::vector<std::string> header_;
    std::vector<std::vector<std::string>> rows_;
};

}  // namespace ccd::csv
