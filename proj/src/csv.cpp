#include "ccd/csv.hpp"

#include <charconv>
#include <cmath>
#include <cstdlib>
#include <limits>

#include <fmt/format.h>

#include "ccd/errors.hpp"

namespace ccd::csv {

namespace {

std::vector<std::string> split(const std::string& line) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        const auto comma = line.find(',', start);
        out.push_back(line.substr(start, comma - start));
        if (comma == std::string::npos) break;
        start = comma + 1;
    }
    return out;
}

}  // namespace

std::string real(double x) {
    if (std::isnan(x)) return {};
    return fmt::format("{}", x);
}

Table Table::read(std::istream& in, const std::vector<std::string>& required_columns) {
    Table table;
    std::string line;
    if (!std::getline(in, line)) throw ParseError("csv: empty input");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    table.header_ = split(line);
    for (const auto& c : required_columns) table.column(c);
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        auto fields = split(line);
        if (fields.size() != table.header_.size())
            throw ParseError(fmt::format("csv line {}: expected {} fields, got {}", line_no, table.header_.size(),
                                         fields.size()));
        table.rows_.push_back(std::move(fields));
    }
    return table;
}

std::size_t Table::column(std::string_view name) const {
    for (std::size_t i = 0; i < header_.size(); ++i)
        if (header_[i] == name) return i;
    throw ParseError(fmt::format("csv: missing column '{}'", name));
}

double Table::real_at(std::size_t row, std::size_t col) const {
    const auto& s = at(row, col);
    if (s.empty()) return std::numeric_limits<double>::quiet_NaN();
    char* end = nullptr;
    const double v = std::strtod(s.c_str(), &end);
    if (end != s.c_str() + s.size()) throw ParseError(fmt::format("csv row {}: bad number '{}'", row + 1, s));
    return v;
}

std::size_t Table::count_at(std::size_t row, std::size_t col) const {
    const auto& s = at(row, col);
    std::size_t v = 0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (s.empty() || ec != std::errc{} || ptr != s.data() + s.size())
        throw ParseError(fmt::format("csv row {}: bad count '{}'", row + 1, s));
    return v;
}

}  // namespace ccd::csv
