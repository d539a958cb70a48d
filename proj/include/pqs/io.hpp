#pragma once

// Plain-text data exchange: CSV datasets in, round-trip decimal tables out.

#include <charconv>
#include <concepts>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "pqs/error.hpp"
#include "pqs/family.hpp"

namespace pqs::io {

/// Shortest decimal that parses back to exactly `x`.
inline std::string format_double(double x) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, res.ptr);
}

inline double parse_double(std::string_view text, std::string_view what) {
    while (!text.empty() && (text.front() == ' ' || text.front() == '\t')) text.remove_prefix(1);
    while (!text.empty() && (text.back() == ' ' || text.back() == '\t' || text.back() == '\r'))
        text.remove_suffix(1);
    if (!text.empty() && text.front() == '+') text.remove_prefix(1);
    double value = 0.0;
    const auto res = std::from_chars(text.data(), text.data() + text.size(), value);
    if (res.ec != std::errc{} || res.ptr != text.data() + text.size())
        throw Error(ErrorKind::io, std::string(what) + ": cannot parse '" + std::string(text) + "' as a number");
    return value;
}

inline std::vector<std::string> split_fields(const std::string& line) {
    std::vector<std::string> out;
    std::string field;
    std::istringstream in(line);
    while (std::getline(in, field, ',')) out.push_back(field);
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

inline std::string trim(std::string s) {
    const auto first = s.find_first_not_of(" \t\r\"");
    const auto last = s.find_last_not_of(" \t\r\"");
    return first == std::string::npos ? std::string{} : s.substr(first, last - first + 1);
}

/// A regression dataset read from CSV plus the regressor column names.
struct Table {
    Matrix X;
    Vector y;
    std::vector<std::string> columns;
};

/// Header row required; the column named `y` is the response and every other
/// column is a regressor, in file order.
inline Table read_csv(std::istream& in, std::string_view source = "data") {
    std::string line;
    if (!std::getline(in, line)) throw Error(ErrorKind::io, std::string(source) + ": empty file, header row required");
    std::vector<std::string> header;
    for (auto& h : split_fields(line)) header.push_back(trim(h));

    std::ptrdiff_t response = -1;
    for (std::size_t c = 0; c < header.size(); ++c) {
        if (header[c] == "y") {
            if (response >= 0) throw Error(ErrorKind::io, std::string(source) + ": more than one 'y' column");
            response = static_cast<std::ptrdiff_t>(c);
        }
    }
    if (response < 0) throw Error(ErrorKind::io, std::string(source) + ": no 'y' column in header");
    if (header.size() < 2) throw Error(ErrorKind::io, std::string(source) + ": no regressor columns");

    std::vector<std::vector<double>> rows;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        const auto fields = split_fields(line);
        if (fields.size() != header.size())
            throw Error(ErrorKind::io, std::string(source) + ": line " + std::to_string(line_no) + " has " +
                                           std::to_string(fields.size()) + " fields, expected " +
                                           std::to_string(header.size()));
        std::vector<double> row;
        row.reserve(fields.size());
        for (std::size_t c = 0; c < fields.size(); ++c)
            row.push_back(parse_double(fields[c], std::string(source) + " line " + std::to_string(line_no) +
                                                      " column '" + header[c] + "'"));
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw Error(ErrorKind::io, std::string(source) + ": no data rows");

    Table t;
    const auto n = static_cast<Eigen::Index>(rows.size());
    const auto p = static_cast<Eigen::Index>(header.size() - 1);
    t.X.resize(n, p);
    t.y.resize(n);
    for (std::size_t c = 0; c < header.size(); ++c)
        if (static_cast<std::ptrdiff_t>(c) != response) t.columns.push_back(header[c]);
    for (Eigen::Index i = 0; i < n; ++i) {
        Eigen::Index col = 0;
        for (std::size_t c = 0; c < header.size(); ++c) {
            const double v = rows[static_cast<std::size_t>(i)][c];
            if (static_cast<std::ptrdiff_t>(c) == response)
                t.y[i] = v;
            else
                t.X(i, col++) = v;
        }
    }
    return t;
}

inline Table read_csv_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::io, "cannot open data file '" + path + "'");
    return read_csv(in, path);
}

/// Writes rows of already formatted fields; fields never contain commas.
class CsvWriter {
public:
    explicit CsvWriter(std::ostream& out) : out_(out) {}

    CsvWriter& field(std::string_view text) {
        if (!first_) out_ << ',';
        out_ << text;
        first_ = false;
        return *this;
    }
    CsvWriter& field(double x) { return field(format_double(x)); }
    template <std::integral T>
    CsvWriter& field(T x) {
        return field(std::string_view(std::to_string(x)));
    }

    void end_row() {
        out_ << '\n';
        first_ = true;
    }

private:
    std::ostream& out_;
    bool first_ = true;
};

}  // namespace pqs::io
