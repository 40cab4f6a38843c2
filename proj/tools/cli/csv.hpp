#ifndef TORUS_CYCLES_CLI_CSV_HPP
#define TORUS_CYCLES_CLI_CSV_HPP

#include <charconv>
#include <cmath>
#include <cstdint>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <system_error>
#include <variant>
#include <vector>

#include "torus_cycles/errors.hpp"

namespace torus_cycles::cli {

/// Empty cell, integer, float or text.
using Cell = std::variant<std::monostate, std::int64_t, double, std::string>;

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<Cell>> rows;
};

/// Shortest decimal string that parses back to the same double.
inline std::string format_double(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

inline std::string format_cell(const Cell& cell) {
    struct Visitor {
        std::string operator()(std::monostate) const { return {}; }
        std::string operator()(std::int64_t v) const { return std::to_string(v); }
        std::string operator()(double v) const { return format_double(v); }
        std::string operator()(const std::string& v) const { return v; }
    };
    return std::visit(Visitor{}, cell);
}

namespace detail {

inline void write_field(std::ostream& out, const std::string& field) {
    if (field.find_first_of(",\"\r\n") == std::string::npos) {
        out << field;
        return;
    }
    out << '"';
    for (char c : field) {
        if (c == '"') out << '"';
        out << c;
    }
    out << '"';
}

}  // namespace detail

/// Header row then one line per row, comma separated, LF line endings.
inline void write_csv(std::ostream& out, const CsvTable& table) {
    for (const auto& row : table.rows) {
        if (row.size() != table.header.size()) {
            throw invalid_argument("csv row has " + std::to_string(row.size()) + " cells, schema has " +
                                   std::to_string(table.header.size()));
        }
    }
    auto write_line = [&](const auto& cells, auto&& to_text) {
        for (std::size_t i = 0; i < cells.size(); ++i) {
            if (i) out << ',';
            detail::write_field(out, to_text(cells[i]));
        }
        out << '\n';
    };
    write_line(table.header, [](const std::string& s) { return s; });
    for (const auto& row : table.rows) write_line(row, format_cell);
}

inline std::string to_csv(const CsvTable& table) {
    std::ostringstream out;
    write_csv(out, table);
    return out.str();
}

/// Parses quoted or bare fields; every cell comes back as text (empty cells
/// as monostate).
inline CsvTable read_csv(std::istream& in) {
    std::vector<std::vector<std::string>> records;
    std::vector<std::string> record;
    std::string field;
    bool in_quotes = false;
    bool any = false;
    char c;
    while (in.get(c)) {
        any = true;
        if (in_quotes) {
            if (c == '"') {
                if (in.peek() == '"') {
                    in.get(c);
                    field += '"';
                } else {
                    in_quotes = false;
                }
            } else {
                field += c;
            }
        } else if (c == '"') {
            in_quotes = true;
        } else if (c == ',') {
            record.push_back(std::move(field));
            field.clear();
        } else if (c == '\n') {
            record.push_back(std::move(field));
            field.clear();
            records.push_back(std::move(record));
            record.clear();
            any = false;
        } else if (c != '\r') {
            field += c;
        }
    }
    if (in_quotes) throw invalid_argument("csv: unterminated quoted field");
    if (any) {
        record.push_back(std::move(field));
        records.push_back(std::move(record));
    }
    CsvTable table;
    if (records.empty()) return table;
    table.header = std::move(records.front());
    for (std::size_t i = 1; i < records.size(); ++i) {
        std::vector<Cell> row;
        for (auto& f : records[i]) {
            if (f.empty()) {
                row.emplace_back(std::monostate{});
            } else {
                row.emplace_back(std::move(f));
            }
        }
        table.rows.push_back(std::move(row));
    }
    return table;
}

/// Numeric value of a cell read back from text.
inline double cell_as_double(const Cell& cell) {
    if (const auto* d = std::get_if<double>(&cell)) return *d;
    if (const auto* i = std::get_if<std::int64_t>(&cell)) return static_cast<double>(*i);
    if (const auto* s = std::get_if<std::string>(&cell)) {
        if (*s == "nan") return std::nan("");
        if (*s == "inf") return INFINITY;
        if (*s == "-inf") return -INFINITY;
        double v = 0.0;
        const auto res = std::from_chars(s->data(), s->data() + s->size(), v);
        if (res.ec != std::errc{} || res.ptr != s->data() + s->size()) {
            throw invalid_argument("csv: '" + *s + "' is not a number");
        }
        return v;
    }
    throw invalid_argument("csv: empty cell has no numeric value");
}

}  // namespace torus_cycles::cli

#endif  // TORUS_CYCLES_CLI_CSV_HPP
