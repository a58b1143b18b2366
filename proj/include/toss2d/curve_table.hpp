#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "toss2d/format.hpp"

namespace toss2d {

/// Tagged numeric output: an x column plus named y columns, carrying enough
/// metadata (seed, config hash, version) to re-run the producing command
/// bit-identically. Missing cells are NaN and serialize as empty (CSV) or
/// null (JSON).
struct CurveTable {
    struct Column {
        std::string name;
        std::vector<double> values;
    };

    std::string x_name = "x";
    std::vector<double> x;
    std::vector<Column> columns;
    std::vector<std::pair<std::string, std::string>> metadata;

    void add_metadata(std::string key, std::string value) {
        metadata.emplace_back(std::move(key), std::move(value));
    }

    Column& add_column(std::string name) {
        columns.push_back({std::move(name), {}});
        return columns.back();
    }

    void check_consistent() const {
        for (const auto& col : columns)
            if (col.values.size() != x.size())
                throw std::logic_error("CurveTable: column '" + col.name + "' length mismatch");
    }

    /// RFC-4180 CSV: CRLF records, uniform field count, quoting only where
    /// needed. Metadata precedes the header as records whose first field is
    /// "meta:<key>", padded with empty fields to the table width.
    void write_csv(std::ostream& out) const {
        check_consistent();
        const std::size_t width = 1 + columns.size();
        auto field = [](const std::string& s) -> std::string {
            if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
            std::string quoted = "\"";
            for (char ch : s) {
                quoted += ch;
                if (ch == '"') quoted += '"';
            }
            quoted += '"';
            return quoted;
        };
        auto row = [&](const std::vector<std::string>& cells) {
            for (std::size_t i = 0; i < width; ++i) {
                if (i) out << ',';
                if (i < cells.size()) out << field(cells[i]);
            }
            out << "\r\n";
        };
        auto num = [](double v) { return std::isnan(v) ? std::string() : format_double(v); };

        for (const auto& [key, value] : metadata) row({"meta:" + key, value});
        std::vector<std::string> header{x_name};
        for (const auto& col : columns) header.push_back(col.name);
        row(header);
        for (std::size_t i = 0; i < x.size(); ++i) {
            std::vector<std::string> cells{num(x[i])};
            for (const auto& col : columns) cells.push_back(num(col.values[i]));
            row(cells);
        }
    }

    nlohmann::ordered_json to_json() const {
        check_consistent();
        nlohmann::ordered_json j;
        auto& meta = j["metadata"];
        for (const auto& [key, value] : metadata) {
            // The config entry is itself JSON; keep it structured.
            if (key == "config")
                meta[key] = nlohmann::ordered_json::parse(value);
            else
                meta[key] = value;
        }
        j["x"]["name"] = x_name;
        j["x"]["values"] = x;
        j["columns"] = nlohmann::ordered_json::array();
        for (const auto& col : columns)
            j["columns"].push_back({{"name", col.name}, {"values", col.values}});
        return j;
    }

    void write_json(std::ostream& out) const { out << to_json().dump(2) << '\n'; }
};

/// Evaluates row_fn at every axis value; a throwing evaluation leaves that
/// row's cells missing instead of aborting the sweep.
inline CurveTable sweep_table(std::string x_name, const std::vector<double>& x_values,
                              const std::vector<std::string>& column_names,
                              const std::function<std::vector<double>(double)>& row_fn) {
    if (x_values.empty()) throw std::invalid_argument("sweep_table: empty axis");
    CurveTable table;
    table.x_name = std::move(x_name);
    for (const auto& name : column_names) table.add_column(name);
    for (double value : x_values) {
        table.x.push_back(value);
        std::vector<double> cells;
        bool ok = true;
        try {
            cells = row_fn(value);
        } catch (const std::exception&) {
            ok = false;
        }
        if (ok && cells.size() != column_names.size())
            throw std::logic_error("sweep_table: row width mismatch");
        for (std::size_t c = 0; c < column_names.size(); ++c)
            table.columns[c].values.push_back(ok ? cells[c] : std::nan(""));
    }
    return table;
}

/// FNV-1a 64-bit hash, hex-encoded; used to fingerprint run configurations.
inline std::string fnv1a_hex(const std::string& data) {
    std::uint64_t h = 0xCBF29CE484222325ULL;
    for (unsigned char ch : data) {
        h ^= ch;
        h *= 0x100000001B3ULL;
    }
    char buf[17];
    static const char* digits = "0123456789abcdef";
    for (int i = 15; i >= 0; --i) {
        buf[i] = digits[h & 0xF];
        h >>= 4;
    }
    buf[16] = '\0';
    return std::string(buf);
}

}  // namespace toss2d
