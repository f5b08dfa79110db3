// Copyright 2026 The qest Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <fstream>
#include <map>
#include <span>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "qest/quantum_model.hpp"

namespace qest {

using Json = nlohmann::ordered_json;

/// Shortest round-trippable text for a double (17 significant digits).
inline std::string format_double(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

// ---------------------------------------------------------------------------
// Files
// ---------------------------------------------------------------------------

inline std::string read_text_file(const std::filesystem::path &path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        fail(ErrorKind::io, "cannot open '" + path.string() + "' for reading");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline void write_text_file(const std::filesystem::path &path, const std::string &content) {
    std::error_code ec;
    if (path.has_parent_path())
        std::filesystem::create_directories(path.parent_path(), ec);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out)
        fail(ErrorKind::io, "cannot open '" + path.string() + "' for writing");
    out << content;
    out.flush();
    if (!out)
        fail(ErrorKind::io, "write failed for '" + path.string() + "'");
}

inline Json parse_json(const std::string &text, const std::string &origin) {
    try {
        return Json::parse(text);
    } catch (const nlohmann::json::exception &e) {
        fail(ErrorKind::config, origin + ": malformed JSON: " + e.what());
    }
}

inline Json read_json_file(const std::filesystem::path &path) { return parse_json(read_text_file(path), path.string()); }

/// Indented dump with every double written at 17 significant digits.
inline std::string dump_json(const Json &j) {
    std::string out;
    std::function<void(const Json &, int)> emit = [&](const Json &v, int indent) {
        const std::string pad(static_cast<std::size_t>(indent + 2), ' ');
        const std::string close(static_cast<std::size_t>(indent), ' ');
        if (v.is_object()) {
            if (v.empty()) {
                out += "{}";
                return;
            }
            out += "{\n";
            bool first = true;
            for (const auto &[k, x] : v.items()) {
                if (!first)
                    out += ",\n";
                first = false;
                out += pad + Json(k).dump() + ": ";
                emit(x, indent + 2);
            }
            out += "\n" + close + "}";
        } else if (v.is_array()) {
            if (v.empty()) {
                out += "[]";
                return;
            }
            const bool flat = std::all_of(v.begin(), v.end(), [](const Json &x) { return x.is_primitive(); });
            if (flat) {
                out += "[";
                for (std::size_t i = 0; i < v.size(); ++i) {
                    if (i)
                        out += ", ";
                    emit(v[i], indent);
                }
                out += "]";
                return;
            }
            out += "[\n";
            for (std::size_t i = 0; i < v.size(); ++i) {
                if (i)
                    out += ",\n";
                out += pad;
                emit(v[i], indent + 2);
            }
            out += "\n" + close + "]";
        } else if (v.is_number_float()) {
            const double x = v.get<double>();
            out += std::isfinite(x) ? format_double(x) : "null";
        } else {
            out += v.dump();
        }
    };
    emit(j, 0);
    out += "\n";
    return out;
}

// ---------------------------------------------------------------------------
// Matrices, states, POVMs
// ---------------------------------------------------------------------------

/// {"rows": r, "cols": c, "data": [[re, im], ...]} in column-stacked order.
inline Json matrix_to_json(const CMatrix &m) {
    Json data = Json::array();
    const CVector v = vec(m);
    for (Eigen::Index i = 0; i < v.size(); ++i)
        data.push_back(Json::array({v(i).real(), v(i).imag()}));
    return Json{{"rows", m.rows()}, {"cols", m.cols()}, {"data", std::move(data)}};
}

inline CMatrix matrix_from_json(const Json &j, const std::string &where) {
    if (!j.is_object() || !j.contains("rows") || !j.contains("cols") || !j.contains("data"))
        fail(ErrorKind::config, where + ": matrix needs rows, cols and data");
    for (const auto &[k, v] : j.items())
        if (k != "rows" && k != "cols" && k != "data" && k != "label")
            fail(ErrorKind::config, where + ": unknown key '" + k + "'");
    const auto rows = j.at("rows").get<Eigen::Index>();
    const auto cols = j.at("cols").get<Eigen::Index>();
    const Json &data = j.at("data");
    if (rows < 1 || cols < 1 || !data.is_array() || static_cast<Eigen::Index>(data.size()) != rows * cols)
        fail(ErrorKind::config, where + ": data length does not match rows x cols");
    CVector v(rows * cols);
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        const Json &e = data[static_cast<std::size_t>(i)];
        if (!e.is_array() || e.size() != 2 || !e[0].is_number() || !e[1].is_number())
            fail(ErrorKind::config, where + ": each entry must be [re, im]");
        v(i) = Complex(e[0].get<double>(), e[1].get<double>());
    }
    return vec_inv(v, rows, cols);
}

inline Json density_to_json(const DensityMatrix &rho, const std::string &label) {
    Json j = matrix_to_json(rho.matrix());
    j["label"] = label;
    return j;
}

inline Json povm_to_json(const Povm &p) {
    Json elems = Json::array();
    for (const auto &e : p.elements)
        elems.push_back(matrix_to_json(e));
    return Json{{"label", p.label}, {"elements", std::move(elems)}};
}

inline Povm povm_from_json(const Json &j, const std::string &where) {
    if (!j.is_object() || !j.contains("label") || !j.contains("elements") || !j.at("elements").is_array())
        fail(ErrorKind::config, where + ": POVM needs label and elements");
    Povm p;
    p.label = j.at("label").get<std::string>();
    for (std::size_t i = 0; i < j.at("elements").size(); ++i)
        p.elements.push_back(matrix_from_json(j.at("elements")[i], where + "." + p.label));
    p.dim = static_cast<int>(p.elements.front().rows());
    validate_povm(p);
    return p;
}

// ---------------------------------------------------------------------------
// Records CSV: povm,element,shots,successes
// ---------------------------------------------------------------------------

inline std::string records_to_csv(std::span<const MeasurementRecord> records) {
    std::string out = "povm,element,shots,successes\n";
    for (const auto &r : records)
        out += r.povm + "," + std::to_string(r.element) + "," + std::to_string(r.shots) + "," +
               std::to_string(r.successes) + "\n";
    return out;
}

/// POVM labels are resolved against `povms`.
inline std::vector<MeasurementRecord> records_from_csv(const std::string &text, std::span<const Povm> povms,
                                                       const HermitianBasis &basis, const std::string &origin) {
    std::map<std::string, const Povm *> by_label;
    for (const auto &p : povms)
        by_label[p.label] = &p;
    std::istringstream in(text);
    std::string line;
    std::vector<MeasurementRecord> out;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r')
            line.pop_back();
        if (line.empty())
            continue;
        if (lineno == 1) {
            if (line != "povm,element,shots,successes")
                fail(ErrorKind::config, origin + ": expected header 'povm,element,shots,successes'");
            continue;
        }
        std::vector<std::string> cells;
        std::stringstream ls(line);
        std::string cell;
        while (std::getline(ls, cell, ','))
            cells.push_back(cell);
        const std::string at = origin + ":" + std::to_string(lineno);
        if (cells.size() != 4)
            fail(ErrorKind::config, at + ": expected 4 columns");
        const auto it = by_label.find(cells[0]);
        if (it == by_label.end())
            fail(ErrorKind::config, at + ": unknown POVM label '" + cells[0] + "'");
        try {
            out.push_back(make_record(*it->second, std::stoul(cells[1]), std::stoll(cells[2]), std::stoll(cells[3]),
                                      basis));
        } catch (const std::logic_error &) {
            fail(ErrorKind::config, at + ": non-numeric field");
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Tables
// ---------------------------------------------------------------------------

using Cell = std::variant<std::int64_t, double, std::string>;

/// Column-ordered table emitted as CSV or as a JSON array of row objects.
struct Table {
    std::vector<std::string> columns;
    std::vector<std::vector<Cell>> rows;

    void add(std::vector<Cell> row) {
        if (row.size() != columns.size())
            fail(ErrorKind::contract_violation, "Table: row width does not match header");
        rows.push_back(std::move(row));
    }
};

inline std::string cell_text(const Cell &c) {
    if (const auto *i = std::get_if<std::int64_t>(&c))
        return std::to_string(*i);
    if (const auto *d = std::get_if<double>(&c))
        return format_double(*d);
    return std::get<std::string>(c);
}

inline std::string table_to_csv(const Table &t) {
    std::string out;
    for (std::size_t i = 0; i < t.columns.size(); ++i)
        out += (i ? "," : "") + t.columns[i];
    out += "\n";
    for (const auto &row : t.rows) {
        for (std::size_t i = 0; i < row.size(); ++i)
            out += (i ? "," : "") + cell_text(row[i]);
        out += "\n";
    }
    return out;
}

inline Json table_to_json(const Table &t) {
    Json rows = Json::array();
    for (const auto &row : t.rows) {
        Json o = Json::object();
        for (std::size_t i = 0; i < row.size(); ++i)
            std::visit([&](const auto &v) { o[t.columns[i]] = v; }, row[i]);
        rows.push_back(std::move(o));
    }
    return rows;
}

enum class OutputFormat { csv, json };

inline OutputFormat parse_output_format(const std::string &name) {
    if (name == "csv")
        return OutputFormat::csv;
    if (name == "json")
        return OutputFormat::json;
    fail(ErrorKind::config, "unknown output format '" + name + "' (expected csv|json)");
}

// ---------------------------------------------------------------------------
// Manifest
// ---------------------------------------------------------------------------

inline std::uint64_t fnv1a64(const std::string &text) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

inline std::string hex64(std::uint64_t x) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(x));
    return buf;
}

/// Hash of the canonical (sorted-key, compact) config dump.
inline std::string config_hash(const Json &config) {
    const nlohmann::json canonical = nlohmann::json::parse(config.dump());
    return hex64(fnv1a64(canonical.dump()));
}

/// Writes each table as <name>.csv or <name>.json under `dir`, plus
/// manifest.json listing the command, config hash, seeds and files.
inline std::vector<std::filesystem::path> emit(const std::filesystem::path &dir, const std::string &command,
                                               const Json &config, std::span<const std::uint64_t> seeds,
                                               const std::vector<std::pair<std::string, Table>> &tables,
                                               OutputFormat format, const Json &extra = Json::object()) {
    std::vector<std::filesystem::path> written;
    Json files = Json::array();
    for (const auto &[name, table] : tables) {
        const std::string file = name + (format == OutputFormat::csv ? ".csv" : ".json");
        write_text_file(dir / file,
                        format == OutputFormat::csv ? table_to_csv(table) : dump_json(table_to_json(table)));
        written.push_back(dir / file);
        files.push_back(file);
    }
    Json seed_list = Json::array();
    for (auto s : seeds)
        seed_list.push_back(s);
    Json manifest{{"command", command},
                  {"config_hash", config_hash(config)},
                  {"seeds", std::move(seed_list)},
                  {"files", std::move(files)},
                  {"config", config}};
    if (!extra.empty())
        manifest["summary"] = extra;
    write_text_file(dir / "manifest.json", dump_json(manifest));
    written.push_back(dir / "manifest.json");
    return written;
}

} // namespace qest
