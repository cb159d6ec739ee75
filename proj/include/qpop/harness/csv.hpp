#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "qpop/errors.hpp"
#include "qpop/odes.hpp"

namespace qpop::harness {

/// Column order of trajectories.csv.
inline const std::vector<std::string>& trajectory_columns() {
  static const std::vector<std::string> cols{"t", "o1_abm_mean", "o1_abm_std", "o1_cem", "o1_rem", "o1_ode"};
  return cols;
}

/// A numeric table with optional cells; empty cells are absent values.
struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<std::optional<double>>> rows;

  std::optional<std::size_t> find(const std::string& name) const {
    const auto it = std::find(columns.begin(), columns.end(), name);
    if (it == columns.end()) return std::nullopt;
    return static_cast<std::size_t>(it - columns.begin());
  }

  bool has_values(std::size_t col) const {
    return std::any_of(rows.begin(), rows.end(), [&](const auto& r) { return r[col].has_value(); });
  }
};

/// Nine significant digits, shortest of fixed/scientific.
inline std::string format_number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.9g", v == 0.0 ? 0.0 : v);
  return buf;
}

inline std::string write_csv(const Table& table) {
  std::string out;
  for (std::size_t c = 0; c < table.columns.size(); ++c) {
    if (c) out += ',';
    out += table.columns[c];
  }
  out += '\n';
  for (const auto& row : table.rows) {
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (c) out += ',';
      if (row[c]) out += format_number(*row[c]);
    }
    out += '\n';
  }
  return out;
}

namespace detail {
inline std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> fields;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    fields.push_back(line.substr(start, comma == std::string::npos ? std::string::npos : comma - start));
    if (comma == std::string::npos) return fields;
    start = comma + 1;
  }
}
}  // namespace detail

/// Parses a table in the trajectories schema. The header must start with `t`
/// and may hold any subset of the known columns; every data row needs one
/// field per column. Errors name the 1-based line.
inline Table parse_trajectory_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  auto error = [&](const std::string& what) {
    return ConfigError("csv line " + std::to_string(lineno) + ": " + what);
  };
  Table table;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (lineno == 1) {
      table.columns = detail::split_fields(line);
      if (table.columns.empty() || table.columns.front() != "t") throw error("header must start with 't'");
      for (const auto& c : table.columns) {
        const auto& known = trajectory_columns();
        if (std::find(known.begin(), known.end(), c) == known.end()) throw error("unknown column '" + c + "'");
        if (std::count(table.columns.begin(), table.columns.end(), c) > 1) throw error("duplicate column '" + c + "'");
      }
      continue;
    }
    if (line.empty()) throw error("empty row");
    const auto fields = detail::split_fields(line);
    if (fields.size() != table.columns.size())
      throw error("expected " + std::to_string(table.columns.size()) + " fields, got " + std::to_string(fields.size()));
    std::vector<std::optional<double>> row;
    for (std::size_t c = 0; c < fields.size(); ++c) {
      if (fields[c].empty()) {
        if (c == 0) throw error("missing time value");
        row.emplace_back();
        continue;
      }
      char* end = nullptr;
      const double v = std::strtod(fields[c].c_str(), &end);
      if (end != fields[c].c_str() + fields[c].size() || !std::isfinite(v))
        throw error("column '" + table.columns[c] + "' is not a finite number: '" + fields[c] + "'");
      row.emplace_back(v);
    }
    if (!table.rows.empty() && !(*row[0] > *table.rows.back()[0])) throw error("times must increase");
    table.rows.push_back(std::move(row));
  }
  if (lineno == 0) throw ConfigError("csv: empty input");
  if (table.rows.empty()) throw ConfigError("csv: no data rows");
  return table;
}

/// Columns q1,q2,dq1,dq2,slope; slope is empty where it is undefined.
inline std::string write_slope_csv(const SlopeField& field) {
  std::string out = "q1,q2,dq1,dq2,slope\n";
  for (const auto& s : field.samples) {
    out += format_number(s.q1) + ',' + format_number(s.q2) + ',' + format_number(s.dq1) + ',' +
           format_number(s.dq2) + ',';
    if (s.slope) out += format_number(*s.slope);
    out += '\n';
  }
  return out;
}

}  // namespace qpop::harness
