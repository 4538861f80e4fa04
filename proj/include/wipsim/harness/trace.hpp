// Copyright 2026 The wipsim Authors
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

// Time-series trace with a named column per signal, and its CSV form.
//
// Numbers are written in the shortest form that parses back to the same
// double (std::to_chars), so files are locale independent, byte stable and
// round trip exactly.

#pragma once

#include <algorithm>
#include <charconv>
#include <cstddef>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "wipsim/errors.hpp"

namespace wipsim {

using TraceRow = std::vector<double>;

struct Trace {
  std::vector<std::string> columns;
  std::vector<TraceRow> rows;

  bool has_column(std::string_view name) const {
    return std::find(columns.begin(), columns.end(), name) != columns.end();
  }

  std::size_t column_index(std::string_view name) const {
    const auto it = std::find(columns.begin(), columns.end(), name);
    if (it == columns.end()) throw InvalidArgument("trace: no column '" + std::string(name) + "'");
    return static_cast<std::size_t>(it - columns.begin());
  }

  std::vector<double> column(std::string_view name) const {
    const std::size_t k = column_index(name);
    std::vector<double> out;
    out.reserve(rows.size());
    for (const auto& row : rows) out.push_back(row[k]);
    return out;
  }

  // Same rows restricted to the named columns, in that order.
  Trace select(const std::vector<std::string>& names) const {
    if (names.empty()) return *this;
    std::vector<std::size_t> idx;
    for (const auto& n : names) idx.push_back(column_index(n));
    Trace out;
    out.columns = names;
    out.rows.reserve(rows.size());
    for (const auto& row : rows) {
      TraceRow r;
      r.reserve(idx.size());
      for (std::size_t k : idx) r.push_back(row[k]);
      out.rows.push_back(std::move(r));
    }
    return out;
  }
};

inline void append_number(std::string& out, double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  out.append(buf, res.ptr);
}

inline std::string trace_to_csv(const Trace& trace) {
  std::string out;
  for (std::size_t i = 0; i < trace.columns.size(); ++i) {
    if (i) out += ',';
    out += trace.columns[i];
  }
  out += '\n';
  for (const auto& row : trace.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) out += ',';
      append_number(out, row[i]);
    }
    out += '\n';
  }
  return out;
}

inline Trace trace_from_csv(std::string_view text) {
  Trace trace;
  std::size_t line_no = 0;
  const auto split = [](std::string_view line) {
    std::vector<std::string_view> cells;
    std::size_t start = 0;
    while (true) {
      const std::size_t comma = line.find(',', start);
      cells.push_back(line.substr(start, comma - start));
      if (comma == std::string_view::npos) break;
      start = comma + 1;
    }
    return cells;
  };
  while (!text.empty()) {
    const std::size_t nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    ++line_no;
    if (line_no == 1) {
      if (line.empty()) throw InvalidArgument("trace csv: missing header");
      for (auto cell : split(line)) trace.columns.emplace_back(cell);
      continue;
    }
    if (line.empty()) continue;
    const auto cells = split(line);
    if (cells.size() != trace.columns.size())
      throw InvalidArgument("trace csv: line " + std::to_string(line_no) + " has " +
                            std::to_string(cells.size()) + " fields, expected " +
                            std::to_string(trace.columns.size()));
    TraceRow row(cells.size());
    for (std::size_t i = 0; i < cells.size(); ++i) {
      const auto res = std::from_chars(cells[i].data(), cells[i].data() + cells[i].size(), row[i]);
      if (res.ec != std::errc{} || res.ptr != cells[i].data() + cells[i].size())
        throw InvalidArgument("trace csv: bad number '" + std::string(cells[i]) + "' on line " +
                              std::to_string(line_no));
    }
    trace.rows.push_back(std::move(row));
  }
  if (line_no == 0) throw InvalidArgument("trace csv: missing header");
  return trace;
}

inline void export_trace(const Trace& trace, const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("export_trace: cannot open '" + path + "' for writing");
  const std::string text = trace_to_csv(trace);
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) throw Error("export_trace: write to '" + path + "' failed");
}

inline Trace read_trace(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("read_trace: cannot open '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return trace_from_csv(buf.str());
}

}  // namespace wipsim
