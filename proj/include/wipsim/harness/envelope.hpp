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

// Envelope assertions evaluated on a trace, and the run report. Both are
// pure functions of the trace rows, so re-evaluating an exported CSV gives
// the same report.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "wipsim/harness/scenario.hpp"
#include "wipsim/harness/trace.hpp"

namespace wipsim {

struct EnvelopeResult {
  std::string name;
  EnvelopeKind kind = EnvelopeKind::band;
  std::string signal;
  bool passed = false;
  double value = 0.0;   // the measured quantity (max deviation, settle time, ratio, ...)
  double margin = 0.0;  // distance to the bound, negative on failure
};

namespace detail {

// Samples with t in [t0, t1]. The half-sample slack absorbs the rounding of
// logged times.
inline std::vector<double> window_values(const Trace& trace, const std::string& signal, double t0,
                                         double t1, std::vector<double>* times = nullptr) {
  const std::size_t kt = trace.column_index("t");
  const std::size_t kx = trace.column_index(signal);
  std::vector<double> out;
  for (const auto& row : trace.rows) {
    if (row[kt] < t0 - 1e-9 || row[kt] > t1 + 1e-9) continue;
    out.push_back(row[kx]);
    if (times) times->push_back(row[kt]);
  }
  return out;
}

inline double mean(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return v.empty() ? std::numeric_limits<double>::quiet_NaN() : s / static_cast<double>(v.size());
}

}  // namespace detail

inline EnvelopeResult evaluate_envelope(const Trace& trace, const Envelope& env) {
  EnvelopeResult res{env.name, env.kind, env.signal, false, 0.0, 0.0};
  std::vector<double> times;
  const std::vector<double> x = detail::window_values(trace, env.signal, env.t0, env.t1, &times);
  const double nan = std::numeric_limits<double>::quiet_NaN();
  if (x.empty()) {
    res.value = nan;
    res.margin = -std::numeric_limits<double>::infinity();
    return res;
  }
  switch (env.kind) {
    case EnvelopeKind::band: {
      double worst = 0.0;
      for (double v : x) worst = std::max(worst, std::abs(v - env.target));
      res.value = worst;
      res.margin = env.bound - worst;
      break;
    }
    case EnvelopeKind::range: {
      const auto [lo, hi] = std::minmax_element(x.begin(), x.end());
      res.value = std::abs(*lo - env.lo) < std::abs(env.hi - *hi) ? *lo : *hi;
      res.margin = std::min(*lo - env.lo, env.hi - *hi);
      break;
    }
    case EnvelopeKind::settle_time: {
      double peak = 0.0;
      for (double v : x) peak = std::max(peak, std::abs(v - env.target));
      const double band = env.fraction * peak;
      // First sample after the last excursion outside the band.
      std::size_t last_out = x.size();
      for (std::size_t i = 0; i < x.size(); ++i)
        if (std::abs(x[i] - env.target) > band) last_out = i;
      double settle = 0.0;
      if (last_out == x.size())
        settle = 0.0;
      else if (last_out + 1 < x.size())
        settle = times[last_out + 1] - env.t0;
      else
        settle = std::numeric_limits<double>::infinity();
      res.value = settle;
      res.margin = std::min(settle - env.lo, env.hi - settle);
      break;
    }
    case EnvelopeKind::peak_ratio:
    case EnvelopeKind::return_ratio:
    case EnvelopeKind::delta: {
      const double base =
          detail::mean(detail::window_values(trace, env.signal, env.baseline_t0, env.baseline_t1));
      if (env.kind == EnvelopeKind::peak_ratio) {
        const double peak = *std::max_element(x.begin(), x.end());
        res.value = peak / base;
        res.margin = res.value - env.lo;
      } else if (env.kind == EnvelopeKind::return_ratio) {
        res.value = detail::mean(x) / base;
        res.margin = env.bound - std::abs(res.value - 1.0);
      } else {
        res.value = detail::mean(x) - base;
        res.margin = std::min(res.value - env.lo, env.hi - res.value);
      }
      break;
    }
  }
  res.passed = std::isfinite(res.margin) ? res.margin >= 0.0 : res.margin > 0.0;
  return res;
}

inline std::vector<EnvelopeResult> evaluate_envelopes(const Trace& trace,
                                                      const std::vector<Envelope>& envelopes) {
  std::vector<EnvelopeResult> out;
  out.reserve(envelopes.size());
  for (const auto& e : envelopes) out.push_back(evaluate_envelope(trace, e));
  return out;
}

// Scheduled versus applied counts for one event type.
struct EventCount {
  std::size_t scheduled = 0;
  std::size_t applied = 0;
};

struct Report {
  std::string scenario;
  std::uint64_t seed = 0;
  std::vector<EnvelopeResult> envelopes;
  std::map<std::string, EventCount> events;
  std::size_t trace_rows = 0;
  std::size_t qp_infeasible = 0;

  bool passed() const {
    for (const auto& e : envelopes)
      if (!e.passed) return false;
    for (const auto& [name, c] : events)
      if (c.scheduled != c.applied) return false;
    return true;
  }
};

inline nlohmann::json report_to_json(const Report& r) {
  using nlohmann::json;
  const auto num = [](double v) -> json {
    if (std::isfinite(v)) return v;
    if (std::isnan(v)) return nullptr;
    return v > 0 ? "inf" : "-inf";
  };
  json j;
  j["scenario"] = r.scenario;
  j["seed"] = r.seed;
  j["passed"] = r.passed();
  j["trace_rows"] = r.trace_rows;
  j["qp_infeasible"] = r.qp_infeasible;
  j["envelopes"] = json::array();
  for (const auto& e : r.envelopes)
    j["envelopes"].push_back({{"name", e.name},
                              {"kind", to_string(e.kind)},
                              {"signal", e.signal},
                              {"passed", e.passed},
                              {"value", num(e.value)},
                              {"margin", num(e.margin)}});
  j["events"] = json::object();
  for (const auto& [name, c] : r.events)
    j["events"][name] = {{"scheduled", c.scheduled}, {"applied", c.applied}};
  return j;
}

}  // namespace wipsim
