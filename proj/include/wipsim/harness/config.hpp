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

// JSON form of a scenario. Absent fields keep their defaults, unknown
// fields are rejected, and every validation failure names the dotted path
// of the offending field (for example `disturbances.0.t_end`).

#pragma once

#include <charconv>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "wipsim/errors.hpp"
#include "wipsim/harness/scenario.hpp"

namespace wipsim {

using json = nlohmann::json;

namespace detail {

inline std::string join_path(const std::string& base, std::string_view key) {
  return base.empty() ? std::string(key) : base + "." + std::string(key);
}

// Typed access to one JSON object that remembers its path.
class ObjectReader {
 public:
  ObjectReader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(path_, "expected an object");
  }

  const std::string& path() const { return path_; }
  std::string path_of(std::string_view key) const { return join_path(path_, key); }
  bool has(std::string_view key) const { return j_.contains(key); }
  const json& at(std::string_view key) const {
    seen_.insert(std::string(key));
    return j_.at(std::string(key));
  }

  void number(std::string_view key, double& out) const {
    if (!has(key)) return;
    out = as_number(at(key), path_of(key));
  }

  void integer(std::string_view key, int& out) const {
    if (!has(key)) return;
    const json& v = at(key);
    if (!v.is_number_integer()) throw ConfigError(path_of(key), "expected an integer");
    out = v.get<int>();
  }

  void unsigned_integer(std::string_view key, std::uint64_t& out) const {
    if (!has(key)) return;
    const json& v = at(key);
    if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<std::int64_t>() >= 0))
      throw ConfigError(path_of(key), "expected a non-negative integer");
    out = v.get<std::uint64_t>();
  }

  void string(std::string_view key, std::string& out) const {
    if (!has(key)) return;
    const json& v = at(key);
    if (!v.is_string()) throw ConfigError(path_of(key), "expected a string");
    out = v.get<std::string>();
  }

  void vector(std::string_view key, Eigen::VectorXd& out) const {
    if (!has(key)) return;
    out = as_vector(at(key), path_of(key));
  }

  // Throws on any field that was never read.
  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it)
      if (!seen_.contains(it.key())) throw ConfigError(path_of(it.key()), "unknown field");
  }

  static double as_number(const json& v, const std::string& path) {
    if (v.is_number()) return v.get<double>();
    // Infinite bounds are spelled as strings since JSON has no infinity.
    if (v.is_string()) {
      const std::string s = v.get<std::string>();
      if (s == "inf" || s == "+inf") return std::numeric_limits<double>::infinity();
      if (s == "-inf") return -std::numeric_limits<double>::infinity();
    }
    throw ConfigError(path, "expected a number");
  }

  static Eigen::VectorXd as_vector(const json& v, const std::string& path) {
    if (!v.is_array()) throw ConfigError(path, "expected an array of numbers");
    Eigen::VectorXd out(static_cast<Eigen::Index>(v.size()));
    for (std::size_t i = 0; i < v.size(); ++i)
      out[static_cast<Eigen::Index>(i)] = as_number(v[i], join_path(path, std::to_string(i)));
    return out;
  }

 private:
  const json& j_;
  std::string path_;
  mutable std::set<std::string> seen_;
};

inline json number_json(double v) {
  if (std::isinf(v)) return v > 0 ? json("inf") : json("-inf");
  return json(v);
}

inline json vector_json(const Eigen::VectorXd& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(number_json(v[i]));
  return out;
}

inline void require(bool ok, const std::string& path, const std::string& message) {
  if (!ok) throw ConfigError(path, message);
}

inline void require_positive(double v, const std::string& path) {
  require(std::isfinite(v) && v > 0.0, path, "must be finite and > 0");
}

inline void require_non_negative(double v, const std::string& path) {
  require(std::isfinite(v) && v >= 0.0, path, "must be finite and >= 0");
}

// True when `t` is an integer number of `period` steps.
inline bool on_grid(double t, double period) {
  const double k = std::round(t / period);
  return std::abs(t - k * period) <= 1e-9 * std::max(1.0, std::abs(t));
}

template <class T, class F>
std::vector<T> read_array(const ObjectReader& r, std::string_view key, F&& read_one) {
  std::vector<T> out;
  if (!r.has(key)) return out;
  const json& arr = r.at(key);
  const std::string path = r.path_of(key);
  if (!arr.is_array()) throw ConfigError(path, "expected an array");
  for (std::size_t i = 0; i < arr.size(); ++i)
    out.push_back(read_one(arr[i], join_path(path, std::to_string(i))));
  return out;
}

inline Arm read_arm(const json& j, const std::string& path) {
  ObjectReader r(j, path);
  Arm arm;
  r.number("lateral_offset", arm.lateral_offset);
  r.number("shoulder_height", arm.shoulder_height);
  r.number("shoulder_forward", arm.shoulder_forward);
  r.number("abduction", arm.abduction);
  arm.links = read_array<ArmLink>(r, "links", [](const json& lj, const std::string& lp) {
    ObjectReader lr(lj, lp);
    ArmLink link;
    lr.number("length", link.length);
    lr.number("mass", link.mass);
    lr.finish();
    require_non_negative(link.length, join_path(lp, "length"));
    require_non_negative(link.mass, join_path(lp, "mass"));
    return link;
  });
  if (r.has("pitch")) {
    const Eigen::VectorXd q = ObjectReader::as_vector(r.at("pitch"), r.path_of("pitch"));
    arm.pitch.assign(q.data(), q.data() + q.size());
  } else {
    arm.pitch.assign(arm.links.size(), 0.0);
  }
  require(arm.pitch.size() == arm.links.size(), r.path_of("pitch"),
          "needs one angle per link (" + std::to_string(arm.links.size()) + ")");
  r.finish();
  return arm;
}

inline DisturbanceKind parse_disturbance_kind(const std::string& s, const std::string& path) {
  if (s == "impulse_force") return DisturbanceKind::impulse_force;
  if (s == "constant_force") return DisturbanceKind::constant_force;
  if (s == "wall_contact") return DisturbanceKind::wall_contact;
  throw ConfigError(path, "unknown disturbance kind '" + s +
                              "' (impulse_force, constant_force, wall_contact)");
}

inline EnvelopeKind parse_envelope_kind(const std::string& s, const std::string& path) {
  for (EnvelopeKind k : {EnvelopeKind::band, EnvelopeKind::range, EnvelopeKind::settle_time,
                         EnvelopeKind::peak_ratio, EnvelopeKind::return_ratio,
                         EnvelopeKind::delta})
    if (s == to_string(k)) return k;
  throw ConfigError(path, "unknown envelope kind '" + s + "'");
}

inline void read_window(const ObjectReader& r, std::string_view key, double& t0, double& t1) {
  if (!r.has(key)) return;
  const Eigen::VectorXd w = ObjectReader::as_vector(r.at(key), r.path_of(key));
  require(w.size() == 2, r.path_of(key), "expected [t_start, t_end]");
  t0 = w[0];
  t1 = w[1];
}

}  // namespace detail

// Columns every run produces for the given arm layout.
inline std::vector<std::string> trace_columns(const Scenario& s) {
  std::vector<std::string> cols = {"t",         "theta",     "phi",     "psi",     "theta_dot",
                                   "phi_dot",   "psi_dot",   "theta_ref", "phi_ref", "psi_ref",
                                   "phi_err",   "psi_err",   "u_l",     "u_r",     "com_dx",
                                   "com_dz",    "hand_force", "max_tension"};
  if (s.desk) {
    cols.push_back("desk_x");
    cols.push_back("desk_force");
  }
  for (std::size_t a = 0; a < s.arms.limbs.size(); ++a) {
    const std::string prefix = "arm" + std::to_string(a) + "_";
    for (std::size_t j = 0; j < s.arms.limbs[a].joints(); ++j)
      cols.push_back(prefix + "xi" + std::to_string(j));
    for (Eigen::Index m = 0; m < s.muscles.muscles(); ++m)
      cols.push_back(prefix + "T" + std::to_string(m));
  }
  return cols;
}

// Full consistency check. Throws ConfigError naming the failing field.
inline void validate_scenario(const Scenario& s) {
  using detail::require;
  using detail::require_non_negative;
  using detail::require_positive;
  require(!s.name.empty(), "name", "must not be empty");
  require_positive(s.duration, "duration");

  require_positive(s.timing.dt, "timing.dt");
  require(s.timing.dt <= 0.01, "timing.dt", "must be <= 0.01");
  require_positive(s.timing.control_period, "timing.control_period");
  require(detail::on_grid(s.timing.control_period, s.timing.dt), "timing.control_period",
          "must be a multiple of timing.dt");
  require_positive(s.timing.log_period, "timing.log_period");
  require(detail::on_grid(s.timing.log_period, s.timing.dt), "timing.log_period",
          "must be a multiple of timing.dt");
  require(detail::on_grid(s.duration, s.timing.dt), "duration", "must be a multiple of timing.dt");

  const auto wrap = [](const std::string& path, auto&& fn) {
    try {
      fn();
    } catch (const ConfigError&) {
      throw;
    } catch (const Error& e) {
      throw ConfigError(path, e.what());
    }
  };
  wrap("plant", [&] { s.plant.validate(); });
  wrap("controller.lqr", [&] { s.controller.lqr.validate(); });
  wrap("controller.yaw", [&] { s.controller.yaw.validate(); });
  wrap("controller.adaptation", [&] { s.controller.adaptation.validate(); });
  require_positive(s.controller.torque_limit, "controller.torque_limit");

  require_positive(s.arms.rate_limit, "arms.rate_limit");
  const ArmModel model = s.arm_model();
  require(model.trunk_mass > 0.0, "arms.limbs",
          "arm link masses must leave a positive trunk mass within plant.m_b");
  wrap("arms.limbs", [&] { model.validate(); });
  wrap("muscles", [&] { s.muscles.validate(); });
  for (std::size_t a = 0; a < s.arms.limbs.size(); ++a)
    require(static_cast<Eigen::Index>(s.arms.limbs[a].joints()) == s.muscles.joints(),
            "arms.limbs." + std::to_string(a) + ".links",
            "every arm needs " + std::to_string(s.muscles.joints()) +
                " joints to match muscles.G");

  require_non_negative(s.sensors.theta_noise, "sensors.theta_noise");
  require_non_negative(s.sensors.rate_noise, "sensors.rate_noise");
  require(s.sensors.encoder_counts >= 0, "sensors.encoder_counts", "must be >= 0");

  const double tc = s.timing.control_period;
  double last = 0.0;
  for (std::size_t i = 0; i < s.commands.size(); ++i) {
    const auto& c = s.commands[i];
    const std::string p = "commands." + std::to_string(i);
    require(std::isfinite(c.t) && c.t >= 0.0 && c.t <= s.duration, p + ".t",
            "must lie within [0, duration]");
    require(c.t >= last, p + ".t", "commands must be time ordered");
    require(detail::on_grid(c.t, tc), p + ".t", "must be a multiple of the control period");
    require(std::isfinite(c.phi_ref), p + ".phi_ref", "must be finite");
    require(std::isfinite(c.psi_ref), p + ".psi_ref", "must be finite");
    require_non_negative(c.ramp, p + ".ramp");
    require(detail::on_grid(c.ramp, tc), p + ".ramp", "must be a multiple of the control period");
    last = c.t;
  }
  last = 0.0;
  for (std::size_t i = 0; i < s.arm_poses.size(); ++i) {
    const auto& e = s.arm_poses[i];
    const std::string p = "arm_poses." + std::to_string(i);
    require(std::isfinite(e.t) && e.t >= 0.0 && e.t <= s.duration, p + ".t",
            "must lie within [0, duration]");
    require(e.t >= last, p + ".t", "arm poses must be time ordered");
    require(detail::on_grid(e.t, tc), p + ".t", "must be a multiple of the control period");
    require(e.xi_ref.size() == s.arms.limbs.size(), p + ".xi_ref", "needs one vector per arm");
    for (std::size_t a = 0; a < e.xi_ref.size(); ++a) {
      require(e.xi_ref[a].size() == s.arms.limbs[a].joints(),
              p + ".xi_ref." + std::to_string(a), "needs one angle per joint");
      for (double q : e.xi_ref[a])
        require(std::isfinite(q), p + ".xi_ref." + std::to_string(a), "must be finite");
    }
    last = e.t;
  }
  for (std::size_t i = 0; i < s.disturbances.size(); ++i) {
    const auto& d = s.disturbances[i];
    const std::string p = "disturbances." + std::to_string(i);
    wrap(p, [&] { d.validate(); });
    require(d.t_start >= 0.0 && d.t_end <= s.duration, p + ".window",
            "must lie within [0, duration]");
    require(detail::on_grid(d.t_start, s.timing.dt) && detail::on_grid(d.t_end, s.timing.dt),
            p + ".window", "ends must be multiples of timing.dt");
    require(std::isfinite(d.magnitude), p + ".magnitude", "must be finite");
    if (d.target == DisturbanceTarget::hands)
      require(!s.arms.limbs.empty(), p + ".target", "hands need at least one arm");
  }
  if (s.desk) {
    require_positive(s.desk->mass, "desk.mass");
    require_non_negative(s.desk->friction, "desk.friction");
    require_non_negative(s.desk->gap, "desk.gap");
    require_positive(s.desk->stiffness, "desk.stiffness");
    require_non_negative(s.desk->damping, "desk.damping");
    require_positive(s.desk->slip_speed, "desk.slip_speed");
    require(!s.arms.limbs.empty(), "desk", "the desk is pushed with the hands; needs arms");
  }

  const std::vector<std::string> all = trace_columns(s);
  const auto exists = [&](const std::string& c) {
    for (const auto& a : all)
      if (a == c) return true;
    return false;
  };
  for (std::size_t i = 0; i < s.channels.size(); ++i)
    require(exists(s.channels[i]), "channels." + std::to_string(i),
            "unknown signal '" + s.channels[i] + "'");
  for (std::size_t i = 0; i < s.envelopes.size(); ++i) {
    const auto& e = s.envelopes[i];
    const std::string p = "envelopes." + std::to_string(i);
    require(!e.name.empty(), p + ".name", "must not be empty");
    require(exists(e.signal), p + ".signal", "unknown signal '" + e.signal + "'");
    if (!s.channels.empty()) {
      bool exported = e.signal == "t";
      for (const auto& c : s.channels) exported = exported || c == e.signal;
      require(exported, p + ".signal", "asserted signal must be an exported channel");
    }
    require(e.t0 >= 0.0 && e.t1 >= e.t0 && e.t1 <= s.duration, p + ".window",
            "must be ordered and within [0, duration]");
    const bool needs_baseline = e.kind == EnvelopeKind::peak_ratio ||
                                e.kind == EnvelopeKind::return_ratio ||
                                e.kind == EnvelopeKind::delta;
    if (needs_baseline)
      require(e.baseline_t0 >= 0.0 && e.baseline_t1 >= e.baseline_t0 &&
                  e.baseline_t1 <= s.duration,
              p + ".baseline", "must be ordered and within [0, duration]");
    if (e.kind == EnvelopeKind::band || e.kind == EnvelopeKind::return_ratio)
      require_non_negative(e.bound, p + ".bound");
    if (e.kind == EnvelopeKind::range || e.kind == EnvelopeKind::settle_time ||
        e.kind == EnvelopeKind::delta)
      require(e.lo <= e.hi, p + ".hi", "must be >= lo");
    if (e.kind == EnvelopeKind::settle_time)
      require(e.fraction > 0.0 && e.fraction < 1.0, p + ".fraction", "must lie in (0, 1)");
  }
}

inline json to_json(const Scenario& s) {
  using detail::number_json;
  using detail::vector_json;
  json j;
  j["name"] = s.name;
  j["description"] = s.description;
  j["duration"] = s.duration;
  j["seed"] = s.seed;
  j["timing"] = {{"dt", s.timing.dt},
                 {"control_period", s.timing.control_period},
                 {"log_period", s.timing.log_period}};
  const PlantParams& p = s.plant;
  j["plant"] = {{"m_w", p.m_w}, {"m_b", p.m_b}, {"I_w", p.I_w},
                {"I_b", p.I_b}, {"r_w", p.r_w}, {"l", p.l},
                {"g", p.g}, {"track_width", p.track_width}, {"I_yaw", p.I_yaw},
                {"yaw_damping", p.yaw_damping}};
  const auto& c = s.controller;
  j["controller"] = {
      {"lqr", {{"q_diag", c.lqr.q_diag}, {"r", c.lqr.r}}},
      {"yaw", {{"k_psi", c.yaw.k_psi}}},
      {"adaptation",
       {{"k_adapt", c.adaptation.k_adapt},
        {"dead_zone", c.adaptation.dead_zone},
        {"rate_limit", c.adaptation.rate_limit},
        {"theta_ref_bound", c.adaptation.theta_ref_bound},
        {"quasi_static_rate", c.adaptation.quasi_static_rate}}},
      {"torque_limit", c.torque_limit}};
  json limbs = json::array();
  for (const auto& arm : s.arms.limbs) {
    json links = json::array();
    for (const auto& link : arm.links) links.push_back({{"length", link.length}, {"mass", link.mass}});
    limbs.push_back({{"lateral_offset", arm.lateral_offset},
                     {"shoulder_height", arm.shoulder_height},
                     {"shoulder_forward", arm.shoulder_forward},
                     {"abduction", arm.abduction},
                     {"links", links},
                     {"pitch", arm.pitch}});
  }
  j["arms"] = {{"limbs", limbs}, {"rate_limit", s.arms.rate_limit}};
  const auto& m = s.muscles;
  json G = json::array();
  for (Eigen::Index i = 0; i < m.G.rows(); ++i) G.push_back(vector_json(m.G.row(i).transpose()));
  j["muscles"] = {{"G", G},
                  {"w_diag", vector_json(m.w_diag)},
                  {"t_min", vector_json(m.t_min)},
                  {"t_max", vector_json(m.t_max)},
                  {"l0", vector_json(m.l0)},
                  {"k_e", vector_json(m.k_e)},
                  {"k_j_diag", vector_json(m.k_j_diag)}};
  j["sensors"] = {{"theta_noise", s.sensors.theta_noise},
                  {"rate_noise", s.sensors.rate_noise},
                  {"encoder_counts", s.sensors.encoder_counts}};
  j["initial"] = {{"theta", s.initial.theta},
                  {"phi", s.initial.phi},
                  {"psi", s.initial.psi},
                  {"theta_ref", s.initial.theta_ref}};
  j["commands"] = json::array();
  for (const auto& cmd : s.commands)
    j["commands"].push_back(
        {{"t", cmd.t}, {"phi_ref", cmd.phi_ref}, {"psi_ref", cmd.psi_ref}, {"ramp", cmd.ramp}});
  j["arm_poses"] = json::array();
  for (const auto& e : s.arm_poses) j["arm_poses"].push_back({{"t", e.t}, {"xi_ref", e.xi_ref}});
  j["disturbances"] = json::array();
  for (const auto& d : s.disturbances) {
    json dj = {{"kind", to_string(d.kind)},
               {"magnitude", d.magnitude},
               {"direction", d.direction},
               {"window", {d.t_start, d.t_end}},
               {"target", to_string(d.target)}};
    if (d.target == DisturbanceTarget::body) {
      dj["application_height"] = d.application_height;
      dj["application_forward"] = d.application_forward;
    }
    if (d.kind == DisturbanceKind::wall_contact) {
      dj["wall_position"] = d.wall_position;
      dj["wall_stiffness"] = d.wall_stiffness;
      dj["wall_damping"] = d.wall_damping;
    }
    j["disturbances"].push_back(dj);
  }
  if (s.desk) {
    j["desk"] = {{"mass", s.desk->mass},           {"friction", s.desk->friction},
                 {"gap", s.desk->gap},             {"stiffness", s.desk->stiffness},
                 {"damping", s.desk->damping},     {"slip_speed", s.desk->slip_speed}};
  } else {
    j["desk"] = nullptr;
  }
  j["envelopes"] = json::array();
  for (const auto& e : s.envelopes) {
    json ej = {{"name", e.name},
               {"kind", to_string(e.kind)},
               {"signal", e.signal},
               {"window", {e.t0, e.t1}}};
    switch (e.kind) {
      case EnvelopeKind::band:
        ej["target"] = e.target;
        ej["bound"] = e.bound;
        break;
      case EnvelopeKind::range:
        ej["lo"] = e.lo;
        ej["hi"] = e.hi;
        break;
      case EnvelopeKind::settle_time:
        ej["target"] = e.target;
        ej["fraction"] = e.fraction;
        ej["lo"] = e.lo;
        ej["hi"] = e.hi;
        break;
      case EnvelopeKind::peak_ratio:
        ej["lo"] = e.lo;
        ej["baseline"] = {e.baseline_t0, e.baseline_t1};
        break;
      case EnvelopeKind::return_ratio:
        ej["bound"] = e.bound;
        ej["baseline"] = {e.baseline_t0, e.baseline_t1};
        break;
      case EnvelopeKind::delta:
        ej["lo"] = e.lo;
        ej["hi"] = e.hi;
        ej["baseline"] = {e.baseline_t0, e.baseline_t1};
        break;
    }
    j["envelopes"].push_back(ej);
  }
  j["channels"] = s.channels;
  return j;
}

// Parses and validates a scenario document.
inline Scenario scenario_from_json(const json& j) {
  using detail::ObjectReader;
  using detail::read_array;
  ObjectReader r(j, "");
  Scenario s;
  r.string("name", s.name);
  r.string("description", s.description);
  r.number("duration", s.duration);
  r.unsigned_integer("seed", s.seed);
  if (r.has("timing")) {
    ObjectReader t(r.at("timing"), "timing");
    t.number("dt", s.timing.dt);
    t.number("control_period", s.timing.control_period);
    t.number("log_period", s.timing.log_period);
    t.finish();
  }
  if (r.has("plant")) {
    ObjectReader p(r.at("plant"), "plant");
    p.number("m_w", s.plant.m_w);
    p.number("m_b", s.plant.m_b);
    p.number("I_w", s.plant.I_w);
    p.number("I_b", s.plant.I_b);
    p.number("r_w", s.plant.r_w);
    p.number("l", s.plant.l);
    p.number("g", s.plant.g);
    p.number("track_width", s.plant.track_width);
    p.number("I_yaw", s.plant.I_yaw);
    p.number("yaw_damping", s.plant.yaw_damping);
    p.finish();
  }
  if (r.has("controller")) {
    ObjectReader c(r.at("controller"), "controller");
    if (c.has("lqr")) {
      ObjectReader l(c.at("lqr"), "controller.lqr");
      if (l.has("q_diag")) {
        const Eigen::VectorXd q = ObjectReader::as_vector(l.at("q_diag"), l.path_of("q_diag"));
        detail::require(q.size() == 4, l.path_of("q_diag"), "expected 4 entries");
        for (int i = 0; i < 4; ++i) s.controller.lqr.q_diag[static_cast<std::size_t>(i)] = q[i];
      }
      l.number("r", s.controller.lqr.r);
      l.finish();
    }
    if (c.has("yaw")) {
      ObjectReader y(c.at("yaw"), "controller.yaw");
      y.number("k_psi", s.controller.yaw.k_psi);
      y.finish();
    }
    if (c.has("adaptation")) {
      ObjectReader a(c.at("adaptation"), "controller.adaptation");
      auto& ad = s.controller.adaptation;
      a.number("k_adapt", ad.k_adapt);
      a.number("dead_zone", ad.dead_zone);
      a.number("rate_limit", ad.rate_limit);
      a.number("theta_ref_bound", ad.theta_ref_bound);
      a.number("quasi_static_rate", ad.quasi_static_rate);
      a.finish();
    }
    c.number("torque_limit", s.controller.torque_limit);
    c.finish();
  }
  if (r.has("arms")) {
    ObjectReader a(r.at("arms"), "arms");
    if (a.has("limbs")) s.arms.limbs = read_array<Arm>(a, "limbs", detail::read_arm);
    a.number("rate_limit", s.arms.rate_limit);
    a.finish();
  }
  if (r.has("muscles")) {
    ObjectReader m(r.at("muscles"), "muscles");
    if (m.has("G")) {
      const json& G = m.at("G");
      const std::string gp = m.path_of("G");
      if (!G.is_array() || G.empty()) throw ConfigError(gp, "expected a non-empty array of rows");
      Eigen::MatrixXd out;
      for (std::size_t i = 0; i < G.size(); ++i) {
        const Eigen::VectorXd row =
            ObjectReader::as_vector(G[i], detail::join_path(gp, std::to_string(i)));
        if (i == 0) out.resize(static_cast<Eigen::Index>(G.size()), row.size());
        detail::require(row.size() == out.cols(), detail::join_path(gp, std::to_string(i)),
                        "rows must have equal length");
        out.row(static_cast<Eigen::Index>(i)) = row.transpose();
      }
      s.muscles.G = out;
    }
    m.vector("w_diag", s.muscles.w_diag);
    m.vector("t_min", s.muscles.t_min);
    m.vector("t_max", s.muscles.t_max);
    m.vector("l0", s.muscles.l0);
    m.vector("k_e", s.muscles.k_e);
    m.vector("k_j_diag", s.muscles.k_j_diag);
    m.finish();
  }
  if (r.has("sensors")) {
    ObjectReader se(r.at("sensors"), "sensors");
    se.number("theta_noise", s.sensors.theta_noise);
    se.number("rate_noise", s.sensors.rate_noise);
    se.integer("encoder_counts", s.sensors.encoder_counts);
    se.finish();
  }
  if (r.has("initial")) {
    ObjectReader in(r.at("initial"), "initial");
    in.number("theta", s.initial.theta);
    in.number("phi", s.initial.phi);
    in.number("psi", s.initial.psi);
    in.number("theta_ref", s.initial.theta_ref);
    in.finish();
  }
  s.commands = read_array<Command>(r, "commands", [](const json& cj, const std::string& path) {
    ObjectReader cr(cj, path);
    Command c;
    detail::require(cr.has("t"), cr.path_of("t"), "required");
    cr.number("t", c.t);
    cr.number("phi_ref", c.phi_ref);
    cr.number("psi_ref", c.psi_ref);
    cr.number("ramp", c.ramp);
    cr.finish();
    return c;
  });
  s.arm_poses = read_array<ArmPoseEvent>(r, "arm_poses", [](const json& ej, const std::string& path) {
    ObjectReader er(ej, path);
    ArmPoseEvent e;
    detail::require(er.has("t"), er.path_of("t"), "required");
    er.number("t", e.t);
    if (er.has("xi_ref")) {
      const json& x = er.at("xi_ref");
      if (!x.is_array()) throw ConfigError(er.path_of("xi_ref"), "expected an array per arm");
      for (std::size_t a = 0; a < x.size(); ++a) {
        const Eigen::VectorXd q = ObjectReader::as_vector(
            x[a], detail::join_path(er.path_of("xi_ref"), std::to_string(a)));
        e.xi_ref.emplace_back(q.data(), q.data() + q.size());
      }
    }
    er.finish();
    return e;
  });
  s.disturbances =
      read_array<Disturbance>(r, "disturbances", [](const json& dj, const std::string& path) {
        ObjectReader dr(dj, path);
        Disturbance d;
        std::string kind = "constant_force", target = "body";
        dr.string("kind", kind);
        d.kind = detail::parse_disturbance_kind(kind, dr.path_of("kind"));
        dr.string("target", target);
        if (target == "hands")
          d.target = DisturbanceTarget::hands;
        else if (target != "body")
          throw ConfigError(dr.path_of("target"), "expected 'body' or 'hands'");
        dr.number("magnitude", d.magnitude);
        dr.number("direction", d.direction);
        detail::read_window(dr, "window", d.t_start, d.t_end);
        dr.number("application_height", d.application_height);
        dr.number("application_forward", d.application_forward);
        dr.number("wall_position", d.wall_position);
        dr.number("wall_stiffness", d.wall_stiffness);
        dr.number("wall_damping", d.wall_damping);
        dr.finish();
        return d;
      });
  if (r.has("desk") && !r.at("desk").is_null()) {
    ObjectReader d(r.at("desk"), "desk");
    DeskConfig desk;
    d.number("mass", desk.mass);
    d.number("friction", desk.friction);
    d.number("gap", desk.gap);
    d.number("stiffness", desk.stiffness);
    d.number("damping", desk.damping);
    d.number("slip_speed", desk.slip_speed);
    d.finish();
    s.desk = desk;
  }
  s.envelopes = read_array<Envelope>(r, "envelopes", [](const json& ej, const std::string& path) {
    ObjectReader er(ej, path);
    Envelope e;
    std::string kind = "band";
    er.string("name", e.name);
    er.string("kind", kind);
    e.kind = detail::parse_envelope_kind(kind, er.path_of("kind"));
    er.string("signal", e.signal);
    detail::read_window(er, "window", e.t0, e.t1);
    detail::read_window(er, "baseline", e.baseline_t0, e.baseline_t1);
    er.number("target", e.target);
    er.number("bound", e.bound);
    er.number("lo", e.lo);
    er.number("hi", e.hi);
    er.number("fraction", e.fraction);
    er.finish();
    return e;
  });
  if (r.has("channels")) {
    const json& ch = r.at("channels");
    if (!ch.is_array()) throw ConfigError("channels", "expected an array of names");
    for (std::size_t i = 0; i < ch.size(); ++i) {
      if (!ch[i].is_string())
        throw ConfigError("channels." + std::to_string(i), "expected a string");
      s.channels.push_back(ch[i].get<std::string>());
    }
  }
  r.finish();
  validate_scenario(s);
  return s;
}

// Sets `key` (dotted path, array indices as numbers) to `value`. The value
// is parsed as JSON when possible and taken as a string otherwise.
inline void apply_override(json& doc, const std::string& assignment) {
  const std::size_t eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0)
    throw ConfigError(assignment, "override must look like key=value");
  const std::string key = assignment.substr(0, eq);
  const std::string text = assignment.substr(eq + 1);
  json value = json::parse(text, nullptr, false);
  if (value.is_discarded()) value = text;

  json* node = &doc;
  std::string walked;
  std::size_t start = 0;
  while (true) {
    const std::size_t dot = key.find('.', start);
    const std::string part = key.substr(start, dot - start);
    walked = detail::join_path(walked, part);
    if (part.empty()) throw ConfigError(key, "empty path segment");
    const bool last = dot == std::string::npos;
    if (node->is_array()) {
      std::size_t idx = 0;
      const auto res = std::from_chars(part.data(), part.data() + part.size(), idx);
      if (res.ec != std::errc{} || res.ptr != part.data() + part.size())
        throw ConfigError(walked, "expected an array index");
      if (idx >= node->size())
        throw ConfigError(walked, "index out of range (size " + std::to_string(node->size()) + ")");
      node = &(*node)[idx];
    } else if (node->is_object()) {
      if (!node->contains(part) && !last)
        throw ConfigError(walked, "no such field");
      node = &(*node)[part];
    } else {
      throw ConfigError(walked, "cannot descend into a scalar");
    }
    if (last) break;
    start = dot + 1;
  }
  *node = value;
}

inline json load_json_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("", "cannot open config file '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  json j = json::parse(buf.str(), nullptr, false);
  if (j.is_discarded()) throw ConfigError("", "'" + path + "' is not valid JSON");
  return j;
}

}  // namespace wipsim
