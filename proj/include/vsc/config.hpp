/*
 * Copyright 2026 The vsc-impedance Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

// JSON run configuration: `design`, `controller`, `source`, `sim`, field
// names as in the C++ types, SI units. Keys starting with '_' are ignored
// (JSON has no comments); any other unknown key is an error.
//
//   {"design": {"v_dc_nominal": 700, "p_out": 5000, "filter_inductance": 1e-3,
//               "dc_capacitance": 24e-6},
//    "controller": {"frame": "DQ",
//                   "regulator": {"type": "PI", "k_p": 1, "tau_i": 0.0143},
//                   "feedforward": {"mode": "Ideal"}}}

#pragma once

#include <cmath>
#include <filesystem>
#include <initializer_list>
#include <limits>
#include <string>
#include <string_view>

#include <json.hpp>

#include "vsc/io.hpp"
#include "vsc/model.hpp"
#include "vsc/sim.hpp"

namespace vsc {

using Json = nlohmann::ordered_json;

struct RunConfig {
  ConverterDesign design;
  ControllerSpec controller;
  SourceSpec source;
  SimConfig sim;

  friend bool operator==(const RunConfig&, const RunConfig&) = default;
};

namespace detail {

inline constexpr const char* kConfigWhere = "cli.config";

class JsonObject {
 public:
  JsonObject(const Json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) fail(path_, "must be an object");
  }

  [[noreturn]] static void fail(const std::string& path, const std::string& what) {
    throw Error(ErrorKind::InvalidConfig, kConfigWhere, path + " " + what);
  }

  std::string field(std::string_view key) const {
    return path_.empty() ? std::string(key) : path_ + "." + std::string(key);
  }

  bool has(std::string_view key) const { return j_.contains(key); }
  bool is_null(std::string_view key) const { return has(key) && j_.at(key).is_null(); }

  void only(std::initializer_list<std::string_view> keys) const {
    for (auto it = j_.begin(); it != j_.end(); ++it) {
      const std::string& k = it.key();
      if (!k.empty() && k.front() == '_') continue;
      bool known = false;
      for (auto allowed : keys) known = known || k == allowed;
      if (!known) fail(field(k), "is not a recognized field");
    }
  }

  double number(std::string_view key) const {
    if (!has(key)) fail(field(key), "is required");
    return as_number(key);
  }
  double number(std::string_view key, double fallback) const {
    return has(key) ? as_number(key) : fallback;
  }

  std::string text(std::string_view key) const {
    if (!has(key)) fail(field(key), "is required");
    const Json& v = j_.at(key);
    if (!v.is_string()) fail(field(key), "must be a string");
    return v.get<std::string>();
  }

  bool boolean(std::string_view key, bool fallback) const {
    if (!has(key)) return fallback;
    const Json& v = j_.at(key);
    if (!v.is_boolean()) fail(field(key), "must be true or false");
    return v.get<bool>();
  }

  std::size_t count(std::string_view key, std::size_t fallback) const {
    if (!has(key)) return fallback;
    const Json& v = j_.at(key);
    if (!v.is_number_unsigned()) fail(field(key), "must be a non-negative integer");
    return v.get<std::size_t>();
  }

  JsonObject object(std::string_view key) const { return {j_.at(key), field(key)}; }

 private:
  double as_number(std::string_view key) const {
    const Json& v = j_.at(key);
    if (!v.is_number()) fail(field(key), "must be a number");
    return v.get<double>();
  }

  const Json& j_;
  std::string path_;
};

inline GridSpec grid_from_json(const JsonObject& o) {
  o.only({"phase_voltage_amplitude", "fundamental_angular_frequency"});
  GridSpec g;
  g.phase_voltage_amplitude = o.number("phase_voltage_amplitude", g.phase_voltage_amplitude);
  g.fundamental_angular_frequency =
      o.number("fundamental_angular_frequency", g.fundamental_angular_frequency);
  return g;
}

inline ConverterDesign design_from_json(const JsonObject& o) {
  o.only({"v_dc_nominal", "p_out", "efficiency", "filter_inductance", "filter_resistance",
          "dc_capacitance", "dc_cap_esr", "switching_frequency", "grid"});
  ConverterDesign d;
  d.v_dc_nominal = o.number("v_dc_nominal");
  d.p_out = o.number("p_out");
  d.efficiency = o.number("efficiency", d.efficiency);
  d.filter_inductance = o.number("filter_inductance");
  d.filter_resistance = o.number("filter_resistance", d.filter_resistance);
  d.dc_capacitance = o.number("dc_capacitance");
  d.dc_cap_esr = o.number("dc_cap_esr", d.dc_cap_esr);
  d.switching_frequency = o.number("switching_frequency", d.switching_frequency);
  if (o.has("grid")) d.grid = grid_from_json(o.object("grid"));
  return d;
}

inline Regulator regulator_from_json(const JsonObject& o) {
  const std::string type = o.text("type");
  if (type == "PI") {
    o.only({"type", "k_p", "tau_i"});
    PiRegulator pi;
    pi.k_p = o.number("k_p");
    if (!o.has("tau_i")) JsonObject::fail(o.field("tau_i"), "is required (null for a pure P regulator)");
    pi.tau_i = o.is_null("tau_i") ? std::numeric_limits<double>::infinity() : o.number("tau_i");
    return pi;
  }
  if (type == "PR") {
    o.only({"type", "k_p", "k_r", "resonant_frequency", "damping"});
    PrRegulator pr;
    pr.k_p = o.number("k_p");
    pr.k_r = o.number("k_r");
    pr.resonant_frequency = o.number("resonant_frequency");
    pr.damping = o.number("damping", 0.0);
    return pr;
  }
  JsonObject::fail(o.field("type"), "must be \"PI\" or \"PR\"");
}

inline Feedforward feedforward_from_json(const JsonObject& o) {
  o.only({"mode", "bandwidth_hz"});
  const std::string mode = o.text("mode");
  if (mode == "Ideal") return Feedforward::ideal();
  if (mode == "Constant") return Feedforward::constant();
  if (mode == "Filtered") return Feedforward::filtered(o.number("bandwidth_hz"));
  JsonObject::fail(o.field("mode"), "must be \"Ideal\", \"Constant\" or \"Filtered\"");
}

inline ControllerSpec controller_from_json(const JsonObject& o) {
  o.only({"frame", "regulator", "feedforward", "control_rate"});
  ControllerSpec c;
  const std::string frame = o.text("frame");
  if (frame == "DQ") c.frame = Frame::DQ;
  else if (frame == "AlphaBeta") c.frame = Frame::AlphaBeta;
  else JsonObject::fail(o.field("frame"), "must be \"DQ\" or \"AlphaBeta\"");
  if (!o.has("regulator")) JsonObject::fail(o.field("regulator"), "is required");
  c.regulator = regulator_from_json(o.object("regulator"));
  if (o.has("feedforward")) c.feedforward = feedforward_from_json(o.object("feedforward"));
  c.control_rate = o.number("control_rate", c.control_rate);
  return c;
}

inline SourceSpec source_from_json(const JsonObject& o, const ConverterDesign& design) {
  o.only({"v_nominal", "series_resistance", "injection"});
  SourceSpec s = SourceSpec::for_design(design);
  s.v_nominal = o.number("v_nominal", s.v_nominal);
  s.series_resistance = o.number("series_resistance", s.series_resistance);
  if (o.has("injection")) {
    const JsonObject inj = o.object("injection");
    inj.only({"frequency", "amplitude"});
    s.injection = Injection{inj.number("frequency"), inj.number("amplitude")};
  }
  return s;
}

inline SimConfig sim_from_json(const JsonObject& o) {
  o.only({"plant_step", "duration", "record_decimation", "start_at_operating_point"});
  SimConfig c;
  c.plant_step = o.number("plant_step", c.plant_step);
  c.duration = o.number("duration", c.duration);
  c.record_decimation = o.count("record_decimation", c.record_decimation);
  c.start_at_operating_point = o.boolean("start_at_operating_point", c.start_at_operating_point);
  return c;
}

}  // namespace detail

/// Parses and validates a configuration document.
inline RunConfig config_from_json(const Json& j) {
  using detail::JsonObject;
  const JsonObject root(j, "");
  root.only({"design", "controller", "source", "sim"});
  RunConfig cfg;
  if (!root.has("design")) JsonObject::fail("design", "is required");
  if (!root.has("controller")) JsonObject::fail("controller", "is required");
  cfg.design = detail::design_from_json(root.object("design"));
  cfg.controller = detail::controller_from_json(root.object("controller"));
  cfg.source = root.has("source") ? detail::source_from_json(root.object("source"), cfg.design)
                                  : SourceSpec::for_design(cfg.design);
  if (root.has("sim")) cfg.sim = detail::sim_from_json(root.object("sim"));
  cfg.design.validate();
  cfg.controller.validate();
  cfg.source.validate();
  return cfg;
}

inline RunConfig parse_config(std::string_view text) {
  Json j;
  try {
    j = Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw Error(ErrorKind::InvalidConfig, detail::kConfigWhere, std::string("not valid JSON: ") + e.what());
  }
  return config_from_json(j);
}

inline RunConfig load_config(const std::filesystem::path& path) {
  return parse_config(read_text_file(path, detail::kConfigWhere));
}

inline Json to_json(const RunConfig& cfg) {
  const ConverterDesign& d = cfg.design;
  Json design = {{"v_dc_nominal", d.v_dc_nominal},
                 {"p_out", d.p_out},
                 {"efficiency", d.efficiency},
                 {"filter_inductance", d.filter_inductance},
                 {"filter_resistance", d.filter_resistance},
                 {"dc_capacitance", d.dc_capacitance},
                 {"dc_cap_esr", d.dc_cap_esr},
                 {"switching_frequency", d.switching_frequency},
                 {"grid",
                  {{"phase_voltage_amplitude", d.grid.phase_voltage_amplitude},
                   {"fundamental_angular_frequency", d.grid.fundamental_angular_frequency}}}};

  const ControllerSpec& c = cfg.controller;
  Json reg;
  if (const auto* pi = std::get_if<PiRegulator>(&c.regulator)) {
    reg = {{"type", "PI"}, {"k_p", pi->k_p}};
    reg["tau_i"] = std::isinf(pi->tau_i) ? Json(nullptr) : Json(pi->tau_i);
  } else {
    const auto& pr = std::get<PrRegulator>(c.regulator);
    reg = {{"type", "PR"},
           {"k_p", pr.k_p},
           {"k_r", pr.k_r},
           {"resonant_frequency", pr.resonant_frequency},
           {"damping", pr.damping}};
  }
  Json ff;
  switch (c.feedforward.kind) {
    case Feedforward::Kind::Ideal: ff = {{"mode", "Ideal"}}; break;
    case Feedforward::Kind::Constant: ff = {{"mode", "Constant"}}; break;
    case Feedforward::Kind::Filtered:
      ff = {{"mode", "Filtered"}, {"bandwidth_hz", c.feedforward.bandwidth_hz}};
      break;
  }
  Json controller = {{"frame", c.frame == Frame::DQ ? "DQ" : "AlphaBeta"},
                     {"regulator", reg},
                     {"feedforward", ff},
                     {"control_rate", c.control_rate}};

  Json source = {{"v_nominal", cfg.source.v_nominal},
                 {"series_resistance", cfg.source.series_resistance}};
  if (cfg.source.injection)
    source["injection"] = {{"frequency", cfg.source.injection->frequency},
                           {"amplitude", cfg.source.injection->amplitude}};

  Json sim = {{"plant_step", cfg.sim.plant_step},
              {"duration", cfg.sim.duration},
              {"record_decimation", cfg.sim.record_decimation},
              {"start_at_operating_point", cfg.sim.start_at_operating_point}};

  return {{"design", design}, {"controller", controller}, {"source", source}, {"sim", sim}};
}

}  // namespace vsc
