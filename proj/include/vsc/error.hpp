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

#pragma once

#include <cstdio>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace vsc {

enum class ErrorKind {
  InvalidDesign,
  InvalidConfig,
  UnsupportedFrame,
  InfeasibleOperatingPoint,
  DegenerateFrequency,
  SingularSystem,
  InfiniteImpedance,
  ResonantSingularity,
  ZeroPower,
  NumericalDivergence,
  ModulationSaturation,
  NonCoherentWindow,
  LowSignal,
  MalformedCapture,
  MalformedCurveFile,
  NoOverlap,
  DivisionByOpenCircuit,
  ZeroLoadImpedance,
  RefineGridNeeded,
  PointOnContour,
  IoFailure,
};

constexpr std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidDesign: return "InvalidDesign";
    case ErrorKind::InvalidConfig: return "InvalidConfig";
    case ErrorKind::UnsupportedFrame: return "UnsupportedFrame";
    case ErrorKind::InfeasibleOperatingPoint: return "InfeasibleOperatingPoint";
    case ErrorKind::DegenerateFrequency: return "DegenerateFrequency";
    case ErrorKind::SingularSystem: return "SingularSystem";
    case ErrorKind::InfiniteImpedance: return "InfiniteImpedance";
    case ErrorKind::ResonantSingularity: return "ResonantSingularity";
    case ErrorKind::ZeroPower: return "ZeroPower";
    case ErrorKind::NumericalDivergence: return "NumericalDivergence";
    case ErrorKind::ModulationSaturation: return "ModulationSaturation";
    case ErrorKind::NonCoherentWindow: return "NonCoherentWindow";
    case ErrorKind::LowSignal: return "LowSignal";
    case ErrorKind::MalformedCapture: return "MalformedCapture";
    case ErrorKind::MalformedCurveFile: return "MalformedCurveFile";
    case ErrorKind::NoOverlap: return "NoOverlap";
    case ErrorKind::DivisionByOpenCircuit: return "DivisionByOpenCircuit";
    case ErrorKind::ZeroLoadImpedance: return "ZeroLoadImpedance";
    case ErrorKind::RefineGridNeeded: return "RefineGridNeeded";
    case ErrorKind::PointOnContour: return "PointOnContour";
    case ErrorKind::IoFailure: return "IoFailure";
  }
  return "Unknown";
}

/// Errors caused by bad inputs (as opposed to numerical trouble while
/// evaluating valid inputs).
constexpr bool is_validation_error(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidDesign:
    case ErrorKind::InvalidConfig:
    case ErrorKind::UnsupportedFrame:
    case ErrorKind::InfeasibleOperatingPoint:
    case ErrorKind::ZeroPower:
    case ErrorKind::MalformedCapture:
    case ErrorKind::MalformedCurveFile:
    case ErrorKind::IoFailure:
      return true;
    default:
      return false;
  }
}

/// Every failure carries the module.operation that raised it, and the
/// offending frequency when there is one.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, std::string where, const std::string& detail,
        std::optional<double> frequency_hz = std::nullopt)
      : std::runtime_error(format(kind, where, detail, frequency_hz)),
        kind_(kind),
        where_(std::move(where)),
        frequency_hz_(frequency_hz) {}

  ErrorKind kind() const noexcept { return kind_; }
  const std::string& where() const noexcept { return where_; }
  std::optional<double> frequency_hz() const noexcept { return frequency_hz_; }

 private:
  static std::string format(ErrorKind kind, const std::string& where,
                            const std::string& detail,
                            std::optional<double> f) {
    std::string msg = "[" + where + "] " + std::string(to_string(kind));
    if (f) {
      char buf[48];
      std::snprintf(buf, sizeof buf, " at %.6g Hz", *f);
      msg += buf;
    }
    if (!detail.empty()) msg += ": " + detail;
    return msg;
  }

  ErrorKind kind_;
  std::string where_;
  std::optional<double> frequency_hz_;
};

}  // namespace vsc
