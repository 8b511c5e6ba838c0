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

#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "vsc/curve.hpp"
#include "vsc/error.hpp"
#include "vsc/sim.hpp"

namespace vsc {

/// Shortest text that round-trips a double ("%.17g").
inline std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

/// Writes `content` to a temporary sibling and renames it over `path`, so a
/// failed write never leaves a partial file behind.
inline void atomic_write_file(const std::filesystem::path& path, std::string_view content) {
  namespace fs = std::filesystem;
  const char* where = "io.atomic_write_file";
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorKind::IoFailure, where, "cannot open " + tmp.string());
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.flush();
    if (!out) {
      out.close();
      std::error_code ec;
      fs::remove(tmp, ec);
      throw Error(ErrorKind::IoFailure, where, "write failed for " + tmp.string());
    }
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp, ec);
    throw Error(ErrorKind::IoFailure, where, "cannot rename onto " + path.string());
  }
}

inline std::string read_text_file(const std::filesystem::path& path, const char* where) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::IoFailure, where, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

namespace detail {

inline std::vector<std::string_view> split_lines(std::string_view text) {
  std::vector<std::string_view> lines;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    lines.push_back(line);
    pos = end + 1;
  }
  while (!lines.empty() && lines.back().empty()) lines.pop_back();
  return lines;
}

inline std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t pos = 0;
  while (true) {
    const std::size_t end = line.find(',', pos);
    std::string_view f = line.substr(pos, end == std::string_view::npos ? end : end - pos);
    while (!f.empty() && (f.front() == ' ' || f.front() == '\t')) f.remove_prefix(1);
    while (!f.empty() && (f.back() == ' ' || f.back() == '\t')) f.remove_suffix(1);
    out.push_back(f);
    if (end == std::string_view::npos) break;
    pos = end + 1;
  }
  return out;
}

inline bool parse_double(std::string_view s, double& out) {
  if (s.empty()) return false;
  if (s.front() == '+') s.remove_prefix(1);
  const auto res = std::from_chars(s.data(), s.data() + s.size(), out);
  return res.ec == std::errc{} && res.ptr == s.data() + s.size();
}

/// Numeric table with a header row; throws `kind` on malformed input.
inline std::vector<std::vector<double>> parse_numeric_csv(std::string_view text,
                                                          std::size_t min_columns,
                                                          std::vector<std::string>& header,
                                                          ErrorKind kind, const char* where) {
  const auto lines = split_lines(text);
  if (lines.empty()) throw Error(kind, where, "empty file");
  std::string_view first = lines[0];
  if (first.size() >= 3 && static_cast<unsigned char>(first[0]) == 0xEF) first.remove_prefix(3);
  header.clear();
  for (auto f : split_fields(first)) header.emplace_back(f);
  if (header.size() < min_columns) throw Error(kind, where, "missing columns in header");
  std::vector<std::vector<double>> cols(header.size());
  for (std::size_t li = 1; li < lines.size(); ++li) {
    if (lines[li].empty() || lines[li].front() == '#') continue;
    const auto fields = split_fields(lines[li]);
    if (fields.size() != header.size())
      throw Error(kind, where, "line " + std::to_string(li + 1) + ": wrong number of fields");
    for (std::size_t c = 0; c < fields.size(); ++c) {
      double v;
      if (!parse_double(fields[c], v) || !std::isfinite(v))
        throw Error(kind, where, "line " + std::to_string(li + 1) + ": bad number '" +
                                     std::string(fields[c]) + "'");
      cols[c].push_back(v);
    }
  }
  return cols;
}

}  // namespace detail

inline constexpr std::string_view kCurveCsvHeader = "f_hz,re_ohm,im_ohm";

inline std::string curve_to_csv(const ImpedanceCurve& curve) {
  std::string out(kCurveCsvHeader);
  out += '\n';
  for (std::size_t k = 0; k < curve.size(); ++k) {
    out += format_double(curve.frequency(k));
    out += ',';
    out += format_double(curve.value(k).real());
    out += ',';
    out += format_double(curve.value(k).imag());
    out += '\n';
  }
  return out;
}

inline ImpedanceCurve curve_from_csv(std::string_view text) {
  const char* where = "io.read_curve_csv";
  std::vector<std::string> header;
  const auto cols = detail::parse_numeric_csv(text, 3, header, ErrorKind::MalformedCurveFile, where);
  if (header.size() != 3 || header[0] != "f_hz" || header[1] != "re_ohm" || header[2] != "im_ohm")
    throw Error(ErrorKind::MalformedCurveFile, where, "expected header f_hz,re_ohm,im_ohm");
  std::vector<Complex> z;
  for (std::size_t k = 0; k < cols[0].size(); ++k) z.emplace_back(cols[1][k], cols[2][k]);
  try {
    return ImpedanceCurve(cols[0], std::move(z));
  } catch (const Error& e) {
    throw Error(ErrorKind::MalformedCurveFile, where, e.what());
  }
}

inline ImpedanceCurve read_curve_csv(const std::filesystem::path& path) {
  return curve_from_csv(read_text_file(path, "io.read_curve_csv"));
}

/// Trace CSV. The first three columns follow the capture layout (time,
/// voltage, current) so a trace can be fed back to process_capture.
inline std::string trace_to_csv(const SimTrace& tr) {
  std::string out = "t_s,v_dc_V,i_dc_port_A,i_d_A,i_q_A\n";
  out.reserve(out.size() + tr.size() * 100);
  for (std::size_t k = 0; k < tr.size(); ++k) {
    for (double v : {tr.time[k], tr.v_dc[k], tr.i_dc_port[k], tr.i_d[k]}) {
      out += format_double(v);
      out += ',';
    }
    out += format_double(tr.i_q[k]);
    out += '\n';
  }
  return out;
}

}  // namespace vsc
