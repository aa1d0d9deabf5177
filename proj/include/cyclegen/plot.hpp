/*
 * Copyright (c) 2026, cyclegen contributors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */
#pragma once

// Truth-vs-prediction overlays as CSV and a dependency-free SVG line chart.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <ostream>
#include <span>
#include <string>
#include <string_view>

#include "cyclegen/error.hpp"

namespace cyclegen::plot {

namespace detail {
inline std::string num(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

inline std::string escape_xml(std::string_view s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}
}  // namespace detail

inline void write_overlay_csv(std::ostream& out, std::span<const double> truth, std::span<const double> predicted) {
  if (truth.size() != predicted.size()) throw ShapeError("overlay: length mismatch");
  out << "step,true,predicted\n";
  for (std::size_t i = 0; i < truth.size(); ++i) {
    out << i << ',' << detail::num(truth[i]) << ',' << detail::num(predicted[i]) << '\n';
  }
}

inline void write_overlay_svg(std::ostream& out, std::span<const double> truth, std::span<const double> predicted,
                              std::string_view title, std::string_view y_label) {
  if (truth.size() != predicted.size() || truth.size() < 2) throw ShapeError("overlay: need two equal series");
  constexpr double kWidth = 640;
  constexpr double kHeight = 400;
  constexpr double kLeft = 70;
  constexpr double kRight = 20;
  constexpr double kTop = 40;
  constexpr double kBottom = 50;

  double lo = std::min(*std::min_element(truth.begin(), truth.end()),
                       *std::min_element(predicted.begin(), predicted.end()));
  double hi = std::max(*std::max_element(truth.begin(), truth.end()),
                       *std::max_element(predicted.begin(), predicted.end()));
  if (!(hi > lo)) {
    lo -= 0.5;
    hi += 0.5;
  }
  const double pad = 0.05 * (hi - lo);
  lo -= pad;
  hi += pad;
  const double last = static_cast<double>(truth.size() - 1);
  auto px = [&](std::size_t i) { return kLeft + (kWidth - kLeft - kRight) * static_cast<double>(i) / last; };
  auto py = [&](double v) { return kTop + (kHeight - kTop - kBottom) * (hi - v) / (hi - lo); };
  auto polyline = [&](std::span<const double> ys, std::string_view colour, std::string_view dash) {
    out << "  <polyline fill=\"none\" stroke=\"" << colour << "\" stroke-width=\"1.5\"";
    if (!dash.empty()) out << " stroke-dasharray=\"" << dash << '"';
    out << " points=\"";
    for (std::size_t i = 0; i < ys.size(); ++i) {
      if (i) out << ' ';
      out << detail::num(std::round(px(i) * 100) / 100) << ',' << detail::num(std::round(py(ys[i]) * 100) / 100);
    }
    out << "\"/>\n";
  };

  out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
      << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight
      << "\" viewBox=\"0 0 " << kWidth << ' ' << kHeight << "\">\n"
      << "  <rect x=\"0\" y=\"0\" width=\"" << kWidth << "\" height=\"" << kHeight << "\" fill=\"white\"/>\n"
      << "  <text x=\"" << kWidth / 2 << "\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" "
      << "font-size=\"15\">" << detail::escape_xml(title) << "</text>\n"
      << "  <line x1=\"" << kLeft << "\" y1=\"" << kHeight - kBottom << "\" x2=\"" << kWidth - kRight << "\" y2=\""
      << kHeight - kBottom << "\" stroke=\"black\"/>\n"
      << "  <line x1=\"" << kLeft << "\" y1=\"" << kTop << "\" x2=\"" << kLeft << "\" y2=\"" << kHeight - kBottom
      << "\" stroke=\"black\"/>\n";
  for (int tick = 0; tick <= 4; ++tick) {
    const double v = lo + (hi - lo) * tick / 4.0;
    out << "  <text x=\"" << kLeft - 6 << "\" y=\"" << detail::num(std::round(py(v) * 100) / 100)
        << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">"
        << detail::num(std::round(v * 1000) / 1000) << "</text>\n";
  }
  out << "  <text x=\"" << (kLeft + kWidth - kRight) / 2 << "\" y=\"" << kHeight - 12
      << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">step</text>\n"
      << "  <text x=\"16\" y=\"" << kHeight / 2 << "\" transform=\"rotate(-90 16 " << kHeight / 2
      << ")\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">" << detail::escape_xml(y_label)
      << "</text>\n";
  polyline(truth, "#1f77b4", "");
  polyline(predicted, "#d62728", "6 3");
  out << "  <text x=\"" << kWidth - kRight - 150 << "\" y=\"" << kTop + 14
      << "\" font-family=\"sans-serif\" font-size=\"12\" fill=\"#1f77b4\">true</text>\n"
      << "  <text x=\"" << kWidth - kRight - 80 << "\" y=\"" << kTop + 14
      << "\" font-family=\"sans-serif\" font-size=\"12\" fill=\"#d62728\">predicted</text>\n"
      << "</svg>\n";
}

}  // namespace cyclegen::plot
