// Copyright 2026 The OmniTraj Authors
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

#ifndef OMNITRAJ__TRAIN__SVG_HPP_
#define OMNITRAJ__TRAIN__SVG_HPP_

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

namespace omnitraj::train
{

inline std::string xml_escape(const std::string & s)
{
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      case '\'': out += "&apos;"; break;
      default: out += c;
    }
  }
  return out;
}

struct Bar
{
  std::string label;
  double value = 0.0;
  double lo = 0.0;  // spread whisker; equal to value when absent
  double hi = 0.0;
};

struct Series
{
  std::string name;
  std::vector<double> x;
  std::vector<double> y;
};

namespace detail
{

inline constexpr double kWidth = 640.0;
inline constexpr double kHeight = 400.0;
inline constexpr double kLeft = 70.0;
inline constexpr double kRight = 20.0;
inline constexpr double kTop = 40.0;
inline constexpr double kBottom = 70.0;
inline const char * const kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};

inline std::string num(double v)
{
  std::ostringstream os;
  os << std::fixed << std::setprecision(2) << v;
  return os.str();
}

inline void open(std::ostringstream & os, const std::string & title, const std::string & y_label)
{
  os << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
     << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight
     << "\" viewBox=\"0 0 " << kWidth << ' ' << kHeight << "\">\n"
     << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
     << "<text x=\"" << kWidth / 2 << "\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"16\">"
     << xml_escape(title) << "</text>\n"
     << "<text x=\"16\" y=\"" << kHeight / 2 << "\" transform=\"rotate(-90 16 " << kHeight / 2
     << ")\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">" << xml_escape(y_label)
     << "</text>\n"
     << "<line x1=\"" << kLeft << "\" y1=\"" << kHeight - kBottom << "\" x2=\"" << kWidth - kRight << "\" y2=\""
     << kHeight - kBottom << "\" stroke=\"black\"/>\n"
     << "<line x1=\"" << kLeft << "\" y1=\"" << kTop << "\" x2=\"" << kLeft << "\" y2=\"" << kHeight - kBottom
     << "\" stroke=\"black\"/>\n";
}

inline void y_ticks(std::ostringstream & os, double y_max)
{
  for (int i = 0; i <= 4; ++i) {
    const double v = y_max * i / 4.0;
    const double y = kHeight - kBottom - (kHeight - kTop - kBottom) * i / 4.0;
    os << "<text x=\"" << kLeft - 6 << "\" y=\"" << y + 4
       << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"10\">" << num(v) << "</text>\n";
  }
}

}  // namespace detail

inline std::string bar_chart_svg(const std::string & title, const std::string & y_label, const std::vector<Bar> & bars)
{
  using namespace detail;
  double y_max = 0.0;
  for (const auto & b : bars) {
    y_max = std::max({y_max, b.value, b.hi});
  }
  y_max = y_max > 0.0 ? y_max * 1.1 : 1.0;
  const double plot_w = kWidth - kLeft - kRight;
  const double plot_h = kHeight - kTop - kBottom;
  const double slot = bars.empty() ? plot_w : plot_w / static_cast<double>(bars.size());
  auto ypos = [&](double v) { return kHeight - kBottom - plot_h * v / y_max; };

  std::ostringstream os;
  open(os, title, y_label);
  y_ticks(os, y_max);
  for (std::size_t i = 0; i < bars.size(); ++i) {
    const auto & b = bars[i];
    const double x = kLeft + slot * static_cast<double>(i) + slot * 0.15;
    const double w = slot * 0.7;
    os << "<rect x=\"" << num(x) << "\" y=\"" << num(ypos(b.value)) << "\" width=\"" << num(w) << "\" height=\""
       << num(kHeight - kBottom - ypos(b.value)) << "\" fill=\"" << kPalette[i % 6] << "\"/>\n";
    if (b.hi > b.lo) {
      const double cx = x + w / 2;
      os << "<line x1=\"" << num(cx) << "\" y1=\"" << num(ypos(b.lo)) << "\" x2=\"" << num(cx) << "\" y2=\""
         << num(ypos(b.hi)) << "\" stroke=\"black\"/>\n";
    }
    os << "<text x=\"" << num(x + w / 2) << "\" y=\"" << kHeight - kBottom + 16
       << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">" << xml_escape(b.label)
       << "</text>\n"
       << "<text x=\"" << num(x + w / 2) << "\" y=\"" << num(ypos(b.value) - 4)
       << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"10\">" << num(b.value) << "</text>\n";
  }
  os << "</svg>\n";
  return os.str();
}

/// Line chart; log_x spaces the x axis logarithmically (all x must be positive).
inline std::string line_chart_svg(
  const std::string & title, const std::string & x_label, const std::string & y_label,
  const std::vector<Series> & series, bool log_x = false)
{
  using namespace detail;
  double x_min = std::numeric_limits<double>::infinity();
  double x_max = -x_min;
  double y_max = 0.0;
  auto fx = [&](double x) { return log_x ? std::log(x) : x; };
  for (const auto & s : series) {
    for (double x : s.x) {
      x_min = std::min(x_min, fx(x));
      x_max = std::max(x_max, fx(x));
    }
    for (double y : s.y) {
      y_max = std::max(y_max, y);
    }
  }
  if (!(x_max > x_min)) {
    x_min = std::isfinite(x_min) ? x_min - 1.0 : 0.0;
    x_max = x_min + 2.0;
  }
  y_max = y_max > 0.0 ? y_max * 1.1 : 1.0;
  const double plot_w = kWidth - kLeft - kRight;
  const double plot_h = kHeight - kTop - kBottom;
  auto px = [&](double x) { return kLeft + plot_w * (fx(x) - x_min) / (x_max - x_min); };
  auto py = [&](double y) { return kHeight - kBottom - plot_h * y / y_max; };

  std::ostringstream os;
  open(os, title, y_label);
  y_ticks(os, y_max);
  os << "<text x=\"" << kLeft + plot_w / 2 << "\" y=\"" << kHeight - 24
     << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">" << xml_escape(x_label)
     << "</text>\n";
  if (!series.empty()) {
    for (double x : series.front().x) {
      os << "<text x=\"" << num(px(x)) << "\" y=\"" << kHeight - kBottom + 14
         << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"10\">" << num(x) << "</text>\n";
    }
  }
  for (std::size_t i = 0; i < series.size(); ++i) {
    const auto & s = series[i];
    const char * color = kPalette[i % 6];
    os << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"2\" points=\"";
    for (std::size_t j = 0; j < s.x.size() && j < s.y.size(); ++j) {
      os << (j ? " " : "") << num(px(s.x[j])) << ',' << num(py(s.y[j]));
    }
    os << "\"/>\n";
    for (std::size_t j = 0; j < s.x.size() && j < s.y.size(); ++j) {
      os << "<circle cx=\"" << num(px(s.x[j])) << "\" cy=\"" << num(py(s.y[j])) << "\" r=\"3\" fill=\"" << color
         << "\"/>\n";
    }
    os << "<text x=\"" << kWidth - kRight - 150 << "\" y=\"" << kTop + 16 * static_cast<double>(i)
       << "\" font-family=\"sans-serif\" font-size=\"11\" fill=\"" << color << "\">" << xml_escape(s.name)
       << "</text>\n";
  }
  os << "</svg>\n";
  return os.str();
}

}  // namespace omnitraj::train

#endif  // OMNITRAJ__TRAIN__SVG_HPP_
