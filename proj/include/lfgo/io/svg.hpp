#pragma once

// Minimal static SVG renderings: a 1D curve with a shaded +-1 std band, and a
// 2D filled contour (colored cells with iso-lines drawn by marching squares).

#include <algorithm>
#include <cmath>
#include <sstream>
#include <string>
#include <vector>

#include "lfgo/io/csv.hpp"

namespace lfgo::io {

namespace detail {

constexpr double kWidth = 640, kHeight = 420, kLeft = 70, kRight = 20, kTop = 30, kBottom = 50;

inline std::string num(double v) {
  std::ostringstream os;
  os.precision(6);
  os << v;
  return os.str();
}

inline std::string escape(const std::string& text) {
  std::string out;
  for (char c : text) {
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

struct Axis {
  double lo, hi, px_lo, px_hi;
  double map(double v) const { return hi > lo ? px_lo + (v - lo) / (hi - lo) * (px_hi - px_lo) : 0.5 * (px_lo + px_hi); }
};

inline void frame(std::ostringstream& os, const Axis& ax, const Axis& ay, const std::string& title,
                  const std::string& xlabel, const std::string& ylabel) {
  os << "<rect x=\"" << kLeft << "\" y=\"" << kTop << "\" width=\"" << kWidth - kLeft - kRight << "\" height=\""
     << kHeight - kTop - kBottom << "\" fill=\"none\" stroke=\"black\"/>\n";
  for (int k = 0; k <= 4; ++k) {
    const double xv = ax.lo + (ax.hi - ax.lo) * k / 4.0, yv = ay.lo + (ay.hi - ay.lo) * k / 4.0;
    os << "<text x=\"" << num(ax.map(xv)) << "\" y=\"" << kHeight - kBottom + 18
       << "\" font-size=\"11\" text-anchor=\"middle\">" << num(xv) << "</text>\n";
    os << "<text x=\"" << kLeft - 6 << "\" y=\"" << num(ay.map(yv) + 4)
       << "\" font-size=\"11\" text-anchor=\"end\">" << num(yv) << "</text>\n";
  }
  os << "<text x=\"" << kWidth / 2 << "\" y=\"18\" font-size=\"14\" text-anchor=\"middle\">" << escape(title) << "</text>\n";
  os << "<text x=\"" << kWidth / 2 << "\" y=\"" << kHeight - 8 << "\" font-size=\"12\" text-anchor=\"middle\">"
     << escape(xlabel) << "</text>\n";
  os << "<text x=\"16\" y=\"" << kHeight / 2 << "\" font-size=\"12\" text-anchor=\"middle\" transform=\"rotate(-90 16 "
     << kHeight / 2 << ")\">" << escape(ylabel) << "</text>\n";
}

inline std::string header() {
  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight
     << "\" viewBox=\"0 0 " << kWidth << ' ' << kHeight << "\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  return os.str();
}

/// viridis-like ramp through five anchor colors
inline std::string color(double t) {
  static const double anchors[5][3] = {{68, 1, 84}, {59, 82, 139}, {33, 145, 140}, {94, 201, 98}, {253, 231, 37}};
  t = std::clamp(t, 0.0, 1.0) * 4.0;
  const int k = std::min(3, static_cast<int>(t));
  const double f = t - k;
  std::ostringstream os;
  os << "rgb(";
  for (int c = 0; c < 3; ++c) os << (c ? "," : "") << static_cast<int>(std::lround(anchors[k][c] * (1 - f) + anchors[k + 1][c] * f));
  os << ")";
  return os.str();
}

}  // namespace detail

/// Line plot of mean against x with a shaded mean +- std band.
inline std::string svg_curve_1d(const std::vector<double>& x, const std::vector<double>& mean,
                                const std::vector<double>& sd, const std::string& title = "",
                                const std::string& xlabel = "design", const std::string& ylabel = "utility") {
  using namespace detail;
  if (x.empty() || x.size() != mean.size() || x.size() != sd.size()) throw DomainError("svg curve: size mismatch");
  // non-finite means (failed points) are left out; a missing sd draws no band
  std::vector<std::size_t> ok;
  for (std::size_t i = 0; i < x.size(); ++i)
    if (std::isfinite(x[i]) && std::isfinite(mean[i])) ok.push_back(i);
  auto band = [&](std::size_t i) { return std::isfinite(sd[i]) ? sd[i] : 0.0; };
  double ylo = HUGE_VAL, yhi = -HUGE_VAL;
  for (auto i : ok) {
    ylo = std::min(ylo, mean[i] - band(i));
    yhi = std::max(yhi, mean[i] + band(i));
  }
  if (ok.empty()) ylo = yhi = 0.0;
  if (!(yhi > ylo)) {
    ylo -= 0.5;
    yhi += 0.5;
  }
  double xlo = HUGE_VAL, xhi = -HUGE_VAL;
  for (double v : x)
    if (std::isfinite(v)) xlo = std::min(xlo, v), xhi = std::max(xhi, v);
  if (!(xhi >= xlo)) xlo = xhi = 0.0;
  const Axis ax{xlo, xhi, kLeft, kWidth - kRight};
  const Axis ay{ylo, yhi, kHeight - kBottom, kTop};
  std::ostringstream os;
  os << header();
  frame(os, ax, ay, title, xlabel, ylabel);
  if (!ok.empty()) {
    os << "<polygon fill=\"steelblue\" fill-opacity=\"0.25\" stroke=\"none\" points=\"";
    for (auto i : ok) os << num(ax.map(x[i])) << ',' << num(ay.map(mean[i] + band(i))) << ' ';
    for (auto it = ok.rbegin(); it != ok.rend(); ++it)
      os << num(ax.map(x[*it])) << ',' << num(ay.map(mean[*it] - band(*it))) << ' ';
    os << "\"/>\n<polyline fill=\"none\" stroke=\"steelblue\" stroke-width=\"2\" points=\"";
    for (auto i : ok) os << num(ax.map(x[i])) << ',' << num(ay.map(mean[i])) << ' ';
    os << "\"/>\n";
  }
  for (auto i : ok)
    os << "<circle cx=\"" << num(ax.map(x[i])) << "\" cy=\"" << num(ay.map(mean[i]))
       << "\" r=\"2.5\" fill=\"steelblue\"/>\n";
  os << "</svg>\n";
  return os.str();
}

/// Filled contour of values on a rectangular grid; values(i, j) sits at (x[i], y[j]).
inline std::string svg_contour_2d(const std::vector<double>& x, const std::vector<double>& y, const Matrix& values,
                                  const std::string& title = "", const std::string& xlabel = "design 1",
                                  const std::string& ylabel = "design 2", int levels = 10) {
  using namespace detail;
  if (x.empty() || y.empty() || values.rows() != static_cast<Eigen::Index>(x.size()) ||
      values.cols() != static_cast<Eigen::Index>(y.size()))
    throw DomainError("svg contour: size mismatch");
  const double vlo = values.minCoeff(), vhi = values.maxCoeff();
  auto unit = [&](double v) { return vhi > vlo ? (v - vlo) / (vhi - vlo) : 0.5; };
  const auto [xlo, xhi] = std::minmax_element(x.begin(), x.end());
  const auto [ylo, yhi] = std::minmax_element(y.begin(), y.end());
  const Axis ax{*xlo, *xhi, kLeft, kWidth - kRight};
  const Axis ay{*ylo, *yhi, kHeight - kBottom, kTop};
  std::ostringstream os;
  os << header();

  // cell rectangles centered on grid nodes, colored by the quantized level
  auto edge = [](const std::vector<double>& v, std::size_t i, bool upper) {
    if (v.size() == 1) return v[0] + (upper ? 0.5 : -0.5);
    if (upper) return i + 1 < v.size() ? 0.5 * (v[i] + v[i + 1]) : v[i];
    return i > 0 ? 0.5 * (v[i - 1] + v[i]) : v[i];
  };
  for (std::size_t i = 0; i < x.size(); ++i)
    for (std::size_t j = 0; j < y.size(); ++j) {
      const double q = std::floor(unit(values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j))) * levels) /
                       std::max(1, levels - 1);
      const double x0 = ax.map(edge(x, i, false)), x1 = ax.map(edge(x, i, true));
      const double y0 = ay.map(edge(y, j, true)), y1 = ay.map(edge(y, j, false));
      os << "<rect x=\"" << num(x0) << "\" y=\"" << num(y0) << "\" width=\"" << num(x1 - x0) << "\" height=\""
         << num(y1 - y0) << "\" fill=\"" << color(q) << "\" stroke=\"none\"/>\n";
    }

  // iso-lines by marching squares, linear interpolation along cell edges
  os << "<g stroke=\"black\" stroke-width=\"0.6\" fill=\"none\">\n";
  for (int l = 1; l < levels; ++l) {
    const double c = vlo + (vhi - vlo) * l / levels;
    for (std::size_t i = 0; i + 1 < x.size(); ++i)
      for (std::size_t j = 0; j + 1 < y.size(); ++j) {
        const auto I = static_cast<Eigen::Index>(i), J = static_cast<Eigen::Index>(j);
        const double v[4] = {values(I, J), values(I + 1, J), values(I + 1, J + 1), values(I, J + 1)};
        const double px[4] = {x[i], x[i + 1], x[i + 1], x[i]};
        const double py[4] = {y[j], y[j], y[j + 1], y[j + 1]};
        std::vector<std::pair<double, double>> pts;
        for (int e = 0; e < 4; ++e) {
          const int f = (e + 1) % 4;
          if ((v[e] < c) != (v[f] < c)) {
            const double t = (c - v[e]) / (v[f] - v[e]);
            pts.emplace_back(px[e] + t * (px[f] - px[e]), py[e] + t * (py[f] - py[e]));
          }
        }
        for (std::size_t k = 0; k + 1 < pts.size(); k += 2)
          os << "<line x1=\"" << num(ax.map(pts[k].first)) << "\" y1=\"" << num(ay.map(pts[k].second)) << "\" x2=\""
             << num(ax.map(pts[k + 1].first)) << "\" y2=\"" << num(ay.map(pts[k + 1].second)) << "\"/>\n";
      }
  }
  os << "</g>\n";
  frame(os, ax, ay, title, xlabel, ylabel);
  os << "</svg>\n";
  return os.str();
}

}  // namespace lfgo::io
