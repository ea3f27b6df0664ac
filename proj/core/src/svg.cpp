#include "sbp/svg.hpp"

#include "sbp/errors.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <string>

namespace sbp {

namespace {

constexpr double kWidth = 640.0;
constexpr double kHeight = 420.0;
constexpr double kLeft = 70.0;
constexpr double kRight = 20.0;
constexpr double kTop = 36.0;
constexpr double kBottom = 50.0;
constexpr double kFloor = 1e-300;

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

double log_mse(double v) { return std::log10(std::max(v, kFloor)); }

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

}  // namespace

void emit_svg(std::ostream& out, const QuantileSeries& s, const std::string& title) {
  if (s.size() == 0) throw Error(Errc::invalid_argument, "cannot plot an empty series");
  const std::size_t n = s.size();
  const double x0 = s.grid.front();
  const double x1 = s.grid.back();
  double ylo = log_mse(s.min.front());
  double yhi = ylo;
  for (std::size_t j = 0; j < n; ++j) {
    ylo = std::min(ylo, log_mse(s.min[j]));
    yhi = std::max(yhi, log_mse(s.max[j]));
  }
  ylo = std::floor(ylo);
  yhi = std::ceil(yhi);
  if (yhi <= ylo) yhi = ylo + 1.0;
  const double pw = kWidth - kLeft - kRight;
  const double ph = kHeight - kTop - kBottom;
  auto px = [&](double x) { return x1 > x0 ? kLeft + pw * (x - x0) / (x1 - x0) : kLeft + 0.5 * pw; };
  auto py = [&](double v) { return kTop + ph * (yhi - log_mse(v)) / (yhi - ylo); };

  auto band = [&](const std::vector<double>& lo, const std::vector<double>& hi) {
    std::string pts;
    for (std::size_t j = 0; j < n; ++j) pts += num(px(s.grid[j])) + "," + num(py(hi[j])) + " ";
    for (std::size_t j = n; j-- > 0;) pts += num(px(s.grid[j])) + "," + num(py(lo[j])) + " ";
    return pts;
  };

  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight
      << "\" viewBox=\"0 0 " << kWidth << ' ' << kHeight << "\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  if (!title.empty()) {
    out << "<text x=\"" << num(kWidth / 2) << "\" y=\"22\" text-anchor=\"middle\" font-family=\"sans-serif\" "
        << "font-size=\"14\">" << escape(title) << "</text>\n";
  }
  // Decade grid lines on the log axis.
  const int step = std::max(1, static_cast<int>((yhi - ylo) / 8.0));
  for (int e = static_cast<int>(ylo); e <= static_cast<int>(yhi); e += step) {
    const double y = py(std::pow(10.0, e));
    out << "<line x1=\"" << num(kLeft) << "\" y1=\"" << num(y) << "\" x2=\"" << num(kLeft + pw) << "\" y2=\""
        << num(y) << "\" stroke=\"#ddd\"/>\n";
    out << "<text x=\"" << num(kLeft - 6) << "\" y=\"" << num(y + 4)
        << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">1e" << e << "</text>\n";
  }
  out << "<rect x=\"" << num(kLeft) << "\" y=\"" << num(kTop) << "\" width=\"" << num(pw) << "\" height=\""
      << num(ph) << "\" fill=\"none\" stroke=\"black\"/>\n";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6g", x0);
  out << "<text x=\"" << num(kLeft) << "\" y=\"" << num(kTop + ph + 16)
      << "\" font-family=\"sans-serif\" font-size=\"11\">" << buf << "</text>\n";
  std::snprintf(buf, sizeof buf, "%.6g", x1);
  out << "<text x=\"" << num(kLeft + pw) << "\" y=\"" << num(kTop + ph + 16)
      << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">" << buf << "</text>\n";
  out << "<text x=\"" << num(kLeft + pw / 2) << "\" y=\"" << num(kHeight - 12)
      << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">"
      << (s.axis == "k" ? "iteration" : escape(s.axis)) << "</text>\n";
  out << "<text x=\"16\" y=\"" << num(kTop + ph / 2) << "\" transform=\"rotate(-90 16 " << num(kTop + ph / 2)
      << ")\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">MSE</text>\n";

  if (n == 1) {
    out << "<circle cx=\"" << num(px(s.grid[0])) << "\" cy=\"" << num(py(s.median[0]))
        << "\" r=\"4\" fill=\"#1f4e9c\"/>\n";
  } else {
    out << "<polygon points=\"" << band(s.min, s.max) << "\" fill=\"#1f4e9c\" fill-opacity=\"0.15\"/>\n";
    out << "<polygon points=\"" << band(s.q25, s.q75) << "\" fill=\"#1f4e9c\" fill-opacity=\"0.35\"/>\n";
    out << "<polyline fill=\"none\" stroke=\"#1f4e9c\" stroke-width=\"1.5\" points=\"";
    for (std::size_t j = 0; j < n; ++j) out << num(px(s.grid[j])) << ',' << num(py(s.median[j])) << ' ';
    out << "\"/>\n";
  }
  out << "</svg>\n";
}

void emit_svg(const std::string& path, const QuantileSeries& series, const std::string& title) {
  std::ofstream f(path);
  if (!f) throw Error(Errc::io, "cannot write '" + path + "'");
  emit_svg(f, series, title);
  if (!f) throw Error(Errc::io, "write to '" + path + "' failed");
}

}  // namespace sbp
