#include "lanpaint/svg.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <ostream>
#include <sstream>

#include "lanpaint/errors.hpp"

namespace lanpaint {
namespace {

constexpr double kWidth = 640, kHeight = 440;
constexpr double kLeft = 70, kRight = 150, kTop = 40, kBottom = 55;
const char* const kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                               "#9467bd", "#8c564b", "#e377c2", "#7f7f7f"};

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

std::string num(double v) {
  std::ostringstream os;
  os.imbue(std::locale::classic());
  os.precision(4);
  os << v;
  return os.str();
}

struct Axis {
  double lo, hi;
  bool log;
  double map(double v, double a, double b) const {
    const double u = log ? (std::log10(v) - lo) / (hi - lo) : (v - lo) / (hi - lo);
    return a + u * (b - a);
  }
  std::vector<double> ticks() const {
    std::vector<double> t;
    if (log) {
      for (double e = std::ceil(lo); e <= hi + 1e-9; e += 1.0) t.push_back(std::pow(10.0, e));
      if (t.size() < 2) t = {std::pow(10.0, lo), std::pow(10.0, hi)};
    } else {
      for (int k = 0; k <= 5; ++k) t.push_back(lo + (hi - lo) * k / 5.0);
    }
    return t;
  }
};

Axis make_axis(std::vector<double> vals, bool log) {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (double v : vals) {
    if (!std::isfinite(v) || (log && v <= 0.0)) continue;
    const double u = log ? std::log10(v) : v;
    lo = std::min(lo, u);
    hi = std::max(hi, u);
  }
  if (!std::isfinite(lo)) lo = 0.0, hi = 1.0;
  if (hi - lo < 1e-12) {
    lo -= 0.5;
    hi += 0.5;
  }
  const double pad = 0.05 * (hi - lo);
  return {lo - pad, hi + pad, log};
}

}  // namespace

SvgPlot::SvgPlot(std::string title, std::string x_label, std::string y_label)
    : title_(std::move(title)), x_label_(std::move(x_label)), y_label_(std::move(y_label)) {}

SvgPlot& SvgPlot::log_x(bool on) {
  log_x_ = on;
  return *this;
}

SvgPlot& SvgPlot::log_y(bool on) {
  log_y_ = on;
  return *this;
}

SvgPlot& SvgPlot::add(std::string name, std::vector<double> xs, std::vector<double> ys,
                      Style style) {
  if (xs.size() != ys.size()) throw InvalidRange("plot series lengths differ");
  series_.push_back({std::move(name), std::move(xs), std::move(ys), style});
  return *this;
}

SvgPlot& SvgPlot::hline(double y, std::string label) {
  hlines_.emplace_back(y, std::move(label));
  return *this;
}

void SvgPlot::write(std::ostream& out) const {
  std::vector<double> all_x, all_y;
  for (const Series& s : series_) {
    all_x.insert(all_x.end(), s.xs.begin(), s.xs.end());
    all_y.insert(all_y.end(), s.ys.begin(), s.ys.end());
  }
  for (const auto& h : hlines_) all_y.push_back(h.first);
  const Axis ax = make_axis(all_x, log_x_);
  const Axis ay = make_axis(all_y, log_y_);
  const double x0 = kLeft, x1 = kWidth - kRight, y0 = kHeight - kBottom, y1 = kTop;
  auto ok = [](double v, bool log) { return std::isfinite(v) && (!log || v > 0.0); };

  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\""
      << kHeight << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out << "<text x=\"" << (x0 + x1) / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">"
      << escape(title_) << "</text>\n";
  out << "<rect x=\"" << x0 << "\" y=\"" << y1 << "\" width=\"" << x1 - x0 << "\" height=\""
      << y0 - y1 << "\" fill=\"none\" stroke=\"black\"/>\n";
  for (double t : ax.ticks()) {
    const double px = ax.map(t, x0, x1);
    out << "<line x1=\"" << px << "\" y1=\"" << y0 << "\" x2=\"" << px << "\" y2=\"" << y0 + 5
        << "\" stroke=\"black\"/><text x=\"" << px << "\" y=\"" << y0 + 18
        << "\" text-anchor=\"middle\">" << num(t) << "</text>\n";
  }
  for (double t : ay.ticks()) {
    const double py = ay.map(t, y0, y1);
    out << "<line x1=\"" << x0 - 5 << "\" y1=\"" << py << "\" x2=\"" << x0 << "\" y2=\"" << py
        << "\" stroke=\"black\"/><text x=\"" << x0 - 8 << "\" y=\"" << py + 4
        << "\" text-anchor=\"end\">" << num(t) << "</text>\n";
  }
  out << "<text x=\"" << (x0 + x1) / 2 << "\" y=\"" << kHeight - 15
      << "\" text-anchor=\"middle\">" << escape(x_label_) << "</text>\n";
  out << "<text transform=\"translate(18," << (y0 + y1) / 2
      << ") rotate(-90)\" text-anchor=\"middle\">" << escape(y_label_) << "</text>\n";

  for (const auto& [y, label] : hlines_) {
    if (!ok(y, log_y_)) continue;
    const double py = ay.map(y, y0, y1);
    out << "<line x1=\"" << x0 << "\" y1=\"" << py << "\" x2=\"" << x1 << "\" y2=\"" << py
        << "\" stroke=\"gray\" stroke-dasharray=\"6,4\"/><text x=\"" << x1 - 4 << "\" y=\""
        << py - 4 << "\" text-anchor=\"end\" fill=\"gray\">" << escape(label) << "</text>\n";
  }
  for (std::size_t k = 0; k < series_.size(); ++k) {
    const Series& s = series_[k];
    const char* color = kColors[k % std::size(kColors)];
    if (s.style == Style::line) {
      out << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"2\" points=\"";
      for (std::size_t i = 0; i < s.xs.size(); ++i) {
        if (!ok(s.xs[i], log_x_) || !ok(s.ys[i], log_y_)) continue;
        out << ax.map(s.xs[i], x0, x1) << ',' << ay.map(s.ys[i], y0, y1) << ' ';
      }
      out << "\"/>\n";
    }
    const double r = s.style == Style::line ? 3.0 : 1.2;
    for (std::size_t i = 0; i < s.xs.size(); ++i) {
      if (!ok(s.xs[i], log_x_) || !ok(s.ys[i], log_y_)) continue;
      out << "<circle cx=\"" << ax.map(s.xs[i], x0, x1) << "\" cy=\"" << ay.map(s.ys[i], y0, y1)
          << "\" r=\"" << r << "\" fill=\"" << color << "\"/>\n";
    }
    const double ly = y1 + 10 + 18 * static_cast<double>(k);
    out << "<rect x=\"" << x1 + 12 << "\" y=\"" << ly - 8 << "\" width=\"10\" height=\"10\" fill=\""
        << color << "\"/><text x=\"" << x1 + 28 << "\" y=\"" << ly + 1 << "\">" << escape(s.name)
        << "</text>\n";
  }
  out << "</svg>\n";
}

void SvgPlot::save(const std::string& path) const {
  std::ofstream f(path);
  if (!f) throw InvalidRange("cannot write plot to " + path);
  f.imbue(std::locale::classic());
  write(f);
}

}  // namespace lanpaint
