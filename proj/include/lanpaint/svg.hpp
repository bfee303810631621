#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace lanpaint {

// Small static plot: axes with ticks, polylines and scatter markers.
class SvgPlot {
 public:
  enum class Style { line, points };

  SvgPlot(std::string title, std::string x_label, std::string y_label);

  SvgPlot& log_x(bool on = true);
  SvgPlot& log_y(bool on = true);
  SvgPlot& add(std::string name, std::vector<double> xs, std::vector<double> ys,
               Style style = Style::line);
  // Horizontal reference line drawn dashed, e.g. a threshold.
  SvgPlot& hline(double y, std::string label);

  void write(std::ostream& out) const;
  void save(const std::string& path) const;

 private:
  struct Series {
    std::string name;
    std::vector<double> xs, ys;
    Style style;
  };
  std::string title_, x_label_, y_label_;
  bool log_x_ = false, log_y_ = false;
  std::vector<Series> series_;
  std::vector<std::pair<double, std::string>> hlines_;
};

}  // namespace lanpaint
