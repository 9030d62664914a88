#pragma once

#include <span>
#include <string>
#include <vector>

namespace pmeval::svg {

struct Series {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
  std::string color = "#1f77b4";
};

/// Vertical reference line.
struct Marker {
  std::string label;
  double x = 0.0;
  std::string color = "#d62728";
};

struct LinePanel {
  std::string title;
  std::string x_label;
  std::string y_label;
  std::vector<Series> series;
  std::vector<Marker> markers;
};

struct HistogramPanel {
  std::string title;
  std::string x_label;
  std::vector<double> values;
  std::vector<Marker> markers;
  int bins = 10;
};

/// Panels side by side in one SVG document. Output is deterministic for identical input.
std::string render_lines(std::span<const LinePanel> panels);
std::string render_histograms(std::span<const HistogramPanel> panels);

}  // namespace pmeval::svg
