#include "pmeval/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

namespace pmeval::svg {
namespace {

constexpr double kPanelWidth = 340.0;
constexpr double kPanelHeight = 260.0;
constexpr double kLeft = 56.0;
constexpr double kRight = 14.0;
constexpr double kTop = 30.0;
constexpr double kBottom = 44.0;

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string tick(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out.push_back(c);
    }
  }
  return out;
}

struct Range {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();

  void add(double v) {
    if (!std::isfinite(v)) return;
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  void finish() {
    if (!std::isfinite(lo)) {
      lo = 0.0;
      hi = 1.0;
    }
    if (hi - lo < 1e-12) {
      lo -= 0.5;
      hi += 0.5;
    }
  }
};

/// Frame, axis ticks and labels for one panel at horizontal offset `ox`.
void frame(std::ostringstream& out, double ox, const std::string& title, const std::string& x_label,
           const std::string& y_label, const Range& xr, const Range& yr) {
  const double w = kPanelWidth - kLeft - kRight;
  const double h = kPanelHeight - kTop - kBottom;
  out << "<g transform=\"translate(" << num(ox) << ",0)\">\n";
  out << "<text x=\"" << num(kPanelWidth / 2) << "\" y=\"18\" text-anchor=\"middle\" font-size=\"13\">"
      << escape(title) << "</text>\n";
  out << "<rect x=\"" << num(kLeft) << "\" y=\"" << num(kTop) << "\" width=\"" << num(w) << "\" height=\"" << num(h)
      << "\" fill=\"none\" stroke=\"#444\"/>\n";
  for (int i = 0; i <= 4; ++i) {
    const double fx = xr.lo + (xr.hi - xr.lo) * i / 4.0;
    const double px = kLeft + w * i / 4.0;
    out << "<text x=\"" << num(px) << "\" y=\"" << num(kTop + h + 14) << "\" text-anchor=\"middle\" font-size=\"10\">"
        << tick(fx) << "</text>\n";
    const double fy = yr.lo + (yr.hi - yr.lo) * i / 4.0;
    const double py = kTop + h - h * i / 4.0;
    out << "<text x=\"" << num(kLeft - 4) << "\" y=\"" << num(py + 3)
        << "\" text-anchor=\"end\" font-size=\"10\">" << tick(fy) << "</text>\n";
  }
  out << "<text x=\"" << num(kLeft + w / 2) << "\" y=\"" << num(kPanelHeight - 8)
      << "\" text-anchor=\"middle\" font-size=\"11\">" << escape(x_label) << "</text>\n";
  out << "<text transform=\"translate(12," << num(kTop + h / 2) << ") rotate(-90)\" text-anchor=\"middle\" "
      << "font-size=\"11\">" << escape(y_label) << "</text>\n";
}

void markers(std::ostringstream& out, std::span<const Marker> ms, const Range& xr) {
  const double w = kPanelWidth - kLeft - kRight;
  const double h = kPanelHeight - kTop - kBottom;
  int row = 0;
  for (const auto& m : ms) {
    const double px = kLeft + w * (m.x - xr.lo) / (xr.hi - xr.lo);
    out << "<line x1=\"" << num(px) << "\" y1=\"" << num(kTop) << "\" x2=\"" << num(px) << "\" y2=\""
        << num(kTop + h) << "\" stroke=\"" << m.color << "\" stroke-dasharray=\"4,3\"/>\n";
    out << "<text x=\"" << num(px + 3) << "\" y=\"" << num(kTop + 12 + 12 * row++) << "\" font-size=\"10\" fill=\""
        << m.color << "\">" << escape(m.label) << "</text>\n";
  }
}

std::string open_doc(std::size_t panels) {
  std::ostringstream out;
  const double width = kPanelWidth * static_cast<double>(std::max<std::size_t>(panels, 1));
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << num(width) << "\" height=\"" << num(kPanelHeight)
      << "\" viewBox=\"0 0 " << num(width) << " " << num(kPanelHeight) << "\" font-family=\"sans-serif\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  return out.str();
}

}  // namespace

std::string render_lines(std::span<const LinePanel> panels) {
  std::ostringstream out;
  out << open_doc(panels.size());
  const double w = kPanelWidth - kLeft - kRight;
  const double h = kPanelHeight - kTop - kBottom;
  for (std::size_t p = 0; p < panels.size(); ++p) {
    const auto& panel = panels[p];
    Range xr, yr;
    for (const auto& s : panel.series) {
      for (double v : s.x) xr.add(v);
      for (double v : s.y) yr.add(v);
    }
    for (const auto& m : panel.markers) xr.add(m.x);
    xr.finish();
    yr.finish();
    frame(out, kPanelWidth * static_cast<double>(p), panel.title, panel.x_label, panel.y_label, xr, yr);
    for (std::size_t si = 0; si < panel.series.size(); ++si) {
      const auto& s = panel.series[si];
      out << "<polyline fill=\"none\" stroke=\"" << s.color << "\" stroke-width=\"1.5\" points=\"";
      for (std::size_t i = 0; i < std::min(s.x.size(), s.y.size()); ++i) {
        if (!std::isfinite(s.y[i])) continue;
        const double px = kLeft + w * (s.x[i] - xr.lo) / (xr.hi - xr.lo);
        const double py = kTop + h - h * (s.y[i] - yr.lo) / (yr.hi - yr.lo);
        out << num(px) << "," << num(py) << " ";
      }
      out << "\"/>\n";
      if (!s.label.empty()) {
        out << "<text x=\"" << num(kLeft + w - 4) << "\" y=\"" << num(kTop + h - 6 - 12 * static_cast<double>(si))
            << "\" text-anchor=\"end\" font-size=\"10\" fill=\"" << s.color << "\">" << escape(s.label) << "</text>\n";
      }
    }
    markers(out, panel.markers, xr);
    out << "</g>\n";
  }
  out << "</svg>\n";
  return out.str();
}

std::string render_histograms(std::span<const HistogramPanel> panels) {
  std::ostringstream out;
  out << open_doc(panels.size());
  const double w = kPanelWidth - kLeft - kRight;
  const double h = kPanelHeight - kTop - kBottom;
  for (std::size_t p = 0; p < panels.size(); ++p) {
    const auto& panel = panels[p];
    Range xr;
    for (double v : panel.values) xr.add(v);
    for (const auto& m : panel.markers) xr.add(m.x);
    xr.finish();
    const int nb = std::max(1, panel.bins);
    std::vector<int> counts(static_cast<std::size_t>(nb), 0);
    for (double v : panel.values) {
      if (!std::isfinite(v)) continue;
      int b = static_cast<int>((v - xr.lo) / (xr.hi - xr.lo) * nb);
      counts[static_cast<std::size_t>(std::clamp(b, 0, nb - 1))]++;
    }
    Range yr;
    yr.lo = 0.0;
    yr.hi = std::max(1, *std::max_element(counts.begin(), counts.end()));
    frame(out, kPanelWidth * static_cast<double>(p), panel.title, panel.x_label, "models", xr, yr);
    for (int b = 0; b < nb; ++b) {
      const double bw = w / nb;
      const double bh = h * counts[static_cast<std::size_t>(b)] / yr.hi;
      out << "<rect x=\"" << num(kLeft + bw * b) << "\" y=\"" << num(kTop + h - bh) << "\" width=\"" << num(bw - 1)
          << "\" height=\"" << num(bh) << "\" fill=\"#9ecae1\" stroke=\"#3182bd\"/>\n";
    }
    markers(out, panel.markers, xr);
    out << "</g>\n";
  }
  out << "</svg>\n";
  return out.str();
}

}  // namespace pmeval::svg
