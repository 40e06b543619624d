#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace glow {

// Minimal dependency-free line/scatter chart writer (SVG).
struct PlotSeries {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
};

struct PlotSpec {
  std::string title;
  std::string x_label;
  std::string y_label;
  std::vector<PlotSeries> series;
  int width = 640;
  int height = 420;
};

std::string render_svg(const PlotSpec& spec);
void write_svg(const PlotSpec& spec, const std::filesystem::path& path);

}  // namespace glow
