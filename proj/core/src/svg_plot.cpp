#include "glow/svg_plot.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "glow/error.hpp"

namespace glow {

namespace {

const char* kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(6);
  os << v;
  return os.str();
}

}  // namespace

std::string render_svg(const PlotSpec& spec) {
  double xmin = 0, xmax = 1, ymin = 0, ymax = 1;
  bool any = false;
  for (const auto& s : spec.series)
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if (!any) {
        xmin = xmax = s.x[i];
        ymin = ymax = s.y[i];
        any = true;
      }
      xmin = std::min(xmin, s.x[i]);
      xmax = std::max(xmax, s.x[i]);
      ymin = std::min(ymin, s.y[i]);
      ymax = std::max(ymax, s.y[i]);
    }
  if (xmax == xmin) xmax = xmin + 1;
  if (ymax == ymin) ymax = ymin + 1;
  const double ml = 70, mr = 20, mt = 40, mb = 50;
  const double pw = spec.width - ml - mr, ph = spec.height - mt - mb;
  auto sx = [&](double x) { return ml + (x - xmin) / (xmax - xmin) * pw; };
  auto sy = [&](double y) { return mt + ph - (y - ymin) / (ymax - ymin) * ph; };

  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << spec.width << "\" height=\""
     << spec.height << "\" viewBox=\"0 0 " << spec.width << " " << spec.height << "\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << "<text x=\"" << spec.width / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">"
     << spec.title << "</text>\n";
  // axes
  os << "<line x1=\"" << ml << "\" y1=\"" << mt + ph << "\" x2=\"" << ml + pw << "\" y2=\""
     << mt + ph << "\" stroke=\"black\"/>\n";
  os << "<line x1=\"" << ml << "\" y1=\"" << mt << "\" x2=\"" << ml << "\" y2=\"" << mt + ph
     << "\" stroke=\"black\"/>\n";
  for (int tick = 0; tick <= 4; ++tick) {
    double fx = xmin + (xmax - xmin) * tick / 4.0;
    double fy = ymin + (ymax - ymin) * tick / 4.0;
    os << "<text x=\"" << sx(fx) << "\" y=\"" << mt + ph + 18
       << "\" text-anchor=\"middle\" font-size=\"11\">" << fmt(fx) << "</text>\n";
    os << "<text x=\"" << ml - 8 << "\" y=\"" << sy(fy) + 4
       << "\" text-anchor=\"end\" font-size=\"11\">" << fmt(fy) << "</text>\n";
  }
  os << "<text x=\"" << ml + pw / 2 << "\" y=\"" << spec.height - 10
     << "\" text-anchor=\"middle\" font-size=\"12\">" << spec.x_label << "</text>\n";
  os << "<text x=\"16\" y=\"" << mt + ph / 2
     << "\" text-anchor=\"middle\" font-size=\"12\" transform=\"rotate(-90 16 " << mt + ph / 2
     << ")\">" << spec.y_label << "</text>\n";

  for (std::size_t si = 0; si < spec.series.size(); ++si) {
    const auto& s = spec.series[si];
    const char* color = kColors[si % 6];
    os << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.6\" points=\"";
    for (std::size_t i = 0; i < s.x.size(); ++i)
      os << sx(s.x[i]) << "," << sy(s.y[i]) << " ";
    os << "\"/>\n";
    for (std::size_t i = 0; i < s.x.size(); ++i)
      os << "<circle cx=\"" << sx(s.x[i]) << "\" cy=\"" << sy(s.y[i]) << "\" r=\"2.5\" fill=\""
         << color << "\"/>\n";
    os << "<text x=\"" << ml + pw - 8 << "\" y=\"" << mt + 16 + 16 * static_cast<double>(si)
       << "\" text-anchor=\"end\" font-size=\"12\" fill=\"" << color << "\">" << s.label
       << "</text>\n";
  }
  os << "</svg>\n";
  return os.str();
}

void write_svg(const PlotSpec& spec, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write plot " + path.string());
  out << render_svg(spec);
}

}  // namespace glow
