#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "mmr/cli_io.hpp"

namespace mmr::io {

namespace {

const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b",
                          "#e377c2", "#17becf"};

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      default: out += c;
    }
  }
  return out;
}

// Maps world coordinates into a w x h picture, y up, preserving aspect.
struct Frame {
  double x0, y0, s, h;
  double px(double x) const { return 20.0 + (x - x0) * s; }
  double py(double y) const { return h - 20.0 - (y - y0) * s; }
  std::string pt(const Point2& p) const { return fmt(px(p.x())) + "," + fmt(py(p.y())); }
};

std::string polygon_el(const Frame& f, const std::vector<Point2>& ring, const std::string& style) {
  std::string s = "<polygon points=\"";
  for (const auto& p : ring) s += f.pt(p) + " ";
  return s + "\" " + style + "/>\n";
}

std::string polyline_el(const Frame& f, const std::vector<Point2>& pts, const std::string& style) {
  std::string s = "<polyline fill=\"none\" points=\"";
  for (const auto& p : pts) s += f.pt(p) + " ";
  return s + "\" " + style + "/>\n";
}

}  // namespace

std::string svg_line_plot(const std::string& title, const std::string& x_label,
                          const std::vector<double>& x, const std::vector<Series>& series,
                          bool zero_line) {
  constexpr double W = 720, H = 360, L = 70, R = 150, T = 40, B = 50;
  double xmin = INFINITY, xmax = -INFINITY, ymin = INFINITY, ymax = -INFINITY;
  for (double v : x) {
    xmin = std::min(xmin, v);
    xmax = std::max(xmax, v);
  }
  for (const auto& s : series) {
    for (double v : s.y) {
      if (!std::isfinite(v)) continue;
      ymin = std::min(ymin, v);
      ymax = std::max(ymax, v);
    }
  }
  if (zero_line) {
    ymin = std::min(ymin, 0.0);
    ymax = std::max(ymax, 0.0);
  }
  if (!std::isfinite(xmin)) xmin = 0.0, xmax = 1.0;
  if (!std::isfinite(ymin)) ymin = 0.0, ymax = 1.0;
  if (xmax - xmin < 1e-12) xmax = xmin + 1.0;
  if (ymax - ymin < 1e-12) ymin -= 0.5, ymax += 0.5;
  const double pad = 0.05 * (ymax - ymin);
  ymin -= pad;
  ymax += pad;
  auto px = [&](double v) { return L + (v - xmin) / (xmax - xmin) * (W - L - R); };
  auto py = [&](double v) { return H - B - (v - ymin) / (ymax - ymin) * (H - T - B); };

  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
     << "\" font-family=\"sans-serif\" font-size=\"12\">\n"
     << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
     << "<text x=\"" << W / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">"
     << escape(title) << "</text>\n"
     << "<rect x=\"" << L << "\" y=\"" << T << "\" width=\"" << W - L - R << "\" height=\""
     << H - T - B << "\" fill=\"none\" stroke=\"#444\"/>\n";
  for (int i = 0; i <= 4; ++i) {
    const double xv = xmin + i * (xmax - xmin) / 4, yv = ymin + i * (ymax - ymin) / 4;
    os << "<text x=\"" << fmt(px(xv)) << "\" y=\"" << H - B + 16 << "\" text-anchor=\"middle\">"
       << fmt(xv) << "</text>\n"
       << "<text x=\"" << L - 6 << "\" y=\"" << fmt(py(yv) + 4) << "\" text-anchor=\"end\">"
       << fmt(yv) << "</text>\n";
  }
  os << "<text x=\"" << (L + W - R) / 2 << "\" y=\"" << H - 12 << "\" text-anchor=\"middle\">"
     << escape(x_label) << "</text>\n";
  if (zero_line) {
    os << "<line x1=\"" << L << "\" x2=\"" << W - R << "\" y1=\"" << fmt(py(0)) << "\" y2=\""
       << fmt(py(0)) << "\" stroke=\"#999\" stroke-dasharray=\"4 3\"/>\n";
  }
  for (std::size_t s = 0; s < series.size(); ++s) {
    const char* color = kPalette[s % std::size(kPalette)];
    std::string pts;
    auto flush = [&] {
      if (!pts.empty()) {
        os << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\""
           << pts << "\"/>\n";
      }
      pts.clear();
    };
    const std::size_t n = std::min(x.size(), series[s].y.size());
    for (std::size_t k = 0; k < n; ++k) {
      const double v = series[s].y[k];
      if (!std::isfinite(v)) {
        flush();
        continue;
      }
      pts += fmt(px(x[k])) + "," + fmt(py(v)) + " ";
    }
    flush();
    const double ly = T + 14 + 18.0 * static_cast<double>(s);
    os << "<line x1=\"" << W - R + 10 << "\" x2=\"" << W - R + 30 << "\" y1=\"" << ly
       << "\" y2=\"" << ly << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n"
       << "<text x=\"" << W - R + 36 << "\" y=\"" << ly + 4 << "\">" << escape(series[s].label)
       << "</text>\n";
  }
  os << "</svg>\n";
  return os.str();
}

std::string svg_plan(const plan::Environment& env, const plan::GlobalPlan& plan,
                     const std::vector<Point2>& com_trace) {
  Eigen::AlignedBox2d box;
  for (const auto& p : env.boundary.vertices()) box.extend(p);
  const double size = 640.0;
  const double s = (size - 40.0) / std::max(box.sizes().x(), box.sizes().y());
  const double w = 40.0 + box.sizes().x() * s, h = 40.0 + box.sizes().y() * s;
  const Frame f{box.min().x(), box.min().y(), s, h};

  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << fmt(w) << "\" height=\""
     << fmt(h) << "\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
     << "<clipPath id=\"room\">" << polygon_el(f, env.boundary.vertices(), "") << "</clipPath>\n"
     << "<g clip-path=\"url(#room)\">\n";
  for (const auto& c : plan.corridors) {
    os << polygon_el(f, c.to_polygon().vertices(),
                     "fill=\"#2ca02c\" fill-opacity=\"0.15\" stroke=\"#2ca02c\" stroke-width=\"1\"");
  }
  os << "</g>\n";
  for (const auto& o : env.obstacles) {
    os << polygon_el(f, o.vertices(), "fill=\"#777\" stroke=\"#333\"");
  }
  os << polygon_el(f, env.boundary.vertices(), "fill=\"none\" stroke=\"#000\" stroke-width=\"2\"");
  os << polyline_el(f, plan.path, "stroke=\"#000\" stroke-dasharray=\"5 4\"");
  os << polyline_el(f, plan.samples, "stroke=\"#1f77b4\" stroke-width=\"2\"");
  if (!com_trace.empty()) os << polyline_el(f, com_trace, "stroke=\"#d62728\" stroke-width=\"2\"");
  for (const auto& [p, color] : {std::pair{env.start, "#2ca02c"}, std::pair{env.goal, "#d62728"}}) {
    os << "<circle cx=\"" << fmt(f.px(p.x())) << "\" cy=\"" << fmt(f.py(p.y()))
       << "\" r=\"5\" fill=\"" << color << "\"/>\n";
  }
  os << "</svg>\n";
  return os.str();
}

std::string svg_convex_region(const geom::Polygon& input, const plan::ConvexRegion& output,
                              const Point2& a, const Point2& b) {
  Eigen::AlignedBox2d box;
  for (const auto& p : input.vertices()) box.extend(p);
  const double s = 600.0 / std::max(box.sizes().x(), box.sizes().y());
  const double w = 40.0 + box.sizes().x() * s, h = 40.0 + box.sizes().y() * s;
  const Frame f{box.min().x(), box.min().y(), s, h};
  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << fmt(w) << "\" height=\""
     << fmt(h) << "\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << polygon_el(f, input.vertices(), "fill=\"#ddd\" stroke=\"#555\"");
  os << "<clipPath id=\"in\">" << polygon_el(f, input.vertices(), "") << "</clipPath>\n";
  os << "<g clip-path=\"url(#in)\">"
     << polygon_el(f, output.to_polygon().vertices(),
                   "fill=\"#2ca02c\" fill-opacity=\"0.4\" stroke=\"#2ca02c\"")
     << "</g>\n";
  os << polyline_el(f, {a, b}, "stroke=\"#d62728\" stroke-width=\"3\"");
  os << "</svg>\n";
  return os.str();
}

}  // namespace mmr::io
