#include "mumkit/svg.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>

#include "mumkit/text.hpp"

namespace mumkit {

namespace {

std::string n(double v) { return fixed(v, 2); }

}  // namespace

Svg::Svg(double width, double height) : width_(width), height_(height) {}

void Svg::comment(std::string_view text) {
  std::string safe(text);
  for (std::size_t p; (p = safe.find("--")) != std::string::npos;) safe.replace(p, 2, "- ");
  body_ << "<!-- " << safe << " -->\n";
}

void Svg::rect(double x, double y, double w, double h, std::string_view fill, double opacity, std::string_view stroke) {
  body_ << "<rect x=\"" << n(x) << "\" y=\"" << n(y) << "\" width=\"" << n(w) << "\" height=\"" << n(h) << "\" fill=\"" << fill << "\"";
  if (opacity < 1.0) body_ << " fill-opacity=\"" << fixed(opacity, 2) << "\"";
  if (stroke != "none") body_ << " stroke=\"" << stroke << "\"";
  body_ << "/>\n";
}

void Svg::line(double x1, double y1, double x2, double y2, std::string_view stroke, double width, std::string_view dash) {
  body_ << "<line x1=\"" << n(x1) << "\" y1=\"" << n(y1) << "\" x2=\"" << n(x2) << "\" y2=\"" << n(y2) << "\" stroke=\"" << stroke
        << "\" stroke-width=\"" << n(width) << "\"";
  if (!dash.empty()) body_ << " stroke-dasharray=\"" << dash << "\"";
  body_ << "/>\n";
}

void Svg::polyline(const std::vector<Xy>& pts, std::string_view stroke, double width) {
  body_ << "<polyline fill=\"none\" stroke=\"" << stroke << "\" stroke-width=\"" << n(width) << "\" points=\"";
  for (std::size_t i = 0; i < pts.size(); ++i) body_ << (i ? " " : "") << n(pts[i].x) << "," << n(pts[i].y);
  body_ << "\"/>\n";
}

void Svg::circle(double cx, double cy, double r, std::string_view fill, std::string_view stroke) {
  body_ << "<circle cx=\"" << n(cx) << "\" cy=\"" << n(cy) << "\" r=\"" << n(r) << "\" fill=\"" << fill << "\"";
  if (stroke != "none") body_ << " stroke=\"" << stroke << "\"";
  body_ << "/>\n";
}

void Svg::text(double x, double y, std::string_view s, double size, std::string_view anchor, std::string_view fill) {
  body_ << "<text x=\"" << n(x) << "\" y=\"" << n(y) << "\" font-size=\"" << n(size) << "\" text-anchor=\"" << anchor << "\" fill=\""
        << fill << "\">" << xml_escape(s) << "</text>\n";
}

std::string Svg::str() const {
  std::ostringstream out;
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << n(width_) << "\" height=\"" << n(height_) << "\" viewBox=\"0 0 "
      << n(width_) << " " << n(height_) << "\" font-family=\"sans-serif\">\n";
  out << "<rect x=\"0\" y=\"0\" width=\"" << n(width_) << "\" height=\"" << n(height_) << "\" fill=\"#ffffff\"/>\n";
  out << body_.str() << "</svg>\n";
  return out.str();
}

std::string xml_escape(std::string_view s) {
  std::string out;
  for (char c : s) {
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

std::string heat_color(double t) {
  t = std::clamp(std::isfinite(t) ? t : 0.0, 0.0, 1.0);
  auto mix = [&](int a, int b) { return static_cast<int>(std::lround(a + (b - a) * t)); };
  char buf[8];
  std::snprintf(buf, sizeof buf, "#%02x%02x%02x", mix(0xf7, 0x08), mix(0xfb, 0x30), mix(0xff, 0x6b));
  return buf;
}

std::string_view palette(std::size_t i) {
  static constexpr std::array<std::string_view, 8> kColors = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728",
                                                              "#9467bd", "#8c564b", "#e377c2", "#7f7f7f"};
  return kColors[i % kColors.size()];
}

}  // namespace mumkit
