#pragma once

#include <sstream>
#include <string>
#include <string_view>
#include <vector>

namespace mumkit {

struct Xy {
  double x = 0.0;
  double y = 0.0;
};

/// Minimal SVG builder. Coordinates are written with fixed precision so the
/// same drawing always produces the same bytes.
class Svg {
 public:
  Svg(double width, double height);

  void comment(std::string_view text);
  void rect(double x, double y, double w, double h, std::string_view fill, double opacity = 1.0, std::string_view stroke = "none");
  void line(double x1, double y1, double x2, double y2, std::string_view stroke, double width = 1.0, std::string_view dash = "");
  void polyline(const std::vector<Xy>& pts, std::string_view stroke, double width = 1.5);
  void circle(double cx, double cy, double r, std::string_view fill, std::string_view stroke = "none");
  void text(double x, double y, std::string_view s, double size = 11, std::string_view anchor = "start",
            std::string_view fill = "#222222");

  std::string str() const;

 private:
  double width_, height_;
  std::ostringstream body_;
};

std::string xml_escape(std::string_view s);

/// "#rrggbb" on a white-to-blue ramp for t in [0, 1].
std::string heat_color(double t);

/// Fixed palette indexed by series number.
std::string_view palette(std::size_t i);

}  // namespace mumkit
