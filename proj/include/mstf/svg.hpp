#pragma once

#include <string>
#include <vector>

#include "mstf/geom.hpp"
#include "mstf/masking.hpp"

namespace mstf {

/// Minimal SVG document builder with a data-to-pixel transform (y up).
/// Output is byte-deterministic for identical inputs.
class SvgCanvas {
 public:
  SvgCanvas(Pt data_min, Pt data_max, int width_px = 640, int height_px = 480,
            double margin_px = 40.0);

  void polyline(const std::vector<Pt>& pts, const std::string& stroke, double width,
                const std::string& dash = "", const std::string& cls = "");
  void circle(Pt p, double radius_px, const std::string& fill, const std::string& cls = "");
  /// X-shaped marker.
  void cross(Pt p, double size_px, const std::string& stroke, const std::string& cls = "");
  void text(double x_px, double y_px, const std::string& s, const std::string& fill = "#333");

  std::string str() const;

 private:
  Pt to_px(Pt p) const;
  int width_, height_;
  double margin_;
  Pt dmin_, dmax_;
  double sx_ = 1.0, sy_ = 1.0;
  std::string body_;
};

/// One trajectory figure: observed history points, missing-step markers at
/// their true positions, history path, ground-truth future and prediction in
/// distinct strokes, plus a legend. All inputs in absolute coordinates.
std::string trajectory_svg(const std::vector<Pt>& history, const SequenceMask& mask,
                           const std::vector<Pt>& future_truth,
                           const std::vector<Pt>& future_pred, const std::string& title);

}  // namespace mstf
