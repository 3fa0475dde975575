#include "mstf/svg.hpp"

#include <algorithm>
#include <cstdio>

#include "mstf/errors.hpp"

namespace mstf {

namespace {

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

}  // namespace

SvgCanvas::SvgCanvas(Pt data_min, Pt data_max, int width_px, int height_px, double margin_px)
    : width_(width_px), height_(height_px), margin_(margin_px), dmin_(data_min), dmax_(data_max) {
  const double dx = std::max(dmax_.x - dmin_.x, 1e-6);
  const double dy = std::max(dmax_.y - dmin_.y, 1e-6);
  sx_ = (width_ - 2.0 * margin_) / dx;
  sy_ = (height_ - 2.0 * margin_) / dy;
  // Uniform scale keeps geometry undistorted.
  sx_ = sy_ = std::min(sx_, sy_);
}

Pt SvgCanvas::to_px(Pt p) const {
  return {margin_ + (p.x - dmin_.x) * sx_, height_ - margin_ - (p.y - dmin_.y) * sy_};
}

void SvgCanvas::polyline(const std::vector<Pt>& pts, const std::string& stroke, double width,
                         const std::string& dash, const std::string& cls) {
  if (pts.empty()) return;
  body_ += "<polyline";
  if (!cls.empty()) body_ += " class=\"" + cls + "\"";
  body_ += " fill=\"none\" stroke=\"" + stroke + "\" stroke-width=\"" + fmt(width) + "\"";
  if (!dash.empty()) body_ += " stroke-dasharray=\"" + dash + "\"";
  body_ += " points=\"";
  for (size_t i = 0; i < pts.size(); ++i) {
    const Pt q = to_px(pts[i]);
    if (i) body_ += " ";
    body_ += fmt(q.x) + "," + fmt(q.y);
  }
  body_ += "\"/>\n";
}

void SvgCanvas::circle(Pt p, double radius_px, const std::string& fill, const std::string& cls) {
  const Pt q = to_px(p);
  body_ += "<circle";
  if (!cls.empty()) body_ += " class=\"" + cls + "\"";
  body_ += " cx=\"" + fmt(q.x) + "\" cy=\"" + fmt(q.y) + "\" r=\"" + fmt(radius_px) +
           "\" fill=\"" + fill + "\"/>\n";
}

void SvgCanvas::cross(Pt p, double size_px, const std::string& stroke, const std::string& cls) {
  const Pt q = to_px(p);
  const double s = size_px / 2.0;
  body_ += "<path";
  if (!cls.empty()) body_ += " class=\"" + cls + "\"";
  body_ += " stroke=\"" + stroke + "\" stroke-width=\"1.50\" d=\"M " + fmt(q.x - s) + " " +
           fmt(q.y - s) + " L " + fmt(q.x + s) + " " + fmt(q.y + s) + " M " + fmt(q.x - s) + " " +
           fmt(q.y + s) + " L " + fmt(q.x + s) + " " + fmt(q.y - s) + "\"/>\n";
}

void SvgCanvas::text(double x_px, double y_px, const std::string& s, const std::string& fill) {
  body_ += "<text x=\"" + fmt(x_px) + "\" y=\"" + fmt(y_px) + "\" font-size=\"12\" fill=\"" +
           fill + "\" font-family=\"sans-serif\">" + s + "</text>\n";
}

std::string SvgCanvas::str() const {
  std::string out = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" +
                    std::to_string(width_) + "\" height=\"" + std::to_string(height_) +
                    "\" viewBox=\"0 0 " + std::to_string(width_) + " " +
                    std::to_string(height_) + "\">\n<rect width=\"100%\" height=\"100%\" " +
                    "fill=\"white\"/>\n";
  out += body_;
  out += "</svg>\n";
  return out;
}

std::string trajectory_svg(const std::vector<Pt>& history, const SequenceMask& mask,
                           const std::vector<Pt>& future_truth,
                           const std::vector<Pt>& future_pred, const std::string& title) {
  if (static_cast<int>(history.size()) != mask.len()) {
    throw DataError("trajectory_svg: history/mask length mismatch");
  }
  Pt lo{1e300, 1e300}, hi{-1e300, -1e300};
  auto extend = [&](const std::vector<Pt>& pts) {
    for (const Pt& p : pts) {
      lo.x = std::min(lo.x, p.x);
      lo.y = std::min(lo.y, p.y);
      hi.x = std::max(hi.x, p.x);
      hi.y = std::max(hi.y, p.y);
    }
  };
  extend(history);
  extend(future_truth);
  extend(future_pred);

  SvgCanvas canvas(lo, hi);
  canvas.polyline(history, "#9aa5b1", 1.0, "", "hist");
  canvas.polyline(future_truth, "#2a9d3a", 2.0, "6,4", "truth");
  canvas.polyline(future_pred, "#d62728", 2.0, "", "pred");
  for (size_t i = 0; i < history.size(); ++i) {
    if (mask.values[i]) {
      canvas.circle(history[i], 3.0, "#1f77b4", "obs");
    } else {
      canvas.cross(history[i], 7.0, "#888888", "miss");
    }
  }
  canvas.text(10, 18, title);
  canvas.text(10, 34, "blue dot: observed | gray x: missing | green dash: truth | red: prediction");
  return canvas.str();
}

}  // namespace mstf
