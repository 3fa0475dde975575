#pragma once

#include <cmath>

namespace mstf {

/// 2D position or displacement in meters.
struct Pt {
  double x = 0.0;
  double y = 0.0;
};

inline Pt operator+(Pt a, Pt b) { return {a.x + b.x, a.y + b.y}; }
inline Pt operator-(Pt a, Pt b) { return {a.x - b.x, a.y - b.y}; }
inline Pt operator*(Pt a, double s) { return {a.x * s, a.y * s}; }
inline bool operator==(Pt a, Pt b) { return a.x == b.x && a.y == b.y; }

inline double sq_norm(Pt a) { return a.x * a.x + a.y * a.y; }
inline double norm(Pt a) { return std::sqrt(sq_norm(a)); }

}  // namespace mstf
