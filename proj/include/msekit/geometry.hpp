#pragma once

#include <Eigen/Dense>

#include <array>
#include <cmath>
#include <numbers>

namespace msekit {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Mat2 = Eigen::Matrix2d;

inline double cross(const Vec2& a, const Vec2& b) { return a.x() * b.y() - a.y() * b.x(); }

/// Rotation by +90 degrees.
inline Vec2 perp(const Vec2& v) { return {-v.y(), v.x()}; }

inline double signed_area(const Vec2& a, const Vec2& b, const Vec2& c) {
  return 0.5 * cross(b - a, c - a);
}

/// Orientation-preserving rigid motion x -> R x + t of the plane.
struct Isometry2 {
  Mat2 rot = Mat2::Identity();
  Vec2 shift = Vec2::Zero();

  static Isometry2 identity() { return {}; }

  static Isometry2 from_angle(double angle, const Vec2& t = Vec2::Zero()) {
    Isometry2 g;
    g.rot << std::cos(angle), -std::sin(angle), std::sin(angle), std::cos(angle);
    g.shift = t;
    return g;
  }

  /// The proper rigid motion sending segment (a0,a1) onto (b0,b1). The two
  /// segments must have equal length; the caller checks that.
  static Isometry2 from_segments(const Vec2& a0, const Vec2& a1, const Vec2& b0, const Vec2& b1) {
    const Vec2 da = a1 - a0;
    const Vec2 db = b1 - b0;
    const double angle = std::atan2(cross(da, db), da.dot(db));
    Isometry2 g = from_angle(angle);
    g.shift = b0 - g.rot * a0;
    return g;
  }

  Vec2 operator()(const Vec2& p) const { return rot * p + shift; }

  Isometry2 operator*(const Isometry2& o) const {
    Isometry2 g;
    g.rot = rot * o.rot;
    g.shift = rot * o.shift + shift;
    return g;
  }

  Isometry2 inverse() const {
    Isometry2 g;
    g.rot = rot.transpose();
    g.shift = -(g.rot * shift);
    return g;
  }

  /// Distance to the identity: max of rotation-entry and translation error.
  double deviation_from_identity() const {
    return std::max((rot - Mat2::Identity()).cwiseAbs().maxCoeff(), shift.cwiseAbs().maxCoeff());
  }
};

/// Proper intersection test of closed segments [p1,p2] and [q1,q2], counting
/// touching as intersecting.
inline bool segments_intersect(const Vec2& p1, const Vec2& p2, const Vec2& q1, const Vec2& q2,
                               double eps = 1e-12) {
  const double d1 = cross(p2 - p1, q1 - p1);
  const double d2 = cross(p2 - p1, q2 - p1);
  const double d3 = cross(q2 - q1, p1 - q1);
  const double d4 = cross(q2 - q1, p2 - q1);
  const double scale = std::max({(p2 - p1).norm(), (q2 - q1).norm(), 1.0});
  const double tol = eps * scale * scale;
  auto sgn = [tol](double v) { return v > tol ? 1 : (v < -tol ? -1 : 0); };
  const int s1 = sgn(d1), s2 = sgn(d2), s3 = sgn(d3), s4 = sgn(d4);
  if (s1 * s2 < 0 && s3 * s4 < 0) return true;
  auto on_segment = [tol](const Vec2& a, const Vec2& b, const Vec2& p) {
    return std::min(a.x(), b.x()) - tol <= p.x() && p.x() <= std::max(a.x(), b.x()) + tol &&
           std::min(a.y(), b.y()) - tol <= p.y() && p.y() <= std::max(a.y(), b.y()) + tol;
  };
  if (s1 == 0 && on_segment(p1, p2, q1)) return true;
  if (s2 == 0 && on_segment(p1, p2, q2)) return true;
  if (s3 == 0 && on_segment(q1, q2, p1)) return true;
  if (s4 == 0 && on_segment(q1, q2, p2)) return true;
  return false;
}

/// Barycentric coordinates of p in triangle (a,b,c).
inline std::array<double, 3> barycentric(const Vec2& a, const Vec2& b, const Vec2& c, const Vec2& p) {
  const double area = signed_area(a, b, c);
  const double l0 = signed_area(p, b, c) / area;
  const double l1 = signed_area(a, p, c) / area;
  return {l0, l1, 1.0 - l0 - l1};
}

/// Gradients of the three P1 hat functions on triangle (a,b,c).
inline std::array<Vec2, 3> hat_gradients(const Vec2& a, const Vec2& b, const Vec2& c) {
  const double twice_area = cross(b - a, c - a);
  return {Vec2(perp(c - b) / twice_area), Vec2(perp(a - c) / twice_area),
          Vec2(perp(b - a) / twice_area)};
}

/// Interior angles of a triangle in 3D at its three corners.
inline std::array<double, 3> corner_angles(const Vec3& a, const Vec3& b, const Vec3& c) {
  auto angle = [](const Vec3& u, const Vec3& v) {
    return std::atan2(u.cross(v).norm(), u.dot(v));
  };
  return {angle(b - a, c - a), angle(c - b, a - b), angle(a - c, b - c)};
}

}  // namespace msekit
