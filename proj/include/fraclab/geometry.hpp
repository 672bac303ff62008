#pragma once

// Planar geometry primitives shared by the mesh, quadrature and assembly
// layers: points, triangles, reference-to-physical maps and exact
// triangle-triangle distances.

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

namespace fraclab {

struct Point2 {
  double x = 0.0;
  double y = 0.0;
};

inline Point2 operator+(Point2 a, Point2 b) { return {a.x + b.x, a.y + b.y}; }
inline Point2 operator-(Point2 a, Point2 b) { return {a.x - b.x, a.y - b.y}; }
inline Point2 operator*(double c, Point2 p) { return {c * p.x, c * p.y}; }

inline double dot(Point2 a, Point2 b) { return a.x * b.x + a.y * b.y; }
inline double cross(Point2 a, Point2 b) { return a.x * b.y - a.y * b.x; }
inline double norm_sq(Point2 p) { return p.x * p.x + p.y * p.y; }
inline double norm(Point2 p) { return std::sqrt(norm_sq(p)); }
inline double distance(Point2 a, Point2 b) { return norm(a - b); }

// Triangle given by its three corners. Orientation matters only through the
// sign of signed_area(); all quadrature uses |area|.
struct Triangle {
  std::array<Point2, 3> v;

  Point2 operator[](int i) const { return v[static_cast<size_t>(i)]; }
};

inline double signed_area(const Triangle& t) {
  return 0.5 * cross(t[1] - t[0], t[2] - t[0]);
}

inline double area(const Triangle& t) { return std::abs(signed_area(t)); }

inline Point2 centroid(const Triangle& t) {
  return (1.0 / 3.0) * (t[0] + t[1] + t[2]);
}

// Longest edge length; the usual definition of the element size h_T for
// straight triangles (diameter of the element).
inline double diameter(const Triangle& t) {
  return std::max({distance(t[0], t[1]), distance(t[1], t[2]),
                   distance(t[2], t[0])});
}

// Radius of the inscribed circle: 2*area / perimeter.
inline double inradius(const Triangle& t) {
  const double p = distance(t[0], t[1]) + distance(t[1], t[2]) +
                   distance(t[2], t[0]);
  return p > 0.0 ? 2.0 * area(t) / p : 0.0;
}

// Map from the reference triangle {(u,v): u,v >= 0, u+v <= 1} to a physical
// triangle: x(u,v) = v0 + u*(v1-v0) + v*(v2-v0).
inline Point2 map_to_physical(const Triangle& t, double u, double v) {
  return t[0] + u * (t[1] - t[0]) + v * (t[2] - t[0]);
}

// Values of the three P1 hat functions at reference coordinates (u,v),
// ordered like the triangle corners.
inline std::array<double, 3> hat_values(double u, double v) {
  return {1.0 - u - v, u, v};
}

// Barycentric coordinates of a physical point with respect to a triangle.
inline std::array<double, 3> barycentric(const Triangle& t, Point2 p) {
  const double d = cross(t[1] - t[0], t[2] - t[0]);
  const double u = cross(p - t[0], t[2] - t[0]) / d;
  const double v = cross(t[1] - t[0], p - t[0]) / d;
  return {1.0 - u - v, u, v};
}

inline bool contains(const Triangle& t, Point2 p, double tol = 1e-12) {
  const auto b = barycentric(t, p);
  return b[0] >= -tol && b[1] >= -tol && b[2] >= -tol;
}

// Distance from point p to the segment [a,b].
inline double point_segment_distance(Point2 p, Point2 a, Point2 b) {
  const Point2 ab = b - a;
  const double len2 = norm_sq(ab);
  if (len2 == 0.0) return distance(p, a);
  const double t = std::clamp(dot(p - a, ab) / len2, 0.0, 1.0);
  return distance(p, a + t * ab);
}

inline bool segments_intersect(Point2 p1, Point2 p2, Point2 q1, Point2 q2) {
  // Orientation signs with a scale-relative dead zone: the cross product of
  // nearly collinear differences is pure rounding noise (|d| <= eps * |u||v|),
  // and its accidental sign must not report a proper crossing for collinear
  // but disjoint segments.
  auto sgn = [](double d, double scale_sq) {
    return (d * d <= 1e-26 * scale_sq) ? 0 : (d > 0 ? 1 : -1);
  };
  const Point2 dq = q2 - q1;
  const Point2 dp = p2 - p1;
  const int s1 = sgn(cross(dq, p1 - q1), norm_sq(dq) * norm_sq(p1 - q1));
  const int s2 = sgn(cross(dq, p2 - q1), norm_sq(dq) * norm_sq(p2 - q1));
  const int s3 = sgn(cross(dp, q1 - p1), norm_sq(dp) * norm_sq(q1 - p1));
  const int s4 = sgn(cross(dp, q2 - p1), norm_sq(dp) * norm_sq(q2 - p1));
  if (s1 * s2 < 0 && s3 * s4 < 0) return true;
  auto on_segment = [](Point2 a, Point2 b, Point2 c) {
    return std::min(a.x, b.x) <= c.x && c.x <= std::max(a.x, b.x) &&
           std::min(a.y, b.y) <= c.y && c.y <= std::max(a.y, b.y);
  };
  if (s1 == 0 && on_segment(q1, q2, p1)) return true;
  if (s2 == 0 && on_segment(q1, q2, p2)) return true;
  if (s3 == 0 && on_segment(p1, p2, q1)) return true;
  if (s4 == 0 && on_segment(p1, p2, q2)) return true;
  return false;
}

inline double segment_segment_distance(Point2 p1, Point2 p2, Point2 q1,
                                        Point2 q2) {
  if (segments_intersect(p1, p2, q1, q2)) return 0.0;
  return std::min({point_segment_distance(p1, q1, q2),
                   point_segment_distance(p2, q1, q2),
                   point_segment_distance(q1, p1, p2),
                   point_segment_distance(q2, p1, p2)});
}

// Exact Euclidean distance between two triangles (0 if they overlap or
// touch). Used to classify far, near and touching integration pairs.
inline double triangle_distance(const Triangle& a, const Triangle& b) {
  if (contains(a, b[0]) || contains(a, b[1]) || contains(a, b[2]) ||
      contains(b, a[0]) || contains(b, a[1]) || contains(b, a[2]))
    return 0.0;
  double d = std::numeric_limits<double>::max();
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      d = std::min(d, segment_segment_distance(a[i], a[(i + 1) % 3], b[j],
                                               b[(j + 1) % 3]));
  return d;
}

// Split a triangle into its four congruent children (red refinement).
inline std::array<Triangle, 4> split_four(const Triangle& t) {
  const Point2 m01 = 0.5 * (t[0] + t[1]);
  const Point2 m12 = 0.5 * (t[1] + t[2]);
  const Point2 m20 = 0.5 * (t[2] + t[0]);
  return {Triangle{{t[0], m01, m20}}, Triangle{{m01, t[1], m12}},
          Triangle{{m20, m12, t[2]}}, Triangle{{m01, m12, m20}}};
}

}  // namespace fraclab
