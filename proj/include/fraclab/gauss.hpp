#pragma once

// Quadrature rules: 1D Gauss-Legendre on [0,1] and symmetric positive-weight
// rules on the reference triangle. Triangle rules follow the published
// Strang-Fix (degrees 2-6) and Xiao-Gimbutas (degree 10) point sets. The
// triangle convention used throughout: nodes are reference coordinates (u,v)
// on the triangle (0,0)-(1,0)-(0,1), weights are positive and sum to one, and
//   integral over T of f  ~=  area(T) * sum_q w_q f(x(u_q, v_q)).

#include <cmath>
#include <stdexcept>
#include <vector>

#include "fraclab/geometry.hpp"

namespace fraclab {

struct GaussRule1D {
  std::vector<double> nodes;    // on [0,1]
  std::vector<double> weights;  // sum to 1
};

// Gauss-Legendre nodes/weights on [0,1] computed by Newton iteration on the
// Legendre polynomial; accurate to machine precision for n <= 64.
inline GaussRule1D gauss_legendre(int n) {
  if (n < 1 || n > 64) throw std::invalid_argument("gauss_legendre: order out of range");
  GaussRule1D r;
  r.nodes.resize(static_cast<size_t>(n));
  r.weights.resize(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) {
    // Chebyshev-based initial guess for the i-th root of P_n on [-1,1].
    double x = std::cos(M_PI * (i + 0.75) / (n + 0.5));
    double pp = 0.0;
    for (int it = 0; it < 100; ++it) {
      // Evaluate P_n(x) and P'_n(x) via the three-term recurrence.
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2 * k - 1) * x * p1 - (k - 1) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      pp = n * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / pp;
      x -= dx;
      if (std::abs(dx) < 1e-15) break;
    }
    // Map from [-1,1] to [0,1]; roots come out in decreasing order.
    r.nodes[static_cast<size_t>(n - 1 - i)] = 0.5 * (x + 1.0);
    r.weights[static_cast<size_t>(n - 1 - i)] = 1.0 / ((1.0 - x * x) * pp * pp);
  }
  return r;
}

struct TriangleRule {
  int degree = 0;                      // polynomial exactness actually provided
  std::vector<Point2> nodes;           // reference coordinates (u,v)
  std::vector<double> weights;         // positive, sum to 1
};

namespace detail {

inline void push_node(TriangleRule& r, double u, double v, double w) {
  r.nodes.push_back({u, v});
  r.weights.push_back(w);
}

// Orbit of a point under the 3 rotations of the symmetric group action with
// two equal barycentric coordinates: (a,a), (a,1-2a), (1-2a,a).
inline void push_s3(TriangleRule& r, double a, double w) {
  push_node(r, a, a, w);
  push_node(r, a, 1.0 - 2.0 * a, w);
  push_node(r, 1.0 - 2.0 * a, a, w);
}

// Full 6-point orbit of (a,b) with all barycentric coordinates distinct.
inline void push_s6(TriangleRule& r, double a, double b, double w) {
  const double c = 1.0 - a - b;
  push_node(r, a, b, w);
  push_node(r, b, a, w);
  push_node(r, a, c, w);
  push_node(r, c, a, w);
  push_node(r, b, c, w);
  push_node(r, c, b, w);
}

}  // namespace detail

// Positive-weight symmetric rule exact for polynomials up to the requested
// total degree. Supported exactness degrees are 1..10 (a request is served by
// the smallest tabulated rule of at least that degree); higher degrees throw.
inline TriangleRule gauss_triangle(int degree) {
  if (degree < 1 || degree > 10)
    throw std::invalid_argument("gauss_triangle: unsupported order");
  TriangleRule r;
  if (degree <= 1) {
    r.degree = 1;
    detail::push_node(r, 1.0 / 3.0, 1.0 / 3.0, 1.0);
  } else if (degree <= 2) {
    r.degree = 2;
    detail::push_s3(r, 1.0 / 6.0, 1.0 / 3.0);
  } else if (degree <= 3) {
    // Strang-Fix, 6 points, degree 3.
    r.degree = 3;
    detail::push_s6(r, 0.659027622374092, 0.231933368553031, 1.0 / 6.0);
  } else if (degree <= 4) {
    // Strang-Fix, 6 points, degree 4.
    r.degree = 4;
    detail::push_s3(r, 0.091576213509771, 0.109951743655322);
    detail::push_s3(r, 0.445948490915965, 0.223381589678011);
  } else if (degree <= 5) {
    // Strang-Fix, 7 points, degree 5.
    r.degree = 5;
    detail::push_node(r, 1.0 / 3.0, 1.0 / 3.0, 0.225);
    detail::push_s3(r, 0.10128650732345633, 0.12593918054482717);
    detail::push_s3(r, 0.47014206410511505, 0.13239415278850616);
  } else if (degree <= 6) {
    // Strang-Fix, 12 points, degree 6.
    r.degree = 6;
    detail::push_s3(r, 0.063089014491502, 0.050844906370207);
    detail::push_s3(r, 0.249286745170910, 0.116786275726379);
    detail::push_s6(r, 0.636502499121399, 0.310352451033785, 0.082851075618374);
  } else {
    // Xiao-Gimbutas, 25 points, degree 10.
    r.degree = 10;
    detail::push_node(r, 1.0 / 3.0, 1.0 / 3.0, 0.08361487437397393);
    detail::push_s3(r, 0.4951734598011705, 0.009792590498418303);
    detail::push_s3(r, 0.019139415242841296, 0.006385359230118654);
    detail::push_s3(r, 0.18448501268524653, 0.07863376974637727);
    detail::push_s3(r, 0.42823482094371884, 0.07524732796854398);
    detail::push_s6(r, 0.03472362048232748, 0.13373475510086913,
                    0.028962281463256342);
    detail::push_s6(r, 0.03758272734119169, 0.3266931362813369,
                    0.038739049086018905);
  }
  return r;
}

// Cached rule lookups for hot loops. Initialization is thread-safe and the
// returned references stay valid for the lifetime of the program; the tables
// are read-only after construction.
inline const GaussRule1D& gauss_legendre_cached(int n) {
  static const std::vector<GaussRule1D> table = [] {
    std::vector<GaussRule1D> t;
    t.reserve(64);
    for (int k = 1; k <= 64; ++k) t.push_back(gauss_legendre(k));
    return t;
  }();
  if (n < 1 || n > 64) throw std::invalid_argument("gauss_legendre: order out of range");
  return table[static_cast<size_t>(n - 1)];
}

inline const TriangleRule& gauss_triangle_cached(int degree) {
  static const std::vector<TriangleRule> table = [] {
    std::vector<TriangleRule> t;
    t.reserve(10);
    for (int d = 1; d <= 10; ++d) t.push_back(gauss_triangle(d));
    return t;
  }();
  if (degree < 1 || degree > 10)
    throw std::invalid_argument("gauss_triangle: unsupported order");
  return table[static_cast<size_t>(degree - 1)];
}

// Per-triangle cache of physical quadrature points; the hat values at the
// reference nodes are shared by all triangles for a fixed rule.
struct MappedRule {
  std::vector<Point2> points;
  double area = 0.0;
};

inline MappedRule map_rule(const TriangleRule& rule, const Triangle& t) {
  MappedRule m;
  m.area = area(t);
  m.points.reserve(rule.nodes.size());
  for (const Point2& n : rule.nodes)
    m.points.push_back(map_to_physical(t, n.x, n.y));
  return m;
}

}  // namespace fraclab
