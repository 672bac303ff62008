#pragma once

// Closed-form reference quantities for the model problem
//
//   (-Delta)^s u = 1  in the unit disk,   u = 0  outside,
//
// whose solution is u(x) = c_u * (1 - |x|^2)^s on the disk with
// c_u = Gamma(d/2) / (2^{2s} Gamma((d+2s)/2) Gamma(1+s)), plus the kernel
// normalization constant of the integral fractional Laplacian.

#include <cmath>
#include <stdexcept>

#include "fraclab/discrete.hpp"

namespace fraclab {

// Gamma function; the C library implementation is accurate to ~15 digits,
// which the test suite asserts against high-precision references.
inline double gamma_fn(double x) { return std::tgamma(x); }

// Normalization constant of the integral fractional Laplacian,
//   C(d,s) = 2^{2s} s Gamma(s + d/2) / (pi^{d/2} Gamma(1-s)).
inline double c_ds(int d, double s) {
  if (s <= 0.0 || s >= 1.0) throw std::invalid_argument("c_ds: s must be in (0,1)");
  return std::pow(2.0, 2.0 * s) * s * gamma_fn(s + 0.5 * d) /
         (std::pow(M_PI, 0.5 * d) * gamma_fn(1.0 - s));
}

// Solution of (-Delta)^s u = 1 on the unit ball in d dimensions.
struct GetoorSolution {
  double s = 0.5;
  double c_u = 0.0;  // peak value u(0)

  explicit GetoorSolution(double s_, int d = 2) : s(s_) {
    if (s <= 0.0 || s >= 1.0)
      throw std::invalid_argument("GetoorSolution: s must be in (0,1)");
    c_u = gamma_fn(0.5 * d) /
          (std::pow(2.0, 2.0 * s) * gamma_fn(0.5 * (d + 2.0 * s)) * gamma_fn(1.0 + s));
  }

  double operator()(Point2 p) const {
    const double t = 1.0 - norm_sq(p);
    return t > 0.0 ? c_u * std::pow(t, s) : 0.0;
  }
};

// Exact integral and squared L2 norm of the Getoor solution over the disk:
//   integral = c_u * pi / (1+s),   |u|_{L2}^2 = c_u^2 * pi / (1+2s).
struct GetoorQuantities {
  double integral = 0.0;
  double l2_norm_sq = 0.0;
};

inline GetoorQuantities getoor_l2_quantities(double s) {
  const GetoorSolution u(s);
  return {u.c_u * M_PI / (1.0 + s), u.c_u * u.c_u * M_PI / (1.0 + 2.0 * s)};
}

// Nodal interpolant: the piecewise-linear function matching f at every mesh
// vertex (boundary vertices included).
template <class F>
DiscreteFunction nodal_interpolant(const TriMesh& m, F&& f) {
  DiscreteFunction g(m);
  // Boundary nodes are pinned to zero so the interpolant is a member of the
  // homogeneous finite element space regardless of rounding in f.
  for (int v = 0; v < m.num_vertices(); ++v)
    g.vertex_value[static_cast<size_t>(v)] =
        m.boundary[static_cast<size_t>(v)] ? 0.0 : f(m.vertex[static_cast<size_t>(v)]);
  return g;
}

}  // namespace fraclab
