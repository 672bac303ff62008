#pragma once

// Error measures for the discrete fractional Dirichlet problem: the global
// L2 error against a known solution, the energy-norm error through the
// Galerkin identity, the local Gagliardo-seminorm error of the interpolant
// difference, and least-squares rate fits over refinement ladders.

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

#include "fraclab/analytic.hpp"
#include "fraclab/assembly.hpp"
#include "fraclab/discrete.hpp"

namespace fraclab {

namespace detail {

// Squared-difference integral over one triangle against the affine function
// carrying uh there, refining recursively toward the unit circle, where the
// reference solutions lose smoothness. The criterion is distance-to-circle
// against the cell size, so it tracks both the circle vertices and the
// shallow approach along boundary chords; cells clear of the circle by two
// diameters integrate with the base rule.
template <class F>
double l2_diff_sq_recurse(const Triangle& tri, const AffineHats& hats,
                          const std::array<double, 3>& uh_vertex, const F& exact,
                          const TriangleRule& rule, int levels) {
  bool near_circle = false;
  if (levels > 0) {
    double max_norm = 0.0;
    for (int k = 0; k < 3; ++k) max_norm = std::max(max_norm, norm(tri[k]));
    near_circle = 1.0 - max_norm < 2.0 * diameter(tri);
  }
  if (near_circle) {
    double acc = 0.0;
    for (const Triangle& child : split_four(tri))
      acc += l2_diff_sq_recurse(child, hats, uh_vertex, exact, rule, levels - 1);
    return acc;
  }
  const double at = area(tri);
  double acc = 0.0;
  for (size_t q = 0; q < rule.weights.size(); ++q) {
    const Point2 x = map_to_physical(tri, rule.nodes[q].x, rule.nodes[q].y);
    double uh = 0.0;
    for (int k = 0; k < 3; ++k) uh += uh_vertex[static_cast<size_t>(k)] * hats.value(k, x);
    const double d = exact(x) - uh;
    acc += rule.weights[q] * at * d * d;
  }
  return acc;
}

}  // namespace detail

// Squared L2 mass of the Getoor solution outside the mesh polygon but inside
// the unit disk: per boundary chord, the segment between chord and arc in
// polar form, where the radial integral of (1-r^2)^(2s) r has a closed form.
// The angular integrand vanishes like a fractional power at the chord ends,
// so panels refine geometrically toward both endpoints.
inline double getoor_exterior_l2_sq(const TriMesh& m, double s, int order = 12,
                                    int end_levels = 20) {
  const GetoorSolution u(s);
  const std::vector<int> loop = boundary_loop(m);
  const GaussRule1D& g = gauss_legendre(order);
  double acc = 0.0;
  const size_t nb = loop.size();
  for (size_t e = 0; e < nb; ++e) {
    const Point2 a = m.vertex[static_cast<size_t>(loop[e])];
    const Point2 b = m.vertex[static_cast<size_t>(loop[(e + 1) % nb])];
    const double ta = std::atan2(a.y, a.x);
    double tb = std::atan2(b.y, b.x);
    while (tb <= ta) tb += 2.0 * M_PI;
    const double mid = 0.5 * (ta + tb), half = 0.5 * (tb - ta);
    // Chord radius along direction theta, as in the band slivers; vertices on
    // the unit circle make r0(theta) = cos(half)/cos(theta - mid).
    auto panel = [&](double p0, double p1) {
      double v = 0.0;
      for (int q = 0; q < order; ++q) {
        const double phi = p0 + (p1 - p0) * g.nodes[static_cast<size_t>(q)];
        const double r0 = std::cos(half) / std::cos(phi);
        const double t0 = std::max(0.0, 1.0 - r0 * r0);
        v += g.weights[static_cast<size_t>(q)] * (p1 - p0) *
             std::pow(t0, 2.0 * s + 1.0) / (2.0 * (2.0 * s + 1.0));
      }
      return v;
    };
    // The integrand is even in phi and fractionally singular at phi = half;
    // cover [0, half] with panels shrinking geometrically toward that end,
    // then double. The final uncovered sliver carries negligible mass but is
    // integrated anyway.
    double d_hi = half;  // distance from the singular end
    for (int lev = 0; lev < end_levels; ++lev) {
      const double d_lo = d_hi * 0.5;
      acc += 2.0 * panel(half - d_hi, half - d_lo);
      d_hi = d_lo;
    }
    acc += 2.0 * panel(half - d_hi, half);
  }
  return u.c_u * u.c_u * acc;
}

// L2 error of the discrete function against a reference over the mesh
// polygon. boundary_levels controls the geometric refinement toward circle
// vertices, where the reference solutions have unbounded derivatives.
template <class F>
double l2_error(const DiscreteFunction& uh, F&& exact, int degree = 8, int boundary_levels = 14) {
  const TriMesh& m = *uh.mesh;
  const TriangleRule& rule = gauss_triangle(degree);
  double acc = 0.0;
  for (int t = 0; t < m.num_triangles(); ++t) {
    const Triangle tri = m.triangle(t);
    const auto& vt = m.tri[static_cast<size_t>(t)];
    const std::array<double, 3> uv = {uh.vertex_value[static_cast<size_t>(vt[0])],
                                      uh.vertex_value[static_cast<size_t>(vt[1])],
                                      uh.vertex_value[static_cast<size_t>(vt[2])]};
    acc += detail::l2_diff_sq_recurse(tri, AffineHats::from(tri), uv, exact, rule,
                                      boundary_levels);
  }
  return std::sqrt(acc);
}

// L2 error against the Getoor solution measured over the whole disk: the
// polygon part by quadrature plus the closed-form exterior mass (the discrete
// function vanishes between polygon and circle).
inline double l2_error_getoor(const DiscreteFunction& uh, double s, int degree = 8,
                              int boundary_levels = 14) {
  const GetoorSolution u(s);
  const double inner = l2_error(uh, u, degree, boundary_levels);
  return std::sqrt(inner * inner + getoor_exterior_l2_sq(*uh.mesh, s));
}

struct EnergyError {
  double value = 0.0;    // sqrt of the clamped gap
  double raw_gap = 0.0;  // exact_load_integral - F'U, negative only through
                         // quadrature noise once the gap is below it
  bool clamped = false;
};

// Energy-norm error via the Galerkin identity: for f-load problems,
// |u - u_h|_E^2 = int_Omega f u - F'U.
inline EnergyError energy_error(double exact_load_integral, const std::vector<double>& f,
                                const std::vector<double>& u) {
  if (f.size() != u.size()) throw std::invalid_argument("energy_error: size mismatch");
  double fu = 0.0;
  for (size_t i = 0; i < f.size(); ++i) fu += f[i] * u[i];
  EnergyError e;
  e.raw_gap = exact_load_integral - fu;
  if (e.raw_gap < 0.0) {
    e.clamped = true;
    e.value = 0.0;
  } else {
    e.value = std::sqrt(e.raw_gap);
  }
  return e;
}

// Triangles whose closure meets the closed ball; the union covers the ball
// once the mesh does.
inline std::vector<int> triangles_meeting_ball(const TriMesh& m, Point2 center, double radius) {
  std::vector<int> tris;
  for (int t = 0; t < m.num_triangles(); ++t) {
    const Triangle tri = m.triangle(t);
    double d = 0.0;
    if (!contains(tri, center)) {
      d = point_segment_distance(center, tri[0], tri[1]);
      d = std::min(d, point_segment_distance(center, tri[1], tri[2]));
      d = std::min(d, point_segment_distance(center, tri[2], tri[0]));
    }
    if (d <= radius) tris.push_back(t);
  }
  return tris;
}

// Local Gagliardo-seminorm error sqrt(e' G e) of a coefficient vector over
// the subdomain the Gram matrix was assembled on. The coefficients are given
// over all global dofs; entries outside the subdomain are ignored.
inline double local_hs_error(const SubdomainGram& gram, const std::vector<double>& e_dofs) {
  std::vector<double> e_local(gram.dofs.size());
  for (size_t k = 0; k < gram.dofs.size(); ++k)
    e_local[k] = e_dofs[static_cast<size_t>(gram.dofs[k])];
  std::vector<double> ge;
  gram.G.multiply(e_local, ge);
  double acc = 0.0;
  for (size_t k = 0; k < e_local.size(); ++k) acc += e_local[k] * ge[k];
  return std::sqrt(std::max(0.0, acc));
}

struct RateFit {
  double slope = 0.0;      // d log(err) / d log(N)
  double intercept = 0.0;
  double stderr_slope = 0.0;
  int n_used = 0;
  bool dropped_coarsest = false;
};

namespace detail {

inline RateFit ols_loglog(const std::vector<double>& n, const std::vector<double>& err,
                          size_t first) {
  const size_t cnt = n.size() - first;
  double sx = 0.0, sy = 0.0;
  std::vector<double> xs(cnt), ys(cnt);
  for (size_t i = 0; i < cnt; ++i) {
    xs[i] = std::log(n[first + i]);
    ys[i] = std::log(err[first + i]);
    sx += xs[i];
    sy += ys[i];
  }
  const double mx = sx / static_cast<double>(cnt), my = sy / static_cast<double>(cnt);
  double sxx = 0.0, sxy = 0.0;
  for (size_t i = 0; i < cnt; ++i) {
    sxx += (xs[i] - mx) * (xs[i] - mx);
    sxy += (xs[i] - mx) * (ys[i] - my);
  }
  RateFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  fit.n_used = static_cast<int>(cnt);
  double ssr = 0.0;
  for (size_t i = 0; i < cnt; ++i) {
    const double r = ys[i] - (fit.intercept + fit.slope * xs[i]);
    ssr += r * r;
  }
  if (cnt > 2) fit.stderr_slope = std::sqrt(ssr / (static_cast<double>(cnt) - 2.0) / sxx);
  return fit;
}

}  // namespace detail

// Least-squares convergence rate of err ~ C N^slope. A coarsest level outside
// the asymptotic regime is detected by leave-one-out prediction (an endpoint
// outlier has too much leverage for its own fit residual to expose it): fit
// the finer levels alone, and if they predict the coarsest point badly --
// beyond three times their residual scale, with an absolute floor well below
// quadrature noise -- drop it and keep the finer-level fit.
inline RateFit fit_rate(const std::vector<double>& n, const std::vector<double>& err) {
  if (n.size() != err.size() || n.size() < 3)
    throw std::invalid_argument("fit_rate: need at least three (N, err) points");
  for (size_t i = 0; i < n.size(); ++i)
    if (!(n[i] > 0.0) || !(err[i] > 0.0))
      throw std::invalid_argument("fit_rate: N and err must be positive");
  RateFit fit = detail::ols_loglog(n, err, 0);
  if (n.size() >= 4) {
    const RateFit sub = detail::ols_loglog(n, err, 1);
    double ssr = 0.0;
    for (size_t i = 1; i < n.size(); ++i) {
      const double r = std::log(err[i]) - (sub.intercept + sub.slope * std::log(n[i]));
      ssr += r * r;
    }
    const double scale = std::sqrt(ssr / static_cast<double>(n.size() - 3));
    const double miss = std::abs(std::log(err[0]) - (sub.intercept + sub.slope * std::log(n[0])));
    if (miss > 3.0 * std::max(scale, 1e-9)) {
      fit = sub;
      fit.dropped_coarsest = true;
    }
  }
  return fit;
}

}  // namespace fraclab
