#pragma once

// Quadrature for the double integrals of the fractional kernel
//
//   K(x, y) = |x - y|^(-2-2s),   s in (0, 1),
//
// over pairs of triangles. Touching pairs (identical / shared edge / shared
// vertex) use Sauter-Schwab relative-coordinate decompositions of the pair
// domain into subdomains of [0,1]^4 on which the singular distance factors as
// an exact power of the leading coordinates:
//
//   identical:      x - y  =  xi*eta1*eta2 * D(eta3)
//   shared edge:    x - y  =  xi*eta1      * D(eta2, eta3)
//   shared vertex:  x - y  =  xi           * D(eta1, eta2, eta3)
//
// with D bounded away from zero, and hat-difference (or boundary-vanishing
// hat) factors proportional to the same power. The singular coordinates are
// then integrated analytically -- their integrands are exact monomials
// xi^(3-2s), eta1^(2-2s), eta2^(1-2s) with moments 1/(4-2s), 1/(3-2s),
// 1/(2-2s) -- leaving smooth low-dimensional integrands for Gauss rules.
// Disjoint pairs use tensor Gauss with adaptive subdivision when the
// separation is small relative to the element size.

#include <array>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "fraclab/analytic.hpp"
#include "fraclab/band.hpp"
#include "fraclab/gauss.hpp"
#include "fraclab/geometry.hpp"
#include "fraclab/mesh.hpp"

namespace fraclab {

struct KernelParams {
  double s = 0.5;
  int d = 2;
  double c_ds = 0.0;  // normalization 2^{2s} s Gamma(s+d/2) / (pi^{d/2} Gamma(1-s))

  static KernelParams make(double s_) { return KernelParams{s_, 2, fraclab::c_ds(2, s_)}; }
};

inline double kernel_value(const Point2& x, const Point2& y, double s) {
  const Point2 d = x - y;
  return std::pow(d.x * d.x + d.y * d.y, -(1.0 + s));
}

// Affine forms of the three nodal hats of a triangle, valid on all of R^2
// (the natural affine extension of each hat beyond the element).
struct AffineHats {
  std::array<double, 3> a{};
  std::array<Point2, 3> g{};

  static AffineHats from(const Triangle& t) {
    AffineHats h;
    const double twice_area = cross(t[1] - t[0], t[2] - t[0]);
    for (int i = 0; i < 3; ++i) {
      const Point2 vj = t[(i + 1) % 3];
      const Point2 vk = t[(i + 2) % 3];
      h.a[static_cast<size_t>(i)] = cross(vj, vk) / twice_area;
      const Point2 d = vj - vk;
      h.g[static_cast<size_t>(i)] = Point2{d.y / twice_area, -d.x / twice_area};
    }
    return h;
  }

  double value(int i, const Point2& p) const {
    return a[static_cast<size_t>(i)] + dot(g[static_cast<size_t>(i)], p);
  }
};

// Interaction integrals of a triangle pair in the union-vertex layout:
// slot u carries the global hat of one distinct vertex of the pair, shared
// vertices first. value[u][v] = intint g_u g_v K with g_u(x,y) = a_u(x)-b_u(y)
// (a_u, b_u the hats of that vertex on Ta resp. Tb, zero when absent).
// Raw kernel integrals; the C_{d,s}/2 normalization is applied by assembly.
struct PairInteraction {
  int n_union = 0;
  int n_shared = 0;
  std::array<int, 6> a_local{};  // local vertex index in Ta per slot, -1 if absent
  std::array<int, 6> b_local{};
  std::array<std::array<double, 6>, 6> value{};
};

namespace detail {

inline void check_not_degenerate(const Triangle& t, const char* who) {
  const double d = diameter(t);
  if (!(area(t) > 1e-12 * d * d))
    throw std::invalid_argument(std::string(who) + ": degenerate triangle");
}

// ---------------------------------------------------------------------------
// Sauter-Schwab subdomain maps on [0,1]^4.
//
// Each map sends (xi, eta1, eta2, eta3) to collapsed coordinates
// (a0, a1, a2, a3); the pair of reference points is recovered by the mirror
// step  x_ref = (a0 - a1, a1),  y_ref = (a2 - a3, a3). jac_eta is the part of
// the Jacobian beyond xi^3 and the analytically integrated eta powers.
// ---------------------------------------------------------------------------

struct SSMap {
  // collapsed coordinates for given (xi, e1, e2, e3)
  std::array<double, 4> (*alpha)(double xi, double e1, double e2, double e3);
  int extra_eta2_weight;  // 1 if the Jacobian carries a factor eta2 beyond the moments
};

// Identical pair: 6 subdomains, Jacobian xi^3 eta1^2 eta2.
inline const std::array<SSMap, 6>& identical_maps() {
  static const std::array<SSMap, 6> maps = {{
      {[](double x, double e1, double e2, double e3) {
         return std::array<double, 4>{x, x * (1 - e1 + e1 * e2), x * (1 - e1 * e2 * e3),
                                      x * (1 - e1)};
       },
       0},
      {[](double x, double e1, double e2, double e3) {
         return std::array<double, 4>{x * (1 - e1 * e2 * e3), x * (1 - e1), x,
                                      x * (1 - e1 + e1 * e2)};
       },
       0},
      {[](double x, double e1, double e2, double e3) {
         return std::array<double, 4>{x, x * e1 * (1 - e2 + e2 * e3), x * (1 - e1 * e2),
                                      x * e1 * (1 - e2)};
       },
       0},
      {[](double x, double e1, double e2, double e3) {
         return std::array<double, 4>{x * (1 - e1 * e2), x * e1 * (1 - e2), x,
                                      x * e1 * (1 - e2 + e2 * e3)};
       },
       0},
      {[](double x, double e1, double e2, double e3) {
         return std::array<double, 4>{x * (1 - e1 * e2 * e3), x * e1 * (1 - e2 * e3), x,
                                      x * e1 * (1 - e2)};
       },
       0},
      {[](double x, double e1, double e2, double e3) {
         return std::array<double, 4>{x, x * e1 * (1 - e2), x * (1 - e1 * e2 * e3),
                                      x * e1 * (1 - e2 * e3)};
       },
       0},
  }};
  return maps;
}

// Shared edge: 5 subdomains; Jacobians xi^3 eta1^2 (first) and xi^3 eta1^2 eta2.
inline const std::array<SSMap, 5>& edge_maps() {
  static const std::array<SSMap, 5> maps = {{
      {[](double x, double e1, double e2, double e3) {
         return std::array<double, 4>{x, x * e1 * e3, x * (1 - e1 * e2), x * e1 * (1 - e2)};
       },
       0},
      {[](double x, double e1, double e2, double e3) {
         return std::array<double, 4>{x, x * e1, x * (1 - e1 * e2 * e3),
                                      x * e1 * e2 * (1 - e3)};
       },
       1},
      {[](double x, double e1, double e2, double e3) {
         return std::array<double, 4>{x * (1 - e1 * e2), x * e1 * (1 - e2), x,
                                      x * e1 * e2 * e3};
       },
       1},
      {[](double x, double e1, double e2, double e3) {
         return std::array<double, 4>{x * (1 - e1 * e2 * e3), x * e1 * e2 * (1 - e3), x,
                                      x * e1};
       },
       1},
      {[](double x, double e1, double e2, double e3) {
         return std::array<double, 4>{x * (1 - e1 * e2 * e3), x * e1 * (1 - e2 * e3), x,
                                      x * e1 * e2};
       },
       1},
  }};
  return maps;
}

// Shared vertex: 2 subdomains, Jacobian xi^3 eta2.
inline const std::array<SSMap, 2>& vertex_maps() {
  static const std::array<SSMap, 2> maps = {{
      {[](double x, double e1, double e2, double e3) {
         return std::array<double, 4>{x, x * e1, x * e2, x * e2 * e3};
       },
       0},
      {[](double x, double e1, double e2, double e3) {
         return std::array<double, 4>{x * e2, x * e2 * e3, x, x * e1};
       },
       0},
  }};
  return maps;
}

// Mirror step: collapsed coordinates -> reference-triangle coordinates.
inline void mirror(const std::array<double, 4>& al, double& ux, double& vx, double& uy,
                   double& vy) {
  ux = al[0] - al[1];
  vx = al[1];
  uy = al[2] - al[3];
  vy = al[3];
}

// Affine chart of a triangle: reference (u, v) -> physical point.
struct Chart {
  Point2 p0, e1, e2;
  explicit Chart(const Triangle& t) : p0(t[0]), e1(t[1] - t[0]), e2(t[2] - t[0]) {}
  Point2 operator()(double u, double v) const { return p0 + u * e1 + v * e2; }
};

// Analytic moments of the singular coordinates: integral of t^(k-2s) over
// [0,1] equals 1/(k+1-2s).
inline double xi_moment(double s) { return 1.0 / (4.0 - 2.0 * s); }
inline double eta1_moment(double s) { return 1.0 / (3.0 - 2.0 * s); }
inline double eta2_moment(double s) { return 1.0 / (2.0 - 2.0 * s); }

// Drives the regularized Sauter-Schwab quadrature for a touching pair whose
// shared vertices come first in both charts. For every node of the remaining
// smooth directions it reports the factored pair of physical points (the
// points with all singular coordinates set to 1, whose difference is the
// nonvanishing direction D) together with weight * |D|^(-2-2s). Consumers
// multiply factored hat values, which completes the exact power counting.
template <class Consumer>
void ss_touching_nodes(PairClass cls, const Chart& ca, const Chart& cb, double s, int order,
                       Consumer&& consume) {
  const GaussRule1D& g = gauss_legendre_cached(std::clamp(order, 2, 32));
  const int n = static_cast<int>(g.nodes.size());
  double ux, vx, uy, vy;
  switch (cls) {
    case PairClass::Identical: {
      const double mom = xi_moment(s) * eta1_moment(s) * eta2_moment(s);
      for (const auto& m : identical_maps())
        for (int k = 0; k < n; ++k) {
          const auto al = m.alpha(1.0, 1.0, 1.0, g.nodes[static_cast<size_t>(k)]);
          mirror(al, ux, vx, uy, vy);
          const Point2 x = ca(ux, vx);
          const Point2 y = cb(uy, vy);
          consume(x, y, mom * g.weights[static_cast<size_t>(k)] * kernel_value(x, y, s));
        }
      return;
    }
    case PairClass::SharedEdge: {
      const double mom = xi_moment(s) * eta1_moment(s);
      for (const auto& m : edge_maps())
        for (int k2 = 0; k2 < n; ++k2)
          for (int k3 = 0; k3 < n; ++k3) {
            const double e2 = g.nodes[static_cast<size_t>(k2)];
            const double e3 = g.nodes[static_cast<size_t>(k3)];
            const auto al = m.alpha(1.0, 1.0, e2, e3);
            mirror(al, ux, vx, uy, vy);
            const Point2 x = ca(ux, vx);
            const Point2 y = cb(uy, vy);
            double w = mom * g.weights[static_cast<size_t>(k2)] *
                       g.weights[static_cast<size_t>(k3)];
            if (m.extra_eta2_weight) w *= e2;
            consume(x, y, w * kernel_value(x, y, s));
          }
      return;
    }
    case PairClass::SharedVertex: {
      const double mom = xi_moment(s);
      for (const auto& m : vertex_maps())
        for (int k1 = 0; k1 < n; ++k1)
          for (int k2 = 0; k2 < n; ++k2)
            for (int k3 = 0; k3 < n; ++k3) {
              const double e1 = g.nodes[static_cast<size_t>(k1)];
              const double e2 = g.nodes[static_cast<size_t>(k2)];
              const double e3 = g.nodes[static_cast<size_t>(k3)];
              const auto al = m.alpha(1.0, e1, e2, e3);
              mirror(al, ux, vx, uy, vy);
              const Point2 x = ca(ux, vx);
              const Point2 y = cb(uy, vy);
              const double w = mom * e2 * g.weights[static_cast<size_t>(k1)] *
                               g.weights[static_cast<size_t>(k2)] *
                               g.weights[static_cast<size_t>(k3)];
              consume(x, y, w * kernel_value(x, y, s));
            }
      return;
    }
    default:
      throw std::logic_error("ss_touching_nodes: pair is not touching");
  }
}

// Union-layout bookkeeping shared by the touching and disjoint paths.
inline void fill_layout(const PairClassification& pc, PairInteraction& out) {
  out.n_shared = pc.n_shared;
  out.n_union = 6 - pc.n_shared;
  out.a_local.fill(-1);
  out.b_local.fill(-1);
  for (int u = 0; u < 3; ++u)
    out.a_local[static_cast<size_t>(u)] = pc.perm_a[static_cast<size_t>(u)];
  for (int u = 0; u < pc.n_shared; ++u)
    out.b_local[static_cast<size_t>(u)] = pc.perm_b[static_cast<size_t>(u)];
  for (int u = 3; u < out.n_union; ++u)
    out.b_local[static_cast<size_t>(u)] = pc.perm_b[static_cast<size_t>(u - 3 + pc.n_shared)];
}

// Tensor-Gauss interaction of one (sub)pair, accumulated into the union
// layout. Hat values come from the affine forms of the *original* pair, so
// the same routine serves subdivided children.
inline void disjoint_pair_accumulate(const Triangle& ta, const Triangle& tb,
                                     const AffineHats& ha, const AffineHats& hb,
                                     const TriangleRule& rule, double s,
                                     std::array<std::array<double, 6>, 6>& acc) {
  const int nq = static_cast<int>(rule.weights.size());
  const double area_a = area(ta);
  const double area_b = area(tb);
  std::array<std::array<double, 3>, 32> av{};  // x-hat values per node
  std::array<std::array<double, 3>, 32> bv{};
  std::array<Point2, 32> pa{};
  std::array<Point2, 32> pb{};
  std::array<double, 32> wa{};
  std::array<double, 32> wb{};
  for (int q = 0; q < nq; ++q) {
    const double u = rule.nodes[static_cast<size_t>(q)].x;
    const double v = rule.nodes[static_cast<size_t>(q)].y;
    pa[static_cast<size_t>(q)] = map_to_physical(ta, u, v);
    pb[static_cast<size_t>(q)] = map_to_physical(tb, u, v);
    wa[static_cast<size_t>(q)] = rule.weights[static_cast<size_t>(q)] * area_a;
    wb[static_cast<size_t>(q)] = rule.weights[static_cast<size_t>(q)] * area_b;
    for (int i = 0; i < 3; ++i) {
      av[static_cast<size_t>(q)][static_cast<size_t>(i)] = ha.value(i, pa[static_cast<size_t>(q)]);
      bv[static_cast<size_t>(q)][static_cast<size_t>(i)] = hb.value(i, pb[static_cast<size_t>(q)]);
    }
  }
  std::array<double, 32> colw{};   // kernel column sums, x-weighted
  std::array<std::array<double, 3>, 3> aa{}, bb{}, ab{};
  std::array<double, 32> krow{};
  for (int p = 0; p < nq; ++p) {
    double rowsum = 0.0;
    for (int q = 0; q < nq; ++q) {
      const double k = kernel_value(pa[static_cast<size_t>(p)], pb[static_cast<size_t>(q)], s);
      const double wk = wb[static_cast<size_t>(q)] * k;
      krow[static_cast<size_t>(q)] = wk;
      rowsum += wk;
      colw[static_cast<size_t>(q)] += wa[static_cast<size_t>(p)] * k;
    }
    const double wp = wa[static_cast<size_t>(p)];
    for (int i = 0; i < 3; ++i) {
      const double api = av[static_cast<size_t>(p)][static_cast<size_t>(i)];
      for (int j = i; j < 3; ++j)
        aa[static_cast<size_t>(i)][static_cast<size_t>(j)] +=
            wp * rowsum * api * av[static_cast<size_t>(p)][static_cast<size_t>(j)];
    }
    std::array<double, 3> tmp{};
    for (int q = 0; q < nq; ++q)
      for (int j = 0; j < 3; ++j)
        tmp[static_cast<size_t>(j)] +=
            krow[static_cast<size_t>(q)] * bv[static_cast<size_t>(q)][static_cast<size_t>(j)];
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j)
        ab[static_cast<size_t>(i)][static_cast<size_t>(j)] +=
            wp * av[static_cast<size_t>(p)][static_cast<size_t>(i)] * tmp[static_cast<size_t>(j)];
  }
  for (int q = 0; q < nq; ++q)
    for (int i = 0; i < 3; ++i) {
      const double wbqi =
          wb[static_cast<size_t>(q)] * colw[static_cast<size_t>(q)] *
          bv[static_cast<size_t>(q)][static_cast<size_t>(i)];
      for (int j = i; j < 3; ++j)
        bb[static_cast<size_t>(i)][static_cast<size_t>(j)] +=
            wbqi * bv[static_cast<size_t>(q)][static_cast<size_t>(j)];
    }
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      const double aij = (i <= j) ? aa[static_cast<size_t>(i)][static_cast<size_t>(j)]
                                  : aa[static_cast<size_t>(j)][static_cast<size_t>(i)];
      const double bij = (i <= j) ? bb[static_cast<size_t>(i)][static_cast<size_t>(j)]
                                  : bb[static_cast<size_t>(j)][static_cast<size_t>(i)];
      acc[static_cast<size_t>(i)][static_cast<size_t>(j)] += aij;
      acc[static_cast<size_t>(i + 3)][static_cast<size_t>(j + 3)] += bij;
      acc[static_cast<size_t>(i)][static_cast<size_t>(j + 3)] -=
          ab[static_cast<size_t>(i)][static_cast<size_t>(j)];
      acc[static_cast<size_t>(i + 3)][static_cast<size_t>(j)] -=
          ab[static_cast<size_t>(j)][static_cast<size_t>(i)];
    }
}

inline void disjoint_pair_recurse(const Triangle& ta, const Triangle& tb, const AffineHats& ha,
                                  const AffineHats& hb, const TriangleRule& rule, double s,
                                  int depth, std::array<std::array<double, 6>, 6>& acc) {
  const double dist = triangle_distance(ta, tb);
  const double size = std::max(diameter(ta), diameter(tb));
  if (depth <= 0 || dist >= size) {
    disjoint_pair_accumulate(ta, tb, ha, hb, rule, s, acc);
    return;
  }
  const auto ka = split_four(ta);
  const auto kb = split_four(tb);
  for (const auto& a : ka)
    for (const auto& b : kb) disjoint_pair_recurse(a, b, ha, hb, rule, s, depth - 1, acc);
}

inline Triangle permuted(const Triangle& t, const std::array<int, 3>& perm) {
  return Triangle{{t[perm[0]], t[perm[1]], t[perm[2]]}};
}

}  // namespace detail

// Interaction integrals intint (phi_u(x)-phi_u(y)) (phi_v(x)-phi_v(y)) K dy dx
// for all distinct vertices of the pair, in the union layout described by the
// classification. order controls Gauss resolution (points per direction for
// touching pairs, triangle-rule degree for disjoint pairs); disjoint_depth
// bounds the adaptive splitting of close-but-separated pairs.
inline PairInteraction pair_interaction(const Triangle& ta, const Triangle& tb,
                                        const PairClassification& pc, const KernelParams& kp,
                                        int order, int disjoint_depth = 3) {
  detail::check_not_degenerate(ta, "pair_interaction");
  detail::check_not_degenerate(tb, "pair_interaction");
  if (order < 1) throw std::invalid_argument("pair_interaction: order must be >= 1");
  PairInteraction out;
  detail::fill_layout(pc, out);
  const double s = kp.s;

  if (pc.cls == PairClass::Disjoint) {
    const AffineHats ha = AffineHats::from(ta);
    const AffineHats hb = AffineHats::from(tb);
    const TriangleRule& rule = gauss_triangle_cached(std::clamp(order, 1, 10));
    detail::disjoint_pair_recurse(ta, tb, ha, hb, rule, s, disjoint_depth, out.value);
    return out;
  }

  // Touching: work in shared-first charts; hat factors are evaluated at the
  // factored points, where the exact power of the singular coordinates has
  // already been integrated analytically.
  const Triangle tap = detail::permuted(ta, pc.perm_a);
  const Triangle tbp = detail::permuted(tb, pc.perm_b);
  const detail::Chart ca(tap), cb(tbp);
  const AffineHats ha = AffineHats::from(tap);
  const AffineHats hb = AffineHats::from(tbp);
  const int n_union = out.n_union;
  const int n_shared = out.n_shared;

  std::array<std::array<double, 6>, 6> acc{};
  detail::ss_touching_nodes(pc.cls, ca, cb, s, order, [&](const Point2& x, const Point2& y,
                                                          double w) {
    std::array<double, 6> gval{};
    for (int u = 0; u < n_union; ++u) {
      double gu = 0.0;
      if (u < 3) gu += ha.value(u, x);                      // hat lives on Ta' at slot u
      if (u < n_shared) gu -= hb.value(u, y);               // shared slot: also on Tb'
      if (u >= 3) gu -= hb.value(u - 3 + n_shared, y);      // Tb'-only slot
      gval[static_cast<size_t>(u)] = gu;
    }
    for (int u = 0; u < n_union; ++u)
      for (int v = u; v < n_union; ++v)
        acc[static_cast<size_t>(u)][static_cast<size_t>(v)] +=
            w * gval[static_cast<size_t>(u)] * gval[static_cast<size_t>(v)];
  });
  const double scale = 4.0 * area(ta) * area(tb);
  for (int u = 0; u < n_union; ++u)
    for (int v = u; v < n_union; ++v) {
      const double val = scale * acc[static_cast<size_t>(u)][static_cast<size_t>(v)];
      out.value[static_cast<size_t>(u)][static_cast<size_t>(v)] = val;
      out.value[static_cast<size_t>(v)][static_cast<size_t>(u)] = val;
    }
  return out;
}

// Mass-type singular integrals intint phi_i(x) phi_j(x) K(x,y) dy dx for a
// mesh triangle against a touching exterior (band) cell. Only entries whose
// hats vanish on the contact set are finite and computed (shared edge: the
// opposite-vertex hat; shared vertex: the two non-shared hats); the others
// are set to NaN, as the corresponding integrals diverge and must never be
// used (boundary vertices carry no degrees of freedom).
inline std::array<std::array<double, 3>, 3> band_mass_touching(const Triangle& t,
                                                               const Triangle& cell,
                                                               const PairClassification& pc,
                                                               const KernelParams& kp,
                                                               int order) {
  detail::check_not_degenerate(t, "band_mass_touching");
  detail::check_not_degenerate(cell, "band_mass_touching");
  if (pc.cls != PairClass::SharedEdge && pc.cls != PairClass::SharedVertex)
    throw std::logic_error("band_mass_touching: pair must share an edge or a vertex");
  const Triangle tap = detail::permuted(t, pc.perm_a);
  const Triangle tbp = detail::permuted(cell, pc.perm_b);
  const detail::Chart ca(tap), cb(tbp);
  const AffineHats ha = AffineHats::from(tap);
  const int lo = (pc.cls == PairClass::SharedEdge) ? 2 : 1;  // first vanishing local hat

  std::array<std::array<double, 3>, 3> acc{};
  detail::ss_touching_nodes(pc.cls, ca, cb, kp.s, order,
                            [&](const Point2& x, const Point2& y, double w) {
                              (void)y;
                              std::array<double, 3> hv{};
                              for (int i = lo; i < 3; ++i)
                                hv[static_cast<size_t>(i)] = ha.value(i, x);
                              for (int i = lo; i < 3; ++i)
                                for (int j = i; j < 3; ++j)
                                  acc[static_cast<size_t>(i)][static_cast<size_t>(j)] +=
                                      w * hv[static_cast<size_t>(i)] * hv[static_cast<size_t>(j)];
                            });
  const double scale = 4.0 * area(t) * area(cell);
  std::array<std::array<double, 3>, 3> out;
  for (auto& r : out) r.fill(std::numeric_limits<double>::quiet_NaN());
  for (int i = lo; i < 3; ++i)
    for (int j = lo; j < 3; ++j) {
      const int pi = pc.perm_a[static_cast<size_t>(i)];
      const int pj = pc.perm_a[static_cast<size_t>(j)];
      const double val =
          scale * ((i <= j) ? acc[static_cast<size_t>(i)][static_cast<size_t>(j)]
                            : acc[static_cast<size_t>(j)][static_cast<size_t>(i)]);
      out[static_cast<size_t>(pi)][static_cast<size_t>(pj)] = val;
    }
  return out;
}

// Integral of the kernel over a cell, seen from an exterior evaluation point:
// int_cell |x-y|^(-2-2s) dy, with adaptive refinement toward x when the cell
// is close relative to its size (split while dist < split_ratio * diameter).
// x must not lie on the cell's closure.
inline double point_cell_integral(const Point2& x, const Triangle& cell, double s,
                                  const TriangleRule& rule, int depth = 24,
                                  double split_ratio = 1.0) {
  double dist = 1e300;
  if (contains(cell, x)) dist = 0.0;
  for (int e = 0; e < 3 && dist > 0.0; ++e)
    dist = std::min(dist, point_segment_distance(x, cell[e], cell[(e + 1) % 3]));
  const double size = diameter(cell);
  if (depth <= 0 || dist >= split_ratio * size) {
    double acc = 0.0;
    const double a = area(cell);
    for (size_t q = 0; q < rule.weights.size(); ++q) {
      const Point2 y = map_to_physical(cell, rule.nodes[q].x, rule.nodes[q].y);
      acc += rule.weights[q] * kernel_value(x, y, s);
    }
    return acc * a;
  }
  double acc = 0.0;
  for (const auto& child : split_four(cell))
    acc += point_cell_integral(x, child, s, rule, depth - 1, split_ratio);
  return acc;
}

// Integral of the kernel over one circular-segment sliver between an outer
// polygon edge and the circle of radius r_circle, in polar coordinates.
inline double sliver_integral(const Point2& x, const ArcSliver& sl, double r_circle, double s,
                              int order = 5) {
  const GaussRule1D& g = gauss_legendre_cached(order);
  double acc = 0.0;
  const double t0 = sl.theta_mid - sl.half_angle;
  const double dt = 2.0 * sl.half_angle;
  const double xx = x.x * x.x + x.y * x.y;
  for (size_t i = 0; i < g.nodes.size(); ++i) {
    const double th = t0 + dt * g.nodes[i];
    const double rho_c = sliver_chord_radius(sl, r_circle, th);
    const double dr = r_circle - rho_c;
    const double proj = x.x * std::cos(th) + x.y * std::sin(th);
    double inner = 0.0;
    for (size_t j = 0; j < g.nodes.size(); ++j) {
      const double rho = rho_c + dr * g.nodes[j];
      const double r2 = rho * rho - 2.0 * rho * proj + xx;
      inner += g.weights[j] * rho * std::pow(r2, -(1.0 + s));
    }
    acc += g.weights[i] * dr * inner;
  }
  return acc * dt;
}

// Integral of the kernel over the exterior of the circle of radius r_circle:
// psi_tail(x) = int_{|y| > R} |x-y|^(-2-2s) dy. Radially exact reduction to a
// periodic angular integral, evaluated by the trapezoid rule (geometric
// convergence for periodic analytic integrands; the node count grows as the
// point approaches the circle).
inline double tail_integral(const Point2& x, double r_circle, double s, int n_theta = 48) {
  const double rx = norm(x);
  if (!(rx < r_circle)) throw std::invalid_argument("tail_integral: point must be inside");
  const int n = std::max(n_theta, static_cast<int>(40.0 / (1.0 - rx / r_circle)));
  double sum = 0.0;
  for (int k = 0; k < n; ++k) {
    const double th = 2.0 * M_PI * k / n;
    const double st = rx * std::sin(th);
    const double ell = -rx * std::cos(th) + std::sqrt(r_circle * r_circle - st * st);
    sum += std::pow(ell, -2.0 * s);
  }
  return sum * (2.0 * M_PI / n) / (2.0 * s);
}

}  // namespace fraclab
