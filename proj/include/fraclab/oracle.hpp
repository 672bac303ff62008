#pragma once

// Brute-force verification oracles for the pair integrals, independent of the
// composite-coordinate machinery in pair_quadrature.hpp.
//
// Touching pairs are handled by an exact self-similarity reduction: red
// refinement of both triangles produces, at each shared vertex, a child pair
// that is a half-scale similar copy of the parent pair, while every other
// child pair either touches at a strictly smaller shared set or has positive
// distance. Because the kernel is homogeneous of degree -(2+2s), the integral
// over the similar copy equals 2^(2s-2) times the parent integral after
// re-expressing the parent hat functions in child hats (plain affine
// interpolation). This yields a small linear fixed-point system
//
//   I = 2^(2s-2) * sum_k R_k I R_k^T + C,
//
// where C collects vertex-class sub-pairs (recursively reduced the same way)
// and positive-distance sub-pairs (adaptive tensor Gauss). The chain is
// identical -> shared-edge -> shared-vertex -> separated, so nothing singular
// is ever integrated numerically. Error comes only from the Gauss leaves and
// is estimated by repeating the computation at a lower leaf degree.

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <utility>
#include <vector>

#include "fraclab/pair_quadrature.hpp"

namespace fraclab {

struct OracleOptions {
  double tol = 1e-6;     // acceptance threshold for the error estimate
  int leaf_degree = 10;  // Gauss degree on separated leaf pairs (main pass)
  int check_degree = 6;  // leaf degree of the second pass (error estimate)
  int max_depth = 48;    // adaptive splitting depth for separated pairs
};

struct OracleInteraction {
  PairInteraction value;  // union-layout integrals, as in pair_interaction
  bool converged = false;
  double est_rel_error = std::numeric_limits<double>::infinity();
};

namespace detail {

// Red-refinement children, ordered so that child k is the half-scale similar
// copy of t at vertex k (vertex order matching the parent under the
// similarity) and child 3 is the medial triangle under the point reflection
// x -> (v0+v1+v2)/2 - x/2, again with matching vertex order.
inline std::array<Triangle, 4> red_children(const Triangle& t) {
  const Point2 m01{0.5 * (t[0].x + t[1].x), 0.5 * (t[0].y + t[1].y)};
  const Point2 m12{0.5 * (t[1].x + t[2].x), 0.5 * (t[1].y + t[2].y)};
  const Point2 m02{0.5 * (t[0].x + t[2].x), 0.5 * (t[0].y + t[2].y)};
  return {Triangle{{t[0], m01, m02}}, Triangle{{m01, t[1], m12}},
          Triangle{{m02, m12, t[2]}}, Triangle{{m12, m02, m01}}};
}

// Generic slot integrand g_u(x,y) = alpha_u(x) - beta_u(y) with both parts
// expressed in the hat bases of fixed carrier triangles.
struct SlotFuncs {
  int n = 0;
  AffineHats ha, hb;
  std::array<std::array<double, 3>, 6> ca{};  // alpha_u = sum_w ca[u][w] hatA_w
  std::array<std::array<double, 3>, 6> cb{};  // beta_u  = sum_w cb[u][w] hatB_w

  double alpha(int u, const Point2& x) const {
    const auto& c = ca[static_cast<size_t>(u)];
    return c[0] * ha.value(0, x) + c[1] * ha.value(1, x) + c[2] * ha.value(2, x);
  }
  double beta(int u, const Point2& y) const {
    const auto& c = cb[static_cast<size_t>(u)];
    return c[0] * hb.value(0, y) + c[1] * hb.value(1, y) + c[2] * hb.value(2, y);
  }
  std::array<double, 6> operator()(const Point2& x, const Point2& y) const {
    std::array<double, 6> g{};
    for (int u = 0; u < n; ++u) g[static_cast<size_t>(u)] = alpha(u, x) - beta(u, y);
    return g;
  }
};

// Tensor-Gauss contribution of one separated sub-pair for a generic factored
// integrand: acc[u][v] += intint g_u g_v K with g = gfun(x, y). Upper triangle
// only; callers symmetrize.
template <int NV, class GFun>
void oracle_tensor_accumulate(const Triangle& a, const Triangle& b, const TriangleRule& rule,
                              double s, GFun&& gfun,
                              std::array<std::array<double, NV>, NV>& acc) {
  const int nq = static_cast<int>(rule.weights.size());
  const double wa = area(a);
  const double wb = area(b);
  for (int p = 0; p < nq; ++p) {
    const Point2 x = map_to_physical(a, rule.nodes[static_cast<size_t>(p)].x,
                                     rule.nodes[static_cast<size_t>(p)].y);
    const double wp = rule.weights[static_cast<size_t>(p)] * wa;
    for (int q = 0; q < nq; ++q) {
      const Point2 y = map_to_physical(b, rule.nodes[static_cast<size_t>(q)].x,
                                       rule.nodes[static_cast<size_t>(q)].y);
      const double w = wp * rule.weights[static_cast<size_t>(q)] * wb * kernel_value(x, y, s);
      const std::array<double, NV> g = gfun(x, y);
      for (int u = 0; u < NV; ++u) {
        const double gu = g[static_cast<size_t>(u)];
        if (gu == 0.0) continue;
        for (int v = u; v < NV; ++v)
          acc[static_cast<size_t>(u)][static_cast<size_t>(v)] +=
              w * gu * g[static_cast<size_t>(v)];
      }
    }
  }
}

// Adaptive tensor Gauss over a positive-distance pair: split both triangles
// until the pair is separated by at least twice its own size, then apply the
// rule. The factor-two margin keeps the leaf error well below the two-pass
// degree estimate even for the most singular exponents.
template <int NV, class GFun>
void adaptive_pair_gauss(const Triangle& a, const Triangle& b, const TriangleRule& rule,
                         double s, GFun&& gfun, int depth,
                         std::array<std::array<double, NV>, NV>& acc, bool& ok) {
  const double dist = triangle_distance(a, b);
  const double size = std::max(diameter(a), diameter(b));
  if (dist >= 2.0 * size) {
    oracle_tensor_accumulate<NV>(a, b, rule, s, gfun, acc);
    return;
  }
  if (dist <= 0.0 || depth <= 0) {
    ok = false;  // touching pair reached a Gauss leaf: result unreliable
    oracle_tensor_accumulate<NV>(a, b, rule, s, gfun, acc);
    return;
  }
  for (const auto& ca : red_children(a))
    for (const auto& cb : red_children(b))
      adaptive_pair_gauss<NV>(ca, cb, rule, s, gfun, depth - 1, acc, ok);
}

inline void symmetrize6(std::array<std::array<double, 6>, 6>& m, int n) {
  for (int u = 0; u < n; ++u)
    for (int v = u + 1; v < n; ++v)
      m[static_cast<size_t>(v)][static_cast<size_t>(u)] =
          m[static_cast<size_t>(u)][static_cast<size_t>(v)];
}

// Re-expresses one parent slot function on a touching sub-pair (pp, qq) (in
// the sub-pair's shared-first frame with np shared vertices) as a coefficient
// vector over the sub-pair's own slot functions: plain interpolation values
// of the alpha/beta parts at the sub-pair's vertices. Valid because parent
// slot functions vanish on the contact diagonal.
inline std::array<double, 6> reduce_slot(const SlotFuncs& f, int u, const Triangle& pp,
                                         const Triangle& qq, int np, bool& ok) {
  std::array<double, 6> c{};
  const double scale = 1.0 + std::abs(f.alpha(u, pp[0]));
  for (int k = 0; k < np; ++k) {
    const double av = f.alpha(u, pp[k]);
    const double bv = f.beta(u, qq[k]);
    if (std::abs(av - bv) > 1e-9 * scale) ok = false;  // must agree on contact
    c[static_cast<size_t>(k)] = 0.5 * (av + bv);
  }
  int slot = np;
  for (int w = np; w < 3; ++w) c[static_cast<size_t>(slot++)] = f.alpha(u, pp[w]);
  for (int z = np; z < 3; ++z) c[static_cast<size_t>(slot++)] = f.beta(u, qq[z]);
  return c;
}

// Solves X = lambda sum_k R_k X R_k^T + C for symmetric X. The slot basis is
// redundant: the slot functions sum to the zero function, so the physical
// matrix has zero row sums (X v = 0 for v = ones), C has zero row sums, and
// each R_k has unit column sums (R_k^T v = v), which makes the map preserve
// the zero-row-sum subspace. On the complement the map has an eigenvalue
// copies * lambda that crosses 1 (s = 1/2), so the unconstrained system is
// singular there. Solve on the subspace instead: parametrize X by its leading
// (n-1)x(n-1) symmetric block, extend by zero row sums, and match the leading
// block of the equation. Iteration is not an option either: the complement
// modes expand for larger s even though the subspace spectrum stays below 1.
inline std::array<std::array<double, 6>, 6> fp_solve(
    const std::vector<std::array<std::array<double, 6>, 6>>& rmats,
    const std::array<std::array<double, 6>, 6>& c, int n, double lambda,
    const OracleOptions& opt, bool& ok) {
  (void)opt;
  const int nr = n - 1;                 // reduced block dimension
  const int m = nr * (nr + 1) / 2;      // unknowns, at most 10
  std::array<std::pair<int, int>, 10> idx{};
  {
    int t = 0;
    for (int i = 0; i < nr; ++i)
      for (int j = i; j < nr; ++j) idx[static_cast<size_t>(t++)] = {i, j};
  }
  // Extend a leading-block symmetric matrix to zero row and column sums.
  auto embed = [&](std::array<std::array<double, 6>, 6>& x) {
    for (int i = 0; i < nr; ++i) {
      double rs = 0.0;
      for (int j = 0; j < nr; ++j) rs += x[static_cast<size_t>(i)][static_cast<size_t>(j)];
      x[static_cast<size_t>(i)][static_cast<size_t>(nr)] = -rs;
      x[static_cast<size_t>(nr)][static_cast<size_t>(i)] = -rs;
    }
    double tot = 0.0;
    for (int i = 0; i < nr; ++i)
      for (int j = 0; j < nr; ++j) tot += x[static_cast<size_t>(i)][static_cast<size_t>(j)];
    x[static_cast<size_t>(nr)][static_cast<size_t>(nr)] = tot;
  };
  auto apply_t = [&](const std::array<std::array<double, 6>, 6>& xin) {
    std::array<std::array<double, 6>, 6> out{};
    for (const auto& r : rmats) {
      std::array<std::array<double, 6>, 6> rx{};
      for (int i = 0; i < n; ++i)
        for (int k = 0; k < n; ++k) {
          const double rik = r[static_cast<size_t>(i)][static_cast<size_t>(k)];
          if (rik == 0.0) continue;
          for (int j = 0; j < n; ++j)
            rx[static_cast<size_t>(i)][static_cast<size_t>(j)] +=
                rik * xin[static_cast<size_t>(k)][static_cast<size_t>(j)];
        }
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
          double acc = 0.0;
          for (int k = 0; k < n; ++k)
            acc += rx[static_cast<size_t>(i)][static_cast<size_t>(k)] *
                   r[static_cast<size_t>(j)][static_cast<size_t>(k)];
          out[static_cast<size_t>(i)][static_cast<size_t>(j)] += lambda * acc;
        }
    }
    return out;
  };
  // Assemble the reduced system A y = rhs over the leading-block coordinates.
  std::array<std::array<double, 11>, 10> a{};  // augmented [A | rhs]
  for (int col = 0; col < m; ++col) {
    std::array<std::array<double, 6>, 6> basis{};
    const auto [bi, bj] = idx[static_cast<size_t>(col)];
    basis[static_cast<size_t>(bi)][static_cast<size_t>(bj)] = 1.0;
    basis[static_cast<size_t>(bj)][static_cast<size_t>(bi)] = 1.0;
    embed(basis);
    const auto tb = apply_t(basis);
    for (int row = 0; row < m; ++row) {
      const auto [ri, rj] = idx[static_cast<size_t>(row)];
      a[static_cast<size_t>(row)][static_cast<size_t>(col)] =
          basis[static_cast<size_t>(ri)][static_cast<size_t>(rj)] -
          tb[static_cast<size_t>(ri)][static_cast<size_t>(rj)];
    }
  }
  for (int row = 0; row < m; ++row) {
    const auto [ri, rj] = idx[static_cast<size_t>(row)];
    a[static_cast<size_t>(row)][static_cast<size_t>(m)] =
        c[static_cast<size_t>(ri)][static_cast<size_t>(rj)];
  }
  // Gaussian elimination with partial pivoting.
  for (int col = 0; col < m; ++col) {
    int piv = col;
    for (int row = col + 1; row < m; ++row)
      if (std::abs(a[static_cast<size_t>(row)][static_cast<size_t>(col)]) >
          std::abs(a[static_cast<size_t>(piv)][static_cast<size_t>(col)]))
        piv = row;
    if (std::abs(a[static_cast<size_t>(piv)][static_cast<size_t>(col)]) < 1e-12) {
      ok = false;
      break;
    }
    std::swap(a[static_cast<size_t>(piv)], a[static_cast<size_t>(col)]);
    for (int row = col + 1; row < m; ++row) {
      const double fct = a[static_cast<size_t>(row)][static_cast<size_t>(col)] /
                         a[static_cast<size_t>(col)][static_cast<size_t>(col)];
      if (fct == 0.0) continue;
      for (int k = col; k <= m; ++k)
        a[static_cast<size_t>(row)][static_cast<size_t>(k)] -=
            fct * a[static_cast<size_t>(col)][static_cast<size_t>(k)];
    }
  }
  std::array<double, 10> sol{};
  for (int row = m - 1; row >= 0; --row) {
    double acc = a[static_cast<size_t>(row)][static_cast<size_t>(m)];
    for (int k = row + 1; k < m; ++k)
      acc -= a[static_cast<size_t>(row)][static_cast<size_t>(k)] * sol[static_cast<size_t>(k)];
    sol[static_cast<size_t>(row)] = acc / a[static_cast<size_t>(row)][static_cast<size_t>(row)];
  }
  std::array<std::array<double, 6>, 6> x{};
  for (int t = 0; t < m; ++t) {
    const auto [i, j] = idx[static_cast<size_t>(t)];
    x[static_cast<size_t>(i)][static_cast<size_t>(j)] = sol[static_cast<size_t>(t)];
    x[static_cast<size_t>(j)][static_cast<size_t>(i)] = sol[static_cast<size_t>(t)];
  }
  embed(x);
  return x;
}

// Shared-vertex pair in the shared-first frame: 5 slots
// (shared, a1, a2, b1, b2). The child pair at the shared vertex is the
// similar copy; all other child pairs have positive distance.
inline std::array<std::array<double, 6>, 6> oracle_vertex(const Triangle& p, const Triangle& q,
                                                          double s, const TriangleRule& rule,
                                                          const OracleOptions& opt, bool& ok) {
  SlotFuncs f;
  f.n = 5;
  f.ha = AffineHats::from(p);
  f.hb = AffineHats::from(q);
  f.ca[0] = {1, 0, 0};
  f.cb[0] = {1, 0, 0};
  f.ca[1] = {0, 1, 0};
  f.ca[2] = {0, 0, 1};
  f.cb[3] = {0, 1, 0};
  f.cb[4] = {0, 0, 1};

  const auto kp = red_children(p);
  const auto kq = red_children(q);
  std::array<std::array<double, 6>, 6> c{};
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) {
      if (i == 0 && j == 0) continue;
      if (triangle_distance(kp[static_cast<size_t>(i)], kq[static_cast<size_t>(j)]) <= 0.0) {
        ok = false;
        continue;
      }
      adaptive_pair_gauss<6>(kp[static_cast<size_t>(i)], kq[static_cast<size_t>(j)], rule, s, f,
                             opt.max_depth, c, ok);
    }
  symmetrize6(c, 5);

  std::array<std::array<double, 6>, 6> r{};
  for (int u = 0; u < 5; ++u) r[static_cast<size_t>(u)] = reduce_slot(f, u, kp[0], kq[0], 1, ok);
  return fp_solve({r}, c, 5, std::pow(2.0, 2.0 * s - 2.0), opt, ok);
}

// Shared-edge pair in the shared-first frame: 4 slots (e0, e1, a2, b2). The
// two child pairs along the shared edge are similar copies; cross child pairs
// touch at the edge midpoint (reduced through the vertex oracle) or are
// separated.
inline std::array<std::array<double, 6>, 6> oracle_edge(const Triangle& p, const Triangle& q,
                                                        double s, const TriangleRule& rule,
                                                        const OracleOptions& opt, bool& ok) {
  SlotFuncs f;
  f.n = 4;
  f.ha = AffineHats::from(p);
  f.hb = AffineHats::from(q);
  f.ca[0] = {1, 0, 0};
  f.cb[0] = {1, 0, 0};
  f.ca[1] = {0, 1, 0};
  f.cb[1] = {0, 1, 0};
  f.ca[2] = {0, 0, 1};
  f.cb[3] = {0, 0, 1};

  const auto kp = red_children(p);
  const auto kq = red_children(q);
  const double tol = 1e-12 * std::max(diameter(p), diameter(q));
  std::array<std::array<double, 6>, 6> c{};
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) {
      if ((i == 0 && j == 0) || (i == 1 && j == 1)) continue;
      const Triangle& pi = kp[static_cast<size_t>(i)];
      const Triangle& qj = kq[static_cast<size_t>(j)];
      const PairClassification sub = classify_triangles(pi, qj, tol);
      if (sub.cls == PairClass::Disjoint) {
        if (triangle_distance(pi, qj) <= 0.0) {
          ok = false;
          continue;
        }
        adaptive_pair_gauss<6>(pi, qj, rule, s, f, opt.max_depth, c, ok);
      } else if (sub.cls == PairClass::SharedVertex) {
        const Triangle pp = permuted(pi, sub.perm_a);
        const Triangle qq = permuted(qj, sub.perm_b);
        const auto iv = oracle_vertex(pp, qq, s, rule, opt, ok);
        std::array<std::array<double, 6>, 6> red{};
        for (int u = 0; u < 4; ++u)
          red[static_cast<size_t>(u)] = reduce_slot(f, u, pp, qq, 1, ok);
        for (int u = 0; u < 4; ++u)
          for (int v = u; v < 4; ++v) {
            double acc = 0.0;
            for (int a = 0; a < 5; ++a)
              for (int b = 0; b < 5; ++b)
                acc += red[static_cast<size_t>(u)][static_cast<size_t>(a)] *
                       red[static_cast<size_t>(v)][static_cast<size_t>(b)] *
                       iv[static_cast<size_t>(a)][static_cast<size_t>(b)];
            c[static_cast<size_t>(u)][static_cast<size_t>(v)] += acc;
          }
      } else {
        ok = false;  // geometry violates the shared-edge assumption
      }
    }
  symmetrize6(c, 4);

  std::vector<std::array<std::array<double, 6>, 6>> rmats;
  for (int k = 0; k < 2; ++k) {
    std::array<std::array<double, 6>, 6> r{};
    for (int u = 0; u < 4; ++u)
      r[static_cast<size_t>(u)] =
          reduce_slot(f, u, kp[static_cast<size_t>(k)], kq[static_cast<size_t>(k)], 2, ok);
    rmats.push_back(r);
  }
  return fp_solve(rmats, c, 4, std::pow(2.0, 2.0 * s - 2.0), opt, ok);
}

// Identical pair: 3 slots (the triangle's hats). All four diagonal child
// pairs are similar copies (corner similarities and the point reflection);
// cross child pairs share an edge (corner-medial) or a vertex (corner-corner)
// and reduce through the lower-class oracles. Ordered cross pairs (i,j) and
// (j,i) contribute equally because swapping x and y flips every g_u sign.
inline std::array<std::array<double, 6>, 6> oracle_identical(const Triangle& t, double s,
                                                             const TriangleRule& rule,
                                                             const OracleOptions& opt,
                                                             bool& ok) {
  SlotFuncs f;
  f.n = 3;
  f.ha = AffineHats::from(t);
  f.hb = f.ha;
  for (int u = 0; u < 3; ++u) {
    f.ca[static_cast<size_t>(u)][static_cast<size_t>(u)] = 1.0;
    f.cb[static_cast<size_t>(u)][static_cast<size_t>(u)] = 1.0;
  }

  const auto kids = red_children(t);
  const double tol = 1e-12 * diameter(t);
  std::array<std::array<double, 6>, 6> c{};
  for (int i = 0; i < 4; ++i)
    for (int j = i + 1; j < 4; ++j) {
      const Triangle& pi = kids[static_cast<size_t>(i)];
      const Triangle& qj = kids[static_cast<size_t>(j)];
      const PairClassification sub = classify_triangles(pi, qj, tol);
      int nsub = 0;
      if (sub.cls == PairClass::SharedVertex) {
        nsub = 5;
      } else if (sub.cls == PairClass::SharedEdge) {
        nsub = 4;
      } else {
        ok = false;
        continue;
      }
      const Triangle pp = permuted(pi, sub.perm_a);
      const Triangle qq = permuted(qj, sub.perm_b);
      const auto part = (nsub == 5) ? oracle_vertex(pp, qq, s, rule, opt, ok)
                                    : oracle_edge(pp, qq, s, rule, opt, ok);
      std::array<std::array<double, 6>, 6> red{};
      for (int u = 0; u < 3; ++u)
        red[static_cast<size_t>(u)] = reduce_slot(f, u, pp, qq, sub.n_shared, ok);
      for (int u = 0; u < 3; ++u)
        for (int v = u; v < 3; ++v) {
          double acc = 0.0;
          for (int a = 0; a < nsub; ++a)
            for (int b = 0; b < nsub; ++b)
              acc += red[static_cast<size_t>(u)][static_cast<size_t>(a)] *
                     red[static_cast<size_t>(v)][static_cast<size_t>(b)] *
                     part[static_cast<size_t>(a)][static_cast<size_t>(b)];
          c[static_cast<size_t>(u)][static_cast<size_t>(v)] += 2.0 * acc;
        }
    }
  symmetrize6(c, 3);

  std::vector<std::array<std::array<double, 6>, 6>> rmats;
  for (int k = 0; k < 4; ++k) {
    std::array<std::array<double, 6>, 6> r{};
    for (int u = 0; u < 3; ++u)
      r[static_cast<size_t>(u)] =
          reduce_slot(f, u, kids[static_cast<size_t>(k)], kids[static_cast<size_t>(k)], 3, ok);
    rmats.push_back(r);
  }
  return fp_solve(rmats, c, 3, std::pow(2.0, 2.0 * s - 2.0), opt, ok);
}

inline std::array<std::array<double, 6>, 6> oracle_dispatch(const Triangle& tap,
                                                            const Triangle& tbp, PairClass cls,
                                                            double s, int degree,
                                                            const OracleOptions& opt, bool& ok) {
  const TriangleRule& rule = gauss_triangle(degree);
  switch (cls) {
    case PairClass::Identical: return oracle_identical(tap, s, rule, opt, ok);
    case PairClass::SharedEdge: return oracle_edge(tap, tbp, s, rule, opt, ok);
    default: return oracle_vertex(tap, tbp, s, rule, opt, ok);
  }
}

}  // namespace detail

// Same quantity as pair_interaction, computed by the self-similarity scheme
// (touching classes) or two-resolution adaptive tensor Gauss (disjoint).
inline OracleInteraction oracle_pair_interaction(const Triangle& ta, const Triangle& tb,
                                                 const PairClassification& pc,
                                                 const KernelParams& kp,
                                                 const OracleOptions& opt = {}) {
  OracleInteraction out;
  detail::fill_layout(pc, out.value);
  const int n_union = out.value.n_union;
  const double s = kp.s;

  if (pc.cls == PairClass::Disjoint) {
    const AffineHats ha = AffineHats::from(ta);
    const AffineHats hb = AffineHats::from(tb);
    std::array<std::array<double, 6>, 6> hi{}, lo{};
    detail::disjoint_pair_recurse(ta, tb, ha, hb, gauss_triangle(10), s, 6, hi);
    detail::disjoint_pair_recurse(ta, tb, ha, hb, gauss_triangle(8), s, 4, lo);
    double scale = 0.0, diff = 0.0;
    for (int u = 0; u < 6; ++u)
      for (int v = 0; v < 6; ++v) {
        scale = std::max(scale, std::abs(hi[static_cast<size_t>(u)][static_cast<size_t>(v)]));
        diff = std::max(diff, std::abs(hi[static_cast<size_t>(u)][static_cast<size_t>(v)] -
                                       lo[static_cast<size_t>(u)][static_cast<size_t>(v)]));
      }
    out.value.value = hi;
    out.est_rel_error = (scale > 0.0) ? diff / scale : 0.0;
    out.converged = out.est_rel_error <= opt.tol;
    return out;
  }

  const Triangle tap = detail::permuted(ta, pc.perm_a);
  const Triangle tbp = detail::permuted(tb, pc.perm_b);
  bool ok_hi = true, ok_lo = true;
  const auto hi = detail::oracle_dispatch(tap, tbp, pc.cls, s, opt.leaf_degree, opt, ok_hi);
  const auto lo = detail::oracle_dispatch(tap, tbp, pc.cls, s, opt.check_degree, opt, ok_lo);
  double scale = 0.0, diff = 0.0;
  for (int u = 0; u < n_union; ++u)
    for (int v = 0; v < n_union; ++v) {
      out.value.value[static_cast<size_t>(u)][static_cast<size_t>(v)] =
          hi[static_cast<size_t>(u)][static_cast<size_t>(v)];
      scale = std::max(scale, std::abs(hi[static_cast<size_t>(u)][static_cast<size_t>(v)]));
      diff = std::max(diff, std::abs(hi[static_cast<size_t>(u)][static_cast<size_t>(v)] -
                                     lo[static_cast<size_t>(u)][static_cast<size_t>(v)]));
    }
  out.est_rel_error = (scale > 0.0) ? diff / scale : 0.0;
  out.converged = ok_hi && ok_lo && out.est_rel_error <= opt.tol;
  return out;
}

// Oracle counterpart of band_mass_touching: intint phi_i(x) phi_j(x) K over a
// mesh triangle and a touching exterior cell, restricted to hats vanishing on
// the contact set (the other entries diverge and stay NaN). The diagonal
// child pair maps these integrals to 2^(2s-2)/4 of themselves (hats halve on
// the corner child), giving closed-form geometric sums.
struct OracleMass {
  std::array<std::array<double, 3>, 3> value{};
  bool converged = false;
  double est_rel_error = std::numeric_limits<double>::infinity();
};

namespace detail {

// Valid vertex-pair mass entries in the shared-first frame: M[w][z] =
// intint hat_w(x) hat_z(x) K over p x q for w,z in {1,2}.
inline std::array<std::array<double, 3>, 3> oracle_vertex_mass(const Triangle& p,
                                                               const Triangle& q, double s,
                                                               const TriangleRule& rule,
                                                               const OracleOptions& opt,
                                                               bool& ok) {
  const AffineHats ha = AffineHats::from(p);
  auto gfun = [&](const Point2& x, const Point2&) {
    return std::array<double, 3>{0.0, ha.value(1, x), ha.value(2, x)};
  };
  const auto kp = red_children(p);
  const auto kq = red_children(q);
  std::array<std::array<double, 3>, 3> c{};
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) {
      if (i == 0 && j == 0) continue;
      if (triangle_distance(kp[static_cast<size_t>(i)], kq[static_cast<size_t>(j)]) <= 0.0) {
        ok = false;
        continue;
      }
      adaptive_pair_gauss<3>(kp[static_cast<size_t>(i)], kq[static_cast<size_t>(j)], rule, s,
                             gfun, opt.max_depth, c, ok);
    }
  const double geo = 1.0 / (1.0 - std::pow(2.0, 2.0 * s - 4.0));
  std::array<std::array<double, 3>, 3> m{};
  for (int w = 1; w < 3; ++w)
    for (int z = w; z < 3; ++z) {
      m[static_cast<size_t>(w)][static_cast<size_t>(z)] =
          c[static_cast<size_t>(w)][static_cast<size_t>(z)] * geo;
      m[static_cast<size_t>(z)][static_cast<size_t>(w)] =
          m[static_cast<size_t>(w)][static_cast<size_t>(z)];
    }
  return m;
}

// Valid shared-edge mass entry in the shared-first frame: M22 =
// intint hat_2(x)^2 K over p x q.
inline double oracle_edge_mass(const Triangle& p, const Triangle& q, double s,
                               const TriangleRule& rule, const OracleOptions& opt, bool& ok) {
  const AffineHats ha = AffineHats::from(p);
  auto gfun = [&](const Point2& x, const Point2&) {
    return std::array<double, 3>{0.0, 0.0, ha.value(2, x)};
  };
  const auto kp = red_children(p);
  const auto kq = red_children(q);
  const double tol = 1e-12 * std::max(diameter(p), diameter(q));
  double c = 0.0;
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) {
      if ((i == 0 && j == 0) || (i == 1 && j == 1)) continue;
      const Triangle& pi = kp[static_cast<size_t>(i)];
      const Triangle& qj = kq[static_cast<size_t>(j)];
      const PairClassification sub = classify_triangles(pi, qj, tol);
      if (sub.cls == PairClass::Disjoint) {
        if (triangle_distance(pi, qj) <= 0.0) {
          ok = false;
          continue;
        }
        std::array<std::array<double, 3>, 3> acc{};
        adaptive_pair_gauss<3>(pi, qj, rule, s, gfun, opt.max_depth, acc, ok);
        c += acc[2][2];
      } else if (sub.cls == PairClass::SharedVertex) {
        const Triangle pp = permuted(pi, sub.perm_a);
        const Triangle qq = permuted(qj, sub.perm_b);
        // hat_2 restricted to pp in pp's hat basis; it must vanish at the
        // shared vertex for the valid-entry reduction to apply.
        std::array<double, 3> kappa{};
        for (int w = 0; w < 3; ++w) kappa[static_cast<size_t>(w)] = ha.value(2, pp[w]);
        if (std::abs(kappa[0]) > 1e-9) ok = false;
        const auto mv = oracle_vertex_mass(pp, qq, s, rule, opt, ok);
        for (int w = 1; w < 3; ++w)
          for (int z = 1; z < 3; ++z)
            c += kappa[static_cast<size_t>(w)] * kappa[static_cast<size_t>(z)] *
                 mv[static_cast<size_t>(w)][static_cast<size_t>(z)];
      } else {
        ok = false;
      }
    }
  return c / (1.0 - std::pow(2.0, 2.0 * s - 3.0));
}

}  // namespace detail

inline OracleMass oracle_band_mass(const Triangle& t, const Triangle& cell,
                                   const PairClassification& pc, const KernelParams& kp,
                                   const OracleOptions& opt = {}) {
  OracleMass out;
  for (auto& r : out.value) r.fill(std::numeric_limits<double>::quiet_NaN());
  if (pc.cls != PairClass::SharedEdge && pc.cls != PairClass::SharedVertex) return out;
  const Triangle tap = detail::permuted(t, pc.perm_a);
  const Triangle tbp = detail::permuted(cell, pc.perm_b);

  auto run = [&](int degree, bool& ok) {
    const TriangleRule& rule = gauss_triangle(degree);
    std::array<std::array<double, 3>, 3> m{};
    for (auto& r : m) r.fill(std::numeric_limits<double>::quiet_NaN());
    if (pc.cls == PairClass::SharedEdge) {
      m[2][2] = detail::oracle_edge_mass(tap, tbp, kp.s, rule, opt, ok);
    } else {
      const auto mv = detail::oracle_vertex_mass(tap, tbp, kp.s, rule, opt, ok);
      for (int w = 1; w < 3; ++w)
        for (int z = 1; z < 3; ++z)
          m[static_cast<size_t>(w)][static_cast<size_t>(z)] =
              mv[static_cast<size_t>(w)][static_cast<size_t>(z)];
    }
    return m;
  };

  bool ok_hi = true, ok_lo = true;
  const auto hi = run(opt.leaf_degree, ok_hi);
  const auto lo = run(opt.check_degree, ok_lo);
  double scale = 0.0, diff = 0.0;
  const int lo_idx = (pc.cls == PairClass::SharedEdge) ? 2 : 1;
  for (int i = lo_idx; i < 3; ++i)
    for (int j = lo_idx; j < 3; ++j) {
      const double v = hi[static_cast<size_t>(i)][static_cast<size_t>(j)];
      out.value[static_cast<size_t>(pc.perm_a[static_cast<size_t>(i)])]
               [static_cast<size_t>(pc.perm_a[static_cast<size_t>(j)])] = v;
      scale = std::max(scale, std::abs(v));
      diff = std::max(diff, std::abs(v - lo[static_cast<size_t>(i)][static_cast<size_t>(j)]));
    }
  out.est_rel_error = (scale > 0.0) ? diff / scale : 0.0;
  out.converged = ok_hi && ok_lo && out.est_rel_error <= opt.tol;
  return out;
}

// Adaptive oracle for the exterior-of-circle integral, used to validate
// tail_integral independently. Substituting rho = R/t maps the unbounded
// radial direction to t in (0,1]; the t -> 0 endpoint behaves like t^(2s-1)
// and is handled by an analytic head on [0, delta].
inline double oracle_tail_integral(const Point2& x, double r_circle, double s) {
  const GaussRule1D g = gauss_legendre(16);
  const double rx2 = x.x * x.x + x.y * x.y;
  auto radial = [&](double theta) {
    const double proj = x.x * std::cos(theta) + x.y * std::sin(theta);
    // f(t) = (R^2/t^3) * (R^2/t^2 - 2 (R/t) proj + |x|^2)^(-1-s) on [delta, 1]
    auto f = [&](double t) {
      const double rho = r_circle / t;
      const double r2 = rho * rho - 2.0 * rho * proj + rx2;
      return (r_circle * r_circle / (t * t * t)) * std::pow(r2, -(1.0 + s));
    };
    const double delta = 1e-7;
    // analytic head: f(t) ~ R^(-2s) t^(2s-1) for t -> 0
    double acc = std::pow(r_circle, -2.0 * s) * std::pow(delta, 2.0 * s) / (2.0 * s);
    struct Seg {
      double a, b, val;
    };
    auto seg_val = [&](double a, double b) {
      double v = 0.0;
      for (size_t k = 0; k < g.nodes.size(); ++k) v += g.weights[k] * f(a + (b - a) * g.nodes[k]);
      return v * (b - a);
    };
    std::vector<Seg> stack{{delta, 1.0, seg_val(delta, 1.0)}};
    while (!stack.empty()) {
      const Seg sg = stack.back();
      stack.pop_back();
      const double mid = 0.5 * (sg.a + sg.b);
      const double left = seg_val(sg.a, mid);
      const double right = seg_val(mid, sg.b);
      if (std::abs(left + right - sg.val) < 1e-13 * (1.0 + std::abs(left + right)) ||
          sg.b - sg.a < 1e-10) {
        acc += left + right;
      } else {
        stack.push_back({sg.a, mid, left});
        stack.push_back({mid, sg.b, right});
      }
    }
    return acc;
  };
  const int n = 96;
  double sum = 0.0;
  for (int k = 0; k < n; ++k) sum += radial(2.0 * M_PI * k / n);
  return sum * 2.0 * M_PI / n;
}

}  // namespace fraclab
