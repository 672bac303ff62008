#pragma once

// Brute-force reference assembly of the fractional stiffness matrix, built
// entirely on the self-similarity / adaptive-refinement oracles. Every entry
// carries a two-resolution error estimate. Intended for coarse meshes only:
// cost grows steeply, but no code path is shared with the production
// singular quadrature beyond the basic Gauss tables and kernel evaluation.

#include <array>
#include <cmath>
#include <vector>

#include "fraclab/assembly.hpp"
#include "fraclab/oracle.hpp"

namespace fraclab {

struct OracleAssembly {
  PackedSymMatrix a;
  bool converged = true;
  double worst_rel_error = 0.0;  // max of the per-piece two-resolution estimates
};

namespace detail {

// Mass-type reference integral over a separated (mesh triangle, cell) pair,
// splitting whichever factor is larger until the gap dominates both sizes.
inline void oracle_mass_sep_accumulate(const Triangle& t, const AffineHats& ht,
                                       const Triangle& cell, const TriangleRule& rule, double s,
                                       double ratio, int depth,
                                       std::array<std::array<double, 3>, 3>& out) {
  const double dist = triangle_distance(t, cell);
  const double size = std::max(diameter(t), diameter(cell));
  if (depth > 0 && dist < ratio * size) {
    if (diameter(t) >= diameter(cell)) {
      for (const auto& child : split_four(t))
        oracle_mass_sep_accumulate(child, ht, cell, rule, s, ratio, depth - 1, out);
    } else {
      for (const auto& child : split_four(cell))
        oracle_mass_sep_accumulate(t, ht, child, rule, s, ratio, depth - 1, out);
    }
    return;
  }
  const double at = area(t);
  const double ac = area(cell);
  for (size_t p = 0; p < rule.weights.size(); ++p) {
    const Point2 x = map_to_physical(t, rule.nodes[p].x, rule.nodes[p].y);
    double inner = 0.0;
    for (size_t q = 0; q < rule.weights.size(); ++q)
      inner += rule.weights[q] *
               kernel_value(x, map_to_physical(cell, rule.nodes[q].x, rule.nodes[q].y), s);
    const double w = rule.weights[p] * at * ac * inner;
    for (int i = 0; i < 3; ++i)
      for (int j = i; j < 3; ++j)
        out[static_cast<size_t>(i)][static_cast<size_t>(j)] +=
            w * ht.value(i, x) * ht.value(j, x);
  }
}

// Kernel integral over one circular sliver by dense polar quadrature,
// independent of the production sliver routine.
inline double oracle_sliver_value(const Point2& x, const ArcSliver& sl, double r_circle,
                                  double s, int panels, int order) {
  const GaussRule1D g = gauss_legendre(order);
  const double cos_ha = std::cos(sl.half_angle);
  double total = 0.0;
  for (int p = 0; p < panels; ++p) {
    const double t0 = -sl.half_angle + 2.0 * sl.half_angle * p / panels;
    const double t1 = -sl.half_angle + 2.0 * sl.half_angle * (p + 1) / panels;
    for (size_t i = 0; i < g.nodes.size(); ++i) {
      const double phi = t0 + (t1 - t0) * g.nodes[i];
      const double theta = sl.theta_mid + phi;
      const double r0 = r_circle * cos_ha / std::cos(phi);
      for (size_t j = 0; j < g.nodes.size(); ++j) {
        const double r = r0 + (r_circle - r0) * g.nodes[j];
        const Point2 y{r * std::cos(theta), r * std::sin(theta)};
        total += g.weights[i] * g.weights[j] * (t1 - t0) * (r_circle - r0) * r *
                 kernel_value(x, y, s);
      }
    }
  }
  return total;
}

}  // namespace detail

// Reference stiffness matrix: pair integrals from oracle_pair_interaction,
// contact complement terms from oracle_band_mass, separated cells from the
// adaptive tensor rule above, slivers from dense polar quadrature, and the
// tail from the oracle tail integral. Each ingredient is evaluated at two
// resolutions; the worst relative disagreement is reported.
inline OracleAssembly oracle_assemble_stiffness(const TriMesh& m, const AuxBand& band,
                                                const KernelParams& kp,
                                                const OracleOptions& opt = {}) {
  const int n = m.num_dofs();
  OracleAssembly out;
  out.a = PackedSymMatrix(n);
  const double half_c = 0.5 * kp.c_ds;
  const int nt = m.num_triangles();

  auto note = [&out, &opt](bool ok, double est) {
    out.worst_rel_error = std::max(out.worst_rel_error, est);
    if (!ok || est > opt.tol) out.converged = false;
  };

  for (int a = 0; a < nt; ++a) {
    const Triangle ta = m.triangle(a);
    const auto& va = m.tri[static_cast<size_t>(a)];
    for (int b = a; b < nt; ++b) {
      const Triangle tb = m.triangle(b);
      const PairClassification pc = classify_pair(m, a, b);
      const OracleInteraction oi = oracle_pair_interaction(ta, tb, pc, kp, opt);
      note(oi.converged, oi.est_rel_error);
      const PairInteraction& pi = oi.value;
      const double w = (a == b) ? half_c : 2.0 * half_c;
      const auto& vb = m.tri[static_cast<size_t>(b)];
      std::array<int, 6> dof{};
      for (int u = 0; u < pi.n_union; ++u) {
        const int vid = pi.a_local[static_cast<size_t>(u)] >= 0
                            ? va[static_cast<size_t>(pi.a_local[static_cast<size_t>(u)])]
                            : vb[static_cast<size_t>(pi.b_local[static_cast<size_t>(u)])];
        dof[static_cast<size_t>(u)] = m.dof_of_vertex[static_cast<size_t>(vid)];
      }
      for (int u = 0; u < pi.n_union; ++u) {
        if (dof[static_cast<size_t>(u)] < 0) continue;
        for (int v = u; v < pi.n_union; ++v) {
          if (dof[static_cast<size_t>(v)] < 0) continue;
          out.a.at(dof[static_cast<size_t>(u)], dof[static_cast<size_t>(v)]) +=
              w * pi.value[static_cast<size_t>(u)][static_cast<size_t>(v)];
        }
      }
    }
  }

  const int nb = band.num_triangles();
  for (int t = 0; t < nt; ++t) {
    const Triangle tt = m.triangle(t);
    const auto& vt = m.tri[static_cast<size_t>(t)];
    const std::array<int, 3> dof = {m.dof_of_vertex[static_cast<size_t>(vt[0])],
                                    m.dof_of_vertex[static_cast<size_t>(vt[1])],
                                    m.dof_of_vertex[static_cast<size_t>(vt[2])]};
    if (dof[0] < 0 && dof[1] < 0 && dof[2] < 0) continue;
    const AffineHats ht = AffineHats::from(tt);
    std::array<std::array<double, 3>, 3> mass{};

    for (int c = 0; c < nb; ++c) {
      const PairClassification pc = classify_mesh_band_pair(m, t, band, c);
      if (pc.cls != PairClass::Disjoint) {
        const OracleMass om = oracle_band_mass(tt, band.triangle(c), pc, kp, opt);
        note(om.converged, om.est_rel_error);
        for (int i = 0; i < 3; ++i)
          for (int j = i; j < 3; ++j) {
            const double v = om.value[static_cast<size_t>(i)][static_cast<size_t>(j)];
            if (!std::isnan(v)) mass[static_cast<size_t>(i)][static_cast<size_t>(j)] += v;
          }
        continue;
      }
      std::array<std::array<double, 3>, 3> hi{}, lo{};
      detail::oracle_mass_sep_accumulate(tt, ht, band.triangle(c), gauss_triangle(10), kp.s,
                                         3.0, 24, hi);
      detail::oracle_mass_sep_accumulate(tt, ht, band.triangle(c), gauss_triangle(7), kp.s,
                                         2.0, 24, lo);
      double scale = 0.0, diff = 0.0;
      for (int i = 0; i < 3; ++i)
        for (int j = i; j < 3; ++j) {
          scale = std::max(scale, std::abs(hi[static_cast<size_t>(i)][static_cast<size_t>(j)]));
          diff = std::max(diff, std::abs(hi[static_cast<size_t>(i)][static_cast<size_t>(j)] -
                                         lo[static_cast<size_t>(i)][static_cast<size_t>(j)]));
          mass[static_cast<size_t>(i)][static_cast<size_t>(j)] +=
              hi[static_cast<size_t>(i)][static_cast<size_t>(j)];
        }
      note(true, scale > 0.0 ? diff / scale : 0.0);
    }

    // Slivers and tail: smooth at this distance, integrated in x at two
    // resolutions over the triangle.
    {
      const double at = area(tt);
      std::array<std::array<double, 3>, 3> smooth[2];
      for (int pass = 0; pass < 2; ++pass) {
        const TriangleRule& xrule = gauss_triangle(pass == 0 ? 10 : 6);
        const int panels = pass == 0 ? 8 : 4;
        const int order = pass == 0 ? 16 : 10;
        smooth[pass] = {};
        for (size_t q = 0; q < xrule.weights.size(); ++q) {
          const Point2 x = map_to_physical(tt, xrule.nodes[q].x, xrule.nodes[q].y);
          double psi = oracle_tail_integral(x, band.r_aux, kp.s);
          for (const ArcSliver& sl : band.sliver)
            psi += detail::oracle_sliver_value(x, sl, band.r_aux, kp.s, panels, order);
          const double w = xrule.weights[q] * at * psi;
          for (int i = 0; i < 3; ++i)
            for (int j = i; j < 3; ++j)
              smooth[pass][static_cast<size_t>(i)][static_cast<size_t>(j)] +=
                  w * ht.value(i, x) * ht.value(j, x);
        }
      }
      double scale = 0.0, diff = 0.0;
      for (int i = 0; i < 3; ++i)
        for (int j = i; j < 3; ++j) {
          const double hi = smooth[0][static_cast<size_t>(i)][static_cast<size_t>(j)];
          scale = std::max(scale, std::abs(hi));
          diff = std::max(diff,
                          std::abs(hi - smooth[1][static_cast<size_t>(i)][static_cast<size_t>(j)]));
          mass[static_cast<size_t>(i)][static_cast<size_t>(j)] += hi;
        }
      note(true, scale > 0.0 ? diff / scale : 0.0);
    }

    for (int i = 0; i < 3; ++i) {
      if (dof[static_cast<size_t>(i)] < 0) continue;
      for (int j = i; j < 3; ++j) {
        if (dof[static_cast<size_t>(j)] < 0) continue;
        out.a.at(dof[static_cast<size_t>(i)], dof[static_cast<size_t>(j)]) +=
            half_c * 2.0 * mass[static_cast<size_t>(i)][static_cast<size_t>(j)];
      }
    }
  }
  return out;
}

}  // namespace fraclab
