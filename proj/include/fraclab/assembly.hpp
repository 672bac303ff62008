#pragma once

// Global stiffness assembly for the integral fractional Laplacian.
//
// The bilinear form splits into an interior double sum and a complement term,
//   a(phi_i, phi_j) = (C_{d,s}/2) [ sum over triangle pairs of the
//     pair-interaction integrals  +  2 * int_Omega phi_i phi_j psi(x) dx ],
// where psi(x) integrates the kernel over the complement of the mesh polygon.
// The complement is covered exactly by the auxiliary band: its triangles and
// circular slivers up to radius R_aux, then the analytic tail beyond. Band
// cells touching a mesh triangle are handled by the singular quadrature
// (band_mass_touching); close-but-separated cells by an adaptive tensor rule;
// the remaining smooth part is evaluated pointwise at the x-quadrature nodes.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "fraclab/band.hpp"
#include "fraclab/pair_quadrature.hpp"

namespace fraclab {

// Symmetric matrix in packed row-major upper-triangle storage:
// entry (i,j), i <= j, lives at i*n - i(i+1)/2 + j.
struct PackedSymMatrix {
  int n = 0;
  std::vector<double> data;

  PackedSymMatrix() = default;
  explicit PackedSymMatrix(int n_)
      : n(n_), data(static_cast<size_t>(n_) * (static_cast<size_t>(n_) + 1) / 2, 0.0) {}

  size_t idx(int i, int j) const {  // requires i <= j
    return static_cast<size_t>(i) * static_cast<size_t>(n) -
           static_cast<size_t>(i) * (static_cast<size_t>(i) + 1) / 2 + static_cast<size_t>(j);
  }
  double& at(int i, int j) {
    if (i > j) std::swap(i, j);
    return data[idx(i, j)];
  }
  double get(int i, int j) const {
    if (i > j) std::swap(i, j);
    return data[idx(i, j)];
  }

  // y = A x (full symmetric product from the packed triangle).
  void multiply(const std::vector<double>& x, std::vector<double>& y) const {
    y.assign(static_cast<size_t>(n), 0.0);
    for (int i = 0; i < n; ++i) {
      const double xi = x[static_cast<size_t>(i)];
      double acc = data[idx(i, i)] * xi;
      for (int j = i + 1; j < n; ++j) {
        const double a = data[idx(i, j)];
        acc += a * x[static_cast<size_t>(j)];
        y[static_cast<size_t>(j)] += a * xi;
      }
      y[static_cast<size_t>(i)] += acc;
    }
  }
};

struct AssemblyConfig {
  int touching_order = 8;       // Gauss order inside the singular transforms
  int near_degree = 5;          // triangle-rule degree for close disjoint pairs
  int disjoint_depth = 5;       // adaptive split depth for close disjoint pairs
  int mid_degree = 4;           // ... at separation ratio >= far_ratio_mid
  int far_degree = 2;           // ... at separation ratio >= far_ratio_far
  double far_ratio_mid = 2.0;
  double far_ratio_far = 4.0;
  int band_touch_order = 8;     // singular order for mesh-band contact pairs
  double band_near_ratio = 1.0; // below: adaptive tensor rule for band cells
  int x_degree = 5;             // x-rule for the smooth complement weight
  int cell_degree = 5;          // y-rule inside the pointwise cell integrals
  double cell_split_ratio = 2.0;  // adaptivity of the pointwise cell integrals
  int sliver_order = 5;
  int load_degree = 4;
  int threads = 0;  // pair-assembly workers; 0 = hardware concurrency.
                    // FRACLAB_THREADS in the environment caps either way.
};

// Accuracy-oriented configuration for validation runs on small meshes; far
// too slow for the convergence studies but near machine-limited in accuracy.
inline AssemblyConfig reference_quadrature_config() {
  AssemblyConfig c;
  c.touching_order = 12;  // regularized tensor rules converge slowly near s = 1
  c.near_degree = 10;
  c.mid_degree = 9;
  c.far_degree = 6;
  c.disjoint_depth = 8;
  c.band_touch_order = 10;
  c.band_near_ratio = 1.5;
  c.x_degree = 10;
  c.cell_degree = 10;
  c.cell_split_ratio = 2.5;
  c.sliver_order = 8;
  return c;
}

struct StiffnessSystem {
  PackedSymMatrix A;            // includes the C_{d,s}/2 normalization
  std::vector<double> F;        // load vector, filled by assemble_load
  KernelParams params;
  std::string mesh_fingerprint;
};

struct SubdomainGram {
  PackedSymMatrix G;            // plain Gagliardo double integral, no C/2
  std::vector<int> dofs;        // global dof ids, ascending
  std::vector<int> tris;        // the subdomain triangle ids
};

// FNV-1a over the vertex coordinates and connectivity, as a cheap identity
// check between a coefficient vector and the mesh it was computed on.
inline std::string mesh_fingerprint(const TriMesh& m) {
  uint64_t h = 14695981039346656037ull;
  auto mix = [&h](const void* p, size_t len) {
    const unsigned char* b = static_cast<const unsigned char*>(p);
    for (size_t k = 0; k < len; ++k) {
      h ^= b[k];
      h *= 1099511628211ull;
    }
  };
  for (const Point2& p : m.vertex) {
    mix(&p.x, sizeof(double));
    mix(&p.y, sizeof(double));
  }
  for (const auto& t : m.tri) mix(t.data(), sizeof(int) * 3);
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return std::string(buf);
}

namespace detail {

// Separation-graded quadrature order for a disjoint pair.
// Worker count for pair assembly: the explicit request, else hardware
// concurrency, in both cases capped by the FRACLAB_THREADS environment
// variable and clamped to a sane range.
inline int resolve_worker_count(int requested) {
  int w = requested;
  if (w <= 0) {
    const unsigned hc = std::thread::hardware_concurrency();
    w = hc > 0 ? static_cast<int>(hc) : 1;
  }
  if (const char* env = std::getenv("FRACLAB_THREADS")) {
    char* end = nullptr;
    const long cap = std::strtol(env, &end, 10);
    if (end != env && cap >= 1 && cap < w) w = static_cast<int>(cap);
  }
  return std::clamp(w, 1, 64);
}

inline int disjoint_order(const AssemblyConfig& cfg, double dist, double size) {
  if (dist >= cfg.far_ratio_far * size) return cfg.far_degree;
  if (dist >= cfg.far_ratio_mid * size) return cfg.mid_degree;
  return cfg.near_degree;
}

// Mass-type integral intint_{T x cell} hat_i(x) hat_j(x) K dy dx for a
// separated pair, with both factors split until the distance dominates the
// sizes. Symmetric 3x3 output in T's local indexing.
inline void mass_disjoint_accumulate(const Triangle& t, const AffineHats& ht,
                                     const Triangle& cell, const TriangleRule& rule, double s,
                                     int depth, double split_ratio,
                                     std::array<std::array<double, 3>, 3>& out) {
  const double dist = triangle_distance(t, cell);
  const double size = std::max(diameter(t), diameter(cell));
  if (depth > 0 && dist < split_ratio * size) {
    if (diameter(t) >= diameter(cell)) {
      for (const auto& child : split_four(t))
        mass_disjoint_accumulate(child, ht, cell, rule, s, depth - 1, split_ratio, out);
    } else {
      for (const auto& child : split_four(cell))
        mass_disjoint_accumulate(t, ht, child, rule, s, depth - 1, split_ratio, out);
    }
    return;
  }
  const double at = area(t);
  const double ac = area(cell);
  const size_t nq = rule.weights.size();
  for (size_t p = 0; p < nq; ++p) {
    const Point2 x = map_to_physical(t, rule.nodes[p].x, rule.nodes[p].y);
    double inner = 0.0;
    for (size_t q = 0; q < nq; ++q) {
      const Point2 y = map_to_physical(cell, rule.nodes[q].x, rule.nodes[q].y);
      inner += rule.weights[q] * kernel_value(x, y, s);
    }
    const double w = rule.weights[p] * at * ac * inner;
    const std::array<double, 3> hv = {ht.value(0, x), ht.value(1, x), ht.value(2, x)};
    for (int i = 0; i < 3; ++i)
      for (int j = i; j < 3; ++j)
        out[static_cast<size_t>(i)][static_cast<size_t>(j)] +=
            w * hv[static_cast<size_t>(i)] * hv[static_cast<size_t>(j)];
  }
}

}  // namespace detail

// Stiffness matrix over the interior degrees of freedom. Loops unordered
// triangle pairs (each off-diagonal pair once, with weight 2), then adds the
// complement term triangle by triangle. Workers share only read-only caches
// and accumulate into private matrices merged in a fixed order, so a run is
// bitwise reproducible for a given worker count and agrees to rounding
// across worker counts.
inline StiffnessSystem assemble_stiffness(const TriMesh& m, const AuxBand& band,
                                          const KernelParams& kp,
                                          const AssemblyConfig& cfg = {}) {
  const int n = m.num_dofs();
  if (n == 0) throw std::invalid_argument("assemble_stiffness: mesh has no interior dofs");
  StiffnessSystem sys;
  sys.A = PackedSymMatrix(n);
  sys.params = kp;
  sys.mesh_fingerprint = mesh_fingerprint(m);
  const double half_c = 0.5 * kp.c_ds;
  const int nt = m.num_triangles();

  // Geometry caches for the separation test.
  std::vector<double> diam(static_cast<size_t>(nt));
  std::vector<Point2> center(static_cast<size_t>(nt));
  std::vector<double> radius(static_cast<size_t>(nt));
  for (int t = 0; t < nt; ++t) {
    const Triangle tt = m.triangle(t);
    diam[static_cast<size_t>(t)] = diameter(tt);
    center[static_cast<size_t>(t)] =
        Point2{(tt[0].x + tt[1].x + tt[2].x) / 3.0, (tt[0].y + tt[1].y + tt[2].y) / 3.0};
    radius[static_cast<size_t>(t)] = diam[static_cast<size_t>(t)];  // loose cover bound
  }

  // Interior double integral: unordered pairs, split over workers by the
  // outer triangle index.
  auto pair_rows = [&](int first, int stride, PackedSymMatrix& acc) {
    for (int a = first; a < nt; a += stride) {
      const Triangle ta = m.triangle(a);
      const auto& va = m.tri[static_cast<size_t>(a)];
      for (int b = a; b < nt; ++b) {
        const Triangle tb = m.triangle(b);
        const PairClassification pc = classify_pair(m, a, b);
        int order;
        if (pc.cls == PairClass::Disjoint) {
          const double size = std::max(diam[static_cast<size_t>(a)], diam[static_cast<size_t>(b)]);
          const double lower = distance(center[static_cast<size_t>(a)], center[static_cast<size_t>(b)]) -
                               radius[static_cast<size_t>(a)] - radius[static_cast<size_t>(b)];
          const double dist = (lower >= cfg.far_ratio_far * size) ? lower : triangle_distance(ta, tb);
          order = detail::disjoint_order(cfg, dist, size);
        } else {
          order = cfg.touching_order;
        }
        const PairInteraction pi = pair_interaction(ta, tb, pc, kp, order, cfg.disjoint_depth);
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
            acc.at(dof[static_cast<size_t>(u)], dof[static_cast<size_t>(v)]) +=
                w * pi.value[static_cast<size_t>(u)][static_cast<size_t>(v)];
          }
        }
      }
    }
  };

  // Complement term: 2 * int_T phi_i phi_j psi(x) dx per triangle, with the
  // band cells split into touching (singular), near (adaptive tensor), and
  // far (pointwise smooth weight) sets relative to T.
  const int nb = band.num_triangles();
  std::vector<double> cell_diam(static_cast<size_t>(nb));
  for (int c = 0; c < nb; ++c) cell_diam[static_cast<size_t>(c)] = diameter(band.triangle(c));
  const TriangleRule& xrule = gauss_triangle_cached(cfg.x_degree);
  const TriangleRule& crule = gauss_triangle_cached(cfg.cell_degree);

  auto complement_rows = [&](int first, int stride, PackedSymMatrix& acc) {
    std::vector<char> skip(static_cast<size_t>(nb));
    for (int t = first; t < nt; t += stride) {
      const Triangle tt = m.triangle(t);
      const auto& vt = m.tri[static_cast<size_t>(t)];
      const std::array<int, 3> dof = {m.dof_of_vertex[static_cast<size_t>(vt[0])],
                                      m.dof_of_vertex[static_cast<size_t>(vt[1])],
                                      m.dof_of_vertex[static_cast<size_t>(vt[2])]};
      if (dof[0] < 0 && dof[1] < 0 && dof[2] < 0) continue;
      const AffineHats ht = AffineHats::from(tt);
      std::array<std::array<double, 3>, 3> mass{};  // intint phi_i phi_j K, local

      bool on_boundary = false;
      for (int k = 0; k < 3; ++k)
        if (m.boundary[static_cast<size_t>(vt[static_cast<size_t>(k)])]) on_boundary = true;

      std::fill(skip.begin(), skip.end(), 0);
      for (int c = 0; c < nb; ++c) {
        // Identify touching and near cells; everything else joins the smooth set.
        if (on_boundary) {
          const PairClassification pc = classify_mesh_band_pair(m, t, band, c);
          if (pc.cls != PairClass::Disjoint) {
            skip[static_cast<size_t>(c)] = 1;
            const auto bm = band_mass_touching(tt, band.triangle(c), pc, kp, cfg.band_touch_order);
            for (int i = 0; i < 3; ++i)
              for (int j = i; j < 3; ++j) {
                const double v = bm[static_cast<size_t>(i)][static_cast<size_t>(j)];
                if (!std::isnan(v)) mass[static_cast<size_t>(i)][static_cast<size_t>(j)] += v;
                // NaN entries involve hats of contact vertices; those vertices
                // lie on the domain boundary and carry no dof.
              }
            continue;
          }
        }
        const Triangle cell = band.triangle(c);
        const double size = std::max(diam[static_cast<size_t>(t)], cell_diam[static_cast<size_t>(c)]);
        const double lower = distance(center[static_cast<size_t>(t)],
                                      Point2{(cell[0].x + cell[1].x + cell[2].x) / 3.0,
                                             (cell[0].y + cell[1].y + cell[2].y) / 3.0}) -
                             radius[static_cast<size_t>(t)] - cell_diam[static_cast<size_t>(c)];
        if (lower < cfg.band_near_ratio * size &&
            triangle_distance(tt, cell) < cfg.band_near_ratio * size) {
          skip[static_cast<size_t>(c)] = 1;
          detail::mass_disjoint_accumulate(tt, ht, cell, crule, kp.s, 24, cfg.cell_split_ratio, mass);
        }
      }

      // Smooth complement weight at the x-nodes: far cells + slivers + tail.
      const double at = area(tt);
      for (size_t q = 0; q < xrule.weights.size(); ++q) {
        const Point2 x = map_to_physical(tt, xrule.nodes[q].x, xrule.nodes[q].y);
        double psi = tail_integral(x, band.r_aux, kp.s);
        for (const ArcSliver& sl : band.sliver)
          psi += sliver_integral(x, sl, band.r_aux, kp.s, cfg.sliver_order);
        for (int c = 0; c < nb; ++c) {
          if (skip[static_cast<size_t>(c)]) continue;
          psi += point_cell_integral(x, band.triangle(c), kp.s, crule, 24, cfg.cell_split_ratio);
        }
        const double w = xrule.weights[q] * at * psi;
        const std::array<double, 3> hv = {ht.value(0, x), ht.value(1, x), ht.value(2, x)};
        for (int i = 0; i < 3; ++i)
          for (int j = i; j < 3; ++j)
            mass[static_cast<size_t>(i)][static_cast<size_t>(j)] +=
                w * hv[static_cast<size_t>(i)] * hv[static_cast<size_t>(j)];
      }

      for (int i = 0; i < 3; ++i) {
        if (dof[static_cast<size_t>(i)] < 0) continue;
        for (int j = i; j < 3; ++j) {
          if (dof[static_cast<size_t>(j)] < 0) continue;
          acc.at(dof[static_cast<size_t>(i)], dof[static_cast<size_t>(j)]) +=
              half_c * 2.0 * mass[static_cast<size_t>(i)][static_cast<size_t>(j)];
        }
      }
    }
  };

  const int workers = detail::resolve_worker_count(cfg.threads);
  if (workers <= 1) {
    pair_rows(0, 1, sys.A);
    complement_rows(0, 1, sys.A);
  } else {
    std::vector<PackedSymMatrix> buf(static_cast<size_t>(workers - 1));
    for (auto& b : buf) b = PackedSymMatrix(n);
    std::vector<std::exception_ptr> errs(static_cast<size_t>(workers));
    std::vector<std::thread> pool;
    pool.reserve(static_cast<size_t>(workers - 1));
    for (int w = 1; w < workers; ++w)
      pool.emplace_back([&, w] {
        try {
          pair_rows(w, workers, buf[static_cast<size_t>(w - 1)]);
          complement_rows(w, workers, buf[static_cast<size_t>(w - 1)]);
        } catch (...) {
          errs[static_cast<size_t>(w)] = std::current_exception();
        }
      });
    try {
      pair_rows(0, workers, sys.A);
      complement_rows(0, workers, sys.A);
    } catch (...) {
      errs[0] = std::current_exception();
    }
    for (auto& th : pool) th.join();
    for (const auto& e : errs)
      if (e) std::rethrow_exception(e);
    for (const auto& b : buf)
      for (size_t i = 0; i < sys.A.data.size(); ++i) sys.A.data[i] += b.data[i];
  }
  return sys;
}

// Load vector F_i = int_Omega f phi_i by per-triangle Gauss quadrature.
template <class F>
std::vector<double> assemble_load(const TriMesh& m, F&& f, int degree = 4) {
  std::vector<double> load(static_cast<size_t>(m.num_dofs()), 0.0);
  const TriangleRule& rule = gauss_triangle(degree);
  for (int t = 0; t < m.num_triangles(); ++t) {
    const Triangle tt = m.triangle(t);
    const auto& vt = m.tri[static_cast<size_t>(t)];
    const double at = area(tt);
    for (size_t q = 0; q < rule.weights.size(); ++q) {
      const double u = rule.nodes[q].x, v = rule.nodes[q].y;
      const Point2 x = map_to_physical(tt, u, v);
      const double w = rule.weights[q] * at * f(x);
      const std::array<double, 3> hats = {1.0 - u - v, u, v};
      for (int k = 0; k < 3; ++k) {
        const int d = m.dof_of_vertex[static_cast<size_t>(vt[static_cast<size_t>(k)])];
        if (d >= 0) load[static_cast<size_t>(d)] += w * hats[static_cast<size_t>(k)];
      }
    }
  }
  return load;
}

// Gram matrix of the plain Gagliardo seminorm over a triangle subdomain D:
// G_ij = intint_{D x D} (phi_i(x)-phi_i(y))(phi_j(x)-phi_j(y)) K dy dx, over
// the dofs whose hats meet D. No C_{d,s}/2 factor and no complement term.
inline SubdomainGram assemble_subdomain_gram(const TriMesh& m, const std::vector<int>& tris,
                                             const KernelParams& kp,
                                             const AssemblyConfig& cfg = {}) {
  if (tris.empty()) throw std::invalid_argument("assemble_subdomain_gram: empty subdomain");
  SubdomainGram out;
  out.tris = tris;
  std::vector<int> local_of_dof(static_cast<size_t>(m.num_dofs()), -1);
  for (int t : tris)
    for (int k = 0; k < 3; ++k) {
      const int d = m.dof_of_vertex[static_cast<size_t>(
          m.tri[static_cast<size_t>(t)][static_cast<size_t>(k)])];
      if (d >= 0 && local_of_dof[static_cast<size_t>(d)] < 0) {
        local_of_dof[static_cast<size_t>(d)] = 0;  // mark
      }
    }
  for (int d = 0; d < m.num_dofs(); ++d)
    if (local_of_dof[static_cast<size_t>(d)] == 0) {
      local_of_dof[static_cast<size_t>(d)] = static_cast<int>(out.dofs.size());
      out.dofs.push_back(d);
    }
  out.G = PackedSymMatrix(static_cast<int>(out.dofs.size()));

  const int np = static_cast<int>(tris.size());
  for (int ia = 0; ia < np; ++ia) {
    const int a = tris[static_cast<size_t>(ia)];
    const Triangle ta = m.triangle(a);
    const double da = diameter(ta);
    const auto& va = m.tri[static_cast<size_t>(a)];
    for (int ib = ia; ib < np; ++ib) {
      const int b = tris[static_cast<size_t>(ib)];
      const Triangle tb = m.triangle(b);
      const PairClassification pc = classify_pair(m, a, b);
      int order = cfg.touching_order;
      if (pc.cls == PairClass::Disjoint)
        order = detail::disjoint_order(cfg, triangle_distance(ta, tb),
                                       std::max(da, diameter(tb)));
      const PairInteraction pi = pair_interaction(ta, tb, pc, kp, order, cfg.disjoint_depth);
      const double w = (a == b) ? 1.0 : 2.0;
      const auto& vb = m.tri[static_cast<size_t>(b)];
      std::array<int, 6> loc{};
      for (int u = 0; u < pi.n_union; ++u) {
        const int vid = pi.a_local[static_cast<size_t>(u)] >= 0
                            ? va[static_cast<size_t>(pi.a_local[static_cast<size_t>(u)])]
                            : vb[static_cast<size_t>(pi.b_local[static_cast<size_t>(u)])];
        const int d = m.dof_of_vertex[static_cast<size_t>(vid)];
        loc[static_cast<size_t>(u)] = d >= 0 ? local_of_dof[static_cast<size_t>(d)] : -1;
      }
      for (int u = 0; u < pi.n_union; ++u) {
        if (loc[static_cast<size_t>(u)] < 0) continue;
        for (int v = u; v < pi.n_union; ++v) {
          if (loc[static_cast<size_t>(v)] < 0) continue;
          out.G.at(loc[static_cast<size_t>(u)], loc[static_cast<size_t>(v)]) +=
              w * pi.value[static_cast<size_t>(u)][static_cast<size_t>(v)];
        }
      }
    }
  }
  return out;
}

}  // namespace fraclab
