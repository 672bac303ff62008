#pragma once

// Triangulations of the unit disk with optional boundary grading.
//
// The generator builds concentric vertex rings whose radial widths follow the
// grading law
//
//   width(d) = clamp( h * (c_grading * d)^((mu-1)/mu),  h^mu,  h ),
//
// where d is the distance to the unit circle. For mu = 1 every ring has width
// h (quasi-uniform family); for mu > 1 boundary rings have width h^mu and the
// widths grow toward a quasi-uniform core, so that every element satisfies
// h_T <~ h * dist(T, boundary)^((mu-1)/mu) away from the boundary and
// h_T <~ h^mu at the boundary. Consecutive rings are joined by a circular
// two-pointer merge ("zipper") which produces a conforming strip for any pair
// of per-ring vertex counts; the innermost ring is closed by a fan around the
// center vertex. Boundary vertices lie exactly on the unit circle, so the
// triangulated polygon is inscribed in the disk.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "fraclab/geometry.hpp"

namespace fraclab {

struct GradedFamilyConfig {
  double h = 0.25;         // nominal mesh parameter
  double mu = 1.0;         // grading exponent, >= 1
  double c_grading = 2.0;  // strength factor inside the grading law
};

// Conforming triangle mesh with boundary flags. Triangles are stored CCW.
struct TriMesh {
  std::vector<Point2> vertex;
  std::vector<char> boundary;              // 1 if the vertex is on the boundary
  std::vector<std::array<int, 3>> tri;

  double nominal_h = 0.0;
  double mu = 1.0;

  // Derived connectivity, built by finalize().
  std::vector<std::vector<int>> vertex_tris;  // incident triangles per vertex
  std::vector<int> dof_of_vertex;             // -1 for boundary vertices
  std::vector<int> vertex_of_dof;

  int num_vertices() const { return static_cast<int>(vertex.size()); }
  int num_triangles() const { return static_cast<int>(tri.size()); }
  int num_dofs() const { return static_cast<int>(vertex_of_dof.size()); }

  Triangle triangle(int t) const {
    const auto& ix = tri[static_cast<size_t>(t)];
    return Triangle{{vertex[static_cast<size_t>(ix[0])],
                     vertex[static_cast<size_t>(ix[1])],
                     vertex[static_cast<size_t>(ix[2])]}};
  }

  // Normalizes orientation and rebuilds connectivity and dof numbering.
  void finalize() {
    for (auto& ix : tri) {
      const Triangle t{{vertex[static_cast<size_t>(ix[0])],
                        vertex[static_cast<size_t>(ix[1])],
                        vertex[static_cast<size_t>(ix[2])]}};
      if (signed_area(t) < 0.0) std::swap(ix[1], ix[2]);
    }
    vertex_tris.assign(vertex.size(), {});
    for (int t = 0; t < num_triangles(); ++t)
      for (int k = 0; k < 3; ++k)
        vertex_tris[static_cast<size_t>(tri[static_cast<size_t>(t)][static_cast<size_t>(k)])].push_back(t);
    dof_of_vertex.assign(vertex.size(), -1);
    vertex_of_dof.clear();
    for (int v = 0; v < num_vertices(); ++v) {
      if (!boundary[static_cast<size_t>(v)]) {
        dof_of_vertex[static_cast<size_t>(v)] = static_cast<int>(vertex_of_dof.size());
        vertex_of_dof.push_back(v);
      }
    }
  }
};

namespace detail {

// Ring width prescribed by the grading law at distance d from the boundary.
inline double ring_width(const GradedFamilyConfig& cfg, double d) {
  const double w_min = std::pow(cfg.h, cfg.mu);
  if (cfg.mu <= 1.0) return cfg.h;
  const double expo = (cfg.mu - 1.0) / cfg.mu;
  const double w = cfg.h * std::pow(std::max(cfg.c_grading * d, 0.0), expo);
  return std::clamp(w, w_min, cfg.h);
}

// Triangulates the annular strip between an outer ring and an inner ring of
// vertices (both CCW, arbitrary counts) by an advancing-front merge. At each
// step the frontier edge (outer[ia], inner[ib]) is closed by whichever of the
// two candidate triangles is better shaped, which keeps the strip well
// conditioned even when the ring counts differ by a factor of two.
inline void zipper_strip(const std::vector<Point2>& coords,
                         const std::vector<int>& outer,
                         const std::vector<double>& outer_angle,
                         const std::vector<int>& inner,
                         const std::vector<double>& inner_angle,
                         std::vector<std::array<int, 3>>& out) {
  const int na = static_cast<int>(outer.size());
  const int nb = static_cast<int>(inner.size());
  const double two_pi = 2.0 * M_PI;
  // Start the inner pointer at the vertex angularly closest to outer[0].
  int j0 = 0;
  double best = 1e300;
  for (int j = 0; j < nb; ++j) {
    double d = std::remainder(inner_angle[static_cast<size_t>(j)] - outer_angle[0], two_pi);
    if (std::abs(d) < best) {
      best = std::abs(d);
      j0 = j;
    }
  }
  auto a_id = [&](int i) { return outer[static_cast<size_t>(i % na)]; };
  auto b_id = [&](int j) { return inner[static_cast<size_t>((j0 + j) % nb)]; };
  auto pt = [&](int id) { return coords[static_cast<size_t>(id)]; };
  int ia = 0, ib = 0;
  while (ia < na || ib < nb) {
    bool advance_a;
    if (ia >= na) {
      advance_a = false;
    } else if (ib >= nb) {
      advance_a = true;
    } else {
      // Close the frontier edge with the shorter of the two new diagonals.
      advance_a = distance(pt(a_id(ia + 1)), pt(b_id(ib))) <=
                  distance(pt(a_id(ia)), pt(b_id(ib + 1)));
    }
    if (advance_a) {
      out.push_back({a_id(ia), a_id(ia + 1), b_id(ib)});
      ++ia;
    } else {
      out.push_back({a_id(ia), b_id(ib + 1), b_id(ib)});
      ++ib;
    }
  }
}

}  // namespace detail

// Builds a triangulation of the unit disk for the given mesh-family
// parameters. Boundary vertices lie exactly on the unit circle.
inline TriMesh build_disk_mesh(const GradedFamilyConfig& cfg) {
  if (!(cfg.h > 0.0) || cfg.h > 1.0)
    throw std::invalid_argument("build_disk_mesh: h must be in (0,1]");
  if (cfg.mu < 1.0)
    throw std::invalid_argument("build_disk_mesh: mu must be >= 1");

  TriMesh m;
  m.nominal_h = cfg.h;
  m.mu = cfg.mu;

  // Radial ring positions, from the boundary inward.
  std::vector<double> radii{1.0};
  while (true) {
    const double r = radii.back();
    const double w = detail::ring_width(cfg, 1.0 - r);
    // Close with a center fan once the remaining disk is about one ring wide.
    if (r - w < 0.6 * detail::ring_width(cfg, 1.0 - (r - w))) break;
    radii.push_back(r - w);
  }

  // Per-ring vertex counts: spacing tracks the local ring width, the count
  // never grows inward and never drops below half the previous ring.
  const int nrings = static_cast<int>(radii.size());
  std::vector<int> counts(static_cast<size_t>(nrings));
  for (int k = 0; k < nrings; ++k) {
    const double w = detail::ring_width(cfg, 1.0 - radii[static_cast<size_t>(k)]);
    int ideal = std::max(6, static_cast<int>(std::lround(2.0 * M_PI * radii[static_cast<size_t>(k)] / w)));
    if (k > 0) {
      const int prev = counts[static_cast<size_t>(k - 1)];
      ideal = std::clamp(ideal, std::min(prev, std::max(6, (prev + 1) / 2)), prev);
    }
    counts[static_cast<size_t>(k)] = ideal;
  }

  // Vertices ring by ring; alternate rings get a half-step angular offset so
  // the strips triangulate into well-shaped elements.
  std::vector<std::vector<int>> ring_ids(static_cast<size_t>(nrings));
  std::vector<std::vector<double>> ring_angles(static_cast<size_t>(nrings));
  for (int k = 0; k < nrings; ++k) {
    const int n = counts[static_cast<size_t>(k)];
    const double off = (k % 2 == 0) ? 0.0 : M_PI / n;
    for (int i = 0; i < n; ++i) {
      const double th = off + 2.0 * M_PI * i / n;
      ring_ids[static_cast<size_t>(k)].push_back(m.num_vertices());
      ring_angles[static_cast<size_t>(k)].push_back(th);
      m.vertex.push_back({radii[static_cast<size_t>(k)] * std::cos(th),
                          radii[static_cast<size_t>(k)] * std::sin(th)});
      m.boundary.push_back(k == 0 ? 1 : 0);
    }
  }

  for (int k = 0; k + 1 < nrings; ++k)
    detail::zipper_strip(m.vertex, ring_ids[static_cast<size_t>(k)],
                         ring_angles[static_cast<size_t>(k)],
                         ring_ids[static_cast<size_t>(k + 1)],
                         ring_angles[static_cast<size_t>(k + 1)], m.tri);

  // Center fan.
  const int center = m.num_vertices();
  m.vertex.push_back({0.0, 0.0});
  m.boundary.push_back(0);
  const auto& last = ring_ids[static_cast<size_t>(nrings - 1)];
  const int nl = static_cast<int>(last.size());
  for (int i = 0; i < nl; ++i)
    m.tri.push_back({center, last[static_cast<size_t>(i)], last[static_cast<size_t>((i + 1) % nl)]});

  m.finalize();
  return m;
}

// ---------------------------------------------------------------------------
// Validation
// ---------------------------------------------------------------------------

struct MeshReport {
  bool valid = true;
  std::vector<std::string> errors;
  double max_aspect = 0.0;              // max over T of diameter/inradius
  double max_boundary_radius_dev = 0.0; // max | |v|-1 | over boundary vertices
  double grading_const_boundary = 0.0;  // max h_T / h^mu over boundary elements
  double grading_const_interior = 0.0;  // max h_T / (h d_T^((mu-1)/mu)) inside
  int boundary_edges = 0;

  void fail(std::string msg) {
    valid = false;
    errors.push_back(std::move(msg));
  }
};

// Structural checks (orientation, conformity, boundary consistency) plus
// shape and grading statistics for a disk-family mesh.
inline MeshReport validate_mesh(const TriMesh& m, double sigma_max = 6.0) {
  MeshReport rep;
  if (m.vertex.size() != m.boundary.size())
    rep.fail("vertex/boundary flag size mismatch");

  std::vector<char> used(m.vertex.size(), 0);
  for (int t = 0; t < m.num_triangles(); ++t) {
    const auto& ix = m.tri[static_cast<size_t>(t)];
    for (int k = 0; k < 3; ++k) {
      if (ix[static_cast<size_t>(k)] < 0 || ix[static_cast<size_t>(k)] >= m.num_vertices()) {
        rep.fail("triangle " + std::to_string(t) + " has out-of-range vertex");
        return rep;
      }
      used[static_cast<size_t>(ix[static_cast<size_t>(k)])] = 1;
    }
    const Triangle tri = m.triangle(t);
    if (!(signed_area(tri) > 0.0))
      rep.fail("triangle " + std::to_string(t) + " is degenerate or clockwise");
    rep.max_aspect = std::max(rep.max_aspect, diameter(tri) / inradius(tri));
  }
  for (size_t v = 0; v < used.size(); ++v)
    if (!used[v]) rep.fail("vertex " + std::to_string(v) + " is unused");

  // Edge-to-triangle incidence: interior edges twice, boundary edges once.
  std::map<std::pair<int, int>, int> edge_count;
  for (const auto& ix : m.tri)
    for (int k = 0; k < 3; ++k) {
      int a = ix[static_cast<size_t>(k)], b = ix[static_cast<size_t>((k + 1) % 3)];
      if (a > b) std::swap(a, b);
      ++edge_count[{a, b}];
    }
  std::vector<char> on_boundary_edge(m.vertex.size(), 0);
  for (const auto& [e, c] : edge_count) {
    if (c > 2) rep.fail("edge shared by more than two triangles");
    if (c == 1) {
      ++rep.boundary_edges;
      on_boundary_edge[static_cast<size_t>(e.first)] = 1;
      on_boundary_edge[static_cast<size_t>(e.second)] = 1;
    }
  }
  for (int v = 0; v < m.num_vertices(); ++v)
    if (static_cast<bool>(m.boundary[static_cast<size_t>(v)]) != static_cast<bool>(on_boundary_edge[static_cast<size_t>(v)]))
      rep.fail("vertex " + std::to_string(v) + " boundary flag disagrees with edge structure");

  for (int v = 0; v < m.num_vertices(); ++v)
    if (m.boundary[static_cast<size_t>(v)])
      rep.max_boundary_radius_dev = std::max(
          rep.max_boundary_radius_dev, std::abs(norm(m.vertex[static_cast<size_t>(v)]) - 1.0));

  if (rep.max_aspect > sigma_max)
    rep.fail("shape regularity violated: max aspect " + std::to_string(rep.max_aspect));

  // Grading statistics relative to the family law.
  if (m.nominal_h > 0.0) {
    const double h = m.nominal_h, mu = m.mu;
    const double expo = (mu - 1.0) / mu;
    for (int t = 0; t < m.num_triangles(); ++t) {
      const auto& ix = m.tri[static_cast<size_t>(t)];
      const bool touches = m.boundary[static_cast<size_t>(ix[0])] || m.boundary[static_cast<size_t>(ix[1])] ||
                           m.boundary[static_cast<size_t>(ix[2])];
      const Triangle tri = m.triangle(t);
      const double ht = diameter(tri);
      if (touches) {
        rep.grading_const_boundary =
            std::max(rep.grading_const_boundary, ht / std::pow(h, mu));
      } else {
        const double d = 1.0 - std::max({norm(tri[0]), norm(tri[1]), norm(tri[2])});
        if (d > 0.0)
          rep.grading_const_interior =
              std::max(rep.grading_const_interior, ht / (h * std::pow(d, expo)));
      }
    }
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Pair classification, stars, submeshes
// ---------------------------------------------------------------------------

enum class PairClass { Identical, SharedEdge, SharedVertex, Disjoint };

// Classification of a triangle pair together with vertex permutations that
// put the shared vertices first (in matching order) in both triangles, the
// layout expected by the singular quadrature transforms.
struct PairClassification {
  PairClass cls = PairClass::Disjoint;
  int n_shared = 0;
  std::array<int, 3> perm_a{0, 1, 2};  // local reordering of triangle a
  std::array<int, 3> perm_b{0, 1, 2};
};

inline PairClassification classify_pair(const TriMesh& m, int ta, int tb) {
  PairClassification c;
  if (ta == tb) {
    c.cls = PairClass::Identical;
    c.n_shared = 3;
    return c;
  }
  const auto& a = m.tri[static_cast<size_t>(ta)];
  const auto& b = m.tri[static_cast<size_t>(tb)];
  std::array<int, 3> pa{}, pb{};
  int shared = 0;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      if (a[static_cast<size_t>(i)] == b[static_cast<size_t>(j)]) {
        pa[static_cast<size_t>(shared)] = i;
        pb[static_cast<size_t>(shared)] = j;
        ++shared;
      }
  c.n_shared = shared;
  c.cls = shared == 2   ? PairClass::SharedEdge
          : shared == 1 ? PairClass::SharedVertex
                        : PairClass::Disjoint;
  auto fill_rest = [](std::array<int, 3>& p, int n) {
    std::array<char, 3> seen{0, 0, 0};
    for (int i = 0; i < n; ++i) seen[static_cast<size_t>(p[static_cast<size_t>(i)])] = 1;
    for (int k = 0; k < 3; ++k)
      if (!seen[static_cast<size_t>(k)]) p[static_cast<size_t>(n++)] = k;
  };
  if (shared > 0) {
    fill_rest(pa, shared);
    fill_rest(pb, shared);
    c.perm_a = pa;
    c.perm_b = pb;
  }
  return c;
}

// Coordinate-based variant for triangles that do not live in a common mesh
// (band cells, synthetic test pairs). Vertices closer than tol are shared.
inline PairClassification classify_triangles(const Triangle& a, const Triangle& b, double tol) {
  PairClassification c;
  std::array<int, 3> pa{}, pb{};
  int shared = 0;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      if (distance(a[i], b[j]) <= tol) {
        pa[static_cast<size_t>(shared)] = i;
        pb[static_cast<size_t>(shared)] = j;
        ++shared;
      }
  c.n_shared = shared;
  c.cls = shared == 3   ? PairClass::Identical
          : shared == 2 ? PairClass::SharedEdge
          : shared == 1 ? PairClass::SharedVertex
                        : PairClass::Disjoint;
  auto fill_rest = [](std::array<int, 3>& p, int n) {
    std::array<char, 3> seen{0, 0, 0};
    for (int i = 0; i < n; ++i) seen[static_cast<size_t>(p[static_cast<size_t>(i)])] = 1;
    for (int k = 0; k < 3; ++k)
      if (!seen[static_cast<size_t>(k)]) p[static_cast<size_t>(n++)] = k;
  };
  if (shared > 0 && shared < 3) {
    fill_rest(pa, shared);
    fill_rest(pb, shared);
    c.perm_a = pa;
    c.perm_b = pb;
  }
  return c;
}

// Triangles sharing at least one vertex with t (t included), ascending.
inline std::vector<int> star(const TriMesh& m, int t) {
  std::vector<int> s;
  for (int k = 0; k < 3; ++k)
    for (int u : m.vertex_tris[static_cast<size_t>(m.tri[static_cast<size_t>(t)][static_cast<size_t>(k)])])
      s.push_back(u);
  std::sort(s.begin(), s.end());
  s.erase(std::unique(s.begin(), s.end()), s.end());
  return s;
}

// Triangles whose closure lies inside the closed ball, ascending.
inline std::vector<int> ball_submesh(const TriMesh& m, Point2 center,
                                     double radius) {
  std::vector<int> sel;
  const double tol = radius * (1.0 + 1e-14);
  for (int t = 0; t < m.num_triangles(); ++t) {
    const Triangle tri = m.triangle(t);
    if (distance(tri[0], center) <= tol && distance(tri[1], center) <= tol &&
        distance(tri[2], center) <= tol)
      sel.push_back(t);
  }
  return sel;
}

// Red refinement: each triangle splits into four via edge midpoints. The
// polygonal domain is preserved exactly (new boundary vertices stay on the
// old boundary edges), so the refined space nests the coarse one.
inline TriMesh uniform_refine(const TriMesh& m) {
  TriMesh r;
  r.vertex = m.vertex;
  r.boundary = m.boundary;
  r.nominal_h = 0.5 * m.nominal_h;
  r.mu = m.mu;
  // A midpoint is a boundary vertex iff its edge belongs to one triangle only.
  std::map<std::pair<int, int>, int> edge_count;
  for (const auto& ix : m.tri)
    for (int k = 0; k < 3; ++k) {
      int a = ix[static_cast<size_t>(k)], b = ix[static_cast<size_t>((k + 1) % 3)];
      if (a > b) std::swap(a, b);
      ++edge_count[{a, b}];
    }
  std::map<std::pair<int, int>, int> midpoint;
  auto mid = [&](int a, int b) {
    if (a > b) std::swap(a, b);
    auto it = midpoint.find({a, b});
    if (it != midpoint.end()) return it->second;
    const int id = r.num_vertices();
    r.vertex.push_back(0.5 * (m.vertex[static_cast<size_t>(a)] + m.vertex[static_cast<size_t>(b)]));
    r.boundary.push_back(edge_count[{a, b}] == 1 ? 1 : 0);
    midpoint[{a, b}] = id;
    return id;
  };
  for (const auto& ix : m.tri) {
    const int m01 = mid(ix[0], ix[1]);
    const int m12 = mid(ix[1], ix[2]);
    const int m20 = mid(ix[2], ix[0]);
    r.tri.push_back({ix[0], m01, m20});
    r.tri.push_back({m01, ix[1], m12});
    r.tri.push_back({m20, m12, ix[2]});
    r.tri.push_back({m01, m12, m20});
  }
  r.finalize();
  return r;
}

// ---------------------------------------------------------------------------
// Text serialization
// ---------------------------------------------------------------------------
//
// Format: "dim 2", "nv <count>", one "v <x> <y> <flag>" per vertex with 17
// significant digits, "nt <count>", one "t <i> <j> <k>" per triangle with
// zero-based indices.

inline void write_mesh_text(const TriMesh& m, std::ostream& os) {
  os << "dim 2\n";
  os << "nv " << m.num_vertices() << "\n";
  char buf[96];
  for (int v = 0; v < m.num_vertices(); ++v) {
    std::snprintf(buf, sizeof buf, "v %.16e %.16e %d\n", m.vertex[static_cast<size_t>(v)].x,
                  m.vertex[static_cast<size_t>(v)].y, static_cast<int>(m.boundary[static_cast<size_t>(v)]));
    os << buf;
  }
  os << "nt " << m.num_triangles() << "\n";
  for (const auto& ix : m.tri)
    os << "t " << ix[0] << " " << ix[1] << " " << ix[2] << "\n";
}

inline void save_mesh(const TriMesh& m, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("save_mesh: cannot open " + path);
  write_mesh_text(m, os);
}

inline TriMesh read_mesh_text(std::istream& is) {
  TriMesh m;
  std::string tok;
  int dim = 0;
  if (!(is >> tok >> dim) || tok != "dim" || dim != 2)
    throw std::runtime_error("mesh file: expected 'dim 2'");
  int nv = 0;
  if (!(is >> tok >> nv) || tok != "nv" || nv < 0)
    throw std::runtime_error("mesh file: expected 'nv <count>'");
  m.vertex.resize(static_cast<size_t>(nv));
  m.boundary.resize(static_cast<size_t>(nv));
  for (int v = 0; v < nv; ++v) {
    int flag = 0;
    if (!(is >> tok >> m.vertex[static_cast<size_t>(v)].x >> m.vertex[static_cast<size_t>(v)].y >> flag) ||
        tok != "v")
      throw std::runtime_error("mesh file: bad vertex line");
    m.boundary[static_cast<size_t>(v)] = static_cast<char>(flag != 0);
  }
  int nt = 0;
  if (!(is >> tok >> nt) || tok != "nt" || nt < 0)
    throw std::runtime_error("mesh file: expected 'nt <count>'");
  m.tri.resize(static_cast<size_t>(nt));
  for (int t = 0; t < nt; ++t) {
    auto& ix = m.tri[static_cast<size_t>(t)];
    if (!(is >> tok >> ix[0] >> ix[1] >> ix[2]) || tok != "t")
      throw std::runtime_error("mesh file: bad triangle line");
    for (int k = 0; k < 3; ++k)
      if (ix[static_cast<size_t>(k)] < 0 || ix[static_cast<size_t>(k)] >= nv)
        throw std::runtime_error("mesh file: triangle index out of range");
  }
  m.finalize();
  return m;
}

inline TriMesh load_mesh(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("load_mesh: cannot open " + path);
  return read_mesh_text(is);
}

}  // namespace fraclab
