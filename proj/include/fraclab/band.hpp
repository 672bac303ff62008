#pragma once

// Auxiliary exterior band for the complement integral.
//
// The bilinear form of the fractional Laplacian couples every basis function
// with the complement of the computational polygon through
//   psi(x) = integral over R^2 \ Omega_h of |x-y|^(-2-2s) dy.
// The band decomposes the complement into three exactly-covering pieces:
//   (1) a conforming triangulation of the annulus between the mesh boundary
//       polygon and a polygon inscribed in the circle of radius r_aux,
//   (2) one circular-segment sliver per outer polygon edge, filling the gap
//       between that edge and the circle of radius r_aux,
//   (3) the unbounded exterior |y| > r_aux, handled analytically elsewhere.
// Inner-ring vertices coincide with the mesh boundary vertices, so band
// triangles touching the mesh share full edges/vertices with it and the
// singular interactions can reuse the touching-pair quadrature.

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <stdexcept>
#include <utility>
#include <vector>

#include "fraclab/mesh.hpp"

namespace fraclab {

// Circular segment between one outer-polygon edge and the enclosing circle:
// { (theta, rho) : |theta - theta_mid| < half_angle, chord(theta) < rho < R }.
struct ArcSliver {
  double theta_mid = 0.0;
  double half_angle = 0.0;
};

// Distance from the origin to the sliver's chord along direction theta.
inline double sliver_chord_radius(const ArcSliver& sl, double r_circle, double theta) {
  return r_circle * std::cos(sl.half_angle) / std::cos(theta - sl.theta_mid);
}

// Area of the circular segment cut off by the sliver's chord.
inline double sliver_area(const ArcSliver& sl, double r_circle) {
  const double full = 2.0 * sl.half_angle;
  return 0.5 * r_circle * r_circle * (full - std::sin(full));
}

struct AuxBand {
  std::vector<Point2> vertex;
  std::vector<int> mesh_vertex;  // mesh vertex id for inner-ring vertices, else -1
  std::vector<std::array<int, 3>> tri;
  std::vector<ArcSliver> sliver;
  double r_aux = 0.0;

  int num_vertices() const { return static_cast<int>(vertex.size()); }
  int num_triangles() const { return static_cast<int>(tri.size()); }

  Triangle triangle(int t) const {
    const auto& tt = tri[static_cast<size_t>(t)];
    return Triangle{{vertex[static_cast<size_t>(tt[0])], vertex[static_cast<size_t>(tt[1])],
                     vertex[static_cast<size_t>(tt[2])]}};
  }

  double triangle_area_sum() const {
    double a = 0.0;
    for (int t = 0; t < num_triangles(); ++t) a += area(triangle(t));
    return a;
  }

  double sliver_area_sum() const {
    double a = 0.0;
    for (const auto& sl : sliver) a += sliver_area(sl, r_aux);
    return a;
  }
};

// Boundary vertex ids of a mesh in one closed CCW loop. Boundary edges of
// positively oriented triangles traverse the boundary counterclockwise, so
// chaining them recovers the loop.
inline std::vector<int> boundary_loop(const TriMesh& m) {
  std::map<std::pair<int, int>, int> edge_count;
  for (const auto& t : m.tri)
    for (int e = 0; e < 3; ++e) {
      const int a = t[static_cast<size_t>(e)];
      const int b = t[static_cast<size_t>((e + 1) % 3)];
      edge_count[{std::min(a, b), std::max(a, b)}] += 1;
    }
  std::map<int, int> next;
  for (const auto& t : m.tri)
    for (int e = 0; e < 3; ++e) {
      const int a = t[static_cast<size_t>(e)];
      const int b = t[static_cast<size_t>((e + 1) % 3)];
      if (edge_count.at({std::min(a, b), std::max(a, b)}) == 1) {
        if (next.count(a)) throw std::runtime_error("boundary_loop: branching boundary");
        next[a] = b;
      }
    }
  if (next.empty()) throw std::runtime_error("boundary_loop: mesh has no boundary");
  std::vector<int> loop;
  const int start = next.begin()->first;
  int v = start;
  do {
    loop.push_back(v);
    auto it = next.find(v);
    if (it == next.end()) throw std::runtime_error("boundary_loop: open boundary chain");
    v = it->second;
    if (loop.size() > next.size()) throw std::runtime_error("boundary_loop: non-simple boundary");
  } while (v != start);
  if (loop.size() != next.size())
    throw std::runtime_error("boundary_loop: boundary has several components");
  return loop;
}

// Builds the band between the mesh boundary and the circle of radius r_aux.
// Ring widths start at the boundary edge spacing and grow geometrically, so
// the band resolves the singular zone at mesh resolution but stays small.
inline AuxBand build_aux_band(const TriMesh& m, double r_aux) {
  double max_boundary_ht = 0.0;
  for (int t = 0; t < m.num_triangles(); ++t) {
    const auto& tt = m.tri[static_cast<size_t>(t)];
    bool touches = false;
    for (int k = 0; k < 3; ++k)
      if (m.boundary[static_cast<size_t>(tt[static_cast<size_t>(k)])]) touches = true;
    if (touches) max_boundary_ht = std::max(max_boundary_ht, diameter(m.triangle(t)));
  }
  if (r_aux < 1.0 + 2.0 * max_boundary_ht)
    throw std::invalid_argument("build_aux_band: r_aux too small for the boundary layer");

  AuxBand band;
  band.r_aux = r_aux;

  // Inner ring: the mesh boundary loop, verbatim.
  const std::vector<int> loop = boundary_loop(m);
  const int n0 = static_cast<int>(loop.size());
  std::vector<int> ring;       // band-local ids of the current ring
  std::vector<double> angles;  // unwrapped CCW angles of the current ring
  double spacing0 = 0.0;
  for (int i = 0; i < n0; ++i) {
    const Point2 p = m.vertex[static_cast<size_t>(loop[static_cast<size_t>(i)])];
    ring.push_back(band.num_vertices());
    band.vertex.push_back(p);
    band.mesh_vertex.push_back(loop[static_cast<size_t>(i)]);
    double th = std::atan2(p.y, p.x);
    if (!angles.empty())
      th = angles.back() + std::remainder(th - angles.back(), 2.0 * M_PI);
    angles.push_back(th);
    const Point2 q = m.vertex[static_cast<size_t>(loop[static_cast<size_t>((i + 1) % n0)])];
    spacing0 += distance(p, q);
  }
  spacing0 /= n0;

  // Grow rings outward until the circle of radius r_aux is reached.
  double r = 1.0;
  double w = spacing0;
  int count = n0;
  const double growth = 1.7;
  while (r < r_aux) {
    double r_next = r + w;
    if (r_aux - r_next < 0.45 * w) r_next = r_aux;
    const double w_next = std::min(w * growth, r_aux - 1.0);
    int n_next = std::max(12, static_cast<int>(std::lround(2.0 * M_PI * r_next / w_next)));
    n_next = std::clamp(n_next, std::min(count, std::max(12, (count + 1) / 2)), count);

    std::vector<int> ring_next;
    std::vector<double> angles_next;
    const double off = 2.0 * M_PI * 0.5 / n_next + angles.front();
    for (int i = 0; i < n_next; ++i) {
      const double th = off + 2.0 * M_PI * i / n_next;
      ring_next.push_back(band.num_vertices());
      angles_next.push_back(th);
      band.vertex.push_back({r_next * std::cos(th), r_next * std::sin(th)});
      band.mesh_vertex.push_back(-1);
    }
    detail::zipper_strip(band.vertex, ring_next, angles_next, ring, angles, band.tri);
    ring = std::move(ring_next);
    angles = std::move(angles_next);
    r = r_next;
    w = w_next;
    count = n_next;
  }

  // One sliver per outer-polygon edge.
  const int n_out = static_cast<int>(ring.size());
  for (int i = 0; i < n_out; ++i) {
    ArcSliver sl;
    sl.half_angle = M_PI / n_out;
    sl.theta_mid = angles[static_cast<size_t>(i)] + sl.half_angle;
    band.sliver.push_back(sl);
  }

  for (auto& t : band.tri) {
    const Triangle tt{{band.vertex[static_cast<size_t>(t[0])],
                       band.vertex[static_cast<size_t>(t[1])],
                       band.vertex[static_cast<size_t>(t[2])]}};
    if (signed_area(tt) < 0.0) std::swap(t[1], t[2]);
  }
  return band;
}

// Classification of a mesh triangle against a band triangle, matching shared
// mesh vertices (band inner-ring vertices carry their mesh ids). Returns the
// contact class plus shared-first local permutations, like classify_pair.
inline PairClassification classify_mesh_band_pair(const TriMesh& m, int mesh_tri,
                                                  const AuxBand& band, int band_tri) {
  const auto& ta = m.tri[static_cast<size_t>(mesh_tri)];
  const auto& tb = band.tri[static_cast<size_t>(band_tri)];
  PairClassification pc;
  pc.n_shared = 0;
  std::array<bool, 3> used_a{{false, false, false}};
  std::array<bool, 3> used_b{{false, false, false}};
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      const int mb = band.mesh_vertex[static_cast<size_t>(tb[static_cast<size_t>(j)])];
      if (!used_a[static_cast<size_t>(i)] && !used_b[static_cast<size_t>(j)] && mb >= 0 &&
          mb == ta[static_cast<size_t>(i)]) {
        pc.perm_a[static_cast<size_t>(pc.n_shared)] = i;
        pc.perm_b[static_cast<size_t>(pc.n_shared)] = j;
        used_a[static_cast<size_t>(i)] = true;
        used_b[static_cast<size_t>(j)] = true;
        ++pc.n_shared;
      }
    }
  int ka = pc.n_shared, kb = pc.n_shared;
  for (int i = 0; i < 3; ++i)
    if (!used_a[static_cast<size_t>(i)]) pc.perm_a[static_cast<size_t>(ka++)] = i;
  for (int j = 0; j < 3; ++j)
    if (!used_b[static_cast<size_t>(j)]) pc.perm_b[static_cast<size_t>(kb++)] = j;
  switch (pc.n_shared) {
    case 2: pc.cls = PairClass::SharedEdge; break;
    case 1: pc.cls = PairClass::SharedVertex; break;
    default: pc.cls = PairClass::Disjoint; break;
  }
  return pc;
}

}  // namespace fraclab
