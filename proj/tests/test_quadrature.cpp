#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <limits>

#include "fraclab/oracle.hpp"

using namespace fraclab;

namespace {

// Largest entrywise deviation between two union-layout interaction matrices,
// relative to the largest entry of the first.
double rel_max_diff(const PairInteraction& ref, const PairInteraction& other) {
  double scale = 0.0, diff = 0.0;
  for (int u = 0; u < ref.n_union; ++u)
    for (int v = 0; v < ref.n_union; ++v) {
      scale = std::max(scale, std::abs(ref.value[static_cast<size_t>(u)][static_cast<size_t>(v)]));
      diff = std::max(diff,
                      std::abs(ref.value[static_cast<size_t>(u)][static_cast<size_t>(v)] -
                               other.value[static_cast<size_t>(u)][static_cast<size_t>(v)]));
    }
  return diff / scale;
}

const Triangle kBase{{{{0, 0}, {1, 0}, {0.3, 0.8}}}};
const Triangle kEdgeMate{{{{1, 0}, {0, 0}, {0.6, -0.7}}}};
const Triangle kVertexMate{{{{-0.2, -0.6}, {0, 0}, {-0.9, -0.3}}}};
const Triangle kFarMate{{{{2, 0.1}, {3, 0.2}, {2.4, 1.1}}}};

}  // namespace

TEST_CASE("kernel normalization constant matches the closed form") {
  // 2^{2s} s Gamma(s+1) / (pi Gamma(1-s)) in d = 2; at s = 1/2 this is 1/(2 pi).
  CHECK(KernelParams::make(0.5).c_ds == Catch::Approx(1.0 / (2.0 * M_PI)).epsilon(1e-14));
  CHECK(KernelParams::make(0.25).c_ds ==
        Catch::Approx(0.0832419838754250654889402178181).epsilon(1e-14));
  CHECK(KernelParams::make(0.75).c_ds ==
        Catch::Approx(0.171167129690552342925202071994).epsilon(1e-14));
}

TEST_CASE("disjoint pair integrals match machine-precision references") {
  // 200^2-point product-rule references (independently computed) for the pair
  // (0,0),(1,0),(0,1) vs (2,0),(3,0),(2,1) at s = 1/2, union layout with the
  // first triangle's hats in slots 0-2 and the second's in slots 3-5.
  const Triangle ta{{{{0, 0}, {1, 0}, {0, 1}}}};
  const Triangle tb{{{{2, 0}, {3, 0}, {2, 1}}}};
  const PairClassification pc = classify_triangles(ta, tb, 1e-12);
  REQUIRE(pc.cls == PairClass::Disjoint);
  const KernelParams kp = KernelParams::make(0.5);
  const PairInteraction pi = pair_interaction(ta, tb, pc, kp, 8);

  struct Ref { int u, v; double value; };
  const Ref refs[] = {
      {0, 0, 4.5917821155868196e-03},  {0, 3, -3.8023692049301222e-03},
      {1, 4, -3.9307915003719092e-03}, {2, 5, -3.7399566843713725e-03},
      {3, 3, 7.2564331255896633e-03},  {1, 1, 8.9320311537856752e-03},
      {5, 5, 6.7032700134396330e-03},  {0, 5, -3.6234755625024055e-03},
  };
  for (const Ref& r : refs) {
    INFO("entry (" << r.u << ", " << r.v << ")");
    CHECK(pi.value[static_cast<size_t>(r.u)][static_cast<size_t>(r.v)] ==
          Catch::Approx(r.value).epsilon(1e-8));
    CHECK(pi.value[static_cast<size_t>(r.v)][static_cast<size_t>(r.u)] ==
          pi.value[static_cast<size_t>(r.u)][static_cast<size_t>(r.v)]);
  }
}

TEST_CASE("touching pair integrals match the self-similarity oracle") {
  struct Case { const char* name; Triangle b; };
  const Case cases[] = {
      {"identical", kBase},
      {"shared edge", kEdgeMate},
      {"shared vertex", kVertexMate},
  };
  OracleOptions opt;
  opt.tol = 1e-6;
  for (double s : {0.3, 0.5, 0.75}) {
    const KernelParams kp = KernelParams::make(s);
    for (const Case& c : cases) {
      INFO(c.name << " at s = " << s);
      const PairClassification pc = classify_triangles(kBase, c.b, 1e-12);
      const OracleInteraction oi = oracle_pair_interaction(kBase, c.b, pc, kp, opt);
      REQUIRE(oi.converged);
      CHECK(oi.est_rel_error <= 1e-6);
      const PairInteraction pi = pair_interaction(kBase, c.b, pc, kp, 10);
      CHECK(rel_max_diff(oi.value, pi) <= 1e-6);
      // Diagonal entries are squared-slot integrals, hence positive.
      for (int u = 0; u < pi.n_union; ++u)
        CHECK(pi.value[static_cast<size_t>(u)][static_cast<size_t>(u)] > 0.0);
    }
  }
}

TEST_CASE("pair integrals are symmetric under operand swap") {
  const KernelParams kp = KernelParams::make(0.62);
  struct Case { const char* name; Triangle b; double tol; };
  // The shared-edge transform family is not node-symmetric under the swap, so
  // its tolerance is a quadrature accuracy, not a rounding one.
  const Case cases[] = {
      {"identical", kBase, 1e-12},
      {"shared edge", kEdgeMate, 1e-6},
      {"shared vertex", kVertexMate, 1e-12},
      {"disjoint", kFarMate, 1e-12},
  };
  for (const Case& c : cases) {
    INFO(c.name);
    const PairClassification pab = classify_triangles(kBase, c.b, 1e-12);
    const PairClassification pba = classify_triangles(c.b, kBase, 1e-12);
    const PairInteraction iab = pair_interaction(kBase, c.b, pab, kp, 8);
    const PairInteraction iba = pair_interaction(c.b, kBase, pba, kp, 8);
    REQUIRE(iab.n_union == iba.n_union);

    // Identify slots across the two layouts by the vertex they carry.
    std::array<int, 6> map{};
    for (int u = 0; u < iab.n_union; ++u) {
      const Point2 pu = iab.a_local[static_cast<size_t>(u)] >= 0
                            ? kBase[iab.a_local[static_cast<size_t>(u)]]
                            : c.b[iab.b_local[static_cast<size_t>(u)]];
      map[static_cast<size_t>(u)] = -1;
      for (int w = 0; w < iba.n_union; ++w) {
        const Point2 pw = iba.a_local[static_cast<size_t>(w)] >= 0
                              ? c.b[iba.a_local[static_cast<size_t>(w)]]
                              : kBase[iba.b_local[static_cast<size_t>(w)]];
        if (pu.x == pw.x && pu.y == pw.y) map[static_cast<size_t>(u)] = w;
      }
      REQUIRE(map[static_cast<size_t>(u)] >= 0);
    }
    double scale = 0.0, diff = 0.0;
    for (int u = 0; u < iab.n_union; ++u)
      for (int v = 0; v < iab.n_union; ++v) {
        const double x = iab.value[static_cast<size_t>(u)][static_cast<size_t>(v)];
        const double y = iba.value[static_cast<size_t>(map[static_cast<size_t>(u)])]
                                  [static_cast<size_t>(map[static_cast<size_t>(v)])];
        scale = std::max(scale, std::abs(x));
        diff = std::max(diff, std::abs(x - y));
      }
    CHECK(diff <= c.tol * scale);
  }
}

TEST_CASE("pair integrals scale exactly under dilation, translation, rotation") {
  struct Case { const char* name; Triangle b; };
  const Case cases[] = {
      {"identical", kBase},
      {"shared edge", kEdgeMate},
      {"shared vertex", kVertexMate},
      {"disjoint", kFarMate},
  };
  const double lam = 2.37;
  const auto dilate = [&](Triangle t) {
    for (auto& p : t.v) p = Point2{lam * p.x + 0.4, lam * p.y - 0.3};
    return t;
  };
  const auto rotate = [](Triangle t) {
    const double c = std::cos(0.7), s = std::sin(0.7);
    for (auto& p : t.v) p = Point2{c * p.x - s * p.y, s * p.x + c * p.y};
    return t;
  };
  for (double s : {0.35, 0.5, 0.8}) {
    const KernelParams kp = KernelParams::make(s);
    const double factor = std::pow(lam, 2.0 - 2.0 * s);
    for (const Case& c : cases) {
      INFO(c.name << " at s = " << s);
      const PairClassification pc = classify_triangles(kBase, c.b, 1e-12);
      const PairInteraction base = pair_interaction(kBase, c.b, pc, kp, 8);
      const PairInteraction big = pair_interaction(dilate(kBase), dilate(c.b), pc, kp, 8);
      const PairInteraction rot = pair_interaction(rotate(kBase), rotate(c.b), pc, kp, 8);
      double scale = 0.0, ddil = 0.0, drot = 0.0;
      for (int u = 0; u < base.n_union; ++u)
        for (int v = 0; v < base.n_union; ++v) {
          const double x = base.value[static_cast<size_t>(u)][static_cast<size_t>(v)];
          scale = std::max(scale, std::abs(factor * x));
          ddil = std::max(ddil, std::abs(big.value[static_cast<size_t>(u)][static_cast<size_t>(v)] -
                                         factor * x));
          drot = std::max(drot, std::abs(rot.value[static_cast<size_t>(u)][static_cast<size_t>(v)] -
                                         x));
        }
      CHECK(ddil <= 1e-12 * scale);
      CHECK(drot <= 1e-12 * scale / factor);
    }
  }
}

TEST_CASE("singular quadrature order ladder converges") {
  struct Case { const char* name; Triangle b; };
  const Case cases[] = {
      {"identical", kBase},
      {"shared edge", kEdgeMate},
      {"shared vertex", kVertexMate},
  };
  const KernelParams kp = KernelParams::make(0.5);
  for (const Case& c : cases) {
    INFO(c.name);
    const PairClassification pc = classify_triangles(kBase, c.b, 1e-12);
    const PairInteraction fine = pair_interaction(kBase, c.b, pc, kp, 12);
    const double e4 = rel_max_diff(fine, pair_interaction(kBase, c.b, pc, kp, 4));
    const double e8 = rel_max_diff(fine, pair_interaction(kBase, c.b, pc, kp, 8));
    INFO("e4 = " << e4 << " e8 = " << e8);
    CHECK(e8 < e4);
    CHECK(e8 <= 1e-7);
  }
}

TEST_CASE("pair quadrature rejects degenerate input") {
  const KernelParams kp = KernelParams::make(0.5);
  const Triangle flat{{{{0, 0}, {1, 0}, {2, 0}}}};
  const PairClassification pc = classify_triangles(kBase, kFarMate, 1e-12);
  CHECK_THROWS_AS(pair_interaction(flat, kFarMate, pc, kp, 8), std::invalid_argument);
  CHECK_THROWS_AS(pair_interaction(kBase, kFarMate, pc, kp, 0), std::invalid_argument);
}

TEST_CASE("band mass integrals match the oracle and mark divergent entries") {
  OracleOptions opt;
  opt.tol = 1e-6;
  struct Case { const char* name; Triangle cell; PairClass cls; int finite; };
  const Case cases[] = {
      {"shared edge", kEdgeMate, PairClass::SharedEdge, 1},
      {"shared vertex", kVertexMate, PairClass::SharedVertex, 4},
  };
  for (double s : {0.3, 0.5, 0.8}) {
    const KernelParams kp = KernelParams::make(s);
    for (const Case& c : cases) {
      INFO(c.name << " at s = " << s);
      const PairClassification pc = classify_triangles(kBase, c.cell, 1e-12);
      REQUIRE(pc.cls == c.cls);
      const OracleMass om = oracle_band_mass(kBase, c.cell, pc, kp, opt);
      REQUIRE(om.converged);
      CHECK(om.est_rel_error <= 1e-6);
      const auto pm = band_mass_touching(kBase, c.cell, pc, kp, 10);

      int finite = 0;
      double scale = 0.0, diff = 0.0;
      for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) {
          const double ov = om.value[static_cast<size_t>(i)][static_cast<size_t>(j)];
          const double pv = pm[static_cast<size_t>(i)][static_cast<size_t>(j)];
          REQUIRE(std::isnan(ov) == std::isnan(pv));
          if (std::isnan(pv)) continue;
          ++finite;
          CHECK(pv > 0.0);
          scale = std::max(scale, std::abs(ov));
          diff = std::max(diff, std::abs(pv - ov));
        }
      CHECK(finite == c.finite);
      CHECK(diff <= 1e-6 * scale);
    }
  }
  // Only contact pairs make sense here.
  const KernelParams kp = KernelParams::make(0.5);
  const PairClassification far = classify_triangles(kBase, kFarMate, 1e-12);
  CHECK_THROWS_AS(band_mass_touching(kBase, kFarMate, far, kp, 10), std::logic_error);
}

TEST_CASE("tail integral matches independent references") {
  struct Ref { double ax, r, s, value; };
  const Ref refs[] = {
      {0.0, 1.0, 0.5, 6.28318530717958647693},
      {0.5, 1.0, 0.5, 7.82646511647694482912},
      {0.9, 1.0, 0.5, 24.6673063743497713934},
      {0.5, 1.0, 0.2, 16.8445462846248030308},
      {0.5, 1.0, 0.8, 5.96951600920506021401},
      {0.45, 1.5, 0.3, 8.51975946031640199833},
      {1.35, 1.5, 0.7, 21.0750761203933277633},
  };
  for (const Ref& r : refs) {
    INFO("|x| = " << r.ax << " R = " << r.r << " s = " << r.s);
    CHECK(tail_integral({r.ax, 0.0}, r.r, r.s) == Catch::Approx(r.value).epsilon(1e-12));
  }
}

TEST_CASE("tail integral closed form, symmetry, and domain") {
  // At the center the angular integrand is constant: pi/s R^{-2s}.
  for (double s : {0.1, 0.3, 0.5, 0.7, 0.9})
    for (double r : {1.0, 1.7}) {
      INFO("s = " << s << " R = " << r);
      CHECK(tail_integral({0.0, 0.0}, r, s) ==
            Catch::Approx(M_PI / s * std::pow(r, -2.0 * s)).epsilon(1e-13));
    }
  // Rotation invariance.
  const double v0 = tail_integral({0.6, 0.0}, 1.0, 0.4);
  for (double th : {0.3, 2.0, 4.4})
    CHECK(tail_integral({0.6 * std::cos(th), 0.6 * std::sin(th)}, 1.0, 0.4) ==
          Catch::Approx(v0).epsilon(1e-13));
  // Monotone along a ray toward the circle.
  double prev = 0.0;
  for (double a : {0.0, 0.2, 0.4, 0.6, 0.8, 0.95}) {
    const double v = tail_integral({a, 0.0}, 1.0, 0.5);
    CHECK(v > prev);
    prev = v;
  }
  // Points on or outside the circle are rejected.
  CHECK_THROWS_AS(tail_integral({1.0, 0.0}, 1.0, 0.5), std::invalid_argument);
  CHECK_THROWS_AS(tail_integral({1.3, 0.0}, 1.0, 0.5), std::invalid_argument);
  // Adaptive oracle agreement near the circle.
  for (double a : {0.5, 0.9})
    CHECK(tail_integral({a, 0.1}, 1.2, 0.6) ==
          Catch::Approx(oracle_tail_integral({a, 0.1}, 1.2, 0.6)).epsilon(1e-10));
}

TEST_CASE("point-cell kernel integrals match independent references") {
  const Point2 x{0.2, 0.1};
  const Triangle cell{{{{1, 0}, {2, 0.3}, {1.4, 1.2}}}};
  struct Ref { double s, value; };
  const Ref refs[] = {
      {0.3, 0.28630867001460586683604066209},
      {0.5, 0.26513620438026145685664999727},
      {0.8, 0.238867138733654547750003005487},
  };
  for (const Ref& r : refs) {
    INFO("s = " << r.s);
    CHECK(point_cell_integral(x, cell, r.s, gauss_triangle(10)) ==
          Catch::Approx(r.value).epsilon(1e-8));
    CHECK(point_cell_integral(x, cell, r.s, gauss_triangle(5)) ==
          Catch::Approx(r.value).epsilon(1e-4));
  }
  // Additive over red children.
  const double whole = point_cell_integral(x, cell, 0.5, gauss_triangle(10));
  double parts = 0.0;
  for (const auto& c : split_four(cell)) parts += point_cell_integral(x, c, 0.5, gauss_triangle(10));
  CHECK(parts == Catch::Approx(whole).epsilon(1e-9));
  // Translation invariance.
  const Point2 t{13.7, -4.2};
  Triangle moved = cell;
  for (auto& p : moved.v) p = p + t;
  CHECK(point_cell_integral(x + t, moved, 0.5, gauss_triangle(10)) ==
        Catch::Approx(whole).epsilon(1e-13));
}

TEST_CASE("sliver kernel integrals match independent references") {
  ArcSliver sl;
  sl.theta_mid = M_PI / 16.0;
  sl.half_angle = M_PI / 16.0;
  const Point2 x{0.3, -0.4};
  struct Ref { double s, value; };
  const Ref refs[] = {
      {0.3, 0.00420087315714586495680214613144},
      {0.5, 0.00330464426504677175495000504486},
      {0.8, 0.00230609194989004782546347864836},
  };
  for (const Ref& r : refs) {
    INFO("s = " << r.s);
    CHECK(sliver_integral(x, sl, 2.0, r.s) == Catch::Approx(r.value).epsilon(1e-8));
    CHECK(sliver_integral(x, sl, 2.0, r.s, 8) == Catch::Approx(r.value).epsilon(1e-12));
  }
}
