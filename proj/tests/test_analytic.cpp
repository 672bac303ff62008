#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "fraclab/analytic.hpp"
#include "fraclab/mesh.hpp"

using namespace fraclab;

// Reference values computed independently with 30-digit arithmetic.

TEST_CASE("gamma function matches high-precision references") {
  const struct {
    double x, ref;
  } cases[] = {
      {0.5, 1.7724538509055160273},  {1.5, 0.88622692545275801365},
      {2.5, 1.3293403881791370205},  {6.5, 287.885277815044361},
      {13.5, 1710542068.3195732157}, {0.1, 9.5135076986687318363},
      {0.9, 1.0686287021193193549},  {3.7, 4.1706517837966031654}};
  for (const auto& c : cases) {
    INFO("x = " << c.x);
    CHECK(gamma_fn(c.x) == Catch::Approx(c.ref).epsilon(1e-13));
  }
}

TEST_CASE("kernel normalization constant c_ds in two dimensions") {
  const struct {
    double s, ref;
  } cases[] = {{0.1, 0.032551422029941055115}, {0.2, 0.066248484194360981444},
               {0.3, 0.10007289206487783637},  {0.4, 0.13207971389562194355},
               {0.5, 0.15915494309189533577},  {0.6, 0.17674478557428508474},
               {0.7, 0.17860038243844473381},  {0.75, 0.17116712969055234293},
               {0.8, 0.15661172223255976328},  {0.9, 0.10084985986148907972}};
  for (const auto& c : cases) {
    INFO("s = " << c.s);
    CHECK(c_ds(2, c.s) == Catch::Approx(c.ref).epsilon(1e-13));
  }
  // At s = 1/2 the constant reduces to 1/(2 pi).
  CHECK(c_ds(2, 0.5) == Catch::Approx(1.0 / (2.0 * M_PI)).epsilon(1e-15));
  CHECK_THROWS_AS(c_ds(2, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(c_ds(2, 1.0), std::invalid_argument);
}

TEST_CASE("Getoor solution: peak value, boundary decay, support") {
  const struct {
    double s, cu;
  } cases[] = {{0.2, 0.89896543617601429232}, {0.4, 0.72957586823616964711},
               {0.5, 0.63661977236758134308}, {0.6, 0.54520517608867531531},
               {0.8, 0.3802722851189100384},  {0.9, 0.31046119130626032993}};
  for (const auto& c : cases) {
    const GetoorSolution u(c.s);
    INFO("s = " << c.s);
    CHECK(u.c_u == Catch::Approx(c.cu).epsilon(1e-13));
    CHECK(u({0, 0}) == Catch::Approx(c.cu).epsilon(1e-15));
    CHECK(u({1, 0}) == 0.0);
    CHECK(u({0.8, 0.7}) == 0.0);  // outside the disk
    // Radially decreasing.
    CHECK(u({0.3, 0}) > u({0.6, 0}));
    CHECK(u({0.6, 0}) > u({0.9, 0}));
  }
  // At s = 1/2 the peak is 2/pi.
  CHECK(GetoorSolution(0.5).c_u == Catch::Approx(2.0 / M_PI).epsilon(1e-15));
}

TEST_CASE("Getoor integral and L2 norm closed forms") {
  const struct {
    double s, integral, l2sq;
  } cases[] = {{0.2, 2.3534860084347588762, 1.8134593509485998842},
               {0.4, 1.6371644199193896759, 0.92900550797293069922},
               {0.5, 4.0 / 3.0, 0.63661977236758134308},
               {0.6, 1.0705078599370699834, 0.42447012820458269911},
               {0.8, 0.66370034294076168364, 0.17472935495373763731},
               {0.9, 0.51333820938551728256, 0.10814500887671978065}};
  for (const auto& c : cases) {
    const GetoorQuantities q = getoor_l2_quantities(c.s);
    INFO("s = " << c.s);
    CHECK(q.integral == Catch::Approx(c.integral).epsilon(1e-13));
    CHECK(q.l2_norm_sq == Catch::Approx(c.l2sq).epsilon(1e-13));
  }
}

TEST_CASE("nodal interpolant matches f at interior vertices and reproduces linears") {
  const TriMesh m = build_disk_mesh({0.3, 1.0, 2.0});
  auto lin = [](Point2 p) { return 3.0 + 2.0 * p.x - 0.5 * p.y; };
  const DiscreteFunction g = nodal_interpolant(m, lin);
  for (int v = 0; v < m.num_vertices(); ++v) {
    if (m.boundary[static_cast<size_t>(v)]) {
      CHECK(g.vertex_value[static_cast<size_t>(v)] == 0.0);
    } else {
      CHECK(g.vertex_value[static_cast<size_t>(v)] ==
            Catch::Approx(lin(m.vertex[static_cast<size_t>(v)])).epsilon(1e-15));
    }
  }
  // Linear functions are reproduced exactly on elements away from the boundary.
  int checked = 0;
  for (int t = 0; t < m.num_triangles(); ++t) {
    const auto& tri = m.tri[static_cast<size_t>(t)];
    bool interior = true;
    for (int k = 0; k < 3; ++k)
      if (m.boundary[static_cast<size_t>(tri[static_cast<size_t>(k)])]) interior = false;
    if (!interior) continue;
    const Point2 p = map_to_physical(m.triangle(t), 0.21, 0.37);
    CHECK(g.value_in(t, 0.21, 0.37) == Catch::Approx(lin(p)).epsilon(1e-14));
    ++checked;
  }
  REQUIRE(checked > 10);
}

TEST_CASE("nodal interpolant of the Getoor solution vanishes on the boundary") {
  const TriMesh m = build_disk_mesh({0.25, 1.0, 2.0});
  const GetoorSolution u(0.5);
  const DiscreteFunction g = nodal_interpolant(m, u);
  for (int v = 0; v < m.num_vertices(); ++v)
    if (m.boundary[static_cast<size_t>(v)])
      CHECK(g.vertex_value[static_cast<size_t>(v)] == 0.0);
  // Interpolates the peak at the center vertex exactly.
  const auto d = g.dof_values();
  const DiscreteFunction lifted = DiscreteFunction::from_dofs(m, d);
  CHECK(lifted({0, 0}) == Catch::Approx(u.c_u).epsilon(1e-14));
}
