#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <vector>

#include "fraclab/errors.hpp"

using namespace fraclab;

TEST_CASE("L2 quadrature closes the exact disk identity") {
  // With uh = 0 the measured error squared is the integral of u^2 over the
  // polygon; adding the closed-form exterior mass must recover the exact
  // integral of the Getoor solution over the whole disk.
  for (double h : {0.5, 0.35}) {
    const TriMesh m = build_disk_mesh({h, 1.0, 2.0});
    const DiscreteFunction zero(m);
    for (double s : {0.2, 0.5, 0.8}) {
      CAPTURE(h, s);
      const double inner = l2_error(zero, GetoorSolution(s));
      const double sum = inner * inner + getoor_exterior_l2_sq(m, s);
      const GetoorQuantities q = getoor_l2_quantities(s);
      CHECK(sum == Catch::Approx(q.l2_norm_sq).epsilon(1e-12));
      CHECK(l2_error_getoor(zero, s) == Catch::Approx(std::sqrt(q.l2_norm_sq)).epsilon(1e-12));
    }
  }
}

TEST_CASE("L2 error vanishes on reproduced affine functions") {
  const TriMesh m = build_disk_mesh({0.5, 1.0, 2.0});
  auto lin = [](Point2 p) { return 0.7 - 1.3 * p.x + 2.1 * p.y; };
  DiscreteFunction uh(m);
  for (int v = 0; v < m.num_vertices(); ++v)
    uh.vertex_value[static_cast<size_t>(v)] = lin(m.vertex[static_cast<size_t>(v)]);
  CHECK(l2_error(uh, lin) <= 1e-13);
}

TEST_CASE("L2 error of zero against one is the polygon area") {
  const TriMesh m = build_disk_mesh({0.5, 1.0, 2.0});
  const DiscreteFunction zero(m);
  double poly_area = 0.0;
  for (int t = 0; t < m.num_triangles(); ++t) poly_area += area(m.triangle(t));
  const double err = l2_error(zero, [](const Point2&) { return 1.0; });
  CHECK(err * err == Catch::Approx(poly_area).epsilon(1e-13));
}

TEST_CASE("interpolant L2 error decreases along the mesh ladder") {
  const double s = 0.5;
  double prev = std::numeric_limits<double>::infinity();
  for (double h : {0.5, 0.35, 0.25}) {
    const TriMesh m = build_disk_mesh({h, 1.0, 2.0});
    const DiscreteFunction ih = nodal_interpolant(m, GetoorSolution(s));
    const double err = l2_error_getoor(ih, s);
    CAPTURE(h, err);
    CHECK(err < prev);
    prev = err;
  }
}

TEST_CASE("energy error implements the Galerkin gap") {
  const std::vector<double> f = {1.0, 2.0, -0.5};
  const std::vector<double> u = {0.5, 0.25, 2.0};
  const double fu = 1.0 * 0.5 + 2.0 * 0.25 + (-0.5) * 2.0;  // = 0

  SECTION("positive gap") {
    const EnergyError e = energy_error(fu + 0.25, f, u);
    CHECK(e.value == Catch::Approx(0.5));
    CHECK_FALSE(e.clamped);
  }
  SECTION("negative gap clamps to zero and reports it") {
    const EnergyError e = energy_error(fu - 1e-3, f, u);
    CHECK(e.value == 0.0);
    CHECK(e.clamped);
    CHECK(e.raw_gap == Catch::Approx(-1e-3));
  }
  SECTION("size mismatch throws") {
    CHECK_THROWS_AS(energy_error(1.0, f, std::vector<double>(2, 0.0)), std::invalid_argument);
  }
}

TEST_CASE("ball cover selects the right triangles") {
  const TriMesh m = build_disk_mesh({0.35, 1.0, 2.0});
  const double radius = 0.3;
  const std::vector<int> tris = triangles_meeting_ball(m, {0.0, 0.0}, radius);
  REQUIRE(!tris.empty());
  REQUIRE(tris.size() < static_cast<size_t>(m.num_triangles()));

  // Deterministic sample points in the ball land in a selected triangle.
  for (int k = 0; k < 120; ++k) {
    const double r = radius * std::sqrt((k % 12) / 11.0);
    const double th = 2.0 * M_PI * (k / 12) / 10.0 + 0.1;
    const Point2 p{r * std::cos(th), r * std::sin(th)};
    bool covered = false;
    for (int t : tris)
      if (contains(m.triangle(t), p, 1e-9)) covered = true;
    CHECK(covered);
  }

  SECTION("a huge ball selects everything, a point selects its containers") {
    CHECK(triangles_meeting_ball(m, {0.0, 0.0}, 10.0).size() ==
          static_cast<size_t>(m.num_triangles()));
    const std::vector<int> at_origin = triangles_meeting_ball(m, {0.0, 0.0}, 0.0);
    for (int t : at_origin) CHECK(contains(m.triangle(t), {0.0, 0.0}, 1e-9));
    REQUIRE(!at_origin.empty());
  }
}

TEST_CASE("local seminorm error contracts the Gram form") {
  const TriMesh m = build_disk_mesh({0.5, 1.0, 2.0});
  const KernelParams kp = KernelParams::make(0.5);
  const std::vector<int> tris = triangles_meeting_ball(m, {0.0, 0.0}, 0.3);
  const SubdomainGram gram = assemble_subdomain_gram(m, tris, kp);
  REQUIRE(gram.G.n >= 1);

  std::vector<double> e(static_cast<size_t>(m.num_dofs()), 0.0);
  CHECK(local_hs_error(gram, e) == 0.0);

  for (int d = 0; d < m.num_dofs(); ++d)
    e[static_cast<size_t>(d)] = std::sin(2.0 + 3.0 * d);
  const double one = local_hs_error(gram, e);
  CHECK(one > 0.0);

  std::vector<double> e2 = e;
  for (double& v : e2) v *= 2.0;
  CHECK(local_hs_error(gram, e2) == Catch::Approx(2.0 * one).epsilon(1e-13));

  // Dense reference contraction through the symmetric accessor.
  double acc = 0.0;
  for (int i = 0; i < gram.G.n; ++i)
    for (int j = 0; j < gram.G.n; ++j)
      acc += e[static_cast<size_t>(gram.dofs[static_cast<size_t>(i)])] * gram.G.get(i, j) *
             e[static_cast<size_t>(gram.dofs[static_cast<size_t>(j)])];
  CHECK(one == Catch::Approx(std::sqrt(acc)).epsilon(1e-13));
}

TEST_CASE("rate fits recover power laws") {
  std::vector<double> n = {100, 400, 1600, 6400, 25600};
  std::vector<double> err;
  for (double x : n) err.push_back(3.0 * std::pow(x, -0.75));

  SECTION("exact data") {
    const RateFit fit = fit_rate(n, err);
    CHECK(fit.slope == Catch::Approx(-0.75).margin(1e-12));
    CHECK(fit.stderr_slope <= 1e-12);
    CHECK_FALSE(fit.dropped_coarsest);
    CHECK(fit.n_used == 5);
  }

  SECTION("a pre-asymptotic coarsest level is dropped once") {
    err[0] *= 3.0;
    const RateFit fit = fit_rate(n, err);
    CHECK(fit.dropped_coarsest);
    CHECK(fit.n_used == 4);
    CHECK(fit.slope == Catch::Approx(-0.75).margin(1e-9));
  }

  SECTION("mild noise keeps all levels and reports a spread") {
    for (size_t i = 0; i < err.size(); ++i) err[i] *= 1.0 + 0.02 * ((i % 2) ? 1.0 : -1.0);
    const RateFit fit = fit_rate(n, err);
    CHECK_FALSE(fit.dropped_coarsest);
    CHECK(fit.slope == Catch::Approx(-0.75).margin(0.02));
    CHECK(fit.stderr_slope > 0.0);
  }

  SECTION("bad inputs throw") {
    CHECK_THROWS_AS(fit_rate({10, 20}, {1, 2}), std::invalid_argument);
    CHECK_THROWS_AS(fit_rate({10, 20, 30}, {1.0, -1.0, 0.5}), std::invalid_argument);
    CHECK_THROWS_AS(fit_rate({10, 20, 30}, {1.0, 0.5}), std::invalid_argument);
  }
}
