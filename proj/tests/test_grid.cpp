#include <cmath>
#include <random>

#include "doctest.h"
#include "lgf/fields.hpp"
#include "lgf/grid.hpp"

using namespace lgf;

namespace {

// Direct-summation oracle for the adjoint identity, independent of the
// inner() helpers: plain loops, no compensation.
double adjoint_residual_direct(const ScalarField& u, const VectorField& z) {
  const GridSpec& g = u.grid;
  const VectorField gu = gradient(u);
  const ScalarField dz = divergence(z);
  double a = 0.0, b = 0.0;
  for (size_t i = 0; i < gu.fx.size(); ++i) a += gu.fx[i] * z.fx[i];
  for (size_t i = 0; i < gu.fy.size(); ++i) a += gu.fy[i] * z.fy[i];
  for (size_t i = 0; i < u.v.size(); ++i) b += u.v[i] * dz.v[i];
  return std::abs(a + b) * g.cell_measure();
}

VectorField random_vector_field(const GridSpec& g, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> d(-1.0, 1.0);
  VectorField z(g);
  for (auto& v : z.fx) v = d(rng);
  for (auto& v : z.fy) v = d(rng);
  return z;
}

}  // namespace

TEST_CASE("gradient: constants, ramps") {
  const GridSpec g1 = GridSpec::make_1d(2, 0.5);
  ScalarField u(g1);
  u.v = {0.0, 1.0};
  const VectorField z = gradient(u);
  CHECK(z.fx.size() == 1);
  CHECK(z.fx[0] == doctest::Approx(2.0));

  const GridSpec g2 = GridSpec::make_2d(8, 8, 0.125);
  ScalarField c(g2, 3.25);
  const VectorField zc = gradient(c);
  for (double v : zc.fx) CHECK(v == 0.0);
  for (double v : zc.fy) CHECK(v == 0.0);

  ScalarField ramp(g2);
  for (int iy = 0; iy < 8; ++iy)
    for (int ix = 0; ix < 8; ++ix) ramp.at(ix, iy) = g2.cell_center(ix, iy).x;
  const VectorField zr = gradient(ramp);
  for (double v : zr.fx) CHECK(v == doctest::Approx(1.0));
  for (double v : zr.fy) CHECK(v == doctest::Approx(0.0));
}

TEST_CASE("divergence: zero field, constant faces, exact adjoint") {
  const GridSpec g1 = GridSpec::make_1d(3, 0.25);
  VectorField z(g1);
  ScalarField d0 = divergence(z);
  for (double v : d0.v) CHECK(v == 0.0);

  // Constant face values: interior cells 0, boundary cells +-z/h from the
  // zero padding (hand-expanded 3-cell oracle).
  z.fx = {2.0, 2.0};
  const ScalarField d = divergence(z);
  CHECK(d.v[0] == doctest::Approx(2.0 / 0.25));
  CHECK(d.v[1] == doctest::Approx(0.0));
  CHECK(d.v[2] == doctest::Approx(-2.0 / 0.25));

  std::mt19937_64 rng(5);
  for (int rep = 0; rep < 50; ++rep) {
    const GridSpec g = GridSpec::make_2d(12, 9, 0.1, {-0.3, 0.2});
    const ScalarField u = fields::random_uniform(g, 100 + rep, -2.0, 2.0);
    const VectorField w = random_vector_field(g, 200 + rep);
    const double scale = inner(u, u) + inner(w, w) + 1.0;
    CHECK(adjoint_residual_direct(u, w) <= 1e-12 * scale);
  }
}

TEST_CASE("total variation: jumps, scaling, perimeter refinement") {
  const GridSpec g1 = GridSpec::make_1d(64, 1.0 / 64);
  const ScalarField ind = fields::indicator_1d(g1, 0.25, 0.75, 1.0);
  CHECK(total_variation(ind) == doctest::Approx(2.0));

  ScalarField c(g1, 5.0);
  CHECK(total_variation(c) == doctest::Approx(0.0));

  // Scaling by s.
  std::mt19937_64 rng(7);
  for (int rep = 0; rep < 20; ++rep) {
    const ScalarField u = fields::random_plateaus_1d(g1, 300 + rep, -2.0, 2.0);
    const double tv = total_variation(u);
    for (double s : {-3.0, 0.5, 7.0}) {
      ScalarField su = u;
      for (auto& v : su.v) v *= s;
      CHECK(total_variation(su) ==
            doctest::Approx(std::abs(s) * tv).epsilon(1e-12));
    }
  }

  // Perimeter of a square under refinement: first-order convergence.
  double errs[3];
  int k = 0;
  for (int n : {32, 64, 128}) {
    const GridSpec g = GridSpec::make_2d(n, n, 1.0 / n);
    const ScalarField sq = fields::indicator_box_2d(g, 0.25, 0.75, 0.25, 0.75,
                                                    1.0);
    errs[k++] = std::abs(total_variation(sq) - 2.0);
  }
  const double order01 = std::log2(errs[0] / std::max(errs[1], 1e-300));
  const double order12 = std::log2(errs[1] / std::max(errs[2], 1e-300));
  CHECK(order01 >= 0.8);
  CHECK(order12 >= 0.8);
}

TEST_CASE("f_integral: growth sandwich and constant fields") {
  const GridSpec g = GridSpec::make_2d(16, 16, 1.0 / 16);
  const auto w = [](Point p) { return 1.0 + 0.4 * std::sin(5 * p.x * p.y); };
  const LagrangianSpec specs[] = {
      LagrangianSpec::total_variation(),
      LagrangianSpec::area(),
      LagrangianSpec::weighted_tv(w, 0.6, 1.4),
      LagrangianSpec::anisotropic_tv(0.5, 2.0),
      lag_regularize(LagrangianSpec::total_variation(), 0.2),
  };
  std::mt19937_64 rng(11);
  for (const auto& spec : specs) {
    const ScalarField c(g, -1.5);
    double f0 = 0.0;
    for (std::int64_t i = 0; i < g.cell_count(); ++i)
      f0 += g.cell_measure() *
            lag_eval(spec, g.cell_center(static_cast<int>(i)), {0.0, 0.0});
    CHECK(f_integral(spec, c) == doctest::Approx(f0));

    for (int rep = 0; rep < 10; ++rep) {
      const ScalarField u = fields::random_uniform(g, 900 + rep, -1.0, 1.0);
      const double tv = total_variation(u);
      const double fi = f_integral(spec, u);
      CHECK(spec.lambda * tv <= fi + 1e-10);
      CHECK(fi <= spec.big_lambda * (g.domain_measure() + tv) + 1e-10);
    }
  }
}

TEST_CASE("area functional: constants, ramps, sandwich") {
  const GridSpec g2 = GridSpec::make_2d(10, 10, 0.1);
  CHECK(area_functional(ScalarField(g2, 4.0)) == doctest::Approx(1.0));

  const GridSpec g1 = GridSpec::make_1d(50, 1.0 / 50);
  ScalarField ramp(g1);
  for (int ix = 0; ix < 50; ++ix) ramp.at(ix, 0) = g1.cell_center(ix, 0).x;
  CHECK(area_functional(ramp) == doctest::Approx(std::sqrt(2.0)));

  std::mt19937_64 rng(13);
  for (int rep = 0; rep < 20; ++rep) {
    const ScalarField u = fields::random_uniform(g2, 400 + rep, -1.0, 1.0);
    const double tv = total_variation(u);
    const double ar = area_functional(u);
    CHECK(tv <= ar + 1e-12);
    CHECK(ar <= tv + g2.domain_measure() + 1e-12);
  }
}

TEST_CASE("trace and boundary integral") {
  const GridSpec g1 = GridSpec::make_1d(5, 0.2);
  ScalarField u(g1);
  u.v = {3.0, 1.0, 4.0, 1.0, 5.0};
  const BoundaryTrace t = trace(u);
  CHECK(t.v[0] == 3.0);
  CHECK(t.v[1] == 5.0);

  const GridSpec g2 = GridSpec::make_2d(6, 6, 1.0 / 6);
  const ScalarField c(g2, 2.5);
  const BoundaryTrace tc = trace(c);
  for (double v : tc.v) CHECK(v == 2.5);
  CHECK(boundary_integral(tc, tc, LagrangianSpec::total_variation()) == 0.0);

  // TV: f_inf(nu) = 1, so the integral is h^{n-1} sum |t1 - t2|.
  const BoundaryTrace t0(g2, 0.0);
  CHECK(boundary_integral(tc, t0, LagrangianSpec::total_variation()) ==
        doctest::Approx(2.5 * 24 * (1.0 / 6)));

  // Weighted: hand-computed on a 3-cell 1D grid.
  const GridSpec g3 = GridSpec::make_1d(3, 0.5, 1.0);
  const auto w = [](Point p) { return p.x; };  // w(1.0) = 1, w(2.5) = 2.5
  const auto wspec = LagrangianSpec::weighted_tv(w, 0.5, 3.0);
  ScalarField a(g3), b(g3);
  a.v = {2.0, 0.0, 3.0};
  b.v = {1.0, 0.0, 1.0};
  // |2-1| * w(1.0) + |3-1| * w(2.5) = 1 + 5 = 6, face measure 1 in 1D.
  CHECK(boundary_integral(trace(a), trace(b), wspec) == doctest::Approx(6.0));
}

TEST_CASE("gauss-green residual") {
  const GridSpec g = GridSpec::make_2d(9, 7, 0.11, {0.4, -0.2});
  std::mt19937_64 rng(17);

  // z = 0 with zero claimed trace.
  const ScalarField u0 = fields::random_uniform(g, 21, -1.0, 1.0);
  CHECK(gauss_green_residual(u0, VectorField(g), BoundaryTrace(g, 0.0)) ==
        doctest::Approx(0.0));

  for (int rep = 0; rep < 30; ++rep) {
    const ScalarField u = fields::random_uniform(g, 500 + rep, -2.0, 2.0);
    const VectorField z = random_vector_field(g, 600 + rep);
    const double scale =
        std::abs(inner(u, divergence(z))) + std::abs(inner(gradient(u), z)) +
        1.0;
    // The adjoint pair zero-pads, so the consistent claimed trace vanishes.
    CHECK(gauss_green_residual(u, z, BoundaryTrace(g, 0.0)) <= 1e-12 * scale);

    // Perturbing the claimed trace on one face shows up linearly.
    BoundaryTrace zb(g, 0.0);
    const int bf = rep % g.boundary_face_count();
    const double eps = 0.37;
    zb.v[bf] = eps;
    const double tu = u.v[g.boundary_face_cell(bf)];
    CHECK(gauss_green_residual(u, z, zb) ==
          doctest::Approx(eps * g.face_measure() * std::abs(tu))
              .epsilon(1e-9));
  }
}

TEST_CASE("min/max splitting for plateau data") {
  // Coarea-type submodularity with the cell-centered quadrature, exact for
  // plateaus of width >= 2; 1D and axis-aligned 2D only.
  const GridSpec g1 = GridSpec::make_1d(48, 1.0 / 48);
  const auto wfun = [](Point p) { return 1.1 + 0.3 * std::sin(2 * p.x); };
  const LagrangianSpec specs[] = {
      LagrangianSpec::total_variation(),
      LagrangianSpec::area(),
      LagrangianSpec::weighted_tv(wfun, 0.8, 1.4),
  };
  for (const auto& spec : specs)
    for (int rep = 0; rep < 40; ++rep) {
      const ScalarField a = fields::random_plateaus_1d(g1, 700 + rep, -2, 2);
      const ScalarField b = fields::random_plateaus_1d(g1, 800 + rep, -2, 2);
      const double lhs = f_integral(spec, cellwise_min(a, b)) +
                         f_integral(spec, cellwise_max(a, b));
      const double rhs = f_integral(spec, a) + f_integral(spec, b);
      CHECK(lhs <= rhs + 1e-10 * (1.0 + std::abs(rhs)));
    }

  const GridSpec g2 = GridSpec::make_2d(24, 24, 1.0 / 24);
  for (int rep = 0; rep < 20; ++rep) {
    const ScalarField a = fields::random_plateaus_axis_2d(g2, 900 + rep, -2, 2);
    const ScalarField b = fields::random_plateaus_axis_2d(g2, 950 + rep, -2, 2);
    const double lhs = total_variation(cellwise_min(a, b)) +
                       total_variation(cellwise_max(a, b));
    const double rhs = total_variation(a) + total_variation(b);
    CHECK(lhs <= rhs + 1e-10 * (1.0 + std::abs(rhs)));
  }
}

TEST_CASE("grid invariants and errors") {
  CHECK_THROWS_AS(GridSpec::make_1d(1, 0.5), InvalidParam);
  CHECK_THROWS_AS(GridSpec::make_1d(4, -1.0), InvalidParam);
  CHECK_THROWS_AS(GridSpec::make_2d(10000, 10000, 0.1), InvalidParam);

  const GridSpec a = GridSpec::make_1d(4, 0.5);
  const GridSpec b = GridSpec::make_1d(5, 0.5);
  CHECK_THROWS_AS(inner(ScalarField(a), ScalarField(b)), GridMismatch);

  // Boundary face normals are unit and enumerate the perimeter.
  const GridSpec g = GridSpec::make_2d(5, 3, 0.2);
  CHECK(g.boundary_face_count() == 2 * 3 + 2 * 5);
  for (int bf = 0; bf < g.boundary_face_count(); ++bf)
    CHECK(norm(g.boundary_face_normal(bf)) == doctest::Approx(1.0));
}
