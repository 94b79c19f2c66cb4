#include "lgf/fields.hpp"

#include "lgf/boundedness.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace lgf {
namespace fields {

ScalarField indicator_1d(const GridSpec& g, double a, double b,
                         double height) {
  ScalarField f(g);
  for (int ix = 0; ix < g.nx; ++ix) {
    const double x = g.cell_center(ix, 0).x;
    f.at(ix, 0) = (x >= a && x <= b) ? height : 0.0;
  }
  return f;
}

ScalarField indicator_box_2d(const GridSpec& g, double ax, double bx, double ay,
                             double by, double height) {
  ScalarField f(g);
  for (int iy = 0; iy < g.ny; ++iy)
    for (int ix = 0; ix < g.nx; ++ix) {
      const Point p = g.cell_center(ix, iy);
      f.at(ix, iy) =
          (p.x >= ax && p.x <= bx && p.y >= ay && p.y <= by) ? height : 0.0;
    }
  return f;
}

ScalarField gaussian_2d(const GridSpec& g, Point c, double w,
                        double amplitude) {
  ScalarField f(g);
  for (int iy = 0; iy < g.ny; ++iy)
    for (int ix = 0; ix < g.nx; ++ix) {
      const Point p = g.cell_center(ix, iy);
      const double dx = p.x - c.x, dy = p.y - c.y;
      f.at(ix, iy) = amplitude * std::exp(-(dx * dx + dy * dy) / (w * w));
    }
  return f;
}

ScalarField constant(const GridSpec& g, double value) {
  return ScalarField(g, value);
}

ScalarField radial_decay(const GridSpec& g, int n, double t) {
  return boundedness::unbounded_example(n, g, t);
}

ScalarField random_plateaus_1d(const GridSpec& g, std::uint64_t seed, double lo,
                               double hi) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> val(lo, hi);
  std::uniform_int_distribution<int> width(2, std::max(2, g.nx / 4));
  ScalarField f(g);
  int ix = 0;
  while (ix < g.nx) {
    const int w = std::min(width(rng), g.nx - ix);
    const double v = val(rng);
    for (int j = 0; j < w; ++j) f.at(ix + j, 0) = v;
    ix += w;
  }
  return f;
}

ScalarField random_plateaus_axis_2d(const GridSpec& g, std::uint64_t seed,
                                    double lo, double hi) {
  // Axis-aligned data: a 1D plateau profile extended constantly in y.
  const GridSpec line = GridSpec::make_1d(g.nx, g.h, g.origin.x);
  const ScalarField prof = random_plateaus_1d(line, seed, lo, hi);
  ScalarField f(g);
  for (int iy = 0; iy < g.ny; ++iy)
    for (int ix = 0; ix < g.nx; ++ix) f.at(ix, iy) = prof.at(ix, 0);
  return f;
}

ScalarField random_smooth_2d(const GridSpec& g, std::uint64_t seed,
                             double amplitude) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.2, 0.8);
  std::uniform_real_distribution<double> wdist(0.1, 0.3);
  std::uniform_real_distribution<double> adist(-1.0, 1.0);
  ScalarField f(g, 0.0);
  const double ext_x = g.nx * g.h, ext_y = g.ny * g.h;
  for (int b = 0; b < 4; ++b) {
    const Point c{g.origin.x + unit(rng) * ext_x,
                  g.origin.y + unit(rng) * ext_y};
    const double w = wdist(rng) * ext_x;
    const double a = adist(rng) * amplitude;
    for (int iy = 0; iy < g.ny; ++iy)
      for (int ix = 0; ix < g.nx; ++ix) {
        const Point p = g.cell_center(ix, iy);
        const double dx = p.x - c.x, dy = p.y - c.y;
        f.at(ix, iy) += a * std::exp(-(dx * dx + dy * dy) / (w * w));
      }
  }
  return f;
}

ScalarField random_uniform(const GridSpec& g, std::uint64_t seed, double lo,
                           double hi) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> val(lo, hi);
  ScalarField f(g);
  for (auto& v : f.v) v = val(rng);
  return f;
}

TimeSeries constant_series(const ScalarField& f, double T) {
  TimeSeries s;
  s.push(0.0, f);
  s.push(T, f);
  return s;
}

TimeSeries moving_step_1d(const GridSpec& g, double a, double speed, double T,
                          int frames) {
  TimeSeries s;
  for (int k = 0; k < frames; ++k) {
    const double t = T * k / (frames - 1);
    ScalarField f(g);
    for (int ix = 0; ix < g.nx; ++ix)
      f.at(ix, 0) = g.cell_center(ix, 0).x < a + speed * t ? 1.0 : 0.0;
    s.push(t, f);
  }
  return s;
}

Problem plateau_1d(int cells, double height) {
  Problem p;
  p.grid = GridSpec::make_1d(cells, 1.0 / cells, 0.0);
  p.T = 0.1;
  p.spec = LagrangianSpec::total_variation();
  p.u0 = indicator_1d(p.grid, 0.25, 0.75, height);
  p.g_fields = constant_series(constant(p.grid, 0.0), p.T);
  return p;
}

Problem smooth_bump_2d(int cells) {
  Problem p;
  p.grid = GridSpec::make_2d(cells, cells, 1.0 / cells, {0.0, 0.0});
  p.T = 0.1;
  p.spec = LagrangianSpec::total_variation();
  p.u0 = gaussian_2d(p.grid, {0.5, 0.5}, 0.25, 1.0);
  p.g_fields = constant_series(constant(p.grid, 0.0), p.T);
  return p;
}

Problem box_indicator_2d(int cells, double height) {
  Problem p;
  p.grid = GridSpec::make_2d(cells, cells, 1.0 / cells, {0.0, 0.0});
  p.T = 0.1;
  p.spec = LagrangianSpec::total_variation();
  p.u0 = indicator_box_2d(p.grid, 0.3, 0.7, 0.3, 0.7, height);
  p.g_fields = constant_series(constant(p.grid, 0.0), p.T);
  return p;
}

ScalarField annulus_exact(const GridSpec& g, double t) {
  ScalarField f(g);
  const double decay = std::max(0.0, 1.0 - t);
  for (std::int64_t c = 0; c < g.cell_count(); ++c) {
    const Point p = g.cell_center(static_cast<int>(c));
    const double r = std::max(std::hypot(p.x, p.y), 1e-12);
    f.v[static_cast<size_t>(c)] = decay / r;
  }
  return f;
}

Problem annulus_radial_2d(int cells_per_axis) {
  Problem p;
  const double h = 2.0 / cells_per_axis;
  p.grid = GridSpec::make_2d(cells_per_axis, cells_per_axis, h, {-1.0, -1.0});
  p.T = 0.5;
  p.spec = LagrangianSpec::total_variation();
  p.u0 = annulus_exact(p.grid, 0.0);

  p.mask.assign(static_cast<size_t>(p.grid.cell_count()), 0);
  for (std::int64_t c = 0; c < p.grid.cell_count(); ++c) {
    const Point q = p.grid.cell_center(static_cast<int>(c));
    const double r = std::hypot(q.x, q.y);
    if (r >= 0.5 && r <= 1.0) p.mask[static_cast<size_t>(c)] = 1;
  }

  // The exact solution decays linearly in time, so two frames suffice for
  // the linear-in-time interpolation of the boundary data.
  TimeSeries gs;
  gs.push(0.0, annulus_exact(p.grid, 0.0));
  gs.push(p.T, annulus_exact(p.grid, p.T));
  p.g_fields = std::move(gs);
  return p;
}

double masked_rel_l2_error(const ScalarField& u, const ScalarField& exact,
                           const std::vector<std::uint8_t>& mask) {
  KahanSum num, den;
  for (size_t c = 0; c < u.v.size(); ++c) {
    if (!mask.empty() && !mask[c]) continue;
    const double d = u.v[c] - exact.v[c];
    num.add(d * d);
    den.add(exact.v[c] * exact.v[c]);
  }
  return std::sqrt(num.value() / std::max(den.value(), 1e-300));
}

}  // namespace fields
}  // namespace lgf
