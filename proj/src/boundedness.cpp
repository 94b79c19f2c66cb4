#include "lgf/boundedness.hpp"

#include <algorithm>
#include <cmath>

#include "lgf/grid.hpp"

namespace lgf {
namespace boundedness {

namespace {

// Quintic smoothstep: s(0)=0, s(1)=1, s' = s'' = 0 at both ends.
double smoothstep(double q) {
  if (q <= 0.0) return 0.0;
  if (q >= 1.0) return 1.0;
  return q * q * q * (10.0 + q * (-15.0 + 6.0 * q));
}

double smoothstep_d(double q) {
  if (q <= 0.0 || q >= 1.0) return 0.0;
  return 30.0 * q * q * (1.0 - q) * (1.0 - q);
}

// Ramp from 1 inside radius a to 0 outside radius b.
double ramp(double r, double a, double b) {
  return smoothstep((b - r) / (b - a));
}

double ramp_d(double r, double a, double b) {
  return -smoothstep_d((b - r) / (b - a)) / (b - a);
}

struct CylinderSlice {
  std::vector<int> cells;       // cells with |x_c - z| <= rho
  std::vector<size_t> stamps;   // frames overlapping the time slab
  std::vector<double> weights;  // per-stamp tau weights
  double space_measure = 0.0;
  double time_measure = 0.0;
};

CylinderSlice slice(const TimeSeries& u, const Cylinder& cyl) {
  const GridSpec& g = u.grid();
  if (!(cyl.rho > 0.0) || !(cyl.theta > 0.0))
    throw InvalidParam("cylinder: rho and theta must be positive");
  // Closure inside the open box and the time horizon.
  const double x_lo = g.origin.x, x_hi = g.origin.x + g.nx * g.h;
  const double y_lo = g.origin.y, y_hi = g.origin.y + g.ny * g.h;
  const double t_start = cyl.t0 - cyl.theta * cyl.rho;
  if (cyl.center.x - cyl.rho < x_lo || cyl.center.x + cyl.rho > x_hi ||
      (g.dim == 2 &&
       (cyl.center.y - cyl.rho < y_lo || cyl.center.y + cyl.rho > y_hi)))
    throw CylinderOutOfDomain("cylinder: ball leaves the spatial domain");
  if (t_start < u.times.front() - 1e-12 || cyl.t0 > u.times.back() + 1e-12)
    throw CylinderOutOfDomain("cylinder: time slab leaves the horizon");

  CylinderSlice s;
  for (std::int64_t c = 0; c < g.cell_count(); ++c) {
    const Point p = g.cell_center(static_cast<int>(c));
    const double dx = p.x - cyl.center.x;
    const double dy = g.dim == 2 ? p.y - cyl.center.y : 0.0;
    if (std::hypot(dx, dy) <= cyl.rho) s.cells.push_back(static_cast<int>(c));
  }
  if (s.cells.empty())
    throw CylinderOutOfDomain("cylinder: no cell centers inside the ball");
  // Snap outward in time: include every step whose slab intersects.
  for (size_t k = 1; k < u.size(); ++k) {
    const double ta = u.times[k - 1], tb = u.times[k];
    if (tb <= t_start + 1e-15 || ta >= cyl.t0 - 1e-15) continue;
    s.stamps.push_back(k);
    s.weights.push_back(tb - ta);
    s.time_measure += tb - ta;
  }
  if (s.stamps.empty())
    throw CylinderOutOfDomain("cylinder: no time steps inside the slab");
  s.space_measure = static_cast<double>(s.cells.size()) * g.cell_measure();
  return s;
}

double positive_power(double v, double p) {
  return v > 0.0 ? std::pow(v, p) : 0.0;
}

}  // namespace

double Cutoff::value(Point x, double t) const {
  const double r = std::hypot(x.x - outer.center.x, x.y - outer.center.y);
  const double sp = ramp(r, inner.rho, outer.rho);
  const double t_in = outer.t0 - inner.theta * inner.rho;
  const double t_out = outer.t0 - outer.theta * outer.rho;
  // Rising ramp in time from the outer start to the inner start; constant 1
  // afterwards (backward cylinders share the terminal time t0).
  const double tt = smoothstep((t - t_out) / (t_in - t_out));
  return sp * tt;
}

Vec Cutoff::grad_x(Point x, double t) const {
  const double dx = x.x - outer.center.x, dy = x.y - outer.center.y;
  const double r = std::hypot(dx, dy);
  const double t_in = outer.t0 - inner.theta * inner.rho;
  const double t_out = outer.t0 - outer.theta * outer.rho;
  const double tt = smoothstep((t - t_out) / (t_in - t_out));
  if (r == 0.0) return {0.0, 0.0};
  const double dr = ramp_d(r, inner.rho, outer.rho) * tt;
  return {dr * dx / r, dr * dy / r};
}

double Cutoff::dt(Point x, double t) const {
  const double r = std::hypot(x.x - outer.center.x, x.y - outer.center.y);
  const double sp = ramp(r, inner.rho, outer.rho);
  const double t_in = outer.t0 - inner.theta * inner.rho;
  const double t_out = outer.t0 - outer.theta * outer.rho;
  return sp * smoothstep_d((t - t_out) / (t_in - t_out)) / (t_in - t_out);
}

Cutoff Cutoff::standard(const Cylinder& support) {
  Cutoff c;
  c.outer = support;
  c.inner = support.shrink_space(0.5);
  return c;
}

EnergyTerms energy_estimate_terms(const TimeSeries& u, double k,
                                  const Cutoff& phi, const Cylinder& cyl,
                                  const LagrangianSpec& spec, double alpha) {
  if (!(alpha >= 1.0))
    throw InvalidParam("energy_estimate_terms: alpha must be >= 1");
  const GridSpec& g = u.grid();
  const CylinderSlice s = slice(u, cyl);

  EnergyTerms out;
  double sup_mass = 0.0;
  KahanSum tv_term, rhs1, rhs2, rhs3;
  for (size_t si = 0; si < s.stamps.size(); ++si) {
    const size_t kk = s.stamps[si];
    const double t = u.times[kk];
    const double tau = s.weights[si];
    const ScalarField& f = u.frames[kk];

    KahanSum mass, r1, r2, r3;
    ScalarField masked(g, 0.0);
    for (int c : s.cells) {
      const Point x = g.cell_center(c);
      const double pv = phi.value(x, t);
      const double wpos = std::max(f.v[c] - k, 0.0);
      const double wa = positive_power(wpos, alpha);
      mass.add(pv * wpos * wa);
      masked.v[c] = pv * wa;
      r1.add(norm(phi.grad_x(x, t)) * wa);
      r2.add(std::max(phi.dt(x, t), 0.0) * wpos * wa);
      if (f.v[c] > spec.lambda) r3.add(pv);
    }
    sup_mass = std::max(sup_mass, mass.value() * g.cell_measure());
    tv_term.add(tau * total_variation(masked));
    rhs1.add(tau * r1.value() * g.cell_measure());
    rhs2.add(tau * r2.value() * g.cell_measure());
    rhs3.add(tau * r3.value() * g.cell_measure());
  }
  out.lhs = sup_mass + tv_term.value();
  out.rhs_gradphi = rhs1.value();
  out.rhs_dtphi = rhs2.value();
  out.rhs_indicator = rhs3.value();
  return out;
}

namespace {

double cylinder_average_power(const TimeSeries& u, const CylinderSlice& s,
                              double level, double p) {
  KahanSum acc;
  for (size_t si = 0; si < s.stamps.size(); ++si) {
    const ScalarField& f = u.frames[s.stamps[si]];
    KahanSum cells;
    for (int c : s.cells)
      cells.add(positive_power(f.v[c] - level, p));
    acc.add(s.weights[si] * cells.value() * f.grid.cell_measure());
  }
  return acc.value() / (s.space_measure * s.time_measure);
}

double excess_level(const TimeSeries& u, const Cylinder& cyl,
                    const DeGiorgiConfig& cfg, double* avg_out) {
  const int n = u.grid().dim;
  if (!(cfg.r > n))
    throw InvalidParam("degiorgi: integrability exponent must exceed dim");
  if (!(cfg.xi > 0.0) || !(cfg.alpha >= 1.0))
    throw InvalidParam("degiorgi: need xi > 0 and alpha >= 1");
  const CylinderSlice q0 = slice(u, cyl);
  const double avg = cylinder_average_power(u, q0, cfg.k0, cfg.r) +
                     cyl.theta * cyl.rho;
  if (avg_out) *avg_out = avg;
  const double shape =
      std::pow(std::pow(1.0 + 1.0 / cfg.xi, 1.0 + 1.0 / n) / cyl.theta,
               static_cast<double>(n) / (cfg.r - n));
  return cfg.c_cal * shape * std::pow(avg, 1.0 / (cfg.r - n)) + cyl.rho +
         cfg.xi * cyl.theta;
}

}  // namespace

DeGiorgiResult degiorgi_supbound(const TimeSeries& u, const Cylinder& cyl,
                                 const DeGiorgiConfig& cfg) {
  DeGiorgiResult res;
  res.excess = excess_level(u, cyl, cfg, &res.average_term);
  res.bound = cfg.k0 + res.excess;

  bool started_decreasing = false;
  double prev = 0.0;
  for (int i = 0; i <= cfg.max_levels; ++i) {
    const double pow2 = std::ldexp(1.0, -i);  // exact dyadic scaling
    DeGiorgiRow row;
    row.i = i;
    row.k_i = cfg.k0 + (1.0 - pow2) * res.excess;
    row.rho_i = 0.5 * cyl.rho + 0.5 * pow2 * cyl.rho;
    Cylinder qi = cyl;
    qi.rho = row.rho_i;
    const CylinderSlice si = slice(u, qi);
    row.y_i = cylinder_average_power(u, si, row.k_i, 2.0);
    for (size_t sj = 0; sj < si.stamps.size(); ++sj)
      for (int c : si.cells)
        if (u.frames[si.stamps[sj]].v[c] > row.k_i) ++row.cells_above;
    if (i > 0) {
      if (row.y_i < prev - 1e-15) started_decreasing = true;
      if (started_decreasing && row.y_i > prev + 1e-12 * (1.0 + prev))
        res.levels_decreasing = false;
    }
    prev = row.y_i;
    res.trace.push_back(row);
    if (row.y_i == 0.0) break;
  }
  if (!started_decreasing && res.trace.size() > 1 &&
      res.trace.back().y_i > 0.0)
    res.levels_decreasing = false;
  return res;
}

double degiorgi_required_c(const TimeSeries& u, const Cylinder& cyl,
                           const DeGiorgiConfig& cfg) {
  const double actual = cylinder_max(u, cyl.shrink_space(0.5));
  DeGiorgiConfig probe = cfg;
  probe.c_cal = 0.0;
  double avg = 0.0;
  const double base = excess_level(u, cyl, probe, &avg);
  const double need = actual - cfg.k0 - base;
  if (need <= 0.0) return 0.0;
  const int n = u.grid().dim;
  const double shape =
      std::pow(std::pow(1.0 + 1.0 / cfg.xi, 1.0 + 1.0 / n) / cyl.theta,
               static_cast<double>(n) / (cfg.r - n));
  return need / (shape * std::pow(avg, 1.0 / (cfg.r - n)));
}

double cylinder_max(const TimeSeries& u, const Cylinder& cyl) {
  const CylinderSlice s = slice(u, cyl);
  double m = -1e300;
  for (size_t si = 0; si < s.stamps.size(); ++si)
    for (int c : s.cells)
      m = std::max(m, u.frames[s.stamps[si]].v[c]);
  return m;
}

ScalarField unbounded_example(int n, const GridSpec& grid, double t) {
  if (n < 2) throw InvalidParam("unbounded_example: need dimension >= 2");
  ScalarField f(grid);
  const double cap = (n - 1) / (grid.h / 2.0);
  const double decay = std::max(0.0, 1.0 - t);
  for (std::int64_t c = 0; c < grid.cell_count(); ++c) {
    const Point p = grid.cell_center(static_cast<int>(c));
    const double r = std::hypot(p.x, p.y);
    const double v = r > 0.0 ? (n - 1) / r : cap;
    f.v[static_cast<size_t>(c)] = decay * std::min(v, cap);
  }
  return f;
}

std::vector<ShellRow> radial_growth_table(const ScalarField& u, int max_j) {
  const GridSpec& g = u.grid;
  std::vector<ShellRow> rows;
  for (int j = 0; j <= max_j; ++j) {
    const double r_hi = std::ldexp(1.0, -j);
    const double r_lo = 0.5 * r_hi;
    if (r_hi < 2.0 * g.h) break;  // h-cap
    ShellRow row;
    row.j = j;
    row.radius = r_hi;
    row.max_value = -1e300;
    for (std::int64_t c = 0; c < g.cell_count(); ++c) {
      const Point p = g.cell_center(static_cast<int>(c));
      const double r = std::hypot(p.x, p.y);
      if (r >= r_lo && r < r_hi)
        row.max_value = std::max(row.max_value, u.v[static_cast<size_t>(c)]);
    }
    if (row.max_value == -1e300) break;
    rows.push_back(row);
  }
  return rows;
}

TimeSeries semicontinuous_envelope(const TimeSeries& u,
                                   const std::vector<double>& thetas) {
  if (u.empty()) throw EmptySeries("semicontinuous_envelope: empty series");
  const GridSpec& g = u.grid();
  double theta_max = 0.0;
  for (double t : thetas) theta_max = std::max(theta_max, t);
  const double window = theta_max * g.h;

  TimeSeries out;
  for (size_t k = 0; k < u.size(); ++k) {
    ScalarField f(g);
    size_t k_lo = k;
    while (k_lo > 0 && u.times[k] - u.times[k_lo - 1] <= window + 1e-15)
      --k_lo;
    for (int iy = 0; iy < g.ny; ++iy)
      for (int ix = 0; ix < g.nx; ++ix) {
        double m = -1e300;
        for (size_t kk = k_lo; kk <= k; ++kk)
          for (int dy = -1; dy <= 1; ++dy)
            for (int dx = -1; dx <= 1; ++dx) {
              const int jx = ix + dx, jy = iy + dy;
              if (jx < 0 || jx >= g.nx || jy < 0 || jy >= g.ny) continue;
              if (g.dim == 1 && dy != 0) continue;
              m = std::max(m, u.frames[kk].at(jx, jy));
            }
        f.at(ix, iy) = m;
      }
    out.push(u.times[k], std::move(f));
  }
  return out;
}

std::vector<double> fast_geometric_recursion(double y1, double c, double b,
                                             double beta, int iters) {
  // First update uses b^0; the self-similar solution y_i = thr * b^(-i/beta)
  // then makes the threshold below exact.
  std::vector<double> ys{y1};
  double y = y1;
  for (int i = 0; i < iters; ++i) {
    y = c * std::pow(b, i) * std::pow(y, 1.0 + beta);
    if (!std::isfinite(y)) {
      ys.push_back(1e300);
      break;
    }
    ys.push_back(y);
  }
  return ys;
}

double fast_geometric_threshold(double c, double b, double beta) {
  return std::pow(c, -1.0 / beta) * std::pow(b, -1.0 / (beta * beta));
}

}  // namespace boundedness
}  // namespace lgf
