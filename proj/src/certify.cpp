#include "lgf/certify.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <random>

#include "lgf/mollify.hpp"

namespace lgf {
namespace certify {

namespace {

// Smooth compactly supported bump profile, C^2 at the rim.
double bump(double r) {
  if (r >= 1.0) return 0.0;
  const double q = 1.0 - r * r;
  return q * q * q;
}

struct BumpSpec {
  Point center;
  double width = 0.25;
  double t_center = 0.5;
  double t_width = 0.3;
  double amplitude = 1.0;
  bool clip_boundary = true;  // force zero trace (interior support)
};

TimeSeries make_bump_series(const TimeSeries& u, const BumpSpec& b) {
  const GridSpec& g = u.grid();
  const double T = u.times.back();
  TimeSeries phi;
  for (size_t k = 0; k < u.size(); ++k) {
    const double t = u.times[k];
    const double tw = bump(std::abs(t - b.t_center * T) / (b.t_width * T));
    ScalarField f(g, 0.0);
    // First and last frames vanish: compact support in time.
    if (k != 0 && k + 1 != u.size() && tw != 0.0) {
      for (int iy = 0; iy < g.ny; ++iy)
        for (int ix = 0; ix < g.nx; ++ix) {
          if (b.clip_boundary &&
              (ix < 2 || ix >= g.nx - 2 ||
               (g.dim == 2 && (iy < 2 || iy >= g.ny - 2))))
            continue;
          const Point p = g.cell_center(ix, iy);
          const double r =
              std::hypot(p.x - b.center.x, g.dim == 2 ? p.y - b.center.y : 0.0) /
              b.width;
          f.at(ix, iy) = b.amplitude * tw * bump(r);
        }
    }
    phi.push(t, std::move(f));
  }
  return phi;
}

double extent_x(const GridSpec& g) { return g.nx * g.h; }
double extent_y(const GridSpec& g) { return g.dim == 2 ? g.ny * g.h : 0.0; }

}  // namespace

std::vector<TestFunction> TestFunctionFamily::build(const TimeSeries& u) const {
  const GridSpec& g = u.grid();
  const double ex = extent_x(g), ey = extent_y(g);
  const Point c0{g.origin.x + 0.5 * ex, g.origin.y + 0.5 * ey};
  const Point c1{g.origin.x + 0.3 * ex, g.origin.y + 0.6 * ey};

  std::vector<TestFunction> fam;
  const auto add = [&](const std::string& id, bool interior, BumpSpec b) {
    b.clip_boundary = interior;
    fam.push_back({id, interior, make_bump_series(u, b)});
  };

  // Canonical set (version v1): fixed geometry, bit-stable across runs.
  add("v1/center", true, {c0, 0.3 * ex, 0.5, 0.35, 1.0});
  add("v1/offcenter", true, {c1, 0.2 * ex, 0.45, 0.3, 1.0});
  add("v1/offcenter-neg", true, {c1, 0.2 * ex, 0.45, 0.3, -1.0});
  add("v1/narrow-time", true, {c0, 0.25 * ex, 0.5, 0.12, 1.0});
  if (include_boundary) {
    add("v1/boundary-left", false,
        {{g.origin.x, g.origin.y + 0.5 * ey}, 0.3 * ex, 0.5, 0.3, 1.0});
    add("v1/boundary-corner", false,
        {{g.origin.x, g.origin.y}, 0.35 * ex, 0.55, 0.3, -1.0});
  }

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.15, 0.85);
  std::uniform_real_distribution<double> wd(0.1, 0.3);
  std::uniform_real_distribution<double> td(0.15, 0.45);
  std::uniform_real_distribution<double> ad(-1.0, 1.0);
  for (int i = 0; i < random_count; ++i) {
    BumpSpec b;
    b.center = {g.origin.x + unit(rng) * ex, g.origin.y + unit(rng) * ey};
    b.width = wd(rng) * ex;
    b.t_center = unit(rng);
    b.t_width = td(rng);
    b.amplitude = ad(rng) >= 0 ? 1.0 : -1.0;
    const bool interior = !include_boundary || i % 3 != 2;
    add("rnd/" + std::to_string(i), interior, b);
  }
  return fam;
}

namespace {

double trace_l2(const TraceSeries& g) {
  KahanSum acc;
  for (size_t k = 1; k < g.size(); ++k) {
    const double tau = g.times[k] - g.times[k - 1];
    KahanSum s;
    for (double v : g.frames[k].v) s.add(v * v);
    acc.add(tau * s.value() * g.frames[k].grid.face_measure());
  }
  return std::sqrt(std::max(0.0, acc.value()));
}

void require_dual(const Trajectory& traj, const char* where) {
  if (traj.z.empty() || traj.z.size() + 1 != traj.u.size())
    throw MissingDual(std::string(where) + ": trajectory has no dual frames");
}

void require_box(const Trajectory& traj, const char* where) {
  if (!traj.mask.empty())
    throw InvalidParam(std::string(where) +
                       ": certificates support box domains only");
}

// Time-integrated pairing sum_{k>=1} tau_k <z_k, K phi_k>, h^n-weighted.
double pair_z_gradphi(const Trajectory& traj, const TimeSeries& phi) {
  KahanSum acc;
  for (size_t k = 1; k < traj.u.size(); ++k) {
    const double tau = traj.u.times[k] - traj.u.times[k - 1];
    const CellVectorField kphi = cell_gradient(phi.frames[k]);
    const CellVectorField& z = traj.z.frames[k - 1];
    KahanSum s;
    for (size_t c = 0; c < kphi.x.size(); ++c)
      s.add(dot(z.at(c), kphi.at(c)));
    acc.add(tau * s.value() * traj.u.grid().cell_measure());
  }
  return acc.value();
}

// Backward-Euler-compatible sum for the u d_t phi integral: forward
// differences of phi paired against u, exact under Abel summation with the
// scheme's rate (phi vanishes at the first and last stamp).
double pair_u_dtphi(const TimeSeries& u, const TimeSeries& phi,
                    bool square_u = false) {
  KahanSum acc;
  for (size_t k = 0; k + 1 < u.size(); ++k) {
    KahanSum s;
    for (size_t c = 0; c < u.frames[k].v.size(); ++c) {
      const double uv = square_u ? u.frames[k].v[c] * u.frames[k].v[c]
                                 : u.frames[k].v[c];
      s.add(uv * (phi.frames[k + 1].v[c] - phi.frames[k].v[c]));
    }
    acc.add(s.value() * u.grid().cell_measure());
  }
  return acc.value();
}

double phi_mass(const Trajectory& traj, const TimeSeries& phi) {
  const GridSpec& g = traj.u.grid();
  KahanSum acc;
  for (size_t k = 1; k < phi.size(); ++k) {
    const double tau = phi.times[k] - phi.times[k - 1];
    const CellVectorField kphi = cell_gradient(phi.frames[k]);
    KahanSum s;
    for (size_t c = 0; c < kphi.x.size(); ++c) s.add(norm(kphi.at(c)));
    acc.add(tau * s.value() * g.cell_measure());
    const BoundaryTrace tp = trace(phi.frames[k]);
    KahanSum b;
    for (double v : tp.v) b.add(std::abs(v));
    acc.add(tau * b.value() * g.face_measure());
  }
  for (size_t k = 0; k + 1 < phi.size(); ++k) {
    KahanSum s;
    for (size_t c = 0; c < phi.frames[k].v.size(); ++c)
      s.add(std::abs(phi.frames[k + 1].v[c] - phi.frames[k].v[c]));
    acc.add(s.value() * g.cell_measure());
  }
  return acc.value();
}

}  // namespace

double problem_scale(const Trajectory& traj, const TraceSeries& g) {
  return space_time_l2(traj.u) + trace_l2(g) + 1.0;
}

ConditionResult check_subgradient(const Trajectory& traj,
                                  const LagrangianSpec& spec, double tol) {
  require_dual(traj, "check_subgradient");
  require_box(traj, "check_subgradient");
  const GridSpec& g = traj.u.grid();
  ConditionResult res;
  res.name = "subgradient";
  res.tol = tol;
  for (size_t k = 1; k < traj.u.size(); ++k) {
    const CellVectorField ku = cell_gradient(traj.u.frames[k]);
    const CellVectorField& z = traj.z.frames[k - 1];
    for (std::int64_t c = 0; c < g.cell_count(); ++c) {
      const Point x = g.cell_center(static_cast<int>(c));
      const Vec xi = ku.at(static_cast<size_t>(c));
      const ExtReal gap =
          lag_fenchel_gap(spec, x, xi, z.at(static_cast<size_t>(c)));
      const double rel =
          gap.value_or_huge() / (1.0 + lag_eval(spec, x, xi));
      if (rel > res.residual) {
        res.residual = rel;
        res.witness = {static_cast<int>(k), static_cast<int>(c), ""};
      }
    }
  }
  res.pass = res.residual <= tol;
  return res;
}

ConditionResult check_divergence_condition(const Trajectory& traj,
                                           const TraceSeries& g,
                                           const LagrangianSpec& spec,
                                           const std::vector<TestFunction>& fam,
                                           double tol) {
  require_dual(traj, "check_divergence_condition");
  require_box(traj, "check_divergence_condition");
  const GridSpec& grid = traj.u.grid();
  const double scale = problem_scale(traj, g);
  ConditionResult res;
  res.name = "divergence";
  res.tol = tol;
  res.residual = -1e300;
  for (const auto& tf : fam) {
    const double lhs =
        pair_z_gradphi(traj, tf.phi) - pair_u_dtphi(traj.u, tf.phi);
    KahanSum rhs;
    for (size_t k = 1; k < traj.u.size(); ++k) {
      const double tau = traj.u.times[k] - traj.u.times[k - 1];
      const BoundaryTrace tu = trace(traj.u.frames[k]);
      const BoundaryTrace tphi = trace(tf.phi.frames[k]);
      KahanSum b;
      for (int bf = 0; bf < grid.boundary_face_count(); ++bf) {
        const double finf = lag_recession(spec, grid.boundary_face_center(bf),
                                          grid.boundary_face_normal(bf));
        const double r = g.frames[k].v[bf] - tu.v[bf];
        b.add((std::abs(tphi.v[bf] + r) - std::abs(r)) * finf);
      }
      rhs.add(tau * b.value() * grid.face_measure());
    }
    const double resid = (lhs - rhs.value()) /
                         ((phi_mass(traj, tf.phi) + 1e-30) * scale);
    if (resid > res.residual) {
      res.residual = resid;
      res.witness.phi_id = tf.id;
    }
  }
  res.pass = res.residual <= tol;
  res.note = "one-sided; no counterexample found among " +
             std::to_string(fam.size()) + " phi";
  return res;
}

ConditionResult check_pairing_condition(const Trajectory& traj,
                                        const LagrangianSpec& spec,
                                        const std::vector<TestFunction>& fam,
                                        double tol) {
  require_dual(traj, "check_pairing_condition");
  require_box(traj, "check_pairing_condition");
  const GridSpec& g = traj.u.grid();
  ConditionResult res;
  res.name = "pairing";
  res.tol = tol;
  int used = 0;
  for (const auto& tf : fam) {
    if (!tf.interior) continue;
    ++used;
    KahanSum fterm, fstar_term, uz_term;
    bool infeasible = false;
    for (size_t k = 1; k < traj.u.size(); ++k) {
      const double tau = traj.u.times[k] - traj.u.times[k - 1];
      const CellVectorField ku = cell_gradient(traj.u.frames[k]);
      const CellVectorField kphi = cell_gradient(tf.phi.frames[k]);
      const CellVectorField& z = traj.z.frames[k - 1];
      KahanSum a, b, c_acc;
      for (std::int64_t c = 0; c < g.cell_count(); ++c) {
        const size_t ci = static_cast<size_t>(c);
        const Point x = g.cell_center(static_cast<int>(c));
        const double phi_v = tf.phi.frames[k].v[ci];
        a.add(phi_v * lag_eval(spec, x, ku.at(ci)));
        const ExtReal fs = lag_conjugate(spec, x, z.at(ci));
        if (fs.is_infinite()) {
          infeasible = true;
          break;
        }
        b.add(phi_v * fs.value());
        c_acc.add(traj.u.frames[k].v[ci] * dot(z.at(ci), kphi.at(ci)));
      }
      if (infeasible) break;
      fterm.add(tau * a.value() * g.cell_measure());
      fstar_term.add(tau * b.value() * g.cell_measure());
      uz_term.add(tau * c_acc.value() * g.cell_measure());
    }
    double resid;
    if (infeasible) {
      resid = 1e300;
    } else {
      const double usq = 0.5 * pair_u_dtphi(traj.u, tf.phi, true);
      const double total =
          fterm.value() + fstar_term.value() - usq + uz_term.value();
      const double denom = std::abs(fterm.value()) +
                           std::abs(fstar_term.value()) + std::abs(usq) +
                           std::abs(uz_term.value()) + 1.0;
      resid = std::abs(total) / denom;
    }
    if (resid > res.residual) {
      res.residual = resid;
      res.witness.phi_id = tf.id;
    }
  }
  res.pass = res.residual <= tol;
  res.note = std::to_string(used) + " interior phi";
  return res;
}

ConditionResult check_initial_condition(const Trajectory& traj,
                                        const ScalarField& u0,
                                        double tol_init) {
  const double T = traj.u.times.back();
  const double scale2 = std::pow(l2_norm(u0) + 1.0, 2);
  ConditionResult res;
  res.name = "initial";
  double r_prev = 1e300;
  bool decreasing = true;
  double r_last = 0.0;
  int windows = 0;
  std::string curve = "r(h) =";
  for (double hwin : {T / 8.0, T / 16.0, T / 32.0}) {
    KahanSum acc;
    int hits = 0;
    for (size_t k = 1; k < traj.u.size(); ++k) {
      if (traj.u.times[k] > hwin + 1e-12) break;
      const double tau = traj.u.times[k] - traj.u.times[k - 1];
      ScalarField d = traj.u.frames[k];
      for (size_t c = 0; c < d.v.size(); ++c) d.v[c] -= u0.v[c];
      const double n = l2_norm(d);
      acc.add(tau * n * n);
      ++hits;
    }
    if (hits == 0) {
      res.note = "window below time resolution (tau-limited)";
      break;
    }
    const double r = acc.value() / hwin;
    if (r > r_prev + 1e-14) decreasing = false;
    r_prev = r;
    r_last = r;
    ++windows;
    char buf[32];
    std::snprintf(buf, sizeof buf, " %.3e", r);
    curve += buf;
  }
  if (windows < 3 && res.note.empty())
    res.note = "fewer than three resolvable windows (tau-limited); " + curve;
  else if (res.note.empty())
    res.note = curve;
  res.residual = r_last / scale2;
  res.tol = tol_init;
  res.pass = decreasing && res.residual <= tol_init;
  return res;
}

std::vector<TestFunction> comparison_battery(const Trajectory& traj,
                                             const Problem& prob,
                                             std::uint64_t seed) {
  const GridSpec& g = traj.u.grid();
  std::vector<TestFunction> maps;

  double lo = 1e300, hi = -1e300, mean = 0.0;
  for (double v : traj.u.frames.front().v) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
    mean += v;
  }
  mean /= static_cast<double>(traj.u.frames.front().v.size());

  const auto const_series = [&](double value) {
    TimeSeries s;
    for (size_t k = 0; k < traj.u.size(); ++k)
      s.push(traj.u.times[k], ScalarField(g, value));
    return s;
  };
  maps.push_back({"const/mean", true, const_series(mean)});
  maps.push_back({"const/lo", true, const_series(lo)});
  maps.push_back({"const/hi", true, const_series(hi)});

  // Time mollification of the trajectory itself.
  const double T = traj.u.times.back();
  const double tau0 = traj.u.times[1] - traj.u.times[0];
  MollifyConfig mc{std::max(4.0 * tau0, T / 16.0), traj.u.frames.front()};
  maps.push_back({"mollified", true, exp_mollify(traj.u, mc)});

  // u plus/minus interior bumps of decreasing size (stationarity probes).
  std::mt19937_64 rng(seed);
  const double ex = g.nx * g.h, ey = g.dim == 2 ? g.ny * g.h : 0.0;
  for (double eps : {0.1, 0.01}) {
    for (double sign : {1.0, -1.0}) {
      BumpSpec b;
      b.center = {g.origin.x + 0.5 * ex, g.origin.y + 0.5 * ey};
      b.width = 0.3 * ex;
      b.t_center = 0.5;
      b.t_width = 0.4;
      b.amplitude = sign * eps;
      b.clip_boundary = true;
      TimeSeries bumps = make_bump_series(traj.u, b);
      for (size_t k = 0; k < bumps.size(); ++k)
        for (size_t c = 0; c < bumps.frames[k].v.size(); ++c)
          bumps.frames[k].v[c] += traj.u.frames[k].v[c];
      maps.push_back({"u" + std::string(sign > 0 ? "+" : "-") +
                          "bump/" + std::to_string(eps),
                      true, std::move(bumps)});
    }
  }

  if (!prob.g_fields.empty()) {
    TimeSeries gs;
    for (size_t k = 0; k < traj.u.size(); ++k)
      gs.push(traj.u.times[k], sample_series(prob.g_fields, traj.u.times[k]));
    maps.push_back({"g-extension", false, std::move(gs)});
  }
  return maps;
}

namespace {

TraceSeries g_traces_on_stamps(const Problem& prob, const TimeSeries& u) {
  TraceSeries g;
  for (size_t k = 0; k < u.size(); ++k) {
    const double t = u.times[k];
    if (!prob.g_fields.empty())
      g.push(t, trace(sample_series(prob.g_fields, t)));
    else
      g.push(t, sample_traces(prob.g_traces, t));
  }
  return g;
}

// Shared core of the variational / intermediate inequalities. The z-form
// replaces the comparison map's f-integral by <z, grad v> and adds the
// conjugate mass on the left.
ConditionResult comparison_inequality(const Trajectory& traj,
                                      const Problem& prob,
                                      const LagrangianSpec& spec,
                                      const std::vector<TestFunction>& maps,
                                      double tol, bool z_form) {
  require_box(traj, z_form ? "check_intermediate_condition"
                           : "check_variational_inequality");
  if (z_form) require_dual(traj, "check_intermediate_condition");
  const GridSpec& g = traj.u.grid();
  const TraceSeries gtr = g_traces_on_stamps(prob, traj.u);
  ConditionResult res;
  res.name = z_form ? "intermediate" : "variational";
  res.tol = tol;
  res.residual = -1e300;

  const size_t K = traj.u.size() - 1;
  std::vector<size_t> checkpoints{K / 4, K / 2, (3 * K) / 4, K};
  std::sort(checkpoints.begin(), checkpoints.end());
  checkpoints.erase(std::unique(checkpoints.begin(), checkpoints.end()),
                    checkpoints.end());

  // Left-hand energy of the trajectory, accumulated per step.
  std::vector<double> lhs_steps(K + 1, 0.0), fstar_steps(K + 1, 0.0);
  for (size_t k = 1; k <= K; ++k) {
    const double tau = traj.u.times[k] - traj.u.times[k - 1];
    const double fu = f_integral(spec, traj.u.frames[k]);
    const double bu =
        boundary_integral(trace(traj.u.frames[k]), gtr.frames[k], spec);
    lhs_steps[k] = tau * (fu + bu);
    if (z_form) {
      KahanSum s;
      bool inf = false;
      for (std::int64_t c = 0; c < g.cell_count() && !inf; ++c) {
        const ExtReal fs =
            lag_conjugate(spec, g.cell_center(static_cast<int>(c)),
                          traj.z.frames[k - 1].at(static_cast<size_t>(c)));
        if (fs.is_infinite())
          inf = true;
        else
          s.add(fs.value());
      }
      fstar_steps[k] = inf ? 1e300 : tau * s.value() * g.cell_measure();
    }
  }

  for (const auto& tf : maps) {
    const TimeSeries& v = tf.phi;
    std::vector<double> rhs_steps(K + 1, 0.0), dt_steps(K + 1, 0.0);
    for (size_t k = 1; k <= K; ++k) {
      const double tau = traj.u.times[k] - traj.u.times[k - 1];
      double main_term;
      if (z_form) {
        const CellVectorField kv = cell_gradient(v.frames[k]);
        KahanSum s;
        for (size_t c = 0; c < kv.x.size(); ++c)
          s.add(dot(traj.z.frames[k - 1].at(c), kv.at(c)));
        main_term = s.value() * g.cell_measure();
      } else {
        main_term = f_integral(spec, v.frames[k]);
      }
      const double bv =
          boundary_integral(trace(v.frames[k]), gtr.frames[k], spec);
      rhs_steps[k] = tau * (main_term + bv);
      // d_t v (v - u) with backward differences on the stamps.
      KahanSum s;
      for (size_t c = 0; c < v.frames[k].v.size(); ++c)
        s.add((v.frames[k].v[c] - v.frames[k - 1].v[c]) *
              (v.frames[k].v[c] - traj.u.frames[k].v[c]));
      dt_steps[k] = s.value() * g.cell_measure();
    }

    ScalarField d0 = v.frames[0];
    for (size_t c = 0; c < d0.v.size(); ++c) d0.v[c] -= traj.u.frames[0].v[c];
    const double init_half = 0.5 * inner(d0, d0);

    double lhs_acc = 0.0, rhs_acc = 0.0, fstar_acc = 0.0, dt_acc = 0.0;
    size_t cp = 0;
    for (size_t k = 1; k <= K && cp < checkpoints.size(); ++k) {
      lhs_acc += lhs_steps[k];
      rhs_acc += rhs_steps[k];
      fstar_acc += fstar_steps[k];
      dt_acc += dt_steps[k];
      if (k != checkpoints[cp]) continue;
      ++cp;
      ScalarField dk = v.frames[k];
      for (size_t c = 0; c < dk.v.size(); ++c)
        dk.v[c] -= traj.u.frames[k].v[c];
      const double final_half = 0.5 * inner(dk, dk);
      const double lhs = lhs_acc + fstar_acc;
      const double rhs = rhs_acc + dt_acc + init_half - final_half;
      const double denom = std::abs(lhs_acc) + std::abs(fstar_acc) +
                           std::abs(rhs_acc) + std::abs(dt_acc) + init_half +
                           final_half + 1.0;
      const double resid = (lhs - rhs) / denom;
      if (resid > res.residual) {
        res.residual = resid;
        res.witness = {static_cast<int>(k), -1, tf.id};
      }
    }
  }
  res.pass = res.residual <= tol;
  res.note = "one-sided; no counterexample found among " +
             std::to_string(maps.size()) + " comparison maps";
  return res;
}

}  // namespace

ConditionResult check_variational_inequality(
    const Trajectory& traj, const Problem& prob, const LagrangianSpec& spec,
    const std::vector<TestFunction>& maps, double tol) {
  return comparison_inequality(traj, prob, spec, maps, tol, false);
}

ConditionResult check_intermediate_condition(
    const Trajectory& traj, const Problem& prob, const LagrangianSpec& spec,
    const std::vector<TestFunction>& maps, double tol) {
  return comparison_inequality(traj, prob, spec, maps, tol, true);
}

ComparisonReport check_comparison(const Trajectory& a, const Trajectory& b,
                                  double tol) {
  if (a.u.size() != b.u.size() || !a.u.grid().same_as(b.u.grid()))
    throw ShapeMismatch("check_comparison: incompatible trajectories");
  ComparisonReport rep;
  const GridSpec& g = a.u.grid();
  double scale2 = 0.0;
  for (size_t k = 0; k < a.u.size(); ++k) {
    KahanSum s;
    for (size_t c = 0; c < a.u.frames[k].v.size(); ++c) {
      const double d =
          std::max(a.u.frames[k].v[c] - b.u.frames[k].v[c], 0.0);
      s.add(d * d);
    }
    rep.curve.push_back(s.value() * g.cell_measure());
    scale2 = std::max(scale2, l2_norm(a.u.frames[k]) + l2_norm(b.u.frames[k]));
  }
  scale2 = (scale2 + 1.0) * (scale2 + 1.0);
  rep.pass = true;
  for (size_t k = 1; k < rep.curve.size(); ++k) {
    const double inc_from_start = rep.curve[k] - rep.curve[0];
    const double inc_step = rep.curve[k] - rep.curve[k - 1];
    rep.worst_increase =
        std::max(rep.worst_increase, std::max(inc_from_start, inc_step));
    if (inc_from_start > tol * scale2 || inc_step > tol * scale2)
      rep.pass = false;
  }
  return rep;
}

bool euler_lagrange_admissible(const Trajectory& traj, const Problem& prob,
                               const TestFunction& tf) {
  if (tf.interior) return true;
  const GridSpec& g = traj.u.grid();
  const TraceSeries gtr = g_traces_on_stamps(prob, traj.u);
  const double attach_tol = 1e-8 * problem_scale(traj, gtr);
  for (size_t k = 1; k < traj.u.size(); ++k) {
    const BoundaryTrace tphi = trace(tf.phi.frames[k]);
    const BoundaryTrace tu = trace(traj.u.frames[k]);
    for (int bf = 0; bf < g.boundary_face_count(); ++bf) {
      const double r = gtr.frames[k].v[bf] - tu.v[bf];
      if (std::abs(tphi.v[bf]) > 0.0 && std::abs(r) <= attach_tol)
        return false;
    }
  }
  return true;
}

ConditionResult check_euler_lagrange(const Trajectory& traj,
                                     const Problem& prob,
                                     const LagrangianSpec& spec,
                                     const std::vector<TestFunction>& fam,
                                     double tol) {
  require_box(traj, "check_euler_lagrange");
  if (!lag_smooth(spec))
    throw NotDifferentiable(
        "check_euler_lagrange: integrand has kinks; use the weak-form checks");
  const GridSpec& g = traj.u.grid();
  const TraceSeries gtr = g_traces_on_stamps(prob, traj.u);
  const TraceSeries utr = [&] {
    TraceSeries s;
    for (size_t k = 0; k < traj.u.size(); ++k)
      s.push(traj.u.times[k], trace(traj.u.frames[k]));
    return s;
  }();
  const double scale = problem_scale(traj, gtr);
  // Faces where the trace attaches to g: phi must vanish there.
  const double attach_tol = 1e-8 * scale;

  ConditionResult res;
  res.name = "euler-lagrange";
  res.tol = tol;
  const auto sign0 = [](double v) {
    return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0);
  };

  for (const auto& tf : fam) {
    // Admissibility: the trace restriction of the Euler-Lagrange test class.
    bool admissible = true;
    for (size_t k = 1; k < traj.u.size() && admissible; ++k) {
      const BoundaryTrace tphi = trace(tf.phi.frames[k]);
      for (int bf = 0; bf < g.boundary_face_count(); ++bf) {
        const double r = gtr.frames[k].v[bf] - utr.frames[k].v[bf];
        if (std::abs(tphi.v[bf]) > 0.0 && std::abs(r) <= attach_tol) {
          admissible = false;
          break;
        }
      }
    }
    if (!admissible) {
      if (!tf.interior)
        throw InvalidParam("check_euler_lagrange: phi '" + tf.id +
                           "' has nonzero trace where Tu = Tg");
      continue;
    }

    KahanSum zgrad;
    for (size_t k = 1; k < traj.u.size(); ++k) {
      const double tau = traj.u.times[k] - traj.u.times[k - 1];
      const CellVectorField ku = cell_gradient(traj.u.frames[k]);
      const CellVectorField kphi = cell_gradient(tf.phi.frames[k]);
      KahanSum s;
      for (std::int64_t c = 0; c < g.cell_count(); ++c) {
        const size_t ci = static_cast<size_t>(c);
        const Vec dz = lag_grad(spec, g.cell_center(static_cast<int>(c)),
                                ku.at(ci));
        s.add(dot(dz, kphi.at(ci)));
      }
      zgrad.add(tau * s.value() * g.cell_measure());
    }
    KahanSum bdry;
    for (size_t k = 1; k < traj.u.size(); ++k) {
      const double tau = traj.u.times[k] - traj.u.times[k - 1];
      const BoundaryTrace tphi = trace(tf.phi.frames[k]);
      KahanSum b;
      for (int bf = 0; bf < g.boundary_face_count(); ++bf) {
        const double finf = lag_recession(spec, g.boundary_face_center(bf),
                                          g.boundary_face_normal(bf));
        b.add(sign0(gtr.frames[k].v[bf] - utr.frames[k].v[bf]) * tphi.v[bf] *
              finf);
      }
      bdry.add(tau * b.value() * g.face_measure());
    }
    const double total =
        zgrad.value() - pair_u_dtphi(traj.u, tf.phi) - bdry.value();
    const double resid =
        std::abs(total) / ((phi_mass(traj, tf.phi) + 1e-30) * scale);
    if (resid > res.residual) {
      res.residual = resid;
      res.witness.phi_id = tf.id;
    }
  }
  res.pass = res.residual <= tol;
  return res;
}

CertificateReport certify_trajectory(const Trajectory& traj,
                                     const Problem& prob,
                                     const SolveConfig& solve_cfg,
                                     const CertifyConfig& cfg) {
  require_box(traj, "certify_trajectory");
  const LagrangianSpec spec = effective_spec(prob, solve_cfg);
  const TraceSeries gtr = g_traces_on_stamps(prob, traj.u);
  const double tau = traj.u.times[1] - traj.u.times[0];
  const double h = prob.grid.h;

  CertificateReport rep;
  rep.scale = problem_scale(traj, gtr);

  const auto fam = cfg.family.build(traj.u);
  const auto maps = comparison_battery(traj, prob, cfg.family.seed);

  rep.conditions.push_back(check_subgradient(traj, spec, cfg.tol_cert));
  rep.conditions.push_back(
      check_divergence_condition(traj, gtr, spec, fam, cfg.tol_cert));
  rep.conditions.push_back(
      check_pairing_condition(traj, spec, fam, cfg.pairing_tol(tau, h)));
  rep.conditions.push_back(
      check_initial_condition(traj, prob.u0, cfg.tol_init));
  rep.conditions.push_back(check_variational_inequality(
      traj, prob, spec, maps, cfg.vi_tol(tau, h)));
  rep.conditions.push_back(check_intermediate_condition(
      traj, prob, spec, maps, cfg.vi_tol(tau, h)));
  if (lag_smooth(spec)) {
    std::vector<TestFunction> el_fam;
    for (const auto& tf : fam)
      if (euler_lagrange_admissible(traj, prob, tf)) el_fam.push_back(tf);
    rep.conditions.push_back(check_euler_lagrange(traj, prob, spec, el_fam,
                                                  cfg.pairing_tol(tau, h)));
  }

  rep.overall_pass = true;
  for (const auto& c : rep.conditions) rep.overall_pass &= c.pass;
  return rep;
}

}  // namespace certify
}  // namespace lgf
