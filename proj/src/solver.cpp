#include "lgf/solver.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <optional>
#include <thread>

#include "lgf/mollify.hpp"

namespace lgf {

void Problem::validate() const {
  if (!(T > 0.0)) throw InvalidParam("problem: horizon must be positive");
  if (!u0.grid.same_as(grid)) throw GridMismatch("problem: u0 grid mismatch");
  for (double v : u0.v)
    if (!std::isfinite(v)) throw InvalidParam("problem: u0 not finite");
  if (g_fields.empty() && g_traces.empty())
    throw InvalidParam("problem: boundary data required");
  if (!g_fields.empty() && !g_fields.grid().same_as(grid))
    throw GridMismatch("problem: g field grid mismatch");
  if (!g_traces.empty() && !g_traces.grid().same_as(grid))
    throw GridMismatch("problem: g trace grid mismatch");
  if (masked()) {
    if (static_cast<std::int64_t>(mask.size()) != grid.cell_count())
      throw InvalidParam("problem: mask size mismatch");
    if (g_fields.empty())
      throw InvalidParam("problem: masked domains need full g fields");
  }
  if (!(spec.lambda > 0.0) || !(spec.big_lambda >= spec.lambda))
    throw InvalidParam("problem: growth bounds inconsistent");
}

void SolveConfig::validate() const {
  if (!(tau > 0.0)) throw InvalidConfig("solve: tau must be positive");
  if (mu < 0.0) throw InvalidConfig("solve: mu must be nonnegative");
  if (!(tol_rel > 0.0) || !(tol_abs > 0.0))
    throw InvalidConfig("solve: tolerances must be positive");
  if (max_iters < 1) throw InvalidConfig("solve: max_iters must be >= 1");
  if (theta_pd < 0.0 || theta_pd > 1.0)
    throw InvalidConfig("solve: theta_pd must lie in [0,1]");
}

LagrangianSpec effective_spec(const Problem& prob, const SolveConfig& cfg) {
  if (cfg.mu > 0.0) return lag_regularize(prob.spec, cfg.mu);
  return prob.spec;
}

ActiveTopology ActiveTopology::build(const Problem& prob,
                                     const LagrangianSpec& spec_eff) {
  const GridSpec& g = prob.grid;
  ActiveTopology t;
  t.grid = g;
  const auto n_cells = static_cast<size_t>(g.cell_count());
  t.active.assign(n_cells, 1);
  if (prob.masked())
    for (size_t c = 0; c < n_cells; ++c) t.active[c] = prob.mask[c] ? 1 : 0;
  t.active_count = 0;
  for (size_t c = 0; c < n_cells; ++c) t.active_count += t.active[c];
  if (t.active_count == 0) throw InvalidParam("topology: no active cells");

  t.fx_active.assign(static_cast<size_t>(g.x_face_count()), 0);
  t.fy_active.assign(static_cast<size_t>(g.y_face_count()), 0);
  t.cnt_x.assign(n_cells, 0);
  t.cnt_y.assign(n_cells, 0);

  const auto add_dirichlet = [&](int cell, Vec normal, Point loc, int box_face,
                                 int ghost) {
    DirichletFace f;
    f.cell = cell;
    f.normal = normal;
    f.location = loc;
    f.finf_nu = lag_recession(spec_eff, loc, normal);
    f.box_face = box_face;
    f.ghost_cell = ghost;
    t.dirichlet.push_back(f);
  };

  for (int iy = 0; iy < g.ny; ++iy)
    for (int fx = 0; fx < g.nx - 1; ++fx) {
      const int lo = g.cell_index(fx, iy);
      const int hi = g.cell_index(fx + 1, iy);
      const bool a = t.active[lo], b = t.active[hi];
      const Point loc{g.origin.x + (fx + 1) * g.h,
                      g.origin.y + (iy + 0.5) * g.h};
      if (a && b) {
        t.fx_active[g.x_face_index(fx, iy)] = 1;
        t.xf_lo.push_back(lo);
        t.xf_hi.push_back(hi);
        ++t.cnt_x[lo];
        ++t.cnt_x[hi];
      } else if (a) {
        add_dirichlet(lo, {1.0, 0.0}, loc, -1, hi);
      } else if (b) {
        add_dirichlet(hi, {-1.0, 0.0}, loc, -1, lo);
      }
    }
  if (g.dim == 2)
    for (int fy = 0; fy < g.ny - 1; ++fy)
      for (int ix = 0; ix < g.nx; ++ix) {
        const int lo = g.cell_index(ix, fy);
        const int hi = g.cell_index(ix, fy + 1);
        const bool a = t.active[lo], b = t.active[hi];
        const Point loc{g.origin.x + (ix + 0.5) * g.h,
                        g.origin.y + (fy + 1) * g.h};
        if (a && b) {
          t.fy_active[g.y_face_index(ix, fy)] = 1;
          t.yf_lo.push_back(lo);
          t.yf_hi.push_back(hi);
          ++t.cnt_y[lo];
          ++t.cnt_y[hi];
        } else if (a) {
          add_dirichlet(lo, {0.0, 1.0}, loc, -1, hi);
        } else if (b) {
          add_dirichlet(hi, {0.0, -1.0}, loc, -1, lo);
        }
      }

  for (int bf = 0; bf < g.boundary_face_count(); ++bf) {
    const int cell = g.boundary_face_cell(bf);
    if (!t.active[cell]) continue;
    add_dirichlet(cell, g.boundary_face_normal(bf), g.boundary_face_center(bf),
                  bf, -1);
  }
  return t;
}

namespace {

struct Work {
  const ActiveTopology* topo = nullptr;
  const LagrangianSpec* spec = nullptr;
  std::vector<Point> centers;

  // (K v)_c: per-axis mean of differences across adjacent active faces.
  void apply_K(const std::vector<double>& v, std::vector<double>& kx,
               std::vector<double>& ky) const {
    const GridSpec& g = topo->grid;
    const double inv_h = 1.0 / g.h;
    std::fill(kx.begin(), kx.end(), 0.0);
    std::fill(ky.begin(), ky.end(), 0.0);
    for (size_t f = 0; f < topo->xf_lo.size(); ++f) {
      const int lo = topo->xf_lo[f], hi = topo->xf_hi[f];
      const double d = (v[hi] - v[lo]) * inv_h;
      kx[lo] += d / topo->cnt_x[lo];
      kx[hi] += d / topo->cnt_x[hi];
    }
    for (size_t f = 0; f < topo->yf_lo.size(); ++f) {
      const int lo = topo->yf_lo[f], hi = topo->yf_hi[f];
      const double d = (v[hi] - v[lo]) * inv_h;
      ky[lo] += d / topo->cnt_y[lo];
      ky[hi] += d / topo->cnt_y[hi];
    }
  }

  // (K^T z)_cell for a cell-based dual z.
  void apply_Kt(const std::vector<double>& zx, const std::vector<double>& zy,
                std::vector<double>& out) const {
    const GridSpec& g = topo->grid;
    const double inv_h = 1.0 / g.h;
    std::fill(out.begin(), out.end(), 0.0);
    for (size_t f = 0; f < topo->xf_lo.size(); ++f) {
      const int lo = topo->xf_lo[f], hi = topo->xf_hi[f];
      const double w =
          zx[lo] / topo->cnt_x[lo] + zx[hi] / topo->cnt_x[hi];
      out[hi] += w * inv_h;
      out[lo] -= w * inv_h;
    }
    for (size_t f = 0; f < topo->yf_lo.size(); ++f) {
      const int lo = topo->yf_lo[f], hi = topo->yf_hi[f];
      const double w =
          zy[lo] / topo->cnt_y[lo] + zy[hi] / topo->cnt_y[hi];
      out[hi] += w * inv_h;
      out[lo] -= w * inv_h;
    }
  }

  double energy(const std::vector<double>& v, const std::vector<double>& u_prev,
                const std::vector<double>& gvals, double tau) const {
    const GridSpec& g = topo->grid;
    std::vector<double> kx(v.size()), ky(v.size());
    apply_K(v, kx, ky);
    KahanSum bulk;
    for (size_t c = 0; c < v.size(); ++c) {
      if (!topo->active[c]) continue;
      bulk.add(lag_eval(*spec, centers[c], {kx[c], ky[c]}));
      const double d = v[c] - u_prev[c];
      bulk.add(d * d / (2.0 * tau));
    }
    KahanSum bdry;
    for (size_t f = 0; f < topo->dirichlet.size(); ++f)
      bdry.add(topo->dirichlet[f].finf_nu *
               std::abs(v[topo->dirichlet[f].cell] - gvals[f]));
    return bulk.value() * g.cell_measure() + bdry.value() * g.face_measure();
  }
};

Work make_work(const ActiveTopology& topo, const LagrangianSpec& spec) {
  Work w;
  w.topo = &topo;
  w.spec = &spec;
  const auto n = static_cast<size_t>(topo.grid.cell_count());
  w.centers.resize(n);
  for (size_t c = 0; c < n; ++c)
    w.centers[c] = topo.grid.cell_center(static_cast<int>(c));
  return w;
}

struct InnerState {
  std::vector<double> zx, zy;  // cell dual
  std::vector<double> s;       // boundary dual per dirichlet face
};

struct OptimalityScales {
  double sup = 1.0;      // 1 + sup|u_prev| + sup|g|
  double st = 1.0;       // sqrt(|Omega_active|) * sup
};

OptimalityScales make_scales(const Work& w, const std::vector<double>& u_prev,
                             const std::vector<double>& gvals) {
  OptimalityScales s;
  double m = 0.0;
  for (size_t c = 0; c < u_prev.size(); ++c)
    if (w.topo->active[c]) m = std::max(m, std::abs(u_prev[c]));
  for (double g : gvals) m = std::max(m, std::abs(g));
  s.sup = 1.0 + m;
  s.st = std::sqrt(static_cast<double>(w.topo->active_count) *
                   w.topo->grid.cell_measure()) *
         s.sup;
  return s;
}

struct Residuals {
  double fg_rel = 0.0;
  double el_rel = 0.0;
};

// Relative optimality certificates of a candidate primal/dual pair: worst
// cell Fenchel gap (plus boundary complementarity) and the Euler-Lagrange
// residual of the implicit step.
Residuals optimality(const Work& w, const std::vector<double>& v,
                     const std::vector<double>& u_prev,
                     const std::vector<double>& gvals, double tau,
                     const InnerState& st, const OptimalityScales& sc,
                     std::vector<double>& kx, std::vector<double>& ky,
                     std::vector<double>& ktz) {
  const ActiveTopology& topo = *w.topo;
  Residuals r;
  w.apply_K(v, kx, ky);
  for (size_t c = 0; c < v.size(); ++c) {
    if (!topo.active[c]) continue;
    const Vec xi{kx[c], ky[c]};
    const Vec z{st.zx[c], st.zy[c]};
    const ExtReal gap = lag_fenchel_gap(*w.spec, w.centers[c], xi, z);
    const double fv = lag_eval(*w.spec, w.centers[c], xi);
    r.fg_rel = std::max(r.fg_rel, gap.value_or_huge() / (1.0 + fv));
  }
  for (size_t f = 0; f < topo.dirichlet.size(); ++f) {
    const double beta = topo.dirichlet[f].finf_nu;
    const double rr = v[topo.dirichlet[f].cell] - gvals[f];
    const double gap = beta * std::abs(rr) - st.s[f] * rr;
    r.fg_rel = std::max(r.fg_rel, gap / (1.0 + beta * std::abs(rr)));
  }
  w.apply_Kt(st.zx, st.zy, ktz);
  const double inv_h = 1.0 / topo.grid.h;
  for (size_t f = 0; f < topo.dirichlet.size(); ++f)
    ktz[topo.dirichlet[f].cell] += st.s[f] * inv_h;
  KahanSum el;
  for (size_t c = 0; c < v.size(); ++c) {
    if (!topo.active[c]) continue;
    const double e = (v[c] - u_prev[c]) / tau + ktz[c];
    el.add(e * e);
  }
  r.el_rel = tau * std::sqrt(el.value() * topo.grid.cell_measure()) / sc.st;
  return r;
}

// Accelerated primal-dual iteration on the saddle form of the step energy.
// The data term is (1/tau)-strongly convex, which drives the step-size
// schedule; duals are warm-started across steps.
StepStats solve_primal_dual(const Work& w, const std::vector<double>& u_prev,
                            const std::vector<double>& gvals,
                            const SolveConfig& cfg, std::vector<double>& v,
                            InnerState& st) {
  const ActiveTopology& topo = *w.topo;
  const GridSpec& g = topo.grid;
  const auto n = v.size();

  const double L2 = 4.0 * g.dim / (g.h * g.h) + 4.0 / g.h;
  double sigma = cfg.sigma > 0.0 ? cfg.sigma : 1.0 / std::sqrt(L2);
  double tau_pd = cfg.tau_pd > 0.0 ? cfg.tau_pd : 1.0 / std::sqrt(L2);
  if (sigma * tau_pd * L2 > 1.0 + 1e-12)
    throw InvalidConfig(
        "step: sigma * tau_pd exceeds 1/L^2 for this grid's operator norm");
  const double gamma = 1.0 / cfg.tau;

  std::vector<double> vbar = v, vold(n), kx(n), ky(n), ktz(n);
  const OptimalityScales sc = make_scales(w, u_prev, gvals);

  StepStats out;
  for (int it = 1; it <= cfg.max_iters; ++it) {
    // Dual ascent at cells and Dirichlet faces.
    w.apply_K(vbar, kx, ky);
    for (size_t c = 0; c < n; ++c) {
      if (!topo.active[c]) continue;
      const Vec prox = lag_prox_conjugate(
          *w.spec, w.centers[c],
          {st.zx[c] + sigma * kx[c], st.zy[c] + sigma * ky[c]}, sigma);
      st.zx[c] = prox.x;
      st.zy[c] = prox.y;
    }
    for (size_t f = 0; f < topo.dirichlet.size(); ++f) {
      const double beta = topo.dirichlet[f].finf_nu;
      const double cand =
          st.s[f] + sigma * (vbar[topo.dirichlet[f].cell] - gvals[f]);
      st.s[f] = std::clamp(cand, -beta, beta);
    }

    // Primal descent with the exact prox of the quadratic data term.
    w.apply_Kt(st.zx, st.zy, ktz);
    const double inv_h = 1.0 / g.h;
    for (size_t f = 0; f < topo.dirichlet.size(); ++f)
      ktz[topo.dirichlet[f].cell] += st.s[f] * inv_h;
    vold.swap(v);
    const double ratio = tau_pd / cfg.tau;
    for (size_t c = 0; c < n; ++c) {
      if (!topo.active[c]) {
        v[c] = vold[c];
        continue;
      }
      v[c] = (vold[c] - tau_pd * ktz[c] + ratio * u_prev[c]) / (1.0 + ratio);
    }

    const double theta = 1.0 / std::sqrt(1.0 + 2.0 * gamma * tau_pd);
    tau_pd *= theta;
    sigma /= theta;
    const double relax = cfg.theta_pd * theta;
    for (size_t c = 0; c < n; ++c) vbar[c] = v[c] + relax * (v[c] - vold[c]);

    out.iters = it;
    if (it % cfg.check_every == 0 || it == cfg.max_iters) {
      const Residuals r =
          optimality(w, v, u_prev, gvals, cfg.tau, st, sc, kx, ky, ktz);
      out.max_fenchel_gap = r.fg_rel;
      out.el_residual = r.el_rel;
      if (r.fg_rel <= cfg.tol_rel && r.el_rel <= cfg.tol_rel) {
        out.converged = true;
        break;
      }
    }
  }
  out.energy = w.energy(v, u_prev, gvals, cfg.tau);
  return out;
}

// Smooth path: damped Newton with CG on the eta-smoothed boundary term,
// with eta driven to a negligible level by continuation. Requires a
// differentiable integrand (positive offset, isotropic base).
StepStats solve_newton(const Work& w, const std::vector<double>& u_prev,
                       const std::vector<double>& gvals,
                       const SolveConfig& cfg, std::vector<double>& v,
                       InnerState& st) {
  const ActiveTopology& topo = *w.topo;
  const GridSpec& g = topo.grid;
  const auto n = v.size();
  const double cell_m = g.cell_measure();
  const double face_m = g.face_measure();
  const OptimalityScales sc = make_scales(w, u_prev, gvals);

  std::vector<double> kx(n), ky(n), ktz(n), grad(n), dir(n), tmp(n);
  std::vector<double> hxx(n), hxy(n), hyy(n);
  std::vector<double> bdiag(n, 0.0);

  const auto smooth_energy = [&](const std::vector<double>& vv, double eta) {
    w.apply_K(vv, kx, ky);
    KahanSum bulk;
    for (size_t c = 0; c < n; ++c) {
      if (!topo.active[c]) continue;
      bulk.add(lag_eval(*w.spec, w.centers[c], {kx[c], ky[c]}));
      const double d = vv[c] - u_prev[c];
      bulk.add(d * d / (2.0 * cfg.tau));
    }
    KahanSum bdry;
    for (size_t f = 0; f < topo.dirichlet.size(); ++f) {
      const double r = vv[topo.dirichlet[f].cell] - gvals[f];
      bdry.add(topo.dirichlet[f].finf_nu * (std::hypot(eta, r) - eta));
    }
    return bulk.value() * cell_m + bdry.value() * face_m;
  };

  // Gradient of the smoothed energy, scaled back to "per cell" units
  // (divide by h^n) so it equals the Euler-Lagrange residual directly.
  const auto residual = [&](const std::vector<double>& vv, double eta,
                            std::vector<double>& out) {
    w.apply_K(vv, kx, ky);
    for (size_t c = 0; c < n; ++c) {
      if (!topo.active[c]) {
        st.zx[c] = st.zy[c] = 0.0;
        continue;
      }
      const Vec dz = lag_grad(*w.spec, w.centers[c], {kx[c], ky[c]});
      st.zx[c] = dz.x;
      st.zy[c] = dz.y;
    }
    w.apply_Kt(st.zx, st.zy, out);
    for (size_t c = 0; c < n; ++c) {
      if (!topo.active[c]) {
        out[c] = 0.0;
        continue;
      }
      out[c] += (vv[c] - u_prev[c]) / cfg.tau;
    }
    const double bscale = face_m / cell_m;  // = 1/h
    for (size_t f = 0; f < topo.dirichlet.size(); ++f) {
      const double r = vv[topo.dirichlet[f].cell] - gvals[f];
      const double sl = topo.dirichlet[f].finf_nu * r / std::hypot(eta, r);
      st.s[f] = sl;
      out[topo.dirichlet[f].cell] += sl * bscale;
    }
  };

  const auto hessian_apply = [&](const std::vector<double>& d,
                                 std::vector<double>& out) {
    w.apply_K(d, kx, ky);
    for (size_t c = 0; c < n; ++c) {
      const double ax = hxx[c] * kx[c] + hxy[c] * ky[c];
      const double ay = hxy[c] * kx[c] + hyy[c] * ky[c];
      kx[c] = ax;
      ky[c] = ay;
    }
    w.apply_Kt(kx, ky, out);
    for (size_t c = 0; c < n; ++c) {
      if (!topo.active[c]) {
        out[c] = 0.0;
        continue;
      }
      out[c] += d[c] / cfg.tau + bdiag[c] * d[c];
    }
  };

  StepStats out;
  // The boundary complementarity gap scales with eta; 1e-8 * scale sits two
  // orders below the tightest certificate tolerance while keeping the
  // near-kink curvature beta/eta tractable for the linear solves.
  const double eta_min = std::max(1e-8 * sc.sup, 1e-13);
  double eta = std::max(1e-2 * sc.sup, eta_min);
  bool last_stage = false;
  while (true) {
    last_stage = eta <= eta_min * (1.0 + 1e-12);
    for (int newton_it = 0; newton_it < 60; ++newton_it) {
      residual(v, eta, grad);
      KahanSum g2;
      for (size_t c = 0; c < n; ++c)
        if (topo.active[c]) g2.add(grad[c] * grad[c]);
      const double rnorm =
          cfg.tau * std::sqrt(g2.value() * cell_m) / sc.st;
      out.el_residual = rnorm;
      const double target = last_stage ? 0.2 * cfg.tol_rel : 0.5 * cfg.tol_rel;
      if (rnorm <= target) break;
      if (out.iters >= cfg.max_iters) break;

      // Cell Hessians of f and boundary curvature for this linearization.
      w.apply_K(v, kx, ky);
      for (size_t c = 0; c < n; ++c) {
        if (!topo.active[c]) {
          hxx[c] = hxy[c] = hyy[c] = 0.0;
          continue;
        }
        const SymMat2 H = lag_hessian(*w.spec, w.centers[c], {kx[c], ky[c]});
        hxx[c] = H.xx;
        hxy[c] = H.xy;
        hyy[c] = H.yy;
      }
      std::fill(bdiag.begin(), bdiag.end(), 0.0);
      const double bscale = face_m / cell_m;
      for (size_t f = 0; f < topo.dirichlet.size(); ++f) {
        const double r = v[topo.dirichlet[f].cell] - gvals[f];
        const double hyp = std::hypot(eta, r);
        bdiag[topo.dirichlet[f].cell] +=
            bscale * topo.dirichlet[f].finf_nu * eta * eta / (hyp * hyp * hyp);
      }

      // Inexact Newton direction by Jacobi-preconditioned CG; the boundary
      // curvature (up to beta/eta on nearly attached faces) is diagonal and
      // would otherwise wreck the conditioning.
      std::fill(dir.begin(), dir.end(), 0.0);
      std::vector<double> r_cg = grad, zprec(n), p(n), Ap(n);
      const auto precond = [&](const std::vector<double>& rr,
                               std::vector<double>& out_z) {
        for (size_t c = 0; c < n; ++c)
          out_z[c] = rr[c] / (1.0 / cfg.tau + bdiag[c]);
      };
      precond(r_cg, zprec);
      p = zprec;
      double rz = 0.0, rr0 = 0.0;
      for (size_t c = 0; c < n; ++c) {
        rz += r_cg[c] * zprec[c];
        rr0 += r_cg[c] * r_cg[c];
      }
      const double forcing = std::min(0.25, std::sqrt(rnorm));
      for (int cg_it = 0; cg_it < 400; ++cg_it) {
        double rr = 0.0;
        for (size_t c = 0; c < n; ++c) rr += r_cg[c] * r_cg[c];
        if (rr <= forcing * forcing * rr0) break;
        hessian_apply(p, Ap);
        double pAp = 0.0;
        for (size_t c = 0; c < n; ++c) pAp += p[c] * Ap[c];
        if (pAp <= 0.0) break;
        const double alpha = rz / pAp;
        for (size_t c = 0; c < n; ++c) {
          dir[c] += alpha * p[c];
          r_cg[c] -= alpha * Ap[c];
        }
        precond(r_cg, zprec);
        double rz_new = 0.0;
        for (size_t c = 0; c < n; ++c) rz_new += r_cg[c] * zprec[c];
        const double beta = rz_new / rz;
        rz = rz_new;
        for (size_t c = 0; c < n; ++c) p[c] = zprec[c] + beta * p[c];
      }

      bool accepted = false;
      if (rnorm < 1e-7) {
        // Energy decrements are below double rounding here; backtrack on
        // the residual norm instead.
        double step_len = 1.0;
        for (int ls = 0; ls < 24; ++ls) {
          for (size_t c = 0; c < n; ++c) tmp[c] = v[c] - step_len * dir[c];
          residual(tmp, eta, grad);
          KahanSum g2n;
          for (size_t c = 0; c < n; ++c)
            if (topo.active[c]) g2n.add(grad[c] * grad[c]);
          const double rnext =
              cfg.tau * std::sqrt(g2n.value() * cell_m) / sc.st;
          if (rnext <= (1.0 - 0.25 * step_len) * rnorm) {
            v.swap(tmp);
            accepted = true;
            break;
          }
          step_len *= 0.5;
        }
      } else {
        // Backtracking line search on the smoothed energy.
        const double e0 = smooth_energy(v, eta);
        double slope = 0.0;
        for (size_t c = 0; c < n; ++c) slope -= grad[c] * dir[c];
        slope *= cell_m;
        double step_len = 1.0;
        for (int ls = 0; ls < 30; ++ls) {
          for (size_t c = 0; c < n; ++c) tmp[c] = v[c] - step_len * dir[c];
          const double e1 = smooth_energy(tmp, eta);
          if (e1 <= e0 + 1e-4 * step_len * slope) {
            v.swap(tmp);
            accepted = true;
            break;
          }
          step_len *= 0.5;
        }
      }
      ++out.iters;
      if (!accepted) break;
    }
    if (last_stage || out.iters >= cfg.max_iters) break;
    eta = std::max(eta * 1e-2, eta_min);
  }

  // Final certificates with the analytic dual.
  residual(v, eta, grad);
  const Residuals r =
      optimality(w, v, u_prev, gvals, cfg.tau, st, sc, kx, ky, ktz);
  out.max_fenchel_gap = r.fg_rel;
  out.el_residual = r.el_rel;
  out.converged = r.el_rel <= cfg.tol_rel;
  out.energy = w.energy(v, u_prev, gvals, cfg.tau);
  return out;
}

std::vector<double> dirichlet_values(const ActiveTopology& topo,
                                     const Problem& prob, double t) {
  std::vector<double> gvals(topo.dirichlet.size(), 0.0);
  std::optional<ScalarField> gfield;
  std::optional<BoundaryTrace> gtrace;
  if (!prob.g_fields.empty()) {
    gfield = sample_series(prob.g_fields, t);
    gtrace = trace(*gfield);
  } else {
    gtrace = sample_traces(prob.g_traces, t);
  }
  for (size_t f = 0; f < topo.dirichlet.size(); ++f) {
    const DirichletFace& df = topo.dirichlet[f];
    if (df.box_face >= 0)
      gvals[f] = gtrace->v[df.box_face];
    else
      gvals[f] = gfield->v[df.ghost_cell];
  }
  return gvals;
}

StepResult run_step(const Work& w, const Problem& prob, const SolveConfig& cfg,
                    const std::vector<double>& u_prev,
                    const std::vector<double>& gvals, InnerState& st,
                    std::vector<double>& v) {
  if (cfg.method == InnerMethod::Newton && !lag_smooth(*w.spec))
    throw InvalidConfig("step: Newton path needs a differentiable integrand");
  if (cfg.method == InnerMethod::PrimalDual &&
      lag_base(*w.spec).kind == LagrangianKind::AnisotropicTV &&
      lag_offset(*w.spec) > 0.0)
    throw InvalidConfig(
        "step: primal-dual path does not support regularized anisotropic "
        "integrands");

  StepStats stats = cfg.method == InnerMethod::Newton
                        ? solve_newton(w, u_prev, gvals, cfg, v, st)
                        : solve_primal_dual(w, u_prev, gvals, cfg, v, st);

  const ActiveTopology& topo = *w.topo;
  StepResult res;
  res.u = ScalarField(topo.grid);
  res.u.v = v;
  res.z = CellVectorField(topo.grid);
  res.z.x = st.zx;
  res.z.y = st.zy;
  res.zb = BoundaryTrace(topo.grid);
  for (size_t f = 0; f < topo.dirichlet.size(); ++f)
    if (topo.dirichlet[f].box_face >= 0)
      res.zb.v[topo.dirichlet[f].box_face] = -st.s[f];
  res.stats = stats;
  return res;
}

}  // namespace

StepResult step(const ScalarField& u_prev, const BoundaryTrace& g_k,
                const Problem& prob, const SolveConfig& cfg) {
  prob.validate();
  cfg.validate();
  if (prob.masked())
    throw InvalidParam("step: masked problems are driven through solve()");
  if (!u_prev.grid.same_as(prob.grid) || !g_k.grid.same_as(prob.grid))
    throw GridMismatch("step: field grids must match the problem grid");

  const LagrangianSpec spec_eff = effective_spec(prob, cfg);
  const ActiveTopology topo = ActiveTopology::build(prob, spec_eff);
  const Work w = make_work(topo, spec_eff);

  std::vector<double> gvals(topo.dirichlet.size());
  for (size_t f = 0; f < topo.dirichlet.size(); ++f)
    gvals[f] = g_k.v[topo.dirichlet[f].box_face];

  InnerState st;
  st.zx.assign(u_prev.v.size(), 0.0);
  st.zy.assign(u_prev.v.size(), 0.0);
  st.s.assign(topo.dirichlet.size(), 0.0);
  std::vector<double> v = u_prev.v;
  return run_step(w, prob, cfg, u_prev.v, gvals, st, v);
}

Trajectory solve(const Problem& prob, const SolveConfig& cfg) {
  prob.validate();
  cfg.validate();
  const LagrangianSpec spec_eff = effective_spec(prob, cfg);
  const ActiveTopology topo = ActiveTopology::build(prob, spec_eff);
  const Work w = make_work(topo, spec_eff);

  const int steps = static_cast<int>(std::ceil(prob.T / cfg.tau - 1e-9));

  Trajectory traj;
  traj.mask = prob.mask;

  ScalarField u0 = prob.u0;
  if (prob.masked()) {
    const ScalarField g0 = sample_series(prob.g_fields, 0.0);
    for (size_t c = 0; c < u0.v.size(); ++c)
      if (!topo.active[c]) u0.v[c] = g0.v[c];
  }
  traj.u.push(0.0, u0);

  InnerState st;
  st.zx.assign(u0.v.size(), 0.0);
  st.zy.assign(u0.v.size(), 0.0);
  st.s.assign(topo.dirichlet.size(), 0.0);
  std::vector<double> v = u0.v;
  std::vector<double> u_prev = u0.v;

  for (int k = 1; k <= steps; ++k) {
    const double t_k = std::min(k * cfg.tau, prob.T);
    const std::vector<double> gvals = dirichlet_values(topo, prob, t_k);
    StepResult res = [&] {
      const std::string at = "step " + std::to_string(k) + ": ";
      try {
        return run_step(w, prob, cfg, u_prev, gvals, st, v);
      } catch (const InvalidConfig& e) {
        throw InvalidConfig(at + e.what());
      } catch (const NotDifferentiable& e) {
        throw NotDifferentiable(at + e.what());
      } catch (const Error& e) {
        throw Error(at + e.what());
      }
    }();
    if (prob.masked()) {
      const ScalarField gk = sample_series(prob.g_fields, t_k);
      for (size_t c = 0; c < res.u.v.size(); ++c)
        if (!topo.active[c]) res.u.v[c] = gk.v[c];
      v = res.u.v;
    }
    traj.u.push(k * cfg.tau, res.u);
    traj.z.push(k * cfg.tau, std::move(res.z));
    traj.zb.push(k * cfg.tau, std::move(res.zb));
    traj.stats.push_back(res.stats);
    u_prev = traj.u.frames.back().v;
  }
  return traj;
}

double trajectory_l2_distance(const Trajectory& a, const Trajectory& b) {
  if (a.u.size() != b.u.size() || !a.u.grid().same_as(b.u.grid()))
    throw ShapeMismatch("trajectory_l2_distance: incompatible trajectories");
  KahanSum acc;
  for (size_t k = 1; k < a.u.size(); ++k) {
    const double tau = a.u.times[k] - a.u.times[k - 1];
    KahanSum cell;
    for (size_t c = 0; c < a.u.frames[k].v.size(); ++c) {
      if (!a.mask.empty() && !a.mask[c]) continue;
      const double d = a.u.frames[k].v[c] - b.u.frames[k].v[c];
      cell.add(d * d);
    }
    acc.add(tau * cell.value() * a.u.grid().cell_measure());
  }
  return std::sqrt(std::max(0.0, acc.value()));
}

SweepReport stability_sweep(const Problem& prob, const std::vector<double>& mus,
                            const SolveConfig& cfg) {
  prob.validate();
  for (size_t i = 0; i + 1 < mus.size(); ++i)
    if (!(mus[i] > mus[i + 1]))
      throw InvalidParam("stability_sweep: mus must be strictly decreasing");
  for (double m : mus)
    if (!(m > 0.0)) throw InvalidParam("stability_sweep: mus must be positive");

  SweepReport rep;
  rep.trajectories.resize(mus.size());

  unsigned hw = std::thread::hardware_concurrency();
  if (hw == 0) hw = 1;
  const unsigned threads =
      cfg.threads > 0 ? static_cast<unsigned>(cfg.threads) : hw;

  std::vector<std::future<Trajectory>> futs(mus.size());
  size_t next = 0;
  while (next < mus.size()) {
    const size_t batch =
        std::min<size_t>(threads, mus.size() - next);
    for (size_t j = 0; j < batch; ++j) {
      SolveConfig c = cfg;
      c.mu = mus[next + j];
      futs[next + j] = std::async(std::launch::async,
                                  [&prob, c] { return solve(prob, c); });
    }
    for (size_t j = 0; j < batch; ++j)
      rep.trajectories[next + j] = futs[next + j].get();
    next += batch;
  }

  for (size_t i = 0; i < mus.size(); ++i) {
    const Trajectory& traj = rep.trajectories[i];
    SweepEntry e;
    e.mu = mus[i];
    e.converged = traj.all_converged();
    for (const auto& s : traj.stats)
      e.max_fenchel_gap = std::max(e.max_fenchel_gap, s.max_fenchel_gap);

    // Dual feasibility against the unregularized integrand.
    const GridSpec& g = prob.grid;
    for (size_t k = 0; k < traj.z.size(); ++k)
      for (std::int64_t c = 0; c < g.cell_count(); ++c) {
        if (!traj.mask.empty() && !traj.mask[static_cast<size_t>(c)]) continue;
        const double m = lag_dual_gauge(prob.spec, g.cell_center(
                                            static_cast<int>(c)),
                                        traj.z.frames[k].at(
                                            static_cast<size_t>(c)));
        e.dual_gauge_excess = std::max(e.dual_gauge_excess, m - 1.0);
      }

    // Pointwise 0 <= f_mu - f <= mu integrates to [0, mu |Omega|].
    const LagrangianSpec spec_mu = lag_regularize(prob.spec, mus[i]);
    e.mu_gap_min = 1e300;
    e.mu_gap_max = -1e300;
    for (size_t k = 1; k < traj.u.size(); ++k) {
      const double gap = f_integral(spec_mu, traj.u.frames[k]) -
                         f_integral(prob.spec, traj.u.frames[k]);
      e.mu_gap_min = std::min(e.mu_gap_min, gap);
      e.mu_gap_max = std::max(e.mu_gap_max, gap);
    }
    rep.entries.push_back(e);
  }
  for (size_t i = 0; i + 1 < mus.size(); ++i)
    rep.entries[i].distance_to_next =
        trajectory_l2_distance(rep.trajectories[i], rep.trajectories[i + 1]);
  return rep;
}

}  // namespace lgf
