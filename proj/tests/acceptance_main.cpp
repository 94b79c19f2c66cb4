// Acceptance suite: one check per criterion, one pass/fail line each.
// Exit code 0 iff every criterion passes.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "lgf/boundedness.hpp"
#include "lgf/certify.hpp"
#include "lgf/fields.hpp"
#include "lgf/io.hpp"

#ifndef LGF_CLI_PATH
#define LGF_CLI_PATH "lgflow"
#endif
#ifndef LGF_CONFIG_DIR
#define LGF_CONFIG_DIR "configs"
#endif

using namespace lgf;
namespace fs = std::filesystem;

namespace {

struct Harness {
  int failures = 0;
  int index = 0;

  void run(const std::string& name, const std::function<bool(std::string&)>& fn) {
    ++index;
    std::string detail;
    bool ok = false;
    const auto start = std::chrono::steady_clock::now();
    try {
      ok = fn(detail);
    } catch (const std::exception& e) {
      detail = std::string("exception: ") + e.what();
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
            .count();
    std::printf("[%s] criterion %d: %s (%.1fs)%s%s\n", ok ? "PASS" : "FAIL",
                index, name.c_str(), secs, detail.empty() ? "" : " -- ",
                detail.c_str());
    std::fflush(stdout);
    if (!ok) ++failures;
  }
};

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

// ---------------------------------------------------------------------------
// 1. Adjointness / Gauss-Green: direct-summation oracle, 1e-12 relative.
bool criterion_adjointness(std::string& detail) {
  std::mt19937_64 rng(101);
  std::uniform_real_distribution<double> d(-2.0, 2.0);
  double worst = 0.0;
  for (int dim = 1; dim <= 2; ++dim) {
    for (int rep = 0; rep < 100; ++rep) {
      const GridSpec g = dim == 1
                             ? GridSpec::make_1d(64, 1.0 / 64)
                             : GridSpec::make_2d(24, 20, 0.05, {-0.4, 0.3});
      ScalarField u(g);
      for (auto& v : u.v) v = d(rng);
      VectorField z(g);
      for (auto& v : z.fx) v = d(rng);
      for (auto& v : z.fy) v = d(rng);

      // Direct summation, independent of the library reductions.
      const VectorField gu = gradient(u);
      const ScalarField dz = divergence(z);
      double a = 0.0, b = 0.0;
      for (size_t i = 0; i < gu.fx.size(); ++i) a += gu.fx[i] * z.fx[i];
      for (size_t i = 0; i < gu.fy.size(); ++i) a += gu.fy[i] * z.fy[i];
      for (size_t i = 0; i < u.v.size(); ++i) b += u.v[i] * dz.v[i];
      const double boundary_sum = 0.0;  // zero-padded adjoint pair
      const double resid =
          std::abs((a + b) * g.cell_measure() - boundary_sum);
      const double scale =
          (std::abs(a) + std::abs(b)) * g.cell_measure() + 1.0;
      worst = std::max(worst, resid / scale);

      // Gauss-Green with a claimed boundary trace, checked via the module.
      const double gg =
          gauss_green_residual(u, z, BoundaryTrace(g, 0.0));
      worst = std::max(worst, gg / scale);
    }
  }
  detail = "worst relative residual " + fmt(worst);
  return worst <= 1e-12;
}

// ---------------------------------------------------------------------------
// 2. Fenchel certificates on 64x64, 50 steps: Newton <= 1e-8, PD <= 10 tol.
bool criterion_fenchel(std::string& detail) {
  Problem p = fields::smooth_bump_2d(64);
  p.T = 0.1;

  SolveConfig newton;
  newton.tau = p.T / 50;
  newton.mu = 0.1;
  newton.method = InnerMethod::Newton;
  newton.tol_rel = 1e-9;
  const Trajectory tn = solve(p, newton);
  const auto rn = certify::check_subgradient(
      tn, effective_spec(p, newton), 1e-8);

  Problem pb = fields::box_indicator_2d(64, 1.0);
  pb.T = 0.1;
  SolveConfig pd;
  pd.tau = pb.T / 50;
  pd.tol_rel = 1e-4;
  pd.max_iters = 200000;
  const Trajectory tp = solve(pb, pd);
  const auto rp = certify::check_subgradient(tp, pb.spec, 10 * pd.tol_rel);

  detail = "newton residual " + fmt(rn.residual) + ", primal-dual " +
           fmt(rp.residual);
  return tn.all_converged() && tp.all_converged() && rn.pass && rp.pass;
}

// ---------------------------------------------------------------------------
// 3. Exact radial solution on the annulus: <= 5% at 128^2, ratio >= 1.5.
bool criterion_radial(std::string& detail) {
  double errs[2];
  int i = 0;
  for (int n : {128, 256}) {
    Problem p = fields::annulus_radial_2d(n);
    SolveConfig cfg;
    cfg.tau = 1.0 / (2 * n);
    cfg.tol_rel = 1e-4;
    cfg.max_iters = 100000;
    const Trajectory traj = solve(p, cfg);
    if (!traj.all_converged()) {
      detail = "solver did not converge at n=" + std::to_string(n);
      return false;
    }
    const ScalarField exact = fields::annulus_exact(p.grid, 0.5);
    errs[i++] =
        fields::masked_rel_l2_error(traj.u.frames.back(), exact, p.mask);
  }
  const double ratio = errs[0] / errs[1];
  detail = "error " + fmt(100 * errs[0]) + "% at 128^2, ratio " + fmt(ratio);
  return errs[0] <= 0.05 && ratio >= 1.5;
}

// ---------------------------------------------------------------------------
// 4. Comparison principle on 20 random ordered pairs.
bool criterion_comparison(std::string& detail) {
  Problem base = fields::plateau_1d(48);
  base.T = 0.03;
  SolveConfig cfg;
  cfg.tau = base.T / 12;
  cfg.tol_rel = 1e-5;
  cfg.max_iters = 300000;
  double worst = -1e300;
  for (int rep = 0; rep < 20; ++rep) {
    Problem pa = base, pb = base;
    pa.u0 = fields::random_plateaus_1d(base.grid, 5000 + rep, -1.0, 1.0);
    pb.u0 = pa.u0;
    const ScalarField lift =
        fields::random_plateaus_1d(base.grid, 6000 + rep, 0.0, 0.8);
    for (size_t c = 0; c < pb.u0.v.size(); ++c) pb.u0.v[c] += lift.v[c];
    const Trajectory ta = solve(pa, cfg);
    const Trajectory tb = solve(pb, cfg);
    const auto rep_ab = certify::check_comparison(ta, tb, 1e-8);
    worst = std::max(worst, rep_ab.worst_increase);
    if (!rep_ab.pass) {
      detail = "pair " + std::to_string(rep) + " violated the bound by " +
               fmt(rep_ab.worst_increase);
      return false;
    }
  }
  detail = "20/20 pairs, worst increase " + fmt(worst);
  return true;
}

// ---------------------------------------------------------------------------
// 5. Regularization stability sweep on two bundled problems.
bool criterion_stability(std::string& detail) {
  const std::vector<double> mus{0.1, 0.05, 0.025, 0.0125};
  std::vector<Problem> problems;
  {
    Problem a = fields::plateau_1d(64);
    a.T = 0.04;
    problems.push_back(a);
    Problem b = fields::smooth_bump_2d(32);
    b.T = 0.04;
    problems.push_back(b);
  }
  for (size_t pi = 0; pi < problems.size(); ++pi) {
    SolveConfig cfg;
    cfg.tau = problems[pi].T / 16;
    cfg.method = InnerMethod::Newton;
    cfg.tol_rel = 1e-9;
    const SweepReport rep = stability_sweep(problems[pi], mus, cfg);
    for (size_t i = 0; i + 2 < rep.entries.size(); ++i)
      if (!(rep.entries[i].distance_to_next >
            rep.entries[i + 1].distance_to_next)) {
        detail = "problem " + std::to_string(pi) +
                 ": pairwise distances not strictly decreasing";
        return false;
      }
    for (const auto& e : rep.entries) {
      if (!e.converged) {
        detail = "sweep member mu=" + fmt(e.mu) + " did not converge";
        return false;
      }
      if (e.dual_gauge_excess > 1e-8) {
        detail = "dual ball violated by " + fmt(e.dual_gauge_excess);
        return false;
      }
      const double cap = e.mu * problems[pi].grid.domain_measure();
      if (e.mu_gap_min < 0.0 || e.mu_gap_max > cap) {
        detail = "mu-gap outside [0, mu |Omega|]";
        return false;
      }
    }
  }
  detail = "4 mus x 2 problems";
  return true;
}

// ---------------------------------------------------------------------------
// 6. Mollifier identities.
bool criterion_mollify(std::string& detail) {
  const GridSpec g = GridSpec::make_1d(48, 1.0 / 48);

  // Derivative identity at order >= 1.8 in the time step.
  double res[3];
  int i = 0;
  for (int frames : {251, 501, 1001}) {
    TimeSeries s;
    for (int k = 0; k < frames; ++k) {
      const double t = 1.0 * k / (frames - 1);
      s.push(t, ScalarField(g, std::sin(3.0 * t)));
    }
    const TimeSeries sd = exp_mollify(s, {0.3, ScalarField(g, 0.0)});
    res[i++] = derivative_identity_residual(s, sd, 0.3);
  }
  const double order = std::min(std::log2(res[0] / res[1]),
                                std::log2(res[1] / res[2]));
  if (order < 1.8) {
    detail = "derivative identity order " + fmt(order);
    return false;
  }

  // Contraction with 1e-8 slack.
  const TimeSeries u = fields::moving_step_1d(g, 0.1, 1.0, 1.0, 401);
  const ScalarField seed = fields::random_uniform(g, 7, -1.0, 1.0);
  for (double delta : {0.2, 0.1, 0.05, 0.025}) {
    const TimeSeries ud = exp_mollify(u, {delta, seed});
    if (space_time_l2(ud) >
        space_time_l2(u) + std::sqrt(delta) * l2_norm(seed) + 1e-8) {
      detail = "contraction violated at delta " + fmt(delta);
      return false;
    }
  }

  // Area-strict and trace columns decrease monotonically.
  const auto rows =
      area_strict_report(u, {0.2, 0.1, 0.05, 0.025}, u.frames.front());
  for (size_t r = 0; r + 1 < rows.size(); ++r)
    if (!(rows[r].l1_gap > rows[r + 1].l1_gap &&
          rows[r].area_gap > rows[r + 1].area_gap &&
          rows[r].trace_gap > rows[r + 1].trace_gap)) {
      detail = "report columns not monotone at row " + std::to_string(r);
      return false;
    }
  detail = "order " + fmt(order) + ", monotone columns";
  return true;
}

// ---------------------------------------------------------------------------
// 7. De Giorgi soundness: calibrate on one run, dominate on 19 held out;
//    fast-geometric recursion on both sides of the threshold.
bool criterion_degiorgi(std::string& detail) {
  using namespace boundedness;
  const GridSpec g = GridSpec::make_2d(28, 28, 1.0 / 28);
  const Cylinder cyl = {{0.5, 0.5}, 0.9, 0.25, 0.6};
  DeGiorgiConfig cfg;
  cfg.r = 4.0;
  cfg.xi = 0.5;

  const auto analytic = [&](int idx) {
    const double a = 2.5 + 0.45 * idx;
    const double shift = 0.2 * (idx % 5) - 0.4;
    TimeSeries s;
    for (int k = 0; k < 13; ++k) {
      const double t = 1.0 * k / 12;
      ScalarField f(g);
      for (std::int64_t c = 0; c < g.cell_count(); ++c) {
        const Point p = g.cell_center(static_cast<int>(c));
        const double r2 =
            (p.x - 0.45) * (p.x - 0.45) + (p.y - 0.5) * (p.y - 0.5);
        f.v[static_cast<size_t>(c)] =
            a * (std::exp(-r2 / 0.01) * (0.5 + 0.5 * t) +
                 0.15 * std::sin(9.0 * p.x)) +
            shift;
      }
      s.push(t, std::move(f));
    }
    return std::pair<TimeSeries, double>(std::move(s), shift);
  };

  // Solved trajectories join the held-out battery on their own stamps.
  const auto solved = [&](std::uint64_t seedv) {
    Problem p;
    p.grid = g;
    p.T = 1.0;
    p.spec = LagrangianSpec::total_variation();
    p.u0 = fields::random_smooth_2d(g, seedv, 3.0);
    for (auto& v : p.u0.v) v = std::abs(v) + 0.5;
    p.g_fields = fields::constant_series(fields::constant(g, 0.5), p.T);
    SolveConfig cfg2;
    cfg2.tau = 1.0 / 16;
    cfg2.tol_rel = 1e-4;
    cfg2.max_iters = 100000;
    return solve(p, cfg2).u;
  };

  auto [train, train_shift] = analytic(0);
  cfg.k0 = train_shift;
  cfg.c_cal = degiorgi_required_c(train, cyl, cfg);
  if (!(cfg.c_cal > 0.0)) {
    detail = "degenerate calibration";
    return false;
  }

  int held = 0, passed = 0;
  for (int idx = 1; idx <= 13; ++idx) {
    auto [u, shift] = analytic(idx);
    DeGiorgiConfig c2 = cfg;
    c2.k0 = shift;
    const DeGiorgiResult res = degiorgi_supbound(u, cyl, c2);
    ++held;
    if (res.bound + 1e-10 >= cylinder_max(u, cyl.shrink_space(0.5))) ++passed;
  }
  for (std::uint64_t s = 61; s <= 66; ++s) {
    const TimeSeries u = solved(s);
    DeGiorgiConfig c2 = cfg;
    c2.k0 = 0.0;
    const DeGiorgiResult res = degiorgi_supbound(u, cyl, c2);
    ++held;
    if (res.bound + 1e-10 >= cylinder_max(u, cyl.shrink_space(0.5))) ++passed;
  }

  // Fast-geometric recursion around its threshold.
  const double thr = fast_geometric_threshold(3.0, 4.0, 0.25);
  const auto below = fast_geometric_recursion(0.9 * thr, 3.0, 4.0, 0.25, 60);
  const auto above = fast_geometric_recursion(4.0 * thr, 3.0, 4.0, 0.25, 60);
  const bool recursion_ok = below.back() <= 1e-10 && above.back() >= 1e10;

  detail = std::to_string(passed) + "/" + std::to_string(held) +
           " held-out sound, c_cal " + fmt(cfg.c_cal) +
           (recursion_ok ? ", recursion ok" : ", recursion BROKEN");
  return held == 19 && passed == 19 && recursion_ok;
}

// ---------------------------------------------------------------------------
// 8. Unbounded example: dyadic doubling until the cap.
bool criterion_unbounded(std::string& detail) {
  const GridSpec g = GridSpec::make_2d(512, 512, 2.0 / 512, {-1.0, -1.0});
  const ScalarField f = boundedness::unbounded_example(2, g, 0.0);
  const auto rows = boundedness::radial_growth_table(f, 16);
  if (rows.size() < 6) {
    detail = "table too short";
    return false;
  }
  int checked = 0;
  double lo = 10.0, hi = 0.0;
  for (size_t i = 0; i + 1 < rows.size(); ++i) {
    if (rows[i + 1].radius < 4.0 * g.h) break;  // cap-limited shell
    const double ratio = rows[i + 1].max_value / rows[i].max_value;
    lo = std::min(lo, ratio);
    hi = std::max(hi, ratio);
    ++checked;
    if (ratio < 1.8 || ratio > 2.05) {
      detail = "ratio " + fmt(ratio) + " at shell " + std::to_string(i);
      return false;
    }
  }
  detail = std::to_string(checked) + " shells, ratios in [" + fmt(lo) + ", " +
           fmt(hi) + "]";
  return checked >= 5;
}

// ---------------------------------------------------------------------------
// 9. Determinism: repeated solve + certify give byte-identical reports.
bool criterion_determinism(std::string& detail) {
  const fs::path dir = fs::temp_directory_path() / "lgf_acceptance_det";
  fs::remove_all(dir);
  fs::create_directories(dir);
  const fs::path config = fs::path(LGF_CONFIG_DIR) / "plateau1d.toml";
  if (!fs::exists(config)) {
    detail = "missing bundled config";
    return false;
  }
  for (int rep = 0; rep < 2; ++rep) {
    const fs::path out = dir / ("run" + std::to_string(rep));
    const std::string solve_cmd = std::string(LGF_CLI_PATH) + " solve " +
                                  config.string() + " --output " +
                                  out.string() + " > /dev/null 2>&1";
    const std::string cert_cmd = std::string(LGF_CLI_PATH) + " certify " +
                                 out.string() + " " + config.string() +
                                 " > /dev/null 2>&1";
    if (std::system(solve_cmd.c_str()) != 0) {
      detail = "solve failed";
      return false;
    }
    if (std::system(cert_cmd.c_str()) != 0) {
      detail = "certify failed";
      return false;
    }
  }
  size_t compared = 0;
  for (const auto& e : fs::directory_iterator(dir / "run0")) {
    const std::string name = e.path().filename().string();
    const auto read = [](const fs::path& p) {
      std::ifstream in(p, std::ios::binary);
      std::stringstream ss;
      ss << in.rdbuf();
      return ss.str();
    };
    if (name.find("manifest") != std::string::npos) {
      using nlohmann::json;
      const json a = json::parse(read(e.path()));
      const json b = json::parse(read(dir / "run1" / name));
      if (a["outputs_hash"] != b["outputs_hash"]) {
        detail = name + ": output hashes differ";
        return false;
      }
      continue;
    }
    if (read(e.path()) != read(dir / "run1" / name)) {
      detail = name + " differs between runs";
      return false;
    }
    ++compared;
  }
  detail = std::to_string(compared) + " report files byte-identical";
  return compared > 0;
}

}  // namespace

int main() {
  Harness h;
  h.run("adjointness and Gauss-Green identity", criterion_adjointness);
  h.run("Fenchel subgradient certificates", criterion_fenchel);
  h.run("exact radial solution on the annulus", criterion_radial);
  h.run("comparison principle battery", criterion_comparison);
  h.run("regularization stability sweep", criterion_stability);
  h.run("mollifier identities", criterion_mollify);
  h.run("De Giorgi sup-bound soundness", criterion_degiorgi);
  h.run("unbounded example growth", criterion_unbounded);
  h.run("byte-identical reports", criterion_determinism);
  if (h.failures == 0) {
    std::printf("acceptance: all %d criteria passed\n", h.index);
    return 0;
  }
  std::printf("acceptance: %d of %d criteria FAILED\n", h.failures, h.index);
  return 1;
}
