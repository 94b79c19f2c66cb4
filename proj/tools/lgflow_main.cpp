// lgflow: solver and certification toolkit for parabolic gradient flows of
// linear-growth functionals (total variation flow and relatives).
//
// Subcommands: solve | certify | sweep-mu | mollify | degiorgi |
// example-radial | export-csv. Exit codes: 0 ok, 1 input error,
// 2 numerical non-convergence.

#include <chrono>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <iostream>

#include "CLI11.hpp"
#include "json.hpp"
#include "lgf/boundedness.hpp"
#include "lgf/certify.hpp"
#include "lgf/fields.hpp"
#include "lgf/io.hpp"
#include "lgf/toml_lite.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace lgf;

namespace {

std::string utc_now() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t tt = std::chrono::system_clock::to_time_t(now);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&tt));
  return buf;
}

int resolve_threads(int cli_threads) {
  if (cli_threads > 0) return cli_threads;
  if (const char* env = std::getenv("LGF_THREADS")) {
    const int v = std::atoi(env);
    if (v > 0) return v;
  }
  return 0;  // library default: hardware concurrency
}

void finish_manifest(const fs::path& dir, const std::string& command,
                     std::uint64_t config_hash, std::uint64_t seed,
                     int threads, std::vector<fs::path> outputs,
                     const std::string& filename = "manifest.json") {
  io::RunManifest m;
  m.tool_version = kToolVersion;
  m.command = command;
  m.config_hash = config_hash;
  m.seed = seed;
  m.threads = threads;
  m.created_utc = utc_now();
  m.outputs = std::move(outputs);
  io::write_manifest(dir, std::move(m), filename);
}

std::vector<fs::path> list_outputs(const fs::path& dir) {
  std::vector<fs::path> out;
  for (const auto& e : fs::directory_iterator(dir))
    if (e.is_regular_file() && e.path().filename() != "manifest.json")
      out.push_back(e.path());
  std::sort(out.begin(), out.end());
  return out;
}

int cmd_solve(const fs::path& config_path, const std::string& out_override,
              int threads) {
  io::RunConfig rc = io::load_config(config_path);
  if (!out_override.empty()) rc.output_dir = out_override;
  rc.solve.threads = threads;

  const Trajectory traj = solve(rc.problem, rc.solve);
  fs::create_directories(rc.output_dir);
  io::write_trajectory(rc.output_dir, traj);
  finish_manifest(rc.output_dir, "solve", rc.config_hash, rc.seed, threads,
                  list_outputs(rc.output_dir));
  if (!traj.all_converged()) {
    std::cerr << "lgflow solve: some steps did not converge; best iterates "
                 "written to "
              << rc.output_dir << "\n";
    return 2;
  }
  std::cout << "wrote " << traj.u.size() << " frames to " << rc.output_dir
            << "\n";
  return 0;
}

int cmd_certify(const fs::path& traj_dir, const fs::path& config_path,
                int battery, std::uint64_t seed, const std::string& out_file,
                int threads) {
  io::RunConfig rc = io::load_config(config_path);
  const Trajectory traj = io::read_trajectory(traj_dir);
  if (battery >= 0) rc.cert.family.random_count = battery;
  if (seed != 0) rc.cert.family.seed = seed;
  const certify::CertificateReport rep =
      certify::certify_trajectory(traj, rc.problem, rc.solve, rc.cert);
  const fs::path out = out_file.empty() ? traj_dir / "certificate.json"
                                        : fs::path(out_file);
  io::write_certificate_json(out, rep);
  finish_manifest(out.parent_path(), "certify", rc.config_hash,
                  rc.cert.family.seed, threads, {out},
                  "certify_manifest.json");
  for (const auto& c : rep.conditions)
    std::cout << (c.pass ? "pass " : "FAIL ") << c.name
              << "  residual=" << c.residual << "  tol=" << c.tol << "\n";
  std::cout << (rep.overall_pass ? "overall: pass" : "overall: FAIL") << "\n";
  return rep.overall_pass ? 0 : 1;
}

int cmd_sweep_mu(const fs::path& config_path, std::vector<double> mus,
                 const std::string& out_override, int threads) {
  io::RunConfig rc = io::load_config(config_path);
  if (!out_override.empty()) rc.output_dir = out_override;
  rc.solve.threads = threads;
  if (mus.empty()) mus = {0.1, 0.05, 0.025, 0.0125};
  const SweepReport rep = stability_sweep(rc.problem, mus, rc.solve);
  fs::create_directories(rc.output_dir);
  const fs::path out = rc.output_dir / "sweep.csv";
  io::write_sweep_csv(out, rep);
  finish_manifest(rc.output_dir, "sweep-mu", rc.config_hash, rc.seed, threads,
                  {out}, "sweep_manifest.json");
  bool ok = true;
  for (const auto& e : rep.entries) {
    std::cout << "mu=" << e.mu << " distance_to_next=" << e.distance_to_next
              << " dual_excess=" << e.dual_gauge_excess << "\n";
    ok &= e.converged;
  }
  return ok ? 0 : 2;
}

int cmd_mollify(const fs::path& traj_dir, std::vector<double> deltas,
                const std::string& out_file) {
  const Trajectory traj = io::read_trajectory(traj_dir);
  if (deltas.empty()) deltas = {0.2, 0.1, 0.05, 0.025};
  const auto rows = area_strict_report(traj.u, deltas, traj.u.frames.front());
  const fs::path out =
      out_file.empty() ? traj_dir / "mollify.csv" : fs::path(out_file);
  io::write_mollify_csv(out, rows);
  finish_manifest(out.parent_path(), "mollify",
                  io::file_fnv64(traj_dir / "index.csv"), 0, 1, {out},
                  "mollify_manifest.json");
  for (const auto& r : rows)
    std::cout << "delta=" << r.delta << " l1_gap=" << r.l1_gap
              << " area_gap=" << r.area_gap << " trace_gap=" << r.trace_gap
              << "\n";
  return 0;
}

int cmd_degiorgi(const fs::path& traj_dir, double cx, double cy, double t0,
                 double rho, double theta, double r, double xi, double k0,
                 double c_cal, const std::string& out_prefix) {
  const Trajectory traj = io::read_trajectory(traj_dir);
  boundedness::Cylinder cyl{{cx, cy}, t0, rho, theta};
  boundedness::DeGiorgiConfig cfg;
  cfg.r = r;
  cfg.xi = xi;
  cfg.k0 = k0;
  cfg.c_cal = c_cal;
  const auto res = boundedness::degiorgi_supbound(traj.u, cyl, cfg);

  const fs::path base =
      out_prefix.empty() ? traj_dir / "degiorgi" : fs::path(out_prefix);
  {
    std::ofstream csv(base.string() + "_trace.csv");
    csv << "i,k_i,rho_i,Y_i,cells_above_level\n";
    for (const auto& row : res.trace) {
      char buf[160];
      std::snprintf(buf, sizeof buf, "%d,%.17g,%.17g,%.17g,%ld\n", row.i,
                    row.k_i, row.rho_i, row.y_i, row.cells_above);
      csv << buf;
    }
  }
  {
    json j;
    j["schema"] = 1;
    j["bound"] = res.bound;
    j["excess"] = res.excess;
    j["average_term"] = res.average_term;
    j["levels_decreasing"] = res.levels_decreasing;
    j["c_cal"] = c_cal;
    j["note"] = "c_cal is an empirically calibrated stand-in for the "
                "existence constant of the sup estimate";
    std::ofstream out(base.string() + "_bound.json");
    out << j.dump(2) << '\n';
  }
  finish_manifest(fs::path(base).parent_path(), "degiorgi",
                  io::file_fnv64(traj_dir / "index.csv"), 0, 1,
                  {fs::path(base.string() + "_trace.csv"),
                   fs::path(base.string() + "_bound.json")},
                  "degiorgi_manifest.json");
  std::cout << "sup bound = " << res.bound
            << (res.levels_decreasing ? "" : "  [InsufficientLevels]") << "\n";
  return 0;
}

int cmd_example_radial(int n, int cells, double t, const std::string& out) {
  const double h = 2.0 / cells;
  const GridSpec g = GridSpec::make_2d(cells, cells, h, {-1.0, -1.0});
  const ScalarField f = boundedness::unbounded_example(n, g, t);
  const fs::path base = out.empty() ? "radial" : out;
  io::write_field(base.string() + ".lgf", f);
  std::ofstream csv(base.string() + "_growth.csv");
  csv << "j,radius,max_value\n";
  for (const auto& row : boundedness::radial_growth_table(f, 24)) {
    char buf[96];
    std::snprintf(buf, sizeof buf, "%d,%.17g,%.17g\n", row.j, row.radius,
                  row.max_value);
    csv << buf;
  }
  std::cout << "wrote " << base.string() << ".lgf and growth table\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "lgflow: solve and certify parabolic gradient flows of linear-growth "
      "functionals"};
  app.require_subcommand(1);
  int threads = 0;
  app.add_option("--threads", threads,
                 "cap module-level parallelism (default: hardware, env "
                 "LGF_THREADS)");

  std::string config, output, traj, out_file;
  int battery = -1;
  std::uint64_t seed = 0;
  std::vector<double> mus, deltas;

  auto* solve_cmd =
      app.add_subcommand("solve", "run the minimizing-movements solver");
  solve_cmd->add_option("config", config, "TOML or JSON config")->required();
  solve_cmd->add_option("--output", output, "output directory override");

  auto* cert_cmd = app.add_subcommand(
      "certify", "check weak/variational-solution conditions");
  cert_cmd->add_option("traj", traj, "trajectory directory")->required();
  cert_cmd->add_option("config", config, "config the run was produced with")
      ->required();
  cert_cmd->add_option("--battery", battery,
                       "random test functions (0 = canonical set only)");
  cert_cmd->add_option("--seed", seed, "battery seed");
  cert_cmd->add_option("--output", out_file, "certificate JSON path");

  auto* sweep_cmd =
      app.add_subcommand("sweep-mu", "regularization stability sweep");
  sweep_cmd->add_option("config", config, "TOML or JSON config")->required();
  sweep_cmd->add_option("--mus", mus, "decreasing regularization parameters");
  sweep_cmd->add_option("--output", output, "output directory override");

  auto* mol_cmd = app.add_subcommand(
      "mollify", "exponential-in-time mollification report");
  mol_cmd->add_option("traj", traj, "trajectory directory")->required();
  mol_cmd->add_option("--deltas", deltas, "mollification scales");
  mol_cmd->add_option("--output", out_file, "CSV path");

  double cx = 0.5, cy = 0.5, t0 = 0.08, rho = 0.2, theta = 0.4, rexp = 4.0,
         xi = 0.5, k0 = 0.0, c_cal = 1.0;
  auto* dg_cmd =
      app.add_subcommand("degiorgi", "level-set iteration sup bound");
  dg_cmd->add_option("traj", traj, "trajectory directory")->required();
  dg_cmd->add_option("--cx", cx, "cylinder center x");
  dg_cmd->add_option("--cy", cy, "cylinder center y");
  dg_cmd->add_option("--t0", t0, "cylinder end time");
  dg_cmd->add_option("--rho", rho, "cylinder radius");
  dg_cmd->add_option("--theta", theta, "cylinder aspect");
  dg_cmd->add_option("--r", rexp, "integrability exponent (> dim)");
  dg_cmd->add_option("--xi", xi, "free parameter of the sup estimate");
  dg_cmd->add_option("--k0", k0, "base truncation level");
  dg_cmd->add_option("--c-cal", c_cal, "calibrated constant");
  dg_cmd->add_option("--output", out_file, "output prefix");

  int rn = 2, rcells = 512;
  double rt = 0.0;
  auto* ex_cmd =
      app.add_subcommand("example-radial", "unbounded exact solution sample");
  ex_cmd->add_option("--n", rn, "space dimension of the formula (>= 2)");
  ex_cmd->add_option("--grid", rcells, "cells per axis on [-1,1]^2");
  ex_cmd->add_option("--t", rt, "time");
  ex_cmd->add_option("--output", out_file, "output prefix");

  std::string field_in;
  auto* csv_cmd =
      app.add_subcommand("export-csv", "convert a field file to CSV");
  csv_cmd->add_option("field", field_in, "LGF1 field file")->required();
  csv_cmd->add_option("--output", out_file, "CSV path");

  CLI11_PARSE(app, argc, argv);
  threads = resolve_threads(threads);

  try {
    if (solve_cmd->parsed()) return cmd_solve(config, output, threads);
    if (cert_cmd->parsed())
      return cmd_certify(traj, config, battery, seed, out_file, threads);
    if (sweep_cmd->parsed()) return cmd_sweep_mu(config, mus, output, threads);
    if (mol_cmd->parsed()) return cmd_mollify(traj, deltas, out_file);
    if (dg_cmd->parsed())
      return cmd_degiorgi(traj, cx, cy, t0, rho, theta, rexp, xi, k0, c_cal,
                          out_file);
    if (ex_cmd->parsed()) return cmd_example_radial(rn, rcells, rt, out_file);
    if (csv_cmd->parsed()) {
      const ScalarField f = io::read_field(field_in);
      io::write_field_csv(out_file.empty() ? field_in + ".csv" : out_file, f);
      return 0;
    }
  } catch (const toml::ParseError& e) {
    std::cerr << "lgflow: " << e.what() << "\n";
    return 1;
  } catch (const json::exception& e) {
    std::cerr << "lgflow: config JSON: " << e.what() << "\n";
    return 1;
  } catch (const Error& e) {
    std::cerr << "lgflow: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "lgflow: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
