#include <cstdlib>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "json.hpp"
#include "lgf/certify.hpp"
#include "lgf/fields.hpp"
#include "lgf/io.hpp"
#include "lgf/toml_lite.hpp"

using namespace lgf;
namespace fs = std::filesystem;

#ifndef LGF_CLI_PATH
#define LGF_CLI_PATH "lgflow"
#endif
#ifndef LGF_CONFIG_DIR
#define LGF_CONFIG_DIR "configs"
#endif

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  REQUIRE(in);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(LGF_CLI_PATH) + " " + args +
                          " > /dev/null 2> /dev/null";
  return std::system(cmd.c_str());
}

fs::path temp_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("lgf_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

}  // namespace

TEST_CASE("field files round-trip bit-exactly") {
  const fs::path dir = temp_dir("field");
  const GridSpec g = GridSpec::make_2d(13, 7, 0.041, {-0.3, 1.2});
  const ScalarField f = fields::random_uniform(g, 99, -5.0, 5.0);
  io::write_field(dir / "f.lgf", f);
  const ScalarField r = io::read_field(dir / "f.lgf");
  CHECK(r.grid.same_as(g));
  for (size_t c = 0; c < f.v.size(); ++c) CHECK(r.v[c] == f.v[c]);

  io::write_field_csv(dir / "f.csv", f);
  const std::string csv = slurp(dir / "f.csv");
  CHECK(csv.rfind("x,y,value\n", 0) == 0);

  CHECK_THROWS_AS(io::read_field(dir / "missing.lgf"), IoError);
  std::ofstream bad(dir / "bad.lgf", std::ios::binary);
  bad << "NOPE";
  bad.close();
  CHECK_THROWS_AS(io::read_field(dir / "bad.lgf"), IoError);
}

TEST_CASE("toml subset parser") {
  const auto t = toml::parse(
      "schema = 1\n"
      "# comment\n"
      "[problem]\n"
      "kind = \"plateau1d\"  # trailing\n"
      "cells = 64\n"
      "flag = true\n"
      "weights = [0.5, 1.5]\n");
  CHECK(t.at("schema").num == 1.0);
  CHECK(t.at("problem.kind").str == "plateau1d");
  CHECK(t.at("problem.cells").num == 64.0);
  CHECK(t.at("problem.flag").boolean);
  REQUIRE(t.at("problem.weights").items.size() == 2);
  CHECK(t.at("problem.weights").items[1].num == 1.5);

  CHECK_THROWS_AS(toml::parse("key value\n"), toml::ParseError);
  CHECK_THROWS_AS(toml::parse("a = 1\na = 2\n"), toml::ParseError);
  CHECK_THROWS_AS(toml::parse("[unterminated\n"), toml::ParseError);
}

TEST_CASE("config loading: TOML, JSON, schema rejection") {
  const fs::path dir = temp_dir("config");
  {
    std::ofstream out(dir / "run.toml");
    out << "schema = 1\n[problem]\nkind = \"plateau1d\"\ncells = 32\n"
        << "[solve]\ntau = 0.01\ntol_rel = 1e-5\n[output]\ndir = \"o\"\n";
  }
  const io::RunConfig rc = io::load_config(dir / "run.toml");
  CHECK(rc.problem.grid.nx == 32);
  CHECK(rc.solve.tau == 0.01);
  CHECK(rc.solve.tol_rel == 1e-5);
  CHECK(rc.output_dir.filename() == "o");

  {
    std::ofstream out(dir / "run.json");
    out << R"({"schema": 1, "problem": {"kind": "box2d", "cells": 16},
               "solve": {"tau": 0.02, "method": "primal-dual"}})";
  }
  const io::RunConfig rj = io::load_config(dir / "run.json");
  CHECK(rj.problem.grid.dim == 2);
  CHECK(rj.problem.grid.nx == 16);

  {
    std::ofstream out(dir / "old.toml");
    out << "schema = 2\n[problem]\nkind = \"plateau1d\"\n";
  }
  CHECK_THROWS_AS(io::load_config(dir / "old.toml"), InvalidParam);
  {
    std::ofstream out(dir / "none.toml");
    out << "[problem]\nkind = \"plateau1d\"\n";
  }
  CHECK_THROWS_AS(io::load_config(dir / "none.toml"), InvalidParam);
}

TEST_CASE("trajectory round-trip preserves frames, duals and stats") {
  Problem p = fields::plateau_1d(24);
  p.T = 0.02;
  SolveConfig cfg;
  cfg.tau = 0.005;
  cfg.tol_rel = 1e-4;
  const Trajectory traj = solve(p, cfg);
  const fs::path dir = temp_dir("traj");
  io::write_trajectory(dir, traj);
  const Trajectory back = io::read_trajectory(dir);
  REQUIRE(back.u.size() == traj.u.size());
  REQUIRE(back.z.size() == traj.z.size());
  for (size_t k = 0; k < traj.u.size(); ++k)
    for (size_t c = 0; c < traj.u.frames[k].v.size(); ++c)
      CHECK(back.u.frames[k].v[c] == traj.u.frames[k].v[c]);
  for (size_t k = 0; k < traj.z.size(); ++k) {
    for (size_t c = 0; c < traj.z.frames[k].x.size(); ++c) {
      CHECK(back.z.frames[k].x[c] == traj.z.frames[k].x[c]);
      CHECK(back.z.frames[k].y[c] == traj.z.frames[k].y[c]);
    }
    for (size_t bf = 0; bf < traj.zb.frames[k].v.size(); ++bf)
      CHECK(back.zb.frames[k].v[bf] ==
            doctest::Approx(traj.zb.frames[k].v[bf]).epsilon(1e-15));
  }
  for (size_t k = 0; k < traj.stats.size(); ++k) {
    CHECK(back.stats[k].iters == traj.stats[k].iters);
    CHECK(back.stats[k].converged == traj.stats[k].converged);
  }
}

TEST_CASE("cli: solve + certify determinism, byte-identical reports") {
  const fs::path dir = temp_dir("determinism");
  const fs::path config = fs::path(LGF_CONFIG_DIR) / "plateau1d.toml";
  REQUIRE(fs::exists(config));

  for (int rep = 0; rep < 2; ++rep) {
    const fs::path out = dir / ("run" + std::to_string(rep));
    REQUIRE(run_cli("solve " + config.string() + " --output " +
                    out.string()) == 0);
    REQUIRE(run_cli("certify " + out.string() + " " + config.string()) == 0);
  }
  // Every report byte-identical across runs; manifests carry timestamps but
  // their output hashes must agree.
  for (const auto& e : fs::directory_iterator(dir / "run0")) {
    const std::string name = e.path().filename().string();
    if (name.find("manifest") != std::string::npos) {
      using nlohmann::json;
      const json a = json::parse(slurp(e.path()));
      const json b = json::parse(slurp(dir / "run1" / name));
      CHECK(a["outputs_hash"] == b["outputs_hash"]);
      CHECK(a["config_hash"] == b["config_hash"]);
      continue;
    }
    CHECK(slurp(e.path()) == slurp(dir / "run1" / name));
  }
}

TEST_CASE("cli: malformed config exits 1 with diagnostics") {
  const fs::path dir = temp_dir("badconfig");
  {
    std::ofstream out(dir / "bad.toml");
    out << "this is not toml\n";
  }
  const std::string cmd = std::string(LGF_CLI_PATH) + " solve " +
                          (dir / "bad.toml").string() + " 2> " +
                          (dir / "err.txt").string() + " > /dev/null";
  const int rc = std::system(cmd.c_str());
  CHECK(WEXITSTATUS(rc) == 1);
  CHECK(!slurp(dir / "err.txt").empty());
}

TEST_CASE("certificate json structure") {
  Problem p = fields::plateau_1d(24);
  p.T = 0.04;
  SolveConfig cfg;
  cfg.tau = p.T / 8;
  cfg.tol_rel = 1e-4;
  const Trajectory traj = solve(p, cfg);
  const auto rep =
      certify::certify_trajectory(traj, p, cfg, certify::CertifyConfig{});
  const fs::path dir = temp_dir("certjson");
  io::write_certificate_json(dir / "c.json", rep);
  using nlohmann::json;
  const json j = json::parse(slurp(dir / "c.json"));
  CHECK(j["schema"] == 1);
  CHECK(j["overall_pass"].is_boolean());
  REQUIRE(j["conditions"].is_array());
  for (const auto& c : j["conditions"]) {
    CHECK(c.contains("condition"));
    CHECK(c.contains("residual"));
    CHECK(c.contains("tol"));
    CHECK(c.contains("pass"));
    CHECK(c["witness"].contains("phi_id"));
  }
}

TEST_CASE("weighted-tv config: weight field file drives the integrand") {
  const fs::path dir = temp_dir("wtv");
  const GridSpec g = GridSpec::make_1d(32, 1.0 / 32);
  ScalarField w(g);
  for (int ix = 0; ix < g.nx; ++ix)
    w.at(ix, 0) = 1.0 + 0.5 * (g.cell_center(ix, 0).x > 0.5 ? 1.0 : 0.0);
  io::write_field(dir / "w.lgf", w);
  {
    std::ofstream out(dir / "run.toml");
    out << "schema = 1\n[problem]\nkind = \"plateau1d\"\ncells = 32\n"
        << "[lagrangian]\nkind = \"weighted-tv\"\nweights = \"w.lgf\"\n"
        << "mu = 0.05\n";
  }
  const io::RunConfig rc = io::load_config(dir / "run.toml");
  CHECK(rc.problem.spec.is_regularized());
  const LagrangianSpec& base = lag_base(rc.problem.spec);
  CHECK(base.kind == LagrangianKind::WeightedTV);
  CHECK(lag_recession(rc.problem.spec, {0.25, 0.0}, {1.0, 0.0}) ==
        doctest::Approx(1.0));
  CHECK(lag_recession(rc.problem.spec, {0.75, 0.0}, {1.0, 0.0}) ==
        doctest::Approx(1.5));

  {
    std::ofstream out(dir / "aniso.toml");
    out << "schema = 1\n[problem]\nkind = \"plateau1d\"\ncells = 32\n"
        << "[lagrangian]\nkind = \"anisotropic-tv\"\n"
        << "axis_weights = [0.5, 2.0]\n";
  }
  const io::RunConfig ra = io::load_config(dir / "aniso.toml");
  CHECK(ra.problem.spec.kind == LagrangianKind::AnisotropicTV);
  CHECK(ra.problem.spec.axis_weights[0] == 0.5);
}

TEST_CASE("cli: bundled Newton fixture certifies; corrupted run fails") {
  const fs::path dir = temp_dir("newton_fixture");
  const fs::path config = dir / "newton.toml";
  {
    std::ofstream out(config);
    out << "schema = 1\n"
        << "[problem]\nkind = \"smooth-bump2d\"\ncells = 32\nT = 0.1\n"
        << "[lagrangian]\nkind = \"tv\"\n"
        << "[solve]\ntau = 0.0015625\nmu = 0.1\nmethod = \"newton\"\n"
        << "tol_rel = 1e-9\n"
        << "[certify]\ntol_cert = 1e-6\n"
        << "[output]\ndir = \"run\"\n";
  }
  REQUIRE(run_cli("solve " + config.string()) == 0);
  const fs::path run = dir / "run";
  // Canonical battery only.
  REQUIRE(run_cli("certify " + run.string() + " " + config.string() +
                  " --battery 0") == 0);

  // Corrupt the state frames; certification must fail with exit 1.
  Trajectory traj = io::read_trajectory(run);
  for (size_t k = traj.u.size() / 2; k < traj.u.size(); ++k)
    for (size_t c = 0; c < traj.u.frames[k].v.size(); ++c)
      traj.u.frames[k].v[c] += 0.75;
  const fs::path bad = dir / "bad";
  io::write_trajectory(bad, traj);
  const int rc = std::system((std::string(LGF_CLI_PATH) + " certify " +
                              bad.string() + " " + config.string() +
                              " > /dev/null 2>&1")
                                 .c_str());
  CHECK(WEXITSTATUS(rc) == 1);
}
