#include "lgf/io.hpp"

#include <algorithm>
#include <bit>
#include <chrono>
#include <cinttypes>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "lgf/fields.hpp"
#include "lgf/toml_lite.hpp"

static_assert(std::endian::native == std::endian::little,
              "field files are little-endian; big-endian hosts unsupported");

namespace lgf {
namespace io {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

void put_u32(std::ofstream& out, std::uint32_t v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof v);
}
void put_f64(std::ofstream& out, double v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof v);
}
std::uint32_t get_u32(std::ifstream& in) {
  std::uint32_t v = 0;
  in.read(reinterpret_cast<char*>(&v), sizeof v);
  return v;
}
double get_f64(std::ifstream& in) {
  double v = 0;
  in.read(reinterpret_cast<char*>(&v), sizeof v);
  return v;
}

std::string fmt_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

void write_field(const fs::path& path, const ScalarField& f) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open for write: " + path.string());
  out.write("LGF1", 4);
  put_u32(out, static_cast<std::uint32_t>(f.grid.dim));
  put_u32(out, static_cast<std::uint32_t>(f.grid.nx));
  put_u32(out, static_cast<std::uint32_t>(f.grid.ny));
  put_f64(out, f.grid.h);
  put_f64(out, f.grid.origin.x);
  put_f64(out, f.grid.origin.y);
  for (double v : f.v) put_f64(out, v);
  if (!out) throw IoError("write failed: " + path.string());
}

ScalarField read_field(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open: " + path.string());
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, "LGF1", 4) != 0)
    throw IoError("bad magic in field file: " + path.string());
  GridSpec g;
  g.dim = static_cast<int>(get_u32(in));
  g.nx = static_cast<int>(get_u32(in));
  g.ny = static_cast<int>(get_u32(in));
  g.h = get_f64(in);
  g.origin.x = get_f64(in);
  g.origin.y = get_f64(in);
  const GridSpec checked =
      g.dim == 1 ? GridSpec::make_1d(g.nx, g.h, g.origin.x)
                 : GridSpec::make_2d(g.nx, g.ny, g.h, g.origin);
  ScalarField f(checked);
  for (auto& v : f.v) v = get_f64(in);
  if (!in) throw IoError("truncated field file: " + path.string());
  return f;
}

void write_field_csv(const fs::path& path, const ScalarField& f) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open for write: " + path.string());
  out << (f.grid.dim == 1 ? "x,value\n" : "x,y,value\n");
  for (std::int64_t c = 0; c < f.grid.cell_count(); ++c) {
    const Point p = f.grid.cell_center(static_cast<int>(c));
    if (f.grid.dim == 1)
      out << fmt_double(p.x) << ',' << fmt_double(f.v[c]) << '\n';
    else
      out << fmt_double(p.x) << ',' << fmt_double(p.y) << ','
          << fmt_double(f.v[c]) << '\n';
  }
}

std::uint64_t fnv1a64(const void* data, size_t bytes, std::uint64_t seed) {
  const auto* p = static_cast<const unsigned char*>(data);
  std::uint64_t h = seed;
  for (size_t i = 0; i < bytes; ++i) {
    h ^= p[i];
    h *= 1099511628211ull;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016" PRIx64, v);
  return buf;
}

std::uint64_t file_fnv64(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open: " + path.string());
  std::uint64_t h = 14695981039346656037ull;
  char buf[1 << 16];
  while (in) {
    in.read(buf, sizeof buf);
    h = fnv1a64(buf, static_cast<size_t>(in.gcount()), h);
  }
  return h;
}

namespace {

std::string frame_name(const char* prefix, size_t k) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%s_%06zu", prefix, k);
  return buf;
}

}  // namespace

void write_trajectory(const fs::path& dir, const Trajectory& traj) {
  fs::create_directories(dir);
  const GridSpec& g = traj.u.grid();

  std::ofstream index(dir / "index.csv");
  if (!index) throw IoError("cannot open for write: " + (dir / "index.csv").string());
  index << "k,t,energy,inner_iters,gap,el_residual,converged\n";
  for (size_t k = 0; k < traj.u.size(); ++k) {
    write_field(dir / (frame_name("u", k) + ".lgf"), traj.u.frames[k]);
    double energy = 0.0, gap = 0.0, el = 0.0;
    int iters = 0, conv = 1;
    if (k >= 1) {
      const StepStats& s = traj.stats[k - 1];
      energy = s.energy;
      gap = s.max_fenchel_gap;
      el = s.el_residual;
      iters = s.iters;
      conv = s.converged ? 1 : 0;
      ScalarField zx(g), zy(g);
      zx.v = traj.z.frames[k - 1].x;
      zy.v = traj.z.frames[k - 1].y;
      write_field(dir / (frame_name("zx", k) + ".lgf"), zx);
      write_field(dir / (frame_name("zy", k) + ".lgf"), zy);
      std::ofstream zb(dir / (frame_name("zb", k) + ".csv"));
      zb << "face,value\n";
      for (size_t bf = 0; bf < traj.zb.frames[k - 1].v.size(); ++bf)
        zb << bf << ',' << fmt_double(traj.zb.frames[k - 1].v[bf]) << '\n';
    }
    index << k << ',' << fmt_double(traj.u.times[k]) << ','
          << fmt_double(energy) << ',' << iters << ',' << fmt_double(gap)
          << ',' << fmt_double(el) << ',' << conv << '\n';
  }
  if (!traj.mask.empty()) {
    ScalarField m(g);
    for (size_t c = 0; c < m.v.size(); ++c) m.v[c] = traj.mask[c] ? 1.0 : 0.0;
    write_field(dir / "mask.lgf", m);
  }
}

Trajectory read_trajectory(const fs::path& dir) {
  std::ifstream index(dir / "index.csv");
  if (!index) throw IoError("cannot open: " + (dir / "index.csv").string());
  std::string line;
  std::getline(index, line);  // header
  Trajectory traj;
  size_t k = 0;
  while (std::getline(index, line)) {
    if (line.empty()) continue;
    std::istringstream row(line);
    std::string tok;
    std::vector<std::string> cols;
    while (std::getline(row, tok, ',')) cols.push_back(tok);
    if (cols.size() != 7) throw IoError("bad index.csv row: " + line);
    const double t = std::stod(cols[1]);
    traj.u.push(t, read_field(dir / (frame_name("u", k) + ".lgf")));
    if (k >= 1) {
      const ScalarField zx = read_field(dir / (frame_name("zx", k) + ".lgf"));
      const ScalarField zy = read_field(dir / (frame_name("zy", k) + ".lgf"));
      CellVectorField z(zx.grid);
      z.x = zx.v;
      z.y = zy.v;
      traj.z.push(t, std::move(z));
      BoundaryTrace zb(zx.grid);
      std::ifstream zbin(dir / (frame_name("zb", k) + ".csv"));
      if (!zbin)
        throw IoError("missing boundary dual: " +
                      (dir / (frame_name("zb", k) + ".csv")).string());
      std::string zline;
      std::getline(zbin, zline);
      size_t bf = 0;
      while (std::getline(zbin, zline) && bf < zb.v.size()) {
        const size_t comma = zline.find(',');
        if (comma == std::string::npos) break;
        zb.v[bf++] = std::stod(zline.substr(comma + 1));
      }
      traj.zb.push(t, std::move(zb));
      StepStats s;
      s.energy = std::stod(cols[2]);
      s.iters = std::stoi(cols[3]);
      s.max_fenchel_gap = std::stod(cols[4]);
      s.el_residual = std::stod(cols[5]);
      s.converged = cols[6] == "1";
      traj.stats.push_back(s);
    }
    ++k;
  }
  if (traj.u.empty()) throw IoError("empty trajectory: " + dir.string());
  if (fs::exists(dir / "mask.lgf")) {
    const ScalarField m = read_field(dir / "mask.lgf");
    traj.mask.resize(m.v.size());
    for (size_t c = 0; c < m.v.size(); ++c) traj.mask[c] = m.v[c] > 0.5;
  }
  return traj;
}

void write_manifest(const fs::path& dir, RunManifest m,
                    const std::string& filename) {
  std::uint64_t combined = 14695981039346656037ull;
  json outputs = json::array();
  for (const auto& p : m.outputs) {
    const std::uint64_t h = file_fnv64(p);
    const std::string rel = fs::relative(p, dir).string();
    combined = fnv1a64(rel.data(), rel.size(), combined);
    combined = fnv1a64(&h, sizeof h, combined);
    outputs.push_back({{"path", rel},
                       {"bytes", fs::file_size(p)},
                       {"fnv64", hex64(h)}});
  }
  m.outputs_hash = combined;

  json j;
  j["schema"] = 1;
  j["tool_version"] = m.tool_version;
  j["command"] = m.command;
  j["config_hash"] = hex64(m.config_hash);
  j["seed"] = m.seed;
  j["threads"] = m.threads;
  j["created_utc"] = m.created_utc;
  j["outputs"] = outputs;
  j["outputs_hash"] = hex64(m.outputs_hash);
  std::ofstream out(dir / filename);
  if (!out) throw IoError("cannot write manifest in " + dir.string());
  out << j.dump(2) << '\n';
}

namespace {

const toml::Value* find(const toml::Table& t, const std::string& key) {
  const auto it = t.find(key);
  return it == t.end() ? nullptr : &it->second;
}

double num_or(const toml::Table& t, const std::string& key, double dflt) {
  const auto* v = find(t, key);
  if (!v) return dflt;
  if (v->kind != toml::Value::Kind::Number)
    throw InvalidParam("config: '" + key + "' must be a number");
  return v->num;
}

std::string str_or(const toml::Table& t, const std::string& key,
                   const std::string& dflt) {
  const auto* v = find(t, key);
  if (!v) return dflt;
  if (v->kind != toml::Value::Kind::String)
    throw InvalidParam("config: '" + key + "' must be a string");
  return v->str;
}

// JSON configs are flattened into the same table representation.
void flatten_json(const json& j, const std::string& prefix, toml::Table& out) {
  for (const auto& [key, val] : j.items()) {
    const std::string full = prefix.empty() ? key : prefix + "." + key;
    toml::Value v;
    if (val.is_object()) {
      flatten_json(val, full, out);
      continue;
    }
    if (val.is_string()) {
      v.kind = toml::Value::Kind::String;
      v.str = val.get<std::string>();
    } else if (val.is_boolean()) {
      v.kind = toml::Value::Kind::Boolean;
      v.boolean = val.get<bool>();
    } else if (val.is_number()) {
      v.kind = toml::Value::Kind::Number;
      v.num = val.get<double>();
    } else if (val.is_array()) {
      v.kind = toml::Value::Kind::Array;
      for (const auto& item : val) {
        toml::Value iv;
        if (item.is_string()) {
          iv.kind = toml::Value::Kind::String;
          iv.str = item.get<std::string>();
        } else if (item.is_number()) {
          iv.kind = toml::Value::Kind::Number;
          iv.num = item.get<double>();
        } else {
          throw InvalidParam("config: unsupported array element in " + full);
        }
        v.items.push_back(iv);
      }
    } else {
      throw InvalidParam("config: unsupported value type at " + full);
    }
    out[full] = v;
  }
}

LagrangianSpec lagrangian_from(const toml::Table& t,
                               const fs::path& config_dir) {
  const std::string kind = str_or(t, "lagrangian.kind", "tv");
  LagrangianSpec spec;
  if (kind == "tv") {
    spec = LagrangianSpec::total_variation();
  } else if (kind == "area") {
    spec = LagrangianSpec::area();
  } else if (kind == "weighted-tv") {
    const std::string wpath = str_or(t, "lagrangian.weights", "");
    if (wpath.empty())
      throw InvalidParam("config: weighted-tv needs lagrangian.weights");
    auto field = std::make_shared<ScalarField>(
        read_field(config_dir / wpath));
    double lo = 1e300, hi = -1e300;
    for (double v : field->v) {
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    if (!(lo > 0.0))
      throw InvalidParam("config: weight field must be positive");
    const GridSpec wg = field->grid;
    spec = LagrangianSpec::weighted_tv(
        [field, wg](Point p) {
          // Nearest-cell sampling of the weight field.
          int ix = static_cast<int>((p.x - wg.origin.x) / wg.h);
          int iy = wg.dim == 2
                       ? static_cast<int>((p.y - wg.origin.y) / wg.h)
                       : 0;
          ix = std::clamp(ix, 0, wg.nx - 1);
          iy = std::clamp(iy, 0, wg.ny - 1);
          return field->v[wg.cell_index(ix, iy)];
        },
        lo, hi);
  } else if (kind == "anisotropic-tv") {
    const auto* aw = find(t, "lagrangian.axis_weights");
    double ax = 1.0, ay = 1.0;
    if (aw) {
      if (aw->kind != toml::Value::Kind::Array || aw->items.size() != 2)
        throw InvalidParam("config: axis_weights must be [ax, ay]");
      ax = aw->items[0].num;
      ay = aw->items[1].num;
    }
    spec = LagrangianSpec::anisotropic_tv(ax, ay);
  } else {
    throw InvalidParam("config: unknown lagrangian.kind '" + kind + "'");
  }
  const double mu = num_or(t, "lagrangian.mu", 0.0);
  if (mu > 0.0) spec = lag_regularize(spec, mu);
  return spec;
}

}  // namespace

RunConfig load_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config: " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  const std::string text = buf.str();

  toml::Table t;
  const bool is_json = path.extension() == ".json" ||
                       (!text.empty() && text.find_first_not_of(" \t\r\n") !=
                                             std::string::npos &&
                        text[text.find_first_not_of(" \t\r\n")] == '{');
  if (is_json) {
    json j = json::parse(text);  // throws with diagnostics
    flatten_json(j, "", t);
  } else {
    t = toml::parse(text);
  }

  const double schema = num_or(t, "schema", -1.0);
  if (schema != 1.0)
    throw InvalidParam("config: schema version must be 1 (got " +
                       (schema < 0 ? std::string("none")
                                   : std::to_string(schema)) +
                       ")");

  RunConfig rc;
  rc.config_hash = fnv1a64(text.data(), text.size());
  rc.seed = static_cast<std::uint64_t>(num_or(t, "seed", 2024));
  rc.output_dir = str_or(t, "output.dir", "out");
  if (rc.output_dir.is_relative())
    rc.output_dir = path.parent_path() / rc.output_dir;

  const std::string kind = str_or(t, "problem.kind", "");
  const int cells = static_cast<int>(num_or(t, "problem.cells", 64));
  if (kind == "plateau1d") {
    rc.problem = fields::plateau_1d(cells);
  } else if (kind == "smooth-bump2d") {
    rc.problem = fields::smooth_bump_2d(cells);
  } else if (kind == "box2d") {
    rc.problem = fields::box_indicator_2d(cells);
  } else if (kind == "annulus2d") {
    rc.problem = fields::annulus_radial_2d(cells);
  } else if (kind == "custom") {
    const std::string u0_path = str_or(t, "problem.u0", "");
    const std::string g_path = str_or(t, "problem.g", "");
    if (u0_path.empty() || g_path.empty())
      throw InvalidParam("config: custom problems need problem.u0/problem.g");
    rc.problem.u0 = read_field(path.parent_path() / u0_path);
    rc.problem.grid = rc.problem.u0.grid;
    rc.problem.T = num_or(t, "problem.T", 1.0);
    rc.problem.g_fields = fields::constant_series(
        read_field(path.parent_path() / g_path), rc.problem.T);
  } else if (kind.empty()) {
    throw InvalidParam("config: problem.kind is required");
  } else {
    throw InvalidParam("config: unknown problem.kind '" + kind + "'");
  }
  if (kind != "custom") {
    const double T = num_or(t, "problem.T", rc.problem.T);
    if (T != rc.problem.T) {
      rc.problem.T = T;
      // Re-extend constant boundary series to the new horizon.
      if (!rc.problem.g_fields.empty() && rc.problem.g_fields.size() == 2) {
        TimeSeries gs;
        gs.push(0.0, rc.problem.g_fields.frames.front());
        gs.push(T, rc.problem.g_fields.frames.back());
        rc.problem.g_fields = std::move(gs);
      }
    }
  }
  if (find(t, "lagrangian.kind") || find(t, "lagrangian.mu"))
    rc.problem.spec = lagrangian_from(t, path.parent_path());

  rc.solve.tau = num_or(t, "solve.tau", rc.problem.T / 64.0);
  rc.solve.mu = num_or(t, "solve.mu", 0.0);
  const std::string method = str_or(t, "solve.method", "primal-dual");
  if (method == "primal-dual")
    rc.solve.method = InnerMethod::PrimalDual;
  else if (method == "newton")
    rc.solve.method = InnerMethod::Newton;
  else
    throw InvalidParam("config: unknown solve.method '" + method + "'");
  rc.solve.max_iters = static_cast<int>(num_or(t, "solve.max_iters", 40000));
  rc.solve.tol_rel = num_or(t, "solve.tol_rel", 1e-4);
  rc.solve.tol_abs = num_or(t, "solve.tol_abs", 1e-12);
  rc.solve.theta_pd = num_or(t, "solve.theta_pd", 1.0);

  rc.cert.tol_cert = num_or(t, "certify.tol_cert",
                            rc.solve.method == InnerMethod::Newton ? 1e-6
                                                                   : 1e-3);
  rc.cert.tol_init = num_or(t, "certify.tol_init", rc.cert.tol_init);
  rc.cert.family.random_count =
      static_cast<int>(num_or(t, "certify.battery", 8));
  rc.cert.family.seed = static_cast<std::uint64_t>(
      num_or(t, "certify.seed", static_cast<double>(rc.seed)));
  return rc;
}

void write_certificate_json(const fs::path& path,
                            const certify::CertificateReport& rep) {
  json conditions = json::array();
  for (const auto& c : rep.conditions) {
    json w;
    w["k"] = c.witness.k;
    w["cell"] = c.witness.cell;
    w["phi_id"] = c.witness.phi_id;
    conditions.push_back({{"condition", c.name},
                          {"residual", c.residual},
                          {"tol", c.tol},
                          {"pass", c.pass},
                          {"witness", w},
                          {"note", c.note}});
  }
  json j;
  j["schema"] = 1;
  j["scale"] = rep.scale;
  j["conditions"] = conditions;
  j["overall_pass"] = rep.overall_pass;
  std::ofstream out(path);
  if (!out) throw IoError("cannot write report: " + path.string());
  out << j.dump(2) << '\n';
}

void write_sweep_csv(const fs::path& path, const SweepReport& rep) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write report: " + path.string());
  out << "mu,converged,distance_to_next,dual_gauge_excess,mu_gap_min,"
         "mu_gap_max,max_fenchel_gap\n";
  for (const auto& e : rep.entries)
    out << fmt_double(e.mu) << ',' << (e.converged ? 1 : 0) << ','
        << fmt_double(e.distance_to_next) << ','
        << fmt_double(e.dual_gauge_excess) << ',' << fmt_double(e.mu_gap_min)
        << ',' << fmt_double(e.mu_gap_max) << ','
        << fmt_double(e.max_fenchel_gap) << '\n';
}

void write_mollify_csv(const fs::path& path,
                       const std::vector<AreaStrictRow>& rows) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write report: " + path.string());
  out << "delta,l1_gap,area_gap,trace_gap\n";
  for (const auto& r : rows)
    out << fmt_double(r.delta) << ',' << fmt_double(r.l1_gap) << ','
        << fmt_double(r.area_gap) << ',' << fmt_double(r.trace_gap) << '\n';
}

}  // namespace io
}  // namespace lgf
