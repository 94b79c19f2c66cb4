#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "lgf/certify.hpp"
#include "lgf/mollify.hpp"
#include "lgf/solver.hpp"

namespace lgf {
namespace io {

// Little-endian binary field file: magic "LGF1", u32 dim, u32 nx, u32 ny,
// f64 h, f64 origin x/y, then nx*ny f64 cell values in row-major order.
void write_field(const std::filesystem::path& path, const ScalarField& f);
ScalarField read_field(const std::filesystem::path& path);

// CSV export (x[,y],value), one row per cell, row-major.
void write_field_csv(const std::filesystem::path& path, const ScalarField& f);

std::uint64_t fnv1a64(const void* data, size_t bytes,
                      std::uint64_t seed = 14695981039346656037ull);
std::string hex64(std::uint64_t v);
std::uint64_t file_fnv64(const std::filesystem::path& path);

// Trajectory directory layout: index.csv (k, t, energy, inner_iters, gap,
// el_residual, converged), u_%06d.lgf for k = 0..K, zx_/zy_%06d.lgf and
// zb_%06d.csv for k = 1..K, mask.lgf when the problem is masked.
void write_trajectory(const std::filesystem::path& dir, const Trajectory& traj);
Trajectory read_trajectory(const std::filesystem::path& dir);

struct RunManifest {
  std::string tool_version;
  std::string command;
  std::uint64_t config_hash = 0;
  std::uint64_t seed = 0;
  int threads = 0;
  std::string created_utc;  // informational; excluded from determinism
  std::vector<std::filesystem::path> outputs;
  std::uint64_t outputs_hash = 0;  // combined FNV of every listed output
};

// Hashes the listed outputs and writes the manifest into dir. Each
// subcommand uses its own file name so reports never clobber the solve
// manifest.
void write_manifest(const std::filesystem::path& dir, RunManifest m,
                    const std::string& filename = "manifest.json");

// Parsed experiment configuration: problem + solver + certification knobs.
struct RunConfig {
  Problem problem;
  SolveConfig solve;
  certify::CertifyConfig cert;
  std::filesystem::path output_dir = "out";
  std::uint64_t seed = 2024;
  std::uint64_t config_hash = 0;
};

// Reads TOML (default) or JSON (.json extension, or a leading '{'). Throws
// InvalidParam / toml::ParseError with diagnostics on malformed input.
RunConfig load_config(const std::filesystem::path& path);

void write_certificate_json(const std::filesystem::path& path,
                            const certify::CertificateReport& rep);

void write_sweep_csv(const std::filesystem::path& path, const SweepReport& rep);

void write_mollify_csv(const std::filesystem::path& path,
                       const std::vector<AreaStrictRow>& rows);

}  // namespace io
}  // namespace lgf
