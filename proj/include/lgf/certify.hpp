#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "lgf/solver.hpp"

namespace lgf {
namespace certify {

// Space-time test function: frames on the trajectory stamps, vanishing at
// the first and last stamp (compact support in time).
struct TestFunction {
  std::string id;
  bool interior = true;  // zero trace on every frame
  TimeSeries phi;
};

// Battery generator: a fixed canonical set (versioned so reports are
// bit-stable) plus seeded-random bumps.
struct TestFunctionFamily {
  int random_count = 8;
  std::uint64_t seed = 2024;
  bool include_boundary = true;

  // Builds the battery on the stamps/grid of the trajectory.
  std::vector<TestFunction> build(const TimeSeries& u) const;

  static constexpr const char* kCanonicalVersion = "v1";
};

struct Witness {
  int k = -1;       // time index
  int cell = -1;    // cell index
  std::string phi_id;
};

struct ConditionResult {
  std::string name;
  double residual = 0.0;  // normalized
  double tol = 0.0;
  bool pass = false;
  Witness witness;
  std::string note;
};

struct CertificateReport {
  std::vector<ConditionResult> conditions;
  bool overall_pass = false;
  double scale = 0.0;  // ||u||_L2(Omega_T) + ||g||_L2(Omega_T) + 1

  const ConditionResult* find(const std::string& name) const {
    for (const auto& c : conditions)
      if (c.name == name) return &c;
    return nullptr;
  }
};

struct CertifyConfig {
  // Tolerance for conditions the discrete minimizer satisfies exactly up to
  // inner-solver error: subgradient membership and the one-sided divergence
  // inequality. 1e-3 suits first-order solves, 1e-6 the Newton path.
  double tol_cert = 1e-3;
  // Equality-form conditions (pairing, Euler-Lagrange) carry an O(tau + h)
  // discretization floor; <= 0 derives max(tol_cert, c_disc * (tau + h)).
  double tol_pairing = -1.0;
  // One-sided comparison-map inequalities; <= 0 derives 10 * tol_pairing.
  double tol_vi = -1.0;
  // Calibrated on the bundled refinement study: healthy runs sit near
  // 0.03 * (tau + h), corrupted ones near 1e-2 independent of resolution.
  double c_disc = 0.1;
  // Threshold for r(T/32) / scale^2 in the integrated initial condition.
  double tol_init = 0.05;
  // Comparison-principle slack, relative to scale^2.
  double tol_comparison = 1e-8;
  TestFunctionFamily family;

  double pairing_tol(double tau, double h) const {
    if (tol_pairing > 0.0) return tol_pairing;
    return std::max(tol_cert, c_disc * (tau + h));
  }
  double vi_tol(double tau, double h) const {
    if (tol_vi > 0.0) return tol_vi;
    return 10.0 * pairing_tol(tau, h);
  }
};

double problem_scale(const Trajectory& traj, const TraceSeries& g);

// (i) z in the subdifferential of f at the cell gradient, a.e. in space-time.
ConditionResult check_subgradient(const Trajectory& traj,
                                  const LagrangianSpec& spec, double tol);

// (ii) divergence inequality against compactly-in-time supported phi with
// the relaxed-trace right-hand side.
ConditionResult check_divergence_condition(const Trajectory& traj,
                                           const TraceSeries& g,
                                           const LagrangianSpec& spec,
                                           const std::vector<TestFunction>& fam,
                                           double tol);

// (iii) time-integrated pairing identity against interior phi.
ConditionResult check_pairing_condition(const Trajectory& traj,
                                        const LagrangianSpec& spec,
                                        const std::vector<TestFunction>& fam,
                                        double tol);

// (iv) integrated initial condition r(h) for h in {T/8, T/16, T/32}.
ConditionResult check_initial_condition(const Trajectory& traj,
                                        const ScalarField& u0, double tol_init);

// Comparison maps for the variational / intermediate inequalities.
std::vector<TestFunction> comparison_battery(const Trajectory& traj,
                                             const Problem& prob,
                                             std::uint64_t seed);

ConditionResult check_variational_inequality(
    const Trajectory& traj, const Problem& prob, const LagrangianSpec& spec,
    const std::vector<TestFunction>& maps, double tol);

ConditionResult check_intermediate_condition(
    const Trajectory& traj, const Problem& prob, const LagrangianSpec& spec,
    const std::vector<TestFunction>& maps, double tol);

// || (uA - uB)_+ (t_k) ||^2 curve; pass iff bounded by its initial value and
// non-increasing within tol * scale^2.
struct ComparisonReport {
  std::vector<double> curve;
  bool pass = false;
  double worst_increase = 0.0;
};
ComparisonReport check_comparison(const Trajectory& a, const Trajectory& b,
                                  double tol);

// Anzellotti-style Euler-Lagrange residual for differentiable integrands;
// phi with nonzero trace where Tu = Tg are rejected (precondition).
ConditionResult check_euler_lagrange(const Trajectory& traj,
                                     const Problem& prob,
                                     const LagrangianSpec& spec,
                                     const std::vector<TestFunction>& fam,
                                     double tol);

// Trace restriction of the Euler-Lagrange test class: zero trace wherever
// the solution trace attaches to g.
bool euler_lagrange_admissible(const Trajectory& traj, const Problem& prob,
                               const TestFunction& tf);

// Runs the full battery for a box-domain trajectory.
CertificateReport certify_trajectory(const Trajectory& traj,
                                     const Problem& prob,
                                     const SolveConfig& solve_cfg,
                                     const CertifyConfig& cfg);

}  // namespace certify
}  // namespace lgf
