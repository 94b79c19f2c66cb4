#pragma once

#include <cstdint>
#include <vector>

#include "lgf/grid.hpp"
#include "lgf/lagrangian.hpp"
#include "lgf/series.hpp"

namespace lgf {

// Cauchy-Dirichlet data for the gradient flow of a linear-growth integrand.
// Boundary values g may be given as full fields (traces are extracted) or
// directly as boundary traces. An optional cell mask embeds a non-box
// domain: masked-out cells are frozen to the g field and the interfaces act
// as relaxed Dirichlet faces exactly like the outer boundary.
struct Problem {
  GridSpec grid;
  double T = 1.0;
  LagrangianSpec spec;
  ScalarField u0;
  TimeSeries g_fields;   // full fields over time (may be empty)
  TraceSeries g_traces;  // direct traces (used when g_fields is empty)
  std::vector<std::uint8_t> mask;  // empty = every cell active

  bool masked() const { return !mask.empty(); }
  void validate() const;
};

enum class InnerMethod { PrimalDual, Newton };

struct SolveConfig {
  double tau = 1e-2;
  double mu = 0.0;  // extra regularization applied to Problem::spec; 0 = none
  InnerMethod method = InnerMethod::PrimalDual;
  int max_iters = 40000;
  double tol_rel = 1e-6;
  double tol_abs = 1e-12;
  double theta_pd = 1.0;  // over-relaxation in [0, 1]
  // Primal-dual step sizes; <= 0 means derive from the operator norm bound
  // so that sigma * tau_pd * L^2 <= 1.
  double sigma = 0.0;
  double tau_pd = 0.0;
  int check_every = 16;
  int threads = 0;  // 0 = hardware concurrency (sweep-level parallelism)

  void validate() const;
};

struct StepStats {
  int iters = 0;
  bool converged = false;
  double energy = 0.0;            // E(u_next), exact nonsmooth boundary term
  double max_fenchel_gap = 0.0;   // max cell relative Fenchel gap
  double el_residual = 0.0;       // relative Euler-Lagrange residual
};

struct Trajectory {
  TimeSeries u;        // stamps 0..K, frame 0 is u0
  CellVectorSeries z;  // stamps 1..K, dual certificate field at cells
  TraceSeries zb;      // stamps 1..K, claimed normal trace on the boundary
  std::vector<StepStats> stats;
  std::vector<std::uint8_t> mask;  // copy of the problem mask

  bool all_converged() const {
    for (const auto& s : stats)
      if (!s.converged) return false;
    return true;
  }
};

// Face bookkeeping for (possibly masked) domains: active interior faces
// carry the gradient; Dirichlet faces carry the relaxed boundary term.
struct DirichletFace {
  int cell = 0;        // adjacent active cell
  Vec normal;          // outward unit normal
  Point location;      // face center
  double finf_nu = 0;  // f^infinity(x_face, normal)
  int box_face = -1;   // boundary-face index when on the box boundary
  int ghost_cell = -1; // inactive neighbor when on a mask interface
};

struct ActiveTopology {
  GridSpec grid;
  std::vector<std::uint8_t> active;    // per cell
  std::vector<std::uint8_t> fx_active; // per x face
  std::vector<std::uint8_t> fy_active; // per y face
  std::vector<DirichletFace> dirichlet;
  std::int64_t active_count = 0;

  // Flattened active-face endpoint lists (left/lower cell, right/upper cell)
  // and per-cell adjacent-active-face counts, one pair per axis.
  std::vector<int> xf_lo, xf_hi, yf_lo, yf_hi;
  std::vector<std::uint8_t> cnt_x, cnt_y;

  static ActiveTopology build(const Problem& prob,
                              const LagrangianSpec& spec_eff);
};

// One implicit minimizing-movements step: approximately minimizes
//   E(v) = sum h^n f_mu(x, grad v) + sum_bdry h^(n-1) f^inf |Tv - g|
//          + 1/(2 tau) ||v - u_prev||^2
// and returns the minimizer with its dual certificate (z at cells, claimed
// normal trace on boundary faces).
struct StepResult {
  ScalarField u;
  CellVectorField z;
  BoundaryTrace zb;
  StepStats stats;
};

StepResult step(const ScalarField& u_prev, const BoundaryTrace& g_k,
                const Problem& prob, const SolveConfig& cfg);

Trajectory solve(const Problem& prob, const SolveConfig& cfg);

// Effective integrand used by a solve: Problem::spec regularized by cfg.mu.
LagrangianSpec effective_spec(const Problem& prob, const SolveConfig& cfg);

// L2(Omega_T) distance between two trajectories (right-endpoint rule in
// time, matching the implicit scheme), restricted to active cells.
double trajectory_l2_distance(const Trajectory& a, const Trajectory& b);

struct SweepEntry {
  double mu = 0.0;
  bool converged = false;
  double dual_gauge_excess = 0.0;  // max over cells/steps of rho°(z) - 1 vs base spec
  double mu_gap_min = 0.0;         // min over frames of f_mu-integral - f-integral
  double mu_gap_max = 0.0;         // max over frames of the same
  double max_fenchel_gap = 0.0;    // worst step certificate vs f_mu
  double distance_to_next = -1.0;  // L2(Omega_T) distance to the next-mu run
};

struct SweepReport {
  std::vector<SweepEntry> entries;
  std::vector<Trajectory> trajectories;
};

// Realizes the regularization sweep mu_1 > mu_2 > ... > 0: solves each
// regularized problem and reports the Cauchy trend together with the dual
// feasibility against the unregularized integrand.
SweepReport stability_sweep(const Problem& prob, const std::vector<double>& mus,
                            const SolveConfig& cfg);

}  // namespace lgf
