#pragma once

#include <vector>

#include "lgf/series.hpp"

namespace lgf {
namespace boundedness {

// Backward parabolic cylinder Q^-_{rho,theta}(z, t0) = B(z, rho) x
// (t0 - theta rho, t0). Discrete realization: cell-center Euclidean balls;
// time slabs snap outward to whole steps.
struct Cylinder {
  Point center;
  double t0 = 1.0;
  double rho = 0.25;
  double theta = 1.0;

  Cylinder shrink_space(double factor) const {
    return {center, t0, rho * factor, theta};
  }
};

struct DeGiorgiConfig {
  double k0 = 0.0;    // base truncation level
  double xi = 0.5;    // free parameter of the sup estimate
  double r = 4.0;     // integrability exponent, r > n
  double alpha = 1.0; // power in the energy estimate
  double c_cal = 1.0; // calibrated stand-in for the existence constant
  int max_levels = 30;
};

// Space-time cutoff with analytic derivatives: quintic smoothstep, equal to
// one on the inner cylinder and vanishing outside the outer one.
struct Cutoff {
  Cylinder inner;
  Cylinder outer;

  double value(Point x, double t) const;
  Vec grad_x(Point x, double t) const;
  double dt(Point x, double t) const;

  // Cutoff supported on the given cylinder, flat on its half-size core.
  static Cutoff standard(const Cylinder& support);
};

struct EnergyTerms {
  double lhs = 0.0;            // esssup-in-time mass + truncation TV
  double rhs_gradphi = 0.0;    // |grad phi| (u-k)_+^alpha
  double rhs_dtphi = 0.0;      // (dt phi)_+ (u-k)_+^{1+alpha}
  double rhs_indicator = 0.0;  // |{u > lambda}| weighted by phi
  double rhs_total() const {
    return rhs_gradphi + rhs_dtphi + rhs_indicator;
  }
};

// Quadratures of both sides of the truncation energy estimate over the
// grid restriction of the cylinder, with truncation powers (u-k)_+^alpha
// and (u-k)_+^{1+alpha}. Throws CylinderOutOfDomain if the closure of the
// cylinder leaves the space-time domain of the series.
EnergyTerms energy_estimate_terms(const TimeSeries& u, double k,
                                  const Cutoff& phi, const Cylinder& cyl,
                                  const LagrangianSpec& spec,
                                  double alpha = 1.0);

struct DeGiorgiRow {
  int i = 0;
  double k_i = 0.0;
  double rho_i = 0.0;
  double y_i = 0.0;
  long cells_above = 0;
};

struct DeGiorgiResult {
  double bound = 0.0;     // k0 + excess
  double excess = 0.0;    // the closing level k of the sup estimate
  double average_term = 0.0;  // mean of (u - k0)_+^r over Q_0 plus theta rho
  std::vector<DeGiorgiRow> trace;
  // False when the level mass never started decreasing within max_levels
  // (reported as InsufficientLevels in the CLI output, not fatal).
  bool levels_decreasing = true;
};

// Level-set iteration realizing the sup bound
//   k = C ((1+1/xi)^{1+1/n} / theta)^{n/(r-n)}
//       (avg_{Q0} (u-k0)_+^r + theta rho)^{1/(r-n)} + rho + xi theta,
// with C = cfg.c_cal, plus the dyadic level/radius trace.
DeGiorgiResult degiorgi_supbound(const TimeSeries& u, const Cylinder& cyl,
                                 const DeGiorgiConfig& cfg);

// Smallest c_cal that makes the bound dominate the true maximum on the
// half cylinder; the calibration side of the held-out soundness protocol.
double degiorgi_required_c(const TimeSeries& u, const Cylinder& cyl,
                           const DeGiorgiConfig& cfg);

// Discrete maximum of u over the cylinder.
double cylinder_max(const TimeSeries& u, const Cylinder& cyl);

// u(x, t) = (1-t)_+ (n-1)/|x| sampled at cell centers, capped at
// (n-1)/(h/2): the stress example with no locally bounded representative.
ScalarField unbounded_example(int n, const GridSpec& grid, double t);

// Growth table of the unbounded example toward the origin: row j reports
// the max over the dyadic shell between the balls B(0, 2^-(j+1)) and
// B(0, 2^-j) (the sampled sup over the ball difference; literal ball
// maxima saturate at the nearest cell center). Stops at the h-cap.
struct ShellRow {
  int j = 0;
  double radius = 0.0;  // 2^-j
  double max_value = 0.0;
};
std::vector<ShellRow> radial_growth_table(const ScalarField& u, int max_j);

// Discrete upper-semicontinuous envelope: per grid point the max over the
// smallest resolvable backward cylinder (3x3 stencil, backward time window
// max(thetas) * h).
TimeSeries semicontinuous_envelope(const TimeSeries& u,
                                   const std::vector<double>& thetas);

// Y_{i+1} = C b^i Y_i^{1+beta}; converges to zero iff the start lies below
// the fast-geometric threshold C^(-1/beta) b^(-1/beta^2).
std::vector<double> fast_geometric_recursion(double y1, double c, double b,
                                             double beta, int iters);
double fast_geometric_threshold(double c, double b, double beta);

}  // namespace boundedness
}  // namespace lgf
