#pragma once

#include <vector>

#include "lgf/series.hpp"

namespace lgf {

struct MollifyConfig {
  double delta = 0.1;  // mollification scale
  ScalarField seed;    // initial value of the mollification
};

// Exponential-in-time mollification
//   u^d(t) = e^(-t/d) seed + (1/d) int_0^t e^((s-t)/d) u(s) ds
// evaluated on the input stamps by the exact per-step recurrence
//   u^d(t_{k+1}) = e^(-dt/d) u^d(t_k) + (1 - e^(-dt/d)) * avg_k,
// with avg_k the trapezoidal average of u on [t_k, t_{k+1}]. The recurrence
// is unconditionally stable and keeps constants as exact fixed points.
TimeSeries exp_mollify(const TimeSeries& u, const MollifyConfig& cfg);

// Max over interior stamps of || d_t u^d - (u - u^d)/d ||_{L2(Omega)} with a
// central-difference time derivative.
double derivative_identity_residual(const TimeSeries& u,
                                    const TimeSeries& udelta, double delta);

struct AreaStrictRow {
  double delta = 0.0;
  double l1_gap = 0.0;     // || u^d - u ||_{L1(Omega_T)}
  double area_gap = 0.0;   // | int A(Du^d) - int A(Du) | dt
  double trace_gap = 0.0;  // mollified-trace double integral
};

// Convergence reporter behind the area-strict and trace-mollification
// certificates: rows for each delta, expected to decrease toward zero on
// the bundled series. Time integrals use the trapezoid rule.
std::vector<AreaStrictRow> area_strict_report(const TimeSeries& u,
                                              const std::vector<double>& deltas,
                                              const ScalarField& seed);

// || u ||_{L2(Omega_T)} with trapezoid quadrature in time.
double space_time_l2(const TimeSeries& u);

}  // namespace lgf
