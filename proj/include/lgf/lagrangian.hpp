#pragma once

#include <array>
#include <functional>
#include <memory>

#include "lgf/common.hpp"
#include "lgf/extended.hpp"

namespace lgf {

// Families of linear-growth integrands f(x, xi) with lambda|xi| <= f <=
// Lambda(1+|xi|). Every member is of the form
//
//   f(x, xi) = sqrt(c(x)^2 + rho(x, xi)^2),
//
// where rho is a positively 1-homogeneous symmetric gauge (|xi| for total
// variation, w(x)|xi| weighted, sum_j a_j|xi_j| anisotropic) and c >= 0 is
// an offset (0 for the plain gauges, 1 for the area integrand, grows under
// regularization). Recession function, convex conjugate, subdifferential
// and proximal maps all follow from (rho, c) in closed form; the enumerated
// structure below is the user-facing description.
enum class LagrangianKind {
  TotalVariation,
  Area,
  WeightedTV,
  AnisotropicTV,
  Regularized,
};

using WeightFn = std::function<double(Point)>;

struct LagrangianSpec {
  LagrangianKind kind = LagrangianKind::TotalVariation;
  double lambda = 1.0;      // lower growth constant
  double big_lambda = 1.0;  // upper growth constant

  // Regularized only: f = sqrt(mu^2 + inner^2).
  double mu = 0.0;
  std::shared_ptr<const LagrangianSpec> inner;

  // WeightedTV only: weight w(x) sampled at cell centers, with
  // lambda <= w <= big_lambda everywhere.
  WeightFn weight;

  // AnisotropicTV only: per-axis weights a_j > 0.
  std::array<double, 2> axis_weights{1.0, 1.0};

  static LagrangianSpec total_variation();
  static LagrangianSpec area();
  static LagrangianSpec weighted_tv(WeightFn w, double w_min, double w_max);
  static LagrangianSpec anisotropic_tv(double ax, double ay);

  bool is_regularized() const { return kind == LagrangianKind::Regularized; }
};

// Offset c and base gauge of the canonical form. The base of a Regularized
// spec is the base of its inner spec; the offset accumulates in quadrature.
double lag_offset(const LagrangianSpec& spec);
const LagrangianSpec& lag_base(const LagrangianSpec& spec);

// rho(x, xi): the 1-homogeneous gauge of the family (equals f^infinity).
double lag_gauge(const LagrangianSpec& spec, Point x, Vec xi);

// Polar gauge rho°(x, z): rho°(z) <= 1 characterizes dom f*.
double lag_dual_gauge(const LagrangianSpec& spec, Point x, Vec z);

// f(x, xi)
double lag_eval(const LagrangianSpec& spec, Point x, Vec xi);

// f^infinity(x, xi) = lim_{t->0+} t f(x, xi/t)
double lag_recession(const LagrangianSpec& spec, Point x, Vec xi);

// D_xi f(x, xi). Throws NotDifferentiable at kinks (total variation type at
// xi = 0, anisotropic type when some component vanishes away from 0).
Vec lag_grad(const LagrangianSpec& spec, Point x, Vec xi);
bool lag_differentiable_at(const LagrangianSpec& spec, Point x, Vec xi);

// Whether D_xi f exists everywhere (smooth inner-solver paths require it).
bool lag_smooth(const LagrangianSpec& spec);

// f*(x, z) = sup_xi z.xi - f(x, xi); +inf outside the dual ball.
ExtReal lag_conjugate(const LagrangianSpec& spec, Point x, Vec z);

// f(x, xi) + f*(x, z) - z.xi >= 0, zero iff z is a subgradient at xi.
ExtReal lag_fenchel_gap(const LagrangianSpec& spec, Point x, Vec xi, Vec z);

// Regularized(spec, mu); growth bounds recomputed. Throws InvalidParam for
// mu <= 0 or when spec is already regularized.
LagrangianSpec lag_regularize(const LagrangianSpec& spec, double mu);

// Hessian of f at (x, xi) as a symmetric 2x2 (xx, xy, yy); requires a
// smooth spec with positive offset.
struct SymMat2 {
  double xx = 0.0, xy = 0.0, yy = 0.0;
};
SymMat2 lag_hessian(const LagrangianSpec& spec, Point x, Vec xi);

// prox_{sigma f*}(w) = argmin_z 1/2|z-w|^2 + sigma f*(x, z). Projection onto
// the dual ball when the offset is zero; a radial scalar root-find otherwise.
// Always lands exactly inside dom f*. Throws InvalidParam for anisotropic
// bases with positive offset (no radial structure; use the smooth path).
Vec lag_prox_conjugate(const LagrangianSpec& spec, Point x, Vec w,
                       double sigma);

}  // namespace lgf
