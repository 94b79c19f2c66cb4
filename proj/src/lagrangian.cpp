#include "lgf/lagrangian.hpp"

#include <algorithm>
#include <cmath>

namespace lgf {

namespace {

double weight_at(const LagrangianSpec& base, Point x) {
  double w = base.weight(x);
  // Clamp the sampled weight into the declared growth band; out-of-band
  // samples would silently break the certificate bounds.
  return std::min(std::max(w, base.lambda), base.big_lambda);
}

}  // namespace

LagrangianSpec LagrangianSpec::total_variation() {
  LagrangianSpec s;
  s.kind = LagrangianKind::TotalVariation;
  s.lambda = 1.0;
  s.big_lambda = 1.0;
  return s;
}

LagrangianSpec LagrangianSpec::area() {
  LagrangianSpec s;
  s.kind = LagrangianKind::Area;
  s.lambda = 1.0;
  s.big_lambda = 1.0;
  return s;
}

LagrangianSpec LagrangianSpec::weighted_tv(WeightFn w, double w_min,
                                           double w_max) {
  if (!w) throw InvalidParam("weighted_tv: weight function required");
  if (!(w_min > 0.0) || !(w_max >= w_min))
    throw InvalidParam("weighted_tv: need 0 < w_min <= w_max");
  LagrangianSpec s;
  s.kind = LagrangianKind::WeightedTV;
  s.weight = std::move(w);
  s.lambda = w_min;
  s.big_lambda = w_max;
  return s;
}

LagrangianSpec LagrangianSpec::anisotropic_tv(double ax, double ay) {
  if (!(ax > 0.0) || !(ay > 0.0))
    throw InvalidParam("anisotropic_tv: axis weights must be positive");
  LagrangianSpec s;
  s.kind = LagrangianKind::AnisotropicTV;
  s.axis_weights = {ax, ay};
  s.lambda = std::min(ax, ay);
  // sum_j a_j |xi_j| <= max(a) * sqrt(2) |xi| in 2D.
  s.big_lambda = std::max(ax, ay) * std::sqrt(2.0);
  return s;
}

double lag_offset(const LagrangianSpec& spec) {
  switch (spec.kind) {
    case LagrangianKind::TotalVariation:
    case LagrangianKind::WeightedTV:
    case LagrangianKind::AnisotropicTV:
      return 0.0;
    case LagrangianKind::Area:
      return 1.0;
    case LagrangianKind::Regularized: {
      const double ci = lag_offset(*spec.inner);
      return std::sqrt(ci * ci + spec.mu * spec.mu);
    }
  }
  return 0.0;
}

const LagrangianSpec& lag_base(const LagrangianSpec& spec) {
  if (spec.kind == LagrangianKind::Regularized) return lag_base(*spec.inner);
  return spec;
}

double lag_gauge(const LagrangianSpec& spec, Point x, Vec xi) {
  const LagrangianSpec& b = lag_base(spec);
  switch (b.kind) {
    case LagrangianKind::TotalVariation:
    case LagrangianKind::Area:
      return norm(xi);
    case LagrangianKind::WeightedTV:
      return weight_at(b, x) * norm(xi);
    case LagrangianKind::AnisotropicTV:
      return b.axis_weights[0] * std::abs(xi.x) +
             b.axis_weights[1] * std::abs(xi.y);
    default:
      return norm(xi);
  }
}

double lag_dual_gauge(const LagrangianSpec& spec, Point x, Vec z) {
  const LagrangianSpec& b = lag_base(spec);
  switch (b.kind) {
    case LagrangianKind::TotalVariation:
    case LagrangianKind::Area:
      return norm(z);
    case LagrangianKind::WeightedTV:
      return norm(z) / weight_at(b, x);
    case LagrangianKind::AnisotropicTV:
      return std::max(std::abs(z.x) / b.axis_weights[0],
                      std::abs(z.y) / b.axis_weights[1]);
    default:
      return norm(z);
  }
}

double lag_eval(const LagrangianSpec& spec, Point x, Vec xi) {
  const double c = lag_offset(spec);
  const double rho = lag_gauge(spec, x, xi);
  return c == 0.0 ? rho : std::hypot(c, rho);
}

double lag_recession(const LagrangianSpec& spec, Point x, Vec xi) {
  return lag_gauge(spec, x, xi);
}

bool lag_differentiable_at(const LagrangianSpec& spec, Point x, Vec xi) {
  (void)x;
  const double c = lag_offset(spec);
  const LagrangianSpec& b = lag_base(spec);
  switch (b.kind) {
    case LagrangianKind::TotalVariation:
    case LagrangianKind::Area:
    case LagrangianKind::WeightedTV:
      return c > 0.0 || norm(xi) > 0.0;
    case LagrangianKind::AnisotropicTV:
      // sqrt(c^2 + rho^2) keeps the kinks of rho on the axes except at the
      // origin, where rho^2 is smooth with zero gradient.
      if (c > 0.0 && xi.x == 0.0 && xi.y == 0.0) return true;
      return xi.x != 0.0 && xi.y != 0.0;
    default:
      return false;
  }
}

bool lag_smooth(const LagrangianSpec& spec) {
  const LagrangianSpec& b = lag_base(spec);
  const bool isotropic = b.kind == LagrangianKind::TotalVariation ||
                         b.kind == LagrangianKind::Area ||
                         b.kind == LagrangianKind::WeightedTV;
  return isotropic && lag_offset(spec) > 0.0;
}

Vec lag_grad(const LagrangianSpec& spec, Point x, Vec xi) {
  if (!lag_differentiable_at(spec, x, xi))
    throw NotDifferentiable("lag_grad: kink at requested point");
  const double c = lag_offset(spec);
  const LagrangianSpec& b = lag_base(spec);
  switch (b.kind) {
    case LagrangianKind::TotalVariation:
    case LagrangianKind::Area: {
      if (c == 0.0) {
        const double n = norm(xi);
        return {xi.x / n, xi.y / n};
      }
      const double f = std::hypot(c, norm(xi));
      return {xi.x / f, xi.y / f};
    }
    case LagrangianKind::WeightedTV: {
      const double w = weight_at(b, x);
      if (c == 0.0) {
        const double n = norm(xi);
        return {w * xi.x / n, w * xi.y / n};
      }
      // rho = w|xi|: D f = rho D rho / f = w^2 xi / f.
      const double f = std::hypot(c, w * norm(xi));
      return {w * w * xi.x / f, w * w * xi.y / f};
    }
    case LagrangianKind::AnisotropicTV: {
      const auto sgn = [](double v) { return v > 0 ? 1.0 : (v < 0 ? -1.0 : 0.0); };
      const Vec drho{b.axis_weights[0] * sgn(xi.x),
                     b.axis_weights[1] * sgn(xi.y)};
      if (c == 0.0) return drho;
      const double rho = lag_gauge(spec, x, xi);
      const double f = std::hypot(c, rho);
      return {rho * drho.x / f, rho * drho.y / f};
    }
    default:
      throw NotDifferentiable("lag_grad: unsupported kind");
  }
}

ExtReal lag_conjugate(const LagrangianSpec& spec, Point x, Vec z) {
  const double c = lag_offset(spec);
  const double m = lag_dual_gauge(spec, x, z);
  if (m > 1.0) return ExtReal::pos_infinity();
  if (c == 0.0) return ExtReal::finite(0.0);
  return ExtReal::finite(-c * std::sqrt(std::max(0.0, 1.0 - m * m)));
}

ExtReal lag_fenchel_gap(const LagrangianSpec& spec, Point x, Vec xi, Vec z) {
  const ExtReal fstar = lag_conjugate(spec, x, z);
  if (fstar.is_infinite()) return ExtReal::pos_infinity();
  return ExtReal::finite(lag_eval(spec, x, xi) + fstar.value() - dot(z, xi));
}

LagrangianSpec lag_regularize(const LagrangianSpec& spec, double mu) {
  if (!(mu > 0.0)) throw InvalidParam("lag_regularize: mu must be positive");
  if (spec.is_regularized())
    throw InvalidParam("lag_regularize: spec is already regularized");
  LagrangianSpec s;
  s.kind = LagrangianKind::Regularized;
  s.mu = mu;
  s.inner = std::make_shared<LagrangianSpec>(spec);
  // Lower bound survives: sqrt(c^2 + rho^2) >= rho >= lambda|xi|. The upper
  // bound picks up the enlarged offset.
  s.lambda = spec.lambda;
  s.big_lambda = std::max(spec.big_lambda, lag_offset(s));
  return s;
}

SymMat2 lag_hessian(const LagrangianSpec& spec, Point x, Vec xi) {
  if (!lag_smooth(spec))
    throw NotDifferentiable("lag_hessian: spec has kinks");
  const double c = lag_offset(spec);
  const LagrangianSpec& b = lag_base(spec);
  double w = 1.0;
  if (b.kind == LagrangianKind::WeightedTV) w = weight_at(b, x);
  // f = sqrt(c^2 + w^2|xi|^2): Hess = w^2 I / f - w^4 xi xi^T / f^3.
  const double f = std::hypot(c, w * norm(xi));
  const double a = w * w / f;
  const double q = w * w * w * w / (f * f * f);
  return {a - q * xi.x * xi.x, -q * xi.x * xi.y, a - q * xi.y * xi.y};
}

Vec lag_prox_conjugate(const LagrangianSpec& spec, Point x, Vec w,
                       double sigma) {
  const double c = lag_offset(spec);
  const LagrangianSpec& b = lag_base(spec);

  const auto clip_dual = [&](Vec z) {
    // Guarantee exact membership in dom f*; a couple of downward nudges
    // absorb any rounding from the projection scale factor.
    for (int guard = 0; guard < 4 && lag_dual_gauge(spec, x, z) > 1.0;
         ++guard) {
      const double s = std::nexttoward(1.0 / lag_dual_gauge(spec, x, z), 0.0);
      z = s * z;
    }
    return z;
  };

  if (b.kind == LagrangianKind::AnisotropicTV) {
    if (c > 0.0)
      throw InvalidParam(
          "lag_prox_conjugate: regularized anisotropic family has no radial "
          "prox; use the smooth solver path");
    // Indicator of the box |z_j| <= a_j: componentwise clamp.
    return {std::clamp(w.x, -b.axis_weights[0], b.axis_weights[0]),
            std::clamp(w.y, -b.axis_weights[1], b.axis_weights[1])};
  }

  double radius = 1.0;
  if (b.kind == LagrangianKind::WeightedTV) radius = weight_at(b, x);

  const double wn = norm(w);
  if (c == 0.0) {
    if (wn <= radius) return w;
    return clip_dual((radius / wn) * w);
  }

  // f*(z) = -c sqrt(1 - |z|^2/R^2) on |z| <= R. Radial optimality for
  // r = |z|:  r - wn + (sigma c / R) * r / sqrt(R^2 - r^2) = 0, strictly
  // increasing in r on [0, R): safeguarded Newton from a bisection bracket.
  if (wn == 0.0) return {0.0, 0.0};
  const double R = radius;
  const double k = sigma * c / R;
  auto g = [&](double r) {
    return r - wn + k * r / std::sqrt(std::max(R * R - r * r, 1e-300));
  };
  double lo = 0.0, hi = R * (1.0 - 1e-16);
  if (g(hi) <= 0.0) {
    // Numerically saturated: the minimizer hugs the sphere.
    return clip_dual((hi / wn) * w);
  }
  double r = std::min(wn, 0.5 * R);
  for (int it = 0; it < 80; ++it) {
    const double val = g(r);
    if (std::abs(val) < 1e-15 * (1.0 + wn)) break;
    if (val > 0.0)
      hi = r;
    else
      lo = r;
    const double s = std::sqrt(std::max(R * R - r * r, 1e-300));
    const double dg = 1.0 + k * (R * R) / (s * s * s);
    double next = r - val / dg;
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    r = next;
  }
  return clip_dual((r / wn) * w);
}

}  // namespace lgf
