#include "lgf/mollify.hpp"

#include <algorithm>
#include <cmath>

namespace lgf {

ScalarField sample_series(const TimeSeries& s, double t) {
  if (s.empty()) throw EmptySeries("sample_series: empty series");
  if (t <= s.times.front()) return s.frames.front();
  if (t >= s.times.back()) return s.frames.back();
  const auto it = std::upper_bound(s.times.begin(), s.times.end(), t);
  const size_t k = static_cast<size_t>(it - s.times.begin());
  const double t0 = s.times[k - 1], t1 = s.times[k];
  const double a = (t - t0) / (t1 - t0);
  ScalarField out = s.frames[k - 1];
  for (size_t i = 0; i < out.v.size(); ++i)
    out.v[i] = (1.0 - a) * out.v[i] + a * s.frames[k].v[i];
  return out;
}

BoundaryTrace sample_traces(const TraceSeries& s, double t) {
  if (s.empty()) throw EmptySeries("sample_traces: empty series");
  if (t <= s.times.front()) return s.frames.front();
  if (t >= s.times.back()) return s.frames.back();
  const auto it = std::upper_bound(s.times.begin(), s.times.end(), t);
  const size_t k = static_cast<size_t>(it - s.times.begin());
  const double t0 = s.times[k - 1], t1 = s.times[k];
  const double a = (t - t0) / (t1 - t0);
  BoundaryTrace out = s.frames[k - 1];
  for (size_t i = 0; i < out.v.size(); ++i)
    out.v[i] = (1.0 - a) * out.v[i] + a * s.frames[k].v[i];
  return out;
}

TimeSeries exp_mollify(const TimeSeries& u, const MollifyConfig& cfg) {
  if (u.empty()) throw EmptySeries("exp_mollify: empty series");
  if (!(cfg.delta > 0.0)) throw InvalidParam("exp_mollify: delta must be > 0");
  if (!cfg.seed.grid.same_as(u.grid()))
    throw GridMismatch("exp_mollify: seed grid mismatch");

  TimeSeries out;
  ScalarField cur = cfg.seed;
  // The first stamp need not be t = 0; the mollification starts at the
  // first stamp with value seed.
  out.push(u.times.front(), cur);
  for (size_t k = 0; k + 1 < u.size(); ++k) {
    const double dt = u.times[k + 1] - u.times[k];
    const double decay = std::exp(-dt / cfg.delta);
    const double gain = 1.0 - decay;
    ScalarField next(cur.grid);
    const ScalarField& a = u.frames[k];
    const ScalarField& b = u.frames[k + 1];
    for (size_t i = 0; i < cur.v.size(); ++i)
      next.v[i] = decay * cur.v[i] + gain * 0.5 * (a.v[i] + b.v[i]);
    out.push(u.times[k + 1], next);
    cur = std::move(next);
  }
  return out;
}

double derivative_identity_residual(const TimeSeries& u,
                                    const TimeSeries& udelta, double delta) {
  if (u.size() != udelta.size() || u.times != udelta.times)
    throw GridMismatch("derivative_identity_residual: stamp mismatch");
  if (u.size() < 3) return 0.0;
  const GridSpec& g = u.grid();
  double worst = 0.0;
  for (size_t k = 1; k + 1 < u.size(); ++k) {
    const double tm = udelta.times[k - 1], t0 = udelta.times[k],
                 tp = udelta.times[k + 1];
    // Three-point derivative, exact for quadratics on nonuniform stamps.
    const double hm = t0 - tm, hp = tp - t0;
    const double cm = -hp / (hm * (hm + hp));
    const double c0 = (hp - hm) / (hm * hp);
    const double cp = hm / (hp * (hm + hp));
    KahanSum s;
    for (size_t i = 0; i < u.frames[k].v.size(); ++i) {
      const double dudt = cm * udelta.frames[k - 1].v[i] +
                          c0 * udelta.frames[k].v[i] +
                          cp * udelta.frames[k + 1].v[i];
      const double rhs = (u.frames[k].v[i] - udelta.frames[k].v[i]) / delta;
      const double r = dudt - rhs;
      s.add(r * r);
    }
    worst = std::max(worst, std::sqrt(s.value() * g.cell_measure()));
  }
  return worst;
}

namespace {

// Trapezoid time quadrature of per-frame values.
double trapezoid(const std::vector<double>& times,
                 const std::vector<double>& vals) {
  KahanSum s;
  for (size_t k = 0; k + 1 < times.size(); ++k)
    s.add(0.5 * (times[k + 1] - times[k]) * (vals[k] + vals[k + 1]));
  return s.value();
}

}  // namespace

double space_time_l2(const TimeSeries& u) {
  std::vector<double> sq(u.size());
  for (size_t k = 0; k < u.size(); ++k) {
    const double n = l2_norm(u.frames[k]);
    sq[k] = n * n;
  }
  return std::sqrt(std::max(0.0, trapezoid(u.times, sq)));
}

std::vector<AreaStrictRow> area_strict_report(const TimeSeries& u,
                                              const std::vector<double>& deltas,
                                              const ScalarField& seed) {
  const GridSpec& g = u.grid();
  std::vector<double> area_u(u.size());
  for (size_t k = 0; k < u.size(); ++k)
    area_u[k] = area_functional(u.frames[k]);
  const double area_total = trapezoid(u.times, area_u);

  std::vector<AreaStrictRow> rows;
  for (double d : deltas) {
    MollifyConfig cfg{d, seed};
    const TimeSeries ud = exp_mollify(u, cfg);

    std::vector<double> l1(u.size()), area_d(u.size());
    for (size_t k = 0; k < u.size(); ++k) {
      KahanSum s;
      for (size_t i = 0; i < u.frames[k].v.size(); ++i)
        s.add(std::abs(ud.frames[k].v[i] - u.frames[k].v[i]));
      l1[k] = s.value() * g.cell_measure();
      area_d[k] = area_functional(ud.frames[k]);
    }

    // int_0^T int_0^t d^-1 e^(-s/d) |Tu(t-s) - Tu(t)| dH ds dt, both
    // integrals by trapezoid on the stamps.
    std::vector<BoundaryTrace> traces(u.size());
    for (size_t k = 0; k < u.size(); ++k) traces[k] = trace(u.frames[k]);
    std::vector<double> inner_vals(u.size(), 0.0);
    for (size_t k = 0; k < u.size(); ++k) {
      std::vector<double> svals(k + 1, 0.0), stimes(k + 1, 0.0);
      for (size_t j = 0; j <= k; ++j) {
        const double s = u.times[k] - u.times[k - j];
        KahanSum bsum;
        for (size_t bf = 0; bf < traces[k].v.size(); ++bf)
          bsum.add(std::abs(traces[k - j].v[bf] - traces[k].v[bf]));
        stimes[j] = s;
        svals[j] = std::exp(-s / d) / d * bsum.value() * g.face_measure();
      }
      inner_vals[k] = trapezoid(stimes, svals);
    }

    AreaStrictRow row;
    row.delta = d;
    row.l1_gap = trapezoid(u.times, l1);
    row.area_gap = std::abs(trapezoid(u.times, area_d) - area_total);
    row.trace_gap = trapezoid(u.times, inner_vals);
    rows.push_back(row);
  }
  return rows;
}

}  // namespace lgf
