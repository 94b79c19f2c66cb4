#pragma once

#include <cstdint>

#include "lgf/solver.hpp"

namespace lgf {
namespace fields {

// Indicator of [a, b] with the given height, sampled at cell centers.
ScalarField indicator_1d(const GridSpec& g, double a, double b, double height);

// Indicator of the axis-aligned box [ax,bx] x [ay,by].
ScalarField indicator_box_2d(const GridSpec& g, double ax, double bx, double ay,
                             double by, double height);

// Smooth 2D bump exp(-|x-c|^2 / w^2) scaled by amplitude.
ScalarField gaussian_2d(const GridSpec& g, Point c, double w, double amplitude);

ScalarField constant(const GridSpec& g, double value);

// (1-t)_+ (n-1) / |x| sampled at cell centers, capped at (n-1)/(h/2).
ScalarField radial_decay(const GridSpec& g, int n, double t);

// Random plateaus of width >= 2 cells (1D) or axis-aligned plateau products
// (2D rows), values in [lo, hi]. Deterministic in the seed.
ScalarField random_plateaus_1d(const GridSpec& g, std::uint64_t seed, double lo,
                               double hi);
ScalarField random_plateaus_axis_2d(const GridSpec& g, std::uint64_t seed,
                                    double lo, double hi);

// Random smooth field: a few Gaussian bumps. Deterministic in the seed.
ScalarField random_smooth_2d(const GridSpec& g, std::uint64_t seed,
                             double amplitude);

ScalarField random_uniform(const GridSpec& g, std::uint64_t seed, double lo,
                           double hi);

// Constant-in-time boundary series from a single field.
TimeSeries constant_series(const ScalarField& f, double T);

// 1D moving step: height 1 for x < a + speed * t. K frames over [0, T].
TimeSeries moving_step_1d(const GridSpec& g, double a, double speed, double T,
                          int frames);

// Bundled problems.

// 1D total variation flow of an indicator plateau with zero Dirichlet data.
Problem plateau_1d(int cells = 64, double height = 1.0);

// 2D smooth-data problem on the unit square (Gaussian bump initial data,
// zero boundary values); the Newton certification fixture once regularized.
Problem smooth_bump_2d(int cells = 32);

// 2D problem with a box-indicator initial datum and constant boundary data.
Problem box_indicator_2d(int cells = 32, double height = 1.0);

// Exact-solution fixture: total variation flow on the annulus
// 0.5 <= |x| <= 1 embedded in [-1,1]^2 via the cell mask, with
// g(x,t) = (1-t)_+ / |x| and u0 = 1/|x|.
Problem annulus_radial_2d(int cells_per_axis = 128);

// Exact solution of the annulus fixture at time t, masked cells included.
ScalarField annulus_exact(const GridSpec& g, double t);

// Relative L2 error on active cells.
double masked_rel_l2_error(const ScalarField& u, const ScalarField& exact,
                           const std::vector<std::uint8_t>& mask);

}  // namespace fields
}  // namespace lgf
