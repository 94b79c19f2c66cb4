#pragma once

#include <vector>

#include "lgf/common.hpp"
#include "lgf/grid.hpp"

namespace lgf {

// Time-indexed frames on a shared grid. Stamps are strictly increasing and
// start at t >= 0.
template <typename Field>
struct Series {
  std::vector<double> times;
  std::vector<Field> frames;

  size_t size() const { return times.size(); }
  bool empty() const { return times.empty(); }

  void push(double t, Field f) {
    if (!times.empty()) {
      if (!(t > times.back()))
        throw InvalidParam("series: stamps must be strictly increasing");
      if (!frames.back().grid.same_as(f.grid))
        throw GridMismatch("series: frames must share one grid");
    } else if (t < 0.0) {
      throw InvalidParam("series: stamps start at t >= 0");
    }
    times.push_back(t);
    frames.push_back(std::move(f));
  }

  const GridSpec& grid() const {
    if (frames.empty()) throw EmptySeries("series: empty");
    return frames.front().grid;
  }
};

using TimeSeries = Series<ScalarField>;
using CellVectorSeries = Series<CellVectorField>;
using TraceSeries = Series<BoundaryTrace>;

// Linear interpolation in time, clamped at the ends.
ScalarField sample_series(const TimeSeries& s, double t);
BoundaryTrace sample_traces(const TraceSeries& s, double t);

}  // namespace lgf
