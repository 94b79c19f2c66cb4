#include "lgf/grid.hpp"

#include <algorithm>
#include <cmath>

namespace lgf {

namespace {

void require_same_grid(const GridSpec& a, const GridSpec& b,
                       const char* where) {
  if (!a.same_as(b)) throw GridMismatch(std::string(where) + ": grid mismatch");
}

void validate(const GridSpec& g, std::int64_t cap) {
  if (g.dim != 1 && g.dim != 2) throw InvalidParam("grid: dim must be 1 or 2");
  if (g.nx < 2) throw InvalidParam("grid: need at least 2 cells per axis");
  if (g.dim == 2 && g.ny < 2)
    throw InvalidParam("grid: need at least 2 cells per axis");
  if (g.dim == 1 && g.ny != 1) throw InvalidParam("grid: 1d grids have ny=1");
  if (!(g.h > 0.0)) throw InvalidParam("grid: spacing must be positive");
  if (g.cell_count() > cap) throw InvalidParam("grid: cell count exceeds cap");
}

}  // namespace

GridSpec GridSpec::make_1d(int nx, double h, double origin_x,
                           std::int64_t cell_cap) {
  GridSpec g;
  g.dim = 1;
  g.nx = nx;
  g.ny = 1;
  g.h = h;
  g.origin = {origin_x, 0.0};
  validate(g, cell_cap);
  return g;
}

GridSpec GridSpec::make_2d(int nx, int ny, double h, Point origin,
                           std::int64_t cell_cap) {
  GridSpec g;
  g.dim = 2;
  g.nx = nx;
  g.ny = ny;
  g.h = h;
  g.origin = origin;
  validate(g, cell_cap);
  return g;
}

int GridSpec::boundary_face_cell(int bf) const {
  if (dim == 1) return bf == 0 ? 0 : nx - 1;
  if (bf < ny) return cell_index(0, bf);                      // left
  if (bf < 2 * ny) return cell_index(nx - 1, bf - ny);        // right
  if (bf < 2 * ny + nx) return cell_index(bf - 2 * ny, 0);    // bottom
  return cell_index(bf - 2 * ny - nx, ny - 1);                // top
}

Vec GridSpec::boundary_face_normal(int bf) const {
  if (dim == 1) return bf == 0 ? Vec{-1.0, 0.0} : Vec{1.0, 0.0};
  if (bf < ny) return {-1.0, 0.0};
  if (bf < 2 * ny) return {1.0, 0.0};
  if (bf < 2 * ny + nx) return {0.0, -1.0};
  return {0.0, 1.0};
}

Point GridSpec::boundary_face_center(int bf) const {
  if (dim == 1)
    return bf == 0 ? Point{origin.x, 0.0} : Point{origin.x + nx * h, 0.0};
  if (bf < ny) return {origin.x, origin.y + (bf + 0.5) * h};
  if (bf < 2 * ny) return {origin.x + nx * h, origin.y + (bf - ny + 0.5) * h};
  if (bf < 2 * ny + nx)
    return {origin.x + (bf - 2 * ny + 0.5) * h, origin.y};
  return {origin.x + (bf - 2 * ny - nx + 0.5) * h, origin.y + ny * h};
}

VectorField gradient(const ScalarField& u) {
  const GridSpec& g = u.grid;
  VectorField z(g);
  const double inv_h = 1.0 / g.h;
  for (int iy = 0; iy < g.ny; ++iy)
    for (int fx = 0; fx < g.nx - 1; ++fx)
      z.fx[g.x_face_index(fx, iy)] =
          (u.at(fx + 1, iy) - u.at(fx, iy)) * inv_h;
  if (g.dim == 2)
    for (int fy = 0; fy < g.ny - 1; ++fy)
      for (int ix = 0; ix < g.nx; ++ix)
        z.fy[g.y_face_index(ix, fy)] =
            (u.at(ix, fy + 1) - u.at(ix, fy)) * inv_h;
  return z;
}

ScalarField divergence(const VectorField& z) {
  const GridSpec& g = z.grid;
  ScalarField d(g);
  const double inv_h = 1.0 / g.h;
  for (int iy = 0; iy < g.ny; ++iy)
    for (int ix = 0; ix < g.nx; ++ix) {
      const double right =
          ix < g.nx - 1 ? z.fx[g.x_face_index(ix, iy)] : 0.0;
      const double left = ix > 0 ? z.fx[g.x_face_index(ix - 1, iy)] : 0.0;
      double acc = (right - left) * inv_h;
      if (g.dim == 2) {
        const double top = iy < g.ny - 1 ? z.fy[g.y_face_index(ix, iy)] : 0.0;
        const double bot = iy > 0 ? z.fy[g.y_face_index(ix, iy - 1)] : 0.0;
        acc += (top - bot) * inv_h;
      }
      d.at(ix, iy) = acc;
    }
  return d;
}

CellVectorField cell_gradient(const ScalarField& u) {
  const GridSpec& g = u.grid;
  const VectorField zf = gradient(u);
  CellVectorField zc(g);
  for (int iy = 0; iy < g.ny; ++iy)
    for (int ix = 0; ix < g.nx; ++ix) {
      const int c = g.cell_index(ix, iy);
      double sx = 0.0;
      int cx = 0;
      if (ix > 0) {
        sx += zf.fx[g.x_face_index(ix - 1, iy)];
        ++cx;
      }
      if (ix < g.nx - 1) {
        sx += zf.fx[g.x_face_index(ix, iy)];
        ++cx;
      }
      zc.x[c] = cx > 0 ? sx / cx : 0.0;
      if (g.dim == 2) {
        double sy = 0.0;
        int cy = 0;
        if (iy > 0) {
          sy += zf.fy[g.y_face_index(ix, iy - 1)];
          ++cy;
        }
        if (iy < g.ny - 1) {
          sy += zf.fy[g.y_face_index(ix, iy)];
          ++cy;
        }
        zc.y[c] = cy > 0 ? sy / cy : 0.0;
      }
    }
  return zc;
}

VectorField cell_to_face_adjoint(const CellVectorField& zc) {
  const GridSpec& g = zc.grid;
  VectorField zf(g);
  // Transpose of the divide-by-count averaging: each face collects the
  // weighted contributions of the (at most two) cells it feeds.
  const auto x_count = [&](int ix) { return (ix > 0) + (ix < g.nx - 1); };
  for (int iy = 0; iy < g.ny; ++iy)
    for (int fx = 0; fx < g.nx - 1; ++fx) {
      const double a = zc.x[g.cell_index(fx, iy)] / x_count(fx);
      const double b = zc.x[g.cell_index(fx + 1, iy)] / x_count(fx + 1);
      zf.fx[g.x_face_index(fx, iy)] = a + b;
    }
  if (g.dim == 2) {
    const auto y_count = [&](int iy) { return (iy > 0) + (iy < g.ny - 1); };
    for (int fy = 0; fy < g.ny - 1; ++fy)
      for (int ix = 0; ix < g.nx; ++ix) {
        const double a = zc.y[g.cell_index(ix, fy)] / y_count(fy);
        const double b = zc.y[g.cell_index(ix, fy + 1)] / y_count(fy + 1);
        zf.fy[g.y_face_index(ix, fy)] = a + b;
      }
  }
  return zf;
}

double inner(const ScalarField& a, const ScalarField& b) {
  require_same_grid(a.grid, b.grid, "inner");
  KahanSum s;
  for (size_t i = 0; i < a.v.size(); ++i) s.add(a.v[i] * b.v[i]);
  return s.value() * a.grid.cell_measure();
}

double inner(const VectorField& a, const VectorField& b) {
  require_same_grid(a.grid, b.grid, "inner");
  KahanSum s;
  for (size_t i = 0; i < a.fx.size(); ++i) s.add(a.fx[i] * b.fx[i]);
  for (size_t i = 0; i < a.fy.size(); ++i) s.add(a.fy[i] * b.fy[i]);
  return s.value() * a.grid.cell_measure();
}

double l2_norm(const ScalarField& a) { return std::sqrt(inner(a, a)); }

double l1_norm(const ScalarField& a) {
  KahanSum s;
  for (double v : a.v) s.add(std::abs(v));
  return s.value() * a.grid.cell_measure();
}

double total_variation(const ScalarField& u) {
  const CellVectorField zc = cell_gradient(u);
  KahanSum s;
  for (std::int64_t c = 0; c < u.grid.cell_count(); ++c)
    s.add(norm(zc.at(static_cast<size_t>(c))));
  return s.value() * u.grid.cell_measure();
}

double f_integral(const LagrangianSpec& spec, const ScalarField& u) {
  const CellVectorField zc = cell_gradient(u);
  KahanSum s;
  for (std::int64_t c = 0; c < u.grid.cell_count(); ++c)
    s.add(lag_eval(spec, u.grid.cell_center(static_cast<int>(c)),
                   zc.at(static_cast<size_t>(c))));
  return s.value() * u.grid.cell_measure();
}

double area_functional(const ScalarField& u) {
  const CellVectorField zc = cell_gradient(u);
  KahanSum s;
  for (std::int64_t c = 0; c < u.grid.cell_count(); ++c)
    s.add(std::hypot(1.0, norm(zc.at(static_cast<size_t>(c)))));
  return s.value() * u.grid.cell_measure();
}

BoundaryTrace trace(const ScalarField& u) {
  BoundaryTrace t(u.grid);
  for (int bf = 0; bf < u.grid.boundary_face_count(); ++bf)
    t.v[bf] = u.v[u.grid.boundary_face_cell(bf)];
  return t;
}

double boundary_integral(const BoundaryTrace& t1, const BoundaryTrace& t2,
                         const LagrangianSpec& spec) {
  require_same_grid(t1.grid, t2.grid, "boundary_integral");
  const GridSpec& g = t1.grid;
  KahanSum s;
  for (int bf = 0; bf < g.boundary_face_count(); ++bf) {
    const double finf = lag_recession(spec, g.boundary_face_center(bf),
                                      g.boundary_face_normal(bf));
    s.add(std::abs(t1.v[bf] - t2.v[bf]) * finf);
  }
  return s.value() * g.face_measure();
}

double gauss_green_residual(const ScalarField& u, const VectorField& z,
                            const BoundaryTrace& zb) {
  require_same_grid(u.grid, z.grid, "gauss_green_residual");
  require_same_grid(u.grid, zb.grid, "gauss_green_residual");
  const BoundaryTrace tu = trace(u);
  KahanSum bdry;
  for (int bf = 0; bf < u.grid.boundary_face_count(); ++bf)
    bdry.add(zb.v[bf] * tu.v[bf]);
  const double boundary_sum = bdry.value() * u.grid.face_measure();
  return std::abs(inner(u, divergence(z)) + inner(gradient(u), z) -
                  boundary_sum);
}

ScalarField cellwise_min(const ScalarField& a, const ScalarField& b) {
  require_same_grid(a.grid, b.grid, "cellwise_min");
  ScalarField r(a.grid);
  for (size_t i = 0; i < a.v.size(); ++i) r.v[i] = std::min(a.v[i], b.v[i]);
  return r;
}

ScalarField cellwise_max(const ScalarField& a, const ScalarField& b) {
  require_same_grid(a.grid, b.grid, "cellwise_max");
  ScalarField r(a.grid);
  for (size_t i = 0; i < a.v.size(); ++i) r.v[i] = std::max(a.v[i], b.v[i]);
  return r;
}

}  // namespace lgf
