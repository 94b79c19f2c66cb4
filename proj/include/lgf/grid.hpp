#pragma once

#include <cstdint>
#include <vector>

#include "lgf/common.hpp"
#include "lgf/lagrangian.hpp"

namespace lgf {

// Uniform rectangular grid over an open box. 1D grids are represented with
// ny = 1 and no y faces.
struct GridSpec {
  int dim = 1;
  int nx = 2;
  int ny = 1;
  double h = 1.0;
  Point origin{0.0, 0.0};

  static constexpr std::int64_t kDefaultCellCap = 64ll * 1024 * 1024;

  static GridSpec make_1d(int nx, double h, double origin_x = 0.0,
                          std::int64_t cell_cap = kDefaultCellCap);
  static GridSpec make_2d(int nx, int ny, double h, Point origin = {},
                          std::int64_t cell_cap = kDefaultCellCap);

  std::int64_t cell_count() const {
    return std::int64_t(nx) * std::int64_t(ny);
  }
  int cell_index(int ix, int iy) const { return iy * nx + ix; }
  Point cell_center(int ix, int iy) const {
    return {origin.x + (ix + 0.5) * h, origin.y + (iy + 0.5) * h};
  }
  Point cell_center(int c) const { return cell_center(c % nx, c / nx); }

  // Cell measure h^dim and boundary face measure h^(dim-1).
  double cell_measure() const { return dim == 1 ? h : h * h; }
  double face_measure() const { return dim == 1 ? 1.0 : h; }
  double domain_measure() const { return cell_count() * cell_measure(); }

  // Interior faces, per axis (staggered layout).
  std::int64_t x_face_count() const {
    return std::int64_t(nx - 1) * std::int64_t(ny);
  }
  std::int64_t y_face_count() const {
    return dim == 1 ? 0 : std::int64_t(nx) * std::int64_t(ny - 1);
  }
  int x_face_index(int fx, int iy) const { return iy * (nx - 1) + fx; }
  int y_face_index(int ix, int fy) const { return fy * nx + ix; }

  // Boundary faces in fixed order: left column, right column, then for 2D
  // bottom row and top row.
  int boundary_face_count() const {
    return dim == 1 ? 2 : 2 * ny + 2 * nx;
  }
  // Adjacent interior cell of a boundary face.
  int boundary_face_cell(int bf) const;
  // Outward unit normal.
  Vec boundary_face_normal(int bf) const;
  // Center of the face on the boundary of the box.
  Point boundary_face_center(int bf) const;

  bool same_as(const GridSpec& o) const {
    return dim == o.dim && nx == o.nx && ny == o.ny && h == o.h &&
           origin.x == o.origin.x && origin.y == o.origin.y;
  }
};

struct ScalarField {
  GridSpec grid;
  std::vector<double> v;

  ScalarField() = default;
  explicit ScalarField(const GridSpec& g, double fill = 0.0)
      : grid(g), v(static_cast<size_t>(g.cell_count()), fill) {}

  double& operator[](size_t i) { return v[i]; }
  double operator[](size_t i) const { return v[i]; }
  double& at(int ix, int iy) { return v[grid.cell_index(ix, iy)]; }
  double at(int ix, int iy) const { return v[grid.cell_index(ix, iy)]; }
};

// Face-centered vector field: one value per interior face per axis.
struct VectorField {
  GridSpec grid;
  std::vector<double> fx;
  std::vector<double> fy;

  VectorField() = default;
  explicit VectorField(const GridSpec& g)
      : grid(g),
        fx(static_cast<size_t>(g.x_face_count()), 0.0),
        fy(static_cast<size_t>(g.y_face_count()), 0.0) {}
};

// Cell-centered vector field; carries gradients interpolated to cell
// centers and the dual certificate field z.
struct CellVectorField {
  GridSpec grid;
  std::vector<double> x;
  std::vector<double> y;

  CellVectorField() = default;
  explicit CellVectorField(const GridSpec& g)
      : grid(g),
        x(static_cast<size_t>(g.cell_count()), 0.0),
        y(static_cast<size_t>(g.cell_count()), 0.0) {}

  Vec at(size_t c) const { return {x[c], y[c]}; }
  void set(size_t c, Vec v) {
    x[c] = v.x;
    y[c] = v.y;
  }
};

// One value per boundary face; normals come from the grid enumeration.
struct BoundaryTrace {
  GridSpec grid;
  std::vector<double> v;

  BoundaryTrace() = default;
  explicit BoundaryTrace(const GridSpec& g, double fill = 0.0)
      : grid(g), v(static_cast<size_t>(g.boundary_face_count()), fill) {}
};

// Forward differences across interior faces: (u[i+1] - u[i]) / h.
VectorField gradient(const ScalarField& u);

// Exact negative adjoint of gradient under the h^n-weighted inner products,
// with zero padding at boundary faces: <grad u, z> = -<u, div z> for all u,z.
ScalarField divergence(const VectorField& z);

// Face -> cell averaging: per axis, mean of the adjacent interior faces
// (one-sided at the boundary). Gives the cell-centered isotropic gradient.
CellVectorField cell_gradient(const ScalarField& u);

// Adjoint of cell_gradient's averaging step: cells -> faces.
VectorField cell_to_face_adjoint(const CellVectorField& zc);

// h^n-weighted inner products and norms.
double inner(const ScalarField& a, const ScalarField& b);
double inner(const VectorField& a, const VectorField& b);
double l2_norm(const ScalarField& a);
double l1_norm(const ScalarField& a);

// Sum over cells of h^n |grad u|(cell), cell-centered isotropic norm.
double total_variation(const ScalarField& u);

// Sum over cells of h^n f(x_cell, grad u(cell)).
double f_integral(const LagrangianSpec& spec, const ScalarField& u);

// Sum over cells of h^n sqrt(1 + |grad u|^2).
double area_functional(const ScalarField& u);

// Piecewise-constant trace: boundary-adjacent cell value per boundary face.
BoundaryTrace trace(const ScalarField& u);

// Sum over boundary faces of h^(n-1) |t1 - t2| f^infinity(x_face, nu_face).
double boundary_integral(const BoundaryTrace& t1, const BoundaryTrace& t2,
                         const LagrangianSpec& spec);

// | <u, div z> + <grad u, z> - sum_bdry h^(n-1) zb * Tu |. The adjoint pair
// zero-pads at the boundary, so the residual vanishes exactly when zb is
// that zero extension; a nonzero zb measures the claimed normal trace.
double gauss_green_residual(const ScalarField& u, const VectorField& z,
                            const BoundaryTrace& zb);

ScalarField cellwise_min(const ScalarField& a, const ScalarField& b);
ScalarField cellwise_max(const ScalarField& a, const ScalarField& b);

}  // namespace lgf
