#pragma once

#include <cstddef>
#include <functional>
#include <vector>

namespace nldiff {

// Uniform cell-centered mesh on the unit square: n x n cells of side h = 1/n,
// centers x_i = (i + 1/2) h. Fields over it are stored row-major, index i1*n + i2.
struct Mesh2 {
  int n = 0;
  double h = 0.0;

  bool operator==(const Mesh2&) const = default;
};

// n must be a positive even integer.
Mesh2 make_mesh(int n);

// Coordinate of the cell center along one axis.
inline double cell_center(const Mesh2& m, int i) { return (i + 0.5) * m.h; }

struct Field2 {
  Mesh2 mesh;
  std::vector<double> v;

  Field2() = default;
  explicit Field2(Mesh2 m) : mesh(m), v(static_cast<std::size_t>(m.n) * m.n, 0.0) {}

  double& at(int i1, int i2) { return v[static_cast<std::size_t>(i1) * mesh.n + i2]; }
  const double& at(int i1, int i2) const { return v[static_cast<std::size_t>(i1) * mesh.n + i2]; }
  std::size_t size() const { return v.size(); }
};

// Sample f on the mesh. subsamples = 1 evaluates at cell centers; subsamples = m
// averages f over an m x m midpoint grid inside each cell.
Field2 sample_field(const Mesh2& mesh, const std::function<double(double, double)>& f,
                    int subsamples = 1);

// Replace each pair of opposite border cells by their mean (the four corners by
// their joint mean), leaving the interior untouched, so the field extends
// periodically without a jump across the seam. Idempotent and sum-preserving.
Field2 periodic_border_average(const Field2& u);

}  // namespace nldiff
