#include "nldiff/grid.hpp"

#include <stdexcept>

namespace nldiff {

Mesh2 make_mesh(int n) {
  if (n < 2 || n % 2 != 0) throw std::invalid_argument("mesh size must be a positive even integer");
  return Mesh2{n, 1.0 / n};
}

Field2 sample_field(const Mesh2& mesh, const std::function<double(double, double)>& f,
                    int subsamples) {
  if (subsamples < 1) throw std::invalid_argument("subsamples must be >= 1");
  Field2 u(mesh);
  const int m = subsamples;
  const double step = mesh.h / m;
  for (int i1 = 0; i1 < mesh.n; ++i1) {
    const double x1_base = i1 * mesh.h;
    for (int i2 = 0; i2 < mesh.n; ++i2) {
      const double x2_base = i2 * mesh.h;
      double acc = 0.0;
      for (int k1 = 0; k1 < m; ++k1)
        for (int k2 = 0; k2 < m; ++k2)
          acc += f(x1_base + (k1 + 0.5) * step, x2_base + (k2 + 0.5) * step);
      u.at(i1, i2) = acc / (m * m);
    }
  }
  return u;
}

Field2 periodic_border_average(const Field2& u) {
  const int n = u.mesh.n;
  if (n < 2) throw std::invalid_argument("periodic_border_average needs n >= 2");
  Field2 out = u;
  for (int i = 1; i < n - 1; ++i) {
    const double row = 0.5 * (out.at(0, i) + out.at(n - 1, i));
    out.at(0, i) = row;
    out.at(n - 1, i) = row;
    const double col = 0.5 * (out.at(i, 0) + out.at(i, n - 1));
    out.at(i, 0) = col;
    out.at(i, n - 1) = col;
  }
  const double corner =
      0.25 * (out.at(0, 0) + out.at(0, n - 1) + out.at(n - 1, 0) + out.at(n - 1, n - 1));
  out.at(0, 0) = corner;
  out.at(0, n - 1) = corner;
  out.at(n - 1, 0) = corner;
  out.at(n - 1, n - 1) = corner;
  return out;
}

}  // namespace nldiff
