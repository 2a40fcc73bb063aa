#pragma once

#include <vector>

#include "nldiff/grid.hpp"

namespace nldiff {

// Quadrature weights of a radial kernel sampled on integer offsets, stored on
// the square [-R, R]^2 row-major ((2R+1)^2 values). Weights carry the kernel
// normalization but not the h^2 cell-area factor.
struct Stencil {
  int radius = 0;
  std::vector<double> w;

  int side() const { return 2 * radius + 1; }
  double& at(int o1, int o2) {
    return w[static_cast<std::size_t>(o1 + radius) * side() + (o2 + radius)];
  }
  const double& at(int o1, int o2) const {
    return w[static_cast<std::size_t>(o1 + radius) * side() + (o2 + radius)];
  }
};

// Normalized box kernel 1/(4 r^2) on the sup-ball of radius r, integrated
// exactly against each cell (product of 1D interval overlaps). Rows and columns
// of all-zero weights are trimmed. Requires 0 < r < 1/2.
Stencil box_stencil(const Mesh2& mesh, double r);

// Gaussian kernel with standard deviation sigma, truncated at radius 6 sigma,
// sampled at cell centers and renormalized so that h^2 * sum(w) = 1.
// Requires 0 < sigma and 6 sigma < 1/2.
Stencil gaussian_stencil(const Mesh2& mesh, double sigma);

struct RangeKernel {
  enum class Kind { Identity, PowerP };
  Kind kind = Kind::Identity;
  double p = 2.0;  // used by PowerP; requires p >= 1
};

// A(s): s for Identity, |s|^(p-2) s for PowerP (A(0) = 0). Odd by construction.
double eval_range_kernel(const RangeKernel& a, double s);

// Lipschitz constant of A on [-M, M]: 1 for Identity, (p-1) M^(p-2) for PowerP
// with p >= 2, +infinity for 1 <= p < 2 (A' blows up at 0).
double lipschitz_bound(const RangeKernel& a, double M);

// Error function, accurate to ~1e-15. Series with positive terms for |x| < 6,
// saturates to +-1 beyond.
double erf_value(double x);

}  // namespace nldiff
