#include "nldiff/kernels.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace nldiff {

namespace {

// Overlap of [o - 1/2, o + 1/2] with [-t, t], both in cell units. With t a
// half-integer the endpoints subtract exactly, so full, half and empty
// overlaps come out as 1, 0.5 and 0 with no residue.
double overlap_fraction(int o, double t) {
  const double lo = std::max(-t, o - 0.5);
  const double hi = std::min(t, o + 0.5);
  return std::max(0.0, hi - lo);
}

Stencil trim_zero_rings(Stencil s) {
  int R = s.radius;
  auto ring_is_zero = [&](int ring) {
    for (int o = -ring; o <= ring; ++o)
      if (s.at(ring, o) != 0.0 || s.at(-ring, o) != 0.0 || s.at(o, ring) != 0.0 ||
          s.at(o, -ring) != 0.0)
        return false;
    return true;
  };
  while (R > 0 && ring_is_zero(R)) --R;
  if (R == s.radius) return s;
  Stencil t;
  t.radius = R;
  t.w.resize(static_cast<std::size_t>(t.side()) * t.side());
  for (int o1 = -R; o1 <= R; ++o1)
    for (int o2 = -R; o2 <= R; ++o2) t.at(o1, o2) = s.at(o1, o2);
  return t;
}

}  // namespace

Stencil box_stencil(const Mesh2& mesh, double r) {
  if (!(r > 0.0) || !(r < 0.5)) throw std::invalid_argument("box radius must lie in (0, 1/2)");
  double t = r / mesh.h;  // box half-width in cells
  // Snap to a half-integer when the division is a rounding residue away: a
  // cell edge meant to land on the box edge then does so exactly, and the
  // weight set is exactly {c, c/2, c/4} (or uniform).
  const double snapped = 0.5 * std::round(2.0 * t);
  if (snapped > 0.0 && std::abs(t - snapped) <= 1e-9 * t) t = snapped;
  // One extra ring, trimmed below if the overlap there is empty.
  const int R0 = static_cast<int>(std::ceil(t - 0.5)) + 1;
  Stencil s;
  s.radius = R0;
  s.w.resize(static_cast<std::size_t>(s.side()) * s.side());
  std::vector<double> ov(2 * R0 + 1);
  for (int o = -R0; o <= R0; ++o) ov[o + R0] = overlap_fraction(o, t);
  const double c = 1.0 / (4.0 * r * r);
  for (int o1 = -R0; o1 <= R0; ++o1)
    for (int o2 = -R0; o2 <= R0; ++o2)
      s.at(o1, o2) = ov[o1 + R0] * ov[o2 + R0] * c;
  return trim_zero_rings(s);
}

Stencil gaussian_stencil(const Mesh2& mesh, double sigma) {
  if (!(sigma > 0.0) || !(6.0 * sigma < 0.5))
    throw std::invalid_argument("gaussian sigma must satisfy 0 < 6 sigma < 1/2");
  const double h = mesh.h;
  const int R = static_cast<int>(std::floor(6.0 * sigma / h + 1e-9));
  Stencil s;
  s.radius = R;
  s.w.resize(static_cast<std::size_t>(s.side()) * s.side());
  const double inv2s2 = 1.0 / (2.0 * sigma * sigma);
  double sum = 0.0;
  for (int o1 = -R; o1 <= R; ++o1)
    for (int o2 = -R; o2 <= R; ++o2) {
      const double d2 = (o1 * o1 + o2 * o2) * h * h;
      const double w = std::exp(-d2 * inv2s2);
      s.at(o1, o2) = w;
      sum += w;
    }
  const double scale = 1.0 / (h * h * sum);
  for (double& w : s.w) w *= scale;
  return s;
}

double eval_range_kernel(const RangeKernel& a, double s) {
  switch (a.kind) {
    case RangeKernel::Kind::Identity:
      return s;
    case RangeKernel::Kind::PowerP: {
      if (s == 0.0) return 0.0;
      return std::pow(std::abs(s), a.p - 2.0) * s;
    }
  }
  return 0.0;
}

double lipschitz_bound(const RangeKernel& a, double M) {
  if (!(M >= 0.0)) throw std::invalid_argument("lipschitz_bound needs M >= 0");
  switch (a.kind) {
    case RangeKernel::Kind::Identity:
      return 1.0;
    case RangeKernel::Kind::PowerP:
      if (a.p < 2.0) return std::numeric_limits<double>::infinity();
      if (a.p == 2.0) return 1.0;
      return (a.p - 1.0) * std::pow(M, a.p - 2.0);
  }
  return 0.0;
}

double erf_value(double x) {
  if (std::isnan(x)) return x;
  const double ax = std::abs(x);
  if (ax >= 6.0) return x > 0 ? 1.0 : -1.0;
  // erf(x) = 2x e^{-x^2}/sqrt(pi) * sum_k (2x^2)^k / (1*3*...*(2k+1)); all
  // terms positive, so no cancellation anywhere in the range.
  const double x2 = x * x;
  double term = 1.0;
  double sum = 1.0;
  for (int k = 1; k < 400; ++k) {
    term *= 2.0 * x2 / (2.0 * k + 1.0);
    sum += term;
    if (term < 1e-17 * sum) break;
  }
  const double two_over_sqrt_pi = 1.1283791670955126;
  return two_over_sqrt_pi * x * std::exp(-x2) * sum;
}

}  // namespace nldiff
