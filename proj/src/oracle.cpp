#include "nldiff/oracle.hpp"

#include <cmath>
#include <stdexcept>

#include "nldiff/kernels.hpp"

namespace nldiff {

namespace {

struct Bump {
  double mu1, s1, mu2, s2;
};

constexpr Bump kBumps[2] = {
    {0.55, 0.05, 0.5, 0.1},
    {0.45, 0.025, 0.5, 0.025},
};

double normal_pdf(double x, double mu, double sigma) {
  const double z = (x - mu) / sigma;
  const double inv_sqrt_2pi = 0.3989422804014327;
  return inv_sqrt_2pi / sigma * std::exp(-0.5 * z * z);
}

// Mean of the 1D normal density over [a, b].
double normal_interval_mean(double a, double b, double mu, double sigma) {
  const double inv_sqrt2 = 0.7071067811865476;
  const double hi = erf_value((b - mu) / sigma * inv_sqrt2);
  const double lo = erf_value((a - mu) / sigma * inv_sqrt2);
  return 0.5 * (hi - lo) / (b - a);
}

}  // namespace

double eval_u0(double x1, double x2) {
  double v = 0.0;
  for (const Bump& b : kBumps) v += normal_pdf(x1, b.mu1, b.s1) * normal_pdf(x2, b.mu2, b.s2);
  return v;
}

Field2 sample_u0(const Mesh2& mesh, int subsamples) {
  return sample_field(mesh, [](double x1, double x2) { return eval_u0(x1, x2); }, subsamples);
}

double exact_box_average_u0(double x1, double x2, double r) {
  if (!(r > 0.0)) throw std::invalid_argument("box radius must be positive");
  double v = 0.0;
  for (const Bump& b : kBumps)
    v += normal_interval_mean(x1 - r, x1 + r, b.mu1, b.s1) *
         normal_interval_mean(x2 - r, x2 + r, b.mu2, b.s2);
  return v;
}

double reaction_pointwise(double t, double x1, double x2, double lambda, double r) {
  return std::exp(-lambda * t) *
         ((1.0 - lambda) * eval_u0(x1, x2) - exact_box_average_u0(x1, x2, r));
}

Field2 exact_solution_field(const Mesh2& mesh, double t, double lambda) {
  Field2 u = sample_u0(mesh, 1);
  const double decay = std::exp(-lambda * t);
  for (double& x : u.v) x *= decay;
  return u;
}

double mass(const Field2& u) {
  double s = 0.0;
  for (double x : u.v) s += x;
  return u.mesh.h * u.mesh.h * s;
}

double max_abs(const Field2& u) {
  double m = 0.0;
  for (double x : u.v) m = std::max(m, std::abs(x));
  return m;
}

double relative_error(const Field2& u, const Field2& ref) {
  if (!(u.mesh == ref.mesh)) throw std::invalid_argument("relative_error needs matching meshes");
  double num = 0.0;
  double den = 0.0;
  for (std::size_t j = 0; j < u.size(); ++j) {
    num += std::abs(u.v[j] - ref.v[j]);
    den += std::abs(ref.v[j]);
  }
  if (den == 0.0) throw std::invalid_argument("relative_error against a zero reference");
  return num / den;
}

FieldBounds field_bounds(const Field2& u) {
  if (u.v.empty()) throw std::invalid_argument("field_bounds on an empty field");
  FieldBounds b{u.v[0], u.v[0]};
  for (double x : u.v) {
    b.min = std::min(b.min, x);
    b.max = std::max(b.max, x);
  }
  return b;
}

}  // namespace nldiff
