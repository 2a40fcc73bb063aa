#pragma once

#include "nldiff/grid.hpp"

namespace nldiff {

// The benchmark initial datum: sum of two products of 1D normal densities,
//   bump 1: mu = (0.55, 0.5),  sigma = (0.05, 0.1)
//   bump 2: mu = (0.45, 0.5),  sigma = (0.025, 0.025)
double eval_u0(double x1, double x2);

// Sample the datum on a mesh (cell centers for subsamples = 1).
Field2 sample_u0(const Mesh2& mesh, int subsamples = 1);

// Mean of u0 over the square [x1-r, x1+r] x [x2-r, x2+r], evaluated in closed
// form via erf products. The box is not clipped at the domain boundary.
double exact_box_average_u0(double x1, double x2, double r);

// Manufactured source for the decaying exact solution exp(-lambda t) u0 under
// the continuum box-kernel operator: exp(-lambda t) ((1-lambda) u0(x) - I(x))
// with I the exact box average above.
double reaction_pointwise(double t, double x1, double x2, double lambda, double r);

// Pointwise exact solution at time t.
Field2 exact_solution_field(const Mesh2& mesh, double t, double lambda);

// ---- metrics ----

double mass(const Field2& u);     // h^2 * sum u
double max_abs(const Field2& u);  // sup norm

// sum |u - ref| / sum |ref| over the cells (the h^2 factors cancel). Throws if
// ref is identically zero.
double relative_error(const Field2& u, const Field2& ref);

struct FieldBounds {
  double min = 0.0;
  double max = 0.0;
};
FieldBounds field_bounds(const Field2& u);

}  // namespace nldiff
