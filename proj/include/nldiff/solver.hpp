#pragma once

#include <stdexcept>
#include <vector>

#include "nldiff/grid.hpp"
#include "nldiff/kernels.hpp"
#include "nldiff/operators.hpp"

namespace nldiff {

struct Reaction {
  enum class Kind { None, ManufacturedDecay };
  Kind kind = Kind::None;
  // ManufacturedDecay: f_n = exp(-lambda t_n) * g with g = -lambda u0 - A_h(u0)
  // computed once from the initial field, which makes exp(-lambda t) u0 the
  // exact solution of the semi-discrete system.
  double lambda = 0.0;
};

struct SolverConfig {
  double T = 1.0;
  double tau = 0.01;  // must divide T evenly
  BackendConfig backend;
  RangeKernel kernel;
  Reaction reaction;
  bool record_mass = false;
  bool record_max_abs = false;
};

struct StabilityAdvisory {
  double bound = 0.0;  // largest tau the estimate admits
  bool satisfied = true;
};

// Satisfied iff tau < 1 / (2 Lip(A on [-M, M]) + f_mixed_norm), where
// f_mixed_norm measures the reaction's dependence on the solution value (sup
// plus Lipschitz seminorm of that dependence; 0 for sources f(t, x) that never
// read the solution). Advisory only; runs proceed either way. tau = 0 is
// trivially satisfied.
StabilityAdvisory check_stability(double tau, const RangeKernel& a, double M,
                                  double f_mixed_norm = 0.0);

// One explicit Euler step: u + tau * (op_u + scale * source), source optional.
Field2 euler_step(const Field2& u, const Field2& op_u, const Field2* source, double scale,
                  double tau);

struct RunResult {
  Field2 u;
  int steps = 0;
  double wall_seconds = 0.0;  // stepping loop only, setup excluded
  StabilityAdvisory advisory;
  std::vector<double> mass_trace;     // length steps+1 when recorded
  std::vector<double> max_abs_trace;  // length steps+1 when recorded
};

// Thrown when a step produces a non-finite value.
class BlowupError : public std::runtime_error {
 public:
  BlowupError(int step, double wall_seconds);
  int step;             // 1-based index of the offending step
  double wall_seconds;  // time spent stepping before the abort
};

RunResult run(const SolverConfig& cfg, const Stencil& stencil, const Field2& u0);

}  // namespace nldiff
