#pragma once

#include <complex>
#include <memory>
#include <vector>

#include "nldiff/grid.hpp"
#include "nldiff/kernels.hpp"
#include "nldiff/quantize.hpp"

namespace nldiff {

enum class BackendKind { Ptw, RR, FFT };

struct BackendConfig {
  BackendKind kind = BackendKind::Ptw;

  // RR and FFT: number of value-mesh intervals (L_Q).
  int levels_value = 500;
  // RR: number of kernel-weight mesh intervals (L_R).
  int levels_kernel = 1;
  // RR: rebuild the value mesh from the current field every application (the
  // value range shrinks as the solution decays). FFT: rebuild the slice mesh.
  bool requantize = true;
  // FFT: blend the two bracketing slices linearly instead of taking the nearest.
  bool interpolate = true;
  // FFT: zero-pad transforms to the next power of two of n.
  bool pad_pow2 = false;
  // FFT: worker threads for the slice loop (1 = serial; results are identical).
  int threads = 1;
};

// ---- pointwise backend ----

// out[j] = h^2 * sum over offsets o with j+o in the grid of w[o] * A(u[j+o] - u[j]).
// The stencil is clipped at the boundary; accumulation follows row-major offset
// order, so results are bit-reproducible.
Field2 op_ptw(const Field2& u, const Stencil& w, const RangeKernel& a);

// ---- quantized-rearrangement backend ----

// Quantizes field values on value_mesh and weights on kernel_mesh, evaluates A
// only on the (L_Q+1)^2 table of mesh differences, and accumulates per-cell
// weighted level histograms. Equals op_ptw up to the quantization remainders.
Field2 op_rr(const Field2& u, const Stencil& w, const RangeKernel& a,
             const QuantMesh& value_mesh, const QuantMesh& kernel_mesh);

namespace detail {
// Histogram path without the single-level sliding-window shortcut; op_rr
// dispatches between the two, this seam pins them against each other.
Field2 op_rr_generic(const Field2& u, const Stencil& w, const RangeKernel& a,
                     const QuantMesh& value_mesh, const QuantMesh& kernel_mesh);
}

// ---- Fourier-slice backend ----

// DFT pair on an n1 x n2 row-major complex grid: unnormalized forward,
// inverse scaled by 1/(n1*n2), so inverse(forward(x)) == x.
std::vector<std::complex<double>> dft2_forward(const std::vector<std::complex<double>>& in,
                                               int n1, int n2);
std::vector<std::complex<double>> dft2_inverse(const std::vector<std::complex<double>>& in,
                                               int n1, int n2);

// Place stencil weights on a size x size periodic grid at indices (o mod size).
// Requires size >= 2R+1 so opposite tails cannot collide.
std::vector<double> embed_stencil_periodic(const Stencil& w, int size);

// Per-run state for a backend: quantization meshes, the A table, the kernel
// spectrum and FFT plans. prepare() fixes everything derived from the initial
// field; apply() is the per-step operator evaluation.
class NonlocalOperator {
 public:
  NonlocalOperator(const Mesh2& mesh, const Stencil& w, const RangeKernel& a,
                   const BackendConfig& cfg);
  ~NonlocalOperator();
  NonlocalOperator(const NonlocalOperator&) = delete;
  NonlocalOperator& operator=(const NonlocalOperator&) = delete;

  void prepare(const Field2& u0);
  void apply(const Field2& u, Field2& out);

  const BackendConfig& config() const { return cfg_; }
  // Value mesh currently in effect (RR and FFT; throws for Ptw).
  const QuantMesh& value_mesh() const;

 private:
  struct Impl;
  Mesh2 mesh_;
  Stencil w_;
  RangeKernel a_;
  BackendConfig cfg_;
  std::unique_ptr<Impl> impl_;
};

// One-shot convenience for tests: prepare on u and apply once.
Field2 op_fft(const Field2& u, const Stencil& w, const RangeKernel& a,
              const BackendConfig& cfg);

}  // namespace nldiff
