// Python bindings: numpy arrays in, numpy arrays out. A field is an n x n
// array on the unit square's n x n cell grid; a stencil is an odd square
// weight array.
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <algorithm>
#include <optional>
#include <stdexcept>
#include <string>

#include "nldiff/grid.hpp"
#include "nldiff/kernels.hpp"
#include "nldiff/operators.hpp"
#include "nldiff/oracle.hpp"
#include "nldiff/quantize.hpp"
#include "nldiff/solver.hpp"

namespace py = pybind11;
using namespace nldiff;

namespace {

using DoubleArray = py::array_t<double, py::array::c_style | py::array::forcecast>;

Field2 to_field(const DoubleArray& a) {
  if (a.ndim() != 2 || a.shape(0) != a.shape(1))
    throw std::invalid_argument("expected a square 2d array");
  const int n = static_cast<int>(a.shape(0));
  Field2 f(make_mesh(n));
  std::copy(a.data(), a.data() + f.size(), f.v.begin());
  return f;
}

py::array_t<double> from_field(const Field2& f) {
  py::array_t<double> a({f.mesh.n, f.mesh.n});
  std::copy(f.v.begin(), f.v.end(), a.mutable_data());
  return a;
}

Stencil to_stencil(const DoubleArray& a) {
  if (a.ndim() != 2 || a.shape(0) != a.shape(1) || a.shape(0) % 2 == 0)
    throw std::invalid_argument("expected an odd square weight array");
  Stencil s;
  s.radius = static_cast<int>(a.shape(0)) / 2;
  s.w.assign(a.data(), a.data() + a.size());
  return s;
}

py::array_t<double> from_stencil(const Stencil& s) {
  py::array_t<double> a({s.side(), s.side()});
  std::copy(s.w.begin(), s.w.end(), a.mutable_data());
  return a;
}

// p = 0 selects the identity range kernel, p >= 1 the p-power one.
RangeKernel kernel_from_p(double p) {
  if (p == 0.0) return RangeKernel{RangeKernel::Kind::Identity, 2.0};
  if (p < 1.0) throw std::invalid_argument("p must be 0 (identity) or >= 1");
  return RangeKernel{RangeKernel::Kind::PowerP, p};
}

BackendConfig backend_from_method(const std::string& method, int levels_value, int levels_kernel,
                                  bool interpolate, std::optional<bool> requantize, int threads) {
  BackendConfig c;
  c.levels_value = levels_value;
  c.levels_kernel = levels_kernel;
  c.interpolate = interpolate;
  c.threads = threads;
  if (method == "ptw") {
    c.kind = BackendKind::Ptw;
  } else if (method == "rr") {
    c.kind = BackendKind::RR;
    c.requantize = requantize.value_or(true);
  } else if (method == "fft" || method == "ffto") {
    c.kind = BackendKind::FFT;
    c.requantize = requantize.value_or(false);
    c.pad_pow2 = (method == "ffto");
  } else {
    throw std::invalid_argument("unknown method '" + method + "' (ptw, rr, fft, ffto)");
  }
  return c;
}

}  // namespace

PYBIND11_MODULE(nldiff, m) {
  m.doc() = "Nonlocal diffusion solver: direct, histogram and Fourier-slice backends";

  py::register_exception<BlowupError>(m, "BlowupError");

  m.def("sample_u0", [](int n, int subsamples) { return from_field(sample_u0(make_mesh(n), subsamples)); },
        py::arg("n"), py::arg("subsamples") = 1,
        "Initial datum sampled on the n x n cell grid");

  m.def("exact_solution", [](int n, double t, double lam) {
          return from_field(exact_solution_field(make_mesh(n), t, lam));
        },
        py::arg("n"), py::arg("t"), py::arg("lam"),
        "exp(-lam t) times the initial datum");

  m.def("box_stencil", [](int n, double r) { return from_stencil(box_stencil(make_mesh(n), r)); },
        py::arg("n"), py::arg("r"));

  m.def("gaussian_stencil", [](int n, double sigma) {
          return from_stencil(gaussian_stencil(make_mesh(n), sigma));
        },
        py::arg("n"), py::arg("sigma"));

  m.def("op_ptw", [](const DoubleArray& u, const DoubleArray& w, double p) {
          return from_field(op_ptw(to_field(u), to_stencil(w), kernel_from_p(p)));
        },
        py::arg("u"), py::arg("w"), py::arg("p") = 0.0,
        "Direct pointwise sum, stencil clipped at the boundary");

  m.def("op_rr", [](const DoubleArray& u, const DoubleArray& w, double p, int levels_value,
                    int levels_kernel) {
          Field2 f = to_field(u);
          Stencil s = to_stencil(w);
          FieldBounds b = field_bounds(f);
          if (!(b.max > b.min)) {
            b.min -= 1.0;
            b.max += 1.0;
          }
          QuantMesh vm = build_quant_mesh(b.min, b.max, levels_value);
          double wmax = 0.0;
          for (double x : s.w) wmax = std::max(wmax, x);
          QuantMesh km = build_quant_mesh(0.0, wmax, levels_kernel);
          return from_field(op_rr(f, s, kernel_from_p(p), vm, km));
        },
        py::arg("u"), py::arg("w"), py::arg("p") = 0.0, py::arg("levels_value") = 500,
        py::arg("levels_kernel") = 1,
        "Quantized histogram evaluation on meshes spanning the field and weight ranges");

  m.def("op_fft", [](const DoubleArray& u, const DoubleArray& w, double p, int slices,
                     bool interpolate, bool pad, int threads) {
          BackendConfig c;
          c.kind = BackendKind::FFT;
          c.levels_value = slices;
          c.interpolate = interpolate;
          c.pad_pow2 = pad;
          c.threads = threads;
          return from_field(op_fft(to_field(u), to_stencil(w), kernel_from_p(p), c));
        },
        py::arg("u"), py::arg("w"), py::arg("p") = 0.0, py::arg("slices") = 10,
        py::arg("interpolate") = true, py::arg("pad") = false, py::arg("threads") = 1,
        "Fourier-slice evaluation (applies periodic border averaging internally)");

  m.def("run",
        [](const DoubleArray& u0, const DoubleArray& w, const std::string& method, double tau,
           double T, double p, std::optional<double> decay_lambda, int levels_value,
           int levels_kernel, bool interpolate, std::optional<bool> requantize, int threads) {
          SolverConfig cfg;
          cfg.T = T;
          cfg.tau = tau;
          cfg.kernel = kernel_from_p(p);
          cfg.backend =
              backend_from_method(method, levels_value, levels_kernel, interpolate, requantize, threads);
          if (decay_lambda) cfg.reaction = Reaction{Reaction::Kind::ManufacturedDecay, *decay_lambda};
          cfg.record_mass = true;
          cfg.record_max_abs = true;
          RunResult r = run(cfg, to_stencil(w), to_field(u0));
          py::dict out;
          out["u"] = from_field(r.u);
          out["steps"] = r.steps;
          out["wall_seconds"] = r.wall_seconds;
          out["mass_trace"] = r.mass_trace;
          out["max_abs_trace"] = r.max_abs_trace;
          out["stability_bound"] = r.advisory.bound;
          out["stability_satisfied"] = r.advisory.satisfied;
          return out;
        },
        py::arg("u0"), py::arg("w"), py::arg("method") = "ptw", py::arg("tau") = 0.01,
        py::arg("T") = 1.0, py::arg("p") = 0.0, py::arg("decay_lambda") = std::nullopt,
        py::arg("levels_value") = 500, py::arg("levels_kernel") = 1, py::arg("interpolate") = true,
        py::arg("requantize") = std::nullopt, py::arg("threads") = 1,
        "Explicit Euler evolution; raises BlowupError on a non-finite step");

  m.def("relative_error", [](const DoubleArray& u, const DoubleArray& ref) {
          return relative_error(to_field(u), to_field(ref));
        },
        py::arg("u"), py::arg("ref"));

  m.def("mass", [](const DoubleArray& u) { return mass(to_field(u)); }, py::arg("u"));
  m.def("max_abs", [](const DoubleArray& u) { return max_abs(to_field(u)); }, py::arg("u"));
  m.def("erf_value", &erf_value, py::arg("x"));
}
