// Acceptance battery. Each criterion prints one PASS/FAIL line with the
// measured quantities; the exit code is the number of failed criteria.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <complex>
#include <cstdio>
#include <random>
#include <string>
#include <vector>

#include "nldiff/grid.hpp"
#include "nldiff/kernels.hpp"
#include "nldiff/operators.hpp"
#include "nldiff/oracle.hpp"
#include "nldiff/quantize.hpp"
#include "nldiff/solver.hpp"
#include "oracles.hpp"

using namespace nldiff;

namespace {

int failures = 0;

void report(int k, bool ok, const std::string& what) {
  std::printf("[%s] criterion %d: %s\n", ok ? "PASS" : "FAIL", k, what.c_str());
  std::fflush(stdout);
  if (!ok) ++failures;
}

std::string num(double x) {
  char b[64];
  std::snprintf(b, sizeof(b), "%.4g", x);
  return b;
}

double now_minus(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

RangeKernel identity_kernel() { return RangeKernel{RangeKernel::Kind::Identity, 2.0}; }
RangeKernel power_kernel(double p) { return RangeKernel{RangeKernel::Kind::PowerP, p}; }

BackendConfig ptw_backend() {
  BackendConfig c;
  c.kind = BackendKind::Ptw;
  return c;
}

BackendConfig rr_backend(int lq, int lr) {
  BackendConfig c;
  c.kind = BackendKind::RR;
  c.levels_value = lq;
  c.levels_kernel = lr;
  c.requantize = true;
  return c;
}

BackendConfig fft_backend(int slices, bool interpolate, bool pad) {
  BackendConfig c;
  c.kind = BackendKind::FFT;
  c.levels_value = slices;
  c.interpolate = interpolate;
  c.requantize = false;
  c.pad_pow2 = pad;
  return c;
}

// Decaying manufactured run on the unit box kernel, r = 0.1, lambda = 0.5.
struct DecayOut {
  double re = 0.0;
  double wall = 0.0;
};

DecayOut decay_run(const BackendConfig& bc, int n, double tau) {
  Mesh2 mesh = make_mesh(n);
  Field2 u0 = sample_u0(mesh);
  Stencil w = box_stencil(mesh, 0.1);
  SolverConfig cfg;
  cfg.T = 1.0;
  cfg.tau = tau;
  cfg.backend = bc;
  cfg.kernel = identity_kernel();
  cfg.reaction = Reaction{Reaction::Kind::ManufacturedDecay, 0.5};
  RunResult r = run(cfg, w, u0);
  Field2 exact = exact_solution_field(mesh, 1.0, 0.5);
  return {relative_error(r.u, exact), r.wall_seconds};
}

double total_variation_drift(const std::vector<double>& trace) {
  double tv = 0.0;
  for (std::size_t k = 1; k < trace.size(); ++k) tv += std::abs(trace[k] - trace[k - 1]);
  return tv / std::abs(trace.front());
}

int distinct_weight_count(const Stencil& w) {
  std::vector<double> v = w.w;
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end()), v.end());
  int c = 0;
  for (double x : v)
    if (x != 0.0) ++c;
  return c;
}

}  // namespace

// Decaying manufactured solution, direct backend: RE tracks the explicit Euler
// closed form 0.125 tau within a factor of 3 across three decades of tau.
static std::vector<double> criterion_1() {
  const auto t0 = std::chrono::steady_clock::now();
  const std::vector<double> taus = {0.1, 0.01, 0.001};
  std::vector<double> re;
  for (double tau : taus) re.push_back(decay_run(ptw_backend(), 100, tau).re);
  const double wall = now_minus(t0);
  bool ok = wall < 60.0;
  std::string msg = "decay accuracy, direct backend, n=100:";
  for (std::size_t i = 0; i < taus.size(); ++i) {
    const double factor = re[i] / (0.125 * taus[i]);
    ok = ok && factor > 1.0 / 3.0 && factor < 3.0;
    msg += " RE(" + num(taus[i]) + ")=" + num(re[i]) + " (x" + num(factor) + ")";
  }
  msg += ", wall " + num(wall) + "s";
  report(1, ok, msg);
  return re;
}

// Error drops one decade per decade of tau for every backend until the
// histogram backend hits its level floor; that floor must stay within 10x of
// the direct backend's finest error.
static std::vector<std::vector<double>> criterion_2(const std::vector<double>& re_ptw) {
  const auto t0 = std::chrono::steady_clock::now();
  const std::vector<double> taus = {0.1, 0.01, 0.001};
  const std::vector<std::string> names = {"ptw", "rr", "fft", "ffto"};
  std::vector<BackendConfig> backends = {ptw_backend(), rr_backend(500, 4),
                                         fft_backend(10, true, false), fft_backend(10, true, true)};
  std::vector<std::vector<double>> re(4);
  re[0] = re_ptw;
  for (std::size_t b = 1; b < backends.size(); ++b)
    for (double tau : taus) re[b].push_back(decay_run(backends[b], 100, tau).re);

  bool ok = true;
  std::string msg = "tau order:";
  const double rr_floor = re[1].back();
  for (std::size_t b = 0; b < backends.size(); ++b) {
    msg += " " + names[b] + "[";
    for (std::size_t i = 0; i + 1 < re[b].size(); ++i) {
      // A floored denominator carries no tau information; only the histogram
      // backend has a floor.
      if (b == 1 && re[b][i + 1] <= 3.0 * rr_floor) {
        msg += "(floor)";
        continue;
      }
      const double ratio = re[b][i] / re[b][i + 1];
      ok = ok && ratio >= 5.0 && ratio <= 20.0;
      msg += " " + num(ratio);
    }
    msg += " ]";
  }
  const bool floor_ok = rr_floor <= 10.0 * re[0].back();
  ok = ok && floor_ok;
  msg += " rr floor " + num(rr_floor) + (floor_ok ? " <= " : " > ") + "10x ptw " +
         num(10.0 * re[0].back());
  const double wall = now_minus(t0);
  ok = ok && wall < 300.0;
  msg += ", wall " + num(wall) + "s";
  report(2, ok, msg);
  return re;
}

// Halving h barely moves the error at fixed tau.
static void criterion_3(const std::vector<std::vector<double>>& re100) {
  const auto t0 = std::chrono::steady_clock::now();
  const std::vector<std::string> names = {"ptw", "rr", "fft", "ffto"};
  std::vector<BackendConfig> backends = {ptw_backend(), rr_backend(500, 4),
                                         fft_backend(10, true, false), fft_backend(10, true, true)};
  bool ok = true;
  std::string msg = "h insensitivity at tau=0.01:";
  for (std::size_t b = 0; b < backends.size(); ++b) {
    const double at50 = decay_run(backends[b], 50, 0.01).re;
    const double at100 = re100[b][1];
    const double rel = std::abs(at50 - at100) / at100;
    ok = ok && rel <= 0.20;
    msg += " " + names[b] + " " + num(rel * 100.0) + "%";
  }
  const double wall = now_minus(t0);
  ok = ok && wall < 120.0;
  msg += ", wall " + num(wall) + "s";
  report(3, ok, msg);
}

// The quantized backends track the direct sum within the level-spacing bound
// on random fields, and match exactly when the field sits on the mesh.
static void criterion_4() {
  const int n = 16;
  Mesh2 mesh = make_mesh(n);
  RangeKernel a3 = power_kernel(3.0);
  std::mt19937_64 rng(401);
  std::uniform_real_distribution<double> dist(0.0, 1.0);

  bool ok = true;
  double worst_rr = 0.0, worst_fft = 0.0;
  Stencil w = box_stencil(mesh, 0.2);
  for (int trial = 0; trial < 20; ++trial) {
    Field2 u(mesh);
    for (double& x : u.v) x = dist(rng);
    const double lip = lipschitz_bound(a3, max_abs(u));
    Field2 ref = op_ptw(u, w, a3);

    FieldBounds fb = field_bounds(u);
    QuantMesh vm = build_quant_mesh(fb.min, fb.max, 500);
    double wmax = 0.0;
    for (double x : w.w) wmax = std::max(wmax, x);
    QuantMesh km = build_quant_mesh(0.0, wmax, 512);
    Field2 rr = op_rr(u, w, a3, vm, km);
    for (std::size_t j = 0; j < u.size(); ++j)
      worst_rr = std::max(worst_rr, std::abs(rr.v[j] - ref.v[j]) / (5.0 * lip * vm.spacing));

    // Periodic field: wraparound and clipping agree away from the border.
    Field2 up = periodic_border_average(u);
    Field2 refp = op_ptw(up, w, a3);
    NonlocalOperator fft(mesh, w, a3, fft_backend(500, true, false));
    fft.prepare(up);
    Field2 out(mesh);
    fft.apply(up, out);
    const double q = fft.value_mesh().spacing;
    const double lipp = lipschitz_bound(a3, max_abs(up));
    for (int i1 = 4; i1 < n - 4; ++i1)
      for (int i2 = 4; i2 < n - 4; ++i2)
        worst_fft = std::max(worst_fft, std::abs(out.at(i1, i2) - refp.at(i1, i2)) /
                                            (5.0 * lipp * q + 1e-9));
  }
  ok = ok && worst_rr <= 1.0 && worst_fft <= 1.0;

  // Exact quantization: a field on the mesh values, box weights on the kernel
  // mesh -> both backends reproduce the direct sum to rounding.
  double exact_rr = 0.0, exact_fft = 0.0;
  {
    QuantMesh vm = build_quant_mesh(0.0, 1.0, 8);
    Field2 u(mesh);
    std::uniform_int_distribution<int> pick(0, vm.levels);
    for (double& x : u.v) x = vm.value[pick(rng)];
    u.v[0] = vm.value[0];
    u.v[1] = vm.value[vm.levels];
    Stencil wu = box_stencil(mesh, 0.15625);  // 2.5 cells: uniform weights
    double wmax = 0.0;
    for (double x : wu.w) wmax = std::max(wmax, x);
    QuantMesh km = build_quant_mesh(0.0, wmax, 1);
    Field2 rr = op_rr(u, wu, a3, vm, km);
    Field2 ref = op_ptw(u, wu, a3);
    for (std::size_t j = 0; j < u.size(); ++j)
      exact_rr = std::max(exact_rr, std::abs(rr.v[j] - ref.v[j]));
  }
  {
    QuantMesh vm = build_quant_mesh(0.0, 1.0, 12);
    Field2 u(mesh);
    std::uniform_int_distribution<int> pick(0, vm.levels);
    for (double& x : u.v) x = vm.value[pick(rng)];
    u.at(5, 5) = vm.value[0];
    u.at(6, 6) = vm.value[vm.levels];
    // Copy edges so opposite borders coincide: the border averaging leaves the
    // field untouched and every value stays on the mesh.
    for (int i = 0; i < n; ++i) {
      u.at(n - 1, i) = u.at(0, i);
      u.at(i, n - 1) = u.at(i, 0);
    }
    u.at(n - 1, n - 1) = u.at(0, 0);
    Stencil w15 = box_stencil(mesh, 0.15);
    BackendConfig bc = fft_backend(12, false, false);
    Field2 out = op_fft(u, w15, a3, bc);
    auto a_fun = [&](double s) { return eval_range_kernel(a3, s); };
    Field2 ref = oracles::op_periodic(u, w15, a_fun);
    for (std::size_t j = 0; j < u.size(); ++j)
      exact_fft = std::max(exact_fft, std::abs(out.v[j] - ref.v[j]));
  }
  ok = ok && exact_rr <= 1e-10 && exact_fft <= 1e-10;

  report(4, ok,
         "backend equivalence: rr/bound " + num(worst_rr) + ", fft/bound " + num(worst_fft) +
             ", exact cases " + num(exact_rr) + " / " + num(exact_fft));
}

// Source-free runs: the direct and histogram backends conserve mass to
// rounding; the Fourier backend's drift is first order in the slice spacing;
// nothing grows past 10x the initial sup.
static void criterion_5() {
  const auto t0 = std::chrono::steady_clock::now();
  const int n = 50;
  Mesh2 mesh = make_mesh(n);
  Field2 u0 = sample_u0(mesh);
  Stencil w = gaussian_stencil(mesh, 0.02);
  RangeKernel a3 = power_kernel(3.0);

  auto source_free = [&](const BackendConfig& bc) {
    SolverConfig cfg;
    cfg.T = 1.0;
    cfg.tau = 0.01;
    cfg.backend = bc;
    cfg.kernel = a3;
    cfg.record_mass = true;
    cfg.record_max_abs = true;
    return run(cfg, w, u0);
  };

  bool ok = true;
  std::string msg = "conservation:";
  double bound_ratio = 10.0;
  for (auto& [name, bc] :
       std::vector<std::pair<std::string, BackendConfig>>{
           {"ptw", ptw_backend()}, {"rr", rr_backend(500, distinct_weight_count(w))}}) {
    RunResult r = source_free(bc);
    double dev = 0.0;
    for (double m : r.mass_trace) dev = std::max(dev, std::abs(m - r.mass_trace.front()));
    dev /= std::abs(r.mass_trace.front());
    ok = ok && dev <= 1e-11;
    msg += " " + name + " dev " + num(dev);
    const double peak = *std::max_element(r.max_abs_trace.begin(), r.max_abs_trace.end());
    ok = ok && peak <= bound_ratio * r.max_abs_trace.front();
  }

  RunResult f50 = source_free(fft_backend(50, false, false));
  RunResult f100 = source_free(fft_backend(100, false, false));
  const double d50 = total_variation_drift(f50.mass_trace);
  const double d100 = total_variation_drift(f100.mass_trace);
  const double ratio = d50 / d100;
  ok = ok && ratio >= 1.5 && ratio <= 2.5;
  for (const RunResult* r : {&f50, &f100}) {
    const double peak = *std::max_element(r->max_abs_trace.begin(), r->max_abs_trace.end());
    ok = ok && peak <= bound_ratio * r->max_abs_trace.front();
  }
  msg += ", fft drift " + num(d50) + " -> " + num(d100) + " (x" + num(ratio) +
         "), sup bounded by 10x";
  const double wall = now_minus(t0);
  ok = ok && wall < 120.0;
  msg += ", wall " + num(wall) + "s";
  report(5, ok, msg);
}

// The advisory flags tau = 0.1 for the p = 3 configuration, the run indeed
// blows up, and the two smaller steps complete.
static void criterion_6() {
  const auto t0 = std::chrono::steady_clock::now();
  const int n = 50;
  Mesh2 mesh = make_mesh(n);
  Field2 u0 = sample_u0(mesh);
  Stencil w = gaussian_stencil(mesh, 0.02);
  RangeKernel a3 = power_kernel(3.0);

  const double M = max_abs(u0);
  StabilityAdvisory adv = check_stability(0.1, a3, M);
  bool ok = !adv.satisfied;
  // Reference arithmetic at M = 32: 1 / (2 * 2 * 32).
  const double bound32 = 1.0 / (2.0 * lipschitz_bound(a3, 32.0));
  ok = ok && std::abs(bound32 - 0.0078125) < 1e-15;

  auto attempt = [&](double tau) -> int {
    SolverConfig cfg;
    cfg.T = 1.0;
    cfg.tau = tau;
    cfg.backend = ptw_backend();
    cfg.kernel = a3;
    try {
      run(cfg, w, u0);
      return 0;
    } catch (const BlowupError& e) {
      return e.step;
    }
  };
  const int blown_step = attempt(0.1);
  const bool completes_001 = attempt(0.01) == 0;
  const bool completes_0001 = attempt(0.001) == 0;
  ok = ok && blown_step > 0 && completes_001 && completes_0001;
  const double wall = now_minus(t0);
  ok = ok && wall < 60.0;
  report(6, ok,
         "stability: bound(M=" + num(M) + ")=" + num(adv.bound) + " flags tau=0.1, blow-up at step " +
             std::to_string(blown_step) + ", tau=0.01/0.001 complete, bound(M=32)=" + num(bound32) +
             ", wall " + num(wall) + "s");
}

// Runtime shape, single thread: the direct sum scales with the stencil area,
// the Fourier backend does not, and the histogram backend beats the direct
// sum on the widest power-kernel configuration.
static void criterion_7() {
  auto timed_run = [&](const BackendConfig& bc, int n, double sigma_or_r, bool gaussian,
                       const RangeKernel& a, const Reaction& reaction) {
    Mesh2 mesh = make_mesh(n);
    Field2 u0 = sample_u0(mesh);
    Stencil w = gaussian ? gaussian_stencil(mesh, sigma_or_r) : box_stencil(mesh, sigma_or_r);
    SolverConfig cfg;
    cfg.T = 0.02;
    cfg.tau = 0.001;
    cfg.backend = bc;
    cfg.kernel = a;
    cfg.reaction = reaction;
    return run(cfg, w, u0).wall_seconds;
  };
  RangeKernel a3 = power_kernel(3.0);
  Reaction none;

  const double ptw_narrow = timed_run(ptw_backend(), 100, 0.01, true, a3, none);
  const double ptw_wide = timed_run(ptw_backend(), 100, 0.05, true, a3, none);
  const double ptw_growth = ptw_wide / ptw_narrow;
  bool ok = ptw_growth >= 10.0;

  double fft_growth[2];
  int slot = 0;
  for (bool pad : {false, true}) {
    const double narrow = timed_run(fft_backend(150, true, pad), 100, 0.01, true, a3, none);
    const double wide = timed_run(fft_backend(150, true, pad), 100, 0.05, true, a3, none);
    fft_growth[slot] = wide / narrow;
    ok = ok && fft_growth[slot] <= 2.0;
    ++slot;
  }

  // Widest power-kernel configuration at the full grid: the direct sum walks
  // a 181x181 window per cell, the histogram backend a few hundred ops.
  RangeKernel a2 = power_kernel(2.0);
  Reaction decay{Reaction::Kind::ManufacturedDecay, 0.5};
  auto one_step = [&](const BackendConfig& bc) {
    Mesh2 mesh = make_mesh(300);
    Field2 u0 = sample_u0(mesh);
    Stencil w = box_stencil(mesh, 0.3);
    SolverConfig cfg;
    cfg.T = 0.001;
    cfg.tau = 0.001;
    cfg.backend = bc;
    cfg.kernel = a2;
    cfg.reaction = decay;
    return run(cfg, w, u0).wall_seconds;
  };
  const double ptw_p2 = one_step(ptw_backend());
  const double rr_p2 = one_step(rr_backend(500, 1));
  const double speedup = ptw_p2 / rr_p2;
  ok = ok && speedup >= 5.0;

  report(7, ok,
         "runtime shape: ptw x" + num(ptw_growth) + " over sigma sweep, fft x" +
             num(fft_growth[0]) + ", ffto x" + num(fft_growth[1]) + ", rr speedup x" +
             num(speedup) + " at r=0.3 n=300 (" + num(ptw_p2) + "s vs " + num(rr_p2) + "s)");
}

// Transform-level substrate.
static void criterion_8() {
  std::mt19937_64 rng(801);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  bool ok = true;

  // roundtrip
  double rt = 0.0;
  {
    const int n = 8;
    std::vector<std::complex<double>> x(n * n);
    for (auto& c : x) c = {dist(rng), dist(rng)};
    auto back = dft2_inverse(dft2_forward(x, n, n), n, n);
    for (int j = 0; j < n * n; ++j) rt = std::max(rt, std::abs(back[j] - x[j]));
    ok = ok && rt <= 1e-10;
  }

  // convolution theorem against the double loop
  double conv = 0.0;
  {
    const int n = 8;
    std::vector<double> f(n * n), g(n * n);
    for (double& x : f) x = dist(rng);
    for (double& x : g) x = dist(rng);
    std::vector<std::complex<double>> fc(f.begin(), f.end()), gc(g.begin(), g.end());
    auto fh = dft2_forward(fc, n, n);
    auto gh = dft2_forward(gc, n, n);
    for (int j = 0; j < n * n; ++j) fh[j] *= gh[j];
    auto prod = dft2_inverse(fh, n, n);
    auto want = oracles::circular_conv_naive(f, g, n, n);
    for (int j = 0; j < n * n; ++j) conv = std::max(conv, std::abs(prod[j] - want[j]));
    ok = ok && conv <= 1e-10;
  }

  // padded vs unpadded transforms
  double pad = 0.0;
  {
    Mesh2 mesh = make_mesh(14);
    Field2 u(mesh);
    for (double& x : u.v) x = dist(rng) + 2.0;
    u = periodic_border_average(u);
    Stencil w = box_stencil(mesh, 0.05);
    RangeKernel a3 = power_kernel(3.0);
    Field2 plain = op_fft(u, w, a3, fft_backend(64, true, false));
    Field2 padded = op_fft(u, w, a3, fft_backend(64, true, true));
    for (std::size_t j = 0; j < u.size(); ++j)
      pad = std::max(pad, std::abs(plain.v[j] - padded.v[j]));
    ok = ok && pad <= 1e-9;
  }

  // erf against the Taylor oracle
  double erf_err = 0.0;
  for (double x = -2.0; x <= 2.0; x += 0.0625)
    erf_err = std::max(erf_err, std::abs(erf_value(x) - oracles::erf_taylor(x)));
  ok = ok && erf_err <= 1e-7;

  // equimeasurability: composing with F then summing is invariant under the
  // rearrangement, bit-exactly once both sides sum in sorted order
  bool equi = true;
  {
    Mesh2 mesh = make_mesh(12);
    Field2 u(mesh);
    for (double& x : u.v) x = dist(rng);
    std::vector<double> re = decreasing_rearrangement(u);
    auto sorted_sum = [](std::vector<double> v, double (*F)(double)) {
      std::sort(v.begin(), v.end());
      double s = 0.0;
      for (double x : v) s += F(x);
      return s;
    };
    for (double (*F)(double) :
         {+[](double t) { return t; }, +[](double t) { return t * t; },
          +[](double t) { return std::abs(t); }}) {
      if (sorted_sum(u.v, F) != sorted_sum(re, F)) equi = false;
    }
    ok = ok && equi;
  }

  report(8, ok,
         "substrate: roundtrip " + num(rt) + ", conv " + num(conv) + ", pad " + num(pad) +
             ", erf " + num(erf_err) + ", rearrangement " + (equi ? "exact" : "BROKEN"));
}

int main() {
  std::vector<double> re_ptw = criterion_1();
  std::vector<std::vector<double>> re100 = criterion_2(re_ptw);
  criterion_3(re100);
  criterion_4();
  criterion_5();
  criterion_6();
  criterion_7();
  criterion_8();
  std::printf("%d of 8 criteria failed\n", failures);
  return failures;
}
