#include "nldiff/operators.hpp"

#include <fftw3.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstring>
#include <mutex>
#include <stdexcept>
#include <thread>

namespace nldiff {

namespace {

// FFTW plan creation and destruction are not thread-safe; execution on
// distinct buffers is.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

void check_operands(const Field2& u, const Stencil& w) {
  if (u.mesh.n <= 0) throw std::invalid_argument("operator input has an empty mesh");
  if (u.v.size() != static_cast<std::size_t>(u.mesh.n) * u.mesh.n)
    throw std::invalid_argument("field storage does not match its mesh");
  if (w.w.size() != static_cast<std::size_t>(w.side()) * w.side())
    throw std::invalid_argument("stencil storage does not match its radius");
}

template <class A>
void accumulate_ptw(const Field2& u, const Stencil& w, const A& a, Field2& out) {
  const int n = u.mesh.n;
  const int R = w.radius;
  // Offsets outermost, row-major, so each cell sees its contributions in the
  // same fixed order; inner loops run over the clipped index rectangle.
  for (int o1 = -R; o1 <= R; ++o1) {
    const int j1_lo = std::max(0, -o1);
    const int j1_hi = std::min(n, n - o1);
    for (int o2 = -R; o2 <= R; ++o2) {
      const double wo = w.at(o1, o2);
      const int j2_lo = std::max(0, -o2);
      const int j2_hi = std::min(n, n - o2);
      for (int j1 = j1_lo; j1 < j1_hi; ++j1) {
        const double* src = &u.v[static_cast<std::size_t>(j1 + o1) * n + (j2_lo + o2)];
        const double* cen = &u.v[static_cast<std::size_t>(j1) * n + j2_lo];
        double* dst = &out.v[static_cast<std::size_t>(j1) * n + j2_lo];
        const int len = j2_hi - j2_lo;
        for (int k = 0; k < len; ++k) dst[k] += wo * a(src[k] - cen[k]);
      }
    }
  }
}

struct RrSetup {
  std::vector<double> qw;  // quantized weights, stencil layout
  bool single_level = false;
  double level = 0.0;
  std::vector<std::array<int, 2>> excluded;  // offsets whose quantized weight is 0
};

// The default kernel mesh spans [0, max w]; zero being a level lets small
// weights drop out entirely, which is what makes the single-level box regime
// possible.
QuantMesh kernel_mesh_for(const Stencil& w, int levels) {
  double wmax = 0.0;
  for (double x : w.w) {
    if (!(x >= 0.0)) throw std::invalid_argument("stencil weights must be nonnegative");
    wmax = std::max(wmax, x);
  }
  if (wmax <= 0.0) throw std::invalid_argument("stencil has no positive weight");
  return build_quant_mesh(0.0, wmax, levels);
}

RrSetup build_rr_setup(const Stencil& w, const QuantMesh& km) {
  RrSetup s;
  s.qw.resize(w.w.size());
  double nonzero = 0.0;
  bool single = true;
  for (std::size_t i = 0; i < w.w.size(); ++i) {
    s.qw[i] = quantize(w.w[i], km).value;
    if (s.qw[i] != 0.0) {
      if (nonzero == 0.0)
        nonzero = s.qw[i];
      else if (s.qw[i] != nonzero)
        single = false;
    }
  }
  if (single && nonzero != 0.0) {
    const int R = w.radius;
    const int side = w.side();
    for (int o1 = -R; o1 <= R; ++o1)
      for (int o2 = -R; o2 <= R; ++o2)
        if (s.qw[static_cast<std::size_t>(o1 + R) * side + (o2 + R)] == 0.0)
          s.excluded.push_back({o1, o2});
    if (s.excluded.size() <= 8) {
      s.single_level = true;
      s.level = nonzero;
    }
  }
  return s;
}

std::vector<double> build_rr_table(const RangeKernel& a, const QuantMesh& vm) {
  const int m = vm.size();
  std::vector<double> t(static_cast<std::size_t>(m) * m);
  for (int k = 0; k < m; ++k) {
    double* row = &t[static_cast<std::size_t>(k) * m];
    for (int i = 0; i < m; ++i) row[i] = eval_range_kernel(a, vm.value[i] - vm.value[k]);
  }
  return t;
}

// Histogram form: per cell, bucket the quantized weights of its in-domain
// neighbors by the neighbor's value level, then contract with the A table row
// of the cell's own level.
void rr_generic_eval(const Field2& u, const Stencil& w, const RrSetup& s,
                     const QuantMesh& vm, const std::vector<double>& table,
                     const std::vector<std::int32_t>& li, Field2& out) {
  const int n = u.mesh.n;
  const int R = w.radius;
  const int m = vm.size();
  const double h2 = u.mesh.h * u.mesh.h;
  std::vector<double> W(m);
  for (int j1 = 0; j1 < n; ++j1) {
    const int o1_lo = std::max(-R, -j1);
    const int o1_hi = std::min(R, n - 1 - j1);
    for (int j2 = 0; j2 < n; ++j2) {
      std::fill(W.begin(), W.end(), 0.0);
      const int o2_lo = std::max(-R, -j2);
      const int o2_hi = std::min(R, n - 1 - j2);
      for (int o1 = o1_lo; o1 <= o1_hi; ++o1) {
        const std::int32_t* lrow = &li[static_cast<std::size_t>(j1 + o1) * n + j2];
        const double* qrow = &s.qw[static_cast<std::size_t>(o1 + R) * w.side() + R];
        for (int o2 = o2_lo; o2 <= o2_hi; ++o2) W[lrow[o2]] += qrow[o2];
      }
      const double* trow = &table[static_cast<std::size_t>(li[static_cast<std::size_t>(j1) * n + j2]) * m];
      double acc = 0.0;
      for (int i = 0; i < m; ++i) acc += W[i] * trow[i];
      out.v[static_cast<std::size_t>(j1) * n + j2] = h2 * acc;
    }
  }
}

// Single-level form: the histogram collapses to per-level neighbor counts,
// maintained by removing and adding one window row as the cell advances down
// its column, so every update reads a contiguous index-row segment; the few
// excluded offsets are corrected per cell.
void rr_fast_eval(const Field2& u, const Stencil& w, const RrSetup& s, const QuantMesh& vm,
                  const std::vector<double>& table, const std::vector<std::int32_t>& li,
                  Field2& out) {
  const int n = u.mesh.n;
  const int R = w.radius;
  const int m = vm.size();
  const double scale = u.mesh.h * u.mesh.h * s.level;
  std::vector<double> cnt(m);
  for (int j2 = 0; j2 < n; ++j2) {
    const int c_lo = std::max(0, j2 - R);
    const int c_hi = std::min(n - 1, j2 + R);
    std::fill(cnt.begin(), cnt.end(), 0.0);
    const int r0_hi = std::min(n - 1, R);
    for (int r = 0; r <= r0_hi; ++r) {
      const std::int32_t* lrow = &li[static_cast<std::size_t>(r) * n];
      for (int c = c_lo; c <= c_hi; ++c) cnt[lrow[c]] += 1.0;
    }
    for (int j1 = 0; j1 < n; ++j1) {
      if (j1 > 0) {
        const int drop = j1 - 1 - R;
        if (drop >= 0) {
          const std::int32_t* lrow = &li[static_cast<std::size_t>(drop) * n];
          for (int c = c_lo; c <= c_hi; ++c) cnt[lrow[c]] -= 1.0;
        }
        const int add = j1 + R;
        if (add <= n - 1) {
          const std::int32_t* lrow = &li[static_cast<std::size_t>(add) * n];
          for (int c = c_lo; c <= c_hi; ++c) cnt[lrow[c]] += 1.0;
        }
      }
      const double* trow = &table[static_cast<std::size_t>(li[static_cast<std::size_t>(j1) * n + j2]) * m];
      double acc = 0.0;
      for (int i = 0; i < m; ++i) acc += cnt[i] * trow[i];
      double corr = 0.0;
      for (const auto& e : s.excluded) {
        const int r = j1 + e[0];
        const int c = j2 + e[1];
        if (r >= 0 && r < n && c >= 0 && c < n)
          corr += trow[li[static_cast<std::size_t>(r) * n + c]];
      }
      out.v[static_cast<std::size_t>(j1) * n + j2] = scale * (acc - corr);
    }
  }
}

QuantMesh value_mesh_for(const Field2& u, int levels) {
  double lo = u.v[0], hi = u.v[0];
  for (double x : u.v) {
    lo = std::min(lo, x);
    hi = std::max(hi, x);
  }
  // A constant field has no range; widen so the mesh stays well-formed.
  if (!(hi > lo)) {
    lo -= 1.0;
    hi += 1.0;
  }
  return build_quant_mesh(lo, hi, levels);
}

int next_pow2(int n) {
  int m = 1;
  while (m < n) m *= 2;
  return m;
}

}  // namespace

Field2 op_ptw(const Field2& u, const Stencil& w, const RangeKernel& a) {
  check_operands(u, w);
  Field2 out(u.mesh);
  if (a.kind == RangeKernel::Kind::Identity) {
    accumulate_ptw(u, w, [](double s) { return s; }, out);
  } else {
    const double e = a.p - 2.0;
    accumulate_ptw(
        u, w, [e](double s) { return s == 0.0 ? 0.0 : std::pow(std::abs(s), e) * s; }, out);
  }
  const double h2 = u.mesh.h * u.mesh.h;
  for (double& x : out.v) x *= h2;
  return out;
}

Field2 op_rr(const Field2& u, const Stencil& w, const RangeKernel& a,
             const QuantMesh& value_mesh, const QuantMesh& kernel_mesh) {
  check_operands(u, w);
  RrSetup s = build_rr_setup(w, kernel_mesh);
  const std::vector<double> table = build_rr_table(a, value_mesh);
  const std::vector<std::int32_t> li = field_level_indices(u, value_mesh);
  Field2 out(u.mesh);
  if (s.single_level)
    rr_fast_eval(u, w, s, value_mesh, table, li, out);
  else
    rr_generic_eval(u, w, s, value_mesh, table, li, out);
  return out;
}

namespace detail {
Field2 op_rr_generic(const Field2& u, const Stencil& w, const RangeKernel& a,
                     const QuantMesh& value_mesh, const QuantMesh& kernel_mesh) {
  check_operands(u, w);
  RrSetup s = build_rr_setup(w, kernel_mesh);
  const std::vector<double> table = build_rr_table(a, value_mesh);
  const std::vector<std::int32_t> li = field_level_indices(u, value_mesh);
  Field2 out(u.mesh);
  rr_generic_eval(u, w, s, value_mesh, table, li, out);
  return out;
}
}  // namespace detail

std::vector<std::complex<double>> dft2_forward(const std::vector<std::complex<double>>& in,
                                               int n1, int n2) {
  if (n1 < 1 || n2 < 1 || in.size() != static_cast<std::size_t>(n1) * n2)
    throw std::invalid_argument("dft2_forward: bad sizes");
  std::vector<std::complex<double>> out(in.size());
  fftw_complex* a = reinterpret_cast<fftw_complex*>(const_cast<std::complex<double>*>(in.data()));
  fftw_complex* b = reinterpret_cast<fftw_complex*>(out.data());
  fftw_plan p;
  {
    std::lock_guard<std::mutex> lk(planner_mutex());
    p = fftw_plan_dft_2d(n1, n2, a, b, FFTW_FORWARD, FFTW_ESTIMATE | FFTW_PRESERVE_INPUT);
  }
  fftw_execute(p);
  {
    std::lock_guard<std::mutex> lk(planner_mutex());
    fftw_destroy_plan(p);
  }
  return out;
}

std::vector<std::complex<double>> dft2_inverse(const std::vector<std::complex<double>>& in,
                                               int n1, int n2) {
  if (n1 < 1 || n2 < 1 || in.size() != static_cast<std::size_t>(n1) * n2)
    throw std::invalid_argument("dft2_inverse: bad sizes");
  std::vector<std::complex<double>> out(in.size());
  fftw_complex* a = reinterpret_cast<fftw_complex*>(const_cast<std::complex<double>*>(in.data()));
  fftw_complex* b = reinterpret_cast<fftw_complex*>(out.data());
  fftw_plan p;
  {
    std::lock_guard<std::mutex> lk(planner_mutex());
    p = fftw_plan_dft_2d(n1, n2, a, b, FFTW_BACKWARD, FFTW_ESTIMATE | FFTW_PRESERVE_INPUT);
  }
  fftw_execute(p);
  {
    std::lock_guard<std::mutex> lk(planner_mutex());
    fftw_destroy_plan(p);
  }
  const double scale = 1.0 / (static_cast<double>(n1) * n2);
  for (auto& z : out) z *= scale;
  return out;
}

std::vector<double> embed_stencil_periodic(const Stencil& w, int size) {
  const int R = w.radius;
  if (size < 2 * R + 1)
    throw std::invalid_argument("embedding size must be at least the stencil side");
  std::vector<double> out(static_cast<std::size_t>(size) * size, 0.0);
  for (int o1 = -R; o1 <= R; ++o1) {
    const int i1 = ((o1 % size) + size) % size;
    for (int o2 = -R; o2 <= R; ++o2) {
      const int i2 = ((o2 % size) + size) % size;
      out[static_cast<std::size_t>(i1) * size + i2] = w.at(o1, o2);
    }
  }
  return out;
}

struct NonlocalOperator::Impl {
  // RR state
  RrSetup rr;
  QuantMesh vmesh;
  std::vector<double> table;
  bool have_vmesh = false;

  // FFT state
  int m = 0;
  std::vector<std::complex<double>> kspec;  // spectrum * h^2 / m^2
  std::vector<int> fmap;                    // padded index -> output index, per axis
  fftw_plan fwd = nullptr;
  fftw_plan bwd = nullptr;
  fftw_complex* buf_a = nullptr;
  fftw_complex* buf_b = nullptr;

  // FFT scratch, rebuilt per apply
  std::vector<std::int32_t> slice_idx;
  std::vector<double> w_lo, w_hi;
  std::vector<char> slice_used;

  ~Impl() {
    std::lock_guard<std::mutex> lk(planner_mutex());
    if (fwd) fftw_destroy_plan(fwd);
    if (bwd) fftw_destroy_plan(bwd);
    if (buf_a) fftw_free(buf_a);
    if (buf_b) fftw_free(buf_b);
  }
};

NonlocalOperator::NonlocalOperator(const Mesh2& mesh, const Stencil& w, const RangeKernel& a,
                                   const BackendConfig& cfg)
    : mesh_(mesh), w_(w), a_(a), cfg_(cfg), impl_(new Impl) {
  if (cfg.levels_value < 1) throw std::invalid_argument("levels_value must be >= 1");
  if (cfg.kind == BackendKind::RR) {
    if (cfg.levels_kernel < 1) throw std::invalid_argument("levels_kernel must be >= 1");
    impl_->rr = build_rr_setup(w_, kernel_mesh_for(w_, cfg.levels_kernel));
  }
  if (cfg.kind == BackendKind::FFT) {
    if (cfg.threads < 1) throw std::invalid_argument("threads must be >= 1");
    impl_->m = cfg.pad_pow2 ? next_pow2(mesh.n) : mesh.n;
    if (impl_->m < 2 * w.radius + 1)
      throw std::invalid_argument("grid too small for the stencil in the transform backend");
  }
}

NonlocalOperator::~NonlocalOperator() = default;

const QuantMesh& NonlocalOperator::value_mesh() const {
  if (!impl_->have_vmesh) throw std::logic_error("no value mesh: backend is Ptw or unprepared");
  return impl_->vmesh;
}

void NonlocalOperator::prepare(const Field2& u0) {
  if (!(u0.mesh == mesh_)) throw std::invalid_argument("prepare: field mesh mismatch");
  switch (cfg_.kind) {
    case BackendKind::Ptw:
      return;
    case BackendKind::RR:
      impl_->vmesh = value_mesh_for(u0, cfg_.levels_value);
      impl_->table = build_rr_table(a_, impl_->vmesh);
      impl_->have_vmesh = true;
      return;
    case BackendKind::FFT: {
      Impl& im = *impl_;
      const int m = im.m;
      // Kernel spectrum, cached for the whole run. The h^2 quadrature factor
      // and the inverse-transform normalization fold into it.
      std::vector<double> emb = embed_stencil_periodic(w_, m);
      {
        std::lock_guard<std::mutex> lk(planner_mutex());
        if (!im.buf_a) im.buf_a = fftw_alloc_complex(static_cast<std::size_t>(m) * m);
        if (!im.buf_b) im.buf_b = fftw_alloc_complex(static_cast<std::size_t>(m) * m);
        if (!im.fwd)
          im.fwd = fftw_plan_dft_2d(m, m, im.buf_a, im.buf_b, FFTW_FORWARD, FFTW_ESTIMATE);
        if (!im.bwd)
          im.bwd = fftw_plan_dft_2d(m, m, im.buf_b, im.buf_a, FFTW_BACKWARD, FFTW_ESTIMATE);
      }
      for (std::size_t k = 0; k < static_cast<std::size_t>(m) * m; ++k) {
        im.buf_a[k][0] = emb[k];
        im.buf_a[k][1] = 0.0;
      }
      fftw_execute(im.fwd);
      im.kspec.resize(static_cast<std::size_t>(m) * m);
      const double scale = mesh_.h * mesh_.h / (static_cast<double>(m) * m);
      for (std::size_t k = 0; k < im.kspec.size(); ++k)
        im.kspec[k] = std::complex<double>(im.buf_b[k][0], im.buf_b[k][1]) * scale;

      im.fmap.resize(m);
      const int R = w_.radius;
      const int n = mesh_.n;
      for (int k = 0; k < m; ++k) {
        const int l = (k >= m - R) ? k - m : k;
        im.fmap[k] = ((l % n) + n) % n;
      }

      const Field2 ub = periodic_border_average(u0);
      im.vmesh = value_mesh_for(ub, cfg_.levels_value);
      im.have_vmesh = true;
      return;
    }
  }
}

namespace {

// Convolve one slice field against the cached spectrum and fold the padded
// result back onto the n-grid.
void fft_slice_conv(const Field2& ub, double q_i, const RangeKernel& a, int m, int n,
                    const std::vector<std::complex<double>>& kspec, const std::vector<int>& fmap,
                    fftw_plan fwd, fftw_plan bwd, fftw_complex* buf_a, fftw_complex* buf_b,
                    std::vector<double>& folded) {
  const std::size_t mm = static_cast<std::size_t>(m) * m;
  std::memset(buf_a, 0, mm * sizeof(fftw_complex));
  if (a.kind == RangeKernel::Kind::Identity) {
    for (int j1 = 0; j1 < n; ++j1) {
      const double* src = &ub.v[static_cast<std::size_t>(j1) * n];
      fftw_complex* dst = &buf_a[static_cast<std::size_t>(j1) * m];
      for (int j2 = 0; j2 < n; ++j2) dst[j2][0] = src[j2] - q_i;
    }
  } else {
    const double e = a.p - 2.0;
    for (int j1 = 0; j1 < n; ++j1) {
      const double* src = &ub.v[static_cast<std::size_t>(j1) * n];
      fftw_complex* dst = &buf_a[static_cast<std::size_t>(j1) * m];
      for (int j2 = 0; j2 < n; ++j2) {
        const double s = src[j2] - q_i;
        dst[j2][0] = s == 0.0 ? 0.0 : std::pow(std::abs(s), e) * s;
      }
    }
  }
  fftw_execute_dft(fwd, buf_a, buf_b);
  for (std::size_t k = 0; k < mm; ++k) {
    const std::complex<double> z =
        std::complex<double>(buf_b[k][0], buf_b[k][1]) * kspec[k];
    buf_b[k][0] = z.real();
    buf_b[k][1] = z.imag();
  }
  fftw_execute_dft(bwd, buf_b, buf_a);
  std::fill(folded.begin(), folded.end(), 0.0);
  for (int k1 = 0; k1 < m; ++k1) {
    double* frow = &folded[static_cast<std::size_t>(fmap[k1]) * n];
    const fftw_complex* crow = &buf_a[static_cast<std::size_t>(k1) * m];
    for (int k2 = 0; k2 < m; ++k2) frow[fmap[k2]] += crow[k2][0];
  }
}

}  // namespace

void NonlocalOperator::apply(const Field2& u, Field2& out) {
  if (!(u.mesh == mesh_)) throw std::invalid_argument("apply: field mesh mismatch");
  if (&out == &u) throw std::invalid_argument("apply cannot run in place");
  out.mesh = mesh_;
  out.v.resize(u.v.size());

  switch (cfg_.kind) {
    case BackendKind::Ptw: {
      out = op_ptw(u, w_, a_);
      return;
    }
    case BackendKind::RR: {
      Impl& im = *impl_;
      if (cfg_.requantize || !im.have_vmesh) {
        im.vmesh = value_mesh_for(u, cfg_.levels_value);
        im.table = build_rr_table(a_, im.vmesh);
        im.have_vmesh = true;
      }
      const std::vector<std::int32_t> li = field_level_indices(u, im.vmesh);
      if (im.rr.single_level)
        rr_fast_eval(u, w_, im.rr, im.vmesh, im.table, li, out);
      else
        rr_generic_eval(u, w_, im.rr, im.vmesh, im.table, li, out);
      return;
    }
    case BackendKind::FFT: {
      Impl& im = *impl_;
      if (!im.have_vmesh) throw std::logic_error("apply before prepare on the transform backend");
      const Field2 ub = periodic_border_average(u);
      if (cfg_.requantize) im.vmesh = value_mesh_for(ub, cfg_.levels_value);
      const QuantMesh& vm = im.vmesh;
      const int n = mesh_.n;
      const int m = im.m;
      const int L = vm.levels;
      const std::size_t nn = ub.v.size();

      im.slice_idx.resize(nn);
      im.w_lo.assign(nn, 1.0);
      im.w_hi.assign(nn, 0.0);
      im.slice_used.assign(L + 1, 0);
      if (cfg_.interpolate) {
        for (std::size_t j = 0; j < nn; ++j) {
          const double c = std::clamp(ub.v[j], vm.c_min, vm.c_max);
          int i = static_cast<int>(std::floor((vm.c_max - c) / vm.spacing));
          i = std::clamp(i, 0, L - 1);
          double lo = (c - vm.value[i + 1]) / vm.spacing;
          double hi = (vm.value[i] - c) / vm.spacing;
          // Roundoff can push a weight slightly negative; repair to a convex pair.
          lo = std::max(lo, 0.0);
          hi = std::max(hi, 0.0);
          const double t = lo + hi;
          if (t > 0.0) {
            lo /= t;
            hi /= t;
          } else {
            lo = 1.0;
            hi = 0.0;
          }
          im.slice_idx[j] = i;
          im.w_lo[j] = lo;
          im.w_hi[j] = hi;
          im.slice_used[i] = 1;
          im.slice_used[i + 1] = 1;
        }
      } else {
        for (std::size_t j = 0; j < nn; ++j) {
          const double c = std::clamp(ub.v[j], vm.c_min, vm.c_max);
          const int i = quantize(c, vm).index;
          im.slice_idx[j] = i;
          im.slice_used[i] = 1;
        }
      }

      std::fill(out.v.begin(), out.v.end(), 0.0);

      auto scatter = [&](int slice, const std::vector<double>& folded, std::vector<double>& acc) {
        if (cfg_.interpolate) {
          for (std::size_t j = 0; j < nn; ++j) {
            if (im.slice_idx[j] == slice)
              acc[j] += im.w_lo[j] * folded[j];
            else if (im.slice_idx[j] + 1 == slice)
              acc[j] += im.w_hi[j] * folded[j];
          }
        } else {
          for (std::size_t j = 0; j < nn; ++j)
            if (im.slice_idx[j] == slice) acc[j] += folded[j];
        }
      };

      if (cfg_.threads <= 1) {
        std::vector<double> folded(nn);
        for (int i = 0; i <= L; ++i) {
          if (!im.slice_used[i]) continue;
          fft_slice_conv(ub, vm.value[i], a_, m, n, im.kspec, im.fmap, im.fwd, im.bwd, im.buf_a,
                         im.buf_b, folded);
          scatter(i, folded, out.v);
        }
      } else {
        // Each worker owns a contiguous slice range plus private buffers and a
        // private accumulator; merging in ascending worker order keeps every
        // cell's additions in ascending-slice order, so the result is
        // bit-identical to the serial path for any thread count.
        const int nt = std::min(cfg_.threads, L + 1);
        std::vector<std::vector<double>> acc(nt);
        std::vector<std::thread> pool;
        pool.reserve(nt);
        for (int t = 0; t < nt; ++t) {
          const int lo = static_cast<int>(static_cast<long long>(L + 1) * t / nt);
          const int hi = static_cast<int>(static_cast<long long>(L + 1) * (t + 1) / nt);
          acc[t].assign(nn, 0.0);
          pool.emplace_back([&, t, lo, hi]() {
            const std::size_t mm = static_cast<std::size_t>(m) * m;
            fftw_complex* a_buf;
            fftw_complex* b_buf;
            {
              std::lock_guard<std::mutex> lk(planner_mutex());
              a_buf = fftw_alloc_complex(mm);
              b_buf = fftw_alloc_complex(mm);
            }
            std::vector<double> folded(nn);
            for (int i = lo; i < hi; ++i) {
              if (!im.slice_used[i]) continue;
              fft_slice_conv(ub, vm.value[i], a_, m, n, im.kspec, im.fmap, im.fwd, im.bwd, a_buf,
                             b_buf, folded);
              scatter(i, folded, acc[t]);
            }
            {
              std::lock_guard<std::mutex> lk(planner_mutex());
              fftw_free(a_buf);
              fftw_free(b_buf);
            }
          });
        }
        for (auto& th : pool) th.join();
        for (int t = 0; t < nt; ++t)
          for (std::size_t j = 0; j < nn; ++j) out.v[j] += acc[t][j];
      }
      return;
    }
  }
}

Field2 op_fft(const Field2& u, const Stencil& w, const RangeKernel& a, const BackendConfig& cfg) {
  BackendConfig c = cfg;
  c.kind = BackendKind::FFT;
  NonlocalOperator op(u.mesh, w, a, c);
  op.prepare(u);
  Field2 out(u.mesh);
  op.apply(u, out);
  return out;
}

}  // namespace nldiff
