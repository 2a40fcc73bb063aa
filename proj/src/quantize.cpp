#include "nldiff/quantize.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <stdexcept>

namespace nldiff {

QuantMesh build_quant_mesh(double c_min, double c_max, int levels) {
  if (!(c_max > c_min)) throw std::invalid_argument("quant mesh needs c_max > c_min");
  if (levels < 1) throw std::invalid_argument("quant mesh needs at least one level");
  QuantMesh q;
  q.c_min = c_min;
  q.c_max = c_max;
  q.levels = levels;
  q.spacing = (c_max - c_min) / levels;
  q.value.resize(levels + 1);
  // Interpolated form keeps both endpoints exact.
  for (int i = 0; i <= levels; ++i)
    q.value[i] = (c_max * (levels - i) + c_min * i) / levels;
  return q;
}

Quantized quantize(double rho, const QuantMesh& mesh) {
  const int L = mesh.levels;
  double candidate = (mesh.c_max - rho) / mesh.spacing;
  int i0 = static_cast<int>(std::llround(candidate));
  i0 = std::clamp(i0, 0, L);
  // The division can land on either side of a midpoint; scanning the
  // neighborhood in ascending order makes ties pick the smaller index.
  int best = -1;
  double best_d = 0.0;
  for (int k = std::max(0, i0 - 1); k <= std::min(L, i0 + 1); ++k) {
    const double d = std::abs(rho - mesh.value[k]);
    if (best < 0 || d < best_d) {
      best = k;
      best_d = d;
    }
  }
  Quantized out;
  out.index = best;
  out.value = mesh.value[best];
  out.remainder = rho - out.value;
  return out;
}

std::vector<std::int32_t> field_level_indices(const Field2& u, const QuantMesh& mesh) {
  std::vector<std::int32_t> idx(u.size());
  for (std::size_t j = 0; j < u.size(); ++j) idx[j] = quantize(u.v[j], mesh).index;
  return idx;
}

double distribution_function(const Field2& u, double q) {
  std::size_t count = 0;
  for (double x : u.v)
    if (x > q) ++count;
  return u.mesh.h * u.mesh.h * static_cast<double>(count);
}

std::vector<double> decreasing_rearrangement(const Field2& u) {
  std::vector<double> r = u.v;
  std::sort(r.begin(), r.end(), std::greater<double>());
  return r;
}

}  // namespace nldiff
