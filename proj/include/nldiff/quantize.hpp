#pragma once

#include <cstdint>
#include <vector>

#include "nldiff/grid.hpp"

namespace nldiff {

// Decreasing uniform value mesh q_0 = c_max > q_1 > ... > q_L = c_min with
// spacing s = (c_max - c_min) / L.
struct QuantMesh {
  double c_min = 0.0;
  double c_max = 0.0;
  int levels = 0;  // L; the mesh has L + 1 values
  double spacing = 0.0;
  std::vector<double> value;  // value[i], decreasing in i

  int size() const { return levels + 1; }
};

// Requires c_max > c_min and levels >= 1.
QuantMesh build_quant_mesh(double c_min, double c_max, int levels);

struct Quantized {
  int index = 0;
  double value = 0.0;
  double remainder = 0.0;  // rho - value
};

// Nearest mesh value; ties resolve to the smaller index (the larger value).
// Inputs outside [c_min, c_max] clamp to the nearest endpoint.
Quantized quantize(double rho, const QuantMesh& mesh);

std::vector<std::int32_t> field_level_indices(const Field2& u, const QuantMesh& mesh);

// Lebesgue-style distribution function: h^2 * #{ cells with u > q }.
double distribution_function(const Field2& u, double q);

// Cell values sorted in decreasing order.
std::vector<double> decreasing_rearrangement(const Field2& u);

}  // namespace nldiff
