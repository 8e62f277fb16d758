#pragma once

#include <vector>

#include "qdsm/geometry.hpp"

namespace qdsm {

/// Complex-valued samples over a SamplingGrid, flattened in the grid's
/// row-major order.
struct ComplexField {
  SamplingGrid grid;
  std::vector<Complex> values;

  ComplexField() = default;
  explicit ComplexField(const SamplingGrid& g)
      : grid(g), values(g.size(), Complex(0.0, 0.0)) {}
};

}  // namespace qdsm
