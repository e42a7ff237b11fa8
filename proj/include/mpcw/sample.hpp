#pragma once

#include "mpcw/common.hpp"

#include <cstdint>
#include <vector>

namespace mpcw {

/// Dataset tuple (x, z*, nu*, lambda*) plus the solver working set used to
/// hot start neighbouring problems.
struct SampleRecord {
  Vec x;
  Vec z_star;
  Vec nu_star;
  Vec lambda_star;
  std::vector<std::uint32_t> aux;  // working-set inequality rows
};

}  // namespace mpcw
