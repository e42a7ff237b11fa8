#pragma once

#include "mpcw/common.hpp"

#include <cstdint>
#include <vector>

namespace mpcw {

/// Sobol low-discrepancy sequence (Joe-Kuo direction numbers, Gray-code
/// order). The all-zeros point at index 0 is skipped: the first emitted
/// point is (0.5, ..., 0.5). Supports up to 40 dimensions.
class SobolSequence {
 public:
  explicit SobolSequence(Index dim);

  Index dim() const { return dim_; }
  /// Next point in the unit cube [0,1)^dim.
  Vec next();

 private:
  Index dim_;
  std::uint64_t index_ = 0;
  std::vector<std::uint32_t> state_;
  std::vector<std::vector<std::uint32_t>> dirs_;  // [dim][bit]
};

/// First `count` Sobol points mapped affinely into [lo, hi] per axis,
/// returned row-wise (count x dim).
Mat sobol(Index dim, Index count, const Vec& lo, const Vec& hi);

}  // namespace mpcw
