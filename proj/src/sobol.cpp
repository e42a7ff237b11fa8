#include "mpcw/sobol.hpp"

#include <bit>

namespace mpcw {
namespace {

constexpr int kBits = 32;

// Primitive polynomial (all coefficient bits) and initial direction values
// m_1..m_s per dimension, Joe-Kuo tables.
struct DirRow {
  std::uint32_t poly;
  std::vector<std::uint32_t> m;
};

const std::vector<DirRow>& direction_table() {
  static const std::vector<DirRow> table = {
    {1, {1}},
    {3, {1}},
    {7, {1, 3}},
    {11, {1, 3, 1}},
    {13, {1, 1, 1}},
    {19, {1, 1, 3, 3}},
    {25, {1, 3, 5, 13}},
    {37, {1, 1, 5, 5, 17}},
    {41, {1, 1, 5, 5, 5}},
    {47, {1, 1, 7, 11, 19}},
    {55, {1, 1, 5, 1, 1}},
    {59, {1, 1, 1, 3, 11}},
    {61, {1, 3, 5, 5, 31}},
    {67, {1, 3, 3, 9, 7, 49}},
    {91, {1, 1, 1, 15, 21, 21}},
    {97, {1, 3, 1, 13, 27, 49}},
    {103, {1, 1, 1, 15, 7, 5}},
    {109, {1, 3, 1, 15, 13, 25}},
    {115, {1, 1, 5, 5, 19, 61}},
    {131, {1, 3, 7, 11, 23, 15, 103}},
    {137, {1, 3, 7, 13, 13, 15, 69}},
    {143, {1, 1, 3, 13, 7, 35, 63}},
    {145, {1, 3, 5, 9, 1, 25, 53}},
    {157, {1, 3, 1, 13, 9, 35, 107}},
    {167, {1, 3, 1, 5, 27, 61, 31}},
    {171, {1, 1, 5, 11, 19, 41, 61}},
    {185, {1, 3, 5, 3, 3, 13, 69}},
    {191, {1, 1, 7, 13, 1, 19, 1}},
    {193, {1, 3, 7, 5, 13, 19, 59}},
    {203, {1, 1, 3, 9, 25, 29, 41}},
    {211, {1, 3, 5, 13, 23, 1, 55}},
    {213, {1, 3, 7, 3, 13, 59, 17}},
    {229, {1, 3, 1, 3, 5, 53, 69}},
    {239, {1, 1, 5, 5, 23, 33, 13}},
    {241, {1, 1, 7, 7, 1, 61, 123}},
    {247, {1, 1, 7, 9, 13, 61, 49}},
    {253, {1, 3, 3, 5, 3, 55, 33}},
    {285, {1, 3, 1, 15, 31, 13, 49, 245}},
    {299, {1, 3, 5, 15, 31, 59, 63, 97}},
    {301, {1, 3, 1, 11, 11, 11, 77, 249}},
  };
  return table;
}

std::vector<std::uint32_t> direction_numbers(const DirRow& row) {
  std::vector<std::uint32_t> v(kBits + 1, 0);
  const int s = 31 - std::countl_zero(row.poly == 0 ? 1u : row.poly);
  if (s == 0) {
    // First dimension: van der Corput, all m_k = 1.
    for (int k = 1; k <= kBits; ++k) v[k] = 1u << (kBits - k);
    return v;
  }
  for (int k = 1; k <= s && k <= kBits; ++k)
    v[k] = row.m[k - 1] << (kBits - k);
  for (int k = s + 1; k <= kBits; ++k) {
    v[k] = v[k - s] ^ (v[k - s] >> s);
    for (int i = 1; i < s; ++i)
      if ((row.poly >> (s - i)) & 1u) v[k] ^= v[k - i];
  }
  return v;
}

}  // namespace

SobolSequence::SobolSequence(Index dim) : dim_(dim) {
  const auto& table = direction_table();
  if (dim < 1 || dim > static_cast<Index>(table.size()))
    throw InvalidArgument("SobolSequence: dimension outside supported range");
  state_.assign(dim, 0);
  dirs_.reserve(dim);
  for (Index j = 0; j < dim; ++j)
    dirs_.push_back(direction_numbers(table[j]));
}

Vec SobolSequence::next() {
  ++index_;  // skip the all-zeros point at index 0
  const int bit = std::countr_zero(index_) + 1;
  if (bit > kBits)
    throw NumericalError("SobolSequence: sequence length exhausted");
  Vec out(dim_);
  for (Index j = 0; j < dim_; ++j) {
    state_[j] ^= dirs_[j][bit];
    out(j) = static_cast<double>(state_[j]) / 4294967296.0;
  }
  return out;
}

Mat sobol(Index dim, Index count, const Vec& lo, const Vec& hi) {
  if (count < 0 || lo.size() != dim || hi.size() != dim)
    throw InvalidArgument("sobol: bad box bounds");
  if (((hi - lo).array() < 0.0).any())
    throw InvalidArgument("sobol: box upper bound below lower bound");
  SobolSequence seq(dim);
  Mat out(count, dim);
  for (Index i = 0; i < count; ++i) {
    Vec p = seq.next();
    out.row(i) = (lo.array() + p.array() * (hi - lo).array()).transpose();
  }
  return out;
}

}  // namespace mpcw
