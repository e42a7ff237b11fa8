#pragma once

#include "mpcw/common.hpp"
#include "mpcw/neural.hpp"
#include "mpcw/sample.hpp"
#include "mpcw/systems.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace mpcw {

std::string base64_encode(const std::uint8_t* data, std::size_t size);
std::vector<std::uint8_t> base64_decode(const std::string& text);

/// Matrices cross files as base64 little-endian f64 blobs, column-major.
std::string encode_matrix(const Mat& m);
Mat decode_matrix(const std::string& text, Index rows, Index cols);

/// FNV-1a over the canonical serialization of the problem data.
std::uint64_t spec_hash(const LtiProblemSpec& spec);

void save_model(const MlpModel& model, const std::string& path,
                std::uint64_t seed = 0);
MlpModel load_model(const std::string& path);

struct DatasetHeader {
  std::uint32_t n = 0, d_p = 0, d_eq = 0, d_in = 0, count = 0;
};

void write_dataset(const std::vector<SampleRecord>& records,
                   const DatasetHeader& dims, const std::string& path);
std::pair<DatasetHeader, std::vector<SampleRecord>> read_dataset(
    const std::string& path);

void save_problem(const LtiProblemSpec& spec, const std::string& path);
LtiProblemSpec load_problem(const std::string& path);

}  // namespace mpcw
