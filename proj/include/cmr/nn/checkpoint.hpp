#pragma once

// Versioned binary checkpoint container.
//
//   "CMRCKPT1"                    8-byte magic
//   u32 version                   currently 1
//   u32 real_bytes                sizeof(Real) the tensors were written with
//   u64 header_len, header bytes  UTF-8 JSON (config, vocabulary, metadata)
//   u64 tensor_count
//   per tensor: u32 name_len, name, u32 rank, u64 dims[rank], raw values
//
// Integers and reals are little-endian as laid out in memory on the hosts we
// target; values are copied bit for bit.

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "cmr/nn/layers.hpp"

namespace cmr::nn {

struct NamedTensor {
  std::string name;
  Shape shape;
  std::vector<Real> values;
};

struct Checkpoint {
  nlohmann::json header = nlohmann::json::object();
  std::vector<NamedTensor> tensors;

  void add_parameters(const ParameterSet& params, const std::string& prefix = "");
  // Copies every parameter named prefix + name; throws when missing or misshapen.
  void load_parameters(const ParameterSet& params, const std::string& prefix = "") const;
  const NamedTensor* find(const std::string& name) const;
};

inline constexpr std::uint32_t kCheckpointVersion = 1;

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace cmr::nn
