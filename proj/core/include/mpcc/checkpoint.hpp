#pragma once

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "mpcc/tensor.hpp"

namespace mpcc {

struct NamedTensor {
  std::string name;
  Tensor tensor;
};

// Checkpoint layout:
//   MPCC1\n
//   <name> <rank> <d0> <d1> ...\n      one line per tensor
//   \n                                 end of header
//   little-endian float64 payloads, concatenated in header order
void save_checkpoint(const std::filesystem::path& path, const std::vector<NamedTensor>& tensors);
std::vector<NamedTensor> load_checkpoint(const std::filesystem::path& path);

/// Copies checkpoint values into existing tensors, matching by name and shape.
void restore_into(const std::vector<NamedTensor>& loaded, std::vector<NamedTensor>& target);

}  // namespace mpcc
