#pragma once

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "meshadv/net.hpp"

namespace meshadv {

/// Container format shared by all checkpoints: a text manifest ("key value"
/// lines terminated by a blank line), then per tensor a name line, a
/// little-endian u64 byte length, and raw little-endian f64 data, row-major.
struct TensorFile {
  std::vector<std::pair<std::string, std::string>> manifest;
  std::vector<std::pair<std::string, std::vector<double>>> tensors;

  std::string value(const std::string& key) const;  // throws ConfigError if absent
};

void write_tensor_file(const TensorFile& file, const std::filesystem::path& path);
TensorFile read_tensor_file(const std::filesystem::path& path);

struct CheckpointMeta {
  std::string loss = "none";  // loss kind the network was trained with
  std::uint64_t seed = 0;
};

// Bit-exact save/load of network parameters (doubles are written raw).
void save_imitator(const ImitatorParams& params, const CheckpointMeta& meta,
                   const std::filesystem::path& path);
std::pair<ImitatorParams, CheckpointMeta> load_imitator(const std::filesystem::path& path);

}  // namespace meshadv
