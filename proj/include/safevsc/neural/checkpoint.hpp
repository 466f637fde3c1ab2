#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "safevsc/neural/network.hpp"

namespace safevsc::neural {

// Parameter file layout (all integers and reals little-endian):
//
//   offset  size  field
//   0       8     magic "SVQNET01"
//   8       4     u32 format version (kCheckpointVersion)
//   12      4     u32 header length H
//   16      H     UTF-8 JSON header: {"format", "version", "layer_sizes",
//                 "parameter_count", "meta": {...caller data...}}
//   16+H    8N    N f64 parameters; per layer: weights row-major, then biases
//   16+H+8N 8     u64 FNV-1a hash of the parameter bytes

inline constexpr std::uint32_t kCheckpointVersion = 1;

class CheckpointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct LoadedCheckpoint {
  QNetworkParams params;
  nlohmann::json meta;
};

std::string encode_checkpoint(const QNetworkParams& p, const nlohmann::json& meta);
LoadedCheckpoint decode_checkpoint(const std::string& bytes);

void save_checkpoint(const std::filesystem::path& path, const QNetworkParams& p, const nlohmann::json& meta);
LoadedCheckpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace safevsc::neural
