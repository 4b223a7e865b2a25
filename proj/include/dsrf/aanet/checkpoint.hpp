#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>

#include "dsrf/aanet/network.hpp"
#include "dsrf/core/error.hpp"

namespace dsrf::aanet {

class ConfigMismatch : public Error {
 public:
  using Error::Error;
};

constexpr std::uint32_t kCheckpointVersion = 1;

/// Binary checkpoint: "DSRF", version, config string, config hash, optimizer step, then
/// named tensors (name length, name, rank, dims, little-endian float32 values). ADAM
/// moments are stored as "adam.m/<name>" and "adam.v/<name>" when requested.
void save_checkpoint(const std::filesystem::path& path, const AaFcnn& net, bool with_optimizer = true);

/// Reads the stored network configuration without loading tensors.
NetworkConfig read_checkpoint_config(const std::filesystem::path& path);

/// Loads tensors into net. Throws ConfigMismatch when the stored config hash differs from
/// net.config().hash(); Error on malformed files.
void load_checkpoint(const std::filesystem::path& path, AaFcnn& net);

/// Builds a network from the stored configuration and loads it.
std::unique_ptr<AaFcnn> load_network(const std::filesystem::path& path);

NetworkConfig parse_network_config(const std::string& serialized);

}  // namespace dsrf::aanet
