#pragma once

#include <filesystem>
#include <nlohmann/json.hpp>

#include "deepcv/network.hpp"

namespace deepcv {

/// A network plus free-form training metadata (seed, epsilon, iterations, extra inputs, ...).
struct Checkpoint {
  Network network;
  nlohmann::json metadata = nlohmann::json::object();
};

/// File layout: one line of JSON manifest, then the parameter and running-statistics
/// blocks as little-endian float64, then the byte length of everything before it as a
/// little-endian uint64. The manifest records block sizes and an FNV-1a checksum of the
/// payload. Throws IoError when the file cannot be written.
void save_checkpoint(const Network& net, const std::filesystem::path& path,
                     const nlohmann::json& metadata = nlohmann::json::object());

/// Throws IoError for unreadable files and CorruptCheckpoint for truncated or
/// inconsistent ones.
Checkpoint load_checkpoint(const std::filesystem::path& path);

std::uint64_t fnv1a64(const void* data, std::size_t size, std::uint64_t seed = 0xcbf29ce484222325ULL);

}  // namespace deepcv
