#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace deepcv {

/// Counter-based normal generator keyed by (seed, stream_id).
///
/// Each stream is a SplitMix64 sequence started at a key mixed from the seed
/// and stream id, so streams are cheap to create and can be handed to worker
/// threads. `substream(i)` derives an independent child stream; assigning one
/// substream per sample index makes results independent of scheduling.
class RandomStream {
 public:
  explicit RandomStream(std::uint64_t seed = 0, std::uint64_t stream_id = 0) noexcept;

  std::uint64_t seed() const noexcept { return seed_; }
  std::uint64_t stream_id() const noexcept { return stream_id_; }

  /// Child stream for sample (or batch) `index`; does not advance this stream.
  RandomStream substream(std::uint64_t index) const noexcept;

  std::uint64_t next_u64() noexcept;
  /// Uniform on the open interval (0, 1).
  double next_uniform() noexcept;
  double next_normal() noexcept;
  void fill_normals(std::span<double> out) noexcept;

 private:
  std::uint64_t seed_;
  std::uint64_t stream_id_;
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

/// `count` i.i.d. standard normal draws; identical for identical streams.
std::vector<double> standard_normals(RandomStream stream, std::size_t count);

}  // namespace deepcv
