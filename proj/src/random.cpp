#include "deepcv/random.hpp"

#include <cmath>
#include <numbers>

namespace deepcv {
namespace {

constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

constexpr std::uint64_t derive_key(std::uint64_t seed, std::uint64_t stream_id) noexcept {
  return mix64(mix64(seed + kGolden) ^ mix64(stream_id * 0xD1B54A32D192ED03ULL + 0x8CB92BA72F3D8DD7ULL));
}

}  // namespace

RandomStream::RandomStream(std::uint64_t seed, std::uint64_t stream_id) noexcept
    : seed_(seed), stream_id_(stream_id), key_(derive_key(seed, stream_id)) {}

RandomStream RandomStream::substream(std::uint64_t index) const noexcept {
  return RandomStream(seed_, mix64(stream_id_ ^ mix64(index + 0x632BE59BD9B4E019ULL)));
}

std::uint64_t RandomStream::next_u64() noexcept {
  ++counter_;
  return mix64(key_ + counter_ * kGolden);
}

double RandomStream::next_uniform() noexcept {
  // 53 random bits mapped to (0, 1): never 0, never 1.
  return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
}

double RandomStream::next_normal() noexcept {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  const double u1 = next_uniform();
  const double u2 = next_uniform();
  const double radius = std::sqrt(-2.0 * std::log(u1));
  const double angle = 2.0 * std::numbers::pi * u2;
  spare_ = radius * std::sin(angle);
  has_spare_ = true;
  return radius * std::cos(angle);
}

void RandomStream::fill_normals(std::span<double> out) noexcept {
  for (double& x : out) x = next_normal();
}

std::vector<double> standard_normals(RandomStream stream, std::size_t count) {
  std::vector<double> out(count);
  stream.fill_normals(out);
  return out;
}

}  // namespace deepcv
