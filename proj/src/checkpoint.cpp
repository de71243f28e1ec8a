#include "deepcv/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>

#include "deepcv/errors.hpp"

namespace deepcv {
namespace {

constexpr const char* kFormat = "deepcv-checkpoint";
constexpr int kVersion = 1;

void put_u64(std::string& out, std::uint64_t value) {
  for (int b = 0; b < 8; ++b) out.push_back(static_cast<char>((value >> (8 * b)) & 0xffU));
}

std::uint64_t get_u64(const unsigned char* p) {
  std::uint64_t value = 0;
  for (int b = 7; b >= 0; --b) value = (value << 8) | p[b];
  return value;
}

void put_block(std::string& out, const Eigen::VectorXd& block) {
  for (Eigen::Index i = 0; i < block.size(); ++i) put_u64(out, std::bit_cast<std::uint64_t>(block(i)));
}

std::string hex(std::uint64_t value) {
  std::ostringstream os;
  os << std::hex;
  os.width(16);
  os.fill('0');
  os << value;
  return os.str();
}

}  // namespace

std::uint64_t fnv1a64(const void* data, std::size_t size, std::uint64_t seed) {
  const auto* bytes = static_cast<const unsigned char*>(data);
  std::uint64_t h = seed;
  for (std::size_t i = 0; i < size; ++i) {
    h ^= bytes[i];
    h *= 0x100000001b3ULL;
  }
  return h;
}

void save_checkpoint(const Network& net, const std::filesystem::path& path, const nlohmann::json& metadata) {
  std::string payload;
  payload.reserve(8 * static_cast<std::size_t>(net.parameters().size() + net.running_stats().size()));
  put_block(payload, net.parameters());
  put_block(payload, net.running_stats());

  const NetworkSpec& spec = net.spec();
  nlohmann::json manifest = {
      {"format", kFormat},
      {"version", kVersion},
      {"layer_sizes", spec.layer_sizes},
      {"activation", "relu"},
      {"batchnorm", spec.batchnorm},
      {"output_bn_affine", spec.output_bn_affine},
      {"bn_momentum", spec.bn_momentum},
      {"bn_epsilon", spec.bn_epsilon},
      {"blocks",
       {{{"name", "parameters"}, {"count", net.parameters().size()}},
        {{"name", "running_stats"}, {"count", net.running_stats().size()}}}},
      {"checksum", hex(fnv1a64(payload.data(), payload.size()))},
      {"metadata", metadata},
  };
  std::string file = manifest.dump();
  file.push_back('\n');
  file += payload;
  put_u64(file, static_cast<std::uint64_t>(file.size()));

  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw IoError("cannot open checkpoint for writing: " + path.string());
  os.write(file.data(), static_cast<std::streamsize>(file.size()));
  if (!os) throw IoError("failed writing checkpoint: " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open checkpoint: " + path.string());
  const std::string file((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
  const std::string where = " (" + path.string() + ")";

  const std::size_t newline = file.find('\n');
  if (newline == std::string::npos) throw CorruptCheckpoint("checkpoint has no manifest line" + where);
  if (file.size() < newline + 1 + 8) throw CorruptCheckpoint("checkpoint truncated" + where);
  const auto* bytes = reinterpret_cast<const unsigned char*>(file.data());
  const std::uint64_t declared = get_u64(bytes + file.size() - 8);
  if (declared != file.size() - 8)
    throw CorruptCheckpoint("checkpoint length check failed: trailer says " + std::to_string(declared) +
                            " bytes, found " + std::to_string(file.size() - 8) + where);

  nlohmann::json manifest;
  try {
    manifest = nlohmann::json::parse(file.substr(0, newline));
  } catch (const nlohmann::json::exception& e) {
    throw CorruptCheckpoint(std::string("checkpoint manifest is not valid JSON: ") + e.what() + where);
  }

  Checkpoint out;
  std::size_t n_params = 0;
  std::size_t n_running = 0;
  try {
    if (manifest.at("format").get<std::string>() != kFormat || manifest.at("version").get<int>() != kVersion)
      throw CorruptCheckpoint("unsupported checkpoint format" + where);
    NetworkSpec spec;
    spec.layer_sizes = manifest.at("layer_sizes").get<std::vector<int>>();
    spec.batchnorm = manifest.at("batchnorm").get<bool>();
    spec.output_bn_affine = manifest.at("output_bn_affine").get<bool>();
    spec.bn_momentum = manifest.at("bn_momentum").get<double>();
    spec.bn_epsilon = manifest.at("bn_epsilon").get<double>();
    out.network = Network(spec);
    n_params = manifest.at("blocks").at(0).at("count").get<std::size_t>();
    n_running = manifest.at("blocks").at(1).at("count").get<std::size_t>();
    out.metadata = manifest.value("metadata", nlohmann::json::object());
  } catch (const nlohmann::json::exception& e) {
    throw CorruptCheckpoint(std::string("checkpoint manifest incomplete: ") + e.what() + where);
  } catch (const ConfigError& e) {
    throw CorruptCheckpoint(std::string("checkpoint manifest describes an invalid network: ") + e.what() + where);
  }
  if (n_params != out.network.parameter_count() ||
      n_running != static_cast<std::size_t>(out.network.running_stats().size()))
    throw CorruptCheckpoint("checkpoint block sizes do not match the declared architecture" + where);

  const std::size_t payload_size = file.size() - 8 - (newline + 1);
  if (payload_size != 8 * (n_params + n_running))
    throw CorruptCheckpoint("checkpoint payload has " + std::to_string(payload_size) + " bytes, expected " +
                            std::to_string(8 * (n_params + n_running)) + where);
  const unsigned char* payload = bytes + newline + 1;
  if (hex(fnv1a64(payload, payload_size)) != manifest.value("checksum", std::string()))
    throw CorruptCheckpoint("checkpoint checksum mismatch" + where);

  Eigen::VectorXd& params = out.network.mutable_parameters();
  for (std::size_t i = 0; i < n_params; ++i)
    params(static_cast<Eigen::Index>(i)) = std::bit_cast<double>(get_u64(payload + 8 * i));
  Eigen::VectorXd& running = out.network.mutable_running_stats();
  for (std::size_t i = 0; i < n_running; ++i)
    running(static_cast<Eigen::Index>(i)) = std::bit_cast<double>(get_u64(payload + 8 * (n_params + i)));
  return out;
}

}  // namespace deepcv
