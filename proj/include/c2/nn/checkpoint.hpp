#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "c2/nn/optimizer.hpp"
#include "c2/nn/policy_net.hpp"

namespace c2::nn {

/// Persisted training state: network config and parameters, optimizer
/// accumulators, step count and free-form metadata.
///
/// Binary layout: "TCCK", u32 version, u32 header length, JSON header, then
/// little-endian parameter values followed by optimizer accumulators.
struct Checkpoint {
  static constexpr std::uint32_t kVersion = 1;

  NetConfig config;
  std::vector<Parameter> parameters;
  OptimizerState optimizer;
  std::uint64_t step = 0;
  nlohmann::json metadata = nlohmann::json::object();
};

class CheckpointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

Checkpoint make_checkpoint(const PolicyNet& net, const RmsProp* optimizer, std::uint64_t step);

/// Rebuilds the network; parameter names and shapes must match the config.
PolicyNet restore_net(const Checkpoint& ck);

/// `f32` stores values through 32-bit floats (inference export; lossy).
std::string encode_checkpoint(const Checkpoint& ck, bool f32 = false);
Checkpoint decode_checkpoint(std::string_view bytes);

void save_checkpoint(const std::string& path, const Checkpoint& ck, bool f32 = false);
Checkpoint load_checkpoint(const std::string& path);

/// FNV-1a of the encoded 64-bit form.
std::uint64_t checkpoint_hash(const Checkpoint& ck);

nlohmann::json config_to_json(const NetConfig& c);
NetConfig config_from_json(const nlohmann::json& j);

}  // namespace c2::nn
