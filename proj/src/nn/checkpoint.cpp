#include "c2/nn/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include "c2/core/hash.hpp"

namespace c2::nn {

using nlohmann::json;

namespace {

constexpr std::string_view kMagic = "TCCK";

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>(v >> (8 * i)));
}

std::uint32_t get_u32(std::string_view in, std::size_t at) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(in[at + i])) << (8 * i);
  return v;
}

void put_values(std::string& out, const Tensor& t, bool f32) {
  for (double v : t.values()) {
    if (f32) {
      const auto bits = std::bit_cast<std::uint32_t>(static_cast<float>(v));
      put_u32(out, bits);
    } else {
      const auto bits = std::bit_cast<std::uint64_t>(v);
      for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>(bits >> (8 * i)));
    }
  }
}

class Reader {
 public:
  Reader(std::string_view data, std::size_t at, bool f32) : data_(data), at_(at), f32_(f32) {}

  void fill(Tensor& t) {
    const std::size_t width = f32_ ? 4 : 8;
    if (data_.size() - at_ < t.size() * width) throw CheckpointError("checkpoint payload truncated");
    for (double& v : t.values()) {
      if (f32_) {
        v = static_cast<double>(std::bit_cast<float>(get_u32(data_, at_)));
      } else {
        std::uint64_t bits = 0;
        for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(static_cast<unsigned char>(data_[at_ + i])) << (8 * i);
        v = std::bit_cast<double>(bits);
      }
      at_ += width;
    }
  }

  bool exhausted() const noexcept { return at_ == data_.size(); }

 private:
  std::string_view data_;
  std::size_t at_;
  bool f32_;
};

}  // namespace

json config_to_json(const NetConfig& c) {
  return json{{"mode", c.mode == NetMode::Vector ? "vector" : "spatial"},
              {"input_dim", c.input_dim},
              {"dense", c.dense},
              {"lstm", c.lstm},
              {"actions", c.actions},
              {"n", c.n},
              {"minimap_layers", c.minimap_layers},
              {"screen_layers", c.screen_layers},
              {"nonspatial", c.nonspatial},
              {"conv1_filters", c.conv1_filters},
              {"conv1_kernel", c.conv1_kernel},
              {"conv2_filters", c.conv2_filters},
              {"conv2_kernel", c.conv2_kernel},
              {"trunk_projection", c.trunk_projection}};
}

NetConfig config_from_json(const json& j) {
  NetConfig c;
  const std::string mode = j.at("mode").get<std::string>();
  if (mode != "vector" && mode != "spatial") throw CheckpointError("unknown network mode '" + mode + "'");
  c.mode = mode == "vector" ? NetMode::Vector : NetMode::Spatial;
  c.input_dim = j.at("input_dim").get<int>();
  c.dense = j.at("dense").get<int>();
  c.lstm = j.at("lstm").get<int>();
  c.actions = j.at("actions").get<int>();
  c.n = j.at("n").get<int>();
  c.minimap_layers = j.at("minimap_layers").get<int>();
  c.screen_layers = j.at("screen_layers").get<int>();
  c.nonspatial = j.at("nonspatial").get<int>();
  c.conv1_filters = j.at("conv1_filters").get<int>();
  c.conv1_kernel = j.at("conv1_kernel").get<int>();
  c.conv2_filters = j.at("conv2_filters").get<int>();
  c.conv2_kernel = j.at("conv2_kernel").get<int>();
  c.trunk_projection = j.at("trunk_projection").get<int>();
  return c;
}

Checkpoint make_checkpoint(const PolicyNet& net, const RmsProp* optimizer, std::uint64_t step) {
  Checkpoint ck;
  ck.config = net.config();
  for (const Parameter* p : net.parameters()) ck.parameters.push_back(*p);
  if (optimizer) ck.optimizer = optimizer->state();
  ck.step = step;
  return ck;
}

PolicyNet restore_net(const Checkpoint& ck) {
  PolicyNet net(ck.config, 0);
  auto params = net.parameters();
  if (params.size() != ck.parameters.size()) {
    throw CheckpointError("checkpoint holds " + std::to_string(ck.parameters.size()) + " tensors, network expects " +
                          std::to_string(params.size()));
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    const Parameter& src = ck.parameters[i];
    if (src.name != params[i]->name || src.value.shape() != params[i]->value.shape()) {
      throw CheckpointError("checkpoint tensor '" + src.name + "' does not match network tensor '" +
                            params[i]->name + "'");
    }
    params[i]->value = src.value;
  }
  return net;
}

std::string encode_checkpoint(const Checkpoint& ck, bool f32) {
  json header;
  header["config"] = config_to_json(ck.config);
  header["precision"] = f32 ? "f32" : "f64";
  header["step"] = ck.step;
  header["metadata"] = ck.metadata;
  json tensors = json::array();
  for (const auto& p : ck.parameters) tensors.push_back({{"name", p.name}, {"shape", p.value.shape()}});
  header["tensors"] = std::move(tensors);
  const auto& opt = ck.optimizer;
  header["optimizer"] = {{"kind", "rmsprop"},
                         {"learning_rate", opt.config.learning_rate},
                         {"decay", opt.config.decay},
                         {"epsilon", opt.config.epsilon},
                         {"clip_norm", opt.config.clip_norm},
                         {"steps", opt.steps},
                         {"accumulators", opt.square_avg.size()}};
  if (!opt.square_avg.empty() && opt.square_avg.size() != ck.parameters.size()) {
    throw CheckpointError("optimizer state does not match parameter count");
  }

  const std::string text = header.dump();
  std::string out(kMagic);
  put_u32(out, Checkpoint::kVersion);
  put_u32(out, static_cast<std::uint32_t>(text.size()));
  out += text;
  for (const auto& p : ck.parameters) put_values(out, p.value, f32);
  for (const auto& t : opt.square_avg) put_values(out, t, f32);
  return out;
}

Checkpoint decode_checkpoint(std::string_view bytes) {
  if (bytes.size() < 12 || bytes.substr(0, 4) != kMagic) throw CheckpointError("not a checkpoint file");
  const std::uint32_t version = get_u32(bytes, 4);
  if (version != Checkpoint::kVersion) {
    throw CheckpointError("unsupported checkpoint version " + std::to_string(version));
  }
  const std::uint32_t header_len = get_u32(bytes, 8);
  if (bytes.size() - 12 < header_len) throw CheckpointError("checkpoint header truncated");

  Checkpoint ck;
  try {
    const json header = json::parse(bytes.substr(12, header_len));
    ck.config = config_from_json(header.at("config"));
    ck.step = header.at("step").get<std::uint64_t>();
    ck.metadata = header.at("metadata");
    const bool f32 = header.at("precision").get<std::string>() == "f32";
    for (const auto& t : header.at("tensors")) {
      ck.parameters.push_back({t.at("name").get<std::string>(), Tensor(t.at("shape").get<std::vector<int>>())});
    }
    const auto& o = header.at("optimizer");
    ck.optimizer.config = {o.at("learning_rate").get<double>(), o.at("decay").get<double>(),
                           o.at("epsilon").get<double>(), o.at("clip_norm").get<double>()};
    ck.optimizer.steps = o.at("steps").get<std::uint64_t>();
    const auto accumulators = o.at("accumulators").get<std::size_t>();
    if (accumulators != 0 && accumulators != ck.parameters.size()) {
      throw CheckpointError("optimizer state does not match parameter count");
    }

    Reader reader(bytes, 12 + header_len, f32);
    for (auto& p : ck.parameters) reader.fill(p.value);
    for (std::size_t i = 0; i < accumulators; ++i) {
      Tensor t(ck.parameters[i].value.shape());
      reader.fill(t);
      ck.optimizer.square_avg.push_back(std::move(t));
    }
    if (!reader.exhausted()) throw CheckpointError("trailing bytes after checkpoint payload");
  } catch (const json::exception& e) {
    throw CheckpointError(std::string("malformed checkpoint header: ") + e.what());
  }
  return ck;
}

void save_checkpoint(const std::string& path, const Checkpoint& ck, bool f32) {
  const std::string bytes = encode_checkpoint(ck, f32);
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw CheckpointError("cannot write " + tmp);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw CheckpointError("write failed for " + tmp);
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0) throw CheckpointError("cannot move checkpoint into " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return decode_checkpoint(buf.str());
}

std::uint64_t checkpoint_hash(const Checkpoint& ck) {
  const std::string bytes = encode_checkpoint(ck);
  Fnv1a h;
  h.bytes(std::span(reinterpret_cast<const std::uint8_t*>(bytes.data()), bytes.size()));
  return h.digest();
}

}  // namespace c2::nn
