#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "c2/nn/layers.hpp"
#include "c2/nn/tensor.hpp"

namespace c2::nn {

enum class NetMode : std::uint8_t { Vector, Spatial };

struct NetConfig {
  NetMode mode = NetMode::Vector;
  int input_dim = 17;  // vector mode
  int dense = 64;      // vector trunk / nonspatial trunk width
  int lstm = 128;
  int actions = 12;  // discrete actions (vector) or compound ids (spatial)

  int n = 16;
  int minimap_layers = 7;
  int screen_layers = 13;
  int nonspatial = 13;
  int conv1_filters = 16;
  int conv1_kernel = 5;
  int conv2_filters = 32;
  int conv2_kernel = 3;
  int trunk_projection = 128;

  static NetConfig vector_default() { return {}; }
  static NetConfig spatial_default(int n = 16) {
    NetConfig c;
    c.mode = NetMode::Spatial;
    c.actions = 3;
    c.n = n;
    return c;
  }
  friend bool operator==(const NetConfig&, const NetConfig&) = default;
};

/// One timestep of input. Vector mode reads `vector`; spatial mode reads the
/// three layer stacks (planar, layer-major).
struct NetInput {
  std::vector<double> vector;
  std::vector<double> minimap;
  std::vector<double> screen;
  std::vector<double> nonspatial;
};

/// Unnormalized head outputs for one timestep.
struct HeadOutput {
  std::vector<double> action_logits;
  std::vector<double> x_logits;  // spatial mode only
  std::vector<double> y_logits;  // spatial mode only
  double value = 0.0;
};

/// Loss gradients with respect to a HeadOutput.
struct HeadGrad {
  std::vector<double> action_logits;
  std::vector<double> x_logits;
  std::vector<double> y_logits;
  double value = 0.0;
};

struct LstmState {
  Eigen::VectorXd h;
  Eigen::VectorXd c;
};

/// Actor-critic network: trunk(s) -> LSTM -> policy heads + value head.
class PolicyNet {
 public:
  /// Recorded forward pass over one sequence, consumed by backward_sequence.
  struct Trace {
    std::size_t steps = 0;
    std::vector<NetInput> inputs;
    std::vector<std::uint8_t> reset_before;
    RowMatrix vec_hidden;  // vector trunk output [T, dense]
    std::vector<RowMatrix> mm_cols1, mm_y1, mm_cols2, mm_y2, sc_cols1, sc_y1, sc_cols2, sc_y2;
    RowMatrix mm_flat, sc_flat, mm_proj, sc_proj, ns_hidden;
    RowMatrix features;  // LSTM input [T, F]
    std::vector<Lstm::StepCache> lstm;
    RowMatrix hidden;  // LSTM output [T, H]
  };

  PolicyNet() = default;
  PolicyNet(NetConfig config, std::uint64_t seed);

  const NetConfig& config() const noexcept { return config_; }
  LstmState initial_state() const;

  /// Single inference step; advances `state`.
  HeadOutput step(const NetInput& input, LstmState& state) const;

  /// Forward over a sequence starting from `initial`. The recurrent state is
  /// zeroed before every step t with reset_before[t] != 0.
  std::vector<HeadOutput> forward_sequence(std::span<const NetInput> inputs, const LstmState& initial,
                                           std::span<const std::uint8_t> reset_before, Trace& trace) const;

  /// Backpropagation through time over a recorded trace; accumulates into
  /// `grads` (aligned with parameters()). Throws if the trace is empty.
  void backward_sequence(const Trace& trace, std::span<const HeadGrad> grads, Gradients& out) const;

  std::vector<Parameter*> parameters();
  std::vector<const Parameter*> parameters() const;
  std::size_t parameter_count() const;

 private:
  int feature_width() const;
  RowMatrix encode(std::span<const NetInput> inputs, Trace* trace) const;
  void heads(const Eigen::VectorXd& h, HeadOutput& out) const;
  void check_input(const NetInput& in) const;

  NetConfig config_;
  // vector trunk
  Dense vec_dense_;
  // spatial trunks
  Conv2D mm_conv1_, mm_conv2_, sc_conv1_, sc_conv2_;
  Dense mm_proj_, sc_proj_, ns_dense_;
  Lstm lstm_;
  Dense action_head_, x_head_, y_head_, value_head_;
};

}  // namespace c2::nn
