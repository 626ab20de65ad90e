#include "c2/nn/policy_net.hpp"

#include <algorithm>
#include <stdexcept>
#include <utility>

namespace c2::nn {

namespace {

constexpr double kPolicyHeadScale = 0.01;

RowMatrix stack_rows(std::span<const NetInput> inputs, std::vector<double> NetInput::*field, int width) {
  RowMatrix m(static_cast<Eigen::Index>(inputs.size()), width);
  for (std::size_t t = 0; t < inputs.size(); ++t) {
    const auto& v = inputs[t].*field;
    for (int k = 0; k < width; ++k) m(static_cast<Eigen::Index>(t), k) = v[k];
  }
  return m;
}

std::size_t index_of(const std::vector<const Parameter*>& params, const Parameter& p) {
  const auto it = std::find(params.begin(), params.end(), &p);
  if (it == params.end()) throw std::logic_error("parameter " + p.name + " is not registered");
  return static_cast<std::size_t>(it - params.begin());
}

}  // namespace

PolicyNet::PolicyNet(NetConfig config, std::uint64_t seed) : config_(config) {
  const NetConfig& c = config_;
  if (c.lstm < 1 || c.actions < 1 || c.dense < 1) throw std::invalid_argument("network widths must be positive");
  Rng rng(seed);
  if (c.mode == NetMode::Vector) {
    vec_dense_ = Dense("trunk.dense", c.input_dim, c.dense);
    vec_dense_.init(rng);
  } else {
    const int plane = c.n * c.n;
    mm_conv1_ = Conv2D("minimap.conv1", c.minimap_layers, c.conv1_filters, c.conv1_kernel, c.n, c.n);
    mm_conv2_ = Conv2D("minimap.conv2", c.conv1_filters, c.conv2_filters, c.conv2_kernel, c.n, c.n);
    mm_proj_ = Dense("minimap.proj", c.conv2_filters * plane, c.trunk_projection);
    sc_conv1_ = Conv2D("screen.conv1", c.screen_layers, c.conv1_filters, c.conv1_kernel, c.n, c.n);
    sc_conv2_ = Conv2D("screen.conv2", c.conv1_filters, c.conv2_filters, c.conv2_kernel, c.n, c.n);
    sc_proj_ = Dense("screen.proj", c.conv2_filters * plane, c.trunk_projection);
    ns_dense_ = Dense("nonspatial.dense", c.nonspatial, c.dense);
    mm_conv1_.init(rng);
    mm_conv2_.init(rng);
    mm_proj_.init(rng);
    sc_conv1_.init(rng);
    sc_conv2_.init(rng);
    sc_proj_.init(rng);
    ns_dense_.init(rng);
  }
  lstm_ = Lstm("lstm", feature_width(), c.lstm);
  lstm_.init(rng);
  action_head_ = Dense("head.action", c.lstm, c.actions);
  action_head_.init(rng, kPolicyHeadScale);
  if (c.mode == NetMode::Spatial) {
    x_head_ = Dense("head.x", c.lstm, c.n);
    y_head_ = Dense("head.y", c.lstm, c.n);
    x_head_.init(rng, kPolicyHeadScale);
    y_head_.init(rng, kPolicyHeadScale);
  }
  value_head_ = Dense("head.value", c.lstm, 1);
  value_head_.init(rng);
}

int PolicyNet::feature_width() const {
  return config_.mode == NetMode::Vector ? config_.dense : 2 * config_.trunk_projection + config_.dense;
}

LstmState PolicyNet::initial_state() const {
  return {Eigen::VectorXd::Zero(config_.lstm), Eigen::VectorXd::Zero(config_.lstm)};
}

std::vector<const Parameter*> PolicyNet::parameters() const {
  std::vector<const Parameter*> p;
  auto add = [&](const auto& layer) {
    p.push_back(&layer.weight);
    p.push_back(&layer.bias);
  };
  if (config_.mode == NetMode::Vector) {
    add(vec_dense_);
  } else {
    add(mm_conv1_);
    add(mm_conv2_);
    add(mm_proj_);
    add(sc_conv1_);
    add(sc_conv2_);
    add(sc_proj_);
    add(ns_dense_);
  }
  p.push_back(&lstm_.wx);
  p.push_back(&lstm_.wh);
  p.push_back(&lstm_.bias);
  add(action_head_);
  if (config_.mode == NetMode::Spatial) {
    add(x_head_);
    add(y_head_);
  }
  add(value_head_);
  return p;
}

std::vector<Parameter*> PolicyNet::parameters() {
  const auto cp = std::as_const(*this).parameters();
  std::vector<Parameter*> p;
  p.reserve(cp.size());
  for (const Parameter* q : cp) p.push_back(const_cast<Parameter*>(q));
  return p;
}

std::size_t PolicyNet::parameter_count() const {
  std::size_t n = 0;
  for (const Parameter* p : parameters()) n += p->value.size();
  return n;
}

void PolicyNet::check_input(const NetInput& in) const {
  const NetConfig& c = config_;
  auto expect = [](const char* stage, std::size_t got, std::size_t want) {
    if (got != want) {
      throw std::invalid_argument(std::string(stage) + ": expected " + std::to_string(want) + " values, got " +
                                  std::to_string(got));
    }
  };
  if (c.mode == NetMode::Vector) {
    expect("vector input", in.vector.size(), static_cast<std::size_t>(c.input_dim));
  } else {
    const auto plane = static_cast<std::size_t>(c.n * c.n);
    expect("minimap input", in.minimap.size(), c.minimap_layers * plane);
    expect("screen input", in.screen.size(), c.screen_layers * plane);
    expect("nonspatial input", in.nonspatial.size(), static_cast<std::size_t>(c.nonspatial));
  }
}

RowMatrix PolicyNet::encode(std::span<const NetInput> inputs, Trace* trace) const {
  const NetConfig& c = config_;
  const auto T = static_cast<Eigen::Index>(inputs.size());
  for (const auto& in : inputs) check_input(in);

  if (c.mode == NetMode::Vector) {
    const RowMatrix x = stack_rows(inputs, &NetInput::vector, c.input_dim);
    RowMatrix h;
    vec_dense_.forward(x, h);
    tanh_inplace(h);
    if (trace) trace->vec_hidden = h;
    return h;
  }

  const int plane = c.n * c.n;
  const int flat = c.conv2_filters * plane;
  auto run_trunk = [&](const Conv2D& conv1, const Conv2D& conv2, std::vector<double> NetInput::*field,
                       std::vector<RowMatrix>* cols1, std::vector<RowMatrix>* y1, std::vector<RowMatrix>* cols2,
                       std::vector<RowMatrix>* y2) {
    RowMatrix flat_out(T, flat);
    RowMatrix c1, a1, c2, a2;
    for (Eigen::Index t = 0; t < T; ++t) {
      conv1.forward(inputs[t].*field, c1, a1);
      relu_inplace(a1);
      conv2.forward(std::span<const double>(a1.data(), a1.size()), c2, a2);
      relu_inplace(a2);
      flat_out.row(t) = Eigen::Map<const Eigen::RowVectorXd>(a2.data(), flat);
      if (cols1) {
        cols1->push_back(c1);
        y1->push_back(a1);
        cols2->push_back(c2);
        y2->push_back(a2);
      }
    }
    return flat_out;
  };

  const bool keep = trace != nullptr;
  RowMatrix mm_flat = run_trunk(mm_conv1_, mm_conv2_, &NetInput::minimap, keep ? &trace->mm_cols1 : nullptr,
                                keep ? &trace->mm_y1 : nullptr, keep ? &trace->mm_cols2 : nullptr,
                                keep ? &trace->mm_y2 : nullptr);
  RowMatrix sc_flat = run_trunk(sc_conv1_, sc_conv2_, &NetInput::screen, keep ? &trace->sc_cols1 : nullptr,
                                keep ? &trace->sc_y1 : nullptr, keep ? &trace->sc_cols2 : nullptr,
                                keep ? &trace->sc_y2 : nullptr);
  RowMatrix mm_proj, sc_proj, ns_hidden;
  mm_proj_.forward(mm_flat, mm_proj);
  relu_inplace(mm_proj);
  sc_proj_.forward(sc_flat, sc_proj);
  relu_inplace(sc_proj);
  ns_dense_.forward(stack_rows(inputs, &NetInput::nonspatial, c.nonspatial), ns_hidden);
  tanh_inplace(ns_hidden);

  RowMatrix features(T, feature_width());
  features << mm_proj, sc_proj, ns_hidden;
  if (trace) {
    trace->mm_flat = std::move(mm_flat);
    trace->sc_flat = std::move(sc_flat);
    trace->mm_proj = std::move(mm_proj);
    trace->sc_proj = std::move(sc_proj);
    trace->ns_hidden = std::move(ns_hidden);
  }
  return features;
}

void PolicyNet::heads(const Eigen::VectorXd& h, HeadOutput& out) const {
  RowMatrix row = h.transpose();
  RowMatrix y;
  action_head_.forward(row, y);
  out.action_logits.assign(y.data(), y.data() + y.size());
  if (config_.mode == NetMode::Spatial) {
    x_head_.forward(row, y);
    out.x_logits.assign(y.data(), y.data() + y.size());
    y_head_.forward(row, y);
    out.y_logits.assign(y.data(), y.data() + y.size());
  }
  value_head_.forward(row, y);
  out.value = y(0, 0);
}

HeadOutput PolicyNet::step(const NetInput& input, LstmState& state) const {
  const RowMatrix features = encode(std::span(&input, 1), nullptr);
  const Eigen::VectorXd x = features.row(0).transpose();
  lstm_.step(x, state.h, state.c, nullptr);
  HeadOutput out;
  heads(state.h, out);
  return out;
}

std::vector<HeadOutput> PolicyNet::forward_sequence(std::span<const NetInput> inputs, const LstmState& initial,
                                                    std::span<const std::uint8_t> reset_before, Trace& trace) const {
  if (!reset_before.empty() && reset_before.size() != inputs.size()) {
    throw std::invalid_argument("reset mask length differs from sequence length");
  }
  trace = Trace{};
  trace.steps = inputs.size();
  trace.inputs.assign(inputs.begin(), inputs.end());
  trace.reset_before.assign(inputs.size(), 0);
  std::copy(reset_before.begin(), reset_before.end(), trace.reset_before.begin());
  trace.features = encode(inputs, &trace);

  const auto T = static_cast<Eigen::Index>(inputs.size());
  trace.hidden.resize(T, config_.lstm);
  trace.lstm.resize(inputs.size());
  Eigen::VectorXd h = initial.h;
  Eigen::VectorXd c = initial.c;
  std::vector<HeadOutput> outputs(inputs.size());
  for (Eigen::Index t = 0; t < T; ++t) {
    if (trace.reset_before[t]) {
      h.setZero();
      c.setZero();
    }
    lstm_.step(trace.features.row(t).transpose(), h, c, &trace.lstm[t]);
    trace.hidden.row(t) = h.transpose();
    heads(h, outputs[t]);
  }
  return outputs;
}

void PolicyNet::backward_sequence(const Trace& trace, std::span<const HeadGrad> grads, Gradients& out) const {
  if (trace.steps == 0) throw std::logic_error("backward called without a recorded forward pass");
  if (grads.size() != trace.steps) throw std::invalid_argument("head gradient count differs from trace length");
  const auto params = parameters();
  if (out.size() != params.size()) throw std::invalid_argument("gradient list does not match parameters");
  auto g = [&](const Parameter& p) -> Tensor& { return out[index_of(params, p)]; };

  const NetConfig& c = config_;
  const auto T = static_cast<Eigen::Index>(trace.steps);

  // Heads.
  auto head_grad = [&](const Dense& head, auto field, int width) {
    RowMatrix dy(T, width);
    for (Eigen::Index t = 0; t < T; ++t) {
      const auto& v = grads[t].*field;
      if (static_cast<int>(v.size()) != width) throw std::invalid_argument(head.weight.name + ": bad gradient width");
      for (int k = 0; k < width; ++k) dy(t, k) = v[k];
    }
    RowMatrix dh;
    head.backward(trace.hidden, dy, g(head.weight), g(head.bias), &dh);
    return dh;
  };
  RowMatrix dhidden = head_grad(action_head_, &HeadGrad::action_logits, c.actions);
  if (c.mode == NetMode::Spatial) {
    dhidden += head_grad(x_head_, &HeadGrad::x_logits, c.n);
    dhidden += head_grad(y_head_, &HeadGrad::y_logits, c.n);
  }
  {
    RowMatrix dv(T, 1);
    for (Eigen::Index t = 0; t < T; ++t) dv(t, 0) = grads[t].value;
    RowMatrix dh;
    value_head_.backward(trace.hidden, dv, g(value_head_.weight), g(value_head_.bias), &dh);
    dhidden += dh;
  }

  // Backpropagation through time.
  RowMatrix dfeatures(T, feature_width());
  Eigen::VectorXd dh_next = Eigen::VectorXd::Zero(c.lstm);
  Eigen::VectorXd dc_next = Eigen::VectorXd::Zero(c.lstm);
  Eigen::VectorXd dx, dh_prev, dc_prev;
  for (Eigen::Index t = T - 1; t >= 0; --t) {
    const Eigen::VectorXd dh = dhidden.row(t).transpose() + dh_next;
    lstm_.backward_step(trace.lstm[t], dh, dc_next, g(lstm_.wx), g(lstm_.wh), g(lstm_.bias), dx, dh_prev, dc_prev);
    dfeatures.row(t) = dx.transpose();
    if (trace.reset_before[t]) {
      dh_next.setZero();
      dc_next.setZero();
    } else {
      dh_next = dh_prev;
      dc_next = dc_prev;
    }
  }

  // Trunks.
  if (c.mode == NetMode::Vector) {
    RowMatrix d = dfeatures;
    tanh_backward(trace.vec_hidden, d);
    const RowMatrix x = stack_rows(trace.inputs, &NetInput::vector, c.input_dim);
    vec_dense_.backward(x, d, g(vec_dense_.weight), g(vec_dense_.bias), nullptr);
    return;
  }

  const int plane = c.n * c.n;
  const int P = c.trunk_projection;
  RowMatrix dns = dfeatures.rightCols(c.dense);
  tanh_backward(trace.ns_hidden, dns);
  ns_dense_.backward(stack_rows(trace.inputs, &NetInput::nonspatial, c.nonspatial), dns, g(ns_dense_.weight),
                     g(ns_dense_.bias), nullptr);

  auto trunk_backward = [&](const Dense& proj, const Conv2D& conv1, const Conv2D& conv2, const RowMatrix& proj_out,
                            const RowMatrix& flat_in, const std::vector<RowMatrix>& cols1,
                            const std::vector<RowMatrix>& y1, const std::vector<RowMatrix>& cols2,
                            const std::vector<RowMatrix>& y2, const RowMatrix& dproj_in) {
    RowMatrix dproj = dproj_in;
    relu_backward(proj_out, dproj);
    RowMatrix dflat;
    proj.backward(flat_in, dproj, g(proj.weight), g(proj.bias), &dflat);
    std::vector<double> da1(static_cast<std::size_t>(c.conv1_filters) * plane);
    for (Eigen::Index t = 0; t < T; ++t) {
      RowMatrix dy2 = Eigen::Map<const RowMatrix>(dflat.row(t).data(), c.conv2_filters, plane);
      relu_backward(y2[t], dy2);
      conv2.backward(cols2[t], dy2, g(conv2.weight), g(conv2.bias), da1);
      RowMatrix dy1 = Eigen::Map<const RowMatrix>(da1.data(), c.conv1_filters, plane);
      relu_backward(y1[t], dy1);
      conv1.backward(cols1[t], dy1, g(conv1.weight), g(conv1.bias), {});
    }
  };
  trunk_backward(mm_proj_, mm_conv1_, mm_conv2_, trace.mm_proj, trace.mm_flat, trace.mm_cols1, trace.mm_y1,
                 trace.mm_cols2, trace.mm_y2, dfeatures.leftCols(P));
  trunk_backward(sc_proj_, sc_conv1_, sc_conv2_, trace.sc_proj, trace.sc_flat, trace.sc_cols1, trace.sc_y1,
                 trace.sc_cols2, trace.sc_y2, dfeatures.middleCols(P, P));
}

}  // namespace c2::nn
