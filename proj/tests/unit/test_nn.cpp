#include <cmath>
#include <numeric>

#include "doctest.h"

#include "c2/nn/checkpoint.hpp"
#include "c2/nn/grad_check.hpp"
#include "c2/nn/layers.hpp"
#include "c2/nn/optimizer.hpp"
#include "c2/nn/policy_net.hpp"

using namespace c2;
using namespace c2::nn;

namespace {

Parameter& param(PolicyNet& net, const std::string& name) {
  for (Parameter* p : net.parameters()) {
    if (p->name == name) return *p;
  }
  throw std::out_of_range(name);
}

void randomize(PolicyNet& net, std::uint64_t seed, double scale) {
  Rng rng(seed);
  for (Parameter* p : net.parameters()) {
    for (double& v : p->value.values()) v = rng.uniform(-scale, scale);
  }
}

NetInput random_input(const NetConfig& c, Rng& rng) {
  NetInput in;
  auto fill = [&](std::vector<double>& v, int n) {
    v.resize(static_cast<std::size_t>(n));
    for (double& x : v) x = rng.uniform();
  };
  if (c.mode == NetMode::Vector) {
    fill(in.vector, c.input_dim);
  } else {
    fill(in.minimap, c.minimap_layers * c.n * c.n);
    fill(in.screen, c.screen_layers * c.n * c.n);
    fill(in.nonspatial, c.nonspatial);
  }
  return in;
}

NetConfig small_spatial() {
  NetConfig c = NetConfig::spatial_default(4);
  c.minimap_layers = 2;
  c.screen_layers = 3;
  c.nonspatial = 3;
  c.conv1_filters = 2;
  c.conv1_kernel = 3;
  c.conv2_filters = 2;
  c.conv2_kernel = 3;
  c.trunk_projection = 4;
  c.dense = 3;
  c.lstm = 5;
  return c;
}

// Loss = sum over time of fixed random projections of every head output.
struct SequenceLoss {
  std::vector<NetInput> inputs;
  std::vector<std::uint8_t> resets;
  std::vector<HeadGrad> coeffs;

  double operator()(const PolicyNet& net) const {
    PolicyNet::Trace trace;
    const auto out = net.forward_sequence(inputs, net.initial_state(), resets, trace);
    double loss = 0.0;
    for (std::size_t t = 0; t < out.size(); ++t) {
      loss += std::inner_product(out[t].action_logits.begin(), out[t].action_logits.end(),
                                 coeffs[t].action_logits.begin(), 0.0);
      loss += std::inner_product(out[t].x_logits.begin(), out[t].x_logits.end(), coeffs[t].x_logits.begin(), 0.0);
      loss += std::inner_product(out[t].y_logits.begin(), out[t].y_logits.end(), coeffs[t].y_logits.begin(), 0.0);
      loss += out[t].value * coeffs[t].value;
    }
    return loss;
  }
};

SequenceLoss make_loss(const NetConfig& c, std::size_t steps, std::uint64_t seed) {
  Rng rng(seed);
  SequenceLoss l;
  for (std::size_t t = 0; t < steps; ++t) {
    l.inputs.push_back(random_input(c, rng));
    l.resets.push_back(t == 3 ? 1 : 0);
    HeadGrad g;
    g.action_logits.resize(static_cast<std::size_t>(c.actions));
    for (double& v : g.action_logits) v = rng.uniform(-1.0, 1.0);
    if (c.mode == NetMode::Spatial) {
      g.x_logits.resize(static_cast<std::size_t>(c.n));
      g.y_logits.resize(static_cast<std::size_t>(c.n));
      for (double& v : g.x_logits) v = rng.uniform(-1.0, 1.0);
      for (double& v : g.y_logits) v = rng.uniform(-1.0, 1.0);
    }
    g.value = rng.uniform(-1.0, 1.0);
    l.coeffs.push_back(std::move(g));
  }
  return l;
}

GradCheckResult check_net(PolicyNet& net, const SequenceLoss& loss, std::size_t samples) {
  PolicyNet::Trace trace;
  net.forward_sequence(loss.inputs, net.initial_state(), loss.resets, trace);
  auto params = net.parameters();
  Gradients grads = zeros_like(std::span<const Parameter* const>(
      std::vector<const Parameter*>(params.begin(), params.end())));
  net.backward_sequence(trace, loss.coeffs, grads);
  GradCheckOptions opt;
  opt.samples_per_tensor = samples;
  return grad_check(params, grads, [&] { return loss(net); }, opt);
}

double sig(double x) { return 1.0 / (1.0 + std::exp(-x)); }

}  // namespace

TEST_CASE("softmax, log-softmax and entropy") {
  const std::vector<double> logits = {1.0, -2.0, 0.5, 3.0, 1000.0};
  const auto p = softmax(logits);
  CHECK(std::accumulate(p.begin(), p.end(), 0.0) == doctest::Approx(1.0).epsilon(1e-12));
  const auto lp = log_softmax(logits);
  for (std::size_t i = 0; i < p.size(); ++i) CHECK(std::isfinite(lp[i]));
  const std::vector<double> small = {0.2, -0.4, 1.1};
  const auto ps = softmax(small);
  const auto lps = log_softmax(small);
  for (std::size_t i = 0; i < ps.size(); ++i) CHECK(std::exp(lps[i]) == doctest::Approx(ps[i]).epsilon(1e-12));
  const std::vector<double> uniform(12, 1.0 / 12.0);
  CHECK(entropy(uniform) == doctest::Approx(std::log(12.0)).epsilon(1e-12));
  CHECK(entropy(std::vector<double>{1.0, 0.0, 0.0}) == 0.0);
}

TEST_CASE("all-zero weights give uniform policies and zero value") {
  for (NetConfig c : {NetConfig::vector_default(), small_spatial()}) {
    PolicyNet net(c, 3);
    for (Parameter* p : net.parameters()) p->value.fill(0.0);
    Rng rng(5);
    auto state = net.initial_state();
    const auto out = net.step(random_input(c, rng), state);
    for (double v : softmax(out.action_logits)) CHECK(v == doctest::Approx(1.0 / c.actions).epsilon(1e-12));
    for (double v : softmax(out.x_logits)) CHECK(v == doctest::Approx(1.0 / c.n).epsilon(1e-12));
    CHECK(out.value == 0.0);
  }
}

TEST_CASE("a tiny hand-set network matches a scalar recomputation") {
  NetConfig c;
  c.input_dim = 4;
  c.dense = 2;
  c.lstm = 2;
  c.actions = 3;
  PolicyNet net(c, 1);
  randomize(net, 77, 0.8);
  const std::vector<std::vector<double>> xs = {{0.1, 0.9, -0.3, 0.5}, {0.7, -0.2, 0.0, 0.4}};

  const auto& w1 = param(net, "trunk.dense.weight").value;
  const auto& b1 = param(net, "trunk.dense.bias").value;
  const auto& wx = param(net, "lstm.wx").value;
  const auto& wh = param(net, "lstm.wh").value;
  const auto& bl = param(net, "lstm.bias").value;
  const auto& wa = param(net, "head.action.weight").value;
  const auto& ba = param(net, "head.action.bias").value;
  const auto& wv = param(net, "head.value.weight").value;
  const auto& bv = param(net, "head.value.bias").value;

  double h[2] = {0, 0}, cell[2] = {0, 0};
  auto state = net.initial_state();
  for (const auto& x : xs) {
    double a[2];
    for (int j = 0; j < 2; ++j) {
      double s = b1[j];
      for (int k = 0; k < 4; ++k) s += w1[j * 4 + k] * x[k];
      a[j] = std::tanh(s);
    }
    double z[8];
    for (int r = 0; r < 8; ++r) {
      z[r] = bl[r];
      for (int k = 0; k < 2; ++k) z[r] += wx[r * 2 + k] * a[k] + wh[r * 2 + k] * h[k];
    }
    for (int j = 0; j < 2; ++j) {
      const double i = sig(z[j]), f = sig(z[2 + j]), g = std::tanh(z[4 + j]), o = sig(z[6 + j]);
      cell[j] = f * cell[j] + i * g;
      h[j] = o * std::tanh(cell[j]);
    }
    NetInput in;
    in.vector = x;
    const auto out = net.step(in, state);
    for (int q = 0; q < 3; ++q) {
      const double logit = ba[q] + wa[q * 2] * h[0] + wa[q * 2 + 1] * h[1];
      CHECK(std::abs(out.action_logits[q] - logit) < 1e-9);
    }
    CHECK(std::abs(out.value - (bv[0] + wv[0] * h[0] + wv[1] * h[1])) < 1e-9);
  }
}

TEST_CASE("dense backward is the outer product") {
  Dense d("d", 3, 2);
  Rng rng(4);
  d.init(rng);
  RowMatrix x(1, 3);
  x << 0.5, -1.0, 2.0;
  RowMatrix g(1, 2);
  g << 0.3, -0.7;
  Tensor dw({2, 3}), db({2});
  RowMatrix dx;
  d.backward(x, g, dw, db, &dx);
  for (int r = 0; r < 2; ++r) {
    for (int c = 0; c < 3; ++c) CHECK(dw[r * 3 + c] == doctest::Approx(g(0, r) * x(0, c)).epsilon(1e-14));
    CHECK(db[r] == doctest::Approx(g(0, r)));
  }
  Tensor zw({2, 3}), zb({2});
  d.backward(x, RowMatrix::Zero(1, 2), zw, zb, &dx);
  CHECK(zw == Tensor({2, 3}));
  CHECK(dx.isZero(0.0));
}

TEST_CASE("gradient checks") {
  SUBCASE("linear layer") {
    Dense d("lin", 4, 3);
    Rng rng(8);
    d.init(rng);
    RowMatrix x(2, 4);
    for (int i = 0; i < x.size(); ++i) x.data()[i] = rng.uniform(-1.0, 1.0);
    RowMatrix coef(2, 3);
    for (int i = 0; i < coef.size(); ++i) coef.data()[i] = rng.uniform(-1.0, 1.0);
    auto loss = [&] {
      RowMatrix y;
      d.forward(x, y);
      return (y.array() * coef.array()).sum();
    };
    Gradients g = {Tensor({3, 4}), Tensor({3})};
    d.backward(x, coef, g[0], g[1], nullptr);
    std::vector<Parameter*> ps = {&d.weight, &d.bias};
    CHECK(grad_check(ps, g, loss).max_relative_error < 1e-7);
  }
  SUBCASE("convolution") {
    Conv2D conv("conv", 2, 3, 3, 4, 5);
    Rng rng(9);
    conv.init(rng);
    for (double& b : conv.bias.value.values()) b = rng.uniform(-0.5, 0.5);
    std::vector<double> x(2 * 4 * 5);
    for (double& v : x) v = rng.uniform(-1.0, 1.0);
    RowMatrix coef(3, 20);
    for (int i = 0; i < coef.size(); ++i) coef.data()[i] = rng.uniform(-1.0, 1.0);
    auto loss = [&] {
      RowMatrix cols, y;
      conv.forward(x, cols, y);
      return (y.array() * coef.array()).sum();
    };
    RowMatrix cols, y;
    conv.forward(x, cols, y);
    Gradients g = {Tensor({3, 18}), Tensor({3})};
    std::vector<double> dx(x.size());
    conv.backward(cols, coef, g[0], g[1], dx);
    std::vector<Parameter*> ps = {&conv.weight, &conv.bias};
    CHECK(grad_check(ps, g, loss).max_relative_error < 1e-4);
    // Input gradient by central differences.
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double keep = x[i];
      x[i] = keep + 1e-5;
      const double up = loss();
      x[i] = keep - 1e-5;
      const double down = loss();
      x[i] = keep;
      CHECK(dx[i] == doctest::Approx((up - down) / 2e-5).epsilon(1e-6));
    }
  }
  SUBCASE("LSTM over three steps") {
    Lstm cell("cell", 3, 4);
    Rng rng(10);
    cell.init(rng);
    std::vector<Eigen::VectorXd> xs(3, Eigen::VectorXd(3));
    for (auto& x : xs) {
      for (int i = 0; i < 3; ++i) x[i] = rng.uniform(-1.0, 1.0);
    }
    Eigen::VectorXd coef(4);
    for (int i = 0; i < 4; ++i) coef[i] = rng.uniform(-1.0, 1.0);
    auto run = [&](std::vector<Lstm::StepCache>* caches) {
      Eigen::VectorXd h = Eigen::VectorXd::Zero(4), c = Eigen::VectorXd::Zero(4);
      double loss = 0.0;
      for (const auto& x : xs) {
        Lstm::StepCache cache;
        cell.step(x, h, c, caches ? &cache : nullptr);
        if (caches) caches->push_back(cache);
        loss += coef.dot(h);
      }
      return loss;
    };
    std::vector<Lstm::StepCache> caches;
    run(&caches);
    Gradients g = {Tensor({16, 3}), Tensor({16, 4}), Tensor({16})};
    Eigen::VectorXd dh_next = Eigen::VectorXd::Zero(4), dc_next = Eigen::VectorXd::Zero(4);
    for (int t = 2; t >= 0; --t) {
      Eigen::VectorXd dx, dh_prev, dc_prev;
      const Eigen::VectorXd dh = coef + dh_next;
      cell.backward_step(caches[t], dh, dc_next, g[0], g[1], g[2], dx, dh_prev, dc_prev);
      dh_next = dh_prev;
      dc_next = dc_prev;
    }
    std::vector<Parameter*> ps = {&cell.wx, &cell.wh, &cell.bias};
    CHECK(grad_check(ps, g, [&] { return run(nullptr); }).max_relative_error < 1e-4);
  }
  SUBCASE("full vector network with a mid-sequence reset") {
    NetConfig c;
    c.input_dim = 5;
    c.dense = 6;
    c.lstm = 7;
    c.actions = 4;
    PolicyNet net(c, 11);
    const auto loss = make_loss(c, 6, 12);
    CHECK(check_net(net, loss, 0).max_relative_error < 1e-4);
  }
  SUBCASE("full spatial network") {
    const NetConfig c = small_spatial();
    PolicyNet net(c, 13);
    // Non-zero biases keep pre-activations away from the ReLU kink.
    Rng rng(14);
    for (Parameter* p : net.parameters()) {
      if (p->name.ends_with(".bias")) {
        for (double& v : p->value.values()) v = rng.uniform(-0.3, 0.3);
      }
    }
    const auto loss = make_loss(c, 5, 15);
    const auto r = check_net(net, loss, 40);
    CHECK_MESSAGE(r.max_relative_error < 1e-4, r.worst_parameter);
  }
}

TEST_CASE("RMSProp") {
  Parameter p{"p", Tensor({1})};
  std::vector<Parameter*> ps = {&p};
  std::vector<const Parameter*> cps = {&p};

  SUBCASE("zero gradients leave parameters unchanged") {
    p.value[0] = 1.5;
    RmsProp opt({}, cps);
    const auto d = opt.step(ps, {Tensor({1})});
    CHECK(d.applied);
    CHECK(p.value[0] == 1.5);
  }
  SUBCASE("the global norm is clipped to 40") {
    Gradients g = {Tensor({2}, 0.0)};
    g[0][0] = 60.0;
    g[0][1] = 80.0;
    CHECK(clip_global_norm(g, 40.0) == doctest::Approx(100.0));
    CHECK(global_norm(g) == doctest::Approx(40.0));
    CHECK(g[0][0] == doctest::Approx(24.0));
    RmsProp opt({}, cps);
    const auto d = opt.step(ps, {Tensor({1}, 100.0)});
    CHECK(d.grad_norm == doctest::Approx(100.0));
    CHECK(d.applied_norm == doctest::Approx(40.0));
  }
  SUBCASE("minimizes a quadratic") {
    p.value[0] = 0.0;
    RmsProp opt({.learning_rate = 0.05}, cps);
    for (int i = 0; i < 200; ++i) opt.step(ps, {Tensor({1}, 2.0 * (p.value[0] - 3.0))});
    CHECK(std::abs(p.value[0] - 3.0) < 1e-3);
  }
  SUBCASE("non-finite gradients are rejected without side effects") {
    p.value[0] = 2.0;
    RmsProp opt({}, cps);
    const auto before = opt.state();
    const auto d = opt.step(ps, {Tensor({1}, std::nan(""))});
    CHECK_FALSE(d.applied);
    CHECK_FALSE(d.message.empty());
    CHECK(p.value[0] == 2.0);
    CHECK(opt.state() == before);
  }
}

TEST_CASE("forward passes are bit-deterministic") {
  for (NetConfig c : {NetConfig::vector_default(), small_spatial()}) {
    PolicyNet a(c, 21), b(c, 21);
    Rng rng(22);
    const auto in = random_input(c, rng);
    auto sa = a.initial_state();
    auto sb = b.initial_state();
    for (int t = 0; t < 5; ++t) {
      const auto oa = a.step(in, sa);
      const auto ob = b.step(in, sb);
      CHECK(oa.action_logits == ob.action_logits);
      CHECK(oa.value == ob.value);
    }
    PolicyNet other(c, 23);
    CHECK(other.parameters()[0]->value != a.parameters()[0]->value);
  }
}

TEST_CASE("checkpoints round-trip exactly") {
  for (NetConfig c : {NetConfig::vector_default(), small_spatial()}) {
    PolicyNet net(c, 31);
    auto params = net.parameters();
    std::vector<const Parameter*> cps(params.begin(), params.end());
    RmsProp opt({}, cps);
    Gradients g = zeros_like(cps);
    for (auto& t : g) t.fill(0.01);
    opt.step(params, g);

    auto ck = make_checkpoint(net, &opt, 1234);
    ck.metadata["note"] = "round trip";
    const auto back = decode_checkpoint(encode_checkpoint(ck));
    CHECK(back.config == c);
    CHECK(back.step == 1234);
    CHECK(back.optimizer == opt.state());
    CHECK(back.metadata == ck.metadata);
    CHECK(checkpoint_hash(back) == checkpoint_hash(ck));
    const PolicyNet restored = restore_net(back);
    const auto rp = restored.parameters();
    for (std::size_t i = 0; i < rp.size(); ++i) CHECK(rp[i]->value == cps[i]->value);

    const std::string bytes = encode_checkpoint(ck);
    CHECK_THROWS_AS(decode_checkpoint(bytes.substr(0, bytes.size() - 3)), CheckpointError);
    CHECK_THROWS_AS(decode_checkpoint("JUNKJUNKJUNKJUNK"), CheckpointError);
  }
}
