#include "c2/rl/a2c.hpp"

#include <cmath>
#include <stdexcept>
#include <utility>

#include "c2/nn/layers.hpp"
#include "c2/rl/returns.hpp"

namespace c2::rl {

namespace {

/// Adds scale * d(log softmax(logits)[k]) / d logits to `grad`.
void add_log_prob_grad(std::span<const double> probs, int k, double scale, std::vector<double>& grad) {
  for (std::size_t j = 0; j < probs.size(); ++j) {
    grad[j] += scale * ((static_cast<int>(j) == k ? 1.0 : 0.0) - probs[j]);
  }
}

/// Adds scale * dH / d logits; dH/dl_j = -p_j (log p_j + H).
void add_entropy_grad(std::span<const double> probs, double scale, std::vector<double>& grad) {
  const double h = nn::entropy(probs);
  for (std::size_t j = 0; j < probs.size(); ++j) {
    const double lp = probs[j] > 0.0 ? std::log(probs[j]) : 0.0;
    grad[j] += scale * (-probs[j] * (lp + h));
  }
}

double checked_log(const std::vector<double>& log_probs, int k, const char* head) {
  if (k < 0 || static_cast<std::size_t>(k) >= log_probs.size()) {
    throw std::out_of_range(std::string(head) + " choice out of range");
  }
  return log_probs[static_cast<std::size_t>(k)];
}

}  // namespace

bool uses_spatial_args(const nn::NetConfig& config, int action) {
  return config.mode == nn::NetMode::Spatial && action != 0;
}

double log_prob(const nn::NetConfig& config, const nn::HeadOutput& out, const Choice& choice) {
  double lp = checked_log(nn::log_softmax(out.action_logits), choice.action, "action");
  if (uses_spatial_args(config, choice.action)) {
    lp += checked_log(nn::log_softmax(out.x_logits), choice.x, "x");
    lp += checked_log(nn::log_softmax(out.y_logits), choice.y, "y");
  }
  return lp;
}

double policy_entropy(const nn::NetConfig& config, const nn::HeadOutput& out) {
  double h = nn::entropy(nn::softmax(out.action_logits));
  if (config.mode == nn::NetMode::Spatial) {
    h += nn::entropy(nn::softmax(out.x_logits));
    h += nn::entropy(nn::softmax(out.y_logits));
  }
  return h;
}

LossStats a2c_accumulate(const nn::PolicyNet& net, std::span<const Trajectory> batch, const A2CConfig& config,
                         nn::Gradients* grads) {
  const nn::NetConfig& nc = net.config();
  const bool spatial = nc.mode == nn::NetMode::Spatial;
  LossStats stats;
  for (const Trajectory& traj : batch) {
    const std::size_t T = traj.steps.size();
    if (T == 0) continue;
    std::vector<nn::NetInput> inputs;
    std::vector<std::uint8_t> resets, dones;
    std::vector<double> rewards, values;
    inputs.reserve(T);
    for (const Transition& tr : traj.steps) {
      inputs.push_back(tr.input);
      resets.push_back(tr.reset_before ? 1 : 0);
      dones.push_back(tr.done ? 1 : 0);
      rewards.push_back(tr.reward);
      values.push_back(tr.value);
    }
    const Returns ret = n_step_returns(rewards, values, dones, config.gamma, traj.bootstrap_value);

    nn::PolicyNet::Trace trace;
    const auto outputs = net.forward_sequence(inputs, traj.initial, resets, trace);
    std::vector<nn::HeadGrad> head_grads(T);
    for (std::size_t t = 0; t < T; ++t) {
      const nn::HeadOutput& out = outputs[t];
      const Choice& ch = traj.steps[t].choice;
      const double adv = ret.advantages[t];
      const double v_err = ret.returns[t] - out.value;

      const auto pa = nn::softmax(out.action_logits);
      stats.policy_loss -= log_prob(nc, out, ch) * adv;
      stats.value_loss += v_err * v_err;
      stats.entropy += policy_entropy(nc, out);
      ++stats.samples;
      if (!grads) continue;

      nn::HeadGrad& g = head_grads[t];
      g.action_logits.assign(pa.size(), 0.0);
      add_log_prob_grad(pa, ch.action, -adv, g.action_logits);
      add_entropy_grad(pa, -config.entropy_coef, g.action_logits);
      if (spatial) {
        const auto px = nn::softmax(out.x_logits);
        const auto py = nn::softmax(out.y_logits);
        g.x_logits.assign(px.size(), 0.0);
        g.y_logits.assign(py.size(), 0.0);
        if (uses_spatial_args(nc, ch.action)) {
          add_log_prob_grad(px, ch.x, -adv, g.x_logits);
          add_log_prob_grad(py, ch.y, -adv, g.y_logits);
        }
        add_entropy_grad(px, -config.entropy_coef, g.x_logits);
        add_entropy_grad(py, -config.entropy_coef, g.y_logits);
      }
      g.value = -2.0 * config.value_coef * v_err;
    }
    if (grads) net.backward_sequence(trace, head_grads, *grads);
  }
  stats.total = stats.policy_loss + config.value_coef * stats.value_loss - config.entropy_coef * stats.entropy;
  return stats;
}

void normalize(LossStats& sums, nn::Gradients& grads) {
  if (sums.samples == 0) return;
  const double inv = 1.0 / static_cast<double>(sums.samples);
  sums.policy_loss *= inv;
  sums.value_loss *= inv;
  sums.entropy *= inv;
  sums.total *= inv;
  for (auto& g : grads) {
    for (double& v : g.values()) v *= inv;
  }
}

LossStats a2c_loss(const nn::PolicyNet& net, std::span<const Trajectory> batch, const A2CConfig& config,
                   nn::Gradients* grads) {
  LossStats stats = a2c_accumulate(net, batch, config, grads);
  nn::Gradients none;
  normalize(stats, grads ? *grads : none);
  return stats;
}

LossStats apply_gradients(nn::PolicyNet& net, nn::RmsProp& optimizer, LossStats stats, const nn::Gradients& grads) {
  if (stats.samples == 0) {
    stats.message = "empty batch";
    return stats;
  }
  if (!std::isfinite(stats.total)) {
    stats.message = "non-finite loss; update skipped";
    return stats;
  }
  auto params = net.parameters();
  const nn::StepDiagnostic diag = optimizer.step(params, grads);
  stats.grad_norm = diag.grad_norm;
  stats.applied = diag.applied;
  if (!diag.applied) stats.message = diag.message + "; update skipped";
  return stats;
}

LossStats a2c_update(nn::PolicyNet& net, nn::RmsProp& optimizer, std::span<const Trajectory> batch,
                     const A2CConfig& config) {
  if (batch.empty()) throw std::invalid_argument("a2c_update needs a nonempty batch");
  nn::Gradients grads = nn::zeros_like(std::as_const(net).parameters());
  LossStats stats = a2c_loss(net, batch, config, &grads);
  return apply_gradients(net, optimizer, std::move(stats), grads);
}

}  // namespace c2::rl
