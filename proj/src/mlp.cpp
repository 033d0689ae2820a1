#include "dqlab/mlp.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace dqlab {

Mlp::Mlp(std::vector<int> layer_sizes) : sizes_(std::move(layer_sizes)) {
  if (sizes_.size() < 2) throw ConfigError("Mlp: need at least input and output layers");
  for (int s : sizes_) {
    if (s <= 0) throw ConfigError("Mlp: layer sizes must be positive");
  }
  std::size_t total = 0;
  offsets_.reserve(sizes_.size() - 1);
  for (std::size_t l = 0; l + 1 < sizes_.size(); ++l) {
    offsets_.push_back(total);
    total += static_cast<std::size_t>(sizes_[l]) * sizes_[l + 1];  // weights
    total += static_cast<std::size_t>(sizes_[l + 1]);              // biases
  }
  params_.assign(total, 0.0);
}

std::size_t Mlp::weight_offset(int layer) const {
  return offsets_.at(static_cast<std::size_t>(layer));
}

std::size_t Mlp::bias_offset(int layer) const {
  const std::size_t l = static_cast<std::size_t>(layer);
  return offsets_.at(l) + static_cast<std::size_t>(sizes_[l]) * sizes_[l + 1];
}

std::vector<double> Mlp::forward(std::span<const double> input) const {
  Cache scratch;
  return forward_cached(input, scratch);
}

std::vector<double> Mlp::forward_cached(std::span<const double> input,
                                        Cache& cache) const {
  if (static_cast<int>(input.size()) != sizes_.front()) {
    throw UsageError("Mlp: input size " + std::to_string(input.size()) +
                     " does not match layer size " + std::to_string(sizes_.front()));
  }
  cache.activations.resize(sizes_.size());
  cache.activations[0].assign(input.begin(), input.end());

  for (std::size_t l = 0; l + 1 < sizes_.size(); ++l) {
    const int in_n = sizes_[l];
    const int out_n = sizes_[l + 1];
    const double* w = params_.data() + weight_offset(static_cast<int>(l));
    const double* b = params_.data() + bias_offset(static_cast<int>(l));
    const std::vector<double>& src = cache.activations[l];
    std::vector<double>& dst = cache.activations[l + 1];
    dst.assign(static_cast<std::size_t>(out_n), 0.0);
    const bool last = l + 2 == sizes_.size();

    int nz = 0;
    for (int i = 0; i < in_n; ++i) nz += src[static_cast<std::size_t>(i)] != 0.0;
    if (nz * 4 < in_n) {
      // Sparse inputs (one-hot grids): sum the active columns instead of
      // running the dense product.
      for (int o = 0; o < out_n; ++o) dst[static_cast<std::size_t>(o)] = b[o];
      for (int i = 0; i < in_n; ++i) {
        const double x = src[static_cast<std::size_t>(i)];
        if (x == 0.0) continue;
        const double* col = w + i;
        for (int o = 0; o < out_n; ++o) {
          dst[static_cast<std::size_t>(o)] += col[static_cast<std::size_t>(o) * in_n] * x;
        }
      }
      if (!last) {
        for (int o = 0; o < out_n; ++o) {
          double& z = dst[static_cast<std::size_t>(o)];
          z = z > 0.0 ? z : 0.0;
        }
      }
    } else {
      for (int o = 0; o < out_n; ++o) {
        double z = b[o];
        const double* row = w + static_cast<std::size_t>(o) * in_n;
        for (int i = 0; i < in_n; ++i) z += row[i] * src[static_cast<std::size_t>(i)];
        dst[static_cast<std::size_t>(o)] = last ? z : (z > 0.0 ? z : 0.0);
      }
    }
  }
  return cache.activations.back();
}

void Mlp::backward(const Cache& cache, std::span<const double> output_grad,
                   std::span<double> grad) const {
  if (grad.size() != params_.size()) throw UsageError("Mlp: gradient buffer size mismatch");
  if (cache.activations.size() != sizes_.size()) {
    throw UsageError("Mlp: cache does not match this network");
  }
  if (static_cast<int>(output_grad.size()) != sizes_.back()) {
    throw UsageError("Mlp: output gradient size mismatch");
  }

  std::vector<double> delta(output_grad.begin(), output_grad.end());
  for (std::size_t l = sizes_.size() - 1; l-- > 0;) {
    const int in_n = sizes_[l];
    const int out_n = sizes_[l + 1];
    const std::vector<double>& a_in = cache.activations[l];
    const double* w = params_.data() + weight_offset(static_cast<int>(l));
    double* gw = grad.data() + weight_offset(static_cast<int>(l));
    double* gb = grad.data() + bias_offset(static_cast<int>(l));

    int nz = 0;
    for (int i = 0; i < in_n; ++i) nz += a_in[static_cast<std::size_t>(i)] != 0.0;
    if (nz * 4 < in_n) {
      std::vector<int> active;
      active.reserve(static_cast<std::size_t>(nz));
      for (int i = 0; i < in_n; ++i) {
        if (a_in[static_cast<std::size_t>(i)] != 0.0) active.push_back(i);
      }
      for (int o = 0; o < out_n; ++o) {
        const double d = delta[static_cast<std::size_t>(o)];
        if (d == 0.0) continue;
        gb[o] += d;
        double* grow = gw + static_cast<std::size_t>(o) * in_n;
        for (int i : active) grow[i] += d * a_in[static_cast<std::size_t>(i)];
      }
    } else {
      for (int o = 0; o < out_n; ++o) {
        const double d = delta[static_cast<std::size_t>(o)];
        if (d == 0.0) continue;
        gb[o] += d;
        double* grow = gw + static_cast<std::size_t>(o) * in_n;
        for (int i = 0; i < in_n; ++i) grow[i] += d * a_in[static_cast<std::size_t>(i)];
      }
    }

    if (l == 0) break;
    std::vector<double> prev(static_cast<std::size_t>(in_n), 0.0);
    for (int o = 0; o < out_n; ++o) {
      const double d = delta[static_cast<std::size_t>(o)];
      if (d == 0.0) continue;
      const double* row = w + static_cast<std::size_t>(o) * in_n;
      for (int i = 0; i < in_n; ++i) prev[static_cast<std::size_t>(i)] += d * row[i];
    }
    // ReLU derivative through the hidden activation we are about to leave.
    for (int i = 0; i < in_n; ++i) {
      if (a_in[static_cast<std::size_t>(i)] <= 0.0) prev[static_cast<std::size_t>(i)] = 0.0;
    }
    delta = std::move(prev);
  }
}

void xavier_init(Mlp& net, RngStream& rng) {
  const std::vector<int>& sizes = net.layer_sizes();
  std::span<double> p = net.params();
  for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
    const int fan_in = sizes[l];
    const int fan_out = sizes[l + 1];
    const double bound = std::sqrt(6.0 / (fan_in + fan_out));
    double* w = p.data() + net.weight_offset(static_cast<int>(l));
    const std::size_t n_w = static_cast<std::size_t>(fan_in) * fan_out;
    for (std::size_t i = 0; i < n_w; ++i) w[i] = rng.uniform(-bound, bound);
    double* b = p.data() + net.bias_offset(static_cast<int>(l));
    for (int o = 0; o < fan_out; ++o) b[o] = 0.0;
  }
}

void adam_step(std::span<double> params, std::span<const double> grads,
               const AdamConfig& cfg, AdamState& state) {
  if (params.size() != grads.size() || params.size() != state.m.size()) {
    throw UsageError("adam_step: parameter/gradient/state size mismatch");
  }
  state.step += 1;
  const double b1t = std::pow(cfg.beta1, static_cast<double>(state.step));
  const double b2t = std::pow(cfg.beta2, static_cast<double>(state.step));
  const double b1 = cfg.beta1;
  const double b2 = cfg.beta2;
  const double inv1 = 1.0 / (1.0 - b1t);
  const double inv2 = 1.0 / (1.0 - b2t);
  const double lr = cfg.lr;
  const double eps = cfg.epsilon;
  double* __restrict p = params.data();
  const double* __restrict g = grads.data();
  double* __restrict m = state.m.data();
  double* __restrict v = state.v.data();
  const std::size_t n = params.size();
  for (std::size_t i = 0; i < n; ++i) {
    const double gi = g[i];
    m[i] = b1 * m[i] + (1.0 - b1) * gi;
    v[i] = b2 * v[i] + (1.0 - b2) * gi * gi;
    const double m_hat = m[i] * inv1;
    const double v_hat = v[i] * inv2;
    p[i] -= lr * m_hat / (std::sqrt(v_hat) + eps);
  }
}

MlpLearner::MlpLearner(std::vector<int> layer_sizes, AdamConfig cfg, double gamma)
    : net_(std::move(layer_sizes)), cfg_(cfg), opt_(net_.n_params()), gamma_(gamma) {
  if (net_.output_size() != kNumActions) {
    throw ConfigError("MlpLearner: output layer must have one unit per action");
  }
  if (gamma < 0.0 || gamma >= 1.0) throw ConfigError("MlpLearner: gamma must be in [0, 1)");
}

std::array<double, kNumActions> MlpLearner::q_values(std::span<const double> obs) const {
  const std::vector<double> out = net_.forward(obs);
  return {out[0], out[1], out[2], out[3]};
}

double MlpLearner::minibatch_update(std::span<const DenseSample> batch) {
  if (batch.empty()) throw UsageError("MlpLearner: empty minibatch");
  std::vector<double> boots(batch.size(), 0.0);
  for (std::size_t i = 0; i < batch.size(); ++i) {
    if (!batch[i].terminal) boots[i] = max_value(q_values(batch[i].next_obs));
  }
  return minibatch_update_toward(batch, boots);
}

double MlpLearner::minibatch_update_toward(std::span<const DenseSample> batch,
                                           std::span<const double> bootstraps) {
  if (batch.empty()) throw UsageError("MlpLearner: empty minibatch");
  if (bootstraps.size() != batch.size()) {
    throw UsageError("MlpLearner: bootstrap count does not match batch size");
  }

  // Freeze all targets against the pre-update weights, then accumulate.
  std::vector<double> targets(batch.size());
  for (std::size_t i = 0; i < batch.size(); ++i) {
    targets[i] = batch[i].terminal ? batch[i].reward
                                  : batch[i].reward + gamma_ * bootstraps[i];
  }

  std::vector<double> grad(net_.n_params(), 0.0);
  std::vector<double> out_grad(static_cast<std::size_t>(kNumActions));
  const double inv_n = 1.0 / static_cast<double>(batch.size());
  double loss = 0.0;
  Mlp::Cache cache;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const std::vector<double> q = net_.forward_cached(batch[i].obs, cache);
    const double err = q[action_index(batch[i].action)] - targets[i];
    loss += err * err;
    // d(err^2)/dq_a = 2 * err on the taken action, 0 elsewhere; average over batch.
    out_grad.assign(out_grad.size(), 0.0);
    out_grad[action_index(batch[i].action)] = 2.0 * err * inv_n;
    net_.backward(cache, out_grad, grad);
  }
  adam_step(net_.params(), grad, cfg_, opt_);
  ++updates_;
  if (!std::isfinite(loss)) throw NumericalError("MlpLearner: non-finite loss");
  return loss * inv_n;
}

}  // namespace dqlab
