#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "dqlab/core.hpp"
#include "dqlab/rng.hpp"

namespace dqlab {

// Fully connected ReLU network with an identity output layer. Parameters
// live in one flat vector (per layer: weights row-major [out x in], then
// biases) so the optimizer can treat the whole net as a single vector.
class Mlp {
 public:
  explicit Mlp(std::vector<int> layer_sizes);

  const std::vector<int>& layer_sizes() const { return sizes_; }
  int input_size() const { return sizes_.front(); }
  int output_size() const { return sizes_.back(); }
  std::size_t n_params() const { return params_.size(); }

  std::span<double> params() { return params_; }
  std::span<const double> params() const { return params_; }

  std::vector<double> forward(std::span<const double> input) const;

  // Post-activation values for every layer, input included. Layout matches
  // layer_sizes(); backward() consumes this to avoid recomputing the pass.
  struct Cache {
    std::vector<std::vector<double>> activations;
  };
  std::vector<double> forward_cached(std::span<const double> input, Cache& cache) const;

  // Accumulates dLoss/dParams into grad (same layout as params()) given
  // dLoss/dOutput. grad must be zeroed by the caller if accumulation
  // across samples is not wanted.
  void backward(const Cache& cache, std::span<const double> output_grad,
                std::span<double> grad) const;

  // Offset of layer l's weight block in the flat parameter vector.
  std::size_t weight_offset(int layer) const;
  std::size_t bias_offset(int layer) const;

 private:
  std::vector<int> sizes_;
  std::vector<double> params_;
  std::vector<std::size_t> offsets_;  // per layer: start of weight block
};

// Uniform Xavier/Glorot init: W ~ U(-b, b) with b = sqrt(6 / (fan_in + fan_out)),
// biases zero. Draw order is fixed (layers in order, weights then biases).
void xavier_init(Mlp& net, RngStream& rng);

struct AdamConfig {
  double lr = 2.5e-5;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct AdamState {
  std::vector<double> m;
  std::vector<double> v;
  std::uint64_t step = 0;

  explicit AdamState(std::size_t n) : m(n, 0.0), v(n, 0.0) {}
};

// One Adam update. theta -= lr * m_hat / (sqrt(v_hat) + epsilon).
void adam_step(std::span<double> params, std::span<const double> grads,
               const AdamConfig& cfg, AdamState& state);

// Sample for network training: a one-hot (or otherwise dense) observation.
struct DenseSample {
  std::vector<double> obs;
  Action action = Action::Up;
  double reward = 0.0;
  std::vector<double> next_obs;
  bool terminal = false;
};

// Q-learning on top of an Mlp: squared TD error on the taken action only,
// targets computed from the current network before any weight changes
// (no separate target network).
class MlpLearner {
 public:
  MlpLearner(std::vector<int> layer_sizes, AdamConfig cfg, double gamma);

  Mlp& net() { return net_; }
  const Mlp& net() const { return net_; }
  double gamma() const { return gamma_; }
  const AdamConfig& adam_config() const { return cfg_; }
  std::uint64_t update_count() const { return updates_; }

  std::array<double, kNumActions> q_values(std::span<const double> obs) const;

  // Mean squared TD error over the batch (before the step). Gradients are
  // averaged across the batch, then one Adam step is applied.
  double minibatch_update(std::span<const DenseSample> batch);

  // Variant with caller-supplied bootstrap values (one per sample), used by
  // the decomposed joint-greedy rule.
  double minibatch_update_toward(std::span<const DenseSample> batch,
                                 std::span<const double> bootstraps);

 private:
  Mlp net_;
  AdamConfig cfg_;
  AdamState opt_;
  double gamma_;
  std::uint64_t updates_ = 0;
};

}  // namespace dqlab
