#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "hardbench/matrix.hpp"
#include "hardbench/rng.hpp"

namespace hardbench {

struct MlpConfig {
  std::vector<std::size_t> hidden_sizes{32, 32};
  double dropout_rate = 0.1;  // applied to every hidden layer's output
  std::uint64_t seed = 0;

  void validate() const;
  bool operator==(const MlpConfig&) const = default;
};

/// Fully connected layer; weights are (outputs x inputs).
struct DenseLayer {
  Matrix weights;
  std::vector<double> bias;

  bool operator==(const DenseLayer&) const = default;
};

/// Gradient buffers share the layer layout of the model.
using Gradients = std::vector<DenseLayer>;

/// ReLU multilayer perceptron producing class logits.
class Mlp {
 public:
  Mlp() = default;
  /// He-uniform weights (bound sqrt(6 / fan_in)), zero biases.
  Mlp(const MlpConfig& config, std::size_t inputs, int classes);

  const MlpConfig& config() const noexcept { return config_; }
  std::size_t inputs() const noexcept { return inputs_; }
  int classes() const noexcept { return classes_; }
  std::size_t num_parameters() const noexcept;
  /// Width of the penultimate representation (inputs when there are no hidden layers).
  std::size_t embedding_width() const noexcept;

  std::vector<DenseLayer>& layers() noexcept { return layers_; }
  const std::vector<DenseLayer>& layers() const noexcept { return layers_; }

  Gradients zero_gradients() const;

  bool operator==(const Mlp&) const = default;

 private:
  MlpConfig config_;
  std::size_t inputs_ = 0;
  int classes_ = 0;
  std::vector<DenseLayer> layers_;
};

/// Scratch state for one sample's forward and backward pass. One workspace
/// per thread; contents are overwritten by each forward().
class Workspace {
 public:
  explicit Workspace(const Mlp& model);

  std::span<const double> logits() const noexcept { return activations_.back(); }
  /// Penultimate activations (the input itself for softmax regression).
  std::span<const double> embedding() const noexcept { return activations_[activations_.size() - 2]; }

 private:
  friend void forward_sample(const Mlp&, std::span<const double>, Workspace&, CounterRng*);
  friend void backward_sample(const Mlp&, Workspace&, std::span<const double>, Gradients*, double,
                              std::span<double>, double*);

  // activations_[0] is the input; activations_[l + 1] is layer l's output.
  std::vector<std::vector<double>> activations_;
  std::vector<std::vector<double>> pre_;
  std::vector<std::vector<double>> mask_;
  std::vector<double> delta_;
  std::vector<double> next_delta_;
  bool dropout_used_ = false;
};

/// Forward pass for one sample. Dropout masks are drawn from `dropout` when
/// it is non-null and the model's rate is positive.
void forward_sample(const Mlp& model, std::span<const double> x, Workspace& ws, CounterRng* dropout = nullptr);

/// Backpropagates `dlogits` (dLoss/dLogits) through the last forward_sample.
///  - grads, if non-null, accumulates scale * dLoss/dParams;
///  - dinput, if non-empty, receives dLoss/dInput;
///  - grad_sq_norm, if non-null, receives ||dLoss/dParams||^2.
void backward_sample(const Mlp& model, Workspace& ws, std::span<const double> dlogits, Gradients* grads,
                     double scale, std::span<double> dinput, double* grad_sq_norm);

/// Numerically stable softmax into `probs`; returns log-sum-exp of logits.
double softmax(std::span<const double> logits, std::span<double> probs);

/// Cross-entropy of the class `label` given logits (log-sum-exp form).
double cross_entropy(std::span<const double> logits, int label);

struct ForwardOutput {
  Matrix logits;
  Matrix probs;
  Matrix penultimate;
};

/// Batched forward. With dropout active, row i uses stream (seed, i).
ForwardOutput forward(const Mlp& model, const Matrix& batch, bool dropout_active, std::uint64_t seed);

/// Exact dLoss/dParams of the cross-entropy for one sample.
Gradients loss_gradient(const Mlp& model, std::span<const double> x, int label);

/// Squared Euclidean norm of the per-sample cross-entropy gradient over all parameters.
double per_sample_grad_sq_norm(const Mlp& model, std::span<const double> x, int label);

/// dz_c(x)/dx for the pre-softmax logit of class c.
std::vector<double> input_gradient(const Mlp& model, std::span<const double> x, int c);

/// Parameters in a fixed order (layer by layer, weights row-major, then bias).
std::vector<double> flatten(const std::vector<DenseLayer>& layers);
void unflatten(std::span<const double> values, std::vector<DenseLayer>& layers);

}  // namespace hardbench
