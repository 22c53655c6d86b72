#include "hardbench/mlp.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace hardbench {

void MlpConfig::validate() const {
  for (const std::size_t w : hidden_sizes)
    if (w < 1) throw std::invalid_argument("hidden layer widths must be >= 1");
  if (!(dropout_rate >= 0.0 && dropout_rate < 1.0)) throw std::invalid_argument("dropout rate must lie in [0, 1)");
}

Mlp::Mlp(const MlpConfig& config, std::size_t inputs, int classes)
    : config_(config), inputs_(inputs), classes_(classes) {
  config_.validate();
  if (inputs < 1) throw std::invalid_argument("model needs at least one input");
  if (classes < 2) throw std::invalid_argument("model needs at least two classes");

  std::vector<std::size_t> widths{inputs};
  widths.insert(widths.end(), config.hidden_sizes.begin(), config.hidden_sizes.end());
  widths.push_back(static_cast<std::size_t>(classes));

  CounterRng rng(config.seed, hash_name("mlp-init"));
  for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
    DenseLayer layer{Matrix(widths[l + 1], widths[l]), std::vector<double>(widths[l + 1], 0.0)};
    const double bound = std::sqrt(6.0 / static_cast<double>(widths[l]));
    for (double& w : layer.weights.values()) w = bound * (2.0 * rng.uniform() - 1.0);
    layers_.push_back(std::move(layer));
  }
}

std::size_t Mlp::num_parameters() const noexcept {
  std::size_t total = 0;
  for (const auto& layer : layers_) total += layer.weights.values().size() + layer.bias.size();
  return total;
}

std::size_t Mlp::embedding_width() const noexcept {
  return config_.hidden_sizes.empty() ? inputs_ : config_.hidden_sizes.back();
}

Gradients Mlp::zero_gradients() const {
  Gradients g;
  g.reserve(layers_.size());
  for (const auto& layer : layers_)
    g.push_back({Matrix(layer.weights.rows(), layer.weights.cols()), std::vector<double>(layer.bias.size(), 0.0)});
  return g;
}

Workspace::Workspace(const Mlp& model) {
  const auto& layers = model.layers();
  activations_.emplace_back(model.inputs());
  for (const auto& layer : layers) {
    activations_.emplace_back(layer.bias.size());
    pre_.emplace_back(layer.bias.size());
    mask_.emplace_back(layer.bias.size(), 1.0);
  }
  std::size_t widest = model.inputs();
  for (const auto& layer : layers) widest = std::max(widest, layer.bias.size());
  delta_.resize(widest);
  next_delta_.resize(widest);
}

void forward_sample(const Mlp& model, std::span<const double> x, Workspace& ws, CounterRng* dropout) {
  if (x.size() != model.inputs()) throw std::invalid_argument("input width does not match model");
  const auto& layers = model.layers();
  const double rate = model.config().dropout_rate;
  ws.dropout_used_ = dropout != nullptr && rate > 0.0;
  const double keep_scale = 1.0 / (1.0 - rate);

  std::copy(x.begin(), x.end(), ws.activations_[0].begin());
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const auto& layer = layers[l];
    const auto& in = ws.activations_[l];
    auto& pre = ws.pre_[l];
    auto& out = ws.activations_[l + 1];
    const bool hidden = l + 1 < layers.size();
    for (std::size_t o = 0; o < pre.size(); ++o) {
      const auto w = layer.weights.row(o);
      double z = layer.bias[o];
      for (std::size_t i = 0; i < in.size(); ++i) z += w[i] * in[i];
      pre[o] = z;
    }
    if (!hidden) {
      std::copy(pre.begin(), pre.end(), out.begin());
      continue;
    }
    auto& mask = ws.mask_[l];
    for (std::size_t o = 0; o < pre.size(); ++o) {
      mask[o] = ws.dropout_used_ ? (dropout->uniform() < rate ? 0.0 : keep_scale) : 1.0;
      out[o] = pre[o] > 0.0 ? pre[o] * mask[o] : 0.0;
    }
  }
}

void backward_sample(const Mlp& model, Workspace& ws, std::span<const double> dlogits, Gradients* grads,
                     double scale, std::span<double> dinput, double* grad_sq_norm) {
  const auto& layers = model.layers();
  std::copy(dlogits.begin(), dlogits.end(), ws.delta_.begin());
  double sq_norm = 0.0;

  for (std::size_t l = layers.size(); l-- > 0;) {
    const auto& layer = layers[l];
    const auto& in = ws.activations_[l];
    const std::size_t outputs = layer.bias.size();

    if (grad_sq_norm != nullptr) {
      // dW = delta a^T, so ||dW||^2 + ||db||^2 = ||delta||^2 (||a||^2 + 1).
      double delta_sq = 0.0;
      for (std::size_t o = 0; o < outputs; ++o) delta_sq += ws.delta_[o] * ws.delta_[o];
      double act_sq = 1.0;
      for (const double a : in) act_sq += a * a;
      sq_norm += delta_sq * act_sq;
    }
    if (grads != nullptr) {
      auto& g = (*grads)[l];
      for (std::size_t o = 0; o < outputs; ++o) {
        const double d = scale * ws.delta_[o];
        auto grow = g.weights.row(o);
        for (std::size_t i = 0; i < in.size(); ++i) grow[i] += d * in[i];
        g.bias[o] += d;
      }
    }
    if (l == 0 && dinput.empty()) break;

    // Propagate to the layer input.
    std::fill(ws.next_delta_.begin(), ws.next_delta_.begin() + static_cast<std::ptrdiff_t>(in.size()), 0.0);
    for (std::size_t o = 0; o < outputs; ++o) {
      const double d = ws.delta_[o];
      if (d == 0.0) continue;
      const auto w = layer.weights.row(o);
      for (std::size_t i = 0; i < in.size(); ++i) ws.next_delta_[i] += w[i] * d;
    }
    if (l == 0) {
      std::copy(ws.next_delta_.begin(), ws.next_delta_.begin() + static_cast<std::ptrdiff_t>(in.size()), dinput.begin());
      break;
    }
    const auto& pre = ws.pre_[l - 1];
    const auto& mask = ws.mask_[l - 1];
    for (std::size_t i = 0; i < in.size(); ++i) ws.delta_[i] = pre[i] > 0.0 ? ws.next_delta_[i] * mask[i] : 0.0;
  }
  if (grad_sq_norm != nullptr) *grad_sq_norm = sq_norm;
}

double softmax(std::span<const double> logits, std::span<double> probs) {
  const double top = *std::max_element(logits.begin(), logits.end());
  double total = 0.0;
  for (std::size_t c = 0; c < logits.size(); ++c) {
    probs[c] = std::exp(logits[c] - top);
    total += probs[c];
  }
  for (double& p : probs) p /= total;
  return top + std::log(total);
}

double cross_entropy(std::span<const double> logits, int label) {
  const double top = *std::max_element(logits.begin(), logits.end());
  double total = 0.0;
  for (const double z : logits) total += std::exp(z - top);
  return top + std::log(total) - logits[static_cast<std::size_t>(label)];
}

ForwardOutput forward(const Mlp& model, const Matrix& batch, bool dropout_active, std::uint64_t seed) {
  if (batch.cols() != model.inputs()) throw std::invalid_argument("forward: column count does not match model input");
  const auto k = static_cast<std::size_t>(model.classes());
  ForwardOutput out{Matrix(batch.rows(), k), Matrix(batch.rows(), k), Matrix(batch.rows(), model.embedding_width())};
  Workspace ws(model);
  for (std::size_t i = 0; i < batch.rows(); ++i) {
    CounterRng rng(seed, i);
    forward_sample(model, batch.row(i), ws, dropout_active ? &rng : nullptr);
    const auto z = ws.logits();
    std::copy(z.begin(), z.end(), out.logits.row(i).begin());
    softmax(z, out.probs.row(i));
    const auto e = ws.embedding();
    std::copy(e.begin(), e.end(), out.penultimate.row(i).begin());
  }
  return out;
}

namespace {

std::vector<double> softmax_error(std::span<const double> logits, int label) {
  std::vector<double> d(logits.size());
  softmax(logits, d);
  d[static_cast<std::size_t>(label)] -= 1.0;
  return d;
}

}  // namespace

Gradients loss_gradient(const Mlp& model, std::span<const double> x, int label) {
  Workspace ws(model);
  forward_sample(model, x, ws);
  const auto dlogits = softmax_error(ws.logits(), label);
  Gradients g = model.zero_gradients();
  backward_sample(model, ws, dlogits, &g, 1.0, {}, nullptr);
  return g;
}

double per_sample_grad_sq_norm(const Mlp& model, std::span<const double> x, int label) {
  Workspace ws(model);
  forward_sample(model, x, ws);
  const auto dlogits = softmax_error(ws.logits(), label);
  double sq = 0.0;
  backward_sample(model, ws, dlogits, nullptr, 1.0, {}, &sq);
  return sq;
}

std::vector<double> input_gradient(const Mlp& model, std::span<const double> x, int c) {
  if (c < 0 || c >= model.classes()) throw std::invalid_argument("input_gradient: class out of range");
  Workspace ws(model);
  forward_sample(model, x, ws);
  std::vector<double> seed(static_cast<std::size_t>(model.classes()), 0.0);
  seed[static_cast<std::size_t>(c)] = 1.0;
  std::vector<double> grad(model.inputs());
  backward_sample(model, ws, seed, nullptr, 1.0, grad, nullptr);
  return grad;
}

std::vector<double> flatten(const std::vector<DenseLayer>& layers) {
  std::vector<double> out;
  for (const auto& layer : layers) {
    out.insert(out.end(), layer.weights.values().begin(), layer.weights.values().end());
    out.insert(out.end(), layer.bias.begin(), layer.bias.end());
  }
  return out;
}

void unflatten(std::span<const double> values, std::vector<DenseLayer>& layers) {
  std::size_t pos = 0;
  for (auto& layer : layers) {
    for (double& w : layer.weights.values()) w = values[pos++];
    for (double& b : layer.bias) b = values[pos++];
  }
  if (pos != values.size()) throw std::invalid_argument("unflatten: parameter count mismatch");
}

}  // namespace hardbench
