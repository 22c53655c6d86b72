#include "hardbench/hcm.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>

#include "hardbench/hardness.hpp"
#include "hardbench/metrics.hpp"
#include "hardbench/rng.hpp"

namespace hardbench {

namespace {

struct MethodInfo {
  Method method;
  std::string_view name;
  bool hard_is_low;
};

constexpr std::array<MethodInfo, 16> kMethods{{
    {Method::kAum, "aum", true},
    {Method::kDataIq, "dataiq", true},
    {Method::kDataIqAleatoric, "dataiq_aleatoric", false},
    {Method::kDataMaps, "datamaps", true},
    {Method::kDataMapsVariability, "datamaps_variability", false},
    {Method::kLoss, "loss", false},
    {Method::kGrand, "grand", false},
    {Method::kEl2n, "el2n", false},
    {Method::kVog, "vog", false},
    {Method::kForgetting, "forgetting", false},
    {Method::kPrototypicality, "prototypicality", false},
    {Method::kAllsh, "allsh", false},
    {Method::kAgreement, "agreement", true},
    {Method::kCleanlab, "cleanlab", true},
    {Method::kDetector, "detector", false},
    {Method::kRandom, "random", false},
}};

const MethodInfo& info(Method m) {
  for (const auto& i : kMethods)
    if (i.method == m) return i;
  throw std::invalid_argument("unknown method id");
}

void check_labels(const DynamicsRecord& dyn, std::span<const int> labels) {
  if (labels.size() != dyn.samples) throw std::invalid_argument("labels do not match the dynamics record");
  for (const int y : labels)
    if (y < 0 || static_cast<std::size_t>(y) >= dyn.classes) throw std::invalid_argument("label out of range");
}

void check_epochs(const DynamicsRecord& dyn) {
  if (dyn.epochs == 0) throw std::invalid_argument("dynamics record has no epochs");
}

double sigmoid(double z) {
  return z >= 0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z));
}

// Row order keyed by content, so retraining-based scorers do not depend on
// the order samples arrive in.
std::vector<std::size_t> canonical_order(const Dataset& ds) {
  std::vector<std::uint64_t> keys(ds.size());
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const auto row = ds.features.row(i);
    keys[i] = mix64(row_key(row.data(), row.size()) ^ static_cast<std::uint64_t>(ds.labels[i]));
  }
  std::vector<std::size_t> order(ds.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return keys[a] < keys[b]; });
  return order;
}

double log1p_exp(double z) { return z > 0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)); }

}  // namespace

std::string_view method_name(Method m) { return info(m).name; }

Method parse_method(std::string_view name) {
  for (const auto& i : kMethods)
    if (i.name == name) return i.method;
  throw std::invalid_argument("unknown method '" + std::string(name) + "'");
}

std::vector<Method> parse_methods(std::string_view text) {
  std::vector<Method> out;
  std::size_t start = 0;
  while (start <= text.size()) {
    const auto end = std::min(text.find(',', start), text.size());
    const auto token = text.substr(start, end - start);
    if (token.empty()) throw std::invalid_argument("empty method name in list");
    const Method m = parse_method(token);
    if (std::find(out.begin(), out.end(), m) != out.end())
      throw std::invalid_argument("method listed twice: " + std::string(token));
    out.push_back(m);
    start = end + 1;
  }
  return out;
}

const std::vector<Method>& default_methods() {
  static const std::vector<Method> methods{
      Method::kAum,        Method::kDataIq, Method::kDataMaps,        Method::kLoss,  Method::kGrand,
      Method::kEl2n,       Method::kVog,    Method::kForgetting,      Method::kPrototypicality,
      Method::kAllsh,      Method::kAgreement, Method::kCleanlab,     Method::kDetector,
  };
  return methods;
}

bool hard_is_low(Method m) { return info(m).hard_is_low; }

ScoreVector orient(Method method, std::vector<double> raw) {
  ScoreVector s;
  s.method = method;
  s.direction_flipped = hard_is_low(method);
  s.oriented.resize(raw.size());
  for (std::size_t i = 0; i < raw.size(); ++i) {
    if (!std::isfinite(raw[i]))
      throw std::runtime_error(std::string(method_name(method)) + ": non-finite score at sample " + std::to_string(i));
    s.oriented[i] = s.direction_flipped ? -raw[i] : raw[i];
  }
  s.raw = std::move(raw);
  return s;
}

ScoreVector orient(const ScoreVector& score) { return orient(score.method, score.raw); }

ScoreVector score_aum(const DynamicsRecord& dyn, std::span<const int> labels) {
  check_epochs(dyn);
  check_labels(dyn, labels);
  if (dyn.classes < 2) throw std::invalid_argument("aum needs at least two classes");
  std::vector<double> raw(dyn.samples, 0.0);
  for (std::size_t t = 0; t < dyn.epochs; ++t)
    for (std::size_t i = 0; i < dyn.samples; ++i) {
      const auto z = dyn.logits.at(t, i);
      const auto y = static_cast<std::size_t>(labels[i]);
      double other = -std::numeric_limits<double>::infinity();
      for (std::size_t c = 0; c < z.size(); ++c)
        if (c != y) other = std::max(other, z[c]);
      raw[i] += z[y] - other;
    }
  for (auto& v : raw) v /= static_cast<double>(dyn.epochs);
  return orient(Method::kAum, std::move(raw));
}

namespace {

// Mean and population variance over epochs of P_t(y_i).
void true_class_moments(const DynamicsRecord& dyn, std::span<const int> labels, std::vector<double>& mean,
                        std::vector<double>& aleatoric, std::vector<double>& variance) {
  check_epochs(dyn);
  check_labels(dyn, labels);
  const auto n = dyn.samples;
  const auto T = static_cast<double>(dyn.epochs);
  mean.assign(n, 0.0);
  aleatoric.assign(n, 0.0);
  variance.assign(n, 0.0);
  for (std::size_t t = 0; t < dyn.epochs; ++t)
    for (std::size_t i = 0; i < n; ++i) {
      const double p = dyn.probs(t, i, static_cast<std::size_t>(labels[i]));
      mean[i] += p;
      aleatoric[i] += p * (1.0 - p);
    }
  for (std::size_t i = 0; i < n; ++i) {
    mean[i] /= T;
    aleatoric[i] /= T;
  }
  for (std::size_t t = 0; t < dyn.epochs; ++t)
    for (std::size_t i = 0; i < n; ++i) {
      const double dev = dyn.probs(t, i, static_cast<std::size_t>(labels[i])) - mean[i];
      variance[i] += dev * dev;
    }
  for (auto& v : variance) v /= T;
}

}  // namespace

UncertaintyScores score_dataiq(const DynamicsRecord& dyn, std::span<const int> labels) {
  std::vector<double> mean, aleatoric, variance;
  true_class_moments(dyn, labels, mean, aleatoric, variance);
  return {orient(Method::kDataIq, std::move(mean)), orient(Method::kDataIqAleatoric, std::move(aleatoric))};
}

UncertaintyScores score_datamaps(const DynamicsRecord& dyn, std::span<const int> labels) {
  std::vector<double> mean, aleatoric, variance;
  true_class_moments(dyn, labels, mean, aleatoric, variance);
  for (auto& v : variance) v = std::sqrt(v);
  return {orient(Method::kDataMaps, std::move(mean)), orient(Method::kDataMapsVariability, std::move(variance))};
}

ScoreVector score_loss(const DynamicsRecord& dyn) {
  check_epochs(dyn);
  std::vector<double> raw(dyn.samples, 0.0);
  for (std::size_t t = 0; t < dyn.epochs; ++t)
    for (std::size_t i = 0; i < dyn.samples; ++i) raw[i] += dyn.losses(t, i);
  for (auto& v : raw) v /= static_cast<double>(dyn.epochs);
  return orient(Method::kLoss, std::move(raw));
}

ScoreVector score_grand(const DynamicsRecord& dyn) {
  check_epochs(dyn);
  if (dyn.grad_sq_norm.empty()) throw std::invalid_argument("grand: gradient norms were not recorded");
  std::vector<double> raw(dyn.samples, 0.0);
  for (std::size_t t = 0; t < dyn.epochs; ++t)
    for (std::size_t i = 0; i < dyn.samples; ++i) raw[i] += std::sqrt(dyn.grad_sq_norm(t, i));
  for (auto& v : raw) v /= static_cast<double>(dyn.epochs);
  return orient(Method::kGrand, std::move(raw));
}

ScoreVector score_el2n(const DynamicsRecord& dyn, std::span<const int> labels) {
  check_epochs(dyn);
  check_labels(dyn, labels);
  std::vector<double> raw(dyn.samples, 0.0);
  for (std::size_t t = 0; t < dyn.epochs; ++t)
    for (std::size_t i = 0; i < dyn.samples; ++i) {
      const auto p = dyn.probs.at(t, i);
      double sq = 0.0;
      for (std::size_t c = 0; c < p.size(); ++c) {
        const double e = p[c] - (c == static_cast<std::size_t>(labels[i]) ? 1.0 : 0.0);
        sq += e * e;
      }
      raw[i] += std::sqrt(sq);
    }
  for (auto& v : raw) v /= static_cast<double>(dyn.epochs);
  return orient(Method::kEl2n, std::move(raw));
}

ScoreVector score_vog(const DynamicsRecord& dyn) {
  const std::size_t K = dyn.input_grads.outer();
  if (K == 0) throw std::invalid_argument("vog: no input-gradient checkpoints were recorded");
  const std::size_t d = dyn.input_grads.inner();
  std::vector<double> raw(dyn.samples, 0.0);
  std::vector<double> mean(d);
  for (std::size_t i = 0; i < dyn.samples; ++i) {
    std::fill(mean.begin(), mean.end(), 0.0);
    for (std::size_t k = 0; k < K; ++k) {
      const auto g = dyn.input_grads.at(k, i);
      for (std::size_t j = 0; j < d; ++j) mean[j] += g[j];
    }
    for (auto& m : mean) m /= static_cast<double>(K);
    double total = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      double var = 0.0;
      for (std::size_t k = 0; k < K; ++k) {
        const double dev = dyn.input_grads(k, i, j) - mean[j];
        var += dev * dev;
      }
      total += std::sqrt(var / static_cast<double>(K));
    }
    raw[i] = d == 0 ? 0.0 : total / static_cast<double>(d);
  }
  return orient(Method::kVog, std::move(raw));
}

ScoreVector score_forgetting(const DynamicsRecord& dyn) {
  check_epochs(dyn);
  std::vector<double> raw(dyn.samples, 0.0);
  for (std::size_t i = 0; i < dyn.samples; ++i) {
    bool ever = dyn.is_correct(0, i);
    double events = 0.0;
    for (std::size_t t = 1; t < dyn.epochs; ++t) {
      if (dyn.is_correct(t - 1, i) && !dyn.is_correct(t, i)) events += 1.0;
      ever = ever || dyn.is_correct(t, i);
    }
    // Never learned ranks above every sample that was learned at least once.
    raw[i] = ever ? events : static_cast<double>(dyn.epochs) + 1.0;
  }
  return orient(Method::kForgetting, std::move(raw));
}

ScoreVector score_prototypicality(const DynamicsRecord& dyn, std::span<const int> labels, int num_classes,
                                  PrototypeDistance distance) {
  check_labels(dyn, labels);
  const auto& emb = dyn.embeddings;
  if (emb.rows() != dyn.samples) throw std::invalid_argument("prototypicality: embeddings were not recorded");
  const auto k = static_cast<std::size_t>(num_classes);
  const std::size_t w = emb.cols();
  Matrix centroids(k, w);
  std::vector<std::size_t> counts(k, 0);
  for (std::size_t i = 0; i < dyn.samples; ++i) {
    const auto y = static_cast<std::size_t>(labels[i]);
    if (y >= k) throw std::invalid_argument("prototypicality: label out of range");
    ++counts[y];
    const auto e = emb.row(i);
    for (std::size_t j = 0; j < w; ++j) centroids(y, j) += e[j];
  }
  for (std::size_t c = 0; c < k; ++c)
    if (counts[c] > 0)
      for (std::size_t j = 0; j < w; ++j) centroids(c, j) /= static_cast<double>(counts[c]);

  std::vector<double> raw(dyn.samples);
  for (std::size_t i = 0; i < dyn.samples; ++i) {
    const auto e = emb.row(i);
    const auto mu = centroids.row(static_cast<std::size_t>(labels[i]));
    if (distance == PrototypeDistance::kEuclidean) {
      double sq = 0.0;
      for (std::size_t j = 0; j < w; ++j) sq += (e[j] - mu[j]) * (e[j] - mu[j]);
      raw[i] = std::sqrt(sq);
    } else {
      double dot = 0.0, ne = 0.0, nm = 0.0;
      for (std::size_t j = 0; j < w; ++j) {
        dot += e[j] * mu[j];
        ne += e[j] * e[j];
        nm += mu[j] * mu[j];
      }
      // A zero vector has no direction; treat it as maximally far.
      raw[i] = (ne == 0.0 || nm == 0.0) ? 1.0 : 1.0 - dot / std::sqrt(ne * nm);
    }
  }
  return orient(Method::kPrototypicality, std::move(raw));
}

double kl_divergence(std::span<const double> p, std::span<const double> q) {
  if (p.size() != q.size()) throw std::invalid_argument("kl_divergence: size mismatch");
  double kl = 0.0;
  for (std::size_t c = 0; c < p.size(); ++c) {
    if (p[c] <= 0.0) continue;
    // Softmax outputs can underflow to zero; floor keeps the score finite.
    const double qc = std::max(q[c], std::numeric_limits<double>::min());
    kl += p[c] * (std::log(p[c]) - std::log(qc));
  }
  return std::max(kl, 0.0);
}

ScoreVector score_allsh(const Mlp& model, const Dataset& ds, double augment_sigma, std::uint64_t seed) {
  const std::size_t n = ds.size();
  const std::size_t d = ds.dims();
  Matrix augmented = ds.features;
  if (ds.grid) {
    const auto [h, w] = *ds.grid;
    for (std::size_t i = 0; i < n; ++i) {
      const auto src = ds.features.row(i);
      auto dst = augmented.row(i);
      for (std::size_t r = 0; r < h; ++r)
        for (std::size_t c = 0; c < w; ++c) dst[r * w + c] = src[r * w + (w - 1 - c)];
    }
  } else {
    if (!(augment_sigma > 0.0)) throw std::invalid_argument("allsh: augmentation sigma must be positive");
    for (std::size_t i = 0; i < n; ++i) {
      const auto src = ds.features.row(i);
      CounterRng rng(derive_seed(seed, "allsh", {row_key(src.data(), d)}));
      for (auto& v : augmented.row(i)) v += augment_sigma * rng.normal();
    }
  }
  const Matrix p = predict_proba(model, ds.features);
  const Matrix q = predict_proba(model, augmented);
  std::vector<double> raw(n);
  for (std::size_t i = 0; i < n; ++i) raw[i] = kl_divergence(p.row(i), q.row(i));
  return orient(Method::kAllsh, std::move(raw));
}

ScoreVector score_agreement(const Mlp& model, const Matrix& x, std::size_t passes, std::uint64_t seed) {
  const Tensor3 probs = mc_dropout_proba(model, x, passes, seed);
  std::vector<double> raw(x.rows(), 0.0);
  for (std::size_t p = 0; p < passes; ++p)
    for (std::size_t i = 0; i < x.rows(); ++i) {
      const auto row = probs.at(p, i);
      raw[i] += *std::max_element(row.begin(), row.end());
    }
  for (auto& v : raw) v /= static_cast<double>(passes);
  return orient(Method::kAgreement, std::move(raw));
}

ConfidentJoint confident_joint(const Matrix& probs, std::span<const int> labels, int num_classes) {
  const auto k = static_cast<std::size_t>(num_classes);
  if (probs.rows() != labels.size() || probs.cols() != k)
    throw std::invalid_argument("confident_joint: probabilities do not match labels");
  ConfidentJoint cj;
  cj.thresholds.assign(k, 0.0);
  std::vector<std::size_t> counts(k, 0);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const auto y = static_cast<std::size_t>(labels[i]);
    if (y >= k) throw std::invalid_argument("confident_joint: label out of range");
    cj.thresholds[y] += probs(i, y);
    ++counts[y];
  }
  for (std::size_t c = 0; c < k; ++c) {
    if (counts[c] == 0) throw std::invalid_argument("confident_joint: class " + std::to_string(c) + " has no samples");
    cj.thresholds[c] /= static_cast<double>(counts[c]);
  }
  cj.counts.assign(k, std::vector<std::size_t>(k, 0));
  for (std::size_t i = 0; i < labels.size(); ++i) {
    long best = -1;
    for (std::size_t c = 0; c < k; ++c)
      if (probs(i, c) >= cj.thresholds[c] && (best < 0 || probs(i, c) > probs(i, static_cast<std::size_t>(best))))
        best = static_cast<long>(c);
    if (best >= 0) ++cj.counts[static_cast<std::size_t>(labels[i])][static_cast<std::size_t>(best)];
  }
  return cj;
}

CleanlabResult score_cleanlab(const Dataset& input, const MlpConfig& model_config, const TrainConfig& train_config,
                              std::size_t folds, std::uint64_t seed) {
  const auto canon = canonical_order(input);
  const Dataset ds = subset(input, canon);
  if (folds < 2) throw std::invalid_argument("cleanlab: need at least two folds");
  const auto k = static_cast<std::size_t>(ds.num_classes);
  const auto counts = ds.class_counts();
  for (std::size_t c = 0; c < k; ++c)
    if (counts[c] < folds)
      throw std::invalid_argument("cleanlab: class " + std::to_string(c) + " has " + std::to_string(counts[c]) +
                                  " samples, fewer than " + std::to_string(folds) + " folds");

  std::vector<std::size_t> fold_of(ds.size());
  for (std::size_t c = 0; c < k; ++c) {
    std::vector<std::size_t> members;
    for (std::size_t i = 0; i < ds.size(); ++i)
      if (static_cast<std::size_t>(ds.labels[i]) == c) members.push_back(i);
    CounterRng rng(derive_seed(seed, "cleanlab-folds", {c}));
    for (std::size_t i = members.size(); i > 1; --i) std::swap(members[i - 1], members[rng.below(i)]);
    for (std::size_t j = 0; j < members.size(); ++j) fold_of[members[j]] = j % folds;
  }

  Matrix oos(ds.size(), k);
  for (std::size_t f = 0; f < folds; ++f) {
    std::vector<std::size_t> train_idx, held_idx;
    for (std::size_t i = 0; i < ds.size(); ++i) (fold_of[i] == f ? held_idx : train_idx).push_back(i);
    MlpConfig mc = model_config;
    mc.seed = derive_seed(seed, "cleanlab-model", {f});
    TrainConfig tc = train_config;
    tc.seed = derive_seed(seed, "cleanlab-train", {f});
    Mlp model(mc, ds.dims(), ds.num_classes);
    fit(model, subset(ds, train_idx), tc);
    const Matrix p = predict_proba(model, subset(ds, held_idx).features);
    for (std::size_t j = 0; j < held_idx.size(); ++j) std::copy(p.row(j).begin(), p.row(j).end(), oos.row(held_idx[j]).begin());
  }

  Matrix probs(ds.size(), k);
  for (std::size_t j = 0; j < canon.size(); ++j) std::copy(oos.row(j).begin(), oos.row(j).end(), probs.row(canon[j]).begin());
  std::vector<double> raw(ds.size());
  for (std::size_t i = 0; i < ds.size(); ++i) raw[i] = probs(i, static_cast<std::size_t>(input.labels[i]));
  CleanlabResult out{orient(Method::kCleanlab, std::move(raw)), confident_joint(probs, input.labels, input.num_classes),
                     probs};
  return out;
}

Matrix standardized_loss_curves(const Matrix& losses) {
  const std::size_t T = losses.rows();
  const std::size_t n = losses.cols();
  Matrix out(n, T);
  for (std::size_t t = 0; t < T; ++t) {
    double mean = 0.0;
    for (std::size_t i = 0; i < n; ++i) mean += losses(t, i);
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (std::size_t i = 0; i < n; ++i) var += (losses(t, i) - mean) * (losses(t, i) - mean);
    const double sd = std::sqrt(var / static_cast<double>(n));
    for (std::size_t i = 0; i < n; ++i) out(i, t) = sd > 1e-12 ? (losses(t, i) - mean) / sd : 0.0;
  }
  return out;
}

std::vector<double> fit_logistic(const Matrix& x, std::span<const std::uint8_t> y, double c) {
  if (x.rows() != y.size()) throw std::invalid_argument("fit_logistic: size mismatch");
  if (!(c > 0.0)) throw std::invalid_argument("fit_logistic: C must be positive");
  const auto n = static_cast<Eigen::Index>(x.rows());
  const auto p = static_cast<Eigen::Index>(x.cols()) + 1;
  Eigen::MatrixXd design(n, p);
  for (Eigen::Index i = 0; i < n; ++i) {
    design(i, 0) = 1.0;
    for (Eigen::Index j = 1; j < p; ++j) design(i, j) = x(static_cast<std::size_t>(i), static_cast<std::size_t>(j - 1));
  }
  Eigen::VectorXd target(n);
  for (Eigen::Index i = 0; i < n; ++i) target(i) = y[static_cast<std::size_t>(i)] ? 1.0 : 0.0;

  Eigen::VectorXd penalty = Eigen::VectorXd::Ones(p);
  penalty(0) = 0.0;
  auto objective = [&](const Eigen::VectorXd& w) {
    const Eigen::VectorXd z = design * w;
    double loss = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) loss += log1p_exp(z(i)) - target(i) * z(i);
    return 0.5 * w.tail(p - 1).squaredNorm() + c * loss;
  };

  Eigen::VectorXd w = Eigen::VectorXd::Zero(p);
  double f = objective(w);
  for (int iter = 0; iter < 100; ++iter) {
    const Eigen::VectorXd z = design * w;
    Eigen::VectorXd r(n), s(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      const double pi = sigmoid(z(i));
      r(i) = pi - target(i);
      s(i) = std::max(pi * (1.0 - pi), 1e-12);
    }
    Eigen::VectorXd grad = c * design.transpose() * r + penalty.cwiseProduct(w);
    Eigen::MatrixXd hess = c * design.transpose() * s.asDiagonal() * design;
    hess.diagonal() += penalty;
    hess.diagonal().array() += 1e-10;
    const Eigen::VectorXd step = hess.ldlt().solve(grad);
    double t = 1.0;
    Eigen::VectorXd next = w - step;
    double fn = objective(next);
    while (fn > f && t > 1e-8) {
      t *= 0.5;
      next = w - t * step;
      fn = objective(next);
    }
    const double change = (next - w).lpNorm<Eigen::Infinity>();
    w = next;
    f = fn;
    if (change < 1e-10 || grad.lpNorm<Eigen::Infinity>() < 1e-10) break;
  }
  return {w.data(), w.data() + p};
}

DetectorResult score_detector(const DynamicsRecord& dyn, const Dataset& input, const MlpConfig& model_config,
                              const TrainConfig& train_config, double inject_rate, double c, std::uint64_t seed) {
  if (!(inject_rate > 0.0 && inject_rate <= 0.2)) throw std::invalid_argument("detector: injection rate must be in (0, 0.2]");
  const Dataset ds = subset(input, canonical_order(input));
  if (dyn.samples != ds.size()) throw std::invalid_argument("detector: dynamics do not match the dataset");
  if (dyn.epochs != train_config.epochs)
    throw std::invalid_argument("detector: dynamics epochs differ from the training config");

  const FlagSet injected = select_flags(ds.size(), inject_rate, derive_seed(seed, "detector-flags"));
  if (injected.count == 0 || injected.count == ds.size())
    throw std::invalid_argument("detector: calibration set needs both injected and clean samples");
  Dataset calib = ds;
  calib.labels = mislabel_uniform(ds.labels, injected, ds.num_classes, derive_seed(seed, "detector-mislabel"));

  MlpConfig mc = model_config;
  mc.seed = derive_seed(seed, "detector-model");
  TrainConfig tc = train_config;
  tc.seed = derive_seed(seed, "detector-train");
  Mlp model(mc, ds.dims(), ds.num_classes);
  const DynamicsRecord calib_dyn = fit_with_recording(model, calib, tc, RecordOptions{false, false, 1});

  const Matrix calib_x = standardized_loss_curves(calib_dyn.losses);
  DetectorResult out;
  out.weights = fit_logistic(calib_x, injected.flags, c);

  auto apply = [&](const Matrix& x) {
    std::vector<double> prob(x.rows());
    for (std::size_t i = 0; i < x.rows(); ++i) {
      double z = out.weights[0];
      for (std::size_t j = 0; j < x.cols(); ++j) z += out.weights[j + 1] * x(i, j);
      prob[i] = sigmoid(z);
    }
    return prob;
  };
  out.calibration_auroc = auroc(apply(calib_x), injected.flags);
  out.score = orient(Method::kDetector, apply(standardized_loss_curves(dyn.losses)));
  return out;
}

ScoringOutput compute_scores(const ScoringContext& ctx, std::span<const Method> methods, const ScorerOptions& options,
                             std::uint64_t seed) {
  const auto& dyn = ctx.dynamics;
  const auto& labels = ctx.data.labels;
  ScoringOutput out;
  out.scores.reserve(methods.size());
  for (const Method m : methods) {
    const std::uint64_t s = derive_seed(seed, method_name(m));
    switch (m) {
      case Method::kAum: out.scores.push_back(score_aum(dyn, labels)); break;
      case Method::kDataIq: out.scores.push_back(score_dataiq(dyn, labels).confidence); break;
      case Method::kDataIqAleatoric: out.scores.push_back(score_dataiq(dyn, labels).uncertainty); break;
      case Method::kDataMaps: out.scores.push_back(score_datamaps(dyn, labels).confidence); break;
      case Method::kDataMapsVariability: out.scores.push_back(score_datamaps(dyn, labels).uncertainty); break;
      case Method::kLoss: out.scores.push_back(score_loss(dyn)); break;
      case Method::kGrand: out.scores.push_back(score_grand(dyn)); break;
      case Method::kEl2n: out.scores.push_back(score_el2n(dyn, labels)); break;
      case Method::kVog: out.scores.push_back(score_vog(dyn)); break;
      case Method::kForgetting: out.scores.push_back(score_forgetting(dyn)); break;
      case Method::kPrototypicality:
        out.scores.push_back(score_prototypicality(dyn, labels, ctx.data.num_classes, options.prototype_distance));
        break;
      case Method::kAllsh: out.scores.push_back(score_allsh(ctx.model, ctx.data, options.allsh_sigma, s)); break;
      case Method::kAgreement:
        out.scores.push_back(score_agreement(ctx.model, ctx.data.features, options.agreement_passes, s));
        break;
      case Method::kCleanlab: {
        auto r = score_cleanlab(ctx.data, ctx.model_config, ctx.train_config, options.cleanlab_folds, s);
        out.confident_joint = std::move(r.joint);
        out.scores.push_back(std::move(r.score));
        break;
      }
      case Method::kDetector: {
        auto r = score_detector(dyn, ctx.data, ctx.model_config, ctx.train_config, options.detector_rate,
                                options.detector_c, s);
        out.detector_calibration_auroc = r.calibration_auroc;
        out.scores.push_back(std::move(r.score));
        break;
      }
      case Method::kRandom: {
        std::vector<double> raw(ctx.data.size());
        for (std::size_t i = 0; i < raw.size(); ++i) {
          const auto row = ctx.data.features.row(i);
          raw[i] = CounterRng(s, row_key(row.data(), row.size())).uniform();
        }
        out.scores.push_back(orient(Method::kRandom, std::move(raw)));
        break;
      }
    }
  }
  return out;
}

}  // namespace hardbench
