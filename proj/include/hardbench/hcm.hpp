#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "hardbench/data.hpp"
#include "hardbench/matrix.hpp"
#include "hardbench/mlp.hpp"
#include "hardbench/trainer.hpp"

namespace hardbench {

/// Hardness characterization methods. DataIQ and DataMaps name the
/// confidence-based score of each method; their uncertainty companions have
/// their own identifiers. Random is a reference baseline, not an HCM.
enum class Method {
  kAum,
  kDataIq,
  kDataIqAleatoric,
  kDataMaps,
  kDataMapsVariability,
  kLoss,
  kGrand,
  kEl2n,
  kVog,
  kForgetting,
  kPrototypicality,
  kAllsh,
  kAgreement,
  kCleanlab,
  kDetector,
  kRandom,
};

std::string_view method_name(Method m);
/// Throws std::invalid_argument for unknown names.
Method parse_method(std::string_view name);
std::vector<Method> parse_methods(std::string_view comma_separated);
/// The thirteen HCMs in reporting order.
const std::vector<Method>& default_methods();
/// True where low raw scores indicate hard samples.
bool hard_is_low(Method m);

struct ScoreVector {
  Method method = Method::kLoss;
  std::vector<double> raw;
  std::vector<double> oriented;  // larger = harder
  bool direction_flipped = false;
};

/// Builds the oriented field from raw according to the direction table.
ScoreVector orient(Method method, std::vector<double> raw);
/// Recomputes orientation from `score.raw`; idempotent.
ScoreVector orient(const ScoreVector& score);

struct ConfidentJoint {
  std::vector<std::vector<std::size_t>> counts;  // [given][confident]
  std::vector<double> thresholds;                // per class t_j
};

enum class PrototypeDistance { kEuclidean, kCosine };

struct ScorerOptions {
  std::size_t agreement_passes = 10;
  std::size_t cleanlab_folds = 3;
  double allsh_sigma = 0.1;
  double detector_rate = 0.1;
  double detector_c = 1.0;  // inverse L2 strength of the detector's logistic fit
  PrototypeDistance prototype_distance = PrototypeDistance::kEuclidean;
};

// Dynamics-based scorers. `labels` are the observed (possibly noisy) labels
// the model was trained on.
ScoreVector score_aum(const DynamicsRecord& dyn, std::span<const int> labels);
struct UncertaintyScores {
  ScoreVector confidence;
  ScoreVector uncertainty;
};
UncertaintyScores score_dataiq(const DynamicsRecord& dyn, std::span<const int> labels);
UncertaintyScores score_datamaps(const DynamicsRecord& dyn, std::span<const int> labels);
ScoreVector score_loss(const DynamicsRecord& dyn);
ScoreVector score_grand(const DynamicsRecord& dyn);
ScoreVector score_el2n(const DynamicsRecord& dyn, std::span<const int> labels);
ScoreVector score_vog(const DynamicsRecord& dyn);
ScoreVector score_forgetting(const DynamicsRecord& dyn);
ScoreVector score_prototypicality(const DynamicsRecord& dyn, std::span<const int> labels, int num_classes,
                                  PrototypeDistance distance = PrototypeDistance::kEuclidean);

/// KL(p || q) with 0 ln 0 = 0.
double kl_divergence(std::span<const double> p, std::span<const double> q);

// Model-based scorers.
ScoreVector score_allsh(const Mlp& model, const Dataset& ds, double augment_sigma, std::uint64_t seed);
ScoreVector score_agreement(const Mlp& model, const Matrix& x, std::size_t passes, std::uint64_t seed);

/// Confident joint from out-of-sample probabilities (n x k) and given labels.
ConfidentJoint confident_joint(const Matrix& probs, std::span<const int> labels, int num_classes);

struct CleanlabResult {
  ScoreVector score;
  ConfidentJoint joint;
  Matrix out_of_sample_probs;
};
/// Cross-validated retraining with the given configs; raw = self-confidence.
CleanlabResult score_cleanlab(const Dataset& ds, const MlpConfig& model_config, const TrainConfig& train_config,
                              std::size_t folds, std::uint64_t seed);

struct DetectorResult {
  ScoreVector score;
  double calibration_auroc = 0.0;  // detector on its own calibration injections
  std::vector<double> weights;     // intercept first, then one per epoch
};
/// Calibrates a logistic detector on loss curves of a copy of `ds` with
/// extra uniform mislabeling at `inject_rate`, then applies it to `dyn`.
DetectorResult score_detector(const DynamicsRecord& dyn, const Dataset& ds, const MlpConfig& model_config,
                              const TrainConfig& train_config, double inject_rate, double c, std::uint64_t seed);

/// L2-regularised logistic regression (sklearn convention: minimise
/// 0.5 |w|^2 + C sum logloss, intercept unpenalised) by Newton's method.
/// Returns [intercept, w...].
std::vector<double> fit_logistic(const Matrix& x, std::span<const std::uint8_t> y, double c);

/// Per-column standardization of loss curves (epochs as columns).
Matrix standardized_loss_curves(const Matrix& losses_epochs_by_samples);

struct ScoringContext {
  const DynamicsRecord& dynamics;
  const Mlp& model;
  const Dataset& data;  // observed dataset the model was trained on
  MlpConfig model_config;
  TrainConfig train_config;
};

struct ScoringOutput {
  std::vector<ScoreVector> scores;  // in the order of the requested methods
  std::optional<ConfidentJoint> confident_joint;
  std::optional<double> detector_calibration_auroc;
};

/// Computes every requested method. Each method draws from its own seed
/// derive_seed(seed, method name).
ScoringOutput compute_scores(const ScoringContext& ctx, std::span<const Method> methods, const ScorerOptions& options,
                             std::uint64_t seed);

}  // namespace hardbench
