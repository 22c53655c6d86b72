#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "hardbench/data.hpp"
#include "hardbench/matrix.hpp"
#include "hardbench/mlp.hpp"

namespace hardbench {

/// Mini-batch Adam on mean cross-entropy.
struct TrainConfig {
  std::size_t epochs = 20;
  double learning_rate = 1e-3;
  std::size_t batch_size = 32;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::uint64_t seed = 0;  // batch order and dropout masks

  void validate() const;
};

/// Which optional signals fit_with_recording keeps.
struct RecordOptions {
  bool grad_norms = true;
  bool input_grads = true;
  /// Input gradients are kept at epochs t with t % stride == 0, plus the
  /// final epoch.
  std::size_t input_grad_stride = 1;
};

/// Per-sample, per-epoch training signals, recorded in evaluation mode after
/// each epoch's updates over the dataset in its original order.
struct DynamicsRecord {
  std::size_t epochs = 0;
  std::size_t samples = 0;
  std::size_t classes = 0;
  std::size_t inputs = 0;

  Tensor3 probs;                   // epochs x n x k
  Tensor3 logits;                  // epochs x n x k
  Matrix losses;                   // epochs x n
  std::vector<std::uint8_t> correct;  // epochs x n, row-major
  Matrix grad_sq_norm;             // epochs x n, empty if not recorded
  Matrix embeddings;               // n x width, final epoch
  Tensor3 input_grads;             // checkpoints x n x d, true-class logit
  std::vector<std::size_t> input_grad_epochs;  // 0-based epoch of each checkpoint

  bool is_correct(std::size_t epoch, std::size_t i) const noexcept { return correct[epoch * samples + i] != 0; }
  bool operator==(const DynamicsRecord&) const = default;
};

/// Allocates an empty record sized for (model, dataset, epochs, options).
DynamicsRecord make_record(const Mlp& model, const Dataset& ds, std::size_t epochs, const RecordOptions& options);

/// Epochs at which input gradients are checkpointed.
std::vector<std::size_t> checkpoint_epochs(std::size_t epochs, const RecordOptions& options);

/// Trains in place without recording.
void fit(Mlp& model, const Dataset& ds, const TrainConfig& config);

/// Trains in place and records dynamics after every epoch.
DynamicsRecord fit_with_recording(Mlp& model, const Dataset& ds, const TrainConfig& config,
                                  const RecordOptions& options = {});

/// Evaluation-mode class probabilities, n x k.
Matrix predict_proba(const Mlp& model, const Matrix& x);

/// passes x n x k probabilities with dropout active. Pass p draws the masks
/// of a row from stream derive_seed(seed, "mc-dropout", {p, row_key(row)}),
/// so results follow rows under reordering.
Tensor3 mc_dropout_proba(const Mlp& model, const Matrix& x, std::size_t passes = 10, std::uint64_t seed = 0);

/// Writes one CSV per field plus header.json describing shapes and seeds.
void save_dynamics(const DynamicsRecord& record, const std::filesystem::path& dir, std::uint64_t model_seed,
                   std::uint64_t train_seed);
DynamicsRecord load_dynamics(const std::filesystem::path& dir);

namespace kernels {

/// Fills epoch `epoch` of `record`: probs, logits, losses, correctness and
/// (if allocated) squared gradient norms; input gradients into `checkpoint`
/// when >= 0; embeddings when `embed` is set. Samples are processed in
/// parallel; each writes only its own slots.
void record_epoch(const Mlp& model, const Dataset& ds, DynamicsRecord& record, std::size_t epoch, long checkpoint,
                  bool embed);

Tensor3 mc_dropout_proba(const Mlp& model, const Matrix& x, std::size_t passes, std::uint64_t seed);

/// Single-threaded references for the kernels above; outputs must be
/// bit-identical.
namespace serial {
void record_epoch(const Mlp& model, const Dataset& ds, DynamicsRecord& record, std::size_t epoch, long checkpoint,
                  bool embed);
Tensor3 mc_dropout_proba(const Mlp& model, const Matrix& x, std::size_t passes, std::uint64_t seed);
}  // namespace serial

}  // namespace kernels

}  // namespace hardbench
