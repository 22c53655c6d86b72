#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "hardbench/config.hpp"
#include "hardbench/data.hpp"
#include "hardbench/evaluator.hpp"
#include "hardbench/hardness.hpp"
#include "hardbench/hcm.hpp"
#include "hardbench/mlp.hpp"
#include "hardbench/trainer.hpp"

namespace hardbench {

inline constexpr const char* kVersion = "0.1.0";

/// Environment variable naming the default output directory.
inline constexpr const char* kOutputEnvVar = "HARDBENCH_OUT";
/// $HARDBENCH_OUT when set and non-empty, else "hardbench-out".
std::filesystem::path default_output_dir();

struct DatasetSpec {
  std::string source = "blobs";  // blobs | glyphs | csv
  std::size_t n = 1000;
  std::size_t d = 2;
  int k = 4;
  double separation = 8.0;
  CenterLayout layout = CenterLayout::kScattered;
  std::size_t grid_height = 8;  // glyphs
  std::size_t grid_width = 8;
  double noise = 0.5;
  std::filesystem::path csv_path;  // csv
  std::string target = "target";
  bool standardize = true;

  /// Short label used in setup ids, e.g. "blobs-n1000-d2-k4".
  std::string label() const;
};

/// Loads or generates the dataset, then standardizes it if requested.
Dataset build_dataset(const DatasetSpec& spec, std::uint64_t seed);

/// One (dataset, hardness, p, replicate seed) combination plus everything
/// needed to run it.
struct SetupSpec {
  std::uint64_t master_seed = 0;
  DatasetSpec dataset;
  std::string hardness = "mislabel_uniform";  // "a" or "a+b"
  PerturbationParams params;
  double p = 0.1;
  std::uint64_t replicate = 0;
  MlpConfig model;
  TrainConfig train;
  RecordOptions record;
  std::vector<Method> methods = default_methods();
  ScorerOptions scorer;

  std::string setup_id() const;
};

/// Stage seeds, each derive_seed(master, stage, grid coordinates).
struct SetupSeeds {
  std::uint64_t dataset = 0;   // (master, "dataset", {replicate})
  std::uint64_t hardness = 0;  // (master, "hardness", {kind, p, replicate})
  std::uint64_t model = 0;     // (master, "model", {kind, p, replicate})
  std::uint64_t train = 0;     // (master, "train", {kind, p, replicate})
  std::uint64_t scorer = 0;    // (master, "scorer", {kind, p, replicate})
};
SetupSeeds derive_setup_seeds(const SetupSpec& spec);

enum class SetupStatus { kOk, kSkipped, kFailed };
std::string_view status_name(SetupStatus s);

struct SetupOutcome {
  SetupDescriptor descriptor;
  SetupStatus status = SetupStatus::kOk;
  std::string reason;  // skipped/failed explanation
  std::optional<EvalReport> report;
  std::vector<ScoreVector> scores;
  FlagSet flags;
  std::optional<double> detector_calibration_auroc;
  std::map<std::string, double> stage_seconds;
};

/// Load, perturb, train and score, evaluate. When `out_dir` is non-empty,
/// writes <out_dir>/setups/<setup_id>/{manifest.json,scores.csv,metrics.csv}.
/// Stage errors are captured in the outcome rather than thrown.
SetupOutcome run_setup(const SetupSpec& spec, const std::filesystem::path& out_dir = {});

struct StabilityOutcome {
  StabilityReport report;
  std::vector<std::uint64_t> run_seeds;
  FlagSet flags;
};

/// Fixes the dataset and flags of `spec`; only model initialization, batch
/// order and dropout change between runs. Run r uses run_seeds[r] for its
/// model, trainer and scorer streams.
StabilityOutcome run_stability(const SetupSpec& spec, const std::vector<std::uint64_t>& run_seeds);
/// Seeds derive_seed(master, "stability", {r}) for r < runs.
StabilityOutcome run_stability(const SetupSpec& spec, std::size_t runs);
void write_stability(const StabilityOutcome& outcome, const std::filesystem::path& out_dir);

struct SweepSpec {
  SetupSpec base;  // hardness, p and replicate are overridden per setup
  std::vector<DatasetSpec> datasets;
  std::vector<std::string> kinds;
  /// Empty means the kind's default grid.
  std::vector<double> p_values;
  std::vector<std::uint64_t> seeds{0, 1, 2};
  std::size_t jobs = 1;

  std::vector<SetupSpec> expand() const;
};

/// [0.1 .. 0.5] in steps of 0.1; far-OoD and atypical kinds use [0.05 .. 0.25].
std::vector<double> default_p_grid(const std::string& hardness);

struct SweepResult {
  std::vector<SetupOutcome> outcomes;  // sorted by setup_id
  std::size_t failed = 0;
  std::size_t skipped = 0;
};

/// Runs every setup with up to `jobs` threads, then writes merged metrics,
/// per-kind heatmaps, significance tests and sweep_manifest.json to out_dir.
SweepResult sweep(const SweepSpec& spec, const std::filesystem::path& out_dir);

/// Configuration keys <-> specs. Unknown keys are rejected.
SetupSpec setup_from_config(const ConfigMap& config);
SweepSpec sweep_from_config(const ConfigMap& config);
ConfigMap config_from_sweep(const SweepSpec& spec);
ConfigMap config_from_setup(const SetupSpec& spec);
/// Every key accepted by the parsers above.
const std::vector<std::string>& config_keys();

/// Reads the "config" object of a setup or sweep manifest.
ConfigMap config_from_manifest(const std::filesystem::path& manifest_json);

/// Markdown summary plus one SVG heatmap per hardness kind, built from the
/// heatmap CSVs and significance.json of a sweep directory.
void emit_report(const std::filesystem::path& results_dir);

}  // namespace hardbench
