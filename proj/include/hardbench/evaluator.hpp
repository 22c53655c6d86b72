#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "hardbench/hardness.hpp"
#include "hardbench/hcm.hpp"
#include "hardbench/matrix.hpp"
#include "hardbench/rank_tests.hpp"

namespace hardbench {

struct SetupDescriptor {
  std::string setup_id;
  std::string dataset;
  std::string hardness;
  double p = 0.0;
  std::uint64_t seed = 0;
  std::string model;  // e.g. "mlp-32x32-d0.1"
};

struct MethodMetrics {
  Method method = Method::kLoss;
  double d_auprc = 0.0;
  double d_auroc = 0.0;
  double rank = 0.0;  // 1 = best d_auprc, ties averaged
};

struct EvalReport {
  SetupDescriptor setup;
  std::vector<MethodMetrics> methods;
};

/// Scores each method's oriented vector against the flags and ranks methods
/// by d_auprc. Throws if flags have no positives or no negatives.
EvalReport evaluate(const SetupDescriptor& setup, std::span<const ScoreVector> scores, const FlagSet& flags);

struct StabilityReport {
  std::vector<Method> methods;
  std::size_t runs = 0;
  /// pair_rho[m] lists rho for each run pair (a < b) in lexicographic order;
  /// empty entries mark pairs where either score vector is constant.
  std::vector<std::vector<std::optional<double>>> pair_rho;
  /// Mean over the defined pairs; empty when no pair is defined.
  std::vector<std::optional<double>> mean_rho;
};

/// runs[r][m] is the score vector of method m in run r.
StabilityReport stability_from_scores(std::span<const Method> methods,
                                      const std::vector<std::vector<ScoreVector>>& runs);

/// Method x p matrices over a set of reports sharing one hardness kind.
/// Empty cells are NaN; std uses the population convention.
struct Heatmap {
  std::string hardness;
  std::vector<Method> methods;
  std::vector<double> p_values;  // ascending
  Matrix auprc_mean;
  Matrix auprc_std;
  Matrix auroc_mean;
  Matrix auroc_std;
  std::vector<std::vector<std::size_t>> counts;
};

/// Groups by (method, p). Methods absent from `method_order` are ignored;
/// `p_values` adds columns that have no reports. Throws if reports mix kinds.
Heatmap aggregate_sweep(std::span<const EvalReport> reports, std::span<const Method> method_order,
                        std::span<const double> p_values = {});

/// "method,<p1>,<p2>,..." followed by one row per method; NaN as NA.
std::string heatmap_csv(const Heatmap& heatmap, const Matrix& values);

/// Rows of metrics.csv for the given reports (no header).
std::string metrics_csv_rows(std::span<const EvalReport> reports);
inline constexpr const char* kMetricsCsvHeader = "setup_id,dataset,hardness,p,seed,method,d_auprc,d_auroc,rank\n";

/// Setups x methods matrix of d_auprc over reports that contain every method
/// of `methods`; other reports are skipped.
Matrix metric_matrix(std::span<const EvalReport> reports, std::span<const Method> methods);

struct SignificanceResult {
  std::vector<Method> methods;
  std::size_t setups = 0;
  FriedmanResult friedman;
  PosthocResult posthoc;
  std::vector<std::vector<std::size_t>> wins;
};

/// Friedman, pairwise post-hoc and win counts on d_auprc. Needs >= 2 methods
/// and >= 2 complete setups.
SignificanceResult significance(std::span<const EvalReport> reports, std::span<const Method> methods,
                                double alpha = 0.05);

std::string significance_json(const SignificanceResult& result);

}  // namespace hardbench
