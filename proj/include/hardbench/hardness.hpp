#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "hardbench/data.hpp"
#include "hardbench/matrix.hpp"

namespace hardbench {

/// Ground-truth hardness indicator: flags[i] != 0 marks sample i as hard.
struct FlagSet {
  std::vector<std::uint8_t> flags;
  std::size_t count = 0;

  std::vector<std::size_t> indices() const;
  bool operator==(const FlagSet&) const = default;
};

/// Per-class list of (wrong class, probability) targets.
struct RuleMatrix {
  std::vector<std::vector<std::pair<int, double>>> rows;

  /// Throws if a row maps a class to itself, has a negative probability,
  /// or does not sum to 1 (within 1e-9).
  void validate(int num_classes) const;
  /// Dense k x k view, zero where no rule exists.
  Matrix dense(int num_classes) const;
};

// Perturbation kinds. Grid-only kinds require Dataset::grid.
struct MislabelUniform {};
struct MislabelAsymmetric {
  double alpha = 0.5;
};
struct MislabelAdjacent {};
struct MislabelInstance {
  std::optional<RuleMatrix> rules;  // built from PCA nearest centroids when absent
};
struct NearOodCovariate {
  double sigma = 1.0;
};
struct NearOodDomain {};
struct FarOod {};
struct AtypicalTail {
  double quantile = 0.95;
};
struct AtypicalCropShift {
  int pixels = 2;
};
struct AtypicalZoom {
  double factor = 2.0;
};

using Perturbation = std::variant<MislabelUniform, MislabelAsymmetric, MislabelAdjacent, MislabelInstance,
                                  NearOodCovariate, NearOodDomain, FarOod, AtypicalTail, AtypicalCropShift,
                                  AtypicalZoom>;

/// One perturbation, or several applied in order to the same flags.
struct HardnessSpec {
  std::vector<Perturbation> steps;
  double proportion = 0.1;
  std::uint64_t seed = 0;

  bool composite() const noexcept { return steps.size() > 1; }
};

/// Numeric knobs shared by the name parser; each kind reads only its own.
struct PerturbationParams {
  double alpha = 0.5;
  double sigma = 1.0;
  double quantile = 0.95;
  int pixels = 2;
  double factor = 2.0;
};

std::string_view perturbation_name(const Perturbation& p);
/// Parses a canonical kind name ("mislabel_uniform", "far_ood", ...).
Perturbation parse_perturbation(std::string_view name, const PerturbationParams& params = {});
/// Parses "a" or "a+b+..." into steps.
std::vector<Perturbation> parse_hardness(std::string_view text, const PerturbationParams& params = {});
/// Canonical name of a spec: step names joined by '+'.
std::string hardness_name(const HardnessSpec& spec);
bool is_mislabeling(const Perturbation& p);
bool requires_grid(const Perturbation& p);
const std::vector<std::string>& perturbation_names();

/// What a single applied step did, enough to reproduce and audit the draw.
struct StepRecord {
  std::string kind;
  std::uint64_t seed = 0;
  std::optional<Matrix> transition;      // asymmetric
  std::optional<RuleMatrix> rules;       // instance
  std::optional<std::size_t> tail_feature;
  std::vector<std::string> warnings;
};

struct PerturbationResult {
  Dataset data;
  FlagSet flags;
  std::vector<StepRecord> steps;
};

FlagSet select_flags(std::size_t n, double proportion, std::uint64_t seed);

std::vector<int> mislabel_uniform(std::span<const int> labels, const FlagSet& flags, int k, std::uint64_t seed);

struct AsymmetricResult {
  std::vector<int> labels;
  Matrix transition;  // k x k, zero diagonal, rows sum to 1
};
AsymmetricResult mislabel_asymmetric(std::span<const int> labels, const FlagSet& flags, int k, double alpha,
                                     std::uint64_t seed);

std::vector<int> mislabel_adjacent(std::span<const int> labels, const FlagSet& flags, int k, std::uint64_t seed);

/// Maps each class to the other class with the nearest centroid after
/// projecting onto min(d, 8) principal components.
RuleMatrix build_instance_rules(const Dataset& ds);

std::vector<int> mislabel_instance(std::span<const int> labels, const FlagSet& flags, const RuleMatrix& rules,
                                   std::uint64_t seed);

Matrix perturb_near_ood_covariate(const Matrix& x, const FlagSet& flags, double sigma, std::uint64_t seed);

Matrix perturb_near_ood_domain(const Matrix& x, const FlagSet& flags, std::optional<GridShape> grid,
                               std::uint64_t seed);

/// Sobel magnitude, 3x3 median (edge replication), rescaled to the input
/// range. Exposed for stencil tests.
std::vector<double> domain_shift_raster(std::span<const double> raster, GridShape shape);

struct FarOodResult {
  Dataset data;
  std::vector<std::string> warnings;
};
FarOodResult perturb_far_ood(const Dataset& ds, const FlagSet& flags, std::uint64_t seed);

struct TailResult {
  Dataset data;
  std::size_t feature = 0;
};
TailResult perturb_atypical_tail(const Dataset& ds, const FlagSet& flags, double quantile, std::uint64_t seed);

/// Index of the feature with maximal |Pearson correlation| to the label index.
std::size_t most_predictive_feature(const Dataset& ds);

Matrix perturb_crop_shift(const Matrix& x, const FlagSet& flags, std::optional<GridShape> grid, int pixels,
                          std::uint64_t seed);

/// Translates a raster by (dy, dx); vacated cells take the raster minimum.
std::vector<double> shift_raster(std::span<const double> raster, GridShape shape, int dy, int dx);

Matrix perturb_zoom(const Matrix& x, const FlagSet& flags, std::optional<GridShape> grid, double factor,
                    std::uint64_t seed);

/// Central (h/factor) x (w/factor) crop, nearest-neighbour resampled to h x w.
std::vector<double> zoom_raster(std::span<const double> raster, GridShape shape, double factor);

/// Selects flags, then applies every step of the spec to those flags.
PerturbationResult perturb(const Dataset& ds, const HardnessSpec& spec);

}  // namespace hardbench
