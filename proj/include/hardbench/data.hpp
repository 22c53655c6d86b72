#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "hardbench/matrix.hpp"

namespace hardbench {

/// Raster layout of a feature vector: row-major, height * width == dims.
struct GridShape {
  std::size_t height = 0;
  std::size_t width = 0;
  std::size_t cells() const noexcept { return height * width; }
  bool operator==(const GridShape&) const = default;
};

/// Feature matrix plus dense class labels in [0, num_classes).
struct Dataset {
  Matrix features;
  std::vector<int> labels;
  int num_classes = 0;
  std::optional<GridShape> grid;
  std::vector<std::string> feature_names;

  std::size_t size() const noexcept { return labels.size(); }
  std::size_t dims() const noexcept { return features.cols(); }

  /// Throws std::invalid_argument if labels are out of range, features are
  /// non-finite, shapes disagree, or the grid shape does not cover dims.
  void validate() const;

  /// Per-class sample counts.
  std::vector<std::size_t> class_counts() const;

  bool operator==(const Dataset&) const = default;
};

struct SplitSpec {
  double train_fraction = 0.8;
  std::uint64_t seed = 0;
};

struct SplitResult {
  Dataset train;
  Dataset test;
  std::vector<std::size_t> train_indices;
  std::vector<std::size_t> test_indices;
};

enum class CenterLayout {
  kScattered,  // rejection-sampled, pairwise distance >= separation
  kLine,       // evenly spaced on the first axis, neighbours exactly separation apart
};

/// k isotropic unit-variance Gaussian clusters with balanced counts
/// (label of row i is i mod k).
Dataset generate_blobs(std::size_t n, std::size_t d, int k, double separation, std::uint64_t seed,
                       CenterLayout layout = CenterLayout::kScattered);

/// Class-conditional rasters: each class owns a template of two Gaussian
/// bumps; samples are the template plus i.i.d. pixel noise.
Dataset generate_glyphs(std::size_t n, GridShape shape, int k, double noise, std::uint64_t seed);

/// Centers used by generate_blobs, exposed for tests.
Matrix blob_centers(std::size_t d, int k, double separation, std::uint64_t seed, CenterLayout layout);

Dataset load_csv(const std::filesystem::path& path, const std::string& target_column);

/// Writes features (shortest round-trip form) and an integer target column.
void write_csv(const Dataset& ds, const std::filesystem::path& path,
               const std::string& target_column = "target");

/// Population-std standardization; zero-variance columns become zero.
Dataset standardize(const Dataset& ds);

/// Stratified, seeded split. Index lists are ascending.
SplitResult split(const Dataset& ds, const SplitSpec& spec);

/// Rows of `ds` at `indices`, in the given order. Keeps num_classes and grid.
Dataset subset(const Dataset& ds, const std::vector<std::size_t>& indices);

}  // namespace hardbench
