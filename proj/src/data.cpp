#include "hardbench/data.hpp"

#include <algorithm>
#include <cerrno>
#include <cmath>
#include <cstdlib>
#include <sstream>
#include <stdexcept>
#include <unordered_map>

#include "hardbench/io.hpp"
#include "hardbench/rng.hpp"

namespace hardbench {

namespace {

constexpr int kMaxCsvClasses = 64;

std::vector<std::string> default_names(std::size_t d) {
  std::vector<std::string> names;
  names.reserve(d);
  for (std::size_t j = 0; j < d; ++j) names.push_back("f" + std::to_string(j));
  return names;
}

template <typename Rng>
void shuffle_indices(std::vector<std::size_t>& idx, Rng& rng) {
  for (std::size_t i = idx.size(); i > 1; --i) {
    const auto j = static_cast<std::size_t>(rng.below(i));
    std::swap(idx[i - 1], idx[j]);
  }
}

}  // namespace

void Dataset::validate() const {
  if (num_classes < 2) throw std::invalid_argument("dataset needs at least 2 classes");
  if (features.rows() != labels.size())
    throw std::invalid_argument("feature rows and label count differ");
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0 || labels[i] >= num_classes)
      throw std::invalid_argument("label out of range at row " + std::to_string(i));
  }
  for (const double v : features.values()) {
    if (!std::isfinite(v)) throw std::invalid_argument("non-finite feature value");
  }
  if (grid && grid->cells() != features.cols())
    throw std::invalid_argument("grid shape does not match feature count");
  if (!feature_names.empty() && feature_names.size() != features.cols())
    throw std::invalid_argument("feature name count does not match feature count");
}

std::vector<std::size_t> Dataset::class_counts() const {
  std::vector<std::size_t> counts(static_cast<std::size_t>(std::max(num_classes, 0)), 0);
  for (const int y : labels) ++counts[static_cast<std::size_t>(y)];
  return counts;
}

Matrix blob_centers(std::size_t d, int k, double separation, std::uint64_t seed,
                    CenterLayout layout) {
  const auto kk = static_cast<std::size_t>(k);
  Matrix centers(kk, d);
  if (layout == CenterLayout::kLine) {
    for (std::size_t c = 0; c < kk; ++c) centers(c, 0) = static_cast<double>(c) * separation;
    return centers;
  }
  CounterRng rng(seed, hash_name("blob-centers"));
  double radius = std::max(separation, 1.0) * std::pow(static_cast<double>(k), 1.0 / static_cast<double>(d));
  std::size_t placed = 0;
  std::size_t rejections = 0;
  while (placed < kk) {
    for (std::size_t j = 0; j < d; ++j) centers(placed, j) = radius * (2.0 * rng.uniform() - 1.0);
    bool ok = true;
    for (std::size_t c = 0; c < placed && ok; ++c) {
      double dist2 = 0.0;
      for (std::size_t j = 0; j < d; ++j) {
        const double diff = centers(placed, j) - centers(c, j);
        dist2 += diff * diff;
      }
      ok = std::sqrt(dist2) >= separation;
    }
    if (ok) {
      ++placed;
      rejections = 0;
    } else if (++rejections == 1000) {
      radius *= 1.25;
      rejections = 0;
    }
  }
  return centers;
}

Dataset generate_blobs(std::size_t n, std::size_t d, int k, double separation, std::uint64_t seed,
                       CenterLayout layout) {
  if (k < 2) throw std::invalid_argument("generate_blobs: k must be >= 2");
  if (n < static_cast<std::size_t>(k)) throw std::invalid_argument("generate_blobs: n < k");
  if (d < 1) throw std::invalid_argument("generate_blobs: d must be >= 1");
  if (!std::isfinite(separation) || separation < 0.0)
    throw std::invalid_argument("generate_blobs: separation must be finite and >= 0");

  const Matrix centers = blob_centers(d, k, separation, seed, layout);
  Dataset ds;
  ds.num_classes = k;
  ds.features = Matrix(n, d);
  ds.labels.resize(n);
  CounterRng rng(seed, hash_name("blob-samples"));
  for (std::size_t i = 0; i < n; ++i) {
    const int y = static_cast<int>(i % static_cast<std::size_t>(k));
    ds.labels[i] = y;
    for (std::size_t j = 0; j < d; ++j)
      ds.features(i, j) = centers(static_cast<std::size_t>(y), j) + rng.normal();
  }
  return ds;
}

Dataset generate_glyphs(std::size_t n, GridShape shape, int k, double noise, std::uint64_t seed) {
  if (k < 2) throw std::invalid_argument("generate_glyphs: k must be >= 2");
  if (n < static_cast<std::size_t>(k)) throw std::invalid_argument("generate_glyphs: n < k");
  if (shape.height < 2 || shape.width < 2)
    throw std::invalid_argument("generate_glyphs: grid must be at least 2x2");
  if (!std::isfinite(noise) || noise < 0.0)
    throw std::invalid_argument("generate_glyphs: noise must be finite and >= 0");

  const std::size_t d = shape.cells();
  const auto kk = static_cast<std::size_t>(k);
  Matrix templates(kk, d);
  CounterRng trng(seed, hash_name("glyph-templates"));
  const double width = static_cast<double>(std::max(shape.height, shape.width)) / 6.0 + 0.5;
  for (std::size_t c = 0; c < kk; ++c) {
    for (int bump = 0; bump < 2; ++bump) {
      const double cr = trng.uniform() * static_cast<double>(shape.height - 1);
      const double cc = trng.uniform() * static_cast<double>(shape.width - 1);
      for (std::size_t r = 0; r < shape.height; ++r) {
        for (std::size_t col = 0; col < shape.width; ++col) {
          const double dr = static_cast<double>(r) - cr;
          const double dc = static_cast<double>(col) - cc;
          templates(c, r * shape.width + col) += 2.0 * std::exp(-(dr * dr + dc * dc) / (2.0 * width * width));
        }
      }
    }
  }

  Dataset ds;
  ds.num_classes = k;
  ds.grid = shape;
  ds.features = Matrix(n, d);
  ds.labels.resize(n);
  CounterRng rng(seed, hash_name("glyph-samples"));
  for (std::size_t i = 0; i < n; ++i) {
    const auto y = i % kk;
    ds.labels[i] = static_cast<int>(y);
    for (std::size_t j = 0; j < d; ++j) ds.features(i, j) = templates(y, j) + noise * rng.normal();
  }
  return ds;
}

Dataset load_csv(const std::filesystem::path& path, const std::string& target_column) {
  if (!std::filesystem::exists(path)) throw std::runtime_error("load_csv: no such file: " + path.string());
  const std::string text = io::read_file(path);
  std::vector<std::string> lines;
  {
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
      if (!io::trim(line).empty()) lines.push_back(line);
    }
  }
  if (lines.empty()) throw std::runtime_error("load_csv: empty file: " + path.string());

  const auto header = io::split_csv_line(lines.front());
  const auto target_it = std::find(header.begin(), header.end(), target_column);
  if (target_it == header.end())
    throw std::runtime_error("load_csv: missing target column '" + target_column + "'");
  const auto target_idx = static_cast<std::size_t>(target_it - header.begin());
  if (lines.size() < 2) throw std::runtime_error("load_csv: no data rows in " + path.string());

  const std::size_t n = lines.size() - 1;
  const std::size_t d = header.size() - 1;
  Dataset ds;
  ds.features = Matrix(n, d);
  ds.labels.resize(n);
  for (std::size_t j = 0; j < header.size(); ++j) {
    if (j != target_idx) ds.feature_names.push_back(header[j]);
  }

  std::unordered_map<std::string, int> class_ids;
  for (std::size_t i = 0; i < n; ++i) {
    const auto fields = io::split_csv_line(lines[i + 1]);
    const std::size_t row_number = i + 1;
    if (fields.size() != header.size())
      throw std::runtime_error("load_csv: row " + std::to_string(row_number) + " has " +
                               std::to_string(fields.size()) + " fields, expected " +
                               std::to_string(header.size()));
    std::size_t col = 0;
    for (std::size_t j = 0; j < fields.size(); ++j) {
      if (j == target_idx) continue;
      const std::string cell = io::trim(fields[j]);
      const char* begin = cell.c_str();
      char* end = nullptr;
      errno = 0;
      const double value = std::strtod(begin, &end);
      if (cell.empty() || end != begin + cell.size() || errno == ERANGE)
        throw std::runtime_error("load_csv: non-numeric value '" + cell + "' at row " +
                                 std::to_string(row_number) + ", column '" + header[j] + "'");
      if (!std::isfinite(value))
        throw std::runtime_error("load_csv: non-finite value '" + cell + "' at row " +
                                 std::to_string(row_number) + ", column '" + header[j] + "'");
      ds.features(i, col++) = value;
    }
    const std::string target = io::trim(fields[target_idx]);
    auto [it, inserted] = class_ids.emplace(target, static_cast<int>(class_ids.size()));
    if (inserted && class_ids.size() > static_cast<std::size_t>(kMaxCsvClasses))
      throw std::runtime_error("load_csv: more than 64 distinct target values");
    ds.labels[i] = it->second;
  }
  ds.num_classes = static_cast<int>(class_ids.size());
  if (ds.num_classes < 2) throw std::runtime_error("load_csv: target has fewer than 2 classes");
  return ds;
}

void write_csv(const Dataset& ds, const std::filesystem::path& path, const std::string& target_column) {
  const auto names = ds.feature_names.empty() ? default_names(ds.dims()) : ds.feature_names;
  std::string out;
  for (const auto& name : names) out += io::csv_escape(name) + ",";
  out += io::csv_escape(target_column) + "\n";
  for (std::size_t i = 0; i < ds.size(); ++i) {
    for (const double v : ds.features.row(i)) out += io::format_double(v) + ",";
    out += std::to_string(ds.labels[i]) + "\n";
  }
  io::write_file_atomic(path, out);
}

Dataset standardize(const Dataset& ds) {
  Dataset out = ds;
  const std::size_t n = ds.size();
  if (n == 0) return out;
  for (std::size_t j = 0; j < ds.dims(); ++j) {
    double mean = 0.0;
    for (std::size_t i = 0; i < n; ++i) mean += ds.features(i, j);
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double diff = ds.features(i, j) - mean;
      var += diff * diff;
    }
    var /= static_cast<double>(n);
    const double sd = std::sqrt(var);
    // Rounding in the mean leaves ~1e-17 spread on constant columns.
    const bool degenerate = !(sd > 1e-12 * std::max(1.0, std::abs(mean)));
    for (std::size_t i = 0; i < n; ++i)
      out.features(i, j) = degenerate ? 0.0 : (ds.features(i, j) - mean) / sd;
  }
  return out;
}

Dataset subset(const Dataset& ds, const std::vector<std::size_t>& indices) {
  Dataset out;
  out.num_classes = ds.num_classes;
  out.grid = ds.grid;
  out.feature_names = ds.feature_names;
  out.features = Matrix(indices.size(), ds.dims());
  out.labels.resize(indices.size());
  for (std::size_t r = 0; r < indices.size(); ++r) {
    const auto src = ds.features.row(indices[r]);
    std::copy(src.begin(), src.end(), out.features.row(r).begin());
    out.labels[r] = ds.labels[indices[r]];
  }
  return out;
}

SplitResult split(const Dataset& ds, const SplitSpec& spec) {
  if (!(spec.train_fraction > 0.0 && spec.train_fraction <= 1.0))
    throw std::invalid_argument("split: train_fraction must lie in (0, 1]");
  std::vector<std::vector<std::size_t>> by_class(static_cast<std::size_t>(ds.num_classes));
  for (std::size_t i = 0; i < ds.size(); ++i) by_class[static_cast<std::size_t>(ds.labels[i])].push_back(i);

  SplitResult result;
  for (std::size_t c = 0; c < by_class.size(); ++c) {
    auto& members = by_class[c];
    CounterRng rng(spec.seed, c);
    shuffle_indices(members, rng);
    const auto take = static_cast<std::size_t>(
        std::min<long long>(static_cast<long long>(members.size()),
                            std::llround(spec.train_fraction * static_cast<double>(members.size()))));
    result.train_indices.insert(result.train_indices.end(), members.begin(), members.begin() + static_cast<std::ptrdiff_t>(take));
    result.test_indices.insert(result.test_indices.end(), members.begin() + static_cast<std::ptrdiff_t>(take), members.end());
  }
  if (result.train_indices.empty()) throw std::invalid_argument("split: train partition is empty");
  std::sort(result.train_indices.begin(), result.train_indices.end());
  std::sort(result.test_indices.begin(), result.test_indices.end());
  result.train = subset(ds, result.train_indices);
  result.test = subset(ds, result.test_indices);
  return result;
}

}  // namespace hardbench
