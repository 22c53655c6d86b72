#include "hardbench/hardness.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "hardbench/rng.hpp"

namespace hardbench {

namespace {

constexpr std::size_t kMaxPcaComponents = 8;

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

void check_flags(const FlagSet& flags, std::size_t n) {
  if (flags.flags.size() != n) throw std::invalid_argument("flag vector length does not match sample count");
}

GridShape require_grid(std::optional<GridShape> grid, std::size_t d, std::string_view what) {
  if (!grid) throw std::invalid_argument(std::string(what) + " requires a grid dataset");
  if (grid->cells() != d) throw std::invalid_argument(std::string(what) + ": grid shape does not match features");
  return *grid;
}

// Draws from a probability row; falls back to the last positive entry when
// rounding leaves u above the cumulative total.
int draw_from_row(std::span<const std::pair<int, double>> row, double u) {
  double acc = 0.0;
  int last = -1;
  for (const auto& [cls, prob] : row) {
    if (prob <= 0.0) continue;
    acc += prob;
    last = cls;
    if (u < acc) return cls;
  }
  return last;
}

void apply_to_rows(Matrix& x, const FlagSet& flags, GridShape shape, auto&& transform) {
  for (std::size_t i = 0; i < x.rows(); ++i) {
    if (!flags.flags[i]) continue;
    const std::vector<double> out = transform(x.row(i), shape, i);
    std::copy(out.begin(), out.end(), x.row(i).begin());
  }
}

}  // namespace

std::vector<std::size_t> FlagSet::indices() const {
  std::vector<std::size_t> out;
  out.reserve(count);
  for (std::size_t i = 0; i < flags.size(); ++i)
    if (flags[i]) out.push_back(i);
  return out;
}

void RuleMatrix::validate(int num_classes) const {
  if (rows.size() != static_cast<std::size_t>(num_classes))
    throw std::invalid_argument("rule matrix must have one row per class");
  for (std::size_t c = 0; c < rows.size(); ++c) {
    if (rows[c].empty()) continue;
    double total = 0.0;
    for (const auto& [target, prob] : rows[c]) {
      if (target == static_cast<int>(c)) throw std::invalid_argument("rule maps a class to itself");
      if (target < 0 || target >= num_classes) throw std::invalid_argument("rule target out of range");
      if (!(prob >= 0.0)) throw std::invalid_argument("rule probability must be nonnegative");
      total += prob;
    }
    if (std::abs(total - 1.0) > 1e-9) throw std::invalid_argument("rule probabilities must sum to 1");
  }
}

Matrix RuleMatrix::dense(int num_classes) const {
  const auto k = static_cast<std::size_t>(num_classes);
  Matrix m(k, k);
  for (std::size_t c = 0; c < rows.size() && c < k; ++c)
    for (const auto& [target, prob] : rows[c]) m(c, static_cast<std::size_t>(target)) += prob;
  return m;
}

// ---------------------------------------------------------------------------
// Names

const std::vector<std::string>& perturbation_names() {
  static const std::vector<std::string> names = {
      "mislabel_uniform",   "mislabel_asymmetric", "mislabel_adjacent", "mislabel_instance",
      "near_ood_covariate", "near_ood_domain",     "far_ood",           "atypical_tail",
      "atypical_crop_shift", "atypical_zoom"};
  return names;
}

std::string_view perturbation_name(const Perturbation& p) {
  return perturbation_names()[p.index()];
}

Perturbation parse_perturbation(std::string_view name, const PerturbationParams& params) {
  if (name == "mislabel_uniform") return MislabelUniform{};
  if (name == "mislabel_asymmetric") return MislabelAsymmetric{params.alpha};
  if (name == "mislabel_adjacent") return MislabelAdjacent{};
  if (name == "mislabel_instance") return MislabelInstance{};
  if (name == "near_ood_covariate") return NearOodCovariate{params.sigma};
  if (name == "near_ood_domain") return NearOodDomain{};
  if (name == "far_ood") return FarOod{};
  if (name == "atypical_tail") return AtypicalTail{params.quantile};
  if (name == "atypical_crop_shift") return AtypicalCropShift{params.pixels};
  if (name == "atypical_zoom") return AtypicalZoom{params.factor};
  throw std::invalid_argument("unknown hardness kind '" + std::string(name) + "'");
}

std::vector<Perturbation> parse_hardness(std::string_view text, const PerturbationParams& params) {
  std::vector<Perturbation> steps;
  std::size_t start = 0;
  while (start <= text.size()) {
    const auto plus = text.find('+', start);
    const auto token = text.substr(start, plus == std::string_view::npos ? std::string_view::npos : plus - start);
    steps.push_back(parse_perturbation(token, params));
    if (plus == std::string_view::npos) break;
    start = plus + 1;
  }
  return steps;
}

std::string hardness_name(const HardnessSpec& spec) {
  std::string name;
  for (const auto& step : spec.steps) {
    if (!name.empty()) name += '+';
    name += perturbation_name(step);
  }
  return name;
}

bool is_mislabeling(const Perturbation& p) { return p.index() <= 3; }

bool requires_grid(const Perturbation& p) {
  return std::holds_alternative<NearOodDomain>(p) || std::holds_alternative<AtypicalCropShift>(p) ||
         std::holds_alternative<AtypicalZoom>(p);
}

// ---------------------------------------------------------------------------
// Flags

FlagSet select_flags(std::size_t n, double proportion, std::uint64_t seed) {
  if (!(proportion >= 0.0 && proportion <= 0.5))
    throw std::invalid_argument("proportion must lie in [0, 0.5]");
  // The epsilon absorbs representation error in products like 0.3 * 10.
  const auto count = static_cast<std::size_t>(std::floor(proportion * static_cast<double>(n) + 1e-9));
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  CounterRng rng(seed, hash_name("select-flags"));
  for (std::size_t i = 0; i < count; ++i) {
    const auto j = i + static_cast<std::size_t>(rng.below(n - i));
    std::swap(idx[i], idx[j]);
  }
  FlagSet out;
  out.flags.assign(n, 0);
  for (std::size_t i = 0; i < count; ++i) out.flags[idx[i]] = 1;
  out.count = count;
  return out;
}

// ---------------------------------------------------------------------------
// Mislabeling

std::vector<int> mislabel_uniform(std::span<const int> labels, const FlagSet& flags, int k, std::uint64_t seed) {
  if (k < 2) throw std::invalid_argument("mislabel_uniform: k must be >= 2");
  check_flags(flags, labels.size());
  std::vector<int> out(labels.begin(), labels.end());
  CounterRng rng(seed, hash_name("mislabel-uniform"));
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (!flags.flags[i]) continue;
    int j = static_cast<int>(rng.below(static_cast<std::uint64_t>(k - 1)));
    if (j >= labels[i]) ++j;
    out[i] = j;
  }
  return out;
}

AsymmetricResult mislabel_asymmetric(std::span<const int> labels, const FlagSet& flags, int k, double alpha,
                                     std::uint64_t seed) {
  if (k < 2) throw std::invalid_argument("mislabel_asymmetric: k must be >= 2");
  if (!(alpha > 0.0) || !std::isfinite(alpha)) throw std::invalid_argument("mislabel_asymmetric: alpha must be > 0");
  check_flags(flags, labels.size());
  const auto kk = static_cast<std::size_t>(k);

  AsymmetricResult result;
  result.transition = Matrix(kk, kk);
  CounterRng dirichlet(seed, hash_name("asymmetric-transition"));
  for (std::size_t r = 0; r < kk; ++r) {
    double total = 0.0;
    for (std::size_t c = 0; c < kk; ++c) {
      if (c == r) continue;
      result.transition(r, c) = dirichlet.gamma(alpha);
      total += result.transition(r, c);
    }
    if (total > 0.0) {
      for (std::size_t c = 0; c < kk; ++c) result.transition(r, c) /= total;
    } else {
      // Every gamma draw underflowed (alpha -> 0): the limit is a point mass.
      auto c = static_cast<std::size_t>(dirichlet.below(kk - 1));
      if (c >= r) ++c;
      result.transition(r, c) = 1.0;
    }
  }

  std::vector<std::vector<std::pair<int, double>>> rows(kk);
  for (std::size_t r = 0; r < kk; ++r)
    for (std::size_t c = 0; c < kk; ++c)
      if (c != r) rows[r].emplace_back(static_cast<int>(c), result.transition(r, c));

  result.labels.assign(labels.begin(), labels.end());
  CounterRng rng(seed, hash_name("asymmetric-resample"));
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (!flags.flags[i]) continue;
    result.labels[i] = draw_from_row(rows[static_cast<std::size_t>(labels[i])], rng.uniform());
  }
  return result;
}

std::vector<int> mislabel_adjacent(std::span<const int> labels, const FlagSet& flags, int k, std::uint64_t seed) {
  if (k < 2) throw std::invalid_argument("mislabel_adjacent: k must be >= 2");
  check_flags(flags, labels.size());
  std::vector<int> out(labels.begin(), labels.end());
  CounterRng rng(seed, hash_name("mislabel-adjacent"));
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (!flags.flags[i]) continue;
    const int c = labels[i];
    if (c == 0) {
      out[i] = 1;
    } else if (c == k - 1) {
      out[i] = k - 2;
    } else {
      out[i] = rng.below(2) == 0 ? c - 1 : c + 1;
    }
  }
  return out;
}

RuleMatrix build_instance_rules(const Dataset& ds) {
  const int k = ds.num_classes;
  if (k < 2) throw std::invalid_argument("build_instance_rules: k must be >= 2");
  const std::size_t n = ds.size();
  const std::size_t d = ds.dims();
  const auto counts = ds.class_counts();
  for (std::size_t c = 0; c < counts.size(); ++c)
    if (counts[c] == 0) throw std::invalid_argument("build_instance_rules: class " + std::to_string(c) + " is empty");

  Eigen::MatrixXd x(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < d; ++j) x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = ds.features(i, j);
  const Eigen::RowVectorXd mean = x.colwise().mean();
  const Eigen::MatrixXd centered = x.rowwise() - mean;

  Eigen::MatrixXd centroids = Eigen::MatrixXd::Zero(k, static_cast<Eigen::Index>(d));
  for (std::size_t i = 0; i < n; ++i) centroids.row(ds.labels[i]) += centered.row(static_cast<Eigen::Index>(i));
  for (int c = 0; c < k; ++c) centroids.row(c) /= static_cast<double>(counts[static_cast<std::size_t>(c)]);

  Eigen::MatrixXd projected = centroids;
  if (n >= 2) {
    const Eigen::MatrixXd cov = centered.transpose() * centered / static_cast<double>(n - 1);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
    const bool usable = solver.info() == Eigen::Success && solver.eigenvalues().allFinite() &&
                        solver.eigenvalues().maxCoeff() > 0.0;
    if (usable) {
      const auto m = static_cast<Eigen::Index>(std::min(d, kMaxPcaComponents));
      // Eigenvalues ascend; the last m columns are the leading components.
      const Eigen::MatrixXd basis = solver.eigenvectors().rightCols(m);
      projected = centroids * basis;
    }
  }

  RuleMatrix rules;
  rules.rows.resize(static_cast<std::size_t>(k));
  for (int c = 0; c < k; ++c) {
    int best = -1;
    double best_dist = std::numeric_limits<double>::infinity();
    for (int o = 0; o < k; ++o) {
      if (o == c) continue;
      const double dist = (projected.row(c) - projected.row(o)).squaredNorm();
      if (dist < best_dist) {
        best_dist = dist;
        best = o;
      }
    }
    rules.rows[static_cast<std::size_t>(c)] = {{best, 1.0}};
  }
  return rules;
}

std::vector<int> mislabel_instance(std::span<const int> labels, const FlagSet& flags, const RuleMatrix& rules,
                                   std::uint64_t seed) {
  check_flags(flags, labels.size());
  std::vector<int> out(labels.begin(), labels.end());
  CounterRng rng(seed, hash_name("mislabel-instance"));
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (!flags.flags[i]) continue;
    const auto c = static_cast<std::size_t>(labels[i]);
    if (c >= rules.rows.size() || rules.rows[c].empty())
      throw std::invalid_argument("mislabel_instance: no rule for class " + std::to_string(c));
    out[i] = draw_from_row(rules.rows[c], rng.uniform());
  }
  return out;
}

// ---------------------------------------------------------------------------
// Feature-space perturbations

Matrix perturb_near_ood_covariate(const Matrix& x, const FlagSet& flags, double sigma, std::uint64_t seed) {
  if (!std::isfinite(sigma) || !(sigma > 0.0))
    throw std::invalid_argument("near_ood_covariate: sigma must be finite and > 0");
  check_flags(flags, x.rows());
  Matrix out = x;
  CounterRng rng(seed, hash_name("covariate-noise"));
  for (std::size_t i = 0; i < x.rows(); ++i) {
    if (!flags.flags[i]) continue;
    for (double& v : out.row(i)) v += sigma * rng.normal();
  }
  return out;
}

std::vector<double> domain_shift_raster(std::span<const double> raster, GridShape shape) {
  const auto h = static_cast<long>(shape.height);
  const auto w = static_cast<long>(shape.width);
  auto at = [&](long r, long c) {
    r = std::clamp(r, 0L, h - 1);
    c = std::clamp(c, 0L, w - 1);
    return raster[static_cast<std::size_t>(r * w + c)];
  };

  std::vector<double> edges(raster.size());
  for (long r = 0; r < h; ++r) {
    for (long c = 0; c < w; ++c) {
      const double gx = (at(r - 1, c + 1) + 2.0 * at(r, c + 1) + at(r + 1, c + 1)) -
                        (at(r - 1, c - 1) + 2.0 * at(r, c - 1) + at(r + 1, c - 1));
      const double gy = (at(r + 1, c - 1) + 2.0 * at(r + 1, c) + at(r + 1, c + 1)) -
                        (at(r - 1, c - 1) + 2.0 * at(r - 1, c) + at(r - 1, c + 1));
      edges[static_cast<std::size_t>(r * w + c)] = std::hypot(gx, gy);
    }
  }

  std::vector<double> smoothed(raster.size());
  std::array<double, 9> window{};
  for (long r = 0; r < h; ++r) {
    for (long c = 0; c < w; ++c) {
      std::size_t m = 0;
      for (long dr = -1; dr <= 1; ++dr)
        for (long dc = -1; dc <= 1; ++dc) {
          const long rr = std::clamp(r + dr, 0L, h - 1);
          const long cc = std::clamp(c + dc, 0L, w - 1);
          window[m++] = edges[static_cast<std::size_t>(rr * w + cc)];
        }
      std::nth_element(window.begin(), window.begin() + 4, window.end());
      smoothed[static_cast<std::size_t>(r * w + c)] = window[4];
    }
  }

  const auto [in_lo, in_hi] = std::minmax_element(raster.begin(), raster.end());
  const auto [s_lo, s_hi] = std::minmax_element(smoothed.begin(), smoothed.end());
  const double s_min = *s_lo;
  const double s_max = *s_hi;
  // A flat edge map (e.g. from a constant raster) has no range to map.
  if (!(s_max > s_min)) return smoothed;
  const double scale = (*in_hi - *in_lo) / (s_max - s_min);
  for (double& v : smoothed) v = *in_lo + (v - s_min) * scale;
  return smoothed;
}

Matrix perturb_near_ood_domain(const Matrix& x, const FlagSet& flags, std::optional<GridShape> grid,
                               std::uint64_t /*seed*/) {
  const GridShape shape = require_grid(grid, x.cols(), "near_ood_domain");
  check_flags(flags, x.rows());
  Matrix out = x;
  apply_to_rows(out, flags, shape, [](std::span<const double> row, GridShape s, std::size_t) {
    return domain_shift_raster(row, s);
  });
  return out;
}

FarOodResult perturb_far_ood(const Dataset& ds, const FlagSet& flags, std::uint64_t seed) {
  if (ds.size() < 2) throw std::invalid_argument("far_ood: need at least 2 samples");
  check_flags(flags, ds.size());
  FarOodResult result{ds, {}};
  const auto rows = flags.indices();
  if (rows.size() < 2)
    result.warnings.push_back("fewer than 2 flagged rows; column permutation is the identity");

  for (std::size_t j = 0; j < ds.dims(); ++j) {
    CounterRng rng(seed, j);
    std::vector<std::size_t> order = rows;
    for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);
    for (std::size_t r = 0; r < rows.size(); ++r) result.data.features(rows[r], j) = ds.features(order[r], j);

    // Binary covariates (exactly two distinct values) are also flipped.
    double a = ds.features(0, j);
    std::optional<double> b;
    bool binary = true;
    for (std::size_t i = 1; i < ds.size() && binary; ++i) {
      const double v = ds.features(i, j);
      if (v == a) continue;
      if (!b) {
        b = v;
      } else if (v != *b) {
        binary = false;
      }
    }
    if (binary && b) {
      for (const std::size_t r : rows) {
        double& v = result.data.features(r, j);
        v = (v == a) ? *b : a;
      }
    }
  }
  return result;
}

std::size_t most_predictive_feature(const Dataset& ds) {
  const std::size_t n = ds.size();
  double label_mean = 0.0;
  for (const int y : ds.labels) label_mean += y;
  label_mean /= static_cast<double>(n);
  double label_ss = 0.0;
  for (const int y : ds.labels) label_ss += (y - label_mean) * (y - label_mean);

  std::optional<std::size_t> best;
  double best_corr = -1.0;
  for (std::size_t j = 0; j < ds.dims(); ++j) {
    double mean = 0.0;
    for (std::size_t i = 0; i < n; ++i) mean += ds.features(i, j);
    mean /= static_cast<double>(n);
    double ss = 0.0;
    double cross = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double dx = ds.features(i, j) - mean;
      ss += dx * dx;
      cross += dx * (ds.labels[i] - label_mean);
    }
    if (!(ss > 0.0)) continue;
    const double corr = label_ss > 0.0 ? std::abs(cross) / std::sqrt(ss * label_ss) : 0.0;
    if (corr > best_corr) {
      best_corr = corr;
      best = j;
    }
  }
  if (!best) throw std::invalid_argument("atypical_tail: all features are constant");
  return *best;
}

TailResult perturb_atypical_tail(const Dataset& ds, const FlagSet& flags, double quantile, std::uint64_t seed) {
  if (!(quantile > 0.5 && quantile < 1.0)) throw std::invalid_argument("atypical_tail: quantile must lie in (0.5, 1)");
  check_flags(flags, ds.size());
  const std::size_t feature = most_predictive_feature(ds);
  const std::size_t n = ds.size();

  std::vector<double> sorted(n);
  for (std::size_t i = 0; i < n; ++i) sorted[i] = ds.features(i, feature);
  std::sort(sorted.begin(), sorted.end());
  const double median = 0.5 * (sorted[(n - 1) / 2] + sorted[n / 2]);
  const double last = static_cast<double>(n - 1);
  const auto upper_start = static_cast<std::size_t>(std::floor(quantile * last));
  const auto lower_end = static_cast<std::size_t>(std::ceil((1.0 - quantile) * last));

  TailResult result{ds, feature};
  CounterRng rng(seed, hash_name("atypical-tail"));
  for (std::size_t i = 0; i < n; ++i) {
    if (!flags.flags[i]) continue;
    const double v = ds.features(i, feature);
    double replacement = 0.0;
    if (v >= median) {
      replacement = sorted[upper_start + rng.below(n - upper_start)];
    } else {
      replacement = sorted[rng.below(lower_end + 1)];
    }
    result.data.features(i, feature) = replacement;
  }
  return result;
}

std::vector<double> shift_raster(std::span<const double> raster, GridShape shape, int dy, int dx) {
  const double fill = *std::min_element(raster.begin(), raster.end());
  const auto h = static_cast<long>(shape.height);
  const auto w = static_cast<long>(shape.width);
  std::vector<double> out(raster.size(), fill);
  for (long r = 0; r < h; ++r) {
    for (long c = 0; c < w; ++c) {
      const long sr = r - dy;
      const long sc = c - dx;
      if (sr >= 0 && sr < h && sc >= 0 && sc < w)
        out[static_cast<std::size_t>(r * w + c)] = raster[static_cast<std::size_t>(sr * w + sc)];
    }
  }
  return out;
}

Matrix perturb_crop_shift(const Matrix& x, const FlagSet& flags, std::optional<GridShape> grid, int pixels,
                          std::uint64_t seed) {
  const GridShape shape = require_grid(grid, x.cols(), "atypical_crop_shift");
  if (pixels < 1 || static_cast<std::size_t>(pixels) >= std::min(shape.height, shape.width))
    throw std::invalid_argument("atypical_crop_shift: pixels must lie in [1, min(h, w))");
  check_flags(flags, x.rows());
  Matrix out = x;
  CounterRng rng(seed, hash_name("crop-shift"));
  for (std::size_t i = 0; i < x.rows(); ++i) {
    if (!flags.flags[i]) continue;
    const int dy = rng.below(2) == 0 ? -pixels : pixels;
    const int dx = rng.below(2) == 0 ? -pixels : pixels;
    const auto shifted = shift_raster(x.row(i), shape, dy, dx);
    std::copy(shifted.begin(), shifted.end(), out.row(i).begin());
  }
  return out;
}

std::vector<double> zoom_raster(std::span<const double> raster, GridShape shape, double factor) {
  if (!(factor > 1.0) || !std::isfinite(factor)) throw std::invalid_argument("atypical_zoom: factor must be > 1");
  const auto crop_h = static_cast<std::size_t>(std::floor(static_cast<double>(shape.height) / factor));
  const auto crop_w = static_cast<std::size_t>(std::floor(static_cast<double>(shape.width) / factor));
  if (crop_h < 1 || crop_w < 1) throw std::invalid_argument("atypical_zoom: crop smaller than 1x1");
  const std::size_t r0 = (shape.height - crop_h) / 2;
  const std::size_t c0 = (shape.width - crop_w) / 2;
  std::vector<double> out(raster.size());
  for (std::size_t r = 0; r < shape.height; ++r) {
    const std::size_t sr = r0 + r * crop_h / shape.height;
    for (std::size_t c = 0; c < shape.width; ++c) {
      const std::size_t sc = c0 + c * crop_w / shape.width;
      out[r * shape.width + c] = raster[sr * shape.width + sc];
    }
  }
  return out;
}

Matrix perturb_zoom(const Matrix& x, const FlagSet& flags, std::optional<GridShape> grid, double factor,
                    std::uint64_t /*seed*/) {
  const GridShape shape = require_grid(grid, x.cols(), "atypical_zoom");
  check_flags(flags, x.rows());
  Matrix out = x;
  apply_to_rows(out, flags, shape, [factor](std::span<const double> row, GridShape s, std::size_t) {
    return zoom_raster(row, s, factor);
  });
  return out;
}

// ---------------------------------------------------------------------------
// Dispatch

PerturbationResult perturb(const Dataset& ds, const HardnessSpec& spec) {
  if (spec.steps.empty()) throw std::invalid_argument("hardness spec has no steps");
  for (const auto& step : spec.steps) {
    if (requires_grid(step) && !ds.grid)
      throw std::invalid_argument(std::string(perturbation_name(step)) + " requires a grid dataset");
  }

  PerturbationResult result;
  result.data = ds;
  result.flags = select_flags(ds.size(), spec.proportion, derive_seed(spec.seed, "flags"));

  for (std::size_t s = 0; s < spec.steps.size(); ++s) {
    const auto& step = spec.steps[s];
    StepRecord record;
    record.kind = std::string(perturbation_name(step));
    record.seed = derive_seed(spec.seed, "step", {s});
    if (result.flags.count == 0) {
      record.warnings.push_back("no samples flagged; perturbation is the identity");
      result.steps.push_back(std::move(record));
      continue;
    }
    Dataset& data = result.data;
    const FlagSet& flags = result.flags;
    const std::uint64_t seed = record.seed;
    std::visit(
        Overloaded{
            [&](const MislabelUniform&) { data.labels = mislabel_uniform(data.labels, flags, data.num_classes, seed); },
            [&](const MislabelAsymmetric& m) {
              auto r = mislabel_asymmetric(data.labels, flags, data.num_classes, m.alpha, seed);
              data.labels = std::move(r.labels);
              record.transition = std::move(r.transition);
            },
            [&](const MislabelAdjacent&) { data.labels = mislabel_adjacent(data.labels, flags, data.num_classes, seed); },
            [&](const MislabelInstance& m) {
              RuleMatrix rules = m.rules ? *m.rules : build_instance_rules(data);
              rules.validate(data.num_classes);
              data.labels = mislabel_instance(data.labels, flags, rules, seed);
              record.rules = std::move(rules);
            },
            [&](const NearOodCovariate& m) {
              data.features = perturb_near_ood_covariate(data.features, flags, m.sigma, seed);
            },
            [&](const NearOodDomain&) { data.features = perturb_near_ood_domain(data.features, flags, data.grid, seed); },
            [&](const FarOod&) {
              auto r = perturb_far_ood(data, flags, seed);
              data = std::move(r.data);
              record.warnings = std::move(r.warnings);
            },
            [&](const AtypicalTail& m) {
              auto r = perturb_atypical_tail(data, flags, m.quantile, seed);
              data = std::move(r.data);
              record.tail_feature = r.feature;
            },
            [&](const AtypicalCropShift& m) {
              data.features = perturb_crop_shift(data.features, flags, data.grid, m.pixels, seed);
            },
            [&](const AtypicalZoom& m) { data.features = perturb_zoom(data.features, flags, data.grid, m.factor, seed); },
        },
        step);
    result.steps.push_back(std::move(record));
  }
  return result;
}

}  // namespace hardbench
