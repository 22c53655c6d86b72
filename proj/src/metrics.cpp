#include "hardbench/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace hardbench {

namespace {

struct Counts {
  std::size_t positives = 0;
  std::size_t negatives = 0;
};

Counts check_inputs(std::span<const double> scores, std::span<const std::uint8_t> flags) {
  if (scores.size() != flags.size()) throw std::invalid_argument("scores and flags differ in length");
  Counts c;
  for (const auto f : flags) (f ? c.positives : c.negatives)++;
  if (c.positives == 0 || c.negatives == 0)
    throw std::invalid_argument("detection metrics need at least one hard and one easy sample");
  for (const double s : scores)
    if (std::isnan(s)) throw std::invalid_argument("scores contain NaN");
  return c;
}

}  // namespace

double auprc(std::span<const double> scores, std::span<const std::uint8_t> flags) {
  const Counts counts = check_inputs(scores, flags);
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

  double ap = 0.0;
  std::size_t tp = 0;
  std::size_t seen = 0;
  for (std::size_t start = 0; start < order.size();) {
    std::size_t end = start;
    std::size_t block_pos = 0;
    while (end < order.size() && scores[order[end]] == scores[order[start]]) {
      block_pos += flags[order[end]] ? 1 : 0;
      ++end;
    }
    tp += block_pos;
    seen = end;
    if (block_pos > 0) {
      const double precision = static_cast<double>(tp) / static_cast<double>(seen);
      ap += precision * static_cast<double>(block_pos);
    }
    start = end;
  }
  // Each precision is <= 1, but rounding can still push the sum a hair past P.
  return std::min(ap / static_cast<double>(counts.positives), 1.0);
}

std::vector<double> average_ranks(std::span<const double> values) {
  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(values.size());
  for (std::size_t start = 0; start < order.size();) {
    std::size_t end = start;
    while (end < order.size() && values[order[end]] == values[order[start]]) ++end;
    const double mid = 0.5 * static_cast<double>(start + 1 + end);
    for (std::size_t r = start; r < end; ++r) ranks[order[r]] = mid;
    start = end;
  }
  return ranks;
}

double auroc(std::span<const double> scores, std::span<const std::uint8_t> flags) {
  const Counts counts = check_inputs(scores, flags);
  const auto ranks = average_ranks(scores);
  double pos_rank_sum = 0.0;
  for (std::size_t i = 0; i < ranks.size(); ++i)
    if (flags[i]) pos_rank_sum += ranks[i];
  const double np = static_cast<double>(counts.positives);
  const double nn = static_cast<double>(counts.negatives);
  return (pos_rank_sum - np * (np + 1.0) / 2.0) / (np * nn);
}

std::optional<double> spearman(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw std::invalid_argument("spearman: length mismatch");
  if (a.size() < 2) return std::nullopt;
  const auto ra = average_ranks(a);
  const auto rb = average_ranks(b);
  const double n = static_cast<double>(a.size());
  const double mean = (n + 1.0) / 2.0;  // average ranks always sum to n(n+1)/2
  double cov = 0.0;
  double va = 0.0;
  double vb = 0.0;
  for (std::size_t i = 0; i < ra.size(); ++i) {
    cov += (ra[i] - mean) * (rb[i] - mean);
    va += (ra[i] - mean) * (ra[i] - mean);
    vb += (rb[i] - mean) * (rb[i] - mean);
  }
  if (!(va > 0.0) || !(vb > 0.0)) return std::nullopt;
  return std::clamp(cov / std::sqrt(va * vb), -1.0, 1.0);
}

}  // namespace hardbench
