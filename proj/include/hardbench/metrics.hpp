#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace hardbench {

/// Average precision of ranking `scores` (higher = predicted hard) against
/// binary `flags`. Step-wise: sum over descending-score cut points of
/// precision x recall increment, with tied scores forming one cut.
/// Throws if flags are all positive or all negative.
double auprc(std::span<const double> scores, std::span<const std::uint8_t> flags);

/// P(score_pos > score_neg) + 0.5 P(equal), via mid-ranks.
double auroc(std::span<const double> scores, std::span<const std::uint8_t> flags);

/// 1-based average ranks in ascending order (ties share their mean rank).
std::vector<double> average_ranks(std::span<const double> values);

/// Pearson correlation of average ranks. Empty when either input is
/// constant or shorter than 2.
std::optional<double> spearman(std::span<const double> a, std::span<const double> b);

}  // namespace hardbench
