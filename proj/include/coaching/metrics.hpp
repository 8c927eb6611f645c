#pragma once

#include <optional>
#include <span>

namespace coaching {

/// 1-based episode index at which the first run of `k` consecutive scores
/// strictly above `target` completes.
std::optional<int> win_streak_episode(std::span<const double> scores, double target, int k);

/// First 1-based index i >= window whose trailing window mean strictly
/// exceeds `target`.
std::optional<int> moving_average_crossing(std::span<const double> scores, double target,
                                           int window);

/// Median of a non-empty sample (mean of the middle pair for even sizes).
double median(std::span<const double> values);

}  // namespace coaching
