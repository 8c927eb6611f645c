#include "coaching/metrics.hpp"

#include <algorithm>
#include <stdexcept>
#include <vector>

namespace coaching {

std::optional<int> win_streak_episode(std::span<const double> scores, double target, int k) {
  if (k < 1) throw std::invalid_argument("win_streak_episode: k must be at least 1");
  int run = 0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    run = scores[i] > target ? run + 1 : 0;
    if (run == k) return static_cast<int>(i + 1);
  }
  return std::nullopt;
}

std::optional<int> moving_average_crossing(std::span<const double> scores, double target,
                                           int window) {
  if (window < 1) throw std::invalid_argument("moving_average_crossing: window must be at least 1");
  const auto w = static_cast<std::size_t>(window);
  // Each window is summed afresh so the result never depends on history
  // through accumulated rounding.
  for (std::size_t end = w; end <= scores.size(); ++end) {
    double sum = 0.0;
    for (std::size_t i = end - w; i < end; ++i) sum += scores[i];
    if (sum / static_cast<double>(w) > target) return static_cast<int>(end);
  }
  return std::nullopt;
}

double median(std::span<const double> values) {
  if (values.empty()) throw std::invalid_argument("median: empty sample");
  std::vector<double> v(values.begin(), values.end());
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace coaching
