#include "adadecay/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace adadecay {

double trimmed_mean(const std::vector<double>& values, double trim_fraction) {
  if (values.empty()) throw std::invalid_argument("trimmed_mean: empty input");
  if (!(trim_fraction >= 0.0 && trim_fraction < 0.5)) {
    throw std::invalid_argument("trimmed_mean: trim_fraction must lie in [0, 0.5)");
  }
  std::vector<double> sorted = values;
  std::sort(sorted.begin(), sorted.end());
  const std::size_t cut =
      static_cast<std::size_t>(std::floor(trim_fraction * static_cast<double>(sorted.size())));
  const std::size_t kept = sorted.size() - 2 * cut;
  // the mean of equal values is that value; guarantee it without rounding
  if (sorted[cut] == sorted[cut + kept - 1]) return sorted[cut];
  double sum = 0.0;
  for (std::size_t i = cut; i < cut + kept; ++i) sum += sorted[i];
  return sum / static_cast<double>(kept);
}

double last_k_epoch_mean(const std::vector<double>& accuracy, double fraction) {
  if (accuracy.empty()) throw std::invalid_argument("last_k_epoch_mean: empty input");
  if (!(fraction > 0.0 && fraction <= 1.0)) {
    throw std::invalid_argument("last_k_epoch_mean: fraction must lie in (0, 1]");
  }
  const std::size_t n = accuracy.size();
  std::size_t k =
      static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(n)));
  if (k == 0) k = 1;
  if (k > n) k = n;
  bool all_equal = true;
  double sum = 0.0;
  for (std::size_t i = n - k; i < n; ++i) {
    sum += accuracy[i];
    all_equal = all_equal && accuracy[i] == accuracy[n - k];
  }
  // the mean of equal values is that value; guarantee it without rounding
  if (all_equal) return accuracy[n - k];
  return sum / static_cast<double>(k);
}

}  // namespace adadecay
