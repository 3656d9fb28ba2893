#pragma once

#include <cstddef>
#include <vector>

namespace adadecay {

// Sorts a copy, drops floor(trim_fraction * n) values from each end, and
// averages the rest. trim_fraction must lie in [0, 0.5); values must be
// non-empty.
double trimmed_mean(const std::vector<double>& values, double trim_fraction);

// Mean of the final ceil(fraction * n) entries.
double last_k_epoch_mean(const std::vector<double>& accuracy, double fraction = 0.1);

}  // namespace adadecay
