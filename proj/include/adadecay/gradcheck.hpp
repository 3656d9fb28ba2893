#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "adadecay/model.hpp"

namespace adadecay {

struct GradCheckReport {
  std::string model;
  std::size_t checked = 0;
  double max_rel_err = 0.0;
};

// Central finite differences of the batch loss against backprop over
// `samples` randomly chosen scalar parameters. The relative error denominator
// is max(|analytic|, |numeric|, denom_floor); the floor keeps difference
// noise from dominating where the true gradient is tiny. The network must be
// deterministic in forward (no active dropout).
double finite_difference_max_rel_err(Network& net, const Tensor& batch,
                                     const std::vector<int>& labels, std::size_t samples,
                                     double h, RngState& pick, double denom_floor = 1e-6);

// Builds the named model at reduced widths (hidden 16, conv 4/8, dense 32) on
// a small deterministic synthetic batch and runs the finite-difference check.
GradCheckReport gradcheck_model(const std::string& model_name, std::size_t samples, double h,
                                std::uint64_t seed);

// All three architectures; the standard correctness gate.
std::vector<GradCheckReport> run_gradcheck(std::size_t samples = 200, double h = 1e-5,
                                           std::uint64_t seed = 1);

}  // namespace adadecay
