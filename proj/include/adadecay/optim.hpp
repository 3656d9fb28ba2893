#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "adadecay/model.hpp"
#include "adadecay/rng.hpp"

namespace adadecay {

// Per-parameter weight-decay policies.
//   None       no decay (lambda treated as zero)
//   Constant   theta = 1 for every parameter
//   AdaDecay   theta = S(g_tilde; alpha), the scaled sigmoid of the
//              layer-normalized gradient norm
//   Randomized theta = S(z; alpha) for a fresh standard-normal z per scalar
//              parameter per iteration
struct DecayPolicy {
  enum class Kind { None, Constant, AdaDecay, Randomized };
  Kind kind = Kind::Constant;
  double alpha = 0.0;

  static DecayPolicy none() { return {Kind::None, 0.0}; }
  static DecayPolicy constant() { return {Kind::Constant, 0.0}; }
  static DecayPolicy adadecay(double alpha);
  static DecayPolicy randomized(double alpha);

  bool operator==(const DecayPolicy&) const = default;
};

std::string policy_name(const DecayPolicy& policy);

// Mean and population standard deviation of |g| over every scalar parameter
// in one normalization group, recomputed each iteration.
struct GroupStats {
  int group_id = 0;
  double mu = 0.0;
  double sigma = 0.0;
  std::size_t count = 0;
};

// Below this sigma a group is degenerate and every member gets theta = 1,
// reproducing constant decay.
inline constexpr double kSigmaFloor = 1e-12;

// Two-pass mean / population std of |g| per group id, ascending group order.
std::vector<GroupStats> compute_group_stats(const std::vector<Param*>& params);

// (|g| - mu) / sigma, or 0 when the group is degenerate (sigma < floor).
double normalized_grad_norm(double g, const GroupStats& stats, double sigma_floor = kSigmaFloor);

// Scaled sigmoid S(x; alpha) = 2 / (1 + exp(-alpha x)), evaluated without
// overflow and saturated into the open interval (0,2). S(0) = 1 exactly.
double theta_adaptive(double g_tilde, double alpha);

// S(z; alpha) with z drawn standard-normal from rng; expectation exactly 1 by
// antisymmetry.
double theta_randomized(RngState& rng, double alpha);

struct LrSchedule {
  enum class Kind { Constant, SigmoidAnneal, Exponential, Staircase };
  Kind kind = Kind::SigmoidAnneal;
  double eta_start = 0.1;
  double eta_end = 0.001;
  double steepness = 10.0;  // SigmoidAnneal
  double rate = 1.0;        // Exponential: per-step factor; Staircase: drop factor
  std::size_t period = 1;   // Staircase steps between drops

  static LrSchedule constant(double eta);
  static LrSchedule sigmoid_anneal(double eta_start, double eta_end, double steepness = 10.0);
  static LrSchedule exponential(double eta_start, double rate);
  static LrSchedule staircase(double eta_start, double factor, std::size_t period);

  bool operator==(const LrSchedule&) const = default;
};

// Learning rate at step t of total_steps. The sigmoid schedule follows a
// logistic profile rescaled so lr_at(0) = eta_start and lr_at(T) = eta_end
// exactly, monotone non-increasing in between. total_steps = 0 returns
// eta_start.
double lr_at(const LrSchedule& schedule, std::size_t t, std::size_t total_steps);

struct OptimizerKind {
  enum class Kind { Sgd, Rmsprop, Adam };
  Kind kind = Kind::Sgd;
  double momentum = 0.9;  // Sgd
  double rho = 0.95;      // Rmsprop second-moment factor
  double beta1 = 0.9;     // Adam
  double beta2 = 0.999;   // Adam
  double eps = 1e-8;

  static OptimizerKind sgd(double momentum = 0.9);
  static OptimizerKind rmsprop(double rho = 0.95, double eps = 1e-8);
  static OptimizerKind adam(double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8);

  bool operator==(const OptimizerKind&) const = default;
};

// One SGD-with-momentum step over all parameters.
//
// Decoupled form (default), matching the multiplicative shrinkage update:
//   v <- momentum * v + g
//   w <- (1 - eta * lambda * theta) * w - eta * v
// Coupled form adds the decay term to the gradient before momentum:
//   v <- momentum * v + (g + lambda * theta * w)
//   w <- w - eta * v
//
// theta per scalar: 1 (Constant), scaled sigmoid of the normalized gradient
// norm (AdaDecay, group stats computed inside the step), sigmoid of a fresh
// normal draw (Randomized, from decay_rng), and lambda treated as 0 (None).
// Throws when eta * lambda * theta_max >= 1, which would flip the sign of w.
void sgd_step(const std::vector<Param*>& params, double eta, double lambda,
              const DecayPolicy& policy, double momentum, bool coupled_decay = false,
              RngState* decay_rng = nullptr);

// Baseline steps with conventional coupled constant L2: the decay term
// lambda * w joins the gradient before the moment accumulators.
void rmsprop_step(const std::vector<Param*>& params, double eta, double lambda, double rho,
                  double eps);
void adam_step(const std::vector<Param*>& params, double eta, double lambda, double beta1,
               double beta2, double eps, std::size_t t);

// Binds an optimizer kind, decay policy, and the randomized-decay stream for
// one trial. step() dispatches on the kind and keeps the Adam step count.
class Optimizer {
 public:
  Optimizer(OptimizerKind kind, DecayPolicy policy, double lambda, bool coupled_decay,
            RngState decay_rng)
      : kind_(kind), policy_(policy), lambda_(lambda), coupled_(coupled_decay),
        decay_rng_(decay_rng) {}

  void step(const std::vector<Param*>& params, double eta);

  std::size_t steps_taken() const { return t_; }

 private:
  OptimizerKind kind_;
  DecayPolicy policy_;
  double lambda_;
  bool coupled_;
  RngState decay_rng_;
  std::size_t t_ = 0;
};

}  // namespace adadecay
