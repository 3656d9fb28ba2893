#include "adadecay/optim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <stdexcept>

namespace adadecay {

DecayPolicy DecayPolicy::adadecay(double alpha) {
  if (!std::isfinite(alpha)) throw std::invalid_argument("adadecay: alpha must be finite");
  return {Kind::AdaDecay, alpha};
}

DecayPolicy DecayPolicy::randomized(double alpha) {
  if (!std::isfinite(alpha)) throw std::invalid_argument("randomized: alpha must be finite");
  return {Kind::Randomized, alpha};
}

std::string policy_name(const DecayPolicy& policy) {
  switch (policy.kind) {
    case DecayPolicy::Kind::None: return "none";
    case DecayPolicy::Kind::Constant: return "constant";
    case DecayPolicy::Kind::AdaDecay: return "adadecay";
    case DecayPolicy::Kind::Randomized: return "randomized";
  }
  return "?";
}

std::vector<GroupStats> compute_group_stats(const std::vector<Param*>& params) {
  std::map<int, GroupStats> by_group;
  for (const Param* p : params) {
    GroupStats& s = by_group[p->group_id];
    s.group_id = p->group_id;
    for (std::size_t i = 0; i < p->grad.size(); ++i) {
      s.mu += std::abs(p->grad[i]);
      ++s.count;
    }
  }
  for (auto& [gid, s] : by_group) s.mu /= static_cast<double>(s.count);
  for (const Param* p : params) {
    GroupStats& s = by_group[p->group_id];
    for (std::size_t i = 0; i < p->grad.size(); ++i) {
      const double d = std::abs(p->grad[i]) - s.mu;
      s.sigma += d * d;
    }
  }
  std::vector<GroupStats> out;
  out.reserve(by_group.size());
  for (auto& [gid, s] : by_group) {
    s.sigma = std::sqrt(s.sigma / static_cast<double>(s.count));
    out.push_back(s);
  }
  return out;
}

double normalized_grad_norm(double g, const GroupStats& stats, double sigma_floor) {
  if (stats.sigma < sigma_floor) return 0.0;
  return (std::abs(g) - stats.mu) / stats.sigma;
}

double theta_adaptive(double g_tilde, double alpha) {
  const double x = alpha * g_tilde;
  double t;
  if (x >= 0.0) {
    t = 2.0 / (1.0 + std::exp(-x));
  } else {
    const double e = std::exp(x);
    t = 2.0 * e / (1.0 + e);
  }
  // Saturate into the open interval: far in the tails the quotient rounds to
  // exactly 0 or 2.
  const double lo = std::numeric_limits<double>::min();
  const double hi = std::nextafter(2.0, 0.0);
  return std::clamp(t, lo, hi);
}

double theta_randomized(RngState& rng, double alpha) {
  return theta_adaptive(rng.next_normal(), alpha);
}

LrSchedule LrSchedule::constant(double eta) {
  if (eta <= 0.0) throw std::invalid_argument("lr schedule: eta must be positive");
  LrSchedule s;
  s.kind = Kind::Constant;
  s.eta_start = s.eta_end = eta;
  return s;
}

LrSchedule LrSchedule::sigmoid_anneal(double eta_start, double eta_end, double steepness) {
  if (eta_start <= 0.0 || eta_end <= 0.0 || steepness <= 0.0)
    throw std::invalid_argument("lr schedule: rates must be positive");
  if (eta_end > eta_start)
    throw std::invalid_argument("lr schedule: sigmoid anneal must not increase");
  LrSchedule s;
  s.kind = Kind::SigmoidAnneal;
  s.eta_start = eta_start;
  s.eta_end = eta_end;
  s.steepness = steepness;
  return s;
}

LrSchedule LrSchedule::exponential(double eta_start, double rate) {
  if (eta_start <= 0.0 || rate <= 0.0 || rate > 1.0)
    throw std::invalid_argument("lr schedule: exponential rate must lie in (0,1]");
  LrSchedule s;
  s.kind = Kind::Exponential;
  s.eta_start = s.eta_end = eta_start;
  s.rate = rate;
  return s;
}

LrSchedule LrSchedule::staircase(double eta_start, double factor, std::size_t period) {
  if (eta_start <= 0.0 || factor <= 0.0 || factor > 1.0 || period == 0)
    throw std::invalid_argument("lr schedule: staircase needs factor in (0,1] and period >= 1");
  LrSchedule s;
  s.kind = Kind::Staircase;
  s.eta_start = s.eta_end = eta_start;
  s.rate = factor;
  s.period = period;
  return s;
}

double lr_at(const LrSchedule& schedule, std::size_t t, std::size_t total_steps) {
  switch (schedule.kind) {
    case LrSchedule::Kind::Constant:
      return schedule.eta_start;
    case LrSchedule::Kind::SigmoidAnneal: {
      if (total_steps == 0) return schedule.eta_start;
      const double u = static_cast<double>(t) / static_cast<double>(total_steps);
      const double s = schedule.steepness;
      auto logistic = [](double z) { return 1.0 / (1.0 + std::exp(-z)); };
      const double raw = logistic(s * (0.5 - u));
      const double raw0 = logistic(s * 0.5);
      const double raw1 = logistic(-s * 0.5);
      // Rescaled so the endpoints land on eta_start and eta_end exactly.
      const double f = (raw - raw1) / (raw0 - raw1);
      return schedule.eta_end + (schedule.eta_start - schedule.eta_end) * f;
    }
    case LrSchedule::Kind::Exponential:
      return schedule.eta_start * std::pow(schedule.rate, static_cast<double>(t));
    case LrSchedule::Kind::Staircase:
      return schedule.eta_start *
             std::pow(schedule.rate, static_cast<double>(t / schedule.period));
  }
  return schedule.eta_start;
}

OptimizerKind OptimizerKind::sgd(double momentum) {
  if (momentum < 0.0 || momentum >= 1.0)
    throw std::invalid_argument("sgd: momentum must lie in [0,1)");
  OptimizerKind k;
  k.kind = Kind::Sgd;
  k.momentum = momentum;
  return k;
}

OptimizerKind OptimizerKind::rmsprop(double rho, double eps) {
  if (rho < 0.0 || rho >= 1.0) throw std::invalid_argument("rmsprop: rho must lie in [0,1)");
  if (eps <= 0.0) throw std::invalid_argument("rmsprop: eps must be positive");
  OptimizerKind k;
  k.kind = Kind::Rmsprop;
  k.rho = rho;
  k.eps = eps;
  return k;
}

OptimizerKind OptimizerKind::adam(double beta1, double beta2, double eps) {
  if (beta1 < 0.0 || beta1 >= 1.0 || beta2 < 0.0 || beta2 >= 1.0)
    throw std::invalid_argument("adam: betas must lie in [0,1)");
  if (eps <= 0.0) throw std::invalid_argument("adam: eps must be positive");
  OptimizerKind k;
  k.kind = Kind::Adam;
  k.beta1 = beta1;
  k.beta2 = beta2;
  k.eps = eps;
  return k;
}

void sgd_step(const std::vector<Param*>& params, double eta, double lambda,
              const DecayPolicy& policy, double momentum, bool coupled_decay,
              RngState* decay_rng) {
  const double lam = policy.kind == DecayPolicy::Kind::None ? 0.0 : lambda;
  const double theta_max = (policy.kind == DecayPolicy::Kind::AdaDecay ||
                            policy.kind == DecayPolicy::Kind::Randomized)
                               ? 2.0
                               : 1.0;
  if (eta * lam * theta_max >= 1.0)
    throw std::invalid_argument("sgd_step: eta*lambda*theta_max >= 1 would flip parameter signs");
  if (policy.kind == DecayPolicy::Kind::Randomized && decay_rng == nullptr)
    throw std::invalid_argument("sgd_step: randomized policy needs an rng");

  std::vector<GroupStats> stats;
  if (policy.kind == DecayPolicy::Kind::AdaDecay) stats = compute_group_stats(params);
  auto stats_for = [&stats](int group_id) -> const GroupStats& {
    for (const GroupStats& s : stats)
      if (s.group_id == group_id) return s;
    throw std::logic_error("sgd_step: missing group stats");
  };

  for (Param* p : params) {
    Tensor& v = p->state_buffer(0);
    const GroupStats* gs =
        policy.kind == DecayPolicy::Kind::AdaDecay ? &stats_for(p->group_id) : nullptr;
    for (std::size_t i = 0; i < p->value.size(); ++i) {
      const double g = p->grad[i];
      double theta = 1.0;
      if (p->decay_eligible) {
        switch (policy.kind) {
          case DecayPolicy::Kind::None:
          case DecayPolicy::Kind::Constant:
            break;
          case DecayPolicy::Kind::AdaDecay:
            theta = theta_adaptive(normalized_grad_norm(g, *gs), policy.alpha);
            break;
          case DecayPolicy::Kind::Randomized:
            theta = theta_randomized(*decay_rng, policy.alpha);
            break;
        }
      }
      const double decay = p->decay_eligible ? lam * theta : 0.0;
      if (coupled_decay) {
        v[i] = momentum * v[i] + (g + decay * p->value[i]);
        p->value[i] = p->value[i] - eta * v[i];
      } else {
        v[i] = momentum * v[i] + g;
        p->value[i] = (1.0 - eta * decay) * p->value[i] - eta * v[i];
      }
    }
  }
}

void rmsprop_step(const std::vector<Param*>& params, double eta, double lambda, double rho,
                  double eps) {
  for (Param* p : params) {
    Tensor& sq = p->state_buffer(0);
    for (std::size_t i = 0; i < p->value.size(); ++i) {
      const double g = p->grad[i] + (p->decay_eligible ? lambda * p->value[i] : 0.0);
      sq[i] = rho * sq[i] + (1.0 - rho) * g * g;
      p->value[i] -= eta * g / (std::sqrt(sq[i]) + eps);
    }
  }
}

void adam_step(const std::vector<Param*>& params, double eta, double lambda, double beta1,
               double beta2, double eps, std::size_t t) {
  if (t < 1) throw std::invalid_argument("adam_step: t must be >= 1 for bias correction");
  const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(t));
  const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(t));
  for (Param* p : params) {
    Tensor& m = p->state_buffer(0);
    Tensor& v = p->state_buffer(1);
    for (std::size_t i = 0; i < p->value.size(); ++i) {
      const double g = p->grad[i] + (p->decay_eligible ? lambda * p->value[i] : 0.0);
      m[i] = beta1 * m[i] + (1.0 - beta1) * g;
      v[i] = beta2 * v[i] + (1.0 - beta2) * g * g;
      const double m_hat = m[i] / bc1;
      const double v_hat = v[i] / bc2;
      p->value[i] -= eta * m_hat / (std::sqrt(v_hat) + eps);
    }
  }
}

void Optimizer::step(const std::vector<Param*>& params, double eta) {
  ++t_;
  switch (kind_.kind) {
    case OptimizerKind::Kind::Sgd:
      sgd_step(params, eta, lambda_, policy_, kind_.momentum, coupled_, &decay_rng_);
      break;
    case OptimizerKind::Kind::Rmsprop:
      rmsprop_step(params, eta, lambda_, kind_.rho, kind_.eps);
      break;
    case OptimizerKind::Kind::Adam:
      adam_step(params, eta, lambda_, kind_.beta1, kind_.beta2, kind_.eps, t_);
      break;
  }
}

}  // namespace adadecay
