#pragma once

#include <Eigen/Dense>
#include <array>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "pushrl/rng.hpp"

namespace pushrl {

// Cart on a rail with an inverted pendulum; theta = 0 is upright. The agent
// must bring the cart to goal_x while keeping the pole up. Frictionless,
// integrated with RK4.
struct CartPoleParams {
  double cart_mass = 1.0;
  double pole_mass = 0.1;
  double pole_half_length = 0.5;
  double gravity = 9.8;
  double force_limit = 10.0;
  double dt = 0.02;
  double goal_x = 0.6;
  double goal_tol = 0.05;
  double upright_tol = 0.2;
  int episode_len = 100;
};

struct CartPoleState {
  double x = 0.0;
  double x_dot = 0.0;
  double theta = 0.0;
  double theta_dot = 0.0;

  bool finite() const {
    return std::isfinite(x) && std::isfinite(x_dot) && std::isfinite(theta) &&
           std::isfinite(theta_dot);
  }
};

namespace detail {
inline Eigen::Vector4d cartpole_deriv(const Eigen::Vector4d& s, double force,
                                      const CartPoleParams& p) {
  const double theta = s[2], theta_dot = s[3];
  const double total = p.cart_mass + p.pole_mass;
  const double ml = p.pole_mass * p.pole_half_length;
  const double cos_t = std::cos(theta), sin_t = std::sin(theta);
  const double tmp = (force + ml * theta_dot * theta_dot * sin_t) / total;
  const double theta_acc = (p.gravity * sin_t - cos_t * tmp) /
                           (p.pole_half_length * (4.0 / 3.0 - p.pole_mass * cos_t * cos_t / total));
  const double x_acc = tmp - ml * theta_acc * cos_t / total;
  return {s[1], x_acc, s[3], theta_acc};
}
}  // namespace detail

inline CartPoleState cartpole_step(const CartPoleState& s, double force, const CartPoleParams& p) {
  force = std::clamp(force, -p.force_limit, p.force_limit);
  const Eigen::Vector4d y0(s.x, s.x_dot, s.theta, s.theta_dot);
  const double h = p.dt;
  const Eigen::Vector4d k1 = detail::cartpole_deriv(y0, force, p);
  const Eigen::Vector4d k2 = detail::cartpole_deriv(y0 + 0.5 * h * k1, force, p);
  const Eigen::Vector4d k3 = detail::cartpole_deriv(y0 + 0.5 * h * k2, force, p);
  const Eigen::Vector4d k4 = detail::cartpole_deriv(y0 + h * k3, force, p);
  const Eigen::Vector4d y = y0 + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  return {y[0], y[1], y[2], y[3]};
}

// Total mechanical energy for the frictionless system (pole as a uniform rod
// pivoted at the cart). Conserved under zero force.
inline double cartpole_energy(const CartPoleState& s, const CartPoleParams& p) {
  const double l = p.pole_half_length;
  const double vx = s.x_dot + l * s.theta_dot * std::cos(s.theta);
  const double vy = -l * s.theta_dot * std::sin(s.theta);
  const double i_com = p.pole_mass * l * l / 3.0;
  const double ke = 0.5 * p.cart_mass * s.x_dot * s.x_dot +
                    0.5 * p.pole_mass * (vx * vx + vy * vy) +
                    0.5 * i_com * s.theta_dot * s.theta_dot;
  const double pe = p.pole_mass * p.gravity * l * std::cos(s.theta);
  return ke + pe;
}

class CartPoleEnv {
 public:
  explicit CartPoleEnv(CartPoleParams params = {}) : p_(params) {}

  static constexpr int obs_dim() { return 4; }
  static constexpr int goal_dim() { return 1; }
  static constexpr int action_dim() { return 1; }

  const CartPoleParams& params() const { return p_; }
  const CartPoleState& state() const { return state_; }
  int steps() const { return steps_; }
  int episode_len() const { return p_.episode_len; }

  Eigen::VectorXd goal() const { return Eigen::VectorXd::Constant(1, p_.goal_x); }

  // (x, theta): head(1) is the achieved goal, theta carries the upright
  // condition into relabeled rewards.
  Eigen::VectorXd achieved_vector() const {
    Eigen::VectorXd v(2);
    v << state_.x, state_.theta;
    return v;
  }

  double reward_of(const Eigen::VectorXd& achieved, const Eigen::VectorXd& goal) const {
    const bool at_goal = std::abs(achieved[0] - goal[0]) < p_.goal_tol;
    const bool upright = std::abs(achieved[1]) < p_.upright_tol;
    return at_goal && upright ? 0.0 : -1.0;
  }

  Eigen::VectorXd obs() const {
    Eigen::VectorXd o(4);
    o << state_.x, state_.x_dot, state_.theta, state_.theta_dot;
    return o;
  }

  // The test-time start distribution: near-upright, near the origin.
  Eigen::VectorXd reset(Rng& rng) {
    CartPoleState s;
    s.x = rng.uniform(-0.05, 0.05);
    s.x_dot = rng.uniform(-0.05, 0.05);
    s.theta = rng.uniform(-0.05, 0.05);
    s.theta_dot = rng.uniform(-0.05, 0.05);
    return reset_from(s);
  }

  Eigen::VectorXd reset_from(const CartPoleState& s) {
    if (!s.finite()) throw std::invalid_argument("cartpole reset: non-finite state");
    state_ = s;
    steps_ = 0;
    return obs();
  }

  struct Feedback {
    Eigen::VectorXd obs;
    double reward;
    bool done;
  };

  // Action in [-1, 1] scaled to the force limit.
  Feedback step(double action) {
    state_ = cartpole_step(state_, action * p_.force_limit, p_);
    ++steps_;
    Feedback fb;
    fb.obs = obs();
    fb.reward = reward_of(achieved_vector(), goal());
    fb.done = steps_ >= p_.episode_len;
    return fb;
  }

 private:
  CartPoleParams p_;
  CartPoleState state_;
  int steps_ = 0;
};

// KL(p || q) over discrete mass vectors, with additive smoothing applied to
// both before normalization.
inline double kl_divergence(const std::vector<double>& p, const std::vector<double>& q,
                            double smoothing = 1e-6) {
  if (p.size() != q.size()) throw std::invalid_argument("kl: size mismatch");
  double ps = 0.0, qs = 0.0;
  for (size_t i = 0; i < p.size(); ++i) {
    ps += p[i] + smoothing;
    qs += q[i] + smoothing;
  }
  double kl = 0.0;
  for (size_t i = 0; i < p.size(); ++i) {
    const double pi = (p[i] + smoothing) / ps;
    const double qi = (q[i] + smoothing) / qs;
    kl += pi * std::log(pi / qi);
  }
  return kl;
}

// Joint occupancy histogram over the four CartPole state dimensions, on a
// fixed 20-bin-per-dimension grid; out-of-range states clamp to edge bins.
class CartPoleHistogram {
 public:
  static constexpr int kBins = 20;
  static constexpr std::array<std::array<double, 2>, 4> kBounds = {
      {{-1.0, 1.5}, {-2.0, 2.0}, {-0.6, 0.6}, {-2.5, 2.5}}};

  CartPoleHistogram() : counts_(kBins * kBins * kBins * kBins, 0.0) {}

  void add(const CartPoleState& s) {
    const int ix = bin(s.x, kBounds[0]);
    const int iv = bin(s.x_dot, kBounds[1]);
    const int it = bin(s.theta, kBounds[2]);
    const int iw = bin(s.theta_dot, kBounds[3]);
    counts_[((ix * kBins + iv) * kBins + it) * kBins + iw] += 1.0;
    total_ += 1.0;
  }

  double total() const { return total_; }

  // Probability mass (no smoothing); zero total gives all-zero mass.
  std::vector<double> mass() const {
    std::vector<double> m(counts_.size(), 0.0);
    if (total_ > 0.0)
      for (size_t i = 0; i < counts_.size(); ++i) m[i] = counts_[i] / total_;
    return m;
  }

  const std::vector<double>& counts() const { return counts_; }

  static double kl(const CartPoleHistogram& p, const CartPoleHistogram& q,
                   double smoothing = 1e-6) {
    return kl_divergence(p.counts_, q.counts_, smoothing);
  }

 private:
  static int bin(double v, const std::array<double, 2>& b) {
    const double t = (v - b[0]) / (b[1] - b[0]);
    const int i = int(std::floor(t * kBins));
    return std::clamp(i, 0, kBins - 1);
  }

  std::vector<double> counts_;
  double total_ = 0.0;
};

}  // namespace pushrl
