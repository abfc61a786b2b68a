#pragma once

#include <cstring>
#include <fstream>
#include <functional>
#include <vector>

#include "pushrl/nn.hpp"
#include "pushrl/rng.hpp"

namespace pushrl {

struct Transition {
  Eigen::VectorXd obs;
  Eigen::VectorXd goal;
  Eigen::VectorXd action;  // normalized, components in [-1, 1]
  double reward = -1.0;
  Eigen::VectorXd next_obs;
  // Achieved goal after the step (head(goal_dim)), plus any extra state the
  // reward predicate needs; written by the environment, read by HER.
  Eigen::VectorXd achieved_next;
  bool done = false;
};

class ReplayBuffer {
 public:
  explicit ReplayBuffer(size_t capacity) : capacity_(capacity) {}

  void push(Transition t) {
    if (data_.size() < capacity_) {
      data_.push_back(std::move(t));
    } else {
      data_[cursor_] = std::move(t);
    }
    cursor_ = (cursor_ + 1) % capacity_;
  }

  size_t size() const { return data_.size(); }
  size_t capacity() const { return capacity_; }
  const Transition& at(size_t i) const { return data_[i]; }

 private:
  size_t capacity_;
  size_t cursor_ = 0;
  std::vector<Transition> data_;
};

using RewardFn = std::function<double(const Eigen::VectorXd& achieved_next,
                                      const Eigen::VectorXd& goal)>;

// Hindsight relabeling, "future" strategy: every transition is returned
// as-is plus up to k copies whose goal is the achieved goal at a uniformly
// drawn later point of the same episode, with the reward recomputed.
inline std::vector<Transition> her_relabel(const std::vector<Transition>& episode, int k,
                                           Rng& rng, const RewardFn& reward_fn) {
  std::vector<Transition> out;
  if (episode.empty()) return out;
  const int T = int(episode.size());
  const int goal_dim = int(episode.front().goal.size());
  out.reserve(episode.size() * (1 + std::max(0, k)));
  for (int t = 0; t < T; ++t) {
    out.push_back(episode[t]);
    for (int j = 0; j < k; ++j) {
      const int future = t + rng.uniform_int(T - t);  // in [t, T)
      Transition relabeled = episode[t];
      relabeled.goal = episode[future].achieved_next.head(goal_dim);
      relabeled.reward = reward_fn(relabeled.achieved_next, relabeled.goal);
      out.push_back(std::move(relabeled));
    }
  }
  return out;
}

// Running mean/std feature scaler with clipping, as used around the policy
// and critic inputs.
struct Normalizer {
  Eigen::VectorXd sum, sumsq;
  double count = 0.0;
  double clip = 5.0;
  double std_floor = 1e-2;

  explicit Normalizer(int dim = 0)
      : sum(Eigen::VectorXd::Zero(dim)), sumsq(Eigen::VectorXd::Zero(dim)) {}

  void update(const Eigen::VectorXd& x) {
    sum += x;
    sumsq += x.cwiseProduct(x);
    count += 1.0;
  }

  Eigen::VectorXd mean() const {
    return count > 0 ? Eigen::VectorXd(sum / count) : Eigen::VectorXd::Zero(sum.size());
  }

  Eigen::VectorXd stddev() const {
    if (count <= 0) return Eigen::VectorXd::Ones(sum.size());
    const Eigen::VectorXd mu = mean();
    Eigen::VectorXd var = sumsq / count - mu.cwiseProduct(mu);
    return var.cwiseMax(std_floor * std_floor).cwiseSqrt();
  }

  Eigen::VectorXd normalize(const Eigen::VectorXd& x) const {
    if (count <= 0) return x;
    return ((x - mean()).cwiseQuotient(stddev()))
        .cwiseMax(-clip)
        .cwiseMin(clip);
  }
};

struct DdpgConfig {
  std::vector<int> hidden = {256, 256, 256};
  double gamma = 0.98;
  double polyak = 0.95;  // target <- polyak * target + (1 - polyak) * main
  double lr = 1e-3;  // both actor and critic
  double eps_random = 0.3;
  double sigma_noise = 0.2;
  double action_l2 = 0.1;  // penalty on mean squared actor output; keeps tanh unsaturated
  int batch = 256;
};

// Goal-conditioned DDPG agent: deterministic tanh actor, linear critic,
// polyak-averaged target copies, Adam, input normalization.
class DdpgAgent {
 public:
  DdpgAgent(int obs_dim, int goal_dim, int act_dim, DdpgConfig cfg, Rng& init_rng)
      : cfg_(std::move(cfg)),
        obs_dim_(obs_dim),
        goal_dim_(goal_dim),
        act_dim_(act_dim),
        actor_(Mlp::make(widths(obs_dim + goal_dim, act_dim), OutputActivation::tanh_bounded,
                         init_rng)),
        critic_(Mlp::make(widths(obs_dim + goal_dim + act_dim, 1), OutputActivation::linear,
                          init_rng)),
        actor_target_(actor_),
        critic_target_(critic_),
        actor_opt_(actor_),
        critic_opt_(critic_),
        obs_norm_(obs_dim),
        goal_norm_(goal_dim) {}

  int obs_dim() const { return obs_dim_; }
  int goal_dim() const { return goal_dim_; }
  int act_dim() const { return act_dim_; }
  const DdpgConfig& config() const { return cfg_; }
  const Mlp& actor() const { return actor_; }
  const Mlp& critic() const { return critic_; }
  const Mlp& actor_target() const { return actor_target_; }
  Normalizer& obs_norm() { return obs_norm_; }
  Normalizer& goal_norm() { return goal_norm_; }

  // Behavior policy: with probability eps_random a uniform action, otherwise
  // the actor output with Gaussian noise, always clipped to [-1, 1].
  Eigen::VectorXd act(const Eigen::VectorXd& obs, const Eigen::VectorXd& goal, bool explore,
                      Rng& rng) const {
    if (explore && rng.bernoulli(cfg_.eps_random)) {
      Eigen::VectorXd a(act_dim_);
      for (int i = 0; i < act_dim_; ++i) a[i] = rng.uniform(-1.0, 1.0);
      return a;
    }
    Eigen::VectorXd a = actor_.forward(policy_input(obs, goal));
    if (explore) {
      for (int i = 0; i < act_dim_; ++i) a[i] += cfg_.sigma_noise * rng.normal();
    }
    return a.cwiseMax(-1.0).cwiseMin(1.0);
  }

  void observe_for_normalization(const Eigen::VectorXd& obs, const Eigen::VectorXd& goal) {
    obs_norm_.update(obs);
    goal_norm_.update(goal);
  }

  struct Losses {
    double critic = 0.0;
    double actor = 0.0;
  };

  // One optimization step on a minibatch: Bellman-error critic step through
  // target networks, then actor ascent on Q(s, pi(s)). Targets are
  // polyak-averaged when update_targets is set; training loops pass it once
  // per optimization cycle so targets lag a full cycle behind.
  Losses update(const std::vector<const Transition*>& batch, bool update_targets = true) {
    if (batch.empty()) throw std::invalid_argument("ddpg update: empty batch");
    const int n = int(batch.size());

    Eigen::MatrixXd sg(obs_dim_ + goal_dim_, n);
    Eigen::MatrixXd sga(obs_dim_ + goal_dim_ + act_dim_, n);
    Eigen::MatrixXd next_sg(obs_dim_ + goal_dim_, n);
    Eigen::VectorXd rewards(n);
    for (int i = 0; i < n; ++i) {
      const Transition& t = *batch[i];
      sg.col(i) = policy_input(t.obs, t.goal);
      sga.col(i) << sg.col(i), t.action;
      next_sg.col(i) = policy_input(t.next_obs, t.goal);
      rewards[i] = t.reward;
    }

    // y = clip(r + gamma * Q'(s', pi'(s')), feasible return range)
    const Eigen::MatrixXd next_actions = actor_target_.forward_batch(next_sg);
    Eigen::MatrixXd next_sga(sga.rows(), n);
    next_sga << next_sg, next_actions;
    const Eigen::RowVectorXd q_next = critic_target_.forward_batch(next_sga).row(0);
    const double lo = -1.0 / (1.0 - cfg_.gamma);
    Eigen::RowVectorXd y = (rewards.transpose() + cfg_.gamma * q_next)
                               .cwiseMax(lo)
                               .cwiseMin(0.0);

    // Critic regression.
    MlpTape critic_tape;
    const Eigen::RowVectorXd q = mlp_forward_tape(critic_, sga, critic_tape).row(0);
    const Eigen::RowVectorXd err = q - y;
    Losses losses;
    losses.critic = err.squaredNorm() / n;
    MlpGrads critic_grads = MlpGrads::zeros_like(critic_);
    mlp_backward(critic_, critic_tape, (2.0 / n) * err, critic_grads);
    critic_opt_.step(critic_, critic_grads, cfg_.lr);

    // Actor: minimize -mean Q(s, pi(s)) + action_l2 * mean pi(s)^2 through
    // the frozen critic.
    MlpTape actor_tape;
    const Eigen::MatrixXd actions = mlp_forward_tape(actor_, sg, actor_tape);
    Eigen::MatrixXd actor_sga(sga.rows(), n);
    actor_sga << sg, actions;
    MlpTape q_tape;
    const Eigen::RowVectorXd q_pi = mlp_forward_tape(critic_, actor_sga, q_tape).row(0);
    losses.actor = -q_pi.mean() + cfg_.action_l2 * actions.array().square().mean();
    MlpGrads scratch = MlpGrads::zeros_like(critic_);
    const Eigen::MatrixXd dq_dinput = mlp_backward(
        critic_, q_tape, Eigen::MatrixXd::Constant(1, n, -1.0 / n), scratch);
    Eigen::MatrixXd dq_daction = dq_dinput.bottomRows(act_dim_);
    dq_daction += (2.0 * cfg_.action_l2 / (n * act_dim_)) * actions;
    MlpGrads actor_grads = MlpGrads::zeros_like(actor_);
    mlp_backward(actor_, actor_tape, dq_daction, actor_grads);
    actor_opt_.step(actor_, actor_grads, cfg_.lr);

    if (update_targets) polyak_update(cfg_.polyak);
    return losses;
  }

  void polyak_update(double polyak) {
    for (int l = 0; l < actor_.layers(); ++l) {
      actor_target_.w[l] = polyak * actor_target_.w[l] + (1.0 - polyak) * actor_.w[l];
      actor_target_.b[l] = polyak * actor_target_.b[l] + (1.0 - polyak) * actor_.b[l];
    }
    for (int l = 0; l < critic_.layers(); ++l) {
      critic_target_.w[l] = polyak * critic_target_.w[l] + (1.0 - polyak) * critic_.w[l];
      critic_target_.b[l] = polyak * critic_target_.b[l] + (1.0 - polyak) * critic_.b[l];
    }
  }

  Eigen::VectorXd policy_input(const Eigen::VectorXd& obs, const Eigen::VectorXd& goal) const {
    Eigen::VectorXd in(obs_dim_ + goal_dim_);
    in << obs_norm_.normalize(obs), goal_norm_.normalize(goal);
    return in;
  }

  // --- checkpointing -------------------------------------------------------

  void save(std::ostream& out, const std::array<std::uint64_t, 4>& rng_state) const {
    out << "pushrl-checkpoint 1\n";
    out << obs_dim_ << " " << goal_dim_ << " " << act_dim_ << " " << cfg_.hidden.size();
    for (int h : cfg_.hidden) out << " " << h;
    out << "\n";
    for (auto s : rng_state) out << s << " ";
    out << "\n";
    write_net(out, actor_);
    write_net(out, critic_);
    write_net(out, actor_target_);
    write_net(out, critic_target_);
    write_adam(out, actor_opt_);
    write_adam(out, critic_opt_);
    write_norm(out, obs_norm_);
    write_norm(out, goal_norm_);
  }

  static DdpgAgent load(std::istream& in, DdpgConfig cfg, std::array<std::uint64_t, 4>& rng_state) {
    std::string magic;
    int version = 0;
    in >> magic >> version;
    if (magic != "pushrl-checkpoint" || version != 1)
      throw std::runtime_error("checkpoint: bad header");
    int obs_dim, goal_dim, act_dim;
    size_t n_hidden;
    in >> obs_dim >> goal_dim >> act_dim >> n_hidden;
    cfg.hidden.resize(n_hidden);
    for (auto& h : cfg.hidden) in >> h;
    for (auto& s : rng_state) in >> s;
    in.ignore(std::numeric_limits<std::streamsize>::max(), '\n');  // rest of header line
    Rng dummy(0);
    DdpgAgent agent(obs_dim, goal_dim, act_dim, cfg, dummy);
    read_net(in, agent.actor_);
    read_net(in, agent.critic_);
    read_net(in, agent.actor_target_);
    read_net(in, agent.critic_target_);
    read_adam(in, agent.actor_opt_);
    read_adam(in, agent.critic_opt_);
    read_norm(in, agent.obs_norm_);
    read_norm(in, agent.goal_norm_);
    if (!in) throw std::runtime_error("checkpoint: truncated payload");
    return agent;
  }

 private:
  std::vector<int> widths(int in, int out) const {
    std::vector<int> w{in};
    w.insert(w.end(), cfg_.hidden.begin(), cfg_.hidden.end());
    w.push_back(out);
    return w;
  }

  static void write_doubles(std::ostream& out, const double* p, size_t n) {
    out.write(reinterpret_cast<const char*>(p), std::streamsize(n * sizeof(double)));
  }
  static void read_doubles(std::istream& in, double* p, size_t n) {
    in.read(reinterpret_cast<char*>(p), std::streamsize(n * sizeof(double)));
  }
  static void write_net(std::ostream& out, const Mlp& net) {
    for (int l = 0; l < net.layers(); ++l) {
      write_doubles(out, net.w[l].data(), size_t(net.w[l].size()));
      write_doubles(out, net.b[l].data(), size_t(net.b[l].size()));
    }
  }
  static void read_net(std::istream& in, Mlp& net) {
    for (int l = 0; l < net.layers(); ++l) {
      read_doubles(in, net.w[l].data(), size_t(net.w[l].size()));
      read_doubles(in, net.b[l].data(), size_t(net.b[l].size()));
    }
  }
  static void write_adam(std::ostream& out, const Adam& a) {
    out.write(reinterpret_cast<const char*>(&a.t), sizeof a.t);
    for (size_t l = 0; l < a.m.w.size(); ++l) {
      write_doubles(out, a.m.w[l].data(), size_t(a.m.w[l].size()));
      write_doubles(out, a.m.b[l].data(), size_t(a.m.b[l].size()));
      write_doubles(out, a.v.w[l].data(), size_t(a.v.w[l].size()));
      write_doubles(out, a.v.b[l].data(), size_t(a.v.b[l].size()));
    }
  }
  static void read_adam(std::istream& in, Adam& a) {
    in.read(reinterpret_cast<char*>(&a.t), sizeof a.t);
    for (size_t l = 0; l < a.m.w.size(); ++l) {
      read_doubles(in, a.m.w[l].data(), size_t(a.m.w[l].size()));
      read_doubles(in, a.m.b[l].data(), size_t(a.m.b[l].size()));
      read_doubles(in, a.v.w[l].data(), size_t(a.v.w[l].size()));
      read_doubles(in, a.v.b[l].data(), size_t(a.v.b[l].size()));
    }
  }
  static void write_norm(std::ostream& out, const Normalizer& n) {
    write_doubles(out, n.sum.data(), size_t(n.sum.size()));
    write_doubles(out, n.sumsq.data(), size_t(n.sumsq.size()));
    write_doubles(out, &n.count, 1);
  }
  static void read_norm(std::istream& in, Normalizer& n) {
    read_doubles(in, n.sum.data(), size_t(n.sum.size()));
    read_doubles(in, n.sumsq.data(), size_t(n.sumsq.size()));
    read_doubles(in, &n.count, 1);
  }

  DdpgConfig cfg_;
  int obs_dim_, goal_dim_, act_dim_;
  Mlp actor_, critic_, actor_target_, critic_target_;
  Adam actor_opt_, critic_opt_;
  Normalizer obs_norm_, goal_norm_;
};

}  // namespace pushrl
