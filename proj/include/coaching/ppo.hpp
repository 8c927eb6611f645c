#pragma once

// Proximal policy optimization with a Gaussian policy for a single continuous
// action. Policy mean and value estimate come from separate tanh MLPs over a
// running-normalized observation; the log standard deviation is a free,
// state-independent parameter.

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "coaching/coach.hpp"
#include "coaching/mlp.hpp"
#include "coaching/rng.hpp"

namespace coaching {

struct PpoConfig {
  double gamma = 0.99;
  double lam = 0.95;
  double clip_eps = 0.2;
  int epochs = 10;
  int minibatch_size = 64;
  double learning_rate = 3e-4;
  int rollout_episodes = 10;
  double entropy_coef = 0.0;
  int hidden_width = 64;
  double value_coef = 1.0;
  double init_log_std = 0.0;

  void validate() const;
  bool operator==(const PpoConfig&) const = default;
};

inline constexpr double kLogStdMin = -5.0;
inline constexpr double kLogStdMax = 2.0;

/// Generalized advantage estimates for one episode. `values` holds one more
/// entry than `rewards`; the trailing bootstrap entry is ignored (treated as
/// zero) when `terminal` is set.
std::vector<double> gae(std::span<const double> rewards, std::span<const double> values,
                        bool terminal, double gamma, double lam);

/// log N(action; mean, exp(log_std)^2) summed over dimensions.
double gaussian_logprob(std::span<const double> mean, std::span<const double> log_std,
                        std::span<const double> action);
double gaussian_entropy(std::span<const double> log_std);

/// Per-sample PPO-clip loss: -min(r A, clip(r, 1-eps, 1+eps) A), r = exp(new - old).
double clipped_objective(double logprob_new, double logprob_old, double advantage,
                         double clip_eps);

/// Shifts to mean 0 and scales to std 1. Degenerate spreads (std < 1e-8) are
/// only centered.
void normalize_advantages(std::span<double> advantages);

class RunningNormalizer {
 public:
  RunningNormalizer() = default;
  explicit RunningNormalizer(std::size_t dim) : mean_(dim, 0.0), m2_(dim, 0.0) {}

  void update(std::span<const double> obs);
  /// (obs - mean) / sqrt(var + 1e-8), clipped to [-10, 10]. Identity-scaled
  /// before any update.
  void normalize(std::span<const double> obs, std::span<double> out) const;

  std::size_t dim() const { return mean_.size(); }
  double count() const { return count_; }
  const std::vector<double>& mean() const { return mean_; }
  const std::vector<double>& m2() const { return m2_; }
  void restore(double count, std::vector<double> mean, std::vector<double> m2);

 private:
  double count_ = 0.0;
  std::vector<double> mean_;
  std::vector<double> m2_;
};

class Adam {
 public:
  Adam() = default;
  Adam(std::size_t size, double learning_rate, double beta1 = 0.9, double beta2 = 0.999,
       double eps = 1e-8);
  void step(std::span<double> params, std::span<const double> grad);
  long steps() const { return t_; }

 private:
  double lr_ = 0.0, beta1_ = 0.9, beta2_ = 0.999, eps_ = 1e-8;
  long t_ = 0;
  std::vector<double> m_, v_;
};

struct RolloutEpisode {
  std::vector<AgentTransition> transitions;
};

/// Episodes of agent-visible transitions plus the per-sample quantities an
/// update needs. The flat arrays are filled by PpoAgent::prepare.
struct RolloutBatch {
  std::vector<RolloutEpisode> episodes;

  std::size_t size = 0;
  std::size_t obs_dim = 0;
  std::vector<double> obs;  // normalized, size x obs_dim
  std::vector<double> actions;
  std::vector<double> logprob_old;
  std::vector<double> values;
  std::vector<double> advantages;  // normalized
  std::vector<double> returns;

  std::size_t transition_count() const;
};

struct ActResult {
  double action = 0.0;
  double logprob = 0.0;
};

struct LossTerms {
  double policy = 0.0;
  double value = 0.0;
  double entropy = 0.0;
  double total = 0.0;
};

struct UpdateStats {
  double policy_loss = 0.0;
  double value_loss = 0.0;
  double entropy = 0.0;
  double clip_fraction = 0.0;
  int minibatches = 0;
};

class PpoAgent {
 public:
  PpoAgent(std::size_t obs_dim, const PpoConfig& cfg, std::uint64_t seed);
  /// Rebuilds an agent from stored parts (checkpoint loading).
  PpoAgent(const PpoConfig& cfg, Mlp policy_net, std::vector<double> policy_params, Mlp value_net,
           std::vector<double> value_params, RunningNormalizer normalizer, std::uint64_t seed);

  /// Samples an action from the Gaussian policy using `rng`.
  ActResult act(const Observation& obs, CounterRng& rng) const;
  /// Evaluation mode: the policy mean, no sampling.
  double act_mean(const Observation& obs) const;
  double value(const Observation& obs) const;

  /// Normalizes observations, evaluates log-probs and values under the
  /// current parameters, and computes GAE advantages and returns.
  void prepare(RolloutBatch& batch) const;

  /// Prepares the batch, runs the configured epochs of minibatch Adam steps
  /// and then folds the batch's observations into the normalizer. Throws
  /// std::runtime_error on a non-finite loss.
  UpdateStats update(RolloutBatch& batch);

  /// Total minibatch loss over `indices` of a prepared batch. Gradients are
  /// accumulated into the given buffers (sized like the parameter vectors).
  LossTerms loss_and_gradient(const RolloutBatch& batch, std::span<const std::size_t> indices,
                              std::span<double> policy_grad, std::span<double> value_grad) const;

  const PpoConfig& config() const { return cfg_; }
  std::size_t obs_dim() const { return policy_net_.input_dim(); }
  const Mlp& policy_net() const { return policy_net_; }
  const Mlp& value_net() const { return value_net_; }
  /// MLP parameters followed by one log-std entry.
  std::vector<double>& policy_params() { return policy_params_; }
  const std::vector<double>& policy_params() const { return policy_params_; }
  std::vector<double>& value_params() { return value_params_; }
  const std::vector<double>& value_params() const { return value_params_; }
  const RunningNormalizer& normalizer() const { return normalizer_; }
  double log_std() const;

 private:
  std::span<const double> mean_net_params() const {
    return std::span<const double>(policy_params_).first(policy_net_.parameter_count());
  }
  std::vector<double> normalized(const Observation& obs) const;

  PpoConfig cfg_;
  Mlp policy_net_;
  Mlp value_net_;
  std::vector<double> policy_params_;
  std::vector<double> value_params_;
  RunningNormalizer normalizer_;
  Adam policy_opt_;
  Adam value_opt_;
  CounterRng shuffle_rng_;
};

}  // namespace coaching
