#include "coaching/ppo.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <utility>

namespace coaching {
namespace {

constexpr double kHalfLog2Pi = 0.91893853320467274178;  // 0.5 ln(2 pi)

double clamp_log_std(double v) { return std::clamp(v, kLogStdMin, kLogStdMax); }

bool log_std_in_range(double v) { return v > kLogStdMin && v < kLogStdMax; }

std::vector<std::size_t> net_sizes(std::size_t in, int hidden, std::size_t out) {
  const auto h = static_cast<std::size_t>(hidden);
  return {in, h, h, out};
}

}  // namespace

void PpoConfig::validate() const {
  if (!(gamma > 0.0 && gamma <= 1.0)) throw std::invalid_argument("ppo.gamma must be in (0, 1]");
  if (!(lam >= 0.0 && lam <= 1.0)) throw std::invalid_argument("ppo.lam must be in [0, 1]");
  if (!(clip_eps > 0.0)) throw std::invalid_argument("ppo.clip_eps must be positive");
  if (epochs < 1) throw std::invalid_argument("ppo.epochs must be at least 1");
  if (minibatch_size < 1) throw std::invalid_argument("ppo.minibatch_size must be at least 1");
  if (!(learning_rate > 0.0)) throw std::invalid_argument("ppo.learning_rate must be positive");
  if (rollout_episodes < 1) throw std::invalid_argument("ppo.rollout_episodes must be at least 1");
  if (!(entropy_coef >= 0.0)) throw std::invalid_argument("ppo.entropy_coef must be non-negative");
  if (hidden_width < 1) throw std::invalid_argument("ppo.hidden_width must be at least 1");
  if (!(value_coef > 0.0)) throw std::invalid_argument("ppo.value_coef must be positive");
  if (!(init_log_std >= kLogStdMin && init_log_std <= kLogStdMax)) {
    throw std::invalid_argument("ppo.init_log_std must be in [-5, 2]");
  }
}

std::vector<double> gae(std::span<const double> rewards, std::span<const double> values,
                        bool terminal, double gamma, double lam) {
  if (values.size() != rewards.size() + 1) {
    throw std::invalid_argument("gae: values must have one more entry than rewards");
  }
  const std::size_t n = rewards.size();
  std::vector<double> adv(n);
  double running = 0.0;
  for (std::size_t t = n; t-- > 0;) {
    const double next_value = (t + 1 == n && terminal) ? 0.0 : values[t + 1];
    const double delta = rewards[t] + gamma * next_value - values[t];
    running = delta + gamma * lam * running;
    adv[t] = running;
  }
  return adv;
}

double gaussian_logprob(std::span<const double> mean, std::span<const double> log_std,
                        std::span<const double> action) {
  if (mean.size() != log_std.size() || mean.size() != action.size()) {
    throw std::invalid_argument("gaussian_logprob: dimension mismatch");
  }
  double lp = 0.0;
  for (std::size_t d = 0; d < mean.size(); ++d) {
    const double z = (action[d] - mean[d]) * std::exp(-log_std[d]);
    lp += -0.5 * z * z - log_std[d] - kHalfLog2Pi;
  }
  return lp;
}

double gaussian_entropy(std::span<const double> log_std) {
  double h = 0.0;
  for (double s : log_std) h += 0.5 + kHalfLog2Pi + s;
  return h;
}

double clipped_objective(double logprob_new, double logprob_old, double advantage,
                         double clip_eps) {
  const double ratio = std::exp(logprob_new - logprob_old);
  const double clipped = std::clamp(ratio, 1.0 - clip_eps, 1.0 + clip_eps);
  return -std::min(ratio * advantage, clipped * advantage);
}

void normalize_advantages(std::span<double> advantages) {
  if (advantages.empty()) return;
  const double n = static_cast<double>(advantages.size());
  const double mean = std::accumulate(advantages.begin(), advantages.end(), 0.0) / n;
  double var = 0.0;
  for (double a : advantages) var += (a - mean) * (a - mean);
  const double sd = std::sqrt(var / n);
  for (double& a : advantages) {
    a -= mean;
    if (sd >= 1e-8) a /= sd;
  }
}

void RunningNormalizer::update(std::span<const double> obs) {
  if (obs.size() != mean_.size()) throw std::invalid_argument("RunningNormalizer: dimension");
  count_ += 1.0;
  for (std::size_t i = 0; i < obs.size(); ++i) {
    const double delta = obs[i] - mean_[i];
    mean_[i] += delta / count_;
    m2_[i] += delta * (obs[i] - mean_[i]);
  }
}

void RunningNormalizer::normalize(std::span<const double> obs, std::span<double> out) const {
  if (obs.size() != mean_.size() || out.size() != mean_.size()) {
    throw std::invalid_argument("RunningNormalizer: dimension");
  }
  for (std::size_t i = 0; i < obs.size(); ++i) {
    const double var = count_ > 1.0 ? m2_[i] / count_ : 1.0;
    const double z = (obs[i] - mean_[i]) / std::sqrt(var + 1e-8);
    out[i] = std::clamp(z, -10.0, 10.0);
  }
}

void RunningNormalizer::restore(double count, std::vector<double> mean, std::vector<double> m2) {
  if (mean.size() != m2.size()) throw std::invalid_argument("RunningNormalizer::restore: sizes");
  count_ = count;
  mean_ = std::move(mean);
  m2_ = std::move(m2);
}

Adam::Adam(std::size_t size, double learning_rate, double beta1, double beta2, double eps)
    : lr_(learning_rate), beta1_(beta1), beta2_(beta2), eps_(eps), m_(size, 0.0), v_(size, 0.0) {}

void Adam::step(std::span<double> params, std::span<const double> grad) {
  if (params.size() != m_.size() || grad.size() != m_.size()) {
    throw std::invalid_argument("Adam::step: size mismatch");
  }
  ++t_;
  const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  for (std::size_t i = 0; i < params.size(); ++i) {
    m_[i] = beta1_ * m_[i] + (1.0 - beta1_) * grad[i];
    v_[i] = beta2_ * v_[i] + (1.0 - beta2_) * grad[i] * grad[i];
    params[i] -= lr_ * (m_[i] / c1) / (std::sqrt(v_[i] / c2) + eps_);
  }
}

std::size_t RolloutBatch::transition_count() const {
  std::size_t n = 0;
  for (const auto& e : episodes) n += e.transitions.size();
  return n;
}

PpoAgent::PpoAgent(std::size_t obs_dim, const PpoConfig& cfg, std::uint64_t seed)
    : cfg_(cfg),
      policy_net_(net_sizes(obs_dim, cfg.hidden_width, 1)),
      value_net_(net_sizes(obs_dim, cfg.hidden_width, 1)),
      normalizer_(obs_dim),
      shuffle_rng_(derive_key(seed, Stream::Shuffle)) {
  cfg_.validate();
  CounterRng init_rng(derive_key(seed, Stream::PolicyInit));
  policy_params_ = policy_net_.init_parameters(init_rng, std::sqrt(2.0), 0.01);
  policy_params_.push_back(cfg_.init_log_std);
  value_params_ = value_net_.init_parameters(init_rng, std::sqrt(2.0), 1.0);
  policy_opt_ = Adam(policy_params_.size(), cfg_.learning_rate);
  value_opt_ = Adam(value_params_.size(), cfg_.learning_rate);
}

PpoAgent::PpoAgent(const PpoConfig& cfg, Mlp policy_net, std::vector<double> policy_params,
                   Mlp value_net, std::vector<double> value_params, RunningNormalizer normalizer,
                   std::uint64_t seed)
    : cfg_(cfg),
      policy_net_(std::move(policy_net)),
      value_net_(std::move(value_net)),
      policy_params_(std::move(policy_params)),
      value_params_(std::move(value_params)),
      normalizer_(std::move(normalizer)),
      shuffle_rng_(derive_key(seed, Stream::Shuffle)) {
  cfg_.validate();
  if (policy_net_.output_dim() != 1 || value_net_.output_dim() != 1) {
    throw std::invalid_argument("PpoAgent: networks must have a single output");
  }
  if (policy_params_.size() != policy_net_.parameter_count() + 1 ||
      value_params_.size() != value_net_.parameter_count()) {
    throw std::invalid_argument("PpoAgent: parameter count does not match network shape");
  }
  if (policy_net_.input_dim() != value_net_.input_dim() ||
      normalizer_.dim() != policy_net_.input_dim()) {
    throw std::invalid_argument("PpoAgent: observation dimension mismatch");
  }
  policy_opt_ = Adam(policy_params_.size(), cfg_.learning_rate);
  value_opt_ = Adam(value_params_.size(), cfg_.learning_rate);
}

double PpoAgent::log_std() const { return clamp_log_std(policy_params_.back()); }

std::vector<double> PpoAgent::normalized(const Observation& obs) const {
  for (double v : obs) {
    if (!std::isfinite(v)) throw std::domain_error("PpoAgent: non-finite observation");
  }
  std::vector<double> z(obs.size());
  normalizer_.normalize(obs, z);
  return z;
}

ActResult PpoAgent::act(const Observation& obs, CounterRng& rng) const {
  const std::vector<double> z = normalized(obs);
  Mlp::Cache cache;
  policy_net_.forward(mean_net_params(), z, 1, cache);
  const double mean = cache.output()[0];
  const double ls = log_std();
  ActResult r;
  r.action = mean + std::exp(ls) * rng.normal();
  r.logprob = gaussian_logprob(std::span(&mean, 1), std::span(&ls, 1), std::span(&r.action, 1));
  return r;
}

double PpoAgent::act_mean(const Observation& obs) const {
  const std::vector<double> z = normalized(obs);
  Mlp::Cache cache;
  policy_net_.forward(mean_net_params(), z, 1, cache);
  return cache.output()[0];
}

double PpoAgent::value(const Observation& obs) const {
  const std::vector<double> z = normalized(obs);
  Mlp::Cache cache;
  value_net_.forward(value_params_, z, 1, cache);
  return cache.output()[0];
}

void PpoAgent::prepare(RolloutBatch& batch) const {
  const std::size_t dim = obs_dim();
  const std::size_t n = batch.transition_count();
  if (n == 0) throw std::invalid_argument("PpoAgent::prepare: empty batch");
  batch.size = n;
  batch.obs_dim = dim;
  batch.obs.assign(n * dim, 0.0);
  batch.actions.resize(n);
  batch.advantages.resize(n);
  batch.returns.resize(n);

  // One extra row per episode for its bootstrap observation.
  const std::size_t rows = n + batch.episodes.size();
  std::vector<double> all_obs(rows * dim);
  std::size_t row = 0;
  for (const auto& ep : batch.episodes) {
    for (const auto& t : ep.transitions) {
      normalizer_.normalize(t.obs, std::span(all_obs).subspan(row++ * dim, dim));
    }
    if (!ep.transitions.empty()) {
      normalizer_.normalize(ep.transitions.back().next_obs,
                            std::span(all_obs).subspan(row * dim, dim));
    }
    ++row;
  }
  for (double v : all_obs) {
    if (!std::isfinite(v)) throw std::domain_error("PpoAgent::prepare: non-finite observation");
  }

  Mlp::Cache vcache;
  value_net_.forward(value_params_, all_obs, rows, vcache);
  const auto all_values = vcache.output();
  Mlp::Cache pcache;
  policy_net_.forward(mean_net_params(), all_obs, rows, pcache);
  const auto all_means = pcache.output();

  batch.values.resize(n);
  batch.logprob_old.resize(n);
  const double ls = log_std();
  std::size_t src = 0;
  std::size_t dst = 0;
  for (const auto& ep : batch.episodes) {
    const std::size_t len = ep.transitions.size();
    std::vector<double> rewards(len);
    std::vector<double> values(len + 1);
    for (std::size_t t = 0; t < len; ++t) {
      const auto& tr = ep.transitions[t];
      rewards[t] = tr.reward;
      values[t] = all_values[src + t];
      std::copy_n(all_obs.begin() + static_cast<std::ptrdiff_t>((src + t) * dim), dim,
                  batch.obs.begin() + static_cast<std::ptrdiff_t>((dst + t) * dim));
      batch.actions[dst + t] = tr.action;
      batch.values[dst + t] = values[t];
      const double mean = all_means[src + t];
      batch.logprob_old[dst + t] =
          gaussian_logprob(std::span(&mean, 1), std::span(&ls, 1), std::span(&tr.action, 1));
    }
    values[len] = all_values[src + len];
    const bool terminal = len > 0 && ep.transitions.back().terminal;
    const std::vector<double> adv = gae(rewards, values, terminal, cfg_.gamma, cfg_.lam);
    for (std::size_t t = 0; t < len; ++t) {
      batch.advantages[dst + t] = adv[t];
      batch.returns[dst + t] = adv[t] + values[t];
    }
    src += len + 1;
    dst += len;
  }
  normalize_advantages(batch.advantages);
}

LossTerms PpoAgent::loss_and_gradient(const RolloutBatch& batch,
                                      std::span<const std::size_t> indices,
                                      std::span<double> policy_grad,
                                      std::span<double> value_grad) const {
  const std::size_t dim = batch.obs_dim;
  const std::size_t m = indices.size();
  if (m == 0) throw std::invalid_argument("loss_and_gradient: empty minibatch");
  if (policy_grad.size() != policy_params_.size() || value_grad.size() != value_params_.size()) {
    throw std::invalid_argument("loss_and_gradient: gradient buffer size");
  }

  std::vector<double> x(m * dim);
  for (std::size_t k = 0; k < m; ++k) {
    std::copy_n(batch.obs.begin() + static_cast<std::ptrdiff_t>(indices[k] * dim), dim,
                x.begin() + static_cast<std::ptrdiff_t>(k * dim));
  }
  const double inv_m = 1.0 / static_cast<double>(m);

  Mlp::Cache pcache;
  policy_net_.forward(mean_net_params(), x, m, pcache);
  const auto means = pcache.output();
  const double raw_ls = policy_params_.back();
  const double ls = clamp_log_std(raw_ls);
  const double inv_var = std::exp(-2.0 * ls);

  LossTerms terms;
  std::vector<double> d_mean(m);
  double d_log_std = 0.0;
  for (std::size_t k = 0; k < m; ++k) {
    const std::size_t i = indices[k];
    const double a = batch.actions[i];
    const double diff = a - means[k];
    const double lp = gaussian_logprob(std::span(&means[k], 1), std::span(&ls, 1), std::span(&a, 1));
    const double adv = batch.advantages[i];
    const double ratio = std::exp(lp - batch.logprob_old[i]);
    const double clipped = std::clamp(ratio, 1.0 - cfg_.clip_eps, 1.0 + cfg_.clip_eps);
    const double unclipped_term = ratio * adv;
    const double clipped_term = clipped * adv;
    terms.policy += -std::min(unclipped_term, clipped_term) * inv_m;
    // The clipped branch is flat in the parameters.
    const double d_lp = unclipped_term <= clipped_term ? -ratio * adv * inv_m : 0.0;
    d_mean[k] = d_lp * diff * inv_var;
    d_log_std += d_lp * (diff * diff * inv_var - 1.0);
  }
  terms.entropy = gaussian_entropy(std::span(&ls, 1));
  d_log_std -= cfg_.entropy_coef;
  policy_net_.backward(mean_net_params(), pcache, d_mean,
                       policy_grad.first(policy_net_.parameter_count()));
  if (log_std_in_range(raw_ls)) policy_grad.back() += d_log_std;

  Mlp::Cache vcache;
  value_net_.forward(value_params_, x, m, vcache);
  const auto v = vcache.output();
  std::vector<double> d_value(m);
  for (std::size_t k = 0; k < m; ++k) {
    const double err = v[k] - batch.returns[indices[k]];
    terms.value += cfg_.value_coef * err * err * inv_m;
    d_value[k] = 2.0 * cfg_.value_coef * err * inv_m;
  }
  value_net_.backward(value_params_, vcache, d_value, value_grad);

  terms.total = terms.policy - cfg_.entropy_coef * terms.entropy + terms.value;
  return terms;
}

UpdateStats PpoAgent::update(RolloutBatch& batch) {
  prepare(batch);
  const std::size_t n = batch.size;
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::vector<double> pgrad(policy_params_.size());
  std::vector<double> vgrad(value_params_.size());
  const auto mb = static_cast<std::size_t>(cfg_.minibatch_size);

  UpdateStats stats;
  double clipped = 0.0;
  for (int epoch = 0; epoch < cfg_.epochs; ++epoch) {
    shuffle(order, shuffle_rng_);
    for (std::size_t start = 0; start < n; start += mb) {
      const std::size_t len = std::min(mb, n - start);
      const std::span<const std::size_t> idx(order.data() + start, len);
      std::fill(pgrad.begin(), pgrad.end(), 0.0);
      std::fill(vgrad.begin(), vgrad.end(), 0.0);
      const LossTerms terms = loss_and_gradient(batch, idx, pgrad, vgrad);
      if (!std::isfinite(terms.total)) {
        std::ostringstream msg;
        msg << "PPO update produced a non-finite loss (policy=" << terms.policy
            << ", value=" << terms.value << ", entropy=" << terms.entropy << ", epoch=" << epoch
            << ", minibatch_start=" << start << ")";
        throw std::runtime_error(msg.str());
      }
      policy_opt_.step(policy_params_, pgrad);
      value_opt_.step(value_params_, vgrad);
      policy_params_.back() = clamp_log_std(policy_params_.back());
      stats.policy_loss += terms.policy;
      stats.value_loss += terms.value;
      stats.entropy += terms.entropy;
      ++stats.minibatches;
    }
  }
  // Clip fraction under the final parameters, for diagnostics.
  {
    Mlp::Cache cache;
    policy_net_.forward(mean_net_params(), batch.obs, n, cache);
    const double ls = log_std();
    for (std::size_t i = 0; i < n; ++i) {
      const double lp = gaussian_logprob(std::span(&cache.output()[i], 1), std::span(&ls, 1),
                                         std::span(&batch.actions[i], 1));
      if (std::abs(std::exp(lp - batch.logprob_old[i]) - 1.0) > cfg_.clip_eps) clipped += 1.0;
    }
  }
  if (stats.minibatches > 0) {
    const double k = static_cast<double>(stats.minibatches);
    stats.policy_loss /= k;
    stats.value_loss /= k;
    stats.entropy /= k;
  }
  stats.clip_fraction = clipped / static_cast<double>(n);

  for (const auto& ep : batch.episodes) {
    for (const auto& t : ep.transitions) normalizer_.update(t.obs);
  }
  return stats;
}

}  // namespace coaching
