#include "acecode/ppo.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <nlohmann/json.hpp>
#include <numeric>
#include <random>

namespace acecode::ppo {
namespace {

void require_same_length(std::size_t a, std::size_t b, const char* what) {
  if (a != b) throw LengthMismatch(std::string(what) + ": length mismatch");
  if (a == 0) throw LengthMismatch(std::string(what) + ": empty input");
}

void check_distribution(std::span<const double> d, const char* name) {
  double sum = 0.0;
  for (const double x : d) {
    if (!(x >= 0.0) || !std::isfinite(x)) throw Error(std::string(name) + " has a negative or non-finite entry");
    sum += x;
  }
  if (std::abs(sum - 1.0) > 1e-9) throw Error(std::string(name) + " does not sum to 1");
}

}  // namespace

std::vector<double> PolicyParams::logits(const StateKey& state) const {
  if (auto it = logits_table.find(state); it != logits_table.end()) return it->second;
  return std::vector<double>(vocabulary_size, 0.0);
}

std::vector<double>& PolicyParams::logits_for(const StateKey& state) {
  auto [it, inserted] = logits_table.try_emplace(state, vocabulary_size, 0.0);
  return it->second;
}

double ValueParams::value(const StateKey& state) const {
  if (auto it = value_table.find(state); it != value_table.end()) return it->second;
  return 0.0;
}

double& ValueParams::value_for(const StateKey& state) { return value_table.try_emplace(state, 0.0).first->second; }

void Trajectory::validate() const {
  if (states.size() != actions.size() || states.size() != old_logprobs.size()) {
    throw Error("trajectory: states, actions and old_logprobs differ in length");
  }
  if (values.size() != states.size() + 1) throw Error("trajectory: values must have one entry per state plus one");
  if (values.back() != 0.0) throw Error("trajectory: terminal value must be 0");
}

void PPOConfig::validate() const {
  if (!(gamma >= 0.0 && gamma <= 1.0)) throw Error("gamma must lie in [0, 1]");
  if (!(clip_eps > 0.0)) throw Error("clip_eps must be positive");
  if (!(value_coef >= 0.0) || !(kl_coef >= 0.0)) throw Error("value_coef and kl_coef must be non-negative");
  if (!(lr_actor > 0.0) || !(lr_critic > 0.0)) throw Error("learning rates must be positive");
  if (epochs < 0) throw Error("epochs must be non-negative");
  if (samples_per_prompt < 1) throw Error("samples_per_prompt must be >= 1");
  if (update_steps < 1) throw Error("update_steps must be >= 1");
  if (!(temperature > 0.0)) throw Error("temperature must be positive");
  if (!(divergence_bound > 0.0)) throw Error("divergence_bound must be positive");
}

double advantage(double reward_t, double v_t, double v_t1, double gamma) { return reward_t + gamma * v_t1 - v_t; }

double clip(double r, double eps) {
  if (r < 1.0 - eps) return 1.0 - eps;
  if (r > 1.0 + eps) return 1.0 + eps;
  return r;
}

double ppo_objective(std::span<const double> ratios, std::span<const double> advantages, double eps) {
  require_same_length(ratios.size(), advantages.size(), "ppo_objective");
  double sum = 0.0;
  for (std::size_t t = 0; t < ratios.size(); ++t) {
    sum += std::min(ratios[t] * advantages[t], clip(ratios[t], eps) * advantages[t]);
  }
  return sum / static_cast<double>(ratios.size());
}

double value_loss(std::span<const double> values, std::span<const double> rewards,
                  std::span<const double> next_values, double gamma) {
  require_same_length(values.size(), rewards.size(), "value_loss");
  require_same_length(values.size(), next_values.size(), "value_loss");
  double sum = 0.0;
  for (std::size_t t = 0; t < values.size(); ++t) {
    const double err = values[t] - (rewards[t] + gamma * next_values[t]);
    sum += err * err;
  }
  return sum / static_cast<double>(values.size());
}

double kl_divergence(std::span<const double> p, std::span<const double> q) {
  if (p.size() != q.size()) throw LengthMismatch("kl_divergence: length mismatch");
  check_distribution(p, "p");
  check_distribution(q, "q");
  double kl = 0.0;
  for (std::size_t j = 0; j < p.size(); ++j) {
    if (p[j] == 0.0) continue;
    if (q[j] == 0.0) throw SupportMismatch("q is zero where p is positive");
    kl += p[j] * std::log(p[j] / q[j]);
  }
  // Rounding can leave a tiny negative residue for p == q.
  return std::max(kl, 0.0);
}

double total_loss(double objective, double v_loss, double kl, const PPOConfig& cfg) {
  return objective - cfg.value_coef * v_loss - cfg.kl_coef * kl;
}

std::vector<double> log_softmax(std::span<const double> logits, double temperature) {
  std::vector<double> out(logits.size());
  if (logits.empty()) return out;
  double hi = -std::numeric_limits<double>::infinity();
  for (const double z : logits) hi = std::max(hi, z / temperature);
  double sum = 0.0;
  for (const double z : logits) sum += std::exp(z / temperature - hi);
  // Shift before subtracting the log-normaliser so large logits keep precision.
  const double log_sum = std::log(sum);
  for (std::size_t j = 0; j < logits.size(); ++j) out[j] = (logits[j] / temperature - hi) - log_sum;
  return out;
}

std::vector<double> softmax(std::span<const double> logits, double temperature) {
  auto out = log_softmax(logits, temperature);
  for (auto& x : out) x = std::exp(x);
  return out;
}

UpdateBatch make_batch(std::span<const Trajectory> trajectories, const PolicyParams& snapshot, const PPOConfig& cfg) {
  UpdateBatch batch;
  batch.snapshot = snapshot;
  for (const auto& traj : trajectories) {
    traj.validate();
    const std::size_t len = traj.states.size();
    for (std::size_t t = 0; t < len; ++t) {
      const double reward_t = (t + 1 == len) ? traj.terminal_reward : 0.0;
      StepSample step;
      step.state = traj.states[t];
      step.action = traj.actions[t];
      step.old_logprob = traj.old_logprobs[t];
      step.advantage = advantage(reward_t, traj.values[t], traj.values[t + 1], cfg.gamma);
      step.value_target = reward_t + cfg.gamma * traj.values[t + 1];
      batch.steps.push_back(std::move(step));
    }
  }
  if (cfg.normalize_advantages && batch.steps.size() > 1) {
    double mean = 0.0;
    for (const auto& s : batch.steps) mean += s.advantage;
    mean /= static_cast<double>(batch.steps.size());
    double var = 0.0;
    for (const auto& s : batch.steps) var += (s.advantage - mean) * (s.advantage - mean);
    const double sd = std::sqrt(var / static_cast<double>(batch.steps.size()));
    for (auto& s : batch.steps) s.advantage = (s.advantage - mean) / (sd + 1e-8);
  }
  return batch;
}

ObjectiveTerms evaluate_objective(const UpdateBatch& batch, const PolicyParams& actor, const ValueParams& critic,
                                  const PPOConfig& cfg) {
  if (batch.steps.empty()) throw Error("empty update batch");
  ObjectiveTerms terms;
  const auto m = static_cast<double>(batch.steps.size());
  for (const auto& step : batch.steps) {
    const auto logp = log_softmax(actor.logits(step.state), cfg.temperature);
    const auto logq = log_softmax(batch.snapshot.logits(step.state), cfg.temperature);
    const double r = std::exp(logp[step.action] - step.old_logprob);
    terms.ppo_obj += std::min(r * step.advantage, clip(r, cfg.clip_eps) * step.advantage) / m;

    double kl = 0.0;
    for (std::size_t j = 0; j < logp.size(); ++j) kl += std::exp(logp[j]) * (logp[j] - logq[j]);
    terms.kl += kl / m;

    const double err = critic.value(step.state) - step.value_target;
    terms.value_loss += err * err / m;
  }
  terms.total = total_loss(terms.ppo_obj, terms.value_loss, terms.kl, cfg);
  return terms;
}

ObjectiveGradient objective_gradient(const UpdateBatch& batch, const PolicyParams& actor, const ValueParams& critic,
                                     const PPOConfig& cfg) {
  if (batch.steps.empty()) throw Error("empty update batch");
  ObjectiveGradient grad;
  const auto m = static_cast<double>(batch.steps.size());
  const double inv_t = 1.0 / cfg.temperature;

  for (const auto& step : batch.steps) {
    const auto logp = log_softmax(actor.logits(step.state), cfg.temperature);
    const auto logq = log_softmax(batch.snapshot.logits(step.state), cfg.temperature);
    const std::size_t vocab = logp.size();
    std::vector<double> p(vocab);
    for (std::size_t j = 0; j < vocab; ++j) p[j] = std::exp(logp[j]);

    const double adv = step.advantage;
    const double r = std::exp(logp[step.action] - step.old_logprob);
    const double clipped = clip(r, cfg.clip_eps);
    const double unclipped_term = r * adv;
    const double clipped_term = clipped * adv;
    grad.terms.ppo_obj += std::min(unclipped_term, clipped_term) / m;

    // When the clipped branch is strictly smaller, r lies outside the clip
    // range and that branch is flat in r.
    const double d_obj_d_r = unclipped_term <= clipped_term ? adv : 0.0;

    double kl = 0.0;
    for (std::size_t j = 0; j < vocab; ++j) kl += p[j] * (logp[j] - logq[j]);
    grad.terms.kl += kl / m;

    auto& g = grad.actor.try_emplace(step.state, vocab, 0.0).first->second;
    for (std::size_t j = 0; j < vocab; ++j) {
      const double indicator = (j == step.action) ? 1.0 : 0.0;
      const double d_r = r * (indicator - p[j]) * inv_t;
      const double d_kl = p[j] * (logp[j] - logq[j] - kl) * inv_t;
      g[j] += (d_obj_d_r * d_r - cfg.kl_coef * d_kl) / m;
    }

    const double err = critic.value(step.state) - step.value_target;
    grad.terms.value_loss += err * err / m;
    grad.value_loss[step.state] += 2.0 * err / m;
  }
  grad.terms.total = total_loss(grad.terms.ppo_obj, grad.terms.value_loss, grad.terms.kl, cfg);
  return grad;
}

std::string TrainingRecord::to_jsonl() const {
  std::string out;
  for (const auto& e : epochs) {
    nlohmann::ordered_json line;
    line["epoch"] = e.epoch;
    line["mean_reward"] = e.mean_reward;
    line["ppo_obj"] = e.ppo_obj;
    line["value_loss"] = e.value_loss;
    line["kl"] = e.kl;
    out += line.dump();
    out.push_back('\n');
  }
  return out;
}

double mean_abs_logit(const PolicyParams& actor) {
  double sum = 0.0;
  std::size_t count = 0;
  for (const auto& [_, row] : actor.logits_table) {
    for (const double z : row) sum += std::abs(z);
    count += row.size();
  }
  return count == 0 ? 0.0 : sum / static_cast<double>(count);
}

TrainingRecord train(const Environment& env, PolicyParams& actor, ValueParams& critic, const PPOConfig& cfg,
                     std::uint64_t seed) {
  cfg.validate();
  if (actor.vocabulary_size != env.vocabulary_size()) throw Error("actor vocabulary does not match the environment");

  TrainingRecord record;
  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    const PolicyParams snapshot = actor;

    std::vector<Trajectory> trajectories;
    double reward_sum = 0.0;
    for (std::size_t prompt = 0; prompt < env.prompt_count(); ++prompt) {
      std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                        static_cast<std::uint32_t>(epoch), static_cast<std::uint32_t>(prompt)};
      std::mt19937_64 rng(seq);
      auto uniform = [&rng] { return static_cast<double>(rng() >> 11) * 0x1.0p-53; };
      for (int s = 0; s < cfg.samples_per_prompt; ++s) {
        trajectories.push_back(sample_trajectory(env, prompt, snapshot, critic, cfg.temperature, uniform));
        reward_sum += trajectories.back().terminal_reward;
      }
    }

    const auto batch = make_batch(trajectories, snapshot, cfg);
    ObjectiveTerms last;
    for (int it = 0; it < cfg.update_steps; ++it) {
      const auto grad = objective_gradient(batch, actor, critic, cfg);
      last = grad.terms;
      for (const auto& [state, g] : grad.actor) {
        auto& row = actor.logits_for(state);
        for (std::size_t j = 0; j < row.size(); ++j) row[j] += cfg.lr_actor * g[j];
      }
      for (const auto& [state, g] : grad.value_loss) critic.value_for(state) -= cfg.lr_critic * g;
    }

    const double drift = mean_abs_logit(actor);
    if (!std::isfinite(drift) || drift > cfg.divergence_bound) {
      throw DivergenceDetected("mean |logit| " + std::to_string(drift) + " exceeds bound at epoch " +
                               std::to_string(epoch));
    }
    for (const auto& [_, v] : critic.value_table) {
      if (!std::isfinite(v)) throw DivergenceDetected("critic value became non-finite at epoch " + std::to_string(epoch));
    }

    record.epochs.push_back(EpochRecord{epoch, reward_sum / static_cast<double>(trajectories.size()), last.ppo_obj,
                                        last.value_loss, last.kl});
  }
  return record;
}

namespace {

double expected_from(const Environment& env, const PolicyParams& actor, double temperature, const Episode& episode) {
  const auto probs = softmax(actor.logits(env.state_key(episode)), temperature);
  double total = 0.0;
  for (std::size_t a = 0; a < probs.size(); ++a) {
    if (probs[a] == 0.0) continue;
    Episode next = episode;
    env.step(next, static_cast<Token>(a));
    total += probs[a] * (next.done ? env.terminal_reward(next) : expected_from(env, actor, temperature, next));
  }
  return total;
}

}  // namespace

double expected_reward(const Environment& env, const PolicyParams& actor, double temperature) {
  if (env.prompt_count() == 0) throw Error("environment has no prompts");
  double sum = 0.0;
  for (std::size_t prompt = 0; prompt < env.prompt_count(); ++prompt) {
    const auto episode = env.reset(prompt);
    sum += episode.done ? env.terminal_reward(episode) : expected_from(env, actor, temperature, episode);
  }
  return sum / static_cast<double>(env.prompt_count());
}

}  // namespace acecode::ppo
