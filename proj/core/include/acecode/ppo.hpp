#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "acecode/status.hpp"

namespace acecode::ppo {

using Token = std::uint32_t;
/// Identifies a generation state: the prompt plus the tokens emitted so far.
using StateKey = std::string;

/// Tabular-softmax actor. Absent states have all-zero logits (uniform policy).
struct PolicyParams {
  std::size_t vocabulary_size = 0;
  std::map<StateKey, std::vector<double>> logits_table;

  std::vector<double> logits(const StateKey& state) const;
  std::vector<double>& logits_for(const StateKey& state);
  bool operator==(const PolicyParams&) const = default;
};

/// Tabular critic. Absent states are valued at zero.
struct ValueParams {
  std::map<StateKey, double> value_table;

  double value(const StateKey& state) const;
  double& value_for(const StateKey& state);
  bool operator==(const ValueParams&) const = default;
};

struct Trajectory {
  std::size_t prompt = 0;
  std::vector<StateKey> states;
  std::vector<Token> actions;
  std::vector<double> old_logprobs;
  /// V(s_t) per step plus a trailing 0 for the terminal state.
  std::vector<double> values;
  double terminal_reward = 0.0;

  /// Throws Error when the length invariants do not hold.
  void validate() const;
};

struct PPOConfig {
  double gamma = 1.0;
  double clip_eps = 0.2;
  double value_coef = 0.5;
  double kl_coef = 0.01;
  double lr_actor = 2.0;
  double lr_critic = 0.5;
  int epochs = 200;
  int samples_per_prompt = 5;
  /// Gradient steps taken on each sampled batch.
  int update_steps = 4;
  double temperature = 1.0;
  bool normalize_advantages = false;
  /// Mean |logit| above which training aborts.
  double divergence_bound = 1e3;

  void validate() const;
};

class LengthMismatch : public Error {
 public:
  using Error::Error;
};

class SupportMismatch : public Error {
 public:
  using Error::Error;
};

class DivergenceDetected : public Error {
 public:
  using Error::Error;
};

/// One-step advantage R_t + gamma * V(s_{t+1}) - V(s_t).
double advantage(double reward_t, double v_t, double v_t1, double gamma);

/// Clamps r into [1 - eps, 1 + eps].
double clip(double r, double eps);

/// Mean over steps of min(r*A, clip(r)*A). Larger is better.
double ppo_objective(std::span<const double> ratios, std::span<const double> advantages, double eps);

/// Mean of (V(s_t) - (R_t + gamma * V(s_{t+1})))^2.
double value_loss(std::span<const double> values, std::span<const double> rewards,
                  std::span<const double> next_values, double gamma);

/// Exact KL(p || q) in nats.
double kl_divergence(std::span<const double> p, std::span<const double> q);

/// objective - value_coef * v_loss - kl_coef * kl; the quantity training maximizes.
double total_loss(double objective, double v_loss, double kl, const PPOConfig& cfg);

std::vector<double> softmax(std::span<const double> logits, double temperature = 1.0);
std::vector<double> log_softmax(std::span<const double> logits, double temperature = 1.0);

/// Episodic token-generation environment. Implementations are stateless; an
/// Episode value carries the generation so far.
struct Episode {
  std::size_t prompt = 0;
  std::vector<Token> tokens;
  bool done = false;
};

class Environment {
 public:
  virtual ~Environment() = default;
  virtual std::size_t prompt_count() const = 0;
  virtual std::size_t vocabulary_size() const = 0;
  virtual Episode reset(std::size_t prompt) const = 0;
  /// Appends `action` and marks the episode done when it terminates.
  virtual void step(Episode& episode, Token action) const = 0;
  virtual StateKey state_key(const Episode& episode) const = 0;
  /// Reward of a finished episode; applied only at its last token.
  virtual double terminal_reward(const Episode& episode) const = 0;
};

/// One optimisation sample: a visited state and its frozen targets.
struct StepSample {
  StateKey state;
  Token action = 0;
  double old_logprob = 0.0;
  double advantage = 0.0;
  double value_target = 0.0;
};

/// Steps of one epoch with the pre-update policy they were sampled from.
struct UpdateBatch {
  std::vector<StepSample> steps;
  PolicyParams snapshot;
};

/// Terminal-reward credit assignment: R_t = 0 except at the last token;
/// advantages and critic targets use the values recorded at sampling time.
UpdateBatch make_batch(std::span<const Trajectory> trajectories, const PolicyParams& snapshot, const PPOConfig& cfg);

struct ObjectiveTerms {
  double ppo_obj = 0.0;
  double value_loss = 0.0;
  double kl = 0.0;
  double total = 0.0;
};

/// Batch objective; KL is the per-token mean of KL(pi_theta || pi_snapshot).
ObjectiveTerms evaluate_objective(const UpdateBatch& batch, const PolicyParams& actor, const ValueParams& critic,
                                  const PPOConfig& cfg);

struct ObjectiveGradient {
  ObjectiveTerms terms;
  /// d total / d logit, for every state visited in the batch.
  std::map<StateKey, std::vector<double>> actor;
  /// d value_loss / d V(s); d total / d V(s) is -value_coef times this.
  std::map<StateKey, double> value_loss;
};

/// Exact analytic gradient for the tabular-softmax actor and tabular critic.
ObjectiveGradient objective_gradient(const UpdateBatch& batch, const PolicyParams& actor, const ValueParams& critic,
                                     const PPOConfig& cfg);

/// Samples one episode; `uniform` yields draws in [0, 1).
template <class UniformSource>
Trajectory sample_trajectory(const Environment& env, std::size_t prompt, const PolicyParams& actor,
                             const ValueParams& critic, double temperature, UniformSource&& uniform);

struct EpochRecord {
  int epoch = 0;
  double mean_reward = 0.0;
  double ppo_obj = 0.0;
  double value_loss = 0.0;
  double kl = 0.0;
  bool operator==(const EpochRecord&) const = default;
};

struct TrainingRecord {
  std::vector<EpochRecord> epochs;
  /// One JSON object per epoch line.
  std::string to_jsonl() const;
  bool operator==(const TrainingRecord&) const = default;
};

/// PPO over `env`, updating `actor` and `critic` in place. Deterministic for
/// a given seed: each (epoch, prompt) pair draws from its own stream.
TrainingRecord train(const Environment& env, PolicyParams& actor, ValueParams& critic, const PPOConfig& cfg,
                     std::uint64_t seed);

/// Exact expected terminal reward of `actor` on `env`, averaged over prompts.
double expected_reward(const Environment& env, const PolicyParams& actor, double temperature = 1.0);

/// Mean absolute logit over the table (0 for an empty table).
double mean_abs_logit(const PolicyParams& actor);

// ---------------------------------------------------------------------------

template <class UniformSource>
Trajectory sample_trajectory(const Environment& env, std::size_t prompt, const PolicyParams& actor,
                             const ValueParams& critic, double temperature, UniformSource&& uniform) {
  Trajectory traj;
  traj.prompt = prompt;
  auto episode = env.reset(prompt);
  while (!episode.done) {
    auto key = env.state_key(episode);
    const auto logits = actor.logits(key);
    const auto logp = log_softmax(logits, temperature);
    const double u = uniform();
    double cumulative = 0.0;
    Token action = static_cast<Token>(logp.size() - 1);
    for (std::size_t j = 0; j < logp.size(); ++j) {
      cumulative += std::exp(logp[j]);
      if (u < cumulative) {
        action = static_cast<Token>(j);
        break;
      }
    }
    traj.values.push_back(critic.value(key));
    traj.states.push_back(std::move(key));
    traj.actions.push_back(action);
    traj.old_logprobs.push_back(logp[action]);
    env.step(episode, action);
  }
  traj.values.push_back(0.0);
  traj.terminal_reward = env.terminal_reward(episode);
  return traj;
}

}  // namespace acecode::ppo
