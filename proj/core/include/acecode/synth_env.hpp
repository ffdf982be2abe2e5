#pragma once

#include <optional>
#include <span>
#include <vector>

#include "acecode/ppo.hpp"
#include "acecode/rewarder.hpp"
#include "acecode/status.hpp"

namespace acecode::synth {

enum class Symbol { A, B, C, End };

/// Toy generation space. Token ids index into `vocabulary`, which must
/// contain End.
struct SynthSpec {
  std::vector<Symbol> vocabulary{Symbol::A, Symbol::B, Symbol::C, Symbol::End};
  int max_len = 4;
  double base_time = 1.0;
  double reference_time = 1.0;

  void validate() const;
  ppo::Token end_token() const;
};

class TokenOutOfVocabulary : public Error {
 public:
  using Error::Error;
};

struct Grade {
  Status status = Status::CompileError;
  /// Seconds; present iff status is Pass.
  std::optional<double> virtual_runtime;
  bool operator==(const Grade&) const = default;
};

/// [End] alone is a compile error; an A followed later by a C passes with
/// runtime base_time * (1 + number of B tokens); anything else fails a test.
Grade grade(std::span<const ppo::Token> sequence, const SynthSpec& spec);

/// Reward of a finished sequence through the real reward step function.
double sequence_reward(std::span<const ppo::Token> sequence, const SynthSpec& spec, const RewardConfig& cfg);

/// Every terminated sequence: End-terminated ones of length 1..max_len and
/// End-free ones of length max_len.
std::vector<std::vector<ppo::Token>> enumerate_sequences(const SynthSpec& spec);

/// Best reward over all terminated sequences.
double optimal_expected_reward(const SynthSpec& spec, const RewardConfig& cfg);

/// Single-prompt environment over SynthSpec, rewarded by sequence_reward.
class SynthEnv final : public ppo::Environment {
 public:
  SynthEnv(SynthSpec spec, RewardConfig cfg);

  std::size_t prompt_count() const override { return 1; }
  std::size_t vocabulary_size() const override { return spec_.vocabulary.size(); }
  ppo::Episode reset(std::size_t prompt) const override;
  void step(ppo::Episode& episode, ppo::Token action) const override;
  ppo::StateKey state_key(const ppo::Episode& episode) const override;
  double terminal_reward(const ppo::Episode& episode) const override;

  const SynthSpec& spec() const { return spec_; }
  const RewardConfig& reward_config() const { return cfg_; }

 private:
  SynthSpec spec_;
  RewardConfig cfg_;
};

}  // namespace acecode::synth
