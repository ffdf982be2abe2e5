#include "acecode/synth_env.hpp"

#include <algorithm>
#include <limits>

namespace acecode::synth {
namespace {

using ppo::Token;

char symbol_char(Symbol s) {
  switch (s) {
    case Symbol::A:
      return 'A';
    case Symbol::B:
      return 'B';
    case Symbol::C:
      return 'C';
    case Symbol::End:
      return '$';
  }
  return '?';
}

void extend(const SynthSpec& spec, std::vector<Token>& prefix, std::vector<std::vector<Token>>& out) {
  const Token end = spec.end_token();
  for (Token t = 0; t < spec.vocabulary.size(); ++t) {
    prefix.push_back(t);
    if (t == end || static_cast<int>(prefix.size()) == spec.max_len) {
      out.push_back(prefix);
    } else {
      extend(spec, prefix, out);
    }
    prefix.pop_back();
  }
}

}  // namespace

void SynthSpec::validate() const {
  if (max_len < 2) throw Error("max_len must be >= 2");
  if (!(base_time > 0.0) || !(reference_time > 0.0)) throw Error("times must be positive");
  if (std::count(vocabulary.begin(), vocabulary.end(), Symbol::End) != 1) {
    throw Error("vocabulary must contain End exactly once");
  }
}

Token SynthSpec::end_token() const {
  const auto it = std::find(vocabulary.begin(), vocabulary.end(), Symbol::End);
  if (it == vocabulary.end()) throw Error("vocabulary has no End token");
  return static_cast<Token>(it - vocabulary.begin());
}

Grade grade(std::span<const Token> sequence, const SynthSpec& spec) {
  for (const Token t : sequence) {
    if (t >= spec.vocabulary.size()) throw TokenOutOfVocabulary("token id " + std::to_string(t) + " out of vocabulary");
  }
  if (sequence.empty() || static_cast<int>(sequence.size()) > spec.max_len) {
    throw Error("sequence length must be in [1, max_len]");
  }
  const Token end = spec.end_token();
  const auto end_it = std::find(sequence.begin(), sequence.end(), end);
  if (end_it != sequence.end() && end_it + 1 != sequence.end()) throw Error("tokens after End");
  if (end_it == sequence.end() && static_cast<int>(sequence.size()) != spec.max_len) {
    throw Error("sequence is neither End-terminated nor at max_len");
  }

  if (sequence.front() == end) return Grade{Status::CompileError, std::nullopt};

  bool seen_a = false;
  bool a_then_c = false;
  int b_count = 0;
  for (auto it = sequence.begin(); it != end_it; ++it) {
    const Symbol s = spec.vocabulary[*it];
    if (s == Symbol::A) seen_a = true;
    if (s == Symbol::C && seen_a) a_then_c = true;
    if (s == Symbol::B) ++b_count;
  }
  if (!a_then_c) return Grade{Status::TestFailure, std::nullopt};
  return Grade{Status::Pass, spec.base_time * (1.0 + b_count)};
}

double sequence_reward(std::span<const Token> sequence, const SynthSpec& spec, const RewardConfig& cfg) {
  const auto g = grade(sequence, spec);
  if (g.status != Status::Pass) return reward_from_outcome(g.status, std::nullopt, std::nullopt, cfg).value;
  const FloatNanos reference{spec.reference_time * 1e9};
  const FloatNanos candidate{*g.virtual_runtime * 1e9};
  return reward_from_outcome(Status::Pass, reference, candidate, cfg).value;
}

std::vector<std::vector<Token>> enumerate_sequences(const SynthSpec& spec) {
  spec.validate();
  std::vector<std::vector<Token>> out;
  std::vector<Token> prefix;
  extend(spec, prefix, out);
  return out;
}

double optimal_expected_reward(const SynthSpec& spec, const RewardConfig& cfg) {
  double best = -std::numeric_limits<double>::infinity();
  for (const auto& seq : enumerate_sequences(spec)) best = std::max(best, sequence_reward(seq, spec, cfg));
  return best;
}

SynthEnv::SynthEnv(SynthSpec spec, RewardConfig cfg) : spec_(std::move(spec)), cfg_(std::move(cfg)) {
  spec_.validate();
  cfg_.validate();
}

ppo::Episode SynthEnv::reset(std::size_t prompt) const { return ppo::Episode{prompt, {}, false}; }

void SynthEnv::step(ppo::Episode& episode, Token action) const {
  if (episode.done) throw Error("step on a finished episode");
  if (action >= spec_.vocabulary.size()) throw TokenOutOfVocabulary("action out of vocabulary");
  episode.tokens.push_back(action);
  episode.done = action == spec_.end_token() || static_cast<int>(episode.tokens.size()) == spec_.max_len;
}

ppo::StateKey SynthEnv::state_key(const ppo::Episode& episode) const {
  ppo::StateKey key = std::to_string(episode.prompt) + ":";
  for (const Token t : episode.tokens) key.push_back(symbol_char(spec_.vocabulary[t]));
  return key;
}

double SynthEnv::terminal_reward(const ppo::Episode& episode) const {
  return sequence_reward(episode.tokens, spec_, cfg_);
}

}  // namespace acecode::synth
