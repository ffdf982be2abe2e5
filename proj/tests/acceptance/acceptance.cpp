// Acceptance suite: one PASS/FAIL line per primary criterion.
// Oracles below are written from the formulas directly and never call the
// library function they check.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <nlohmann/json.hpp>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "acecode/exec_harness.hpp"
#include "acecode/metrics.hpp"
#include "acecode/ppo.hpp"
#include "acecode/rewarder.hpp"
#include "acecode/synth_env.hpp"
#include "cli.hpp"
#include "test_support.hpp"

namespace {

using namespace acecode;
using json = nlohmann::json;
using Clock = std::chrono::steady_clock;

struct Check {
  bool ok = true;
  std::string detail;
  void fail(const std::string& why) {
    if (ok) detail = why;
    ok = false;
  }
};

double rel_err(double a, double b) {
  const double scale = std::max(std::abs(a), std::abs(b));
  return scale == 0.0 ? 0.0 : std::abs(a - b) / scale;
}

FloatNanos ms(double v) { return FloatNanos(v * 1e6); }

// Reward exactness, tolerance 1e-12, runtime < 1 s.
Check reward_exactness() {
  Check c;
  // Hand-evaluated, row = ratio E_ref/E_cand, column = k in {0.5, 1, 2}.
  // 0.1: 0.5 + 0.5*sqrt(0.1), 0.5 + 0.05, 0.5 + 0.005
  // 0.5: 0.5 + 0.5*sqrt(0.5), 0.5 + 0.25, 0.5 + 0.125
  // 1, 2, 10: capped at 1.
  const std::vector<double> ratios{0.1, 0.5, 1.0, 2.0, 10.0};
  const std::vector<double> ks{0.5, 1.0, 2.0};
  const double pass_table[5][3] = {
      {0.658113883008419, 0.55, 0.505},
      {0.8535533905932738, 0.75, 0.625},
      {1.0, 1.0, 1.0},
      {1.0, 1.0, 1.0},
      {1.0, 1.0, 1.0},
  };
  int cells = 0;
  for (std::size_t i = 0; i < ratios.size(); ++i) {
    for (std::size_t j = 0; j < ks.size(); ++j) {
      RewardConfig cfg;
      cfg.k = ks[j];
      const auto e_ref = ms(ratios[i]);
      const auto e_cand = ms(1.0);
      const std::map<Status, double> expected{
          {Status::CompileError, -0.5}, {Status::TestFailure, -0.3}, {Status::Pass, pass_table[i][j]}};
      for (const auto& [status, want] : expected) {
        const auto got = reward_from_outcome(status, e_ref, e_cand, cfg).value;
        ++cells;
        if (std::abs(got - want) > 1e-12) {
          std::ostringstream why;
          why << to_string(status) << " ratio " << ratios[i] << " k " << ks[j] << ": got " << got << " want " << want;
          c.fail(why.str());
        }
      }
    }
  }
  if (c.ok) c.detail = std::to_string(cells) + " cells within 1e-12";
  return c;
}

// 10,000 randomized inputs, runtime < 5 s.
Check reward_properties() {
  Check c;
  std::mt19937_64 rng(20240611);
  std::uniform_real_distribution<double> log_time(-3.0, 3.0);
  std::uniform_real_distribution<double> kdist(0.1, 4.0);
  std::uniform_int_distribution<int> sdist(0, 3);
  const Status statuses[] = {Status::Pass, Status::TestFailure, Status::CompileError, Status::Timeout};
  for (int i = 0; i < 10000 && c.ok; ++i) {
    RewardConfig cfg;
    cfg.k = kdist(rng);
    const auto status = statuses[sdist(rng)];
    const auto e_ref = ms(std::pow(10.0, log_time(rng)));
    const auto e1 = ms(std::pow(10.0, log_time(rng)));
    const auto e2 = ms(std::pow(10.0, log_time(rng)));
    const double v1 = reward_from_outcome(status, e_ref, e1, cfg).value;
    const double v2 = reward_from_outcome(status, e_ref, e2, cfg).value;
    const bool in_range = v1 == -0.5 || v1 == -0.3 || (v1 >= 0.5 && v1 <= 1.0);
    if (!in_range) c.fail("value " + std::to_string(v1) + " outside {-0.5, -0.3} U [0.5, 1]");
    if (status == Status::CompileError && v1 != -0.5) c.fail("compile error not -0.5");
    if ((status == Status::TestFailure || status == Status::Timeout) && v1 != -0.3) c.fail("failure not -0.3");
    if (status != Status::Pass) continue;
    if ((e1 <= e2 && v1 < v2) || (e2 <= e1 && v2 < v1)) c.fail("not non-increasing in e_candidate");
    if (e1 <= e_ref && v1 != 1.0) c.fail("cap not exact when e_candidate <= e_reference");
    if (e1 > e_ref) {
      RewardConfig sharper = cfg;
      sharper.k = cfg.k + kdist(rng);
      if (reward_from_outcome(status, e_ref, e1, sharper).value > v1) c.fail("larger k raised the reward");
    }
    if (reward_from_outcome(status, e_ref, e1, cfg).value != v1) c.fail("not pure");
  }
  if (c.ok) c.detail = "10000 inputs: range, monotonicity, cap, k-monotonicity, purity";
  return c;
}

struct NaiveMetrics {
  double pass1, ecc, get, aet, naet;
  std::size_t common;
};

// Direct formulas over the raw arrays, with the product taken before the root.
NaiveMetrics naive_metrics(const std::vector<int>& tuned_pass, const std::vector<double>& tuned_mean,
                           const std::vector<int>& base_pass, const std::vector<double>& base_mean) {
  const std::size_t n = tuned_pass.size();
  double passed = 0;
  for (int p : tuned_pass) passed += p;
  double faster = 0, prod = 1, sum = 0, ratio_sum = 0;
  std::size_t common = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (!tuned_pass[i] || !base_pass[i]) continue;
    ++common;
    faster += base_mean[i] > tuned_mean[i] ? 1 : 0;
    prod *= tuned_mean[i];
    sum += tuned_mean[i];
    ratio_sum += tuned_mean[i] / base_mean[i];
  }
  const double m = static_cast<double>(common);
  return {passed / static_cast<double>(n), faster / m, std::pow(prod, 1.0 / m), sum / m, ratio_sum / m, common};
}

// 1,000 random result sets vs oracle (1e-12 relative) plus the GET outlier
// property for N in 2..50. Runtime < 10 s.
Check metric_oracle() {
  Check c;
  std::mt19937_64 rng(99);
  std::uniform_int_distribution<int> ndist(1, 40);
  std::uniform_real_distribution<double> mean_dist(0.01, 5.0);
  std::uniform_int_distribution<std::int64_t> reps_dist(10, 300);
  std::bernoulli_distribution pass_dist(0.75);
  const Status fails[] = {Status::TestFailure, Status::CompileError, Status::Timeout};
  int compared = 0;
  for (int trial = 0; trial < 1000 && c.ok; ++trial) {
    const int n = ndist(rng);
    std::vector<int> tp(n), bp(n);
    std::vector<double> tm(n), bm(n);
    std::vector<TaskResult> tuned, base;
    for (int i = 0; i < n; ++i) {
      const std::string id = "task" + std::to_string(i);
      tp[i] = pass_dist(rng);
      bp[i] = pass_dist(rng);
      // Occasional exact ties exercise the strict inequality.
      tm[i] = mean_dist(rng);
      bm[i] = (trial % 7 == 0 && i % 2 == 0) ? tm[i] : mean_dist(rng);
      const auto tr = reps_dist(rng);
      const auto br = reps_dist(rng);
      tuned.push_back(tp[i] ? TaskResult::passed(id, tm[i] * static_cast<double>(tr), tr)
                            : TaskResult::failed(id, fails[i % 3]));
      base.push_back(bp[i] ? TaskResult::passed(id, bm[i] * static_cast<double>(br), br)
                           : TaskResult::failed(id, fails[(i + 1) % 3]));
      // The oracle uses the mean exactly as the result stores it.
      tm[i] = *tuned.back().total_time / static_cast<double>(tr);
      bm[i] = *base.back().total_time / static_cast<double>(br);
    }
    const auto want = naive_metrics(tp, tm, bp, bm);
    const auto got = build_report(tuned, std::span<const TaskResult>(base));
    if (rel_err(got.pass_at_1, want.pass1) > 1e-12) c.fail("pass@1 mismatch");
    if (got.n_common_correct != want.common) c.fail("common-correct count mismatch");
    if (want.common == 0) {
      if (got.ecc || got.get || got.aet || got.naet) c.fail("efficiency metrics present without common tasks");
      continue;
    }
    ++compared;
    if (rel_err(*got.ecc, want.ecc) > 1e-12) c.fail("ECC mismatch at trial " + std::to_string(trial));
    if (rel_err(*got.get, want.get) > 1e-12) c.fail("GET mismatch at trial " + std::to_string(trial));
    if (rel_err(*got.aet, want.aet) > 1e-12) c.fail("AET mismatch at trial " + std::to_string(trial));
    if (rel_err(*got.naet, want.naet) > 1e-12) c.fail("NAET mismatch at trial " + std::to_string(trial));
  }
  for (int n = 2; n <= 50 && c.ok; ++n) {
    std::vector<TaskResult> flat, outlier;
    const double m = mean_dist(rng);
    for (int i = 0; i < n; ++i) {
      flat.push_back(TaskResult::passed("t" + std::to_string(i), m * 10.0, 10));
      outlier.push_back(TaskResult::passed("t" + std::to_string(i), (i == n / 2 ? 100.0 * m : m) * 10.0, 10));
    }
    const double factor = get(outlier) / get(flat);
    if (rel_err(factor, std::pow(100.0, 1.0 / n)) > 1e-12) c.fail("GET outlier factor wrong at N=" + std::to_string(n));
  }
  if (c.ok) c.detail = std::to_string(compared) + " sets with common tasks matched; outlier N=2..50 exact";
  return c;
}

// Random tabular instance for the gradient check.
struct Instance {
  ppo::UpdateBatch batch;
  ppo::PolicyParams actor;
  ppo::ValueParams critic;
  ppo::PPOConfig cfg;
};

Instance random_instance(std::mt19937_64& rng) {
  std::uniform_int_distribution<int> vocab_dist(2, 5), states_dist(1, 4), steps_dist(1, 12);
  std::normal_distribution<double> logit(0.0, 1.0), perturb(0.0, 0.15), adv(0.0, 1.0);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  Instance in;
  const auto vocab = static_cast<std::size_t>(vocab_dist(rng));
  const int n_states = states_dist(rng);
  in.actor.vocabulary_size = vocab;
  in.batch.snapshot.vocabulary_size = vocab;
  in.cfg.clip_eps = 0.1 + 0.3 * u01(rng);
  in.cfg.value_coef = u01(rng);
  in.cfg.kl_coef = 0.5 * u01(rng);
  in.cfg.temperature = 0.5 + u01(rng);
  for (int s = 0; s < n_states; ++s) {
    const std::string key = "s" + std::to_string(s);
    std::vector<double> snap(vocab), cur(vocab);
    for (std::size_t a = 0; a < vocab; ++a) {
      snap[a] = logit(rng);
      cur[a] = snap[a] + perturb(rng);
    }
    in.batch.snapshot.logits_table[key] = snap;
    in.actor.logits_table[key] = cur;
    in.critic.value_table[key] = adv(rng);
  }
  std::uniform_int_distribution<int> pick_state(0, n_states - 1);
  std::uniform_int_distribution<std::size_t> pick_action(0, vocab - 1);
  const int steps = steps_dist(rng);
  for (int t = 0; t < steps; ++t) {
    ppo::StepSample s;
    s.state = "s" + std::to_string(pick_state(rng));
    s.action = static_cast<ppo::Token>(pick_action(rng));
    const auto lp = ppo::log_softmax(in.batch.snapshot.logits_table[s.state], in.cfg.temperature);
    s.old_logprob = lp[s.action];
    s.advantage = adv(rng);
    s.value_target = adv(rng);
    in.batch.steps.push_back(s);
  }
  return in;
}

// 100 random instances, central differences h=1e-5, relative error < 1e-4.
Check ppo_gradient() {
  Check c;
  std::mt19937_64 rng(7);
  const double h = 1e-5;
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    auto in = random_instance(rng);
    const auto grad = ppo::objective_gradient(in.batch, in.actor, in.critic, in.cfg);
    std::vector<double> analytic, numeric;
    for (auto& [state, row] : in.actor.logits_table) {
      for (std::size_t a = 0; a < row.size(); ++a) {
        const double saved = row[a];
        row[a] = saved + h;
        const double up = ppo::evaluate_objective(in.batch, in.actor, in.critic, in.cfg).total;
        row[a] = saved - h;
        const double down = ppo::evaluate_objective(in.batch, in.actor, in.critic, in.cfg).total;
        row[a] = saved;
        numeric.push_back((up - down) / (2 * h));
        const auto it = grad.actor.find(state);
        analytic.push_back(it == grad.actor.end() ? 0.0 : it->second[a]);
      }
    }
    for (auto& [state, v] : in.critic.value_table) {
      const double saved = v;
      v = saved + h;
      const double up = ppo::evaluate_objective(in.batch, in.actor, in.critic, in.cfg).total;
      v = saved - h;
      const double down = ppo::evaluate_objective(in.batch, in.actor, in.critic, in.cfg).total;
      v = saved;
      numeric.push_back((up - down) / (2 * h));
      const auto it = grad.value_loss.find(state);
      analytic.push_back(it == grad.value_loss.end() ? 0.0 : -in.cfg.value_coef * it->second);
    }
    double diff = 0, na = 0, nn = 0;
    for (std::size_t i = 0; i < analytic.size(); ++i) {
      diff += (analytic[i] - numeric[i]) * (analytic[i] - numeric[i]);
      na += analytic[i] * analytic[i];
      nn += numeric[i] * numeric[i];
    }
    const double err = std::sqrt(diff) / std::max({std::sqrt(na), std::sqrt(nn), 1e-8});
    worst = std::max(worst, err);
    if (err >= 1e-4) c.fail("instance " + std::to_string(trial) + " relative error " + std::to_string(err));
  }
  std::ostringstream d;
  d << "100 instances, worst relative error " << worst;
  if (c.ok) c.detail = d.str();
  return c;
}

std::vector<double> random_distribution(std::mt19937_64& rng, std::size_t n) {
  std::gamma_distribution<double> g(1.0, 1.0);
  std::vector<double> p(n);
  double s = 0;
  for (auto& x : p) s += (x = g(rng) + 1e-9);
  for (auto& x : p) x /= s;
  return p;
}

Check ppo_mechanism() {
  Check c;
  // Clip boundary table, eps = 0.2.
  const double table[][2] = {{1.3, 1.2}, {0.7, 0.8}, {0.95, 0.95}, {1.2, 1.2}, {0.8, 0.8}, {1.0, 1.0}};
  for (const auto& row : table) {
    if (ppo::clip(row[0], 0.2) != row[1]) c.fail("clip(" + std::to_string(row[0]) + ") wrong");
  }
  const std::vector<std::array<double, 3>> obj_table{{1.0, 2.0, 2.0}, {1.5, 1.0, 1.2}, {0.5, -1.0, -0.8}};
  for (const auto& [r, a, want] : obj_table) {
    const double got = ppo::ppo_objective(std::vector<double>{r}, std::vector<double>{a}, 0.2);
    if (std::abs(got - want) > 1e-15) c.fail("clipped surrogate table wrong at r=" + std::to_string(r));
  }

  // Right after the snapshot every ratio is exactly 1: the surrogate term
  // equals the mean advantage, KL is zero and the gradient matches the
  // unclipped one bit for bit.
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 50; ++trial) {
    auto in = random_instance(rng);
    in.actor = in.batch.snapshot;
    for (const auto& s : in.batch.steps) {
      const auto lp = ppo::log_softmax(in.actor.logits(s.state), in.cfg.temperature);
      if (std::exp(lp[s.action] - s.old_logprob) != 1.0) c.fail("ratio at snapshot is not exactly 1");
    }
    const auto terms = ppo::evaluate_objective(in.batch, in.actor, in.critic, in.cfg);
    if (terms.kl != 0.0) c.fail("KL at snapshot is not 0");
    auto wide = in.cfg;
    wide.clip_eps = 1e9;
    const auto g1 = ppo::objective_gradient(in.batch, in.actor, in.critic, in.cfg);
    const auto g2 = ppo::objective_gradient(in.batch, in.actor, in.critic, wide);
    if (g1.actor != g2.actor) c.fail("first update at the snapshot was clipped");
  }

  // KL >= 0, and zero exactly for identical distributions.
  for (int trial = 0; trial < 2000; ++trial) {
    const std::size_t n = 2 + trial % 6;
    const auto p = random_distribution(rng, n);
    const auto q = random_distribution(rng, n);
    if (!(ppo::kl_divergence(p, q) > 0.0)) c.fail("KL not strictly positive for p != q");
    if (ppo::kl_divergence(p, p) != 0.0) c.fail("KL(p, p) != 0");
  }

  // Determinism: identical seeds give byte-identical logs.
  const synth::SynthEnv env(synth::SynthSpec{}, RewardConfig{});
  ppo::PPOConfig cfg;
  cfg.epochs = 50;
  std::string logs[2];
  for (auto& log : logs) {
    ppo::PolicyParams actor{env.vocabulary_size(), {}};
    ppo::ValueParams critic;
    log = ppo::train(env, actor, critic, cfg, 1234).to_jsonl();
  }
  if (logs[0] != logs[1] || logs[0].empty()) c.fail("training logs differ for the same seed");
  if (c.ok) c.detail = "clip/surrogate tables, snapshot ratio 1, KL sign and zero, bitwise-equal logs";
  return c;
}

struct Cli {
  int code;
  std::string out, err;
};

Cli run_cli(const std::vector<std::string>& args) {
  std::istringstream in;
  std::ostringstream out, err;
  const int code = cli::run(args, in, out, err);
  return {code, out.str(), err.str()};
}

std::vector<json> parse_lines(const std::string& text) {
  std::vector<json> out;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty()) out.push_back(json::parse(line));
  }
  return out;
}

// Defaults, 200 epochs, seed 0: final mean >= 0.9 * optimum; < 60 s total.
Check toy_training() {
  Check c;
  const auto optimal = synth::optimal_expected_reward(synth::SynthSpec{}, RewardConfig{});
  // Oracle: brute force over all 4^1 + ... + 4^4 token strings, keeping those
  // that are terminated, graded by the rule as stated.
  double brute = -1e9;
  for (int len = 1; len <= 4; ++len) {
    int combos = 1;
    for (int i = 0; i < len; ++i) combos *= 4;
    for (int code = 0; code < combos; ++code) {
      std::vector<int> seq;
      for (int i = 0, x = code; i < len; ++i, x /= 4) seq.push_back(x % 4);
      const bool end_at_last = seq.back() == 3;
      bool end_inside = false;
      for (int i = 0; i + 1 < len; ++i) end_inside |= seq[i] == 3;
      if (end_inside || (!end_at_last && len < 4)) continue;
      double r;
      if (len == 1 && end_at_last) {
        r = -0.5;
      } else {
        int first_a = -1, b = 0;
        bool pass = false;
        for (int i = 0; i < len; ++i) {
          if (seq[i] == 0 && first_a < 0) first_a = i;
          if (seq[i] == 1) ++b;
          if (seq[i] == 2 && first_a >= 0) pass = true;
        }
        r = pass ? 0.5 + 0.5 * std::min(1.0 / (1.0 + b), 1.0) : -0.3;
      }
      brute = std::max(brute, r);
    }
  }
  if (optimal != brute) c.fail("optimal_expected_reward disagrees with brute force");

  const auto start = Clock::now();
  const auto spp5 = run_cli({"train-toy", "--epochs", "200", "--seed", "0"});
  const auto spp1 = run_cli({"train-toy", "--epochs", "200", "--seed", "0", "--samples-per-prompt", "1"});
  const double seconds = std::chrono::duration<double>(Clock::now() - start).count();
  if (spp5.code != 0 || spp1.code != 0) {
    c.fail("train-toy exited non-zero: " + spp5.err + spp1.err);
    return c;
  }
  const auto log5 = parse_lines(spp5.out);
  const auto log1 = parse_lines(spp1.out);
  if (log5.size() != 200 || log1.size() != 200) {
    c.fail("expected 200 epoch lines");
    return c;
  }
  const double final5 = log5.back()["mean_reward"];
  const double final1 = log1.back()["mean_reward"];
  const double early5 = log5[19]["mean_reward"];
  const double early1 = log1[19]["mean_reward"];
  if (!(final5 >= 0.9 * optimal)) c.fail("final mean reward " + std::to_string(final5) + " < 0.9 * optimum");
  if (!(final5 >= early5)) c.fail("spp 5: epoch 200 below epoch 20");
  if (!(final1 >= early1)) c.fail("spp 1: epoch 200 below epoch 20");
  if (!(final5 >= final1)) c.fail("spp 5 ended below spp 1");
  if (seconds >= 60.0) c.fail("took " + std::to_string(seconds) + " s");
  std::ostringstream d;
  d << "final " << final5 << " vs optimum " << optimal << "; epoch 20->200: spp5 " << early5 << "->" << final5
    << ", spp1 " << early1 << "->" << final1 << "; " << seconds << " s";
  if (c.ok) c.detail = d.str();
  return c;
}

// Simulated pilots of 0.05 s, 1 s, 3 s with n_min 10, t_max 3 s -> 60, 10, 10.
Check repetition_policy() {
  Check c;
  const std::vector<std::pair<std::int64_t, std::int64_t>> cases{
      {50'000'000, 60}, {1'000'000'000, 10}, {3'000'000'000, 10}};
  for (const auto& [per_exec, want] : cases) {
    int calls = 0;
    const auto n = compute_repetitions(10, std::chrono::seconds(3), [&] {
      ++calls;
      return Nanoseconds(per_exec);
    });
    if (n != want) c.fail("per-exec " + std::to_string(per_exec) + " ns gave n=" + std::to_string(n));
    if (calls != want) c.fail("pilot called " + std::to_string(calls) + " times");
  }
  if (c.ok) c.detail = "n = 60, 10, 10";
  return c;
}

// Mini-corpus through the eval command with the stub runner.
Check mini_corpus() {
  Check c;
  const auto dir = acecode::testing::fixture_dir() / "mini";
  const auto expected = json::parse(acecode::testing::slurp(dir / "expected_report.json"));
  const auto report_path = std::filesystem::temp_directory_path() / "acecode_acceptance_report.json";
  const auto r = run_cli({"eval", "--corpus", (dir / "corpus.jsonl").string(), "--solutions",
                          (dir / "tuned.jsonl").string(), "--baseline", (dir / "baseline.jsonl").string(), "--report",
                          report_path.string(), "--runner", acecode::testing::stub_runner_command()});
  if (r.code != 0) {
    c.fail("eval exited " + std::to_string(r.code) + ": " + r.err);
    return c;
  }
  const auto report = json::parse(acecode::testing::slurp(report_path));
  std::filesystem::remove(report_path);
  if (report["pass_at_1"].get<double>() != expected["pass_at_1"].get<double>()) c.fail("pass@1 not exact");
  if (report["ecc"].get<double>() != expected["ecc"].get<double>()) c.fail("ECC not exact");
  if (rel_err(report["get"].get<double>(), expected["get"].get<double>()) > 1e-12) c.fail("GET off by more than 1e-12");
  if (rel_err(report["aet"].get<double>(), expected["aet"].get<double>()) > 1e-12) c.fail("AET off");
  if (rel_err(report["naet"].get<double>(), expected["naet"].get<double>()) > 1e-12) c.fail("NAET off");
  if (report["n_common_correct"] != expected["n_common_correct"]) c.fail("common-correct count");
  for (const auto& task : report["per_task"]) {
    const auto id = task["task_id"].get<std::string>();
    if (expected["reps"].contains(id) && task["reps"] != expected["reps"][id]) c.fail("reps for " + id);
  }
  std::ostringstream d;
  d << "pass@1 " << report["pass_at_1"] << ", ECC " << report["ecc"] << ", GET " << report["get"];
  if (c.ok) c.detail = d.str();
  return c;
}

}  // namespace

int main() {
  struct Criterion {
    const char* name;
    double budget_s;
    std::function<Check()> run;
  };
  const std::vector<Criterion> criteria{
      {"reward-exactness", 1.0, reward_exactness},
      {"reward-properties", 5.0, reward_properties},
      {"metric-oracle-equivalence", 10.0, metric_oracle},
      {"ppo-gradient-check", 30.0, ppo_gradient},
      {"ppo-mechanism", 10.0, ppo_mechanism},
      {"toy-training-end-to-end", 60.0, toy_training},
      {"repetition-policy", 1.0, repetition_policy},
      {"mini-corpus-evaluation", 60.0, mini_corpus},
  };
  int failures = 0;
  for (const auto& crit : criteria) {
    const auto start = Clock::now();
    Check c;
    try {
      c = crit.run();
    } catch (const std::exception& e) {
      c.fail(std::string("exception: ") + e.what());
    }
    const double secs = std::chrono::duration<double>(Clock::now() - start).count();
    if (secs >= crit.budget_s) c.fail(c.detail + " (over the " + std::to_string(crit.budget_s) + " s budget)");
    std::printf("%s %s [%.3f s] %s\n", c.ok ? "PASS" : "FAIL", crit.name, secs, c.detail.c_str());
    failures += c.ok ? 0 : 1;
  }
  std::fflush(stdout);
  return failures == 0 ? 0 : 1;
}
