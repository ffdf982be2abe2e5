#include "cli.hpp"

#include <CLI11.hpp>
#include <fstream>
#include <iostream>
#include <map>
#include <nlohmann/json.hpp>
#include <set>
#include <sstream>

#include "acecode/exec_harness.hpp"
#include "acecode/metrics.hpp"
#include "acecode/ppo.hpp"
#include "acecode/rewarder.hpp"
#include "acecode/service.hpp"
#include "acecode/synth_env.hpp"
#include "acecode/task_corpus.hpp"

namespace acecode::cli {
namespace {

using json = nlohmann::ordered_json;

struct SharedOptions {
  std::string corpus;
  double k = 1.0;
  std::int64_t n_min = 10;
  std::int64_t t_max_ms = 3000;
  std::int64_t hard_timeout_ms = 10000;
  std::string runner = "acecode-driver {job}";
  std::uint64_t seed = 0;
  std::string split = "all";
};

void add_shared(CLI::App& app, SharedOptions& o, bool needs_corpus) {
  auto* corpus = app.add_option("--corpus", o.corpus, "Corpus file (newline-delimited JSON)")->envname("ACE_CORPUS");
  if (needs_corpus) corpus->required();
  app.add_option("--k", o.k, "Efficiency penalty exponent")->envname("ACE_K")->capture_default_str();
  app.add_option("--n-min", o.n_min, "Minimum timed repetitions")->envname("ACE_NMIN")->capture_default_str();
  app.add_option("--t-max-ms", o.t_max_ms, "Accumulated-runtime target per measurement")
      ->envname("ACE_TMAX_MS")
      ->capture_default_str();
  app.add_option("--hard-timeout-ms", o.hard_timeout_ms, "Per-job kill threshold")
      ->envname("ACE_HARD_TIMEOUT_MS")
      ->capture_default_str();
  app.add_option("--runner", o.runner, "Driver command; {job} receives the job-spec path")
      ->envname("ACE_RUNNER")
      ->capture_default_str();
  app.add_option("--seed", o.seed, "Random seed")->envname("ACE_SEED")->capture_default_str();
  app.add_option("--split", o.split, "Corpus split: all, train or test")
      ->envname("ACE_SPLIT")
      ->check(CLI::IsMember({"all", "train", "test"}))
      ->capture_default_str();
}

Split parse_split(const std::string& s) {
  if (s == "train") return Split::Train;
  if (s == "test") return Split::Test;
  return Split::All;
}

RewardConfig reward_config(const SharedOptions& o) {
  RewardConfig cfg;
  cfg.k = o.k;
  cfg.timing.n_min = o.n_min;
  cfg.timing.t_max = std::chrono::milliseconds(o.t_max_ms);
  cfg.timing.hard_timeout = std::chrono::milliseconds(o.hard_timeout_ms);
  cfg.validate();
  return cfg;
}

RunnerConfig runner_config(const SharedOptions& o) {
  RunnerConfig runner;
  runner.command_template = o.runner;
  runner.validate();
  return runner;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

// Thrown for input problems that map to exit code 2.
class InputError : public Error {
 public:
  using Error::Error;
};

struct SolutionRecord {
  std::string task_id;
  std::string code;
};

std::vector<SolutionRecord> load_solutions(const std::string& path) {
  std::string text;
  try {
    text = read_file(path);
  } catch (const Error& e) {
    throw InputError(e.what());
  }
  std::vector<SolutionRecord> out;
  std::set<std::string> seen;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto where = path + ":" + std::to_string(line_no);
    json doc;
    try {
      doc = json::parse(line);
    } catch (const json::parse_error&) {
      throw InputError(where + ": not valid JSON");
    }
    if (!doc.is_object() || !doc.contains("task_id") || !doc["task_id"].is_string() || !doc.contains("code") ||
        !doc["code"].is_string() || doc.size() != 2) {
      throw InputError(where + ": expected {\"task_id\": str, \"code\": str}");
    }
    SolutionRecord rec{doc["task_id"].get<std::string>(), doc["code"].get<std::string>()};
    if (!seen.insert(rec.task_id).second) throw InputError(where + ": duplicate task_id '" + rec.task_id + "'");
    out.push_back(std::move(rec));
  }
  if (out.empty()) throw InputError(path + ": no solutions");
  return out;
}

Corpus load_corpus_checked(const SharedOptions& o) {
  try {
    return load_corpus(o.corpus, parse_split(o.split), o.seed);
  } catch (const Error& e) {
    throw InputError(e.what());
  }
}

std::vector<TaskResult> evaluate(const Corpus& corpus, const std::vector<SolutionRecord>& solutions,
                                 Harness& harness) {
  std::vector<TaskResult> results;
  for (const auto& sol : solutions) {
    const auto* task = corpus.find(sol.task_id);
    if (task == nullptr) throw InputError("solution for unknown task '" + sol.task_id + "'");
    const auto outcome = harness.run(sol.code, task->tests);
    if (outcome.status == Status::Pass) {
      results.push_back(TaskResult::passed(sol.task_id, outcome.stats->total_seconds(), outcome.stats->n));
    } else {
      results.push_back(TaskResult::failed(sol.task_id, outcome.status));
    }
  }
  return results;
}

json result_json(const TaskResult& r) {
  json j;
  j["status"] = to_string(r.status);
  if (r.status == Status::Pass) {
    j["total_s"] = *r.total_time;
    j["reps"] = *r.reps;
    j["mean_s"] = r.mean_time();
  }
  return j;
}

int cmd_eval(const SharedOptions& o, const std::string& solutions_path, const std::string& baseline_path,
             const std::string& report_path, std::ostream& out) {
  const auto corpus = load_corpus_checked(o);
  const auto tuned_solutions = load_solutions(solutions_path);
  std::optional<std::vector<SolutionRecord>> baseline_solutions;
  if (!baseline_path.empty()) baseline_solutions = load_solutions(baseline_path);
  const auto cfg = reward_config(o);
  SubprocessHarness harness(runner_config(o), cfg.timing);

  const auto tuned = evaluate(corpus, tuned_solutions, harness);
  std::optional<std::vector<TaskResult>> baseline;
  if (baseline_solutions) baseline = evaluate(corpus, *baseline_solutions, harness);

  const auto report = baseline ? build_report(tuned, std::span<const TaskResult>(*baseline))
                               : build_report(tuned, std::nullopt);

  json doc;
  doc["pass_at_1"] = report.pass_at_1;
  if (report.ecc) doc["ecc"] = *report.ecc;
  if (report.get) doc["get"] = *report.get;
  if (report.aet) doc["aet"] = *report.aet;
  if (report.naet) doc["naet"] = *report.naet;
  doc["n_tasks"] = report.n_tasks;
  doc["n_common_correct"] = report.n_common_correct;
  std::map<std::string, const TaskResult*> baseline_by_id;
  if (baseline) {
    for (const auto& r : *baseline) baseline_by_id.emplace(r.task_id, &r);
  }
  json per_task = json::array();
  for (const auto& r : tuned) {
    json entry;
    entry["task_id"] = r.task_id;
    const auto fields = result_json(r);
    for (const auto& [key, value] : fields.items()) entry[key] = value;
    if (auto it = baseline_by_id.find(r.task_id); it != baseline_by_id.end()) {
      entry["baseline"] = result_json(*it->second);
    }
    per_task.push_back(std::move(entry));
  }
  doc["per_task"] = std::move(per_task);

  const auto text = doc.dump(2) + "\n";
  if (report_path.empty()) {
    out << text;
  } else {
    std::ofstream file(report_path, std::ios::binary | std::ios::trunc);
    file << text;
    if (!file) throw Error("cannot write report " + report_path);
  }
  return kOk;
}

int cmd_reward(const SharedOptions& o, const std::string& task_id, const std::string& code_file, bool use_cache,
               std::ostream& out) {
  const auto corpus = load_corpus_checked(o);
  const auto* task = corpus.find(task_id);
  if (task == nullptr) throw InputError("unknown task '" + task_id + "'");
  std::string code;
  try {
    code = read_file(code_file);
  } catch (const Error& e) {
    throw InputError(e.what());
  }
  const auto cfg = reward_config(o);
  SubprocessHarness harness(runner_config(o), cfg.timing);
  ReferenceCache cache(host_fingerprint(), use_cache);
  cache.seed_from(corpus);
  const Solution candidate{code, Solution::Origin::Generated, std::nullopt};
  const auto signal = reward_pair(*task, candidate, harness, cfg, &cache);
  out << response_line(task_id, signal) << "\n";
  return kOk;
}

int cmd_serve(const SharedOptions& o, bool parallel_tests, bool use_cache, std::istream& in, std::ostream& out) {
  const auto corpus = load_corpus_checked(o);
  const auto cfg = reward_config(o);
  SubprocessHarness harness(runner_config(o), cfg.timing);
  ReferenceCache cache(host_fingerprint(), use_cache);
  cache.seed_from(corpus);
  RewardService service(corpus, harness, cfg, cache);
  service.serve(in, out, parallel_tests);
  return kOk;
}

int cmd_select_ref(const SharedOptions& o, const std::string& output_path, std::ostream& out, std::ostream& err) {
  Corpus corpus;
  try {
    corpus = load_corpus(o.corpus, Split::All, o.seed);
  } catch (const Error& e) {
    throw InputError(e.what());
  }
  const auto cfg = reward_config(o);
  SubprocessHarness harness(runner_config(o), cfg.timing);
  const auto host = host_fingerprint();
  std::size_t succeeded = 0;
  for (auto& task : corpus.tasks) {
    for (auto& ref : task.references) ref.measured.reset();
    try {
      auto choice = select_reference(task, harness);
      task.references[choice.index].measured = choice.solution.measured;
      task.cached_reference = CachedReference{choice.index, *choice.solution.measured, host};
      task.selection_error.reset();
      ++succeeded;
      out << task.id << ": reference " << choice.index << " (" << choice.solution.measured->mean_seconds() * 1e3
          << " ms mean over " << choice.solution.measured->n << " runs)\n";
    } catch (const NoValidReference& e) {
      task.cached_reference.reset();
      task.selection_error = e.what();
      err << task.id << ": " << e.what() << "\n";
    }
  }
  write_corpus(output_path.empty() ? o.corpus : output_path, corpus);
  return succeeded > 0 ? kOk : kFailure;
}

struct TrainOptions {
  ppo::PPOConfig ppo;
  synth::SynthSpec spec;
  std::string log_path;
  std::string policy_path;
};

int cmd_train_toy(const SharedOptions& o, const TrainOptions& t, std::ostream& out, std::ostream& err) {
  RewardConfig reward;
  reward.k = o.k;
  const synth::SynthEnv env(t.spec, reward);
  ppo::PolicyParams actor{env.vocabulary_size(), {}};
  ppo::ValueParams critic;

  ppo::TrainingRecord record;
  int code = kOk;
  try {
    record = ppo::train(env, actor, critic, t.ppo, o.seed);
  } catch (const ppo::DivergenceDetected& e) {
    err << "diverged: " << e.what() << "\n";
    code = kDiverged;
  }

  const auto log = record.to_jsonl();
  if (t.log_path.empty()) {
    out << log;
  } else {
    std::ofstream file(t.log_path, std::ios::binary | std::ios::trunc);
    file << log;
    if (!file) throw Error("cannot write log " + t.log_path);
  }

  if (!t.policy_path.empty()) {
    json dump;
    dump["vocabulary_size"] = actor.vocabulary_size;
    json logits = json::object();
    for (const auto& [state, row] : actor.logits_table) logits[state] = row;
    dump["logits"] = std::move(logits);
    json values = json::object();
    for (const auto& [state, v] : critic.value_table) values[state] = v;
    dump["values"] = std::move(values);
    std::ofstream file(t.policy_path, std::ios::binary | std::ios::trunc);
    file << dump.dump(2) << "\n";
    if (!file) throw Error("cannot write policy dump " + t.policy_path);
  }

  if (code == kOk) {
    const double optimal = synth::optimal_expected_reward(t.spec, reward);
    err << "optimal reward " << optimal << ", expected reward of final policy "
        << ppo::expected_reward(env, actor, t.ppo.temperature);
    if (!record.epochs.empty()) err << ", last-epoch sampled mean " << record.epochs.back().mean_reward;
    err << "\n";
  }
  return code;
}

}  // namespace

int run(const std::vector<std::string>& args, std::istream& in, std::ostream& out, std::ostream& err) {
  CLI::App app{"Execution-grounded correctness and efficiency rewards for generated code", "acecode"};
  app.require_subcommand(1);

  SharedOptions shared;

  auto* eval = app.add_subcommand("eval", "Run solution sets and write a metrics report");
  std::string solutions_path;
  std::string baseline_path;
  std::string report_path;
  add_shared(*eval, shared, true);
  eval->add_option("--solutions", solutions_path, "Solutions to evaluate: {\"task_id\", \"code\"} per line")
      ->required();
  eval->add_option("--baseline", baseline_path, "Baseline solutions for ECC/GET/AET/NAET");
  eval->add_option("--report", report_path, "Report path (stdout when omitted)");

  auto* reward = app.add_subcommand("reward", "Reward one candidate file against a task");
  std::string task_id;
  std::string code_file;
  bool no_cache = false;
  add_shared(*reward, shared, true);
  reward->add_option("--task-id", task_id)->required();
  reward->add_option("--code-file", code_file)->required();
  reward->add_flag("--no-cache", no_cache, "Always re-measure the reference");

  auto* serve = app.add_subcommand("serve", "Answer {\"task_id\", \"code\"} lines on stdin with rewards on stdout");
  bool parallel_tests = false;
  add_shared(*serve, shared, true);
  serve->add_flag("--parallel-tests", parallel_tests, "Overlap correctness runs of queued requests");
  serve->add_flag("--no-cache", no_cache, "Always re-measure references");

  auto* select = app.add_subcommand("select-ref", "Pick the fastest valid reference per task and cache its timing");
  std::string select_output;
  add_shared(*select, shared, true);
  select->add_option("--output", select_output, "Output corpus (rewrites --corpus when omitted)");

  auto* train = app.add_subcommand("train-toy", "PPO on the synthetic token environment");
  TrainOptions topt;
  add_shared(*train, shared, false);
  train->add_option("--epochs", topt.ppo.epochs)->envname("ACE_EPOCHS")->capture_default_str();
  train->add_option("--samples-per-prompt", topt.ppo.samples_per_prompt)
      ->envname("ACE_SAMPLES_PER_PROMPT")
      ->capture_default_str();
  train->add_option("--update-steps", topt.ppo.update_steps)->envname("ACE_UPDATE_STEPS")->capture_default_str();
  train->add_option("--gamma", topt.ppo.gamma)->envname("ACE_GAMMA")->capture_default_str();
  train->add_option("--clip-eps", topt.ppo.clip_eps)->envname("ACE_CLIP_EPS")->capture_default_str();
  train->add_option("--value-coef", topt.ppo.value_coef)->envname("ACE_VALUE_COEF")->capture_default_str();
  train->add_option("--kl-coef", topt.ppo.kl_coef)->envname("ACE_KL_COEF")->capture_default_str();
  train->add_option("--lr-actor", topt.ppo.lr_actor)->envname("ACE_LR_ACTOR")->capture_default_str();
  train->add_option("--lr-critic", topt.ppo.lr_critic)->envname("ACE_LR_CRITIC")->capture_default_str();
  train->add_option("--temperature", topt.ppo.temperature)->envname("ACE_TEMPERATURE")->capture_default_str();
  train->add_flag("--normalize-advantages", topt.ppo.normalize_advantages);
  train->add_option("--divergence-bound", topt.ppo.divergence_bound)->capture_default_str();
  train->add_option("--max-len", topt.spec.max_len)->envname("ACE_MAX_LEN")->capture_default_str();
  train->add_option("--base-time", topt.spec.base_time)->capture_default_str();
  train->add_option("--reference-time", topt.spec.reference_time)->capture_default_str();
  train->add_option("--log", topt.log_path, "Epoch log path (stdout when omitted)");
  train->add_option("--policy-out", topt.policy_path, "Write the final actor/critic tables as JSON");

  std::vector<const char*> argv{"acecode"};
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e, out, err);
    return rc == 0 ? kOk : kMalformedInput;
  }

  try {
    if (*eval) return cmd_eval(shared, solutions_path, baseline_path, report_path, out);
    if (*reward) return cmd_reward(shared, task_id, code_file, !no_cache, out);
    if (*serve) return cmd_serve(shared, parallel_tests, !no_cache, in, out);
    if (*select) return cmd_select_ref(shared, select_output, out, err);
    if (*train) {
      topt.ppo.validate();
      topt.spec.validate();
      return cmd_train_toy(shared, topt, out, err);
    }
  } catch (const InputError& e) {
    err << "error: " << e.what() << "\n";
    return kMalformedInput;
  } catch (const RunnerSpawnError& e) {
    err << "runner error: " << e.what() << "\n";
    return kRunnerFailure;
  } catch (const ProtocolError& e) {
    err << "runner protocol error: " << e.what() << "\n";
    return kRunnerFailure;
  } catch (const ppo::DivergenceDetected& e) {
    err << "diverged: " << e.what() << "\n";
    return kDiverged;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kMalformedInput;
  }
  return kFailure;
}

}  // namespace acecode::cli
