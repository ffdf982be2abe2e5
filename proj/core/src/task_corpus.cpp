#include "acecode/task_corpus.hpp"

#include <fstream>
#include <limits>
#include <nlohmann/json.hpp>
#include <random>
#include <set>
#include <sstream>

namespace acecode {
namespace {

using json = nlohmann::json;

const std::set<std::string, std::less<>> kKnownFields{
    "id",    "description", "tests", "references", "example_description", "example_code", "selected_reference",
    "reference_times_ns", "reference_host", "selection_error"};

std::string require_string(const json& doc, const char* field, std::size_t line) {
  const auto it = doc.find(field);
  if (it == doc.end()) throw MalformedRecord(line, field, "missing");
  if (!it->is_string()) throw MalformedRecord(line, field, "expected a string");
  return it->get<std::string>();
}

std::vector<std::string> require_string_list(const json& doc, const char* field, std::size_t line) {
  const auto it = doc.find(field);
  if (it == doc.end()) throw MalformedRecord(line, field, "missing");
  if (!it->is_array()) throw MalformedRecord(line, field, "expected an array of strings");
  std::vector<std::string> out;
  for (const auto& v : *it) {
    if (!v.is_string()) throw MalformedRecord(line, field, "expected an array of strings");
    if (v.get_ref<const std::string&>().empty()) throw MalformedRecord(line, field, "empty entry");
    out.push_back(v.get<std::string>());
  }
  return out;
}

// Uniform integer in [0, bound) by rejection; independent of the standard
// library's distribution implementations so splits are portable.
std::uint64_t uniform_below(std::mt19937_64& rng, std::uint64_t bound) {
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - (std::numeric_limits<std::uint64_t>::max() % bound);
  std::uint64_t x = 0;
  do {
    x = rng();
  } while (x >= limit);
  return x % bound;
}

}  // namespace

MalformedRecord::MalformedRecord(std::size_t line, std::string field, const std::string& detail)
    : Error("malformed record at line " + std::to_string(line) + ", field '" + field + "': " + detail),
      line_(line),
      field_(std::move(field)) {}

const CodingTask* Corpus::find(std::string_view id) const {
  for (const auto& t : tasks) {
    if (t.id == id) return &t;
  }
  return nullptr;
}

CodingTask parse_task_record(std::string_view text, std::size_t line) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw MalformedRecord(line, "<record>", e.what());
  }
  if (!doc.is_object()) throw MalformedRecord(line, "<record>", "expected a JSON object");
  for (const auto& [key, _] : doc.items()) {
    if (!kKnownFields.contains(key)) throw MalformedRecord(line, key, "unknown field");
  }

  CodingTask task;
  task.id = require_string(doc, "id", line);
  if (task.id.empty()) throw MalformedRecord(line, "id", "empty");
  task.description = require_string(doc, "description", line);

  for (auto& code : require_string_list(doc, "tests", line)) task.tests.push_back(TestCase{std::move(code)});
  if (task.tests.empty()) throw MalformedRecord(line, "tests", "at least one test required");

  for (auto& code : require_string_list(doc, "references", line)) {
    task.references.push_back(Solution{std::move(code), Solution::Origin::Reference, std::nullopt});
  }
  if (task.references.empty()) throw MalformedRecord(line, "references", "at least one reference required");
  if (task.references.size() > kMaxReferences) {
    throw MalformedRecord(line, "references", "more than " + std::to_string(kMaxReferences) + " references");
  }

  const bool has_ex_desc = doc.contains("example_description");
  const bool has_ex_code = doc.contains("example_code");
  if (has_ex_desc != has_ex_code) {
    throw MalformedRecord(line, has_ex_desc ? "example_code" : "example_description",
                          "example_description and example_code come together");
  }
  if (has_ex_desc) {
    task.example_pair = ExamplePair{require_string(doc, "example_description", line),
                                    require_string(doc, "example_code", line)};
  }

  if (doc.contains("selection_error")) task.selection_error = require_string(doc, "selection_error", line);

  const bool has_sel = doc.contains("selected_reference");
  if (has_sel) {
    const auto& sel = doc["selected_reference"];
    if (!sel.is_number_unsigned()) throw MalformedRecord(line, "selected_reference", "expected a non-negative integer");
    const auto index = sel.get<std::size_t>();
    if (index >= task.references.size()) throw MalformedRecord(line, "selected_reference", "index out of range");
    const auto times_it = doc.find("reference_times_ns");
    if (times_it == doc.end() || !times_it->is_array() || times_it->empty()) {
      throw MalformedRecord(line, "reference_times_ns", "required with selected_reference");
    }
    std::vector<std::chrono::nanoseconds> times;
    for (const auto& t : *times_it) {
      if (!t.is_number_integer() || t.get<std::int64_t>() < 0) {
        throw MalformedRecord(line, "reference_times_ns", "expected non-negative integers");
      }
      times.emplace_back(t.get<std::int64_t>());
    }
    CachedReference cached{index, RuntimeStats::from_repetitions(std::move(times)),
                           require_string(doc, "reference_host", line)};
    task.references[index].measured = cached.stats;
    task.cached_reference = std::move(cached);
  } else if (doc.contains("reference_times_ns") || doc.contains("reference_host")) {
    throw MalformedRecord(line, "selected_reference", "cache fields without selected_reference");
  }
  return task;
}

std::string to_record(const CodingTask& task) {
  json doc;
  doc["id"] = task.id;
  doc["description"] = task.description;
  json tests = json::array();
  for (const auto& t : task.tests) tests.push_back(t.code);
  doc["tests"] = std::move(tests);
  json refs = json::array();
  for (const auto& r : task.references) refs.push_back(r.code);
  doc["references"] = std::move(refs);
  if (task.example_pair) {
    doc["example_description"] = task.example_pair->description;
    doc["example_code"] = task.example_pair->code;
  }
  if (task.cached_reference) {
    doc["selected_reference"] = task.cached_reference->index;
    json times = json::array();
    for (const auto t : task.cached_reference->stats.per_rep) times.push_back(t.count());
    doc["reference_times_ns"] = std::move(times);
    doc["reference_host"] = task.cached_reference->host;
  }
  if (task.selection_error) doc["selection_error"] = *task.selection_error;
  return doc.dump();
}

std::vector<std::size_t> split_indices(std::size_t n, Split split, std::uint64_t seed) {
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  if (split == Split::All) return order;

  std::mt19937_64 rng(seed);
  for (std::size_t i = n; i > 1; --i) {
    const auto j = static_cast<std::size_t>(uniform_below(rng, i));
    std::swap(order[i - 1], order[j]);
  }
  const std::size_t train_size = (n * 8) / 10;
  if (split == Split::Train) return {order.begin(), order.begin() + static_cast<std::ptrdiff_t>(train_size)};
  return {order.begin() + static_cast<std::ptrdiff_t>(train_size), order.end()};
}

Corpus parse_corpus(std::string_view text, Split split, std::uint64_t seed) {
  std::vector<CodingTask> all;
  std::set<std::string, std::less<>> ids;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    auto task = parse_task_record(line, line_no);
    if (!ids.insert(task.id).second) {
      throw DuplicateTaskId("duplicate task id '" + task.id + "' at line " + std::to_string(line_no));
    }
    all.push_back(std::move(task));
  }
  if (all.empty()) throw EmptyCorpus("corpus contains no tasks");

  Corpus corpus;
  corpus.split = split;
  for (const auto i : split_indices(all.size(), split, seed)) corpus.tasks.push_back(all[i]);
  return corpus;
}

Corpus load_corpus(const std::filesystem::path& path, Split split, std::uint64_t seed) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open corpus file " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_corpus(buf.str(), split, seed);
}

void write_corpus(const std::filesystem::path& path, const Corpus& corpus) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write corpus file " + path.string());
  for (const auto& task : corpus.tasks) out << to_record(task) << '\n';
  if (!out) throw Error("write failed for " + path.string());
}

ReferenceChoice select_reference(const CodingTask& task, Harness& harness) {
  std::optional<ReferenceChoice> best;
  std::string failures;
  for (std::size_t i = 0; i < task.references.size(); ++i) {
    const auto& ref = task.references[i];
    const auto verdict = harness.check(ref.code, task.tests);
    if (verdict.status != Status::Pass) {
      failures += "reference " + std::to_string(i) + ": " + std::string(to_string(verdict.status)) + "; ";
      continue;
    }
    auto stats = harness.measure(ref.code, task.tests);
    if (!best || stats.mean < best->solution.measured->mean) {
      Solution chosen = ref;
      chosen.measured = std::move(stats);
      best = ReferenceChoice{i, std::move(chosen)};
    }
  }
  if (!best) throw NoValidReference("task '" + task.id + "' has no valid reference (" + failures + ")");
  return *std::move(best);
}

std::string render_prompt(const CodingTask& task) {
  if (!task.example_pair) throw MissingExamplePair("task '" + task.id + "' has no example pair");
  std::string out;
  out += "### Instruction: Please based on the task description write Python Solution to pass the provided test cases.\n";
  out += "You must follow the following rules:\n";
  out += "The code should be in '''python\\n[Code]\\n''' block.\n";
  out += "Second, You should not add the provided test cases into the code.\n";
  out += "Third, You do not need to write the test cases, we will provide the test cases for you.\n";
  out += "Fourth, Only include the Python solution, without any additional explanation.\n";
  out += "Fifthly, import only the necessary modules; avoid using import *.\n";
  out += "Finally, You should make sure that the provided test cases can pass your solution.\n";
  out += "### Here is a example:\n";
  out += task.example_pair->description;
  out += '\n';
  out += task.example_pair->code;
  out += '\n';
  out += "### Task Description:\n";
  out += task.description;
  out += '\n';
  return out;
}

}  // namespace acecode
