#include "acecode/service.hpp"

#include <algorithm>
#include <cmath>
#include <condition_variable>
#include <deque>
#include <future>
#include <istream>
#include <memory>
#include <mutex>
#include <nlohmann/json.hpp>
#include <ostream>
#include <thread>

namespace acecode {
namespace {

using json = nlohmann::ordered_json;

std::int64_t round_ns(FloatNanos d) { return static_cast<std::int64_t>(std::llround(d.count())); }

}  // namespace

ServiceRequest parse_request(std::string_view line) {
  json doc;
  try {
    doc = json::parse(line);
  } catch (const json::parse_error&) {
    throw Error("request is not valid JSON");
  }
  if (!doc.is_object()) throw Error("request must be a JSON object");
  const auto id = doc.find("task_id");
  if (id == doc.end() || !id->is_string()) throw Error("request needs a string task_id");
  const auto code = doc.find("code");
  if (code == doc.end() || !code->is_string()) throw Error("request needs a string code");
  return ServiceRequest{id->get<std::string>(), code->get<std::string>()};
}

std::string response_line(std::string_view task_id, const RewardSignal& signal) {
  json doc;
  doc["task_id"] = task_id;
  doc["reward"] = signal.value;
  doc["status"] = to_string(signal.status);
  if (signal.e_candidate) doc["e_candidate_ns"] = round_ns(*signal.e_candidate);
  if (signal.e_reference) doc["e_reference_ns"] = round_ns(*signal.e_reference);
  return doc.dump();
}

std::string error_line(std::optional<std::string_view> task_id, std::string_view message) {
  json doc;
  doc["task_id"] = task_id ? json(*task_id) : json(nullptr);
  doc["error"] = message;
  return doc.dump(-1, ' ', false, json::error_handler_t::replace);
}

RewardService::RewardService(const Corpus& corpus, Harness& harness, RewardConfig cfg, ReferenceCache& cache)
    : corpus_(corpus), harness_(harness), cfg_(std::move(cfg)), cache_(cache) {
  cfg_.validate();
}

RewardService::Prepared RewardService::prepare(std::string_view line) const {
  Prepared p;
  try {
    p.request = parse_request(line);
  } catch (const Error& e) {
    // Best effort: echo the id back when the object itself was readable.
    std::optional<std::string> id;
    try {
      const auto doc = json::parse(line);
      if (doc.is_object() && doc.contains("task_id") && doc["task_id"].is_string()) id = doc["task_id"].get<std::string>();
    } catch (const json::exception&) {
    }
    p.immediate = error_line(id ? std::optional<std::string_view>(*id) : std::nullopt, e.what());
    return p;
  }
  p.task = corpus_.find(p.request.task_id);
  if (p.task == nullptr) p.immediate = error_line(p.request.task_id, "unknown task_id");
  return p;
}

std::string RewardService::finish(const Prepared& prepared, const TestVerdict& verdict) {
  try {
    const Solution candidate{prepared.request.code, Solution::Origin::Generated, std::nullopt};
    const auto signal = reward_checked(*prepared.task, candidate, verdict, harness_, cfg_, &cache_);
    return response_line(prepared.request.task_id, signal);
  } catch (const std::exception& e) {
    return error_line(prepared.request.task_id, e.what());
  }
}

std::string RewardService::handle(std::string_view line) {
  const auto prepared = prepare(line);
  if (prepared.immediate) return *prepared.immediate;
  TestVerdict verdict;
  try {
    verdict = harness_.check(prepared.request.code, prepared.task->tests);
  } catch (const std::exception& e) {
    return error_line(prepared.request.task_id, e.what());
  }
  return finish(prepared, verdict);
}

std::size_t RewardService::serve(std::istream& in, std::ostream& out, bool parallel_tests) {
  std::size_t answered = 0;
  if (!parallel_tests) {
    std::string line;
    while (std::getline(in, line)) {
      if (!line.empty() && line.back() == '\r') line.pop_back();
      out << handle(line) << '\n' << std::flush;
      ++answered;
    }
    return answered;
  }

  // Reader thread prepares requests and launches their correctness runs; the
  // calling thread completes them strictly in arrival order.
  struct Pending {
    Prepared prepared;
    std::future<std::optional<TestVerdict>> verdict;
    std::string check_error;
  };
  const unsigned workers = std::max(2U, std::thread::hardware_concurrency());
  std::mutex mu;
  std::condition_variable cv;
  std::deque<std::shared_ptr<Pending>> queue;
  bool eof = false;
  unsigned in_flight = 0;

  std::thread reader([&] {
    std::string line;
    while (std::getline(in, line)) {
      if (!line.empty() && line.back() == '\r') line.pop_back();
      auto pending = std::make_shared<Pending>();
      pending->prepared = prepare(line);
      if (!pending->prepared.immediate) {
        {
          std::unique_lock lock(mu);
          cv.wait(lock, [&] { return in_flight < workers; });
          ++in_flight;
        }
        pending->verdict = std::async(std::launch::async, [this, pending, &mu, &cv, &in_flight] {
          std::optional<TestVerdict> v;
          try {
            v = harness_.check(pending->prepared.request.code, pending->prepared.task->tests);
          } catch (const std::exception& e) {
            pending->check_error = e.what();
          }
          {
            std::lock_guard lock(mu);
            --in_flight;
          }
          cv.notify_all();
          return v;
        });
      }
      {
        std::lock_guard lock(mu);
        queue.push_back(std::move(pending));
      }
      cv.notify_all();
    }
    {
      std::lock_guard lock(mu);
      eof = true;
    }
    cv.notify_all();
  });

  while (true) {
    std::shared_ptr<Pending> next;
    {
      std::unique_lock lock(mu);
      cv.wait(lock, [&] { return !queue.empty() || eof; });
      if (queue.empty()) break;
      next = std::move(queue.front());
      queue.pop_front();
    }
    std::string response;
    if (next->prepared.immediate) {
      response = *next->prepared.immediate;
    } else {
      const auto verdict = next->verdict.get();
      response = verdict ? finish(next->prepared, *verdict) : error_line(next->prepared.request.task_id, next->check_error);
    }
    out << response << '\n' << std::flush;
    ++answered;
  }
  reader.join();
  return answered;
}

}  // namespace acecode
