// Copyright 2026 The Agreerank Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Execution harness: fills an ExecutionMatrix by sending every
// (solution, test) pair to out-of-process runners.
//
// Wire protocol, one JSON object per line, UTF-8:
//   request  (harness -> runner stdin):  {"id","code","test","entry_point","timeout_ms"}
//   response (runner stdout -> harness): {"id","status","duration_ms","detail"?}
// status is one of "pass", "fail", "error", "timeout". The runner answers
// every request with exactly one line and flushes after it.
//
// Each runner process has at most one request in flight; parallelism comes
// from `workers` runner processes. The harness enforces the time budget by
// wall clock (budget plus a small grace period for the runner to report its
// own timeout) and kills the runner's process group on overrun.

#pragma once

#include <atomic>
#include <chrono>
#include <exception>
#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "agreerank/cache.hpp"
#include "agreerank/core.hpp"
#include "agreerank/hash.hpp"
#include "agreerank/jsonl.hpp"
#include "agreerank/log.hpp"
#include "agreerank/process.hpp"

namespace agreerank {

struct RunnerRequest {
  std::string id;
  std::string code;
  std::string test;
  std::string entry_point;
  std::int64_t timeout_ms = 3000;
};

struct RunnerResponse {
  std::string id;
  Status status = Status::Error;
  std::int64_t duration_ms = 0;
  std::string detail;
};

inline std::string encode_request(const RunnerRequest& req) {
  OrderedJson j;
  j["id"] = req.id;
  j["code"] = req.code;
  j["test"] = req.test;
  j["entry_point"] = req.entry_point;
  j["timeout_ms"] = req.timeout_ms;
  return j.dump(-1, ' ', false, OrderedJson::error_handler_t::replace);
}

inline RunnerRequest decode_request(std::string_view line) {
  Json j = Json::parse(line);
  if (!j.is_object()) throw DataError("request is not a JSON object");
  RunnerRequest r;
  r.id = require_string(j, "id");
  r.code = require_string(j, "code");
  r.test = require_string(j, "test");
  r.entry_point = require_string(j, "entry_point");
  r.timeout_ms = require_field(j, "timeout_ms").get<std::int64_t>();
  if (r.timeout_ms < 1) throw DataError("timeout_ms must be positive");
  return r;
}

inline std::string encode_response(const RunnerResponse& resp) {
  OrderedJson j;
  j["id"] = resp.id;
  j["status"] = to_string(resp.status);
  j["duration_ms"] = resp.duration_ms;
  if (!resp.detail.empty()) j["detail"] = resp.detail;
  return j.dump(-1, ' ', false, OrderedJson::error_handler_t::replace);
}

// Throws DataError on anything that is not a well-formed response.
inline RunnerResponse decode_response(std::string_view line) {
  Json j;
  try {
    j = Json::parse(line);
  } catch (const Json::parse_error&) {
    throw DataError("unparseable response line");
  }
  if (!j.is_object()) throw DataError("response is not a JSON object");
  RunnerResponse r;
  try {
    r.id = require_string(j, "id");
    auto status = parse_status(require_string(j, "status"));
    if (!status) throw DataError("unknown status");
    r.status = *status;
    const Json& d = require_field(j, "duration_ms");
    if (!d.is_number_integer() || d.get<std::int64_t>() < 0)
      throw DataError("duration_ms must be a non-negative integer");
    r.duration_ms = d.get<std::int64_t>();
    if (auto it = j.find("detail"); it != j.end() && !it->is_null()) {
      if (!it->is_string()) throw DataError("detail must be a string");
      r.detail = truncate_detail(it->get<std::string>());
    }
  } catch (const Json::exception& e) {
    throw DataError(e.what());
  }
  return r;
}

struct HarnessConfig {
  std::string runner_cmd;
  unsigned workers = 1;
  std::int64_t timeout_ms = 3000;
  std::optional<std::filesystem::path> cache_path;
  // Extra wall-clock allowance before the harness kills a runner.
  std::int64_t grace_ms = 250;
  // Added to the first deadline of a freshly started runner to cover its
  // startup (interpreter boot, imports).
  std::int64_t startup_ms = 2000;

  void validate() const {
    if (workers < 1) throw UsageError("workers must be >= 1");
    if (timeout_ms < 1) throw UsageError("timeout_ms must be >= 1");
    if (grace_ms < 0) throw UsageError("grace_ms must be >= 0");
    if (startup_ms < 0) throw UsageError("startup_ms must be >= 0");
  }
};

struct HarnessStats {
  std::size_t executed = 0;        // requests whose outcome came from a runner or a kill
  std::size_t cache_hits = 0;
  std::size_t responses = 0;       // well-formed responses received
  std::size_t crashes = 0;         // runner exited while a request was in flight
  std::size_t retries = 0;
  std::size_t protocol_errors = 0;
  std::size_t kills = 0;           // runner killed on wall-clock overrun
};

class Harness {
 public:
  explicit Harness(HarnessConfig cfg, MatrixCache* cache = nullptr)
      : cfg_(std::move(cfg)), cache_(cache) {
    cfg_.validate();
    runners_.resize(cfg_.workers);
  }

  Harness(const Harness&) = delete;
  Harness& operator=(const Harness&) = delete;

  const HarnessConfig& config() const { return cfg_; }
  HarnessStats stats() const {
    HarnessStats s;
    s.executed = executed_;
    s.cache_hits = cache_hits_;
    s.responses = responses_;
    s.crashes = crashes_;
    s.retries = retries_;
    s.protocol_errors = protocol_errors_;
    s.kills = kills_;
    return s;
  }

  // Runs every (solution, test) pair not already in the cache. The result is
  // keyed by position, so it does not depend on scheduling or worker count.
  ExecutionMatrix execute_matrix(const Problem& task, std::span<const CandidateSolution> solutions,
                                 std::span<const TestCase> tests) {
    ExecutionMatrix matrix(task.task_id, solutions.size(), tests.size());
    for (std::size_t i = 0; i < solutions.size(); ++i)
      if (solutions[i].solution_id != i || solutions[i].task_id != task.task_id)
        throw DataError("solutions must be the dense id range of task " + task.task_id);
    for (std::size_t i = 0; i < tests.size(); ++i)
      if (tests[i].test_id != i || tests[i].task_id != task.task_id)
        throw DataError("tests must be the dense id range of task " + task.task_id);

    std::vector<std::string> source_hashes, assertion_hashes;
    for (const auto& s : solutions) source_hashes.push_back(content_hash(s.source));
    for (const auto& t : tests) assertion_hashes.push_back(content_hash(t.assertion));

    std::vector<Job> jobs;
    for (SolutionId s = 0; s < solutions.size(); ++s) {
      for (TestId t = 0; t < tests.size(); ++t) {
        if (cache_) {
          if (auto hit = cache_->lookup(task.task_id, source_hashes[s], assertion_hashes[t],
                                        cfg_.timeout_ms)) {
            matrix.at(s, t) = *hit;
            ++cache_hits_;
            continue;
          }
        }
        jobs.push_back({s, t});
      }
    }
    if (jobs.empty()) return matrix;

    std::vector<JobResult> results(jobs.size());
    std::atomic<std::size_t> next{0};
    std::vector<std::exception_ptr> failures(cfg_.workers);
    auto work = [&](unsigned w) {
      try {
        for (std::size_t j = next++; j < jobs.size(); j = next++) {
          RunnerRequest req;
          req.code = solutions[jobs[j].solution].source;
          req.test = tests[jobs[j].test].assertion;
          req.entry_point = task.entry_point;
          req.timeout_ms = cfg_.timeout_ms;
          results[j] = run_one(w, req);
        }
      } catch (...) {
        failures[w] = std::current_exception();
        next = jobs.size();
      }
    };
    const unsigned threads = static_cast<unsigned>(std::min<std::size_t>(cfg_.workers, jobs.size()));
    if (threads == 1) {
      work(0);
    } else {
      std::vector<std::jthread> pool;
      for (unsigned w = 0; w < threads; ++w) pool.emplace_back(work, w);
    }
    for (auto& f : failures)
      if (f) std::rethrow_exception(f);

    for (std::size_t j = 0; j < jobs.size(); ++j) {
      const auto [s, t] = jobs[j];
      matrix.at(s, t) = results[j].outcome;
      if (cache_ && !results[j].harness_fault)
        cache_->store({task.task_id, s, t, results[j].outcome, source_hashes[s],
                       assertion_hashes[t], cfg_.timeout_ms});
    }
    if (responses_ == 0 && crashes_ > 0)
      throw RunnerError("runner command exited without answering any request: " +
                        cfg_.runner_cmd);
    return matrix;
  }

 private:
  using Clock = std::chrono::steady_clock;

  struct Job {
    SolutionId solution;
    TestId test;
  };

  struct JobResult {
    Outcome outcome;
    // Error produced by runner misbehaviour, not by the code under test;
    // such cells are never cached.
    bool harness_fault = false;
  };

  RunnerProcess& runner(unsigned w) {
    if (!runners_[w]) runners_[w] = std::make_unique<RunnerProcess>(cfg_.runner_cmd);
    return *runners_[w];
  }

  void discard(unsigned w) { runners_[w].reset(); }

  JobResult run_one(unsigned w, RunnerRequest req) {
    for (int attempt = 0;; ++attempt) {
      req.id = "r" + std::to_string(next_id_++);
      const bool fresh = !runners_[w];
      RunnerProcess& proc = runner(w);
      const auto start = Clock::now();
      const auto deadline =
          start + std::chrono::milliseconds(cfg_.timeout_ms + cfg_.grace_ms +
                                            (fresh ? cfg_.startup_ms : 0));
      std::string line;
      auto read = RunnerProcess::ReadResult::Eof;
      if (proc.write_line(encode_request(req))) read = proc.read_line(line, deadline);
      const auto elapsed =
          std::chrono::duration_cast<std::chrono::milliseconds>(Clock::now() - start).count();

      if (read == RunnerProcess::ReadResult::Timeout) {
        discard(w);
        ++executed_;
        ++kills_;
        return {{Status::Timeout, elapsed,
                 "runner killed after " + std::to_string(elapsed) + " ms"},
                false};
      }
      if (read == RunnerProcess::ReadResult::Eof) {
        discard(w);
        ++crashes_;
        if (attempt == 0) {
          ++retries_;
          continue;
        }
        ++executed_;
        return {{Status::Error, elapsed, "runner crashed twice on this request"}, true};
      }
      RunnerResponse resp;
      try {
        resp = decode_response(line);
        if (resp.id != req.id) throw DataError("unknown response id '" + resp.id + "'");
      } catch (const DataError& e) {
        discard(w);
        ++executed_;
        ++protocol_errors_;
        Log::warn(std::string("runner protocol violation: ") + e.what());
        return {{Status::Error, elapsed, truncate_detail(std::string("protocol violation: ") + e.what())},
                true};
      }
      ++executed_;
      ++responses_;
      return {{resp.status, resp.duration_ms, resp.detail}, false};
    }
  }

  HarnessConfig cfg_;
  MatrixCache* cache_ = nullptr;
  std::vector<std::unique_ptr<RunnerProcess>> runners_;
  std::atomic<std::uint64_t> next_id_{0};
  std::atomic<std::size_t> executed_{0}, cache_hits_{0}, responses_{0}, crashes_{0}, retries_{0},
      protocol_errors_{0}, kills_{0};
};

}  // namespace agreerank
