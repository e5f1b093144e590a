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

// Corpus loading. Problems, candidate solutions and generated tests arrive as
// three line-delimited files; they are cross-referenced by task_id and every
// per-task id space is remapped to a dense 0..n-1 range.

#pragma once

#include <algorithm>
#include <filesystem>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include "agreerank/core.hpp"
#include "agreerank/jsonl.hpp"

namespace agreerank {

// Dense id -> id as written in the input file.
struct IdRemap {
  std::vector<std::string> solutions;
  std::vector<std::string> tests;

  friend bool operator==(const IdRemap&, const IdRemap&) = default;
};

struct Task {
  Problem problem;
  std::vector<CandidateSolution> solutions;  // solutions[i].solution_id == i
  std::vector<TestCase> tests;               // tests[i].test_id == i
  IdRemap remap;
};

// Ground-truth reference tests. Kept out of Task so the grouping and ranking
// stages, which only ever see a Task or an ExecutionMatrix, cannot read them.
class ReferenceTests {
 public:
  bool has(const std::string& task_id) const { return tests_.count(task_id) != 0; }

  const std::vector<std::string>& of(const std::string& task_id) const {
    auto it = tests_.find(task_id);
    if (it == tests_.end()) throw DataError("task " + task_id + " has no hidden tests");
    return it->second;
  }

  void set(const std::string& task_id, std::vector<std::string> tests) {
    tests_[task_id] = std::move(tests);
  }

  std::size_t size() const { return tests_.size(); }

  friend bool operator==(const ReferenceTests&, const ReferenceTests&) = default;

 private:
  std::map<std::string, std::vector<std::string>> tests_;
};

class Corpus {
 public:
  const std::vector<Task>& tasks() const { return tasks_; }
  const ReferenceTests& reference_tests() const { return reference_; }

  const Task* find(const std::string& task_id) const {
    auto it = index_.find(task_id);
    return it == index_.end() ? nullptr : &tasks_[it->second];
  }

  std::size_t total_solutions() const {
    std::size_t n = 0;
    for (const auto& t : tasks_) n += t.solutions.size();
    return n;
  }

  // Appends reference tests from a separate file; part of loading.
  void add_reference_tests(const std::string& task_id, const std::vector<std::string>& tests) {
    if (!find(task_id)) throw DataError("orphan task_id " + task_id);
    std::vector<std::string> all = reference_.has(task_id) ? reference_.of(task_id)
                                                           : std::vector<std::string>{};
    all.insert(all.end(), tests.begin(), tests.end());
    reference_.set(task_id, std::move(all));
  }

  // Ids and texts only; the remap table is bookkeeping about the input files.
  bool same_content(const Corpus& other) const {
    if (tasks_.size() != other.tasks_.size() || !(reference_ == other.reference_)) return false;
    for (std::size_t i = 0; i < tasks_.size(); ++i) {
      const Task& a = tasks_[i];
      const Task& b = other.tasks_[i];
      if (a.problem.task_id != b.problem.task_id || a.problem.prompt != b.problem.prompt ||
          a.problem.entry_point != b.problem.entry_point || a.solutions != b.solutions ||
          a.tests != b.tests)
        return false;
    }
    return true;
  }

 private:
  friend Corpus load_corpus(std::istream&, const std::string&, std::istream&, const std::string&,
                            std::istream&, const std::string&);

  std::vector<Task> tasks_;
  std::unordered_map<std::string, std::size_t> index_;
  ReferenceTests reference_;
};

namespace detail {

struct RawRecord {
  std::optional<Json> external_id;
  std::string text;
  std::size_t line = 0;
};

inline std::string id_to_string(const Json& id) {
  if (id.is_string()) return id.get<std::string>();
  return id.dump();
}

// Assigns dense ids to one task's records. Records without ids keep file
// order; non-negative integer ids are ordered numerically; any other id kind
// (strings, mixed) keeps file order.
inline std::vector<std::size_t> dense_order(const std::string& task_id, const char* kind,
                                            const std::vector<RawRecord>& records,
                                            std::vector<std::string>& external) {
  std::vector<std::size_t> order(records.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  external.clear();
  if (records.empty()) return order;

  std::size_t with_id = 0;
  bool all_unsigned = true;
  for (const auto& r : records) {
    if (!r.external_id) continue;
    ++with_id;
    if (!r.external_id->is_number_unsigned()) all_unsigned = false;
    if (!r.external_id->is_number_integer() && !r.external_id->is_string())
      throw DataError(std::string("line ") + std::to_string(r.line) + ": " + kind +
                      " must be an integer or a string");
  }
  if (with_id == 0) {
    for (std::size_t i = 0; i < records.size(); ++i) external.push_back(std::to_string(i));
    return order;
  }
  if (with_id != records.size())
    throw DataError(std::string("task ") + task_id + ": " + kind +
                    " is present on some records but missing on others");

  if (all_unsigned) {
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return records[a].external_id->get<std::uint64_t>() <
             records[b].external_id->get<std::uint64_t>();
    });
  }
  for (std::size_t i : order) external.push_back(id_to_string(*records[i].external_id));
  std::vector<std::string> sorted = external;
  std::sort(sorted.begin(), sorted.end());
  auto dup = std::adjacent_find(sorted.begin(), sorted.end());
  if (dup != sorted.end())
    throw DataError(std::string("duplicate (task_id, ") + kind + ") = (" + task_id + ", " +
                    *dup + ")");
  return order;
}

inline std::optional<Json> optional_id(const Json& record, const char* key) {
  auto it = record.find(key);
  if (it == record.end() || it->is_null()) return std::nullopt;
  return *it;
}

}  // namespace detail

inline Corpus load_corpus(std::istream& problems, const std::string& problems_name,
                          std::istream& solutions, const std::string& solutions_name,
                          std::istream& tests, const std::string& tests_name) {
  Corpus corpus;
  std::vector<std::vector<detail::RawRecord>> raw_solutions;
  std::vector<std::vector<detail::RawRecord>> raw_tests;

  for_each_record(problems, problems_name, [&](const Json& rec, std::size_t) {
    Task task;
    task.problem.task_id = require_string(rec, "task_id");
    task.problem.prompt = rec.contains("prompt") ? require_string(rec, "prompt") : std::string();
    task.problem.entry_point = require_string(rec, "entry_point");
    if (task.problem.task_id.empty()) throw DataError("empty task_id");
    if (task.problem.entry_point.empty())
      throw DataError("task " + task.problem.task_id + ": empty entry_point");
    if (corpus.index_.count(task.problem.task_id))
      throw DataError("duplicate task_id " + task.problem.task_id);
    if (auto it = rec.find("hidden_tests"); it != rec.end() && !it->is_null()) {
      if (!it->is_array()) throw DataError("field 'hidden_tests' must be an array of strings");
      std::vector<std::string> hidden;
      for (const auto& h : *it) {
        if (!h.is_string()) throw DataError("field 'hidden_tests' must be an array of strings");
        hidden.push_back(h.get<std::string>());
      }
      corpus.reference_.set(task.problem.task_id, std::move(hidden));
    }
    corpus.index_.emplace(task.problem.task_id, corpus.tasks_.size());
    corpus.tasks_.push_back(std::move(task));
  });
  raw_solutions.resize(corpus.tasks_.size());
  raw_tests.resize(corpus.tasks_.size());

  auto collect = [&](std::istream& in, const std::string& name, const char* id_key,
                     const char* text_key, std::vector<std::vector<detail::RawRecord>>& out) {
    std::vector<std::string> orphans;
    for_each_record(in, name, [&](const Json& rec, std::size_t line) {
      std::string task_id = require_string(rec, "task_id");
      auto it = corpus.index_.find(task_id);
      if (it == corpus.index_.end()) {
        if (std::find(orphans.begin(), orphans.end(), task_id) == orphans.end())
          orphans.push_back(task_id);
        return;
      }
      std::string text = require_string(rec, text_key);
      if (std::string(text_key) == "assertion" && text.find_first_not_of(" \t\r\n") == std::string::npos)
        throw DataError("empty assertion");
      out[it->second].push_back({detail::optional_id(rec, id_key), std::move(text), line});
    });
    if (!orphans.empty()) {
      std::string msg = name + ": orphan task_id";
      for (std::size_t i = 0; i < orphans.size(); ++i) msg += (i ? ", " : " ") + orphans[i];
      throw DataError(msg);
    }
  };
  collect(solutions, solutions_name, "solution_id", "completion", raw_solutions);
  collect(tests, tests_name, "test_id", "assertion", raw_tests);

  for (std::size_t ti = 0; ti < corpus.tasks_.size(); ++ti) {
    Task& task = corpus.tasks_[ti];
    const std::string& id = task.problem.task_id;
    try {
      auto sorder = detail::dense_order(id, "solution_id", raw_solutions[ti], task.remap.solutions);
      for (std::size_t dense = 0; dense < sorder.size(); ++dense)
        task.solutions.push_back({id, static_cast<SolutionId>(dense),
                                  std::move(raw_solutions[ti][sorder[dense]].text)});
    } catch (const DataError& e) {
      throw DataError(solutions_name + ": " + e.what());
    }
    try {
      auto torder = detail::dense_order(id, "test_id", raw_tests[ti], task.remap.tests);
      for (std::size_t dense = 0; dense < torder.size(); ++dense)
        task.tests.push_back(
            {id, static_cast<TestId>(dense), std::move(raw_tests[ti][torder[dense]].text)});
    } catch (const DataError& e) {
      throw DataError(tests_name + ": " + e.what());
    }
  }
  return corpus;
}

inline Corpus load_corpus(const std::filesystem::path& problems_path,
                          const std::filesystem::path& solutions_path,
                          const std::filesystem::path& tests_path) {
  auto problems = open_input(problems_path);
  auto solutions = open_input(solutions_path);
  auto tests = open_input(tests_path);
  return load_corpus(problems, problems_path.string(), solutions, solutions_path.string(), tests,
                     tests_path.string());
}

struct CorpusText {
  std::string problems;
  std::string solutions;
  std::string tests;
};

// Writes the corpus back out with dense ids.
inline CorpusText serialize(const Corpus& corpus) {
  std::ostringstream problems, solutions, tests;
  for (const Task& task : corpus.tasks()) {
    OrderedJson p;
    p["task_id"] = task.problem.task_id;
    p["prompt"] = task.problem.prompt;
    p["entry_point"] = task.problem.entry_point;
    if (corpus.reference_tests().has(task.problem.task_id))
      p["hidden_tests"] = corpus.reference_tests().of(task.problem.task_id);
    write_record(problems, p);
    for (const auto& s : task.solutions) {
      OrderedJson r;
      r["task_id"] = s.task_id;
      r["solution_id"] = s.solution_id;
      r["completion"] = s.source;
      write_record(solutions, r);
    }
    for (const auto& t : task.tests) {
      OrderedJson r;
      r["task_id"] = t.task_id;
      r["test_id"] = t.test_id;
      r["assertion"] = t.assertion;
      write_record(tests, r);
    }
  }
  return {problems.str(), solutions.str(), tests.str()};
}

inline Corpus parse_corpus(const CorpusText& text) {
  std::istringstream p(text.problems), s(text.solutions), t(text.tests);
  return load_corpus(p, "problems", s, "solutions", t, "tests");
}

// One record per remapped id: {task_id, kind, id, external_id}.
inline std::string render_id_map(const Corpus& corpus) {
  std::ostringstream out;
  for (const Task& task : corpus.tasks()) {
    auto emit = [&](const char* kind, const std::vector<std::string>& external) {
      for (std::size_t i = 0; i < external.size(); ++i) {
        OrderedJson r;
        r["task_id"] = task.problem.task_id;
        r["kind"] = kind;
        r["id"] = i;
        r["external_id"] = external[i];
        write_record(out, r);
      }
    };
    emit("solution", task.remap.solutions);
    emit("test", task.remap.tests);
  }
  return out.str();
}

}  // namespace agreerank
