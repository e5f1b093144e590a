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

// Synthetic execution matrices with planted ground truth.
//
// Per task: a fraction of solutions is correct and passes exactly the valid
// tests; invalid tests (wrong expected outputs) are failed by every correct
// solution. Each wrong cluster shares one planted pass vector made of all
// invalid tests plus half of the valid ones, modelling solutions that share a
// misconception with the test generator. The remaining wrong solutions get
// independent noise vectors that never coincide with a planted vector.

#pragma once

#include <cmath>
#include <cstdio>
#include <map>
#include <numeric>
#include <set>
#include <string>
#include <vector>

#include "agreerank/core.hpp"
#include "agreerank/jsonl.hpp"
#include "agreerank/metrics.hpp"
#include "agreerank/random.hpp"

namespace agreerank {

struct SynthSpec {
  std::size_t tasks = 1;
  std::size_t solutions_per_task = 10;
  std::size_t tests_per_task = 10;
  double correct_solution_rate = 0.3;
  double valid_test_rate = 0.9;
  std::vector<std::size_t> wrong_cluster_sizes;
  std::uint64_t seed = 0;

  std::size_t correct_count() const {
    return static_cast<std::size_t>(std::llround(correct_solution_rate * solutions_per_task));
  }
  std::size_t valid_count() const {
    return static_cast<std::size_t>(std::llround(valid_test_rate * tests_per_task));
  }

  void validate() const {
    if (tasks < 1 || solutions_per_task < 1 || tests_per_task < 1)
      throw UsageError("synth: tasks, solutions_per_task and tests_per_task must be positive");
    if (!(correct_solution_rate >= 0 && correct_solution_rate <= 1))
      throw UsageError("synth: correct_solution_rate must be in [0, 1]");
    if (!(valid_test_rate >= 0 && valid_test_rate <= 1))
      throw UsageError("synth: valid_test_rate must be in [0, 1]");
    std::size_t clustered = 0;
    for (auto size : wrong_cluster_sizes) {
      if (size < 1) throw UsageError("synth: wrong cluster sizes must be positive");
      clustered += size;
    }
    if (clustered > solutions_per_task - correct_count())
      throw UsageError("synth: wrong clusters need " + std::to_string(clustered) +
                       " solutions but only " +
                       std::to_string(solutions_per_task - correct_count()) + " are incorrect");
  }
};

struct TaskTruth {
  std::string task_id;
  std::vector<SolutionId> correct;  // ascending
  std::vector<TestId> valid_tests;  // ascending
  std::vector<std::vector<SolutionId>> wrong_clusters;
};

struct SynthBundle {
  std::vector<ExecutionMatrix> matrices;
  std::vector<TaskTruth> truth;
};

namespace detail {

inline std::string synth_task_id(std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "synth/%04zu", i);
  return buf;
}

}  // namespace detail

inline SynthBundle generate(const SynthSpec& spec) {
  spec.validate();
  Rng rng(spec.seed);
  SynthBundle bundle;
  const std::size_t n = spec.solutions_per_task;
  const std::size_t m = spec.tests_per_task;
  const std::size_t n_correct = spec.correct_count();
  const std::size_t n_valid = spec.valid_count();
  constexpr int kMaxAttempts = 256;

  for (std::size_t task = 0; task < spec.tasks; ++task) {
    const std::string task_id = detail::synth_task_id(task);
    std::vector<SolutionId> solutions(n);
    std::iota(solutions.begin(), solutions.end(), SolutionId{0});
    rng.shuffle(solutions.begin(), solutions.end());
    std::vector<TestId> tests(m);
    std::iota(tests.begin(), tests.end(), TestId{0});
    rng.shuffle(tests.begin(), tests.end());

    std::vector<bool> valid(m, false);
    for (std::size_t i = 0; i < n_valid; ++i) valid[tests[i]] = true;

    using Vec = std::vector<bool>;
    std::vector<Vec> rows(n);
    std::set<Vec> planted;
    TaskTruth truth{task_id, {}, {}, {}};

    for (std::size_t i = 0; i < n_correct; ++i) {
      rows[solutions[i]] = valid;
      truth.correct.push_back(solutions[i]);
    }
    if (n_correct > 0) planted.insert(valid);

    std::size_t next = n_correct;
    for (std::size_t size : spec.wrong_cluster_sizes) {
      Vec vec;
      for (int attempt = 0;; ++attempt) {
        if (attempt == kMaxAttempts)
          throw UsageError("synth: cannot plant distinct wrong clusters with " +
                           std::to_string(m) + " tests");
        std::vector<TestId> valid_ids(tests.begin(), tests.begin() + n_valid);
        rng.shuffle(valid_ids.begin(), valid_ids.end());
        vec.assign(m, false);
        for (TestId t = 0; t < m; ++t) vec[t] = !valid[t];
        for (std::size_t i = 0; i < n_valid / 2; ++i) vec[valid_ids[i]] = true;
        if (!planted.count(vec)) break;
      }
      planted.insert(vec);
      std::vector<SolutionId> members;
      for (std::size_t i = 0; i < size; ++i) {
        rows[solutions[next]] = vec;
        members.push_back(solutions[next++]);
      }
      std::sort(members.begin(), members.end());
      truth.wrong_clusters.push_back(std::move(members));
    }

    for (; next < n; ++next) {
      Vec vec(m);
      for (int attempt = 0;; ++attempt) {
        if (attempt == kMaxAttempts)
          throw UsageError("synth: cannot draw noise solutions distinct from planted ones with " +
                           std::to_string(m) + " tests");
        for (TestId t = 0; t < m; ++t) vec[t] = rng.chance(valid[t] ? 0.5 : 0.25);
        if (!planted.count(vec)) break;
      }
      rows[solutions[next]] = vec;
    }

    ExecutionMatrix matrix(task_id, n, m);
    for (SolutionId s = 0; s < n; ++s)
      for (TestId t = 0; t < m; ++t)
        matrix.at(s, t).status = rows[s][t] ? Status::Pass : Status::Fail;

    std::sort(truth.correct.begin(), truth.correct.end());
    for (TestId t = 0; t < m; ++t)
      if (valid[t]) truth.valid_tests.push_back(t);
    bundle.matrices.push_back(std::move(matrix));
    bundle.truth.push_back(std::move(truth));
  }
  return bundle;
}

inline CorrectnessMap correctness_of(const std::vector<TaskTruth>& truth) {
  CorrectnessMap out;
  for (const auto& t : truth) out[t.task_id] = {t.task_id, t.correct};
  return out;
}

// {task_id, correct_solution_ids, valid_test_ids}
inline void write_truth(std::ostream& out, const std::vector<TaskTruth>& truth) {
  for (const auto& t : truth) {
    OrderedJson j;
    j["task_id"] = t.task_id;
    j["correct_solution_ids"] = t.correct;
    j["valid_test_ids"] = t.valid_tests;
    write_record(out, j);
  }
}

// Reads truth-label records; valid_test_ids is optional so correctness files
// written by the evaluation stage load the same way.
inline CorrectnessMap read_correctness(std::istream& in, const std::string& name) {
  CorrectnessMap out;
  for_each_record(in, name, [&](const Json& j, std::size_t) {
    CorrectnessVector cv;
    cv.task_id = require_string(j, "task_id");
    cv.correct = require_field(j, "correct_solution_ids").get<std::vector<SolutionId>>();
    std::sort(cv.correct.begin(), cv.correct.end());
    if (std::adjacent_find(cv.correct.begin(), cv.correct.end()) != cv.correct.end())
      throw DataError("duplicate ids in correct_solution_ids");
    if (out.count(cv.task_id)) throw DataError("duplicate task_id " + cv.task_id);
    out[cv.task_id] = std::move(cv);
  });
  return out;
}

inline CorrectnessMap read_correctness(const std::filesystem::path& path) {
  auto in = open_input(path);
  return read_correctness(in, path.string());
}

inline void write_correctness(std::ostream& out, const CorrectnessMap& correctness,
                              std::span<const std::string> order) {
  for (const auto& id : order) {
    auto it = correctness.find(id);
    if (it == correctness.end()) continue;
    OrderedJson j;
    j["task_id"] = id;
    j["correct_solution_ids"] = it->second.correct;
    write_record(out, j);
  }
}

}  // namespace agreerank
