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

// Matrix records: {task_id, solution_id, test_id, status, duration_ms,
// source_hash, assertion_hash, timeout_ms, detail?}. The same record layout
// backs both the per-run matrix file and the persistent cache.

#pragma once

#include <filesystem>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "agreerank/core.hpp"
#include "agreerank/jsonl.hpp"

namespace agreerank {

struct MatrixRecord {
  std::string task_id;
  SolutionId solution_id = 0;
  TestId test_id = 0;
  Outcome outcome;
  std::string source_hash;
  std::string assertion_hash;
  std::int64_t timeout_ms = 0;
};

inline OrderedJson to_json(const MatrixRecord& r) {
  OrderedJson j;
  j["task_id"] = r.task_id;
  j["solution_id"] = r.solution_id;
  j["test_id"] = r.test_id;
  j["status"] = to_string(r.outcome.status);
  j["duration_ms"] = r.outcome.duration_ms;
  j["source_hash"] = r.source_hash;
  j["assertion_hash"] = r.assertion_hash;
  j["timeout_ms"] = r.timeout_ms;
  if (!r.outcome.detail.empty()) j["detail"] = r.outcome.detail;
  return j;
}

inline MatrixRecord matrix_record_from_json(const Json& j) {
  MatrixRecord r;
  r.task_id = require_string(j, "task_id");
  r.solution_id = require_field(j, "solution_id").get<SolutionId>();
  r.test_id = require_field(j, "test_id").get<TestId>();
  auto status = parse_status(require_string(j, "status"));
  if (!status) throw DataError("unknown status '" + require_string(j, "status") + "'");
  r.outcome.status = *status;
  r.outcome.duration_ms = j.value("duration_ms", std::int64_t{0});
  if (r.outcome.duration_ms < 0) throw DataError("negative duration_ms");
  r.source_hash = j.value("source_hash", std::string());
  r.assertion_hash = j.value("assertion_hash", std::string());
  r.timeout_ms = j.value("timeout_ms", std::int64_t{0});
  if (auto it = j.find("detail"); it != j.end() && it->is_string())
    r.outcome.detail = truncate_detail(it->get<std::string>());
  return r;
}

// Matrices in first-appearance order of their task ids. Every task's grid
// must be total: each (solution, test) pair exactly once, ids dense.
inline std::vector<ExecutionMatrix> read_matrices(std::istream& in, const std::string& name) {
  std::vector<std::string> order;
  std::map<std::string, std::vector<MatrixRecord>> by_task;
  for_each_record(in, name, [&](const Json& j, std::size_t) {
    auto r = matrix_record_from_json(j);
    if (!by_task.count(r.task_id)) order.push_back(r.task_id);
    by_task[r.task_id].push_back(std::move(r));
  });
  std::vector<ExecutionMatrix> out;
  for (const auto& task_id : order) {
    const auto& records = by_task[task_id];
    std::size_t rows = 0, cols = 0;
    for (const auto& r : records) {
      rows = std::max<std::size_t>(rows, r.solution_id + 1);
      cols = std::max<std::size_t>(cols, r.test_id + 1);
    }
    if (rows * cols != records.size())
      throw DataError(name + ": task " + task_id + " matrix is not total (" +
                      std::to_string(records.size()) + " cells for a " + std::to_string(rows) +
                      "x" + std::to_string(cols) + " grid)");
    ExecutionMatrix m(task_id, rows, cols);
    std::vector<bool> seen(rows * cols, false);
    for (const auto& r : records) {
      auto idx = static_cast<std::size_t>(r.solution_id) * cols + r.test_id;
      if (seen[idx])
        throw DataError(name + ": task " + task_id + " has duplicate cell (" +
                        std::to_string(r.solution_id) + ", " + std::to_string(r.test_id) + ")");
      seen[idx] = true;
      m.at(r.solution_id, r.test_id) = r.outcome;
    }
    out.push_back(std::move(m));
  }
  return out;
}

inline std::vector<ExecutionMatrix> read_matrices(const std::filesystem::path& path) {
  auto in = open_input(path);
  return read_matrices(in, path.string());
}

// Renders one task's matrix row-major. `source_hashes` / `assertion_hashes`
// are indexed by solution / test id.
inline void write_matrix(std::ostream& out, const ExecutionMatrix& m,
                         const std::vector<std::string>& source_hashes,
                         const std::vector<std::string>& assertion_hashes,
                         std::int64_t timeout_ms) {
  for (SolutionId s = 0; s < m.solutions(); ++s) {
    for (TestId t = 0; t < m.tests(); ++t) {
      MatrixRecord r{m.task_id(), s, t, m.at(s, t), source_hashes.at(s), assertion_hashes.at(t),
                     timeout_ms};
      write_record(out, to_json(r));
    }
  }
}

}  // namespace agreerank
