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

// Domain types shared by every stage of the reranking pipeline.

#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace agreerank {

// Error categories. The CLI maps each one onto a distinct exit code.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad flags, missing paths, inconsistent configuration.
class UsageError : public Error {
 public:
  using Error::Error;
};

// Malformed or inconsistent input records.
class DataError : public Error {
 public:
  using Error::Error;
};

// The external runner could not be started or never produced a response.
class RunnerError : public Error {
 public:
  using Error::Error;
};

using SolutionId = std::uint32_t;
using TestId = std::uint32_t;

struct Problem {
  std::string task_id;
  std::string prompt;
  std::string entry_point;
};

struct CandidateSolution {
  std::string task_id;
  SolutionId solution_id = 0;
  std::string source;

  friend bool operator==(const CandidateSolution&, const CandidateSolution&) = default;
};

struct TestCase {
  std::string task_id;
  TestId test_id = 0;
  std::string assertion;

  friend bool operator==(const TestCase&, const TestCase&) = default;
};

enum class Status : std::uint8_t { Pass, Fail, Error, Timeout };

inline std::string_view to_string(Status s) {
  switch (s) {
    case Status::Pass: return "pass";
    case Status::Fail: return "fail";
    case Status::Error: return "error";
    case Status::Timeout: return "timeout";
  }
  return "error";
}

inline std::optional<Status> parse_status(std::string_view text) {
  if (text == "pass") return Status::Pass;
  if (text == "fail") return Status::Fail;
  if (text == "error") return Status::Error;
  if (text == "timeout") return Status::Timeout;
  return std::nullopt;
}

inline constexpr std::size_t kMaxDetailBytes = 512;

// Cuts `text` to at most kMaxDetailBytes without splitting a UTF-8 sequence.
inline std::string truncate_detail(std::string_view text) {
  if (text.size() <= kMaxDetailBytes) return std::string(text);
  std::size_t end = kMaxDetailBytes;
  while (end > 0 && (static_cast<unsigned char>(text[end]) & 0xC0) == 0x80) --end;
  return std::string(text.substr(0, end));
}

struct Outcome {
  Status status = Status::Error;
  std::int64_t duration_ms = 0;
  std::string detail;
};

// Total map (solution, test) -> Outcome for one task, stored row-major.
class ExecutionMatrix {
 public:
  ExecutionMatrix() = default;
  ExecutionMatrix(std::string task_id, std::size_t solutions, std::size_t tests)
      : task_id_(std::move(task_id)),
        solutions_(solutions),
        tests_(tests),
        cells_(solutions * tests) {}

  const std::string& task_id() const { return task_id_; }
  std::size_t solutions() const { return solutions_; }
  std::size_t tests() const { return tests_; }
  std::size_t size() const { return cells_.size(); }

  Outcome& at(SolutionId s, TestId t) { return cells_.at(index(s, t)); }
  const Outcome& at(SolutionId s, TestId t) const { return cells_.at(index(s, t)); }

  bool passes(SolutionId s, TestId t) const { return at(s, t).status == Status::Pass; }

  // Status-level equality; durations are wall-clock noise and not compared.
  bool same_statuses(const ExecutionMatrix& other) const {
    if (task_id_ != other.task_id_ || solutions_ != other.solutions_ ||
        tests_ != other.tests_)
      return false;
    for (std::size_t i = 0; i < cells_.size(); ++i)
      if (cells_[i].status != other.cells_[i].status) return false;
    return true;
  }

 private:
  std::size_t index(SolutionId s, TestId t) const {
    if (s >= solutions_ || t >= tests_)
      throw std::out_of_range("matrix cell out of range");
    return static_cast<std::size_t>(s) * tests_ + t;
  }

  std::string task_id_;
  std::size_t solutions_ = 0;
  std::size_t tests_ = 0;
  std::vector<Outcome> cells_;
};

// Exponents of the consensus-set score |S|^alpha * |T|^beta.
struct ScoreParams {
  double alpha = 0.5;
  double beta = 1.1;

  void validate() const {
    if (!std::isfinite(alpha) || !std::isfinite(beta) || alpha < 0 || beta < 0)
      throw UsageError("score exponents must be finite and non-negative");
  }

  friend bool operator==(const ScoreParams&, const ScoreParams&) = default;
};

}  // namespace agreerank
