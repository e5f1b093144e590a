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

// Consensus sets: solutions grouped by the exact set of generated tests they
// pass. Two solutions agree when their pass vectors are identical; the group's
// test set is that shared vector. Error and Timeout never count as a pass.

#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <set>
#include <vector>

#include "agreerank/core.hpp"
#include "agreerank/random.hpp"

namespace agreerank {

struct ConsensusSet {
  std::vector<SolutionId> solutions;  // ascending, non-empty
  std::vector<TestId> tests;          // ascending, possibly empty
  double score = 0.0;

  friend bool operator==(const ConsensusSet&, const ConsensusSet&) = default;
};

// Bit-packed pass vector of one solution.
class PassVector {
 public:
  PassVector() = default;
  PassVector(const ExecutionMatrix& m, SolutionId s) : words_((m.tests() + 63) / 64, 0) {
    for (TestId t = 0; t < m.tests(); ++t)
      if (m.passes(s, t)) words_[t / 64] |= std::uint64_t{1} << (t % 64);
  }

  std::vector<TestId> passed() const {
    std::vector<TestId> out;
    for (std::size_t w = 0; w < words_.size(); ++w)
      for (unsigned b = 0; b < 64; ++b)
        if (words_[w] >> b & 1U) out.push_back(static_cast<TestId>(w * 64 + b));
    return out;
  }

  bool empty() const {
    return std::all_of(words_.begin(), words_.end(), [](auto w) { return w == 0; });
  }

  auto operator<=>(const PassVector&) const = default;

 private:
  std::vector<std::uint64_t> words_;
};

// Largest set first, then smallest first member.
inline void sort_sets(std::vector<ConsensusSet>& sets) {
  std::sort(sets.begin(), sets.end(), [](const ConsensusSet& a, const ConsensusSet& b) {
    if (a.solutions.size() != b.solutions.size()) return a.solutions.size() > b.solutions.size();
    return a.solutions.front() < b.solutions.front();
  });
}

inline std::vector<ConsensusSet> group_exhaustive(const ExecutionMatrix& matrix) {
  std::map<PassVector, std::vector<SolutionId>> groups;
  for (SolutionId s = 0; s < matrix.solutions(); ++s)
    groups[PassVector(matrix, s)].push_back(s);
  std::vector<ConsensusSet> sets;
  sets.reserve(groups.size());
  for (auto& [vec, members] : groups) sets.push_back({std::move(members), vec.passed(), 0.0});
  sort_sets(sets);
  return sets;
}

struct RansacStats {
  std::size_t inliers = 0;
  std::size_t outliers = 0;
  std::size_t sets_from_sampling = 0;  // distinct sets discovered through inliers
};

// Randomized grouping: each iteration draws a (solution, test) pair; when the
// solution passes the test the pair is an inlier and the solution's whole
// agreement group joins the output. Solutions that pass no test can never be
// drawn as inliers, so they are appended as one deterministic tests=∅ set at
// the end; with enough iterations the result equals group_exhaustive.
inline std::vector<ConsensusSet> group_ransac(const ExecutionMatrix& matrix,
                                              std::size_t iterations, std::uint64_t seed,
                                              RansacStats* stats = nullptr) {
  if (iterations < 1) throw UsageError("ransac iterations must be >= 1");
  const std::size_t n = matrix.solutions();
  const std::size_t m = matrix.tests();
  std::vector<PassVector> vectors;
  vectors.reserve(n);
  for (SolutionId s = 0; s < n; ++s) vectors.emplace_back(matrix, s);

  RansacStats local;
  std::vector<bool> covered(n, false);
  std::vector<ConsensusSet> sets;
  Rng rng(seed);
  if (n > 0 && m > 0) {
    for (std::size_t it = 0; it < iterations; ++it) {
      auto s = static_cast<SolutionId>(rng.below(n));
      auto t = static_cast<TestId>(rng.below(m));
      if (!matrix.passes(s, t)) {
        ++local.outliers;
        continue;
      }
      ++local.inliers;
      if (covered[s]) continue;
      ConsensusSet set;
      for (SolutionId other = 0; other < n; ++other) {
        if (vectors[other] == vectors[s]) {
          set.solutions.push_back(other);
          covered[other] = true;
        }
      }
      set.tests = vectors[s].passed();
      sets.push_back(std::move(set));
      ++local.sets_from_sampling;
    }
  }
  ConsensusSet none;
  for (SolutionId s = 0; s < n; ++s)
    if (!covered[s] && vectors[s].empty()) none.solutions.push_back(s);
  if (!none.solutions.empty()) sets.push_back(std::move(none));
  sort_sets(sets);
  if (stats) *stats = local;
  return sets;
}

// Tests that end in Error for every solution (typically malformed
// assertions). They pass nothing, so they never enter a consensus set.
inline std::vector<TestId> all_error_tests(const ExecutionMatrix& matrix) {
  std::vector<TestId> out;
  if (matrix.solutions() == 0) return out;
  for (TestId t = 0; t < matrix.tests(); ++t) {
    bool all = true;
    for (SolutionId s = 0; s < matrix.solutions() && all; ++s)
      all = matrix.at(s, t).status == Status::Error;
    if (all) out.push_back(t);
  }
  return out;
}

}  // namespace agreerank
