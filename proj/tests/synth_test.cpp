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

#include <gtest/gtest.h>

#include <sstream>

#include "agreerank/consensus.hpp"
#include "agreerank/metrics.hpp"
#include "agreerank/synth.hpp"
#include "test_support.hpp"

namespace agreerank {
namespace {

const ConsensusSet& set_of(const std::vector<ConsensusSet>& sets, SolutionId s) {
  for (const auto& set : sets)
    for (SolutionId member : set.solutions)
      if (member == s) return set;
  throw std::logic_error("solution missing from partition");
}

TEST(Synth, AllValidTestsGiveFullPassTopSet) {
  SynthSpec spec;
  spec.tasks = 1;
  spec.solutions_per_task = 10;
  spec.tests_per_task = 10;
  spec.correct_solution_rate = 0.4;
  spec.valid_test_rate = 1.0;
  spec.seed = 7;
  auto bundle = generate(spec);
  ASSERT_EQ(bundle.matrices.size(), 1u);
  const auto& truth = bundle.truth[0];
  EXPECT_EQ(truth.correct.size(), 4u);
  EXPECT_EQ(truth.valid_tests.size(), 10u);
  auto sets = group_exhaustive(bundle.matrices[0]);
  EXPECT_EQ(sets.front().solutions, truth.correct);
  EXPECT_EQ(sets.front().tests.size(), 10u);
}

TEST(Synth, NothingCorrectMeansRankedZero) {
  SynthSpec spec;
  spec.tasks = 8;
  spec.solutions_per_task = 12;
  spec.tests_per_task = 8;
  spec.correct_solution_rate = 0.0;
  spec.seed = 1;
  auto bundle = generate(spec);
  SelectionMap sels;
  std::vector<std::string> ids;
  for (const auto& m : bundle.matrices) {
    ids.push_back(m.task_id());
    sels[m.task_id()] = rank(m.task_id(), group_exhaustive(m), {}, GaConfig{});
  }
  std::vector<std::size_t> ks{1, 2, 10};
  auto report = build_report(ids, sels, correctness_of(bundle.truth), ks, Method::Ranked);
  EXPECT_EQ(report.aggregate, (std::vector<double>{0.0, 0.0, 0.0}));
}

TEST(Synth, LargeWrongClusterWins) {
  SynthSpec spec;
  spec.tasks = 1;
  spec.solutions_per_task = 10;
  spec.tests_per_task = 10;
  spec.correct_solution_rate = 0.4;
  spec.valid_test_rate = 0.2;
  spec.wrong_cluster_sizes = {6};
  spec.seed = 5;
  auto bundle = generate(spec);
  const auto& truth = bundle.truth[0];
  auto sel = rank(truth.task_id, group_exhaustive(bundle.matrices[0]), {}, GaConfig{});
  EXPECT_EQ(select_top_k(sel, 6), truth.wrong_clusters[0]);
  EXPECT_FALSE(std::binary_search(truth.correct.begin(), truth.correct.end(), sel.best()));
}

TEST(Synth, TruthMatchesMatrixAndGrouping) {
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    SynthSpec spec;
    spec.tasks = 3;
    spec.solutions_per_task = 20;
    spec.tests_per_task = 20;
    spec.correct_solution_rate = 0.3;
    spec.valid_test_rate = 0.8;
    spec.wrong_cluster_sizes = {4, 2};
    spec.seed = seed;
    auto bundle = generate(spec);
    for (std::size_t i = 0; i < bundle.matrices.size(); ++i) {
      const auto& m = bundle.matrices[i];
      const auto& truth = bundle.truth[i];
      EXPECT_EQ(m.task_id(), truth.task_id);
      ASSERT_EQ(truth.correct.size(), 6u);
      ASSERT_EQ(truth.valid_tests.size(), 16u);
      for (SolutionId s : truth.correct)
        for (TestId t = 0; t < m.tests(); ++t)
          EXPECT_EQ(m.passes(s, t), std::binary_search(truth.valid_tests.begin(),
                                                       truth.valid_tests.end(), t));
      auto sets = group_exhaustive(m);
      const auto& correct_set = set_of(sets, truth.correct[0]);
      EXPECT_EQ(correct_set.solutions, truth.correct);
      EXPECT_EQ(correct_set.tests, truth.valid_tests);
      ASSERT_EQ(truth.wrong_clusters.size(), 2u);
      for (const auto& cluster : truth.wrong_clusters)
        EXPECT_EQ(set_of(sets, cluster[0]).solutions, cluster);
    }
  }
}

TEST(Synth, Deterministic) {
  SynthSpec spec;
  spec.tasks = 4;
  spec.wrong_cluster_sizes = {2};
  spec.seed = 11;
  auto a = generate(spec);
  auto b = generate(spec);
  for (std::size_t i = 0; i < a.matrices.size(); ++i)
    EXPECT_TRUE(a.matrices[i].same_statuses(b.matrices[i]));
  spec.seed = 12;
  auto c = generate(spec);
  bool all_same = true;
  for (std::size_t i = 0; i < a.matrices.size(); ++i)
    all_same &= a.matrices[i].same_statuses(c.matrices[i]);
  EXPECT_FALSE(all_same);
}

TEST(Synth, RejectsInfeasibleSpecs) {
  SynthSpec spec;
  spec.solutions_per_task = 10;
  spec.correct_solution_rate = 0.5;
  spec.wrong_cluster_sizes = {3, 3};
  EXPECT_THROW(generate(spec), UsageError);
  spec.wrong_cluster_sizes = {0};
  EXPECT_THROW(generate(spec), UsageError);
  spec.wrong_cluster_sizes = {};
  spec.valid_test_rate = 1.5;
  EXPECT_THROW(generate(spec), UsageError);
  // One test leaves room for at most two distinct planted vectors.
  SynthSpec tiny;
  tiny.solutions_per_task = 6;
  tiny.tests_per_task = 1;
  tiny.correct_solution_rate = 0.0;
  tiny.wrong_cluster_sizes = {1, 1, 1};
  EXPECT_THROW(generate(tiny), UsageError);
}

TEST(Synth, TruthRoundTrip) {
  SynthSpec spec;
  spec.tasks = 3;
  spec.seed = 2;
  auto bundle = generate(spec);
  std::stringstream io;
  write_truth(io, bundle.truth);
  auto loaded = read_correctness(io, "truth.jsonl");
  auto expected = correctness_of(bundle.truth);
  ASSERT_EQ(loaded.size(), expected.size());
  for (const auto& [id, cv] : expected) EXPECT_EQ(loaded.at(id).correct, cv.correct);
}

}  // namespace
}  // namespace agreerank
