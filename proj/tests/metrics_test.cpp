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

#include <string>
#include <vector>

#include "agreerank/metrics.hpp"
#include "agreerank/synth.hpp"
#include "test_support.hpp"

namespace agreerank {
namespace {

// Fraction of k-subsets of {0..n-1} containing one of the first c ids.
double enumerate_pass_at_k(std::size_t n, std::size_t c, std::size_t k) {
  std::size_t hit = 0, total = 0;
  for (unsigned mask = 0; mask < (1u << n); ++mask) {
    if (static_cast<std::size_t>(__builtin_popcount(mask)) != k) continue;
    ++total;
    if (mask & ((1u << c) - 1)) ++hit;
  }
  return static_cast<double>(hit) / static_cast<double>(total);
}

RankedSelection selection(std::string task, std::vector<SolutionId> order) {
  RankedSelection sel;
  sel.task_id = std::move(task);
  sel.order = std::move(order);
  return sel;
}

TEST(PassAtKUnbiased, MatchesSubsetEnumeration) {
  for (std::size_t n = 1; n <= 8; ++n)
    for (std::size_t c = 0; c <= n; ++c)
      for (std::size_t k = 1; k <= n; ++k)
        EXPECT_NEAR(pass_at_k_unbiased(n, c, k), enumerate_pass_at_k(n, c, k), 1e-12)
            << n << " " << c << " " << k;
}

TEST(PassAtKUnbiased, SpotValues) {
  EXPECT_NEAR(pass_at_k_unbiased(5, 2, 1), 0.4, 1e-12);
  EXPECT_NEAR(pass_at_k_unbiased(5, 2, 2), 0.7, 1e-12);
  EXPECT_EQ(pass_at_k_unbiased(5, 0, 3), 0.0);
  EXPECT_EQ(pass_at_k_unbiased(5, 5, 1), 1.0);
  EXPECT_EQ(pass_at_k_unbiased(5, 4, 2), 1.0);
}

TEST(PassAtKUnbiased, MonotoneInKAndC) {
  for (std::size_t n = 1; n <= 40; ++n)
    for (std::size_t c = 0; c <= n; ++c)
      for (std::size_t k = 1; k <= n; ++k) {
        if (k < n) {
          EXPECT_LE(pass_at_k_unbiased(n, c, k), pass_at_k_unbiased(n, c, k + 1));
        }
        if (c < n) {
          EXPECT_LE(pass_at_k_unbiased(n, c, k), pass_at_k_unbiased(n, c + 1, k));
        }
      }
}

TEST(PassAtKUnbiased, RejectsInvalidArguments) {
  EXPECT_THROW(pass_at_k_unbiased(0, 0, 1), UsageError);
  EXPECT_THROW(pass_at_k_unbiased(5, 6, 1), UsageError);
  EXPECT_THROW(pass_at_k_unbiased(5, 2, 0), UsageError);
  EXPECT_THROW(pass_at_k_unbiased(5, 2, 6), UsageError);
}

TEST(PassAtKRanked, Indicator) {
  auto sel = selection("T", {3, 0, 2, 1});
  CorrectnessVector truth{"T", {1, 2}};
  EXPECT_EQ(pass_at_k_ranked(sel, truth, 1), 0);
  EXPECT_EQ(pass_at_k_ranked(sel, truth, 2), 0);
  EXPECT_EQ(pass_at_k_ranked(sel, truth, 3), 1);
  EXPECT_EQ(pass_at_k_ranked(sel, truth, 100), 1);
  EXPECT_EQ(pass_at_k_ranked(sel, CorrectnessVector{"T", {}}, 4), 0);
  EXPECT_EQ(pass_at_k_ranked(sel, CorrectnessVector{"T", {3}}, 1), 1);
  EXPECT_THROW(pass_at_k_ranked(sel, CorrectnessVector{"U", {3}}, 1), DataError);
}

TEST(Correctness, FromHiddenMatrix) {
  ExecutionMatrix hidden("T", 3, 2);
  for (SolutionId s = 0; s < 3; ++s)
    for (TestId t = 0; t < 2; ++t) hidden.at(s, t).status = Status::Pass;
  hidden.at(1, 1).status = Status::Timeout;
  EXPECT_EQ(correctness_from_matrix(hidden).correct, (std::vector<SolutionId>{0, 2}));
  EXPECT_THROW(correctness_from_matrix(ExecutionMatrix("T", 3, 0)), DataError);
}

TEST(Report, SingleTaskAllHundred) {
  std::vector<std::string> ids{"T"};
  SelectionMap sels{{"T", selection("T", {1, 0, 2})}};
  CorrectnessMap truth{{"T", {"T", {1}}}};
  std::vector<std::size_t> ks{1, 2, 10};
  auto report = build_report(ids, sels, truth, ks, Method::Ranked);
  EXPECT_EQ(report.aggregate, (std::vector<double>{100.0, 100.0, 100.0}));
}

TEST(Report, MeanOverTasks) {
  std::vector<std::string> ids{"A", "B"};
  SelectionMap sels{{"A", selection("A", {0, 1})}, {"B", selection("B", {0, 1})}};
  CorrectnessMap truth{{"A", {"A", {0}}}, {"B", {"B", {1}}}};
  std::vector<std::size_t> ks{1, 2};
  auto report = build_report(ids, sels, truth, ks, Method::Ranked);
  EXPECT_DOUBLE_EQ(report.aggregate[0], 50.0);
  EXPECT_DOUBLE_EQ(report.aggregate[1], 100.0);
}

TEST(Report, BaselineUsesEstimatorAndClampsK) {
  std::vector<std::string> ids{"T"};
  SelectionMap sels{{"T", selection("T", {0, 1, 2, 3, 4})}};
  CorrectnessMap truth{{"T", {"T", {1, 3}}}};
  std::vector<std::size_t> ks{1, 2, 10};
  auto report = build_report(ids, sels, truth, ks, Method::Baseline);
  EXPECT_NEAR(report.aggregate[0], 40.0, 1e-9);
  EXPECT_NEAR(report.aggregate[1], 70.0, 1e-9);
  EXPECT_NEAR(report.aggregate[2], 100.0, 1e-9);
}

TEST(Report, MissingTaskNamed) {
  std::vector<std::string> ids{"A", "B"};
  SelectionMap sels{{"A", selection("A", {0})}};
  CorrectnessMap truth{{"A", {"A", {0}}}, {"B", {"B", {0}}}};
  std::vector<std::size_t> ks{1};
  try {
    build_report(ids, sels, truth, ks, Method::Ranked);
    FAIL() << "expected DataError";
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("B"), std::string::npos);
  }
  std::vector<std::size_t> bad{0};
  EXPECT_THROW(build_report(ids, sels, truth, bad, Method::Ranked), UsageError);
}

TEST(Report, JsonAndTable) {
  std::vector<std::string> ids{"T"};
  SelectionMap sels{{"T", selection("T", {0, 1, 2, 3, 4})}};
  CorrectnessMap truth{{"T", {"T", {0, 3}}}};
  std::vector<std::size_t> ks{1, 2};
  std::vector<PassAtKReport> reports{build_report(ids, sels, truth, ks, Method::Baseline),
                                     build_report(ids, sels, truth, ks, Method::Ranked)};
  auto j = to_json(reports[1]);
  EXPECT_EQ(j["method"], "ranked");
  EXPECT_EQ(j["per_task"]["T"]["pass@1"], 1.0);
  EXPECT_EQ(j["aggregate"]["pass@2"], 100.0);
  EXPECT_EQ(render_table(reports),
            "Method        pass@1    pass@2\n"
            "Baseline        40.0      70.0\n"
            "Ranked         100.0     100.0\n");
}

// Two correct solutions passing 4 tests against a wrong trio agreeing on 2:
// with beta = 0 the larger wrong set wins.
std::pair<std::map<std::string, ExecutionMatrix>, CorrectnessMap> beta_sensitive_corpus(
    std::vector<std::string>& ids) {
  SynthSpec spec;
  spec.tasks = 5;
  spec.solutions_per_task = 5;
  spec.tests_per_task = 4;
  spec.correct_solution_rate = 0.4;
  spec.valid_test_rate = 1.0;
  spec.wrong_cluster_sizes = {3};
  spec.seed = 3;
  auto bundle = generate(spec);
  std::map<std::string, ExecutionMatrix> matrices;
  for (auto& m : bundle.matrices) {
    ids.push_back(m.task_id());
    matrices.emplace(m.task_id(), m);
  }
  return {std::move(matrices), correctness_of(bundle.truth)};
}

TEST(Tune, PrefersPositiveBetaWhenItMatters) {
  std::vector<std::string> ids;
  auto [matrices, truth] = beta_sensitive_corpus(ids);
  auto result = tune(matrices, ids, {0.5}, {0.0, 1.1}, GaConfig{}, truth);
  EXPECT_DOUBLE_EQ(result.best.alpha, 0.5);
  EXPECT_DOUBLE_EQ(result.best.beta, 1.1);
  EXPECT_DOUBLE_EQ(result.pass_at_1, 100.0);
  ASSERT_EQ(result.grid.size(), 2u);
  EXPECT_EQ(result.grid[0].solved, 0u);
  EXPECT_EQ(result.grid[1].solved, 5u);
}

TEST(Tune, SingletonGridAndTies) {
  std::vector<std::string> ids;
  auto [matrices, truth] = beta_sensitive_corpus(ids);
  auto one = tune(matrices, ids, {0.7}, {2.0}, GaConfig{}, truth);
  EXPECT_DOUBLE_EQ(one.best.alpha, 0.7);
  EXPECT_DOUBLE_EQ(one.best.beta, 2.0);
  // Every positive beta solves all tasks; the smallest beta then alpha wins.
  auto tied = tune(matrices, ids, {1.0, 0.5, 0.5}, {2.0, 1.1}, GaConfig{}, truth);
  EXPECT_DOUBLE_EQ(tied.best.alpha, 0.5);
  EXPECT_DOUBLE_EQ(tied.best.beta, 1.1);
  EXPECT_EQ(tied.grid.size(), 4u);
}

TEST(Tune, RejectsUnlabelledDevTask) {
  std::vector<std::string> ids;
  auto [matrices, truth] = beta_sensitive_corpus(ids);
  truth.erase(ids[2]);
  try {
    tune(matrices, ids, {0.5}, {1.1}, GaConfig{}, truth);
    FAIL() << "expected DataError";
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find(ids[2]), std::string::npos);
  }
  EXPECT_THROW(tune(matrices, ids, {}, {1.1}, GaConfig{}, truth), UsageError);
}

}  // namespace
}  // namespace agreerank
