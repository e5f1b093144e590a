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

// pass@k evaluation.
//
// Baseline rows use the unbiased estimator 1 - C(n-c, k) / C(n, k): the
// probability that k solutions drawn uniformly without replacement from n,
// of which c are correct, include a correct one. Ranked rows use the
// deterministic top-k of a RankedSelection. Correctness always means
// "passes every hidden reference test".

#pragma once

#include <algorithm>
#include <cstdio>
#include <map>
#include <set>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "agreerank/consensus.hpp"
#include "agreerank/core.hpp"
#include "agreerank/evo_rank.hpp"
#include "agreerank/jsonl.hpp"

namespace agreerank {

// Product form: C(n-c, k) / C(n, k) = prod_{i=n-c+1}^{n} (1 - k / i).
inline double pass_at_k_unbiased(std::size_t n, std::size_t c, std::size_t k) {
  if (n < 1) throw UsageError("pass@k needs n >= 1");
  if (k < 1) throw UsageError("pass@k needs k >= 1");
  if (c > n) throw UsageError("pass@k needs c <= n");
  if (k > n) throw UsageError("pass@k needs k <= n");
  if (n - c < k) return 1.0;
  double miss = 1.0;
  for (std::size_t i = n - c + 1; i <= n; ++i)
    miss *= 1.0 - static_cast<double>(k) / static_cast<double>(i);
  return 1.0 - miss;
}

struct CorrectnessVector {
  std::string task_id;
  std::vector<SolutionId> correct;  // ascending

  bool contains(SolutionId s) const {
    return std::binary_search(correct.begin(), correct.end(), s);
  }
};

inline int pass_at_k_ranked(const RankedSelection& sel, const CorrectnessVector& truth,
                            std::size_t k) {
  if (sel.task_id != truth.task_id)
    throw DataError("selection for " + sel.task_id + " judged against " + truth.task_id);
  for (SolutionId s : select_top_k(sel, k))
    if (truth.contains(s)) return 1;
  return 0;
}

// Solutions passing every hidden test of `matrix` (rows = solutions,
// columns = hidden tests).
inline CorrectnessVector correctness_from_matrix(const ExecutionMatrix& hidden) {
  if (hidden.tests() == 0) throw DataError("task " + hidden.task_id() + " has no hidden tests");
  CorrectnessVector cv{hidden.task_id(), {}};
  for (SolutionId s = 0; s < hidden.solutions(); ++s) {
    bool all = true;
    for (TestId t = 0; t < hidden.tests() && all; ++t) all = hidden.passes(s, t);
    if (all) cv.correct.push_back(s);
  }
  return cv;
}

enum class Method { Baseline, Ranked };

inline std::string_view to_string(Method m) { return m == Method::Baseline ? "baseline" : "ranked"; }

struct PassAtKReport {
  Method method = Method::Ranked;
  std::vector<std::size_t> k_values;
  std::vector<std::pair<std::string, std::vector<double>>> per_task;  // values in [0, 1]
  std::vector<double> aggregate;                                      // percentages
};

using SelectionMap = std::map<std::string, RankedSelection>;
using CorrectnessMap = std::map<std::string, CorrectnessVector>;

// Baseline uses the full pool size n = |order| and clamps k to n; a task
// without solutions scores 0.
inline PassAtKReport build_report(std::span<const std::string> task_ids,
                                  const SelectionMap& selections,
                                  const CorrectnessMap& correctness,
                                  std::span<const std::size_t> k_values, Method method) {
  if (k_values.empty()) throw UsageError("k_values must not be empty");
  for (auto k : k_values)
    if (k < 1) throw UsageError("k values must be >= 1");
  std::vector<std::string> missing;
  for (const auto& id : task_ids)
    if (!selections.count(id) || !correctness.count(id)) missing.push_back(id);
  if (!missing.empty()) {
    std::string msg = "report is missing tasks:";
    for (const auto& id : missing) msg += " " + id;
    throw DataError(msg);
  }

  PassAtKReport report;
  report.method = method;
  report.k_values.assign(k_values.begin(), k_values.end());
  report.aggregate.assign(k_values.size(), 0.0);
  for (const auto& id : task_ids) {
    const RankedSelection& sel = selections.at(id);
    const CorrectnessVector& truth = correctness.at(id);
    std::vector<double> values;
    for (std::size_t k : k_values) {
      if (method == Method::Ranked) {
        values.push_back(pass_at_k_ranked(sel, truth, k));
      } else {
        const std::size_t n = sel.order.size();
        values.push_back(n == 0 ? 0.0
                                : pass_at_k_unbiased(n, truth.correct.size(), std::min(k, n)));
      }
    }
    for (std::size_t i = 0; i < values.size(); ++i) report.aggregate[i] += values[i];
    report.per_task.emplace_back(id, std::move(values));
  }
  for (auto& a : report.aggregate)
    a = task_ids.empty() ? 0.0 : 100.0 * a / static_cast<double>(task_ids.size());
  return report;
}

inline std::string k_label(std::size_t k) { return "pass@" + std::to_string(k); }

// {method, k_values, per_task: {task_id: {"pass@k": v}}, aggregate: {"pass@k": pct}}
inline OrderedJson to_json(const PassAtKReport& report) {
  OrderedJson j;
  j["method"] = to_string(report.method);
  j["k_values"] = report.k_values;
  OrderedJson per_task = OrderedJson::object();
  for (const auto& [task, values] : report.per_task) {
    OrderedJson row = OrderedJson::object();
    for (std::size_t i = 0; i < values.size(); ++i) row[k_label(report.k_values[i])] = values[i];
    per_task[task] = std::move(row);
  }
  j["per_task"] = std::move(per_task);
  OrderedJson agg = OrderedJson::object();
  for (std::size_t i = 0; i < report.aggregate.size(); ++i)
    agg[k_label(report.k_values[i])] = report.aggregate[i];
  j["aggregate"] = std::move(agg);
  return j;
}

// Aligned text table, one row per method and one column per k, percentages
// with one decimal.
inline std::string render_table(std::span<const PassAtKReport> reports) {
  std::ostringstream out;
  if (reports.empty()) return {};
  char cell[32];
  std::snprintf(cell, sizeof cell, "%-10s", "Method");
  out << cell;
  for (auto k : reports.front().k_values) {
    std::snprintf(cell, sizeof cell, "%10s", k_label(k).c_str());
    out << cell;
  }
  out << '\n';
  for (const auto& r : reports) {
    std::snprintf(cell, sizeof cell, "%-10s", r.method == Method::Baseline ? "Baseline" : "Ranked");
    out << cell;
    for (double v : r.aggregate) {
      std::snprintf(cell, sizeof cell, "%10.1f", v);
      out << cell;
    }
    out << '\n';
  }
  return out.str();
}

struct TunePoint {
  ScoreParams params;
  std::size_t solved = 0;  // dev tasks whose top-1 is correct
};

struct TuneResult {
  ScoreParams best;
  double pass_at_1 = 0.0;  // percentage on the dev tasks
  std::vector<TunePoint> grid;
};

// Grid search for the (alpha, beta) maximizing ranked pass@1 on the dev tasks.
// Ties go to the smaller beta, then the smaller alpha.
inline TuneResult tune(const std::map<std::string, ExecutionMatrix>& matrices,
                       std::span<const std::string> dev_task_ids,
                       std::vector<double> alpha_grid, std::vector<double> beta_grid,
                       const GaConfig& cfg, const CorrectnessMap& correctness) {
  if (alpha_grid.empty() || beta_grid.empty()) throw UsageError("tuning grids must not be empty");
  if (dev_task_ids.empty()) throw UsageError("tuning needs at least one dev task");
  std::sort(alpha_grid.begin(), alpha_grid.end());
  alpha_grid.erase(std::unique(alpha_grid.begin(), alpha_grid.end()), alpha_grid.end());
  std::sort(beta_grid.begin(), beta_grid.end());
  beta_grid.erase(std::unique(beta_grid.begin(), beta_grid.end()), beta_grid.end());

  std::vector<std::vector<ConsensusSet>> sets;
  for (const auto& id : dev_task_ids) {
    if (!correctness.count(id)) throw DataError("dev task " + id + " has no hidden tests");
    auto it = matrices.find(id);
    if (it == matrices.end()) throw DataError("dev task " + id + " has no execution matrix");
    sets.push_back(group_exhaustive(it->second));
  }

  TuneResult result;
  bool have_best = false;
  std::size_t best_solved = 0;
  for (double beta : beta_grid) {
    for (double alpha : alpha_grid) {
      ScoreParams params{alpha, beta};
      params.validate();
      TunePoint point{params, 0};
      for (std::size_t i = 0; i < dev_task_ids.size(); ++i) {
        const auto& id = dev_task_ids[i];
        auto sel = rank(id, sets[i], params, cfg);
        if (!sel.empty()) point.solved += pass_at_k_ranked(sel, correctness.at(id), 1);
      }
      if (!have_best || point.solved > best_solved) {
        have_best = true;
        best_solved = point.solved;
        result.best = params;
      }
      result.grid.push_back(point);
    }
  }
  result.pass_at_1 = 100.0 * static_cast<double>(best_solved) /
                     static_cast<double>(dev_task_ids.size());
  return result;
}

}  // namespace agreerank
