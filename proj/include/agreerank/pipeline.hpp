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

// Stage functions and output files shared by the command-line tool.
//
// Output files written by run_pipeline into RunConfig::out_dir:
//   matrix.jsonl            one matrix record per (task, solution, test)
//   id_map.jsonl            {task_id, kind, id, external_id}
//   consensus.jsonl         {task_id, set_index, solution_ids, test_ids}
//   selections.jsonl        {task_id, order, solution_scores, best}
//   rank_trace.jsonl        {task_id, order, solution_scores, generations_run, best_fitness_trace}
//   correctness.jsonl       {task_id, correct_solution_ids}       (when hidden tests exist)
//   report_baseline.json, report_ranked.json, report.txt          (when hidden tests exist)
//   dropped_tests.jsonl     {task_id, test_ids}                   (with drop_all_error_tests)
//   stage.json              {stage, complete, error?}

#pragma once

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "agreerank/cache.hpp"
#include "agreerank/consensus.hpp"
#include "agreerank/corpus.hpp"
#include "agreerank/evo_rank.hpp"
#include "agreerank/harness.hpp"
#include "agreerank/hash.hpp"
#include "agreerank/jsonl.hpp"
#include "agreerank/log.hpp"
#include "agreerank/matrix_io.hpp"
#include "agreerank/metrics.hpp"
#include "agreerank/synth.hpp"

namespace agreerank {

namespace fs = std::filesystem;

enum class Strategy { Exhaustive, Ransac };

inline Strategy parse_strategy(std::string_view s) {
  if (s == "exhaustive") return Strategy::Exhaustive;
  if (s == "ransac") return Strategy::Ransac;
  throw UsageError("unknown strategy '" + std::string(s) + "' (expected exhaustive or ransac)");
}

struct GroupOptions {
  Strategy strategy = Strategy::Exhaustive;
  std::size_t ransac_iterations = 0;  // 0: 10 * solutions * tests
  std::uint64_t seed = 0;
  bool drop_all_error_tests = false;
};

struct RunConfig {
  fs::path problems;
  fs::path solutions;
  fs::path tests;
  std::optional<fs::path> hidden_tests;  // {task_id, assertion} records, added to the problems' own
  fs::path out_dir;
  HarnessConfig harness;
  ScoreParams score;
  GaConfig ga;
  std::vector<std::size_t> k_values{1, 2, 10};
  GroupOptions group;
  bool prepend_prompt = false;  // send prompt + completion as the program

  void validate() const {
    for (const auto& [what, path] : {std::pair{"problems", problems}, std::pair{"solutions", solutions},
                                     std::pair{"tests", tests}}) {
      if (path.empty()) throw UsageError(std::string("missing --") + what + " path");
      if (!fs::exists(path)) throw UsageError(std::string(what) + " file not found: " + path.string());
    }
    if (hidden_tests && !fs::exists(*hidden_tests))
      throw UsageError("hidden tests file not found: " + hidden_tests->string());
    if (out_dir.empty()) throw UsageError("missing --out directory");
    if (harness.runner_cmd.empty()) throw UsageError("missing runner command");
    if (k_values.empty()) throw UsageError("k_values must not be empty");
    for (auto k : k_values)
      if (k < 1) throw UsageError("k values must be >= 1");
    harness.validate();
    score.validate();
    ga.validate();
  }
};

// Runs fn(i) for i in [0, n) on up to `workers` threads.
inline void parallel_for(std::size_t n, unsigned workers, const std::function<void(std::size_t)>& fn) {
  workers = static_cast<unsigned>(std::max<std::size_t>(1, std::min<std::size_t>(workers, n)));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(workers);
  {
    std::vector<std::jthread> pool;
    for (unsigned w = 0; w < workers; ++w) {
      pool.emplace_back([&, w] {
        try {
          for (std::size_t i = next++; i < n; i = next++) fn(i);
        } catch (...) {
          errors[w] = std::current_exception();
          next = n;
        }
      });
    }
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

// Groups one matrix. Tests that Error on every solution can be dropped
// before grouping; reported test ids always refer to the original matrix.
inline std::vector<ConsensusSet> group_matrix(const ExecutionMatrix& matrix, const GroupOptions& opt,
                                              std::vector<TestId>* dropped = nullptr) {
  const ExecutionMatrix* input = &matrix;
  ExecutionMatrix reduced;
  std::vector<TestId> kept;
  if (opt.drop_all_error_tests) {
    auto drop = all_error_tests(matrix);
    if (dropped) *dropped = drop;
    if (!drop.empty()) {
      for (TestId t = 0; t < matrix.tests(); ++t)
        if (!std::binary_search(drop.begin(), drop.end(), t)) kept.push_back(t);
      reduced = ExecutionMatrix(matrix.task_id(), matrix.solutions(), kept.size());
      for (SolutionId s = 0; s < matrix.solutions(); ++s)
        for (std::size_t c = 0; c < kept.size(); ++c)
          reduced.at(s, static_cast<TestId>(c)) = matrix.at(s, kept[c]);
      input = &reduced;
    }
  }
  std::vector<ConsensusSet> sets;
  if (opt.strategy == Strategy::Exhaustive) {
    sets = group_exhaustive(*input);
  } else {
    std::size_t iterations = opt.ransac_iterations;
    if (iterations == 0) iterations = std::max<std::size_t>(1, 10 * input->solutions() * input->tests());
    sets = group_ransac(*input, iterations, opt.seed);
  }
  if (input == &reduced)
    for (auto& set : sets)
      for (auto& t : set.tests) t = kept[t];
  return sets;
}

// ---- consensus.jsonl ------------------------------------------------------

using ConsensusMap = std::map<std::string, std::vector<ConsensusSet>>;

inline void write_consensus(std::ostream& out, const std::string& task_id,
                            const std::vector<ConsensusSet>& sets) {
  for (std::size_t i = 0; i < sets.size(); ++i) {
    OrderedJson j;
    j["task_id"] = task_id;
    j["set_index"] = i;
    j["solution_ids"] = sets[i].solutions;
    j["test_ids"] = sets[i].tests;
    write_record(out, j);
  }
}

// Returns sets per task plus the task order of first appearance.
inline std::pair<ConsensusMap, std::vector<std::string>> read_consensus(const fs::path& path) {
  ConsensusMap sets;
  std::vector<std::string> order;
  std::map<std::string, std::map<std::size_t, ConsensusSet>> indexed;
  for_each_record(path, [&](const Json& j, std::size_t) {
    std::string task_id = require_string(j, "task_id");
    auto index = require_field(j, "set_index").get<std::size_t>();
    ConsensusSet set;
    set.solutions = require_field(j, "solution_ids").get<std::vector<SolutionId>>();
    set.tests = require_field(j, "test_ids").get<std::vector<TestId>>();
    if (set.solutions.empty()) throw DataError("consensus set without solutions");
    std::sort(set.solutions.begin(), set.solutions.end());
    std::sort(set.tests.begin(), set.tests.end());
    if (!indexed.count(task_id)) order.push_back(task_id);
    if (!indexed[task_id].emplace(index, std::move(set)).second)
      throw DataError("duplicate set_index " + std::to_string(index) + " for task " + task_id);
  });
  for (auto& [task, by_index] : indexed)
    for (auto& [i, set] : by_index) sets[task].push_back(std::move(set));
  return {std::move(sets), std::move(order)};
}

// ---- selections.jsonl / rank_trace.jsonl ----------------------------------

inline OrderedJson scores_json(const RankedSelection& sel) {
  OrderedJson scores = OrderedJson::object();
  for (std::size_t i = 0; i < sel.solution_scores.size(); ++i)
    scores[std::to_string(i)] = sel.solution_scores[i];
  return scores;
}

inline void write_selection(std::ostream& out, const RankedSelection& sel) {
  OrderedJson j;
  j["task_id"] = sel.task_id;
  j["order"] = sel.order;
  j["solution_scores"] = scores_json(sel);
  j["best"] = sel.empty() ? OrderedJson(nullptr) : OrderedJson(sel.best());
  write_record(out, j);
}

inline void write_trace(std::ostream& out, const RankedSelection& sel) {
  OrderedJson j;
  j["task_id"] = sel.task_id;
  j["order"] = sel.order;
  j["solution_scores"] = scores_json(sel);
  j["generations_run"] = sel.generations_run;
  j["best_fitness_trace"] = sel.best_fitness_trace;
  write_record(out, j);
}

inline std::pair<SelectionMap, std::vector<std::string>> read_selections(const fs::path& path) {
  SelectionMap out;
  std::vector<std::string> order;
  for_each_record(path, [&](const Json& j, std::size_t) {
    RankedSelection sel;
    sel.task_id = require_string(j, "task_id");
    sel.order = require_field(j, "order").get<std::vector<SolutionId>>();
    const Json& scores = require_field(j, "solution_scores");
    if (!scores.is_object()) throw DataError("solution_scores must be an object");
    sel.solution_scores.assign(scores.size(), 0.0);
    for (auto it = scores.begin(); it != scores.end(); ++it) {
      std::size_t id = 0;
      try {
        id = std::stoul(it.key());
      } catch (const std::exception&) {
        throw DataError("non-numeric solution id '" + it.key() + "' in solution_scores");
      }
      if (id >= sel.solution_scores.size()) throw DataError("solution_scores ids are not dense");
      sel.solution_scores[id] = it.value().get<double>();
    }
    std::vector<SolutionId> sorted = sel.order;
    std::sort(sorted.begin(), sorted.end());
    for (std::size_t i = 0; i < sorted.size(); ++i)
      if (sorted[i] != i) throw DataError("order is not a permutation of 0..n-1");
    if (out.count(sel.task_id)) throw DataError("duplicate task_id " + sel.task_id);
    order.push_back(sel.task_id);
    out[sel.task_id] = std::move(sel);
  });
  return {std::move(out), std::move(order)};
}

// ---- reports ----------------------------------------------------------------

struct EvalOutputs {
  PassAtKReport baseline;
  PassAtKReport ranked;
};

inline EvalOutputs write_reports(const fs::path& out_dir, std::span<const std::string> task_ids,
                                 const SelectionMap& selections, const CorrectnessMap& correctness,
                                 std::span<const std::size_t> k_values) {
  EvalOutputs eval{build_report(task_ids, selections, correctness, k_values, Method::Baseline),
                   build_report(task_ids, selections, correctness, k_values, Method::Ranked)};
  fs::create_directories(out_dir);
  write_file_atomically(out_dir / "report_baseline.json", to_json(eval.baseline).dump(2) + "\n");
  write_file_atomically(out_dir / "report_ranked.json", to_json(eval.ranked).dump(2) + "\n");
  std::vector<PassAtKReport> both{eval.baseline, eval.ranked};
  write_file_atomically(out_dir / "report.txt", render_table(both));
  return eval;
}

// ---- run ----------------------------------------------------------------------

class StageMarker {
 public:
  explicit StageMarker(fs::path dir) : dir_(std::move(dir)) {}

  void enter(const std::string& stage) {
    stage_ = stage;
    write(false, {});
  }
  void complete() { write(true, {}); }
  void fail(const std::string& error) { write(false, error); }
  const std::string& stage() const { return stage_; }

 private:
  void write(bool complete, const std::string& error) {
    OrderedJson j;
    j["stage"] = stage_;
    j["complete"] = complete;
    if (!error.empty()) j["error"] = error;
    write_file_atomically(dir_ / "stage.json", j.dump() + "\n");
  }

  fs::path dir_;
  std::string stage_;
};

struct RunSummary {
  HarnessStats harness;
  std::size_t tasks = 0;
  bool evaluated = false;
  std::optional<EvalOutputs> eval;
};

inline Corpus load_run_corpus(const RunConfig& cfg) {
  Corpus corpus = load_corpus(cfg.problems, cfg.solutions, cfg.tests);
  if (cfg.hidden_tests) {
    std::map<std::string, std::vector<std::string>> extra;
    std::vector<std::string> orphans;
    for_each_record(*cfg.hidden_tests, [&](const Json& j, std::size_t) {
      std::string task_id = require_string(j, "task_id");
      if (!corpus.find(task_id)) {
        orphans.push_back(task_id);
        return;
      }
      extra[task_id].push_back(require_string(j, "assertion"));
    });
    if (!orphans.empty())
      throw DataError(cfg.hidden_tests->string() + ": orphan task_id " + orphans.front());
    for (const auto& [task, tests] : extra) corpus.add_reference_tests(task, tests);
  }
  return corpus;
}

// Source actually sent to the runner for `solution`.
inline std::vector<CandidateSolution> runnable_solutions(const Task& task, bool prepend_prompt) {
  std::vector<CandidateSolution> out = task.solutions;
  if (prepend_prompt)
    for (auto& s : out) s.source = task.problem.prompt + s.source;
  return out;
}

// execute -> group -> rank -> (evaluate). Throws on the first failing stage;
// stage.json names the stage and earlier outputs stay on disk.
inline RunSummary run_pipeline(const RunConfig& cfg) {
  cfg.validate();
  fs::create_directories(cfg.out_dir);
  StageMarker marker(cfg.out_dir);
  RunSummary summary;
  std::optional<MatrixCache> cache;
  try {
    marker.enter("load");
    Corpus corpus = load_run_corpus(cfg);
    summary.tasks = corpus.tasks().size();
    write_file_atomically(cfg.out_dir / "id_map.jsonl", render_id_map(corpus));
    std::vector<std::string> task_ids;
    for (const Task& t : corpus.tasks()) task_ids.push_back(t.problem.task_id);

    marker.enter("execute");
    cache = cfg.harness.cache_path ? MatrixCache::warm(*cfg.harness.cache_path) : MatrixCache();
    Harness harness(cfg.harness, &*cache);
    std::vector<ExecutionMatrix> matrices;
    std::ostringstream matrix_out;
    for (const Task& task : corpus.tasks()) {
      auto solutions = runnable_solutions(task, cfg.prepend_prompt);
      matrices.push_back(harness.execute_matrix(task.problem, solutions, task.tests));
      std::vector<std::string> sh, ah;
      for (const auto& s : solutions) sh.push_back(content_hash(s.source));
      for (const auto& t : task.tests) ah.push_back(content_hash(t.assertion));
      write_matrix(matrix_out, matrices.back(), sh, ah, cfg.harness.timeout_ms);
    }
    write_file_atomically(cfg.out_dir / "matrix.jsonl", matrix_out.str());

    marker.enter("group");
    std::vector<std::vector<ConsensusSet>> sets(matrices.size());
    std::vector<std::vector<TestId>> dropped(matrices.size());
    GroupOptions gopt = cfg.group;
    gopt.seed = cfg.ga.seed;
    parallel_for(matrices.size(), cfg.harness.workers,
                 [&](std::size_t i) { sets[i] = group_matrix(matrices[i], gopt, &dropped[i]); });
    std::ostringstream consensus_out, dropped_out;
    for (std::size_t i = 0; i < sets.size(); ++i) {
      write_consensus(consensus_out, task_ids[i], sets[i]);
      if (gopt.drop_all_error_tests) {
        OrderedJson j;
        j["task_id"] = task_ids[i];
        j["test_ids"] = dropped[i];
        write_record(dropped_out, j);
      }
    }
    write_file_atomically(cfg.out_dir / "consensus.jsonl", consensus_out.str());
    if (gopt.drop_all_error_tests)
      write_file_atomically(cfg.out_dir / "dropped_tests.jsonl", dropped_out.str());

    marker.enter("rank");
    std::vector<RankedSelection> ranked(sets.size());
    parallel_for(sets.size(), cfg.harness.workers,
                 [&](std::size_t i) { ranked[i] = rank(task_ids[i], sets[i], cfg.score, cfg.ga); });
    std::ostringstream selections_out, trace_out;
    SelectionMap selections;
    for (auto& sel : ranked) {
      write_selection(selections_out, sel);
      write_trace(trace_out, sel);
      selections[sel.task_id] = sel;
    }
    write_file_atomically(cfg.out_dir / "selections.jsonl", selections_out.str());
    write_file_atomically(cfg.out_dir / "rank_trace.jsonl", trace_out.str());

    const auto& reference = corpus.reference_tests();
    std::size_t with_hidden = 0;
    for (const auto& id : task_ids) with_hidden += reference.has(id) && !reference.of(id).empty();
    if (with_hidden == task_ids.size() && !task_ids.empty()) {
      marker.enter("evaluate");
      CorrectnessMap correctness;
      for (const Task& task : corpus.tasks()) {
        std::vector<TestCase> hidden;
        for (const auto& assertion : reference.of(task.problem.task_id))
          hidden.push_back({task.problem.task_id, static_cast<TestId>(hidden.size()), assertion});
        auto solutions = runnable_solutions(task, cfg.prepend_prompt);
        correctness[task.problem.task_id] =
            correctness_from_matrix(harness.execute_matrix(task.problem, solutions, hidden));
      }
      std::ostringstream correctness_out;
      write_correctness(correctness_out, correctness, task_ids);
      write_file_atomically(cfg.out_dir / "correctness.jsonl", correctness_out.str());
      summary.eval = write_reports(cfg.out_dir, task_ids, selections, correctness, cfg.k_values);
      summary.evaluated = true;
    } else if (with_hidden > 0) {
      Log::warn("skipping evaluation: " + std::to_string(task_ids.size() - with_hidden) +
                " task(s) have no hidden tests");
    }
    summary.harness = harness.stats();
    cache->flush();
    marker.enter("done");
    marker.complete();
  } catch (const std::exception& e) {
    if (cache) {
      try {
        cache->flush();
      } catch (const std::exception& flush_error) {
        Log::warn(std::string("cache flush failed: ") + flush_error.what());
      }
    }
    marker.fail(e.what());
    throw;
  }
  return summary;
}

}  // namespace agreerank
