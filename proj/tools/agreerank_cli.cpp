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

// agreerank: select code solutions by execution agreement with generated tests.
//
//   agreerank run    execute -> group -> rank -> evaluate on a corpus
//   agreerank group  matrix file -> consensus sets
//   agreerank rank   consensus sets -> selections
//   agreerank eval   selections + correctness -> pass@k reports
//   agreerank tune   grid-search alpha/beta on labelled dev tasks
//   agreerank synth  synthetic matrices with planted ground truth
//
// Exit codes: 0 success, 1 usage, 2 data error, 3 runner failure.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "agreerank/agreerank.hpp"

namespace {

using namespace agreerank;

constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitRunner = 3;

void add_score_options(CLI::App& app, ScoreParams& score) {
  app.add_option("--alpha", score.alpha, "Exponent on consensus-set solution count")
      ->capture_default_str();
  app.add_option("--beta", score.beta, "Exponent on consensus-set test count")->capture_default_str();
}

void add_ga_options(CLI::App& app, GaConfig& ga) {
  app.add_option("--population", ga.population)->capture_default_str();
  app.add_option("--generations", ga.generations)->capture_default_str();
  app.add_option("--tournament-size", ga.tournament_size)->capture_default_str();
  app.add_option("--crossover-rate", ga.crossover_rate)->capture_default_str();
  app.add_option("--mutation-rate", ga.mutation_rate)->capture_default_str();
  app.add_option("--elitism", ga.elitism)->capture_default_str();
  app.add_option("--gamma", ga.gamma, "Rank discount base of the GA fitness")->capture_default_str();
  app.add_option("--patience", ga.patience, "Generations without improvement before stopping")
      ->capture_default_str();
  app.add_option("--seed", ga.seed)->capture_default_str();
}

void add_harness_options(CLI::App& app, HarnessConfig& harness, std::string& cache) {
  app.add_option("--runner-cmd", harness.runner_cmd, "Command line that starts a runner")
      ->envname("AGREERANK_RUNNER");
  app.add_option("--workers", harness.workers, "Parallel runner processes")->capture_default_str();
  app.add_option("--timeout-ms", harness.timeout_ms, "Per-cell wall-clock budget")
      ->capture_default_str();
  app.add_option("--cache", cache, "Persistent matrix cache file");
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  write_file_atomically(path, text);
}

std::vector<std::string> split_csv(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ','))
    if (!item.empty()) out.push_back(item);
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Rerank generated code solutions by execution agreement with generated tests"};
  app.set_config("--config", "", "TOML/INI config file; command-line flags take precedence");
  app.require_subcommand(1);
  bool quiet = false;
  app.add_flag("-q,--quiet", quiet, "Suppress diagnostics on stderr");

  // run
  RunConfig run_cfg;
  std::string run_problems, run_solutions, run_tests, run_hidden, run_out, run_cache;
  std::string run_strategy = "exhaustive";
  auto* run = app.add_subcommand("run", "Execute, group, rank and evaluate a corpus");
  run->add_option("--problems", run_problems, "Problems file")->required();
  run->add_option("--solutions", run_solutions, "Candidate solutions file")->required();
  run->add_option("--tests", run_tests, "Generated tests file")->required();
  run->add_option("--hidden-tests", run_hidden, "Extra reference tests {task_id, assertion}");
  run->add_option("--out", run_out, "Output directory")->required();
  add_harness_options(*run, run_cfg.harness, run_cache);
  add_score_options(*run, run_cfg.score);
  add_ga_options(*run, run_cfg.ga);
  run->add_option("--k", run_cfg.k_values, "k values for pass@k")->delimiter(',')->capture_default_str();
  run->add_option("--strategy", run_strategy, "exhaustive or ransac")->capture_default_str();
  run->add_option("--ransac-iterations", run_cfg.group.ransac_iterations,
                  "0 means 10 * solutions * tests");
  run->add_flag("--drop-all-error-tests", run_cfg.group.drop_all_error_tests,
                "Ignore tests that error on every solution");
  run->add_flag("--prepend-prompt", run_cfg.prepend_prompt,
                "Execute prompt + completion instead of the completion alone");

  // group
  GroupOptions group_opt;
  std::string group_matrix_path, group_out, group_strategy = "exhaustive";
  auto* group = app.add_subcommand("group", "Form consensus sets from a matrix file");
  group->add_option("--matrix", group_matrix_path, "Matrix file")->required();
  group->add_option("--out", group_out, "Consensus sets file")->required();
  group->add_option("--strategy", group_strategy, "exhaustive or ransac")->capture_default_str();
  group->add_option("--ransac-iterations", group_opt.ransac_iterations,
                    "0 means 10 * solutions * tests");
  group->add_option("--seed", group_opt.seed)->capture_default_str();
  group->add_flag("--drop-all-error-tests", group_opt.drop_all_error_tests);

  // rank
  ScoreParams rank_score;
  GaConfig rank_ga;
  unsigned rank_workers = 1;
  std::string rank_consensus, rank_out, rank_trace;
  auto* rank_cmd = app.add_subcommand("rank", "Rank solutions from consensus sets");
  rank_cmd->add_option("--consensus", rank_consensus, "Consensus sets file")->required();
  rank_cmd->add_option("--out", rank_out, "Selections file")->required();
  rank_cmd->add_option("--trace", rank_trace, "Optional GA trace file");
  rank_cmd->add_option("--workers", rank_workers)->capture_default_str();
  add_score_options(*rank_cmd, rank_score);
  add_ga_options(*rank_cmd, rank_ga);

  // eval
  std::string eval_selections, eval_correctness, eval_out;
  std::vector<std::size_t> eval_k{1, 2, 10};
  auto* eval = app.add_subcommand("eval", "Compute pass@k reports");
  eval->add_option("--selections", eval_selections, "Selections file")->required();
  eval->add_option("--correctness", eval_correctness,
                   "Correctness or truth-labels file {task_id, correct_solution_ids}")
      ->required();
  eval->add_option("--k", eval_k)->delimiter(',')->capture_default_str();
  eval->add_option("--out", eval_out, "Report directory")->required();

  // tune
  GaConfig tune_ga;
  std::string tune_matrix, tune_correctness, tune_dev, tune_out;
  std::vector<double> alpha_grid{0.0, 0.5, 1.0}, beta_grid{0.0, 0.5, 1.1, 2.0};
  auto* tune_cmd = app.add_subcommand("tune", "Grid-search alpha and beta on dev tasks");
  tune_cmd->add_option("--matrix", tune_matrix, "Matrix file")->required();
  tune_cmd->add_option("--correctness", tune_correctness, "Correctness or truth-labels file")
      ->required();
  tune_cmd->add_option("--dev-tasks", tune_dev, "Comma-separated task ids (default: all labelled)");
  tune_cmd->add_option("--alpha-grid", alpha_grid)->delimiter(',')->capture_default_str();
  tune_cmd->add_option("--beta-grid", beta_grid)->delimiter(',')->capture_default_str();
  tune_cmd->add_option("--out", tune_out, "Optional JSON result file");
  add_ga_options(*tune_cmd, tune_ga);

  // synth
  SynthSpec synth_spec;
  std::string synth_out;
  auto* synth = app.add_subcommand("synth", "Generate synthetic matrices with truth labels");
  synth->add_option("--tasks", synth_spec.tasks)->capture_default_str();
  synth->add_option("--solutions-per-task", synth_spec.solutions_per_task)->capture_default_str();
  synth->add_option("--tests-per-task", synth_spec.tests_per_task)->capture_default_str();
  synth->add_option("--correct-rate", synth_spec.correct_solution_rate)->capture_default_str();
  synth->add_option("--valid-rate", synth_spec.valid_test_rate)->capture_default_str();
  synth->add_option("--wrong-clusters", synth_spec.wrong_cluster_sizes, "Sizes of agreeing wrong groups")
      ->delimiter(',');
  synth->add_option("--seed", synth_spec.seed)->capture_default_str();
  synth->add_option("--out", synth_out, "Output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? 0 : kExitUsage;
  }
  Log::set_quiet(quiet);

  try {
    if (*run) {
      run_cfg.problems = run_problems;
      run_cfg.solutions = run_solutions;
      run_cfg.tests = run_tests;
      if (!run_hidden.empty()) run_cfg.hidden_tests = run_hidden;
      run_cfg.out_dir = run_out;
      if (!run_cache.empty()) run_cfg.harness.cache_path = run_cache;
      run_cfg.group.strategy = parse_strategy(run_strategy);
      auto summary = run_pipeline(run_cfg);
      Log::info(std::to_string(summary.tasks) + " task(s), " +
                std::to_string(summary.harness.executed) + " execution(s), " +
                std::to_string(summary.harness.cache_hits) + " cache hit(s)");
      if (summary.eval) {
        std::vector<PassAtKReport> both{summary.eval->baseline, summary.eval->ranked};
        std::cout << render_table(both);
      }
    } else if (*group) {
      group_opt.strategy = parse_strategy(group_strategy);
      auto matrices = read_matrices(group_matrix_path);
      std::ostringstream out;
      for (const auto& m : matrices) write_consensus(out, m.task_id(), group_matrix(m, group_opt));
      write_text(group_out, out.str());
    } else if (*rank_cmd) {
      auto [sets, order] = read_consensus(rank_consensus);
      std::vector<RankedSelection> ranked(order.size());
      parallel_for(order.size(), rank_workers, [&](std::size_t i) {
        ranked[i] = rank(order[i], sets.at(order[i]), rank_score, rank_ga);
      });
      std::ostringstream out, trace;
      for (const auto& sel : ranked) {
        write_selection(out, sel);
        write_trace(trace, sel);
      }
      write_text(rank_out, out.str());
      if (!rank_trace.empty()) write_text(rank_trace, trace.str());
    } else if (*eval) {
      auto [selections, order] = read_selections(eval_selections);
      auto correctness = read_correctness(eval_correctness);
      auto reports = write_reports(eval_out, order, selections, correctness, eval_k);
      std::vector<PassAtKReport> both{reports.baseline, reports.ranked};
      std::cout << render_table(both);
    } else if (*tune_cmd) {
      std::map<std::string, ExecutionMatrix> matrices;
      for (auto& m : read_matrices(tune_matrix)) matrices.emplace(m.task_id(), std::move(m));
      auto correctness = read_correctness(tune_correctness);
      std::vector<std::string> dev = split_csv(tune_dev);
      if (dev.empty())
        for (const auto& [id, cv] : correctness) dev.push_back(id);
      auto result = tune(matrices, dev, alpha_grid, beta_grid, tune_ga, correctness);
      OrderedJson j;
      j["alpha"] = result.best.alpha;
      j["beta"] = result.best.beta;
      j["pass@1"] = result.pass_at_1;
      OrderedJson grid = OrderedJson::array();
      for (const auto& p : result.grid)
        grid.push_back({{"alpha", p.params.alpha}, {"beta", p.params.beta}, {"solved", p.solved}});
      j["grid"] = std::move(grid);
      std::cout << j.dump() << '\n';
      if (!tune_out.empty()) write_text(tune_out, j.dump(2) + "\n");
    } else if (*synth) {
      auto bundle = generate(synth_spec);
      fs::create_directories(synth_out);
      std::ostringstream matrix_out, truth_out;
      for (const auto& m : bundle.matrices) {
        std::vector<std::string> sh, ah;
        for (SolutionId s = 0; s < m.solutions(); ++s)
          sh.push_back(content_hash(m.task_id() + ":solution:" + std::to_string(s)));
        for (TestId t = 0; t < m.tests(); ++t)
          ah.push_back(content_hash(m.task_id() + ":test:" + std::to_string(t)));
        write_matrix(matrix_out, m, sh, ah, 0);
      }
      write_truth(truth_out, bundle.truth);
      write_text(fs::path(synth_out) / "matrix.jsonl", matrix_out.str());
      write_text(fs::path(synth_out) / "truth.jsonl", truth_out.str());
    }
  } catch (const UsageError& e) {
    std::cerr << "agreerank: error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const RunnerError& e) {
    std::cerr << "agreerank: runner failure: " << e.what() << '\n';
    return kExitRunner;
  } catch (const std::exception& e) {
    std::cerr << "agreerank: error: " << e.what() << '\n';
    return kExitData;
  }
  return 0;
}
