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

// Scoring of consensus sets and the genetic ranking of solutions.
//
// Every solution inherits the score |S|^alpha * |T|^beta of its consensus set.
// A genome is a permutation of the task's solution ids; its fitness is the
// gamma-discounted sum of inherited scores along the permutation,
//
//   fitness(order) = sum_r gamma^r * score(order[r]),   0 < gamma < 1,
//
// which (rearrangement inequality) is maximal exactly on score-descending
// orders. The GA therefore has a known optimum, and its top genome is the
// highest-scoring solution.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "agreerank/consensus.hpp"
#include "agreerank/core.hpp"
#include "agreerank/random.hpp"

namespace agreerank {

struct GaConfig {
  std::size_t population = 50;
  std::size_t generations = 3000;
  std::size_t tournament_size = 3;
  double crossover_rate = 0.5;
  double mutation_rate = 0.5;
  std::size_t elitism = 2;
  double gamma = 0.9;
  std::size_t patience = 300;
  std::uint64_t seed = 0;

  void validate() const {
    if (population < 1) throw UsageError("population must be >= 1");
    if (generations < 1) throw UsageError("generations must be >= 1");
    if (tournament_size < 1 || tournament_size > population)
      throw UsageError("tournament_size must be in [1, population]");
    if (!(crossover_rate >= 0 && crossover_rate <= 1))
      throw UsageError("crossover_rate must be in [0, 1]");
    if (!(mutation_rate >= 0 && mutation_rate <= 1))
      throw UsageError("mutation_rate must be in [0, 1]");
    if (elitism >= population) throw UsageError("elitism must be < population");
    if (!(gamma > 0 && gamma < 1)) throw UsageError("gamma must be in (0, 1)");
    if (patience < 1) throw UsageError("patience must be >= 1");
  }
};

struct RankedSelection {
  std::string task_id;
  std::vector<SolutionId> order;       // best first
  std::vector<double> solution_scores;  // indexed by solution id
  std::size_t generations_run = 0;
  std::vector<double> best_fitness_trace;  // best fitness of each generation, initial one first

  bool empty() const { return order.empty(); }
  SolutionId best() const { return order.at(0); }
};

// |S|^alpha * |T|^beta with 0^0 = 1.
inline double score_set(std::size_t solutions, std::size_t tests, const ScoreParams& params) {
  if (solutions < 1) throw DataError("consensus set without solutions");
  auto power = [](double base, double exponent) {
    return exponent == 0.0 ? 1.0 : std::pow(base, exponent);
  };
  const double score = power(static_cast<double>(solutions), params.alpha) *
                       power(static_cast<double>(tests), params.beta);
  if (!std::isfinite(score)) throw DataError("consensus set score is not finite");
  return score;
}

inline double score_set(const ConsensusSet& set, const ScoreParams& params) {
  return score_set(set.solutions.size(), set.tests.size(), params);
}

inline double fitness(std::span<const SolutionId> order, std::span<const double> scores,
                      double gamma) {
  double sum = 0.0;
  double weight = 1.0;
  for (SolutionId id : order) {
    sum += weight * scores[id];
    weight *= gamma;
  }
  return sum;
}

// Order crossover (OX1): the slice [lo, hi] comes from `first`, the remaining
// positions are filled, starting after the slice and wrapping around, with
// `second`'s genes in the order they appear after the slice.
inline std::vector<SolutionId> order_crossover(std::span<const SolutionId> first,
                                               std::span<const SolutionId> second,
                                               std::size_t lo, std::size_t hi) {
  const std::size_t n = first.size();
  std::vector<SolutionId> child(n);
  std::vector<bool> taken(n, false);
  for (std::size_t i = lo; i <= hi; ++i) {
    child[i] = first[i];
    taken[first[i]] = true;
  }
  std::size_t pos = (hi + 1) % n;
  for (std::size_t k = 0; k < n; ++k) {
    SolutionId gene = second[(hi + 1 + k) % n];
    if (taken[gene]) continue;
    child[pos] = gene;
    taken[gene] = true;
    pos = (pos + 1) % n;
  }
  return child;
}

inline std::vector<SolutionId> order_crossover(std::span<const SolutionId> first,
                                               std::span<const SolutionId> second, Rng& rng) {
  const std::size_t n = first.size();
  if (n < 2) return {first.begin(), first.end()};
  std::size_t a = rng.below(n);
  std::size_t b = rng.below(n);
  if (a > b) std::swap(a, b);
  return order_crossover(first, second, a, b);
}

inline void swap_mutation(std::vector<SolutionId>& genome, Rng& rng) {
  const std::size_t n = genome.size();
  if (n < 2) return;
  std::size_t a = rng.below(n);
  std::size_t b = rng.below(n - 1);
  if (b >= a) ++b;
  std::swap(genome[a], genome[b]);
}

// Rewrites the ids occupying the positions of each distinct score value in
// ascending id order. Positions of different scores are left untouched.
inline std::vector<SolutionId> canonicalize(std::span<const SolutionId> order,
                                            std::span<const double> scores) {
  std::map<double, std::vector<std::size_t>> positions;
  for (std::size_t i = 0; i < order.size(); ++i) positions[scores[order[i]]].push_back(i);
  std::vector<SolutionId> out(order.begin(), order.end());
  for (const auto& [score, where] : positions) {
    std::vector<SolutionId> ids;
    for (std::size_t p : where) ids.push_back(order[p]);
    std::sort(ids.begin(), ids.end());
    for (std::size_t i = 0; i < where.size(); ++i) out[where[i]] = ids[i];
  }
  return out;
}

// Inherited per-solution scores; throws unless `sets` partitions 0..n-1.
inline std::vector<double> solution_scores(std::span<ConsensusSet> sets,
                                           const ScoreParams& params) {
  std::size_t n = 0;
  for (const auto& set : sets) {
    if (set.solutions.empty()) throw DataError("invalid partition: empty consensus set");
    n += set.solutions.size();
  }
  std::vector<double> scores(n, -1.0);
  for (auto& set : sets) {
    set.score = score_set(set, params);
    for (SolutionId s : set.solutions) {
      if (s >= n || scores[s] >= 0)
        throw DataError("invalid partition: solution " + std::to_string(s) +
                        " is duplicated or out of range");
      scores[s] = set.score;
    }
  }
  return scores;
}

class GeneticRanker {
 public:
  GeneticRanker(std::vector<double> scores, GaConfig cfg)
      : scores_(std::move(scores)), cfg_(cfg), rng_(cfg.seed) {
    cfg_.validate();
  }

  // Runs to `generations` or until `patience` generations pass without a
  // strict improvement; returns the best genome seen (not canonicalized).
  std::vector<SolutionId> run() {
    const std::size_t n = scores_.size();
    population_.assign(cfg_.population, std::vector<SolutionId>(n));
    for (auto& genome : population_) {
      std::iota(genome.begin(), genome.end(), SolutionId{0});
      rng_.shuffle(genome.begin(), genome.end());
    }
    evaluate();
    std::size_t top = argmax();
    best_ = population_[top];
    double best_fit = fit_[top];
    trace_.assign(1, best_fit);

    std::size_t stale = 0;
    generations_run_ = 0;
    for (std::size_t g = 0; g < cfg_.generations && stale < cfg_.patience; ++g) {
      step();
      ++generations_run_;
      top = argmax();
      trace_.push_back(fit_[top]);
      if (fit_[top] > best_fit) {
        best_fit = fit_[top];
        best_ = population_[top];
        stale = 0;
      } else {
        ++stale;
      }
    }
    return best_;
  }

  std::size_t generations_run() const { return generations_run_; }
  const std::vector<double>& trace() const { return trace_; }
  const std::vector<std::vector<SolutionId>>& population() const { return population_; }

 private:
  void evaluate() {
    fit_.resize(population_.size());
    for (std::size_t i = 0; i < population_.size(); ++i)
      fit_[i] = fitness(population_[i], scores_, cfg_.gamma);
  }

  std::size_t argmax() const {
    return static_cast<std::size_t>(std::max_element(fit_.begin(), fit_.end()) - fit_.begin());
  }

  std::size_t tournament() {
    std::size_t winner = rng_.below(population_.size());
    for (std::size_t k = 1; k < cfg_.tournament_size; ++k) {
      std::size_t rival = rng_.below(population_.size());
      if (fit_[rival] > fit_[winner] || (fit_[rival] == fit_[winner] && rival < winner))
        winner = rival;
    }
    return winner;
  }

  void step() {
    std::vector<std::size_t> ranked(population_.size());
    std::iota(ranked.begin(), ranked.end(), std::size_t{0});
    std::stable_sort(ranked.begin(), ranked.end(),
                     [&](std::size_t a, std::size_t b) { return fit_[a] > fit_[b]; });
    std::vector<std::vector<SolutionId>> next;
    next.reserve(population_.size());
    for (std::size_t e = 0; e < cfg_.elitism; ++e) next.push_back(population_[ranked[e]]);
    while (next.size() < population_.size()) {
      const auto& mother = population_[tournament()];
      const auto& father = population_[tournament()];
      std::vector<SolutionId> child = rng_.chance(cfg_.crossover_rate)
                                          ? order_crossover(mother, father, rng_)
                                          : mother;
      if (rng_.chance(cfg_.mutation_rate)) swap_mutation(child, rng_);
      next.push_back(std::move(child));
    }
    population_ = std::move(next);
    evaluate();
  }

  std::vector<double> scores_;
  GaConfig cfg_;
  Rng rng_;
  std::vector<std::vector<SolutionId>> population_;
  std::vector<double> fit_;
  std::vector<SolutionId> best_;
  std::vector<double> trace_;
  std::size_t generations_run_ = 0;
};

// Scores `sets` (filling each set's score), runs the GA over permutations of
// the task's solutions and returns the canonicalized best order.
inline RankedSelection rank(std::string task_id, std::vector<ConsensusSet> sets,
                            const ScoreParams& params, const GaConfig& cfg) {
  params.validate();
  cfg.validate();
  RankedSelection sel;
  sel.task_id = std::move(task_id);
  if (sets.empty()) return sel;
  sel.solution_scores = solution_scores(sets, params);
  GeneticRanker ga(sel.solution_scores, cfg);
  auto best = ga.run();
  sel.order = canonicalize(best, sel.solution_scores);
  sel.generations_run = ga.generations_run();
  sel.best_fitness_trace = ga.trace();
  return sel;
}

inline std::vector<SolutionId> select_top_k(const RankedSelection& sel, std::size_t k) {
  if (k < 1) throw UsageError("k must be >= 1");
  const std::size_t take = std::min(k, sel.order.size());
  return {sel.order.begin(), sel.order.begin() + static_cast<std::ptrdiff_t>(take)};
}

}  // namespace agreerank
