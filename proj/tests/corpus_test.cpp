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
#include <string>

#include "agreerank/corpus.hpp"
#include "test_support.hpp"

namespace agreerank {
namespace {

Corpus load(const std::string& problems, const std::string& solutions, const std::string& tests) {
  std::istringstream p(problems), s(solutions), t(tests);
  return load_corpus(p, "problems.jsonl", s, "solutions.jsonl", t, "tests.jsonl");
}

std::string data_error(const std::string& problems, const std::string& solutions,
                       const std::string& tests) {
  try {
    load(problems, solutions, tests);
  } catch (const DataError& e) {
    return e.what();
  }
  return "no error";
}

const std::string kProblem =
    R"({"task_id": "T", "prompt": "p", "entry_point": "f"})" "\n";

TEST(Corpus, LoadsSquareFixture) {
  auto dir = fixtures() / "square";
  Corpus c = load_corpus(dir / "problems.jsonl", dir / "solutions.jsonl", dir / "tests.jsonl");
  ASSERT_EQ(c.tasks().size(), 1u);
  const Task& task = c.tasks()[0];
  EXPECT_EQ(task.problem.entry_point, "num_square");
  EXPECT_EQ(task.solutions.size(), 3u);
  EXPECT_EQ(task.tests.size(), 3u);
  EXPECT_EQ(task.solutions[1].source, "def num_square(a):\n    return a*a\n");
  ASSERT_TRUE(c.reference_tests().has("square/0"));
  EXPECT_EQ(c.reference_tests().of("square/0").size(), 2u);
}

TEST(Corpus, EmptySolutionsFile) {
  Corpus c = load(kProblem, "", R"({"task_id": "T", "assertion": "assert f(1) == 1"})" "\n");
  EXPECT_TRUE(c.tasks()[0].solutions.empty());
  EXPECT_EQ(c.tasks()[0].tests.size(), 1u);
}

TEST(Corpus, OrphanTaskIsNamed) {
  auto msg = data_error(kProblem, R"({"task_id": "X", "completion": "x"})" "\n", "");
  EXPECT_NE(msg.find("orphan task_id X"), std::string::npos) << msg;
}

TEST(Corpus, MalformedLineNamesFileAndLine) {
  auto msg = data_error(kProblem, R"({"task_id": "T", "completion": "x"})" "\n{oops\n", "");
  EXPECT_NE(msg.find("solutions.jsonl:2"), std::string::npos) << msg;
}

TEST(Corpus, DuplicateSolutionIdRejected) {
  auto msg = data_error(kProblem,
                        R"({"task_id": "T", "solution_id": 4, "completion": "a"})" "\n"
                        R"({"task_id": "T", "solution_id": 4, "completion": "b"})" "\n",
                        "");
  EXPECT_NE(msg.find("duplicate (task_id, solution_id)"), std::string::npos) << msg;
}

TEST(Corpus, DuplicateTaskAndEmptyEntryPointRejected) {
  EXPECT_THROW(load(kProblem + kProblem, "", ""), DataError);
  EXPECT_THROW(load(R"({"task_id": "T", "entry_point": ""})" "\n", "", ""), DataError);
  EXPECT_THROW(load(kProblem, "", R"({"task_id": "T", "assertion": "  "})" "\n"), DataError);
}

TEST(Corpus, MixedPresentAndMissingIdsRejected) {
  EXPECT_THROW(load(kProblem,
                    R"({"task_id": "T", "solution_id": 0, "completion": "a"})" "\n"
                    R"({"task_id": "T", "completion": "b"})" "\n",
                    ""),
               DataError);
}

TEST(Corpus, SparseIdsAreRemappedDensely) {
  Corpus c = load(kProblem,
                  R"({"task_id": "T", "solution_id": 40, "completion": "forty"})" "\n"
                  R"({"task_id": "T", "solution_id": 7, "completion": "seven"})" "\n",
                  R"({"task_id": "T", "test_id": "beta", "assertion": "b"})" "\n"
                  R"({"task_id": "T", "test_id": "alpha", "assertion": "a"})" "\n");
  const Task& task = c.tasks()[0];
  EXPECT_EQ(task.solutions[0].source, "seven");
  EXPECT_EQ(task.solutions[1].source, "forty");
  EXPECT_EQ(task.remap.solutions, (std::vector<std::string>{"7", "40"}));
  // String ids keep file order.
  EXPECT_EQ(task.tests[0].assertion, "b");
  EXPECT_EQ(task.remap.tests, (std::vector<std::string>{"beta", "alpha"}));
  auto map = render_id_map(c);
  EXPECT_NE(map.find(R"("kind":"solution","id":1,"external_id":"40")"), std::string::npos) << map;
}

TEST(Corpus, MissingIdsFollowFileOrder) {
  Corpus c = load(kProblem,
                  R"({"task_id": "T", "completion": "first"})" "\n"
                  R"({"task_id": "T", "completion": "second"})" "\n",
                  "");
  EXPECT_EQ(c.tasks()[0].solutions[1].source, "second");
  EXPECT_EQ(c.tasks()[0].solutions[1].solution_id, 1u);
}

// Property: serialize -> parse reproduces ids and byte-exact texts, over
// generated corpora with awkward text content and shuffled sparse ids.
TEST(Corpus, RoundTripProperty) {
  Rng rng(11);
  const std::string alphabet[] = {"a", "\n", "\"", "\\", "é", "\t", " ", "{", "}", "λ"};
  auto text = [&] {
    std::string s;
    auto len = rng.below(12);
    for (std::size_t i = 0; i < len; ++i) s += alphabet[rng.below(10)];
    return s;
  };
  for (int round = 0; round < 50; ++round) {
    std::ostringstream p, s, t;
    auto tasks = 1 + rng.below(4);
    for (std::size_t k = 0; k < tasks; ++k) {
      std::string id = "task" + std::to_string(k);
      Json pj = {{"task_id", id}, {"prompt", text()}, {"entry_point", "f"}};
      if (rng.chance(0.5)) pj["hidden_tests"] = {text(), text()};
      p << pj.dump() << '\n';
      std::vector<std::uint64_t> ids;
      for (std::size_t i = 0, n = rng.below(5); i < n; ++i) ids.push_back(i * 3 + rng.below(3));
      rng.shuffle(ids.begin(), ids.end());
      for (auto i : ids) s << Json{{"task_id", id}, {"solution_id", i}, {"completion", text()}}.dump() << '\n';
      for (std::size_t i = 0, n = rng.below(4); i < n; ++i)
        t << Json{{"task_id", id}, {"assertion", "assert " + text()}}.dump() << '\n';
    }
    Corpus first = load(p.str(), s.str(), t.str());
    Corpus second = parse_corpus(serialize(first));
    EXPECT_TRUE(first.same_content(second)) << "round " << round;
    for (const Task& task : second.tasks())
      for (std::size_t i = 0; i < task.solutions.size(); ++i)
        EXPECT_EQ(task.solutions[i].solution_id, i);
  }
}

TEST(Corpus, MissingFileIsUsageErrorNamingPath) {
  try {
    load_corpus("/nonexistent/p.jsonl", "/nonexistent/s.jsonl", "/nonexistent/t.jsonl");
    FAIL();
  } catch (const UsageError& e) {
    EXPECT_NE(std::string(e.what()).find("/nonexistent/p.jsonl"), std::string::npos);
  }
}

TEST(Corpus, ReferenceTestsAreSeparateFromTasks) {
  Corpus c = load(R"j({"task_id": "T", "entry_point": "f", "hidden_tests": ["assert f(1)"]})j" "\n",
                  "", "");
  EXPECT_TRUE(c.tasks()[0].tests.empty());
  EXPECT_FALSE(c.reference_tests().has("U"));
  EXPECT_THROW(c.reference_tests().of("U"), DataError);
}

}  // namespace
}  // namespace agreerank
