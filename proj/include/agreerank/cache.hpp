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

// Persistent, content-keyed store of executed cells.
//
// A cell is keyed by (task_id, source hash, assertion hash). Pass, Fail and
// Error outcomes do not depend on the time budget and are reused under any
// budget; a Timeout is reused only under the exact budget it was observed at.

#pragma once

#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <tuple>

#include "agreerank/jsonl.hpp"
#include "agreerank/log.hpp"
#include "agreerank/matrix_io.hpp"

namespace agreerank {

class MatrixCache {
 public:
  MatrixCache() = default;

  // Loads `path` if it exists; a missing file is an empty cache that will be
  // created on flush(). Corrupt lines are skipped with a warning.
  static MatrixCache warm(const std::filesystem::path& path) {
    MatrixCache cache;
    cache.path_ = path;
    std::ifstream in(path);
    if (!in) return cache;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      try {
        auto j = Json::parse(line);
        auto r = matrix_record_from_json(j);
        if (r.source_hash.empty() || r.assertion_hash.empty())
          throw DataError("missing content hashes");
        cache.entries_[{r.task_id, r.source_hash, r.assertion_hash}] = std::move(r);
      } catch (const std::exception& e) {
        ++cache.skipped_;
        Log::warn(path.string() + ":" + std::to_string(line_no) +
                  ": skipping corrupt cache line: " + e.what());
      }
    }
    return cache;
  }

  std::optional<Outcome> lookup(const std::string& task_id, const std::string& source_hash,
                                const std::string& assertion_hash,
                                std::int64_t timeout_ms) const {
    auto it = entries_.find({task_id, source_hash, assertion_hash});
    if (it == entries_.end()) return std::nullopt;
    const MatrixRecord& r = it->second;
    if (r.outcome.status == Status::Timeout && r.timeout_ms != timeout_ms) return std::nullopt;
    return r.outcome;
  }

  void store(MatrixRecord record) {
    Key key{record.task_id, record.source_hash, record.assertion_hash};
    entries_[std::move(key)] = std::move(record);
    dirty_ = true;
  }

  std::size_t size() const { return entries_.size(); }
  std::size_t skipped_lines() const { return skipped_; }
  const std::filesystem::path& path() const { return path_; }

  std::string render() const {
    std::ostringstream out;
    for (const auto& [key, record] : entries_) write_record(out, to_json(record));
    return out.str();
  }

  // Rewrites the backing file in key order. No-op for a cache without a path.
  void flush() {
    if (path_.empty() || !dirty_) return;
    if (path_.has_parent_path()) std::filesystem::create_directories(path_.parent_path());
    write_file_atomically(path_, render());
    dirty_ = false;
  }

 private:
  using Key = std::tuple<std::string, std::string, std::string>;

  std::filesystem::path path_;
  std::map<Key, MatrixRecord> entries_;
  std::size_t skipped_ = 0;
  bool dirty_ = false;
};

}  // namespace agreerank
