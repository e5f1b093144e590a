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

// Line-delimited JSON record helpers. Every file the pipeline reads or writes
// holds one JSON object per line; blank lines are ignored.

#pragma once

#include <filesystem>
#include <fstream>
#include <functional>
#include <istream>
#include <ostream>
#include <string>

#include "agreerank/core.hpp"
#include "json.hpp"

namespace agreerank {

using Json = nlohmann::json;
using OrderedJson = nlohmann::ordered_json;

// Calls `fn(record, line_number)` for every non-blank line of `in`.
// Parse failures and exceptions thrown by `fn` are rethrown as DataError
// prefixed with "<source>:<line>: ".
inline void for_each_record(std::istream& in, const std::string& source,
                            const std::function<void(const Json&, std::size_t)>& fn) {
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    Json record;
    try {
      record = Json::parse(line);
    } catch (const Json::parse_error& e) {
      throw DataError(source + ":" + std::to_string(line_no) + ": malformed JSON: " + e.what());
    }
    if (!record.is_object())
      throw DataError(source + ":" + std::to_string(line_no) + ": expected a JSON object");
    try {
      fn(record, line_no);
    } catch (const DataError& e) {
      throw DataError(source + ":" + std::to_string(line_no) + ": " + e.what());
    } catch (const Json::exception& e) {
      throw DataError(source + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
}

inline std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open input file: " + path.string());
  return in;
}

inline void for_each_record(const std::filesystem::path& path,
                            const std::function<void(const Json&, std::size_t)>& fn) {
  auto in = open_input(path);
  for_each_record(in, path.string(), fn);
}

template <typename J>
void write_record(std::ostream& out, const J& record) {
  out << record.dump(-1, ' ', false, J::error_handler_t::replace) << '\n';
}

inline const Json& require_field(const Json& record, const char* key) {
  auto it = record.find(key);
  if (it == record.end()) throw DataError(std::string("missing field '") + key + "'");
  return *it;
}

inline std::string require_string(const Json& record, const char* key) {
  const Json& v = require_field(record, key);
  if (!v.is_string()) throw DataError(std::string("field '") + key + "' must be a string");
  return v.get<std::string>();
}

// Writes `content` to `path` through a temporary file so readers never see a
// half-written file.
inline void write_file_atomically(const std::filesystem::path& path, const std::string& content) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw UsageError("cannot write file: " + tmp.string());
    out << content;
    if (!out) throw UsageError("write failed: " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

}  // namespace agreerank
