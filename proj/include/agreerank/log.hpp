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

#pragma once

#include <iostream>
#include <mutex>
#include <string_view>

namespace agreerank {

// Diagnostics go to stderr, one line each; outputs go to files.
class Log {
 public:
  static void set_quiet(bool quiet) { instance().quiet_ = quiet; }

  static void info(std::string_view msg) { instance().write("info", msg); }
  static void warn(std::string_view msg) { instance().write("warning", msg); }

 private:
  static Log& instance() {
    static Log log;
    return log;
  }

  void write(std::string_view level, std::string_view msg) {
    if (quiet_) return;
    std::lock_guard<std::mutex> lock(mu_);
    std::cerr << "agreerank: " << level << ": " << msg << '\n';
  }

  std::mutex mu_;
  bool quiet_ = false;
};

}  // namespace agreerank
