/* Copyright 2026 The AVVP Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/
#ifndef AVVP_SRC_LINE_READER_H_
#define AVVP_SRC_LINE_READER_H_

#include <charconv>
#include <cstddef>
#include <istream>
#include <sstream>
#include <string>
#include <vector>

#include "avvp/metrics.h"

namespace avvp::internal {

// Tokenizing line reader that reports 1-based line numbers in errors.
class LineReader {
 public:
  explicit LineReader(std::istream& in) : in_(in) {}

  // Next line split on whitespace. Fails at end of input.
  std::vector<std::string> Tokens(const char* expecting) {
    std::string line;
    if (!std::getline(in_, line)) {
      Fail(std::string("unexpected end of file, expected ") + expecting,
           line_ + 1);
    }
    ++line_;
    std::istringstream ss(line);
    std::vector<std::string> out;
    for (std::string tok; ss >> tok;) out.push_back(tok);
    return out;
  }

  // Next line, which must be exactly `keyword` followed by `n` arguments.
  std::vector<std::string> Expect(const std::string& keyword, std::size_t n) {
    auto toks = Tokens(keyword.c_str());
    if (toks.empty() || toks[0] != keyword || toks.size() != n + 1) {
      Fail("expected '" + keyword + "' with " + std::to_string(n) +
               " argument(s)",
           line_);
    }
    toks.erase(toks.begin());
    return toks;
  }

  std::string RawLine(const char* expecting) {
    std::string line;
    if (!std::getline(in_, line)) {
      Fail(std::string("unexpected end of file, expected ") + expecting,
           line_ + 1);
    }
    ++line_;
    while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) {
      line.pop_back();
    }
    return line;
  }

  bool AtEnd() {
    in_ >> std::ws;
    return in_.peek() == std::char_traits<char>::eof();
  }

  std::size_t ParseCount(const std::string& tok, const char* what) const {
    std::size_t v = 0;
    const auto* end = tok.data() + tok.size();
    auto [ptr, ec] = std::from_chars(tok.data(), end, v);
    if (ec != std::errc() || ptr != end) {
      Fail(std::string("invalid ") + what + " '" + tok + "'", line_);
    }
    return v;
  }

  std::size_t line() const { return line_; }

  [[noreturn]] void Fail(const std::string& what, std::size_t line) const {
    throw ParseError(what, line);
  }
  [[noreturn]] void Fail(const std::string& what) const { Fail(what, line_); }

 private:
  std::istream& in_;
  std::size_t line_ = 0;
};

}  // namespace avvp::internal

#endif  // AVVP_SRC_LINE_READER_H_
