// Copyright 2026 The Chiron Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Text primitives shared by every stage: whitespace words, blank-line
// paragraphs and the rule-based sentence splitter.

#ifndef CHIRON_TEXT_HPP_
#define CHIRON_TEXT_HPP_

#include <algorithm>
#include <cctype>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "chiron/assets.hpp"

namespace chiron {

inline bool is_space(char c) {
  return std::isspace(static_cast<unsigned char>(c)) != 0;
}

inline bool is_ascii_upper(char c) { return c >= 'A' && c <= 'Z'; }

inline char ascii_lower(char c) {
  return is_ascii_upper(c) ? static_cast<char>(c - 'A' + 'a') : c;
}

inline std::string to_lower_ascii(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(), ascii_lower);
  return out;
}

inline bool iequals_ascii(std::string_view a, std::string_view b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (ascii_lower(a[i]) != ascii_lower(b[i])) return false;
  }
  return true;
}

inline std::string_view trim(std::string_view s) {
  std::size_t b = 0;
  std::size_t e = s.size();
  while (b < e && is_space(s[b])) ++b;
  while (e > b && is_space(s[e - 1])) --e;
  return s.substr(b, e - b);
}

inline bool is_blank(std::string_view s) { return trim(s).empty(); }

// Whitespace-delimited tokens.
inline std::vector<std::string_view> split_words(std::string_view s) {
  std::vector<std::string_view> words;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && is_space(s[i])) ++i;
    std::size_t start = i;
    while (i < s.size() && !is_space(s[i])) ++i;
    if (i > start) words.push_back(s.substr(start, i - start));
  }
  return words;
}

inline std::size_t word_count(std::string_view s) {
  std::size_t n = 0;
  bool in_word = false;
  for (char c : s) {
    if (is_space(c)) {
      in_word = false;
    } else if (!in_word) {
      in_word = true;
      ++n;
    }
  }
  return n;
}

// Collapses every whitespace run (newlines included) into one space.
inline std::string normalize_whitespace(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  for (std::string_view w : split_words(s)) {
    if (!out.empty()) out.push_back(' ');
    out.append(w);
  }
  return out;
}

// Blank-line-delimited blocks, each trimmed. Whitespace-only input yields no
// paragraphs.
inline std::vector<std::string> split_paragraphs(std::string_view text) {
  std::vector<std::string> paragraphs;
  std::string current;
  auto flush = [&] {
    std::string_view t = trim(current);
    if (!t.empty()) paragraphs.emplace_back(t);
    current.clear();
  };
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t nl = text.find('\n', pos);
    if (nl == std::string_view::npos) nl = text.size();
    std::string_view line = text.substr(pos, nl - pos);
    if (is_blank(line)) {
      flush();
    } else {
      if (!current.empty()) current.push_back('\n');
      current.append(line);
    }
    pos = nl + 1;
  }
  flush();
  return paragraphs;
}

inline std::string join(const std::vector<std::string>& parts,
                        std::string_view sep) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i > 0) out.append(sep);
    out.append(parts[i]);
  }
  return out;
}

// Abbreviations that never end a sentence, parsed from a one-per-line list.
class AbbreviationList {
 public:
  explicit AbbreviationList(std::string_view listing) {
    std::size_t pos = 0;
    while (pos < listing.size()) {
      std::size_t nl = listing.find('\n', pos);
      if (nl == std::string_view::npos) nl = listing.size();
      std::string_view line = trim(listing.substr(pos, nl - pos));
      if (!line.empty() && line.front() != '#') entries_.emplace(line);
      pos = nl + 1;
    }
  }

  // The shipped list (assets/abbreviations.txt).
  static const AbbreviationList& builtin() {
    static const AbbreviationList list(assets::k_abbreviations_txt);
    return list;
  }

  bool contains(std::string_view token) const {
    return entries_.count(std::string(token)) > 0;
  }

  std::size_t size() const { return entries_.size(); }

 private:
  std::unordered_set<std::string> entries_;
};

namespace detail {

// UTF-8 curly quotes.
inline constexpr std::string_view kLeftDouble = "\xE2\x80\x9C";
inline constexpr std::string_view kRightDouble = "\xE2\x80\x9D";
inline constexpr std::string_view kLeftSingle = "\xE2\x80\x98";
inline constexpr std::string_view kRightSingle = "\xE2\x80\x99";
inline constexpr std::string_view kEllipsis = "\xE2\x80\xA6";

inline bool starts_with_at(std::string_view s, std::size_t i,
                           std::string_view prefix) {
  return s.substr(i, prefix.size()) == prefix;
}

// Length of the closing quote/bracket at i, or 0.
inline std::size_t closer_len(std::string_view s, std::size_t i) {
  char c = s[i];
  if (c == '"' || c == '\'' || c == ')' || c == ']') return 1;
  if (starts_with_at(s, i, kRightDouble)) return kRightDouble.size();
  if (starts_with_at(s, i, kRightSingle)) return kRightSingle.size();
  return 0;
}

// Length of the opening quote/bracket at i, or 0.
inline std::size_t opener_len(std::string_view s, std::size_t i) {
  char c = s[i];
  if (c == '"' || c == '\'' || c == '(' || c == '[') return 1;
  if (starts_with_at(s, i, kLeftDouble)) return kLeftDouble.size();
  if (starts_with_at(s, i, kLeftSingle)) return kLeftSingle.size();
  return 0;
}

inline std::size_t terminator_len(std::string_view s, std::size_t i) {
  char c = s[i];
  if (c == '.' || c == '!' || c == '?') return 1;
  if (starts_with_at(s, i, kEllipsis)) return kEllipsis.size();
  return 0;
}

// The word ending at the period s[dot], stripped of leading openers.
inline std::string_view word_before(std::string_view s, std::size_t dot) {
  std::size_t b = dot;
  while (b > 0 && !is_space(s[b - 1])) --b;
  std::string_view w = s.substr(b, dot + 1 - b);
  while (!w.empty()) {
    std::size_t n = opener_len(w, 0);
    if (n == 0) break;
    w.remove_prefix(n);
  }
  return w;
}

}  // namespace detail

// Rule-based sentence splitter. A boundary is a run of terminal punctuation
// (. ! ? or an ellipsis), optional closing quotes or brackets, whitespace, and
// then an uppercase letter or an opening quote. A lone period after a listed
// abbreviation or a single-letter initial is not a boundary. Sentences are
// returned trimmed; no non-whitespace character is dropped.
inline std::vector<std::string> split_sentences(
    std::string_view text,
    const AbbreviationList& abbreviations = AbbreviationList::builtin()) {
  std::vector<std::string> sentences;
  std::size_t seg_start = 0;
  std::size_t i = 0;
  const std::size_t n = text.size();
  while (i < n) {
    std::size_t t = detail::terminator_len(text, i);
    if (t == 0) {
      ++i;
      continue;
    }
    std::size_t run_start = i;
    std::size_t j = i;
    std::size_t run_count = 0;
    while (j < n) {
      std::size_t len = detail::terminator_len(text, j);
      if (len == 0) break;
      j += len;
      ++run_count;
    }
    std::size_t k = j;
    while (k < n) {
      std::size_t len = detail::closer_len(text, k);
      if (len == 0) break;
      k += len;
    }
    bool boundary = false;
    if (k < n && is_space(text[k])) {
      std::size_t m = k;
      while (m < n && is_space(text[m])) ++m;
      if (m < n && (is_ascii_upper(text[m]) || detail::opener_len(text, m) > 0)) {
        boundary = true;
      }
    }
    if (boundary && run_count == 1 && text[run_start] == '.') {
      std::string_view w = detail::word_before(text, run_start);
      if (abbreviations.contains(w)) boundary = false;
      if (w.size() == 2 && is_ascii_upper(w[0])) boundary = false;
    }
    if (boundary) {
      std::string_view s = trim(text.substr(seg_start, k - seg_start));
      if (!s.empty()) sentences.emplace_back(s);
      seg_start = k;
    }
    i = k > j ? k : j;
  }
  std::string_view rest = trim(text.substr(std::min(seg_start, n)));
  if (!rest.empty()) sentences.emplace_back(rest);
  return sentences;
}

}  // namespace chiron

#endif  // CHIRON_TEXT_HPP_
