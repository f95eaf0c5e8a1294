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

#ifndef CHIRON_TEMPLATES_HPP_
#define CHIRON_TEMPLATES_HPP_

#include <map>
#include <set>
#include <string>
#include <string_view>

#include "chiron/assets.hpp"
#include "chiron/error.hpp"
#include "chiron/text.hpp"

namespace chiron {

// Bumped whenever any prompt asset changes wording.
inline constexpr std::string_view kPromptRegistryVersion = "1";

// Prompt asset by file name relative to assets/, e.g. "prompts/generation.txt".
// Trailing whitespace is dropped.
inline std::string_view prompt_asset(std::string_view name) {
  for (const auto& [key, text] : assets::kAll) {
    if (key == name) {
      std::size_t e = text.size();
      while (e > 0 && is_space(text[e - 1])) --e;
      return text.substr(0, e);
    }
  }
  throw ConfigError("unknown prompt asset '" + std::string(name) + "'");
}

namespace detail {

inline bool is_placeholder_char(char c) {
  return (c >= 'a' && c <= 'z') || c == '_';
}

// Returns the placeholder name starting at `open` ('['), or empty.
inline std::string_view placeholder_at(std::string_view tmpl, std::size_t open) {
  std::size_t i = open + 1;
  while (i < tmpl.size() && is_placeholder_char(tmpl[i])) ++i;
  if (i == open + 1 || i >= tmpl.size() || tmpl[i] != ']') return {};
  return tmpl.substr(open + 1, i - open - 1);
}

}  // namespace detail

// Names of every [lower_snake] placeholder in a template.
inline std::set<std::string> template_placeholders(std::string_view tmpl) {
  std::set<std::string> names;
  for (std::size_t i = 0; i < tmpl.size(); ++i) {
    if (tmpl[i] != '[') continue;
    std::string_view name = detail::placeholder_at(tmpl, i);
    if (!name.empty()) names.emplace(name);
  }
  return names;
}

// Single-pass substitution of [name] placeholders. Values are inserted
// verbatim and never rescanned. Every placeholder must have a value.
inline std::string render_template(std::string_view tmpl,
                                   const std::map<std::string, std::string>& values) {
  std::string out;
  out.reserve(tmpl.size() + 256);
  std::size_t i = 0;
  while (i < tmpl.size()) {
    if (tmpl[i] == '[') {
      std::string_view name = detail::placeholder_at(tmpl, i);
      if (!name.empty()) {
        auto it = values.find(std::string(name));
        if (it == values.end()) {
          throw ConfigError("template placeholder [" + std::string(name) +
                            "] has no value");
        }
        out.append(it->second);
        i += name.size() + 2;
        continue;
      }
    }
    out.push_back(tmpl[i]);
    ++i;
  }
  return out;
}

}  // namespace chiron

#endif  // CHIRON_TEMPLATES_HPP_
