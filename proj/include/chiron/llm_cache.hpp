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

#ifndef CHIRON_LLM_CACHE_HPP_
#define CHIRON_LLM_CACHE_HPP_

#include <atomic>
#include <filesystem>
#include <fstream>
#include <memory>
#include <mutex>
#include <shared_mutex>
#include <string>
#include <unordered_map>

#include <json.hpp>

#include "chiron/error.hpp"
#include "chiron/llm.hpp"

namespace chiron {

// Record/replay cache in front of another backend. The store is an
// append-only JSONL file of {"request_key", "response"} lines; when a key
// appears more than once the last line wins. With no inner backend the cache
// is replay-only and a miss is a BackendError.
class CachingBackend : public Backend {
 public:
  CachingBackend(std::shared_ptr<Backend> inner, std::filesystem::path path = {})
      : inner_(std::move(inner)), path_(std::move(path)) {
    if (!path_.empty()) load();
  }

  ChatResponse complete(const ChatRequest& request) override {
    std::string key = request_key(request);
    {
      std::shared_lock lock(map_mutex_);
      auto it = entries_.find(key);
      if (it != entries_.end()) {
        ++hits_;
        ChatResponse r = it->second;
        r.cached = true;
        return r;
      }
    }
    if (!inner_) throw BackendError("replay cache miss", key);
    ++misses_;
    ChatResponse fresh = inner_->complete(request);
    fresh.cached = false;
    store(key, fresh);
    return fresh;
  }

  std::string id() const override {
    return inner_ ? "cache(" + inner_->id() + ")" : "replay";
  }

  std::size_t size() const {
    std::shared_lock lock(map_mutex_);
    return entries_.size();
  }
  std::size_t hits() const { return hits_; }
  std::size_t misses() const { return misses_; }
  std::size_t skipped_lines() const { return skipped_lines_; }

 private:
  void load() {
    std::ifstream in(path_);
    if (!in) return;
    std::string line;
    while (std::getline(in, line)) {
      if (is_blank(line)) continue;
      try {
        nlohmann::json j = nlohmann::json::parse(line);
        entries_[j.at("request_key").get<std::string>()] =
            j.at("response").get<ChatResponse>();
      } catch (const nlohmann::json::exception&) {
        // A torn final write from an interrupted run.
        ++skipped_lines_;
      }
    }
  }

  void store(const std::string& key, const ChatResponse& response) {
    {
      std::unique_lock lock(map_mutex_);
      entries_[key] = response;
    }
    if (path_.empty()) return;
    nlohmann::json line = {{"request_key", key}, {"response", response}};
    std::lock_guard lock(file_mutex_);
    if (path_.has_parent_path()) std::filesystem::create_directories(path_.parent_path());
    std::ofstream out(path_, std::ios::app);
    out << line.dump(-1, ' ', false, nlohmann::json::error_handler_t::replace) << '\n';
  }

  std::shared_ptr<Backend> inner_;
  std::filesystem::path path_;
  mutable std::shared_mutex map_mutex_;
  std::mutex file_mutex_;
  std::unordered_map<std::string, ChatResponse> entries_;
  std::atomic<std::size_t> hits_{0};
  std::atomic<std::size_t> misses_{0};
  std::size_t skipped_lines_ = 0;
};

}  // namespace chiron

#endif  // CHIRON_LLM_CACHE_HPP_
