// Copyright 2026 The tadbench Authors
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

// Chat-completion client: request {model, messages, temperature, max_tokens},
// response choices[0].message.content. Retries with exponential backoff on
// 429/5xx/transport failures; a process-wide limiter per endpoint bounds the
// number of in-flight requests and shares rate-limit pauses.

#pragma once

#include <chrono>
#include <condition_variable>
#include <filesystem>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <string>

#include "tadbench/agent.hpp"

namespace tadbench {

struct RetryPolicy {
  int max_retries = 5;
  std::chrono::milliseconds initial_backoff{500};
  double multiplier = 2.0;
  std::chrono::milliseconds max_backoff{30000};

  // Delay before retry number `retry` (1-based), ignoring server hints.
  std::chrono::milliseconds backoff(int retry) const;
};

struct WireConfig {
  std::string provider;  // informational; names the credential variable by default
  std::string base_url;  // scheme://host[:port]
  std::string path = "/v1/chat/completions";
  std::string model;
  RetryPolicy retry;
  int max_concurrent = 4;
  std::chrono::seconds timeout{120};
  std::optional<std::filesystem::path> transcript;
};

using SleepFn = std::function<void(std::chrono::milliseconds)>;

/// Shared by every backend talking to the same base_url.
class EndpointLimiter {
 public:
  explicit EndpointLimiter(int max_concurrent);

  class Slot {
   public:
    explicit Slot(EndpointLimiter& limiter) : limiter_(limiter) { limiter_.acquire(); }
    ~Slot() { limiter_.release(); }
    Slot(const Slot&) = delete;
    Slot& operator=(const Slot&) = delete;

   private:
    EndpointLimiter& limiter_;
  };

  // Remaining shared pause, if another request was told to back off.
  std::chrono::milliseconds pending_pause() const;
  void pause_for(std::chrono::milliseconds delay);
  int max_concurrent() const { return max_concurrent_; }

 private:
  void acquire();
  void release();

  const int max_concurrent_;
  int in_flight_ = 0;
  std::chrono::steady_clock::time_point not_before_{};
  mutable std::mutex mu_;
  std::condition_variable cv_;
};

// One limiter per endpoint key for the life of the process. The first caller
// fixes the concurrency bound.
std::shared_ptr<EndpointLimiter> limiter_for(const std::string& endpoint, int max_concurrent);

/// Append-only JSONL log of request/response pairs; safe to share.
class TranscriptLog {
 public:
  explicit TranscriptLog(std::filesystem::path path);
  void append(const Json& record);

 private:
  std::filesystem::path path_;
  std::mutex mu_;
  long long seq_ = 0;
};

class WireBackend : public CompletionBackend {
 public:
  // Throws std::invalid_argument for an unusable base_url.
  WireBackend(WireConfig config, std::string api_key, SleepFn sleep = {});

  std::string complete(const PromptText& prompt, const CallContext& ctx,
                       const DecodeParams& params) override;
  bool offline() const override { return false; }

  // Request body the backend would send; exposed for tests.
  static Json request_body(const std::string& model, const PromptText& prompt,
                           const DecodeParams& params);
  // Extracts choices[0].message.content; throws RequestError/EmptyCompletion.
  static std::string extract_content(const std::string& body);

 private:
  std::string attempt_once(const std::string& body);

  WireConfig config_;
  std::string api_key_;
  SleepFn sleep_;
  std::shared_ptr<EndpointLimiter> limiter_;
  std::shared_ptr<TranscriptLog> transcript_;
};

}  // namespace tadbench
