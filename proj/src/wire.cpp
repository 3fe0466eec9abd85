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

#define CPPHTTPLIB_OPENSSL_SUPPORT
#include "tadbench/wire.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <thread>

#include "httplib.h"

namespace tadbench {

std::chrono::milliseconds RetryPolicy::backoff(int retry) const {
  const double factor = std::pow(multiplier, std::max(0, retry - 1));
  const double ms = static_cast<double>(initial_backoff.count()) * factor;
  const double capped = std::min(ms, static_cast<double>(max_backoff.count()));
  return std::chrono::milliseconds(static_cast<long long>(capped));
}

// --- limiter ---------------------------------------------------------------

EndpointLimiter::EndpointLimiter(int max_concurrent) : max_concurrent_(max_concurrent) {
  if (max_concurrent < 1) throw std::invalid_argument("max_concurrent must be >= 1");
}

void EndpointLimiter::acquire() {
  std::unique_lock lock(mu_);
  cv_.wait(lock, [&] { return in_flight_ < max_concurrent_; });
  ++in_flight_;
}

void EndpointLimiter::release() {
  {
    std::lock_guard lock(mu_);
    --in_flight_;
  }
  cv_.notify_one();
}

std::chrono::milliseconds EndpointLimiter::pending_pause() const {
  std::lock_guard lock(mu_);
  const auto now = std::chrono::steady_clock::now();
  if (not_before_ <= now) return std::chrono::milliseconds(0);
  return std::chrono::duration_cast<std::chrono::milliseconds>(not_before_ - now);
}

void EndpointLimiter::pause_for(std::chrono::milliseconds delay) {
  std::lock_guard lock(mu_);
  not_before_ = std::max(not_before_, std::chrono::steady_clock::now() + delay);
}

std::shared_ptr<EndpointLimiter> limiter_for(const std::string& endpoint, int max_concurrent) {
  static std::mutex mu;
  static std::map<std::string, std::shared_ptr<EndpointLimiter>> registry;
  std::lock_guard lock(mu);
  auto& slot = registry[endpoint];
  if (!slot) slot = std::make_shared<EndpointLimiter>(max_concurrent);
  return slot;
}

// --- transcript ------------------------------------------------------------

TranscriptLog::TranscriptLog(std::filesystem::path path) : path_(std::move(path)) {
  if (path_.has_parent_path()) std::filesystem::create_directories(path_.parent_path());
}

void TranscriptLog::append(const Json& record) {
  std::lock_guard lock(mu_);
  Json line = record;
  line["seq"] = ++seq_;
  std::ofstream out(path_, std::ios::app | std::ios::binary);
  out << line.dump() << '\n';
}

namespace {

std::shared_ptr<TranscriptLog> transcript_for(const std::filesystem::path& path) {
  static std::mutex mu;
  static std::map<std::string, std::shared_ptr<TranscriptLog>> registry;
  std::lock_guard lock(mu);
  auto& slot = registry[std::filesystem::absolute(path).string()];
  if (!slot) slot = std::make_shared<TranscriptLog>(path);
  return slot;
}

std::optional<std::chrono::milliseconds> parse_retry_after(const std::string& value) {
  if (value.empty()) return std::nullopt;
  try {
    std::size_t used = 0;
    const double seconds = std::stod(value, &used);
    if (used != value.size() || seconds < 0) return std::nullopt;
    return std::chrono::milliseconds(static_cast<long long>(seconds * 1000.0));
  } catch (const std::exception&) {
    return std::nullopt;  // HTTP-date form: fall back to the policy's backoff
  }
}

}  // namespace

// --- backend ---------------------------------------------------------------

WireBackend::WireBackend(WireConfig config, std::string api_key, SleepFn sleep)
    : config_(std::move(config)), api_key_(std::move(api_key)), sleep_(std::move(sleep)) {
  if (config_.base_url.rfind("http://", 0) != 0 && config_.base_url.rfind("https://", 0) != 0) {
    throw std::invalid_argument("base_url must start with http:// or https://: " +
                                config_.base_url);
  }
  if (config_.retry.max_retries < 0) throw std::invalid_argument("max_retries must be >= 0");
  if (!sleep_) sleep_ = [](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); };
  limiter_ = limiter_for(config_.base_url, config_.max_concurrent);
  if (config_.transcript) transcript_ = transcript_for(*config_.transcript);
}

Json WireBackend::request_body(const std::string& model, const PromptText& prompt,
                               const DecodeParams& params) {
  Json messages = Json::array();
  for (const auto& m : prompt.messages) {
    messages.push_back({{"role", std::string(to_string(m.role))}, {"content", m.content}});
  }
  return Json{{"model", model},
              {"messages", std::move(messages)},
              {"temperature", params.temperature},
              {"max_tokens", params.max_output_tokens}};
}

std::string WireBackend::extract_content(const std::string& body) {
  Json j = Json::parse(body, nullptr, false);
  if (j.is_discarded() || !j.is_object()) throw RequestError("response is not a JSON object");
  const Json* content = nullptr;
  if (j.contains("choices") && j["choices"].is_array() && !j["choices"].empty()) {
    const Json& first = j["choices"][0];
    if (first.contains("message") && first["message"].is_object() &&
        first["message"].contains("content")) {
      content = &first["message"]["content"];
    }
  }
  if (content == nullptr) throw RequestError("response lacks choices[0].message.content");
  if (!content->is_string() || content->get_ref<const std::string&>().empty()) {
    throw EmptyCompletion("model returned an empty completion");
  }
  return content->get<std::string>();
}

std::string WireBackend::attempt_once(const std::string& body) {
  httplib::Client client(config_.base_url);
  client.set_connection_timeout(std::chrono::seconds(10));
  client.set_read_timeout(config_.timeout);
  client.set_write_timeout(config_.timeout);
  httplib::Headers headers = {{"Authorization", "Bearer " + api_key_}};

  httplib::Result res = [&] {
    EndpointLimiter::Slot slot(*limiter_);
    return client.Post(config_.path, headers, body, "application/json");
  }();
  if (!res) {
    throw TransportError("request to " + config_.base_url + " failed: " +
                         httplib::to_string(res.error()));
  }
  const int status = res->status;
  if (status == 401 || status == 403) {
    throw AuthError("endpoint rejected credentials (HTTP " + std::to_string(status) + ")");
  }
  if (status == 429) {
    throw RateLimited("rate limited (HTTP 429)",
                      parse_retry_after(res->get_header_value("Retry-After")));
  }
  if (status >= 500) throw TransportError("server error (HTTP " + std::to_string(status) + ")");
  if (status < 200 || status >= 300) {
    throw RequestError("request rejected (HTTP " + std::to_string(status) + "): " + res->body);
  }
  return extract_content(res->body);
}

std::string WireBackend::complete(const PromptText& prompt, const CallContext& ctx,
                                  const DecodeParams& params) {
  const Json request = request_body(config_.model, prompt, params);
  const std::string body = request.dump();
  auto log = [&](const std::string& outcome, const std::string& text, int retry) {
    if (!transcript_) return;
    transcript_->append({{"model", config_.model},
                         {"purpose", std::string(to_string(ctx.purpose))},
                         {"lineage_id", ctx.lineage_id},
                         {"retry", retry},
                         {"request", request},
                         {"outcome", outcome},
                         {"response", text}});
  };

  bool slept = false;  // our own backoff already covers the shared pause
  for (int retry = 0;; ++retry) {
    if (!slept) {
      if (auto pause = limiter_->pending_pause(); pause.count() > 0) sleep_(pause);
    }
    slept = false;
    try {
      std::string content = attempt_once(body);
      log("ok", content, retry);
      return content;
    } catch (const RateLimited& e) {
      log("rate_limited", e.what(), retry);
      if (retry >= config_.retry.max_retries) throw;
      const auto delay = std::max(config_.retry.backoff(retry + 1),
                                  e.retry_after().value_or(std::chrono::milliseconds(0)));
      limiter_->pause_for(delay);
      sleep_(delay);
      slept = true;
    } catch (const TransportError& e) {
      log("transport_error", e.what(), retry);
      if (retry >= config_.retry.max_retries) throw;
      sleep_(config_.retry.backoff(retry + 1));
      slept = true;
    } catch (const AgentError& e) {
      log("error", e.what(), retry);
      throw;
    }
  }
}

}  // namespace tadbench
