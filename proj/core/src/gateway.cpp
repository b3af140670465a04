#include "nerif/gateway.hpp"

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "nerif/error.hpp"
#include "text.hpp"

namespace nerif::vlm {

namespace {

using nlohmann::json;

std::int64_t steady_now_ms() {
  return std::chrono::duration_cast<std::chrono::milliseconds>(
             std::chrono::steady_clock::now().time_since_epoch())
      .count();
}

bool transient(Errc code) { return code == Errc::TransportError || code == Errc::RateLimited; }

std::string base64_encode(const std::vector<std::uint8_t>& bytes) {
  static constexpr char kAlphabet[] =
      "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";
  std::string out;
  out.reserve((bytes.size() + 2) / 3 * 4);
  std::size_t i = 0;
  for (; i + 3 <= bytes.size(); i += 3) {
    const std::uint32_t v = (bytes[i] << 16) | (bytes[i + 1] << 8) | bytes[i + 2];
    out += kAlphabet[(v >> 18) & 63];
    out += kAlphabet[(v >> 12) & 63];
    out += kAlphabet[(v >> 6) & 63];
    out += kAlphabet[v & 63];
  }
  if (i + 1 == bytes.size()) {
    const std::uint32_t v = bytes[i] << 16;
    out += kAlphabet[(v >> 18) & 63];
    out += kAlphabet[(v >> 12) & 63];
    out += "==";
  } else if (i + 2 == bytes.size()) {
    const std::uint32_t v = (bytes[i] << 16) | (bytes[i + 1] << 8);
    out += kAlphabet[(v >> 18) & 63];
    out += kAlphabet[(v >> 12) & 63];
    out += kAlphabet[(v >> 6) & 63];
    out += '=';
  }
  return out;
}

struct ParsedUrl {
  bool https = false;
  std::string host_port;  // scheme://host[:port] for httplib
  std::string path;
};

ParsedUrl parse_url(const std::string& url) {
  ParsedUrl out;
  std::string rest;
  if (url.starts_with("https://")) {
    out.https = true;
    rest = url.substr(8);
  } else if (url.starts_with("http://")) {
    rest = url.substr(7);
  } else {
    raise(Errc::InvalidConfig, "endpoint URL must start with http:// or https://: " + url);
  }
  const auto slash = rest.find('/');
  const std::string authority = slash == std::string::npos ? rest : rest.substr(0, slash);
  out.path = slash == std::string::npos ? "/" : rest.substr(slash);
  out.host_port = (out.https ? "https://" : "http://") + authority;
  return out;
}

}  // namespace

std::string_view finish_name(FinishState f) {
  switch (f) {
    case FinishState::Complete: return "complete";
    case FinishState::Truncated: return "truncated";
    case FinishState::Refused: return "refused";
  }
  return "complete";
}

Gateway::Gateway(std::shared_ptr<Backend> backend, GatewayOptions options)
    : backend_(std::move(backend)), options_(std::move(options)) {
  if (!options_.now_ms) options_.now_ms = steady_now_ms;
  if (!options_.sleep_ms)
    options_.sleep_ms = [](int ms) { std::this_thread::sleep_for(std::chrono::milliseconds(ms)); };
  if (options_.max_in_flight < 1) options_.max_in_flight = 1;
}

void Gateway::throttle() {
  if (options_.requests_per_minute <= 0) return;
  const auto interval =
      static_cast<std::int64_t>(std::llround(60000.0 / options_.requests_per_minute));
  std::int64_t wait = 0;
  {
    std::lock_guard lock(mutex_);
    const std::int64_t now = options_.now_ms();
    const std::int64_t slot = std::max(now, next_dispatch_ms_);
    wait = slot - now;
    if (options_.schedule_deadline_ms && wait > *options_.schedule_deadline_ms)
      raise(Errc::RateLimited, "next request slot is " + std::to_string(wait) +
                                   " ms away, beyond the scheduling deadline");
    next_dispatch_ms_ = slot + interval;
  }
  if (wait > 0) options_.sleep_ms(static_cast<int>(wait));
}

SessionResponse Gateway::submit(const SessionRequest& request) {
  for (const auto& attachment : request.attachments) {
    if (attachment.png.empty())
      raise(Errc::InvalidRequest, "request " + request.request_id + " has an empty attachment");
    if (attachment.png.size() > options_.max_attachment_bytes)
      raise(Errc::InvalidRequest, "attachment exceeds backend size limit");
  }
  if (request.prompt_text.empty())
    raise(Errc::InvalidRequest, "request " + request.request_id + " has no prompt text");

  {
    std::unique_lock lock(mutex_);
    slot_free_.wait(lock, [&] { return in_flight_ < options_.max_in_flight; });
    ++in_flight_;
  }
  struct SlotGuard {
    Gateway* g;
    ~SlotGuard() {
      {
        std::lock_guard lock(g->mutex_);
        --g->in_flight_;
      }
      g->slot_free_.notify_one();
    }
  } guard{this};

  const std::int64_t started = options_.now_ms();
  int attempts = 0;
  std::int64_t slept_total = 0;
  for (;;) {
    ++attempts;
    throttle();
    try {
      SessionResponse response = backend_->invoke(request);
      response.attempts = attempts;
      response.backend = backend_->name();
      response.latency_ms = static_cast<int>(options_.now_ms() - started);
      return response;
    } catch (const Error& e) {
      if (!transient(e.code()) || attempts >= options_.max_attempts) throw;
      std::int64_t delay = options_.base_delay_ms;
      for (int i = 1; i < attempts; ++i) delay = std::min<std::int64_t>(delay * 2, options_.max_delay_ms);
      delay = std::min<std::int64_t>(delay, options_.max_delay_ms);
      const std::int64_t remaining = options_.total_delay_ceiling_ms - slept_total;
      if (remaining <= 0) throw;
      delay = std::min(delay, remaining);
      options_.sleep_ms(static_cast<int>(delay));
      slept_total += delay;
    }
  }
}

RemoteBackend::RemoteBackend(RemoteOptions options) : options_(std::move(options)) {
  if (options_.endpoint_url.empty()) raise(Errc::InvalidConfig, "remote backend needs an endpoint URL");
  if (options_.model.empty()) raise(Errc::InvalidConfig, "remote backend needs a model name");
}

SessionResponse RemoteBackend::invoke(const SessionRequest& request) {
  const char* key = std::getenv(options_.api_key_env.c_str());
  if (key == nullptr || *key == '\0')
    raise(Errc::InvalidConfig, "credential environment variable " + options_.api_key_env +
                                   " is not set");

  json content = json::array();
  content.push_back({{"type", "text"}, {"text", request.prompt_text}});
  for (const auto& attachment : request.attachments) {
    content.push_back(
        {{"type", "image_url"},
         {"image_url", {{"url", "data:image/png;base64," + base64_encode(attachment.png)}}}});
  }
  const json body = {
      {"model", options_.model},
      {"temperature", request.decoding.temperature},
      {"top_p", request.decoding.top_p},
      {"max_tokens", request.decoding.max_output_tokens},
      {"messages", json::array({json{{"role", "user"}, {"content", content}}})},
  };

  const ParsedUrl url = parse_url(options_.endpoint_url);
  httplib::Client client(url.host_port);
  client.set_connection_timeout(options_.timeout_sec);
  client.set_read_timeout(options_.timeout_sec);
  client.set_write_timeout(options_.timeout_sec);
  const httplib::Headers headers = {{"Authorization", std::string("Bearer ") + key}};

  auto result = client.Post(url.path, headers, body.dump(), "application/json");
  if (!result)
    raise(Errc::TransportError,
          "request " + request.request_id + ": " + httplib::to_string(result.error()));
  if (result->status == 429)
    raise(Errc::RateLimited, "request " + request.request_id + ": HTTP 429");
  if (result->status == 408 || result->status >= 500)
    raise(Errc::TransportError,
          "request " + request.request_id + ": HTTP " + std::to_string(result->status));
  if (result->status != 200)
    raise(Errc::InvalidRequest,
          "request " + request.request_id + ": HTTP " + std::to_string(result->status) + " " +
              result->body.substr(0, 200));

  json parsed;
  try {
    parsed = json::parse(result->body);
  } catch (const json::exception& e) {
    raise(Errc::TransportError, "malformed response body: " + std::string(e.what()));
  }
  if (!parsed.contains("choices") || parsed["choices"].empty())
    raise(Errc::TransportError, "response carries no choices");
  const auto& choice = parsed["choices"][0];

  SessionResponse response;
  response.text = choice.value("message", json::object()).value("content", "");
  const std::string finish = choice.value("finish_reason", "stop");
  if (finish == "length") {
    response.finish_state = FinishState::Truncated;
  } else if (finish == "content_filter") {
    response.finish_state = FinishState::Refused;
  } else {
    response.finish_state = FinishState::Complete;
  }
  if (response.finish_state == FinishState::Complete && response.text.empty())
    raise(Errc::TransportError, "complete response with empty text");
  if (parsed.contains("usage")) {
    const auto& usage = parsed["usage"];
    if (usage.contains("prompt_tokens")) response.prompt_tokens = usage["prompt_tokens"].get<int>();
    if (usage.contains("completion_tokens"))
      response.completion_tokens = usage["completion_tokens"].get<int>();
  }
  return response;
}

ScriptedBackend::ScriptedBackend(std::filesystem::path fixture_dir) : dir_(std::move(fixture_dir)) {
  if (!std::filesystem::is_directory(dir_))
    raise(Errc::InvalidConfig, "scripted backend fixture directory missing: " + dir_.string());
}

SessionResponse ScriptedBackend::invoke(const SessionRequest& request) {
  const auto path = dir_ / (request.request_id + ".txt");
  if (!std::filesystem::exists(path))
    raise(Errc::InvalidRequest, "no fixture for request_id " + request.request_id + " under " +
                                    dir_.string());
  SessionResponse response;
  response.text = textx::read_text_file(path.string());
  response.finish_state = FinishState::Complete;
  return response;
}

OracleBackend::OracleBackend(OracleScript script, assess::Rubric rubric)
    : script_(std::move(script)), rubric_(std::move(rubric)) {
  validate_script(script_);
}

SessionResponse OracleBackend::invoke(const SessionRequest& request) {
  SessionResponse response;
  response.text = oracle_generate(request.case_ids, script_, rubric_);
  response.finish_state = FinishState::Complete;
  return response;
}

}  // namespace nerif::vlm
