#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <condition_variable>
#include <optional>
#include <string>
#include <vector>

#include "nerif/assessment.hpp"
#include "nerif/dataset.hpp"
#include "nerif/prompt.hpp"

namespace nerif::vlm {

/// Greedy decoding per the experiment protocol: temperature 0.0 with
/// top_p 0.01. max_output_tokens has no reported value; 1800 is a working
/// default.
struct DecodingParams {
  double temperature = 0.0;
  double top_p = 0.01;
  int max_output_tokens = 1800;
};

struct Attachment {
  prompt::AttachmentRole role = prompt::AttachmentRole::ReferenceSheet;
  std::vector<std::uint8_t> png;
};

/// One single-turn session. The two-attachment limit is structural: there is
/// no way to build a request with a third image.
struct SessionRequest {
  std::string prompt_text;
  std::array<Attachment, 2> attachments;  // reference sheet, then test sheet
  DecodingParams decoding;
  std::string request_id;
  std::vector<std::string> case_ids;  // batch bookkeeping; offline backends key on it
};

enum class FinishState {
  Complete,
  Truncated,
  Refused,
};

std::string_view finish_name(FinishState f);

struct SessionResponse {
  std::string text;
  int latency_ms = 0;
  std::optional<int> prompt_tokens;
  std::optional<int> completion_tokens;
  std::string backend;
  FinishState finish_state = FinishState::Complete;
  int attempts = 1;  // transport attempts spent inside submit()
};

/// One transport attempt against a scoring model; no retry, no throttling.
/// Throws Error(TransportError) / Error(RateLimited) for transient failures
/// and other codes for permanent ones. Service-level refusals and
/// truncations come back as responses, not exceptions, so they can be
/// persisted as evidence.
class Backend {
 public:
  virtual ~Backend() = default;
  virtual std::string name() const = 0;
  virtual SessionResponse invoke(const SessionRequest& request) = 0;
};

struct GatewayOptions {
  int max_attempts = 4;
  int base_delay_ms = 500;
  int max_delay_ms = 8000;
  int total_delay_ceiling_ms = 30000;  // retry sleeps never exceed this in sum
  double requests_per_minute = 20.0;   // <= 0 disables throttling
  int max_in_flight = 1;
  std::optional<int> schedule_deadline_ms;  // RateLimited when the next slot is further out
  std::size_t max_attachment_bytes = 20u * 1024u * 1024u;

  // Test seams; null means steady_clock and this_thread::sleep_for.
  std::function<std::int64_t()> now_ms;
  std::function<void(int)> sleep_ms;
};

/// Session front door: enforces the request invariants, spaces dispatches to
/// the configured requests-per-minute, caps concurrent sessions, and retries
/// transient failures with exponential backoff. Each submit() is one fresh
/// stateless session; nothing carries over between calls.
class Gateway {
 public:
  Gateway(std::shared_ptr<Backend> backend, GatewayOptions options = {});

  SessionResponse submit(const SessionRequest& request);

  const GatewayOptions& options() const { return options_; }

 private:
  void throttle();

  std::shared_ptr<Backend> backend_;
  GatewayOptions options_;
  std::mutex mutex_;
  std::condition_variable slot_free_;
  int in_flight_ = 0;
  std::int64_t next_dispatch_ms_ = 0;
};

/// Chat-completions style web API: JSON body with the prompt text and the
/// two PNG attachments as base64 data URLs. Credential comes from the
/// NERIF_API_KEY environment variable.
struct RemoteOptions {
  std::string endpoint_url;  // e.g. https://host/v1/chat/completions
  std::string model;
  std::string api_key_env = "NERIF_API_KEY";
  int timeout_sec = 120;
};

class RemoteBackend : public Backend {
 public:
  explicit RemoteBackend(RemoteOptions options);
  std::string name() const override { return "remote:" + options_.model; }
  SessionResponse invoke(const SessionRequest& request) override;

 private:
  RemoteOptions options_;
};

/// Replays canned transcripts from a directory of <request_id>.txt files.
class ScriptedBackend : public Backend {
 public:
  explicit ScriptedBackend(std::filesystem::path fixture_dir);
  std::string name() const override { return "scripted"; }
  SessionResponse invoke(const SessionRequest& request) override;

 private:
  std::filesystem::path dir_;
};

/// Ground-truth mock: holds hidden labels/verdicts per case and emits
/// NERIF-shaped transcripts, optionally corrupted through a row-stochastic
/// noise matrix so agreement statistics can be driven to a target.
struct OracleScript {
  std::map<std::string, assess::ProficiencyLevel> hidden_labels;
  std::map<std::string, assess::VerdictMap> hidden_verdicts;  // sparse; synthesized if absent
  std::optional<std::array<std::array<double, 3>, 3>> noise_matrix;
  std::uint64_t seed = 0;
};

/// Throws InvalidConfig unless noise rows sum to 1 within 1e-9.
void validate_script(const OracleScript& script);

/// Deterministic transcript for a batch: rubric-retrieval stub, one echoed
/// example rationale, then one block per drawing with component verdict
/// sentences, a summary, and a final level line. The emitted level is the
/// hidden label, or a draw from the noise row keyed by (seed, case_id); the
/// verdicts are minimally adjusted so they classify to the emitted level.
std::string oracle_generate(const std::vector<std::string>& case_ids, const OracleScript& script,
                            const assess::Rubric& rubric);
std::string oracle_generate(const data::Batch& batch, const OracleScript& script,
                            const assess::Rubric& rubric);

class OracleBackend : public Backend {
 public:
  OracleBackend(OracleScript script, assess::Rubric rubric);
  std::string name() const override { return "oracle"; }
  SessionResponse invoke(const SessionRequest& request) override;

 private:
  OracleScript script_;
  assess::Rubric rubric_;
};

}  // namespace nerif::vlm
