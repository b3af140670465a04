#pragma once

#include <stdexcept>
#include <string>

namespace nerif {

/// Failure codes shared across the library. Operations that report
/// findings instead of failing (rubric validation, sheet verification,
/// response parsing) do not throw; everything else raises Error.
enum class Errc {
  // assessment
  InvalidVerdictSet,
  AmbiguousLevel,
  // dataset
  MissingImage,
  UnparsableLabel,
  DuplicateCaseId,
  InsufficientClassCount,
  BadManifest,
  // prompt
  EmptyContext,
  EmptyRubric,
  MissingTemplate,
  BadTemplate,
  // sheet
  UndecodableImage,
  BatchTooLarge,
  InvalidTask,
  // gateway
  InvalidRequest,
  TransportError,
  RateLimited,
  ContentRefused,
  Truncated,
  UnknownCase,
  // metrics
  EmptyInput,
  InsufficientItems,
  // orchestrator
  IncompleteRun,
  PersistenceError,
  InvalidConfig,
};

const char* errc_name(Errc c) noexcept;

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& message);
  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

[[noreturn]] void raise(Errc code, const std::string& message);

}  // namespace nerif
