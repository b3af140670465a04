#include "nerif/error.hpp"

namespace nerif {

const char* errc_name(Errc c) noexcept {
  switch (c) {
    case Errc::InvalidVerdictSet: return "InvalidVerdictSet";
    case Errc::AmbiguousLevel: return "AmbiguousLevel";
    case Errc::MissingImage: return "MissingImage";
    case Errc::UnparsableLabel: return "UnparsableLabel";
    case Errc::DuplicateCaseId: return "DuplicateCaseId";
    case Errc::InsufficientClassCount: return "InsufficientClassCount";
    case Errc::BadManifest: return "BadManifest";
    case Errc::EmptyContext: return "EmptyContext";
    case Errc::EmptyRubric: return "EmptyRubric";
    case Errc::MissingTemplate: return "MissingTemplate";
    case Errc::BadTemplate: return "BadTemplate";
    case Errc::UndecodableImage: return "UndecodableImage";
    case Errc::BatchTooLarge: return "BatchTooLarge";
    case Errc::InvalidTask: return "InvalidTask";
    case Errc::InvalidRequest: return "InvalidRequest";
    case Errc::TransportError: return "TransportError";
    case Errc::RateLimited: return "RateLimited";
    case Errc::ContentRefused: return "ContentRefused";
    case Errc::Truncated: return "Truncated";
    case Errc::UnknownCase: return "UnknownCase";
    case Errc::EmptyInput: return "EmptyInput";
    case Errc::InsufficientItems: return "InsufficientItems";
    case Errc::IncompleteRun: return "IncompleteRun";
    case Errc::PersistenceError: return "PersistenceError";
    case Errc::InvalidConfig: return "InvalidConfig";
  }
  return "UnknownError";
}

Error::Error(Errc code, const std::string& message)
    : std::runtime_error(std::string(errc_name(code)) + ": " + message), code_(code) {}

void raise(Errc code, const std::string& message) { throw Error(code, message); }

}  // namespace nerif
