#pragma once

#include <stdexcept>
#include <string>

namespace cherry {

enum class ErrorCode {
  kInvalidArgument,
  kIo,
  kIntegrity,
  kDanglingReference,
  kValidation,
  kProvider,
  kDimensionMismatch,
  kContextUnavailable,
  kScorer,
  kProtocol,
  kConvergence,
  kNotFound,
  kConflict,
  kUnauthorized,
  kPrerequisite,
};

const char* error_code_name(ErrorCode code);

// Base for every error raised by the toolkit. The code is what callers
// branch on; the message is for humans.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

#define CHERRY_DEFINE_ERROR(Name, Code)                 \
  class Name : public Error {                           \
   public:                                              \
    explicit Name(const std::string& message)           \
        : Error(ErrorCode::Code, message) {}            \
  };

CHERRY_DEFINE_ERROR(InvalidArgumentError, kInvalidArgument)
CHERRY_DEFINE_ERROR(IoError, kIo)
CHERRY_DEFINE_ERROR(IntegrityError, kIntegrity)
CHERRY_DEFINE_ERROR(DanglingReferenceError, kDanglingReference)
CHERRY_DEFINE_ERROR(ValidationError, kValidation)
CHERRY_DEFINE_ERROR(ProviderError, kProvider)
CHERRY_DEFINE_ERROR(DimensionMismatchError, kDimensionMismatch)
CHERRY_DEFINE_ERROR(ContextUnavailableError, kContextUnavailable)
CHERRY_DEFINE_ERROR(ProtocolError, kProtocol)
CHERRY_DEFINE_ERROR(ConvergenceError, kConvergence)
CHERRY_DEFINE_ERROR(NotFoundError, kNotFound)
CHERRY_DEFINE_ERROR(ConflictError, kConflict)
CHERRY_DEFINE_ERROR(UnauthorizedError, kUnauthorized)
CHERRY_DEFINE_ERROR(PrerequisiteError, kPrerequisite)

#undef CHERRY_DEFINE_ERROR

// Scorer failures keep the raw model output so it can be inspected later.
class ScorerError : public Error {
 public:
  ScorerError(const std::string& message, std::string raw_response = {})
      : Error(ErrorCode::kScorer, message), raw_response_(std::move(raw_response)) {}

  const std::string& raw_response() const noexcept { return raw_response_; }

 private:
  std::string raw_response_;
};

}  // namespace cherry
