#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace lexboost {

enum class ErrorCode {
  // text_index
  EmptyCorpus,
  DuplicateId,
  EmptyDocument,
  CorruptIndex,
  VersionMismatch,
  // scorers
  InvalidParameter,
  UnknownModel,
  // corpus_graph
  MissingEmbedding,
  DimensionMismatch,
  ZeroVector,
  CorpusTooSmall,
  CorruptGraph,
  // fusion
  NeighborCountExceedsGraph,
  UnknownDocument,
  // evaluation
  MalformedInput,
  LengthMismatch,
  // generic
  Io,
};

std::string_view to_string(ErrorCode code) noexcept;

/// Error raised by every lexboost module. The code identifies the failure
/// class so callers (and tests) can distinguish e.g. a truncated index file
/// from a version mismatch without parsing the message.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace lexboost
