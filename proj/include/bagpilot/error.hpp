// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace bagpilot {

/// Failure kinds shared by every module. The name of the kind is part of the
/// text that reaches MCP clients, so keep the names stable.
enum class Errc {
  // bag-format
  NotABag,
  Truncated,
  UnsupportedCompression,
  CorruptRecord,
  UnsortedInput,
  UnknownConnection,
  IoFailure,
  // message-codec
  UnknownFieldType,
  UnresolvedNestedType,
  CyclicType,
  DuplicateField,
  ShortPayload,
  TrailingBytes,
  ShapeMismatch,
  NoSuchField,
  // bag-store
  PathNotFound,
  NoBagsInDirectory,
  NoPathConfigured,
  UnknownTopic,
  AmbiguousTopic,
  NoMessageWithinTolerance,
  NoMessagesInWindow,
  InvalidRange,
  InvalidArgument,
  BadCondition,
  FieldNotNumeric,
  // analysis
  UnsupportedPoseType,
  NoScanNearTime,
  NoLogTopic,
  NoTfTopic,
  UnsupportedImageEncoding,
  // bag-filter
  SameSourceDest,
  // bag-synth
  InvalidScenario,
  // bench-harness
  UnknownRequiredTool,
  MalformedSuite,
  AgentTransport,
};

std::string_view errc_name(Errc code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  Errc code() const noexcept { return code_; }
  std::string_view code_name() const noexcept { return errc_name(code_); }

 private:
  Errc code_;
};

}  // namespace bagpilot
