// SPDX-License-Identifier: Apache-2.0
#include "bagpilot/error.hpp"

namespace bagpilot {

std::string_view errc_name(Errc code) noexcept {
  switch (code) {
    case Errc::NotABag: return "NotABag";
    case Errc::Truncated: return "Truncated";
    case Errc::UnsupportedCompression: return "UnsupportedCompression";
    case Errc::CorruptRecord: return "CorruptRecord";
    case Errc::UnsortedInput: return "UnsortedInput";
    case Errc::UnknownConnection: return "UnknownConnection";
    case Errc::IoFailure: return "IoFailure";
    case Errc::UnknownFieldType: return "UnknownFieldType";
    case Errc::UnresolvedNestedType: return "UnresolvedNestedType";
    case Errc::CyclicType: return "CyclicType";
    case Errc::DuplicateField: return "DuplicateField";
    case Errc::ShortPayload: return "ShortPayload";
    case Errc::TrailingBytes: return "TrailingBytes";
    case Errc::ShapeMismatch: return "ShapeMismatch";
    case Errc::NoSuchField: return "NoSuchField";
    case Errc::PathNotFound: return "PathNotFound";
    case Errc::NoBagsInDirectory: return "NoBagsInDirectory";
    case Errc::NoPathConfigured: return "NoPathConfigured";
    case Errc::UnknownTopic: return "UnknownTopic";
    case Errc::AmbiguousTopic: return "AmbiguousTopic";
    case Errc::NoMessageWithinTolerance: return "NoMessageWithinTolerance";
    case Errc::NoMessagesInWindow: return "NoMessagesInWindow";
    case Errc::InvalidRange: return "InvalidRange";
    case Errc::InvalidArgument: return "InvalidArgument";
    case Errc::BadCondition: return "BadCondition";
    case Errc::FieldNotNumeric: return "FieldNotNumeric";
    case Errc::UnsupportedPoseType: return "UnsupportedPoseType";
    case Errc::NoScanNearTime: return "NoScanNearTime";
    case Errc::NoLogTopic: return "NoLogTopic";
    case Errc::NoTfTopic: return "NoTfTopic";
    case Errc::UnsupportedImageEncoding: return "UnsupportedImageEncoding";
    case Errc::SameSourceDest: return "SameSourceDest";
    case Errc::InvalidScenario: return "InvalidScenario";
    case Errc::UnknownRequiredTool: return "UnknownRequiredTool";
    case Errc::MalformedSuite: return "MalformedSuite";
    case Errc::AgentTransport: return "AgentTransport";
  }
  return "Unknown";
}

}  // namespace bagpilot
