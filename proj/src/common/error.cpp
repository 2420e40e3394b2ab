#include "edgetb/common/error.hpp"

namespace edgetb {

std::string_view to_string(Errc code) {
  switch (code) {
    case Errc::UnknownNode: return "UnknownNode";
    case Errc::UnknownLink: return "UnknownLink";
    case Errc::OverlappingGroups: return "OverlappingGroups";
    case Errc::InvalidArgument: return "InvalidArgument";
    case Errc::NodeDown: return "NodeDown";
    case Errc::Oversize: return "Oversize";
    case Errc::BadMagic: return "BadMagic";
    case Errc::BadVersion: return "BadVersion";
    case Errc::BadChecksum: return "BadChecksum";
    case Errc::Truncated: return "Truncated";
    case Errc::Malformed: return "Malformed";
    case Errc::UnknownTopic: return "UnknownTopic";
    case Errc::KeyMismatch: return "KeyMismatch";
    case Errc::LinkDown: return "LinkDown";
    case Errc::UnknownIssuer: return "UnknownIssuer";
    case Errc::UnknownTrigger: return "UnknownTrigger";
    case Errc::EmptyMembership: return "EmptyMembership";
    case Errc::Infeasible: return "Infeasible";
    case Errc::DuplicateId: return "DuplicateId";
    case Errc::UnknownCodec: return "UnknownCodec";
    case Errc::IncompleteCodec: return "IncompleteCodec";
    case Errc::Unrepresentable: return "Unrepresentable";
    case Errc::ParseError: return "ParseError";
    case Errc::ValidationError: return "ValidationError";
  }
  return "Unknown";
}

}  // namespace edgetb
