#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace edgetb {

// Every named failure mode across the testbed. Operations throw `Error`
// carrying one of these; decision outcomes are returned as values instead.
enum class Errc {
  UnknownNode,
  UnknownLink,
  OverlappingGroups,
  InvalidArgument,
  NodeDown,
  Oversize,
  BadMagic,
  BadVersion,
  BadChecksum,
  Truncated,
  Malformed,
  UnknownTopic,
  KeyMismatch,
  LinkDown,
  UnknownIssuer,
  UnknownTrigger,
  EmptyMembership,
  Infeasible,
  DuplicateId,
  UnknownCodec,
  IncompleteCodec,
  Unrepresentable,
  ParseError,
  ValidationError,
};

std::string_view to_string(Errc code);

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& detail)
      : std::runtime_error(std::string(to_string(code)) +
                           (detail.empty() ? "" : ": " + detail)),
        code_(code),
        detail_(detail) {}

  Errc code() const noexcept { return code_; }
  const std::string& detail() const noexcept { return detail_; }

 private:
  Errc code_;
  std::string detail_;
};

}  // namespace edgetb
