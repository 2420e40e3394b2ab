#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <variant>

#include "edgetb/common/types.hpp"

namespace edgetb::security {

using PublicKey = std::array<std::uint8_t, 32>;
using Seed = std::array<std::uint8_t, 32>;

// Ed25519 signing key derived deterministically from a 32-byte seed.
class SigningKey {
 public:
  SigningKey(std::string id, const Seed& seed);
  static SigningKey from_hex(std::string id, std::string_view seed_hex);

  const std::string& id() const { return id_; }
  const PublicKey& public_key() const { return public_; }
  Bytes sign(std::span<const std::uint8_t> message) const;

 private:
  std::string id_;
  PublicKey public_{};
  std::array<std::uint8_t, 64> secret_{};
};

// key id -> public key. Configured at scenario start; verification never
// needs anything else.
using TrustRoots = std::map<std::string, PublicKey>;

struct CapabilityToken {
  std::string subject;
  std::set<std::string> rights;
  SimTime issued_at = 0;
  SimTime expires_at = 0;
  std::string issuer;
  Bytes signature;

  // Exact match, or "publish:*" covering every "publish:<topic>".
  bool grants(std::string_view right) const;
  bool operator==(const CapabilityToken&) const = default;
};

// Canonical body: 0x01, subject, rights count, rights (sorted), issued_at,
// expires_at, issuer. Strings are varint length + UTF-8; times are varints.
Bytes canonical_body(const CapabilityToken& token);

// Token id: hex of the first 16 bytes of SHA-256(body).
std::string token_id(const CapabilityToken& token);

// Wire form: canonical body followed by the 64-byte signature.
Bytes encode_token(const CapabilityToken& token);
CapabilityToken decode_token(std::span<const std::uint8_t> bytes);

PublicKey public_key_from_hex(std::string_view hex);

CapabilityToken issue_token(const SigningKey& key, const TrustRoots& roots,
                            const std::string& subject, std::set<std::string> rights,
                            SimTime issued_at, SimTime expires_at);

enum class Reject { BadSignature, Expired, Revoked, UnknownIssuer };

std::string_view to_string(Reject reason);

// Grow-only within a run.
class RevocationSet {
 public:
  bool add(const std::string& token_id) { return ids_.insert(token_id).second; }
  bool contains(const std::string& token_id) const { return ids_.count(token_id) > 0; }
  std::size_t size() const { return ids_.size(); }
  const std::set<std::string>& ids() const { return ids_; }

 private:
  std::set<std::string> ids_;
};

// Pure and offline: signature against trust roots, expiry, local revocations.
std::optional<Reject> verify_token(const CapabilityToken& token, const TrustRoots& roots,
                                   const RevocationSet& revocations, SimTime now);

}  // namespace edgetb::security
