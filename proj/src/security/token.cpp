#include "edgetb/security/token.hpp"

#include <sodium.h>

#include "edgetb/common/checksum.hpp"
#include "edgetb/common/error.hpp"
#include "edgetb/common/varint.hpp"

namespace edgetb::security {

namespace {

constexpr std::uint8_t kBodyVersion = 0x01;
constexpr std::size_t kSignatureSize = crypto_sign_BYTES;

void ensure_sodium() {
  static const int ok = sodium_init();
  if (ok < 0) throw Error(Errc::InvalidArgument, "libsodium init failed");
}

template <std::size_t N>
std::array<std::uint8_t, N> from_hex(std::string_view hex) {
  std::array<std::uint8_t, N> out{};
  if (hex.size() != 2 * N) throw Error(Errc::InvalidArgument, "expected hex of length " + std::to_string(2 * N));
  auto nibble = [](char c) -> int {
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    if (c >= 'A' && c <= 'F') return c - 'A' + 10;
    throw Error(Errc::InvalidArgument, "bad hex digit");
  };
  for (std::size_t i = 0; i < N; ++i) {
    out[i] = static_cast<std::uint8_t>(nibble(hex[2 * i]) << 4 | nibble(hex[2 * i + 1]));
  }
  return out;
}

std::string get_str(std::span<const std::uint8_t> in, std::size_t& pos) {
  const auto len = get_varint(in, pos);
  if (!len || *len > in.size() - pos) throw Error(Errc::Truncated, "token string");
  std::string s(in.begin() + pos, in.begin() + pos + *len);
  pos += *len;
  return s;
}

std::uint64_t get_u64(std::span<const std::uint8_t> in, std::size_t& pos) {
  const auto v = get_varint(in, pos);
  if (!v) throw Error(Errc::Truncated, "token field");
  return *v;
}

}  // namespace

SigningKey::SigningKey(std::string id, const Seed& seed) : id_(std::move(id)) {
  ensure_sodium();
  crypto_sign_seed_keypair(public_.data(), secret_.data(), seed.data());
}

SigningKey SigningKey::from_hex(std::string id, std::string_view seed_hex) {
  return SigningKey(std::move(id), security::from_hex<32>(seed_hex));
}

Bytes SigningKey::sign(std::span<const std::uint8_t> message) const {
  Bytes sig(kSignatureSize);
  crypto_sign_detached(sig.data(), nullptr, message.data(), message.size(), secret_.data());
  return sig;
}

PublicKey public_key_from_hex(std::string_view hex) { return from_hex<32>(hex); }

bool CapabilityToken::grants(std::string_view right) const {
  if (rights.count(std::string(right))) return true;
  return right.starts_with("publish:") && rights.count("publish:*") > 0;
}

Bytes canonical_body(const CapabilityToken& token) {
  Bytes out;
  out.push_back(kBodyVersion);
  put_string(out, token.subject);
  put_varint(out, token.rights.size());
  for (const std::string& r : token.rights) put_string(out, r);  // std::set is sorted
  put_varint(out, static_cast<std::uint64_t>(token.issued_at));
  put_varint(out, static_cast<std::uint64_t>(token.expires_at));
  put_string(out, token.issuer);
  return out;
}

std::string token_id(const CapabilityToken& token) {
  return sha256_hex(canonical_body(token)).substr(0, 32);
}

Bytes encode_token(const CapabilityToken& token) {
  Bytes out = canonical_body(token);
  put_bytes(out, token.signature);
  return out;
}

CapabilityToken decode_token(std::span<const std::uint8_t> in) {
  if (in.empty()) throw Error(Errc::Truncated, "empty token");
  if (in[0] != kBodyVersion) throw Error(Errc::BadVersion, std::to_string(in[0]));
  std::size_t pos = 1;
  CapabilityToken t;
  t.subject = get_str(in, pos);
  const std::uint64_t n = get_u64(in, pos);
  if (n > in.size()) throw Error(Errc::Truncated, "rights");
  for (std::uint64_t i = 0; i < n; ++i) t.rights.insert(get_str(in, pos));
  t.issued_at = static_cast<SimTime>(get_u64(in, pos));
  t.expires_at = static_cast<SimTime>(get_u64(in, pos));
  t.issuer = get_str(in, pos);
  if (in.size() - pos != kSignatureSize) throw Error(Errc::Truncated, "signature");
  t.signature.assign(in.begin() + pos, in.end());
  return t;
}

CapabilityToken issue_token(const SigningKey& key, const TrustRoots& roots,
                            const std::string& subject, std::set<std::string> rights,
                            SimTime issued_at, SimTime expires_at) {
  auto it = roots.find(key.id());
  if (it == roots.end() || it->second != key.public_key()) {
    throw Error(Errc::UnknownIssuer, key.id());
  }
  if (expires_at <= issued_at) throw Error(Errc::InvalidArgument, "expires_at <= issued_at");
  CapabilityToken t;
  t.subject = subject;
  t.rights = std::move(rights);
  t.issued_at = issued_at;
  t.expires_at = expires_at;
  t.issuer = key.id();
  t.signature = key.sign(canonical_body(t));
  return t;
}

std::string_view to_string(Reject reason) {
  switch (reason) {
    case Reject::BadSignature: return "BadSignature";
    case Reject::Expired: return "Expired";
    case Reject::Revoked: return "Revoked";
    case Reject::UnknownIssuer: return "UnknownIssuer";
  }
  return "?";
}

std::optional<Reject> verify_token(const CapabilityToken& token, const TrustRoots& roots,
                                   const RevocationSet& revocations, SimTime now) {
  ensure_sodium();
  auto it = roots.find(token.issuer);
  if (it == roots.end()) return Reject::UnknownIssuer;
  const Bytes body = canonical_body(token);
  if (token.signature.size() != kSignatureSize ||
      crypto_sign_verify_detached(token.signature.data(), body.data(), body.size(),
                                  it->second.data()) != 0) {
    return Reject::BadSignature;
  }
  if (now > token.expires_at) return Reject::Expired;
  if (revocations.contains(token_id(token))) return Reject::Revoked;
  return std::nullopt;
}

}  // namespace edgetb::security
