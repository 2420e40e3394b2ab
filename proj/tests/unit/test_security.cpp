#include <gtest/gtest.h>

#include <fstream>

#include <nlohmann/json.hpp>

#include "edgetb/common/checksum.hpp"
#include "edgetb/common/error.hpp"
#include "edgetb/security/posture.hpp"
#include "edgetb/security/token.hpp"

namespace edgetb::security {
namespace {

using nlohmann::json;

json vectors() {
  std::ifstream in(std::string(EDGETB_FIXTURES) + "/token_vectors.json");
  return json::parse(in);
}

struct Keys {
  SigningKey hq = SigningKey::from_hex("hq", vectors()["keys"]["hq"]["seed_hex"].get<std::string>());
  SigningKey relay =
      SigningKey::from_hex("relay", vectors()["keys"]["relay"]["seed_hex"].get<std::string>());
  TrustRoots roots{{"hq", hq.public_key()}};
};

TEST(Token, PublicKeysMatchReference) {
  const json v = vectors();
  Keys k;
  EXPECT_EQ(to_hex(k.hq.public_key()), v["keys"]["hq"]["public_hex"]);
  EXPECT_EQ(to_hex(k.relay.public_key()), v["keys"]["relay"]["public_hex"]);
  EXPECT_EQ(public_key_from_hex(v["keys"]["hq"]["public_hex"].get<std::string>()), k.hq.public_key());
}

TEST(Token, MatchesIndependentVectors) {
  const json v = vectors();
  Keys k;
  TrustRoots roots{{"hq", k.hq.public_key()}, {"relay", k.relay.public_key()}};
  ASSERT_FALSE(v["tokens"].empty());
  for (const auto& t : v["tokens"]) {
    const SigningKey& key = t["issuer"] == "hq" ? k.hq : k.relay;
    const auto token = issue_token(key, roots, t["subject"], t["rights"].get<std::set<std::string>>(),
                                   t["issued_at"], t["expires_at"]);
    EXPECT_EQ(to_hex(canonical_body(token)), t["body_hex"]);
    EXPECT_EQ(token_id(token), t["token_id"]);
    EXPECT_EQ(to_hex(token.signature), t["signature_hex"]);
    EXPECT_EQ(to_hex(encode_token(token)), t["encoded_hex"]);
    EXPECT_EQ(decode_token(encode_token(token)), token);
    EXPECT_FALSE(verify_token(token, roots, {}, t["issued_at"]).has_value());
  }
}

TEST(Token, ValidWithinLifetime) {
  Keys k;
  const auto t = issue_token(k.hq, k.roots, "n2", {"publish:alerts"}, 0, 60'000);
  EXPECT_FALSE(verify_token(t, k.roots, {}, 1000).has_value());
  EXPECT_FALSE(verify_token(t, k.roots, {}, 60'000).has_value());
  EXPECT_EQ(verify_token(t, k.roots, {}, 60'001), Reject::Expired);
}

TEST(Token, TamperedRightsBadSignature) {
  Keys k;
  auto t = issue_token(k.hq, k.roots, "n2", {"publish:alerts"}, 0, 60'000);
  t.rights.insert("critical");
  EXPECT_EQ(verify_token(t, k.roots, {}, 10), Reject::BadSignature);
}

TEST(Token, EveryWireBitFlipFailsVerificationOrDecode) {
  Keys k;
  const auto t = issue_token(k.hq, k.roots, "n2", {"publish:alerts"}, 0, 60'000);
  const Bytes wire = encode_token(t);
  for (std::size_t bit = 0; bit < wire.size() * 8; ++bit) {
    Bytes c = wire;
    c[bit / 8] ^= static_cast<std::uint8_t>(1u << (bit % 8));
    try {
      const auto d = decode_token(c);
      ASSERT_TRUE(verify_token(d, k.roots, {}, 10).has_value()) << "bit " << bit;
    } catch (const Error&) {
    }
  }
}

TEST(Token, RevokedAfterRevocation) {
  Keys k;
  const auto t = issue_token(k.hq, k.roots, "n2", {"publish:alerts"}, 0, 60'000);
  RevocationSet rev;
  EXPECT_TRUE(rev.add(token_id(t)));
  EXPECT_FALSE(rev.add(token_id(t)));
  EXPECT_EQ(verify_token(t, k.roots, rev, 10), Reject::Revoked);
}

TEST(Token, UnknownIssuer) {
  Keys k;
  TrustRoots both{{"hq", k.hq.public_key()}, {"relay", k.relay.public_key()}};
  const auto t = issue_token(k.relay, both, "n2", {}, 0, 10);
  EXPECT_EQ(verify_token(t, k.roots, {}, 0), Reject::UnknownIssuer);
  EXPECT_THROW(issue_token(k.relay, k.roots, "n2", {}, 0, 10), Error);
}

TEST(Token, IssueRejectsEmptyLifetime) {
  Keys k;
  EXPECT_THROW(issue_token(k.hq, k.roots, "n", {}, 10, 10), Error);
}

TEST(Token, Grants) {
  CapabilityToken t;
  t.rights = {"publish:*", "critical"};
  EXPECT_TRUE(t.grants("publish:alerts"));
  EXPECT_TRUE(t.grants("critical"));
  EXPECT_FALSE(t.grants("subscribe:alerts"));
}

TEST(Posture, ThreatRaisesLockdown) {
  const SecurityPosture p = apply_posture({}, ThreatTrigger{true}, 50);
  EXPECT_EQ(p.level, PostureLevel::Lockdown);
  EXPECT_EQ(p.changed_at, 50);
}

TEST(Posture, ClearingThreatKeepsLevel) {
  SecurityPosture p;
  p.level = PostureLevel::Lockdown;
  EXPECT_EQ(apply_posture(p, ThreatTrigger{false}, 10).level, PostureLevel::Lockdown);
}

TEST(Posture, OperatorSetsAnyLevel) {
  SecurityPosture p;
  p.level = PostureLevel::Lockdown;
  EXPECT_EQ(apply_posture(p, OperatorTrigger{PostureLevel::Normal}, 10).level, PostureLevel::Normal);
  EXPECT_EQ(apply_posture(p, OperatorTrigger{PostureLevel::Elevated}, 10).level, PostureLevel::Elevated);
}

TEST(Posture, ParseTriggers) {
  EXPECT_TRUE(std::holds_alternative<ThreatTrigger>(parse_posture_trigger("threat")));
  EXPECT_FALSE(std::get<ThreatTrigger>(parse_posture_trigger("threat_clear")).threat);
  EXPECT_EQ(std::get<OperatorTrigger>(parse_posture_trigger("operator:elevated")).level,
            PostureLevel::Elevated);
  EXPECT_THROW(parse_posture_trigger("panic"), Error);
}

TEST(Posture, EgressTruthTable) {
  for (int mask = 0; mask < 8; ++mask) {
    const EgressRequest r{(mask & 1) != 0, (mask & 2) != 0, (mask & 4) != 0};
    EXPECT_TRUE(egress_permitted(PostureLevel::Normal, r));
    EXPECT_EQ(egress_permitted(PostureLevel::Elevated, r), r.holds_publish_right);
    EXPECT_EQ(egress_permitted(PostureLevel::Lockdown, r), r.topic_critical && r.holds_critical_right);
  }
}

}  // namespace
}  // namespace edgetb::security
