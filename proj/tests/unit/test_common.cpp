#include <gtest/gtest.h>

#include <random>

#include "edgetb/common/base64.hpp"
#include "edgetb/common/checksum.hpp"
#include "edgetb/common/varint.hpp"
#include "support.hpp"

namespace edgetb {
namespace {

// Bit-at-a-time reflected CRC-32, written straight from the polynomial.
std::uint32_t crc32_oracle(const Bytes& data) {
  std::uint32_t crc = 0xFFFFFFFFu;
  for (std::uint8_t byte : data) {
    crc ^= byte;
    for (int k = 0; k < 8; ++k) crc = (crc & 1u) ? (crc >> 1) ^ 0xEDB88320u : crc >> 1;
  }
  return ~crc;
}

Bytes bytes_of(std::string_view s) { return Bytes(s.begin(), s.end()); }

TEST(Crc32, CheckValue) { EXPECT_EQ(crc32(bytes_of("123456789")), 0xCBF43926u); }

TEST(Crc32, MatchesBitwiseOracle) {
  std::mt19937_64 rng(1);
  for (int i = 0; i < 500; ++i) {
    const Bytes data = test::random_bytes(rng, rng() % 300);
    ASSERT_EQ(crc32(data), crc32_oracle(data));
  }
}

TEST(Varint, KnownEncodings) {
  Bytes out;
  put_varint(out, 300);
  EXPECT_EQ(out, (Bytes{0xAC, 0x02}));
  out.clear();
  put_varint(out, 0);
  EXPECT_EQ(out, (Bytes{0x00}));
  out.clear();
  put_varint(out, 127);
  put_varint(out, 128);
  EXPECT_EQ(out, (Bytes{0x7F, 0x80, 0x01}));
}

TEST(Varint, RoundTripAndSize) {
  std::mt19937_64 rng(2);
  for (int i = 0; i < 1000; ++i) {
    const std::uint64_t v = rng() >> (rng() % 64);
    Bytes out;
    put_varint(out, v);
    EXPECT_EQ(out.size(), varint_size(v));
    std::size_t pos = 0;
    ASSERT_EQ(get_varint(out, pos), v);
    EXPECT_EQ(pos, out.size());
  }
}

TEST(Varint, TruncatedAndOverlong) {
  std::size_t pos = 0;
  const Bytes cut{0x80};
  EXPECT_FALSE(get_varint(cut, pos).has_value());
  pos = 0;
  const Bytes overlong(11, 0xFF);
  EXPECT_FALSE(get_varint(overlong, pos).has_value());
}

TEST(Base64, Rfc4648Vectors) {
  const std::pair<const char*, const char*> vectors[] = {
      {"", ""},         {"f", "Zg=="},         {"fo", "Zm8="},        {"foo", "Zm9v"},
      {"foob", "Zm9vYg=="}, {"fooba", "Zm9vYmE="}, {"foobar", "Zm9vYmFy"}};
  for (const auto& [plain, encoded] : vectors) {
    EXPECT_EQ(base64_encode(bytes_of(plain)), encoded);
    EXPECT_EQ(base64_decode(encoded), bytes_of(plain));
  }
}

TEST(Base64, RejectsNonCanonical) {
  EXPECT_FALSE(base64_decode("Zg=").has_value());
  EXPECT_FALSE(base64_decode("Zh==").has_value());
  EXPECT_FALSE(base64_decode("Zm9v!").has_value());
}

TEST(Fnv1a64, ReferenceValues) {
  EXPECT_EQ(fnv1a64(""), 0xcbf29ce484222325ull);
  EXPECT_EQ(fnv1a64("a"), 0xaf63dc4c8601ec8cull);
  EXPECT_EQ(fnv1a64("foobar"), 0x85944171f73967e8ull);
}

TEST(Sha256, EmptyAndAbc) {
  EXPECT_EQ(sha256_hex(std::string_view("")),
            "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  EXPECT_EQ(sha256_hex(std::string_view("abc")),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

}  // namespace
}  // namespace edgetb
