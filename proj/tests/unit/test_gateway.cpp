#include <gtest/gtest.h>

#include <random>

#include "edgetb/distrib/frame.hpp"
#include "edgetb/gateway/codec.hpp"
#include "support.hpp"

namespace edgetb::gateway {
namespace {

Bytes bytes_of(std::string_view s) { return Bytes(s.begin(), s.end()); }
std::string str(const Bytes& b) { return std::string(b.begin(), b.end()); }

Errc code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error";
  return Errc::InvalidArgument;
}

TEST(Registry, Preregistered) {
  CodecRegistry r;
  EXPECT_EQ(r.ids(), (std::vector<std::string>{"bin.v1", "text.v1"}));
  EXPECT_EQ(code_of([&] { r.get("xml.v9"); }), Errc::UnknownCodec);
}

TEST(Registry, DuplicateAndIncomplete) {
  CodecRegistry r;
  EXPECT_EQ(code_of([&] { r.register_codec(std::make_shared<TextLineCodec>()); }), Errc::DuplicateId);
  auto partial = std::make_shared<FunctionCodec>(
      "partial", std::set<Field>{Field::Topic, Field::Payload},
      [](const Message&) { return Bytes{}; },
      [](std::span<const std::uint8_t>, std::size_t& c) {
        c = 0;
        return Message{};
      });
  EXPECT_EQ(code_of([&] { r.register_codec(partial); }), Errc::IncompleteCodec);
}

TEST(TextCodec, ReferenceEncoding) {
  TextLineCodec c;
  const Message m{"radar/contacts", 1, bytes_of("hi")};
  EXPECT_EQ(str(c.encode(m)), "radar/contacts|1|aGk=\n");
  EXPECT_EQ(c.decode(bytes_of("radar/contacts|1|aGk=\n")), m);
  EXPECT_EQ(str(c.encode(Message{"", 0, {}})), "|0|\n");
}

TEST(TextCodec, Unrepresentable) {
  TextLineCodec c;
  EXPECT_EQ(code_of([&] { c.encode(Message{"a|b", 0, {}}); }), Errc::Unrepresentable);
  EXPECT_EQ(code_of([&] { c.encode(Message{"a\nb", 0, {}}); }), Errc::Unrepresentable);
}

TEST(TextCodec, MalformedOffsets) {
  TextLineCodec c;
  try {
    c.decode(bytes_of("t|9|AA==\n"));
    FAIL();
  } catch (const CodecError& e) {
    EXPECT_EQ(e.code(), Errc::Malformed);
    EXPECT_EQ(e.offset(), 2u);
  }
  EXPECT_EQ(code_of([&] { c.decode(bytes_of("t|1|AA==")); }), Errc::Truncated);
  EXPECT_EQ(code_of([&] { c.decode(bytes_of("t|1|A*==\n")); }), Errc::Malformed);
}

TEST(BinaryCodec, IsTheFrameFormat) {
  BinaryCodec c;
  const Message m{"x", 3, {1, 2, 3}};
  EXPECT_EQ(c.encode(m), distrib::encode_frame(m));
}

TEST(Translate, RoundTripRandomized) {
  CodecRegistry r;
  std::mt19937_64 rng(51);
  for (int i = 0; i < 1000; ++i) {
    const Message m = test::random_message(rng);
    const Bytes a = r.get("bin.v1").encode(m);
    const Bytes b = translate(r, a, "bin.v1", "text.v1");
    EXPECT_EQ(r.get("text.v1").decode(b), m);
    ASSERT_EQ(translate(r, b, "text.v1", "bin.v1"), a);
  }
}

TEST(Translate, UnknownCodec) {
  CodecRegistry r;
  EXPECT_EQ(code_of([&] { translate(r, Bytes{}, "bin.v1", "nope"); }), Errc::UnknownCodec);
}

TEST(Stream, NInNOutInOrder) {
  CodecRegistry r;
  std::mt19937_64 rng(52);
  Bytes in, expect;
  std::vector<Message> msgs;
  for (int i = 0; i < 300; ++i) {
    msgs.push_back(test::random_message(rng, 64));
    const Bytes a = r.get("text.v1").encode(msgs.back());
    const Bytes b = r.get("bin.v1").encode(msgs.back());
    in.insert(in.end(), a.begin(), a.end());
    expect.insert(expect.end(), b.begin(), b.end());
  }
  const auto out = translate_stream(r, in, "text.v1", "bin.v1");
  EXPECT_EQ(out.messages, 300u);
  EXPECT_EQ(out.output, expect);
}

TEST(Stream, EmptyInput) {
  CodecRegistry r;
  const auto out = translate_stream(r, Bytes{}, "bin.v1", "text.v1");
  EXPECT_EQ(out.messages, 0u);
  EXPECT_TRUE(out.output.empty());
}

TEST(Stream, CorruptionReportsAbsoluteOffsetAndNoOutput) {
  CodecRegistry r;
  const Bytes a = r.get("bin.v1").encode(Message{"one", 0, {1, 2}});
  const Bytes b = r.get("bin.v1").encode(Message{"two", 0, {3, 4}});
  Bytes in = a;
  in.insert(in.end(), b.begin(), b.end());
  in[a.size()] = 0x00;  // magic of the second message
  try {
    translate_stream(r, in, "bin.v1", "text.v1");
    FAIL();
  } catch (const CodecError& e) {
    EXPECT_EQ(e.code(), Errc::BadMagic);
    EXPECT_EQ(e.offset(), a.size());
  }
}

TEST(Stream, TruncatedTailRejected) {
  CodecRegistry r;
  Bytes in = r.get("text.v1").encode(Message{"a", 0, {1}});
  const Bytes tail = bytes_of("b|0|AQ");
  in.insert(in.end(), tail.begin(), tail.end());
  EXPECT_EQ(code_of([&] { translate_stream(r, in, "text.v1", "bin.v1"); }), Errc::Truncated);
}

TEST(FunctionCodecs, UserCodecParticipates) {
  CodecRegistry r;
  // Length-prefixed JSON-free toy: prio byte, topic len, topic, payload len, payload.
  auto toy = std::make_shared<FunctionCodec>(
      "toy.v1", std::set<Field>{Field::Topic, Field::Priority, Field::Payload},
      [](const Message& m) {
        Bytes o{m.priority, static_cast<std::uint8_t>(m.topic.size())};
        o.insert(o.end(), m.topic.begin(), m.topic.end());
        o.push_back(static_cast<std::uint8_t>(m.payload.size()));
        o.insert(o.end(), m.payload.begin(), m.payload.end());
        return o;
      },
      [](std::span<const std::uint8_t> b, std::size_t& c) {
        if (b.size() < 2) throw CodecError(Errc::Truncated, b.size(), "");
        Message m;
        m.priority = b[0];
        const std::size_t tl = b[1];
        if (b.size() < 3 + tl) throw CodecError(Errc::Truncated, b.size(), "");
        m.topic.assign(b.begin() + 2, b.begin() + 2 + static_cast<std::ptrdiff_t>(tl));
        const std::size_t pl = b[2 + tl];
        if (b.size() < 3 + tl + pl) throw CodecError(Errc::Truncated, b.size(), "");
        m.payload.assign(b.begin() + 3 + static_cast<std::ptrdiff_t>(tl),
                         b.begin() + 3 + static_cast<std::ptrdiff_t>(tl + pl));
        c = 3 + tl + pl;
        return m;
      });
  r.register_codec(toy);
  const Message m{"t", 2, {9, 9}};
  EXPECT_EQ(translate(r, translate(r, toy->encode(m), "toy.v1", "text.v1"), "text.v1", "toy.v1"),
            toy->encode(m));
}

}  // namespace
}  // namespace edgetb::gateway
