#include <gtest/gtest.h>

#include <string>

#include "bootkeeper/sha1.hpp"

using namespace bootkeeper;

TEST(Sha1, KnownVectors) {
  EXPECT_EQ(to_hex(sha1("abc")), "a9993e364706816aba3e25717850c26c9cd0d89d");
  EXPECT_EQ(to_hex(sha1("")), "da39a3ee5e6b4b0d3255bfef95601890afd80709");
  EXPECT_EQ(to_hex(sha1("abcdbcdecdefdefgefghfghighijhijkijkljklmklmnlmnomnopnopq")),
            "84983e441c3bd26ebaae4aa1f95129e5e54670f1");
}

TEST(Sha1, MillionA) {
  Sha1 h;
  const std::string chunk(1000, 'a');
  for (int i = 0; i < 1000; ++i)
    h.update({reinterpret_cast<const uint8_t*>(chunk.data()), chunk.size()});
  EXPECT_EQ(to_hex(h.finish()), "34aa973cd4c4daa4f61eeb2bdbad27316534016f");
}

TEST(Sha1, StreamingSplitsAgree) {
  std::string msg;
  for (int i = 0; i < 300; ++i) msg.push_back(static_cast<char>(i * 7));
  const auto whole = sha1(msg);
  for (size_t cut : {0u, 1u, 55u, 56u, 63u, 64u, 65u, 128u, 299u}) {
    Sha1 h;
    h.update({reinterpret_cast<const uint8_t*>(msg.data()), cut});
    h.update({reinterpret_cast<const uint8_t*>(msg.data()) + cut, msg.size() - cut});
    EXPECT_EQ(h.finish(), whole) << cut;
  }
}

TEST(Sha1, RoundConstantsMatter) {
  for (int i = 0; i < 4; ++i) {
    auto k = Sha1::kStandard;
    k[i] ^= 1;
    Sha1 h(k);
    h.update({reinterpret_cast<const uint8_t*>("abc"), 3});
    EXPECT_NE(h.finish(), sha1("abc")) << i;
  }
}
