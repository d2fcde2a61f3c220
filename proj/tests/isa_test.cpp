#include <gtest/gtest.h>

#include <random>

#include "bootkeeper/isa.hpp"

using namespace bootkeeper;

namespace {

std::vector<uint8_t> bytes(std::initializer_list<int> v) {
  std::vector<uint8_t> out;
  for (int b : v) out.push_back(static_cast<uint8_t>(b));
  return out;
}

uint32_t le32(const std::vector<uint8_t>& b, size_t off) {
  return b[off] | (b[off + 1] << 8) | (b[off + 2] << 16) | (static_cast<uint32_t>(b[off + 3]) << 24);
}

const Opcode kAll[] = {Opcode::HALT, Opcode::MOVI, Opcode::MOV,   Opcode::ADD,    Opcode::ADDI,  Opcode::SUB,
                       Opcode::SUBI, Opcode::AND,  Opcode::ANDI,  Opcode::OR,     Opcode::ORI,   Opcode::XOR,
                       Opcode::XORI, Opcode::SHL,  Opcode::SHLI,  Opcode::SHR,    Opcode::SHRI,  Opcode::ROL,
                       Opcode::ROLI, Opcode::LOAD, Opcode::STORE, Opcode::LOADB,  Opcode::STOREB, Opcode::JMP,
                       Opcode::JMPR, Opcode::BEQ,  Opcode::BNE,   Opcode::BLTU,   Opcode::BGEU,  Opcode::CALL,
                       Opcode::CALLR, Opcode::RET};

FirmwareImage tiny() {
  FirmwareImage img;
  Instruction movi{Opcode::MOVI, 0, 0, 0, 42, kLoadBase};
  auto e = encode(movi);
  img.code.assign(e.begin(), e.end());
  img.code.resize(16, 0);
  img.data = {1, 2, 3};
  return img;
}

}  // namespace

TEST(Decode, Movi) {
  const auto in = decode(bytes({0x01, 0, 0, 0, 0x2A, 0, 0, 0}), 0x100000);
  EXPECT_EQ(in.opcode, Opcode::MOVI);
  EXPECT_EQ(in.rd, 0);
  EXPECT_EQ(in.imm, 42u);
  EXPECT_EQ(in.addr, 0x100000u);
  EXPECT_EQ(in.to_string(), "MOVI r0, 0x2a");
}

TEST(Decode, ZeroBytesAreHalt) { EXPECT_EQ(decode(bytes({0, 0, 0, 0, 0, 0, 0, 0}), 0).opcode, Opcode::HALT); }

TEST(Decode, StoreToFifo) {
  const auto in = decode(bytes({0x21, 0, 1, 2, 0x24, 0, 0, 0}), 0);
  EXPECT_EQ(in.opcode, Opcode::STORE);
  EXPECT_EQ(in.rs1, 1);
  EXPECT_EQ(in.rs2, 2);
  EXPECT_EQ(in.imm, 0x24u);
  EXPECT_EQ(in.to_string(), "STORE [r1+0x24], r2");
}

TEST(Decode, UnknownOpcode) {
  try {
    decode(bytes({0x7F, 0, 0, 0, 0, 0, 0, 0}), 0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::UnknownOpcode);
  }
}

TEST(Decode, RegisterOutOfRange) {
  try {
    decode(bytes({0x02, 9, 0, 0, 0, 0, 0, 0}), 0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::RegisterOutOfRange);
  }
}

TEST(Encode, Examples) {
  EXPECT_EQ(encode({Opcode::MOVI, 3, 0, 0, 0xDEADBEEF, 0}),
            (EncodedInstr{0x01, 0x03, 0, 0, 0xEF, 0xBE, 0xAD, 0xDE}));
  EXPECT_EQ(encode({Opcode::RET, 0, 0, 0, 0, 0}), (EncodedInstr{0x42, 0, 0, 0, 0, 0, 0, 0}));
}

TEST(Encode, RandomRoundTrip) {
  std::mt19937 rng(7);
  for (int i = 0; i < 1000; ++i) {
    Instruction in;
    in.opcode = kAll[rng() % std::size(kAll)];
    in.rd = rng() % 8;
    in.rs1 = rng() % 8;
    in.rs2 = rng() % 8;
    in.imm = static_cast<uint32_t>(rng());
    in.addr = kLoadBase + 8 * (rng() % 100);
    const auto e = encode(in);
    EXPECT_EQ(decode(e, in.addr), in);
    EXPECT_EQ(encode(decode(e, in.addr)), e);
  }
}

TEST(Image, SerializeRoundTrip) {
  const auto img = tiny();
  const auto b = serialize(img);
  EXPECT_EQ(load_image(b), img);
}

TEST(Image, HeaderLayout) {
  const auto img = tiny();
  const auto b = serialize(img);
  ASSERT_GE(b.size(), kHeaderSize);
  EXPECT_EQ(std::string(b.begin(), b.begin() + 4), "FWIM");
  EXPECT_EQ(le32(b, 4), 1u);
  EXPECT_EQ(le32(b, 8), kLoadBase);
  const uint32_t code_off = le32(b, 12), code_size = le32(b, 16);
  const uint32_t data_off = le32(b, 20), data_size = le32(b, 24);
  EXPECT_EQ(code_size, 16u);
  EXPECT_EQ(data_size, 3u);
  EXPECT_EQ(b[code_off], 0x01);
  EXPECT_EQ(b[code_off + 4], 42);
  EXPECT_EQ(b[data_off + 2], 3);
  EXPECT_EQ(img.data_base(), kLoadBase + 16);
}

TEST(Image, Errors) {
  auto b = serialize(tiny());
  auto code_of = [](std::vector<uint8_t> bytes) {
    try {
      load_image(bytes);
    } catch (const Error& e) {
      return e.code();
    }
    return Errc::IoError;
  };
  auto bad = b;
  bad[0] = 'X';
  EXPECT_EQ(code_of(bad), Errc::BadMagic);
  bad = b;
  bad[4] = 2;
  EXPECT_EQ(code_of(bad), Errc::BadVersion);
  EXPECT_EQ(code_of(std::vector<uint8_t>(b.begin(), b.begin() + 20)), Errc::TruncatedImage);
  EXPECT_EQ(code_of(std::vector<uint8_t>(b.begin(), b.end() - 1)), Errc::TruncatedImage);
  bad = b;
  bad[9] = 0x50;  // entry 0x00105000
  EXPECT_EQ(code_of(bad), Errc::EntryOutOfRange);
}

TEST(Image, RomBytes) {
  const auto img = tiny();
  EXPECT_EQ(img.rom_byte(kLoadBase + 4), 42);
  EXPECT_EQ(img.rom_byte(img.data_base() + 1), 2);
  EXPECT_FALSE(img.rom_byte(kLoadBase + 16 + 3).has_value());
  EXPECT_FALSE(img.rom_byte(kRamBase).has_value());
}

TEST(Ranges, Arithmetic) {
  const auto n = normalize_ranges({{10, 5}, {0, 4}, {14, 6}, {4, 2}});
  EXPECT_EQ(n, (std::vector<AddressRange>{{0, 6}, {10, 10}}));
  EXPECT_EQ(subtract_ranges({{0, 20}}, {{5, 5}}), (std::vector<AddressRange>{{0, 5}, {10, 10}}));
  EXPECT_TRUE(subtract_ranges({{5, 5}}, {{0, 20}}).empty());
  EXPECT_EQ(intersect_ranges({{0, 10}}, {{5, 10}}), (std::vector<AddressRange>{{5, 5}}));
  EXPECT_TRUE(range_covered({4, 4}, {{0, 6}, {6, 2}}));
  EXPECT_FALSE(range_covered({4, 5}, {{0, 6}, {6, 2}}));
}

TEST(Ranges, Invariants) {
  EXPECT_THROW(make_range(0xFFFFFFF0u, 0x20), Error);
}
