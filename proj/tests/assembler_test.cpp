#include <gtest/gtest.h>

#include "bootkeeper/assembler.hpp"
#include "bootkeeper/corpus.hpp"

using namespace bootkeeper;

namespace {

Errc error_of(const std::string& src) {
  try {
    assemble(src);
  } catch (const Error& e) {
    return e.code();
  }
  return Errc::IoError;
}

}  // namespace

TEST(Assembler, MinimalProgram) {
  const auto img = assemble(".entry start\nstart: HALT\n");
  EXPECT_EQ(img.entry, 0x0010'0000u);
  EXPECT_EQ(img.code.size(), 8u);
  EXPECT_TRUE(img.data.empty());
}

TEST(Assembler, ForwardBranch) {
  const auto res = assemble_with_symbols(
      "start:\n"
      "  BEQ r0, r0, end\n"
      "  MOVI r1, 1\n"
      "end:\n"
      "  HALT\n");
  EXPECT_EQ(res.symbols.at("end"), kLoadBase + 16);
  const auto in = res.image.instruction_at(kLoadBase);
  EXPECT_EQ(in.opcode, Opcode::BEQ);
  EXPECT_EQ(in.imm, kLoadBase + 16);
}

TEST(Assembler, OperandsAndDirectives) {
  const auto res = assemble_with_symbols(
      ".equ BASE, 0x300000\n"
      ".equ OFF, BASE + 0x10 - 4\n"
      "# comment line\n"
      "start: MOVI r1, OFF   # trailing comment\n"
      "  LOAD r2, [r1]\n"
      "  LOAD r3, [r1-4]\n"
      "  STOREB [r1+0x24], r2\n"
      "  MOVI r4, table\n"
      "  HALT\n"
      "  .space 8\n"
      ".data\n"
      "table: .word start, 0x11223344\n"
      "  .byte 1, 2\n");
  const auto& img = res.image;
  EXPECT_EQ(img.instruction_at(kLoadBase).imm, 0x30000Cu);
  EXPECT_EQ(img.instruction_at(kLoadBase + 8).imm, 0u);
  EXPECT_EQ(img.instruction_at(kLoadBase + 16).imm, static_cast<uint32_t>(-4));
  EXPECT_EQ(img.code.size(), 6u * 8 + 8);
  EXPECT_EQ(res.symbols.at("table"), img.data_base());
  EXPECT_EQ(img.instruction_at(kLoadBase + 32).imm, img.data_base());
  ASSERT_EQ(img.data.size(), 10u);
  EXPECT_EQ(img.data[0], 0x00);
  EXPECT_EQ(img.data[2], 0x10);
  EXPECT_EQ(img.data[4], 0x44);
  EXPECT_EQ(img.data[9], 2);
}

TEST(Assembler, Errors) {
  EXPECT_EQ(error_of("start: JMP nowhere\n"), Errc::UndefinedLabel);
  EXPECT_EQ(error_of("a: HALT\na: HALT\n"), Errc::DuplicateLabel);
  EXPECT_EQ(error_of("start: FROB r0\n"), Errc::SyntaxError);
  EXPECT_EQ(error_of("start: MOVI r9, 1\n"), Errc::RegisterOutOfRange);
  EXPECT_EQ(error_of("start: ADD r0, r1\n"), Errc::SyntaxError);
  try {
    assemble("start: HALT\n  MOVI r0\n");
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos) << e.what();
  }
}

TEST(Assembler, ReferenceSha1RoundTrips) {
  const std::string src = reference_sha1_source();
  const auto img = assemble(src);
  EXPECT_EQ(load_image(serialize(img)), img);
  EXPECT_EQ(serialize(assemble(src)), serialize(img));
}

TEST(Assembler, DisassemblyListsEveryInstruction) {
  const auto img = assemble("start: MOVI r0, 42\n  HALT\n");
  const std::string text = disassemble(img);
  EXPECT_NE(text.find("MOVI r0, 0x2a"), std::string::npos);
  EXPECT_NE(text.find("HALT"), std::string::npos);
}
