#include <gtest/gtest.h>

#include <random>

#include "bootkeeper/assembler.hpp"
#include "bootkeeper/dfg.hpp"

using namespace bootkeeper;

namespace {

std::vector<Instruction> code(const std::string& body) {
  const auto img = assemble("start:\n" + body + "  HALT\n");
  std::vector<Instruction> out;
  for (uint32_t a = kLoadBase; a < kLoadBase + img.code.size(); a += kInstrSize) {
    const auto in = img.instruction_at(a);
    if (in.opcode == Opcode::HALT) break;
    out.push_back(in);
  }
  return out;
}

size_t count_op(const Dfg& g, ExprOp op) {
  size_t n = 0;
  for (const auto& node : g.nodes) n += node.kind == DfgKind::Op && node.op == op;
  return n;
}

uint32_t leaf_value(const DfgNode& n) {
  return (n.value + 1) * 2654435761u ^ (n.kind == DfgKind::Load ? 0x5bd1e995u : 0u);
}

const Opcode kAlu[] = {Opcode::ADD, Opcode::SUB, Opcode::AND, Opcode::OR, Opcode::XOR,
                       Opcode::ADDI, Opcode::XORI, Opcode::SHLI, Opcode::SHRI, Opcode::ROLI, Opcode::MOV};

std::vector<Instruction> random_block(std::mt19937& rng) {
  std::vector<Instruction> out;
  const int n = 3 + rng() % 12;
  for (int i = 0; i < n; ++i) {
    Instruction in;
    in.opcode = kAlu[rng() % std::size(kAlu)];
    in.rd = rng() % 6;
    in.rs1 = rng() % 6;
    in.rs2 = rng() % 6;
    in.imm = format_of(in.opcode) == Format::RdRsImm && (in.opcode == Opcode::SHLI || in.opcode == Opcode::SHRI || in.opcode == Opcode::ROLI)
                 ? 1 + rng() % 31
                 : static_cast<uint32_t>(rng());
    in.addr = kLoadBase + 8 * i;
    out.push_back(in);
  }
  return out;
}

}  // namespace

TEST(Dfg, SingleAdd) {
  const auto g = build_dfg(code("  ADD r3, r1, r2\n"));
  g.check();
  ASSERT_EQ(g.roots.size(), 1u);
  const auto& root = g.nodes[g.roots[0]];
  EXPECT_EQ(root.kind, DfgKind::Op);
  EXPECT_EQ(root.op, ExprOp::Add);
  ASSERT_EQ(root.operands.size(), 2u);
  EXPECT_EQ(g.nodes[root.operands[0]].kind, DfgKind::Input);
  EXPECT_EQ(g.nodes[root.operands[1]].kind, DfgKind::Input);
}

TEST(Dfg, MovesDisappear) {
  const auto g = normalize(build_dfg(code("  MOV r2, r1\n  MOV r4, r2\n  XOR r3, r4, r5\n")));
  EXPECT_EQ(count_op(g, ExprOp::Xor), 1u);
  for (const auto& n : g.nodes) EXPECT_TRUE(n.kind != DfgKind::Op || n.op == ExprOp::Xor);
}

TEST(Dfg, CommutativeOperandsCanonical) {
  const auto a = normalize(build_dfg(code("  XOR r3, r1, r2\n  STORE [r6+0], r3\n")));
  const auto b = normalize(build_dfg(code("  XOR r3, r2, r1\n  STORE [r6+0], r3\n")));
  EXPECT_EQ(to_string(a), to_string(b));
}

TEST(Dfg, ShiftOrBecomesRotate) {
  const auto g = normalize(build_dfg(code("  SHLI r2, r1, 5\n  SHRI r3, r1, 27\n  OR r4, r2, r3\n  STORE [r6+0], r4\n")));
  EXPECT_EQ(count_op(g, ExprOp::Rol), 1u);
  EXPECT_EQ(count_op(g, ExprOp::Or), 0u);
}

TEST(Dfg, LoopBound) {
  const auto g = normalize(build_dfg(code("  ADDI r5, r5, 4\n  MOVI r3, 320\n  BLTU r5, r3, start\n")));
  EXPECT_EQ(loop_bounds(g), (std::set<uint32_t>{80}));
}

TEST(Dfg, NormalizeIsIdempotentAndPreservesValues) {
  std::mt19937 rng(11);
  for (int i = 0; i < 1000; ++i) {
    const auto block = random_block(rng);
    const auto g = build_dfg(block);
    g.check();
    const auto n = normalize(g);
    n.check();
    EXPECT_EQ(normalize(n), n) << i;
    EXPECT_EQ(evaluate(g, leaf_value), evaluate(n, leaf_value)) << i;
  }
}
