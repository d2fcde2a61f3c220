#include <gtest/gtest.h>

#include <random>

#include "bootkeeper/assembler.hpp"
#include "bootkeeper/machine.hpp"

using namespace bootkeeper;

namespace {

Errc run_error(const std::string& src, uint64_t steps = 1000) {
  try {
    run(assemble(src), steps);
  } catch (const Error& e) {
    return e.code();
  }
  return Errc::IoError;
}

Digest random_digest(std::mt19937& rng) {
  Digest d;
  for (auto& b : d) b = static_cast<uint8_t>(rng());
  return d;
}

}  // namespace

TEST(Extend, ZeroCase) {
  const PcrBank zero{};
  const auto p = tpm_extend(zero, 0, Digest{});
  const std::vector<uint8_t> forty(40, 0);
  EXPECT_EQ(p[0], sha1(forty));
  for (size_t i = 1; i < kNumPcrs; ++i) EXPECT_EQ(p[i], Digest{});
}

TEST(Extend, OrderSensitive) {
  std::mt19937 rng(1);
  for (int i = 0; i < 20; ++i) {
    const Digest a = random_digest(rng), b = random_digest(rng);
    const PcrBank z{};
    EXPECT_NE(tpm_extend(tpm_extend(z, 0, a), 0, b)[0], tpm_extend(tpm_extend(z, 0, b), 0, a)[0]);
    const std::array<Digest, 2> ab{a, b};
    EXPECT_EQ(extend_chain(ab), tpm_extend(tpm_extend(z, 0, a), 0, b)[0]);
  }
}

TEST(Extend, FrameAndIndex) {
  const PcrBank z{};
  const auto p = tpm_extend(z, 5, Digest{1});
  EXPECT_EQ(p[0], Digest{});
  EXPECT_NE(p[5], Digest{});
  EXPECT_THROW(tpm_extend(z, 16, Digest{}), Error);
}

TEST(Machine, MoviStep) {
  Machine m(assemble("start: MOVI r0, 42\n  HALT\n"));
  m.step();
  EXPECT_EQ(m.state().regs[0], 42u);
  EXPECT_EQ(m.state().pc, kLoadBase + 8);
  EXPECT_FALSE(m.state().halted);
  m.step();
  EXPECT_TRUE(m.state().halted);
}

TEST(Machine, AluSemantics) {
  const auto r = run(assemble(
                         "start: MOVI r0, 0x80000001\n"
                         "  ROLI r1, r0, 4\n"
                         "  SHRI r2, r0, 33\n"
                         "  SUBI r3, r0, 2\n"
                         "  MOVI r4, 36\n"
                         "  SHL r5, r0, r4\n"
                         "  XORI r6, r0, 0xFFFFFFFF\n"
                         "  HALT\n"),
                     100);
  EXPECT_EQ(r.state.regs[1], 0x18u);
  EXPECT_EQ(r.state.regs[2], 0x40000000u);
  EXPECT_EQ(r.state.regs[3], 0x7FFFFFFFu);
  EXPECT_EQ(r.state.regs[5], 0x10u);
  EXPECT_EQ(r.state.regs[6], 0x7FFFFFFEu);
}

TEST(Machine, FiveFifoStoresExtendOnce) {
  const auto r = run(assemble(
                         "start: MOVI r1, 0xFED40000\n"
                         "  MOVI r2, 0x04030201\n"
                         "  STORE [r1+0x24], r2\n"
                         "  STORE [r1+0x24], r2\n"
                         "  STORE [r1+0x24], r2\n"
                         "  STORE [r1+0x24], r2\n"
                         "  STORE [r1+0x24], r2\n"
                         "  HALT\n"),
                     100);
  Digest m;
  for (size_t i = 0; i < 20; ++i) m[i] = static_cast<uint8_t>(i % 4 + 1);
  EXPECT_EQ(r.tpm.pcrs()[0], tpm_extend(PcrBank{}, 0, m)[0]);
  ASSERT_EQ(r.tpm.measurements().size(), 1u);
  EXPECT_TRUE(r.tpm.fifo().empty());
  ASSERT_EQ(r.tpm.access_log().size(), 5u);
  EXPECT_EQ(r.tpm.access_log()[0].addr, kTpmDataFifo);
  EXPECT_EQ(r.tpm.access_log()[0].instr_addr, kLoadBase + 16);
}

TEST(Machine, Faults) {
  EXPECT_EQ(run_error("start: MOVI r1, 0xDEAD0000\n  LOAD r0, [r1]\n  HALT\n"), Errc::MemFault);
  EXPECT_EQ(run_error("start: MOVI r1, 0x100000\n  STORE [r1], r1\n  HALT\n"), Errc::MemFault);
  EXPECT_EQ(run_error("start: MOVI r1, 0x100004\n  JMPR r1\n"), Errc::UnalignedPc);
  EXPECT_EQ(run_error("start: RET\n"), Errc::StackUnderflow);
  EXPECT_EQ(run_error("start: HALT\n", 0), Errc::StepBudgetExceeded);
  EXPECT_EQ(run_error("start: JMP start\n"), Errc::StepBudgetExceeded);
}

TEST(Machine, CallAndReturn) {
  const auto r = run(assemble(
                         "start: CALL f\n"
                         "  MOVI r1, 2\n"
                         "  HALT\n"
                         "f: MOVI r0, 1\n"
                         "  RET\n"),
                     100);
  EXPECT_EQ(r.state.regs[0], 1u);
  EXPECT_EQ(r.state.regs[1], 2u);
  EXPECT_EQ(r.state.regs[7], kStackTop);
}

TEST(Machine, TraceAndAccessLogAgree) {
  const auto r = run(assemble(
                         "start: MOVI r1, 0xFED40000\n"
                         "  MOVI r3, 0x300000\n"
                         "  STORE [r3+0], r1\n"
                         "  STORE [r1+0x24], r1\n"
                         "  STOREB [r1+0x10], r1\n"
                         "  HALT\n"),
                     100);
  EXPECT_EQ(r.trace.entries.size(), r.state.step_count);
  std::vector<uint32_t> from_trace;
  for (const auto& te : r.trace.entries)
    if (te.written_addr && *te.written_addr >= kTpmBase && *te.written_addr < kTpmBase + kTpmSize)
      from_trace.push_back(te.pc);
  std::vector<uint32_t> from_log;
  for (const auto& w : r.tpm.access_log()) from_log.push_back(w.instr_addr);
  EXPECT_EQ(from_trace, from_log);
  EXPECT_EQ(from_log.size(), 2u);
}

TEST(Machine, TaintOnStraightLineCode) {
  const auto r = run(assemble(
                         "start: MOVI r1, 5\n"        // +0  contributes
                         "  MOVI r2, 7\n"             // +8  contributes
                         "  MOVI r5, 1\n"             // +16 unrelated
                         "  ADD r3, r1, r2\n"         // +24
                         "  MOVI r4, 0x300000\n"      // +32 address only
                         "  STORE [r4+0], r3\n"       // +40
                         "  LOAD r6, [r4+0]\n"        // +48
                         "  XORI r6, r6, 3\n"         // +56
                         "  MOVI r1, 0xFED40000\n"    // +64
                         "  STORE [r1+0x24], r6\n"    // +72
                         "  HALT\n"),
                     100);
  const auto& te = r.trace.entries[9];
  ASSERT_TRUE(te.written_addr.has_value());
  for (uint32_t off : {0u, 8u, 24u, 40u, 48u, 56u})
    EXPECT_TRUE(taint_contains(te.written_taint, kLoadBase + off)) << off;
  EXPECT_FALSE(taint_contains(te.written_taint, kLoadBase + 16));
}

TEST(Machine, Deterministic) {
  const auto img = assemble("start: MOVI r0, 3\nloop: SUBI r0, r0, 1\n  MOVI r1, 0\n  BNE r0, r1, loop\n  HALT\n");
  const auto a = run(img, 100), b = run(img, 100);
  EXPECT_EQ(a.state.regs, b.state.regs);
  EXPECT_EQ(a.state.step_count, b.state.step_count);
}
