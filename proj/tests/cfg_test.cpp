#include <gtest/gtest.h>

#include "bootkeeper/assembler.hpp"
#include "bootkeeper/cfg.hpp"
#include "bootkeeper/corpus.hpp"
#include "bootkeeper/machine.hpp"

using namespace bootkeeper;

TEST(Cfg, SingleBlock) {
  const auto cfg = recover_cfg(assemble("start: MOVI r0, 1\n  HALT\n"));
  ASSERT_EQ(cfg.nodes.size(), 1u);
  EXPECT_TRUE(cfg.edges.empty());
  EXPECT_EQ(cfg.nodes.begin()->second.terminator, Terminator::Halt);
  EXPECT_EQ(cfg.nodes.begin()->second.length, 16u);
}

TEST(Cfg, Diamond) {
  const auto cfg = recover_cfg(assemble(diamond_source()));
  EXPECT_EQ(cfg.nodes.size(), 4u);
  EXPECT_EQ(cfg.edges.size(), 4u);
  EXPECT_TRUE(cfg.unresolved.empty());
  const auto& entry = cfg.nodes.at(cfg.entry);
  EXPECT_EQ(entry.terminator, Terminator::Branch);
  EXPECT_EQ(cfg.out_edges(cfg.entry).size(), 2u);
}

TEST(Cfg, JumpTableResolves) {
  const auto res = assemble_with_symbols(jump_table_source());
  const auto cfg = recover_cfg(res.image);
  EXPECT_TRUE(cfg.unresolved.empty());
  std::set<uint32_t> targets;
  for (const auto& e : cfg.edges)
    if (e.kind == EdgeKind::IndirectResolved) targets.insert(e.dst);
  const uint32_t table = res.symbols.at("table");
  EXPECT_EQ(targets, (std::set<uint32_t>{table, table + 8, table + 16}));
}

TEST(Cfg, UnconstrainedIndirectIsUnresolved) {
  const auto cfg = recover_cfg(assemble(
      "start: MOVI r1, 0x300000\n"
      "  LOAD r0, [r1+0]\n"
      "  JMPR r0\n"));
  EXPECT_EQ(cfg.unresolved.size(), 1u);
}

TEST(Cfg, CallsAndFunctions) {
  const auto res = assemble_with_symbols(
      "start: CALL f\n"
      "  CALL f\n"
      "  HALT\n"
      "f: MOVI r0, 1\n"
      "  RET\n");
  const auto cfg = recover_cfg(res.image);
  const uint32_t f = res.symbols.at("f");
  ASSERT_TRUE(cfg.functions.count(f));
  EXPECT_EQ(cfg.functions.at(f).call_sites.size(), 2u);
  size_t rets = 0;
  for (const auto& e : cfg.edges) rets += e.kind == EdgeKind::Ret;
  EXPECT_EQ(rets, 2u);
}

TEST(Cfg, ContainsEveryExecutedInstruction) {
  for (const auto& id : fixture_ids()) {
    if (id == "stress") continue;
    const auto fx = build_fixture(id);
    const auto cfg = recover_cfg(fx.image);
    const auto r = run(fx.image, 100'000'000);
    std::set<uint32_t> pcs;
    for (const auto& te : r.trace.entries) pcs.insert(te.pc);
    for (uint32_t pc : pcs) EXPECT_NE(cfg.block_containing(pc), nullptr) << id << " " << hex32(pc);
    for (size_t i = 1; i < r.trace.entries.size(); ++i) {
      const uint32_t from = r.trace.entries[i - 1].pc, to = r.trace.entries[i].pc;
      const auto* b = cfg.block_containing(from);
      if (!b || from + kInstrSize == to && to < b->end()) continue;
      bool found = false;
      for (const auto& e : cfg.out_edges(b->start)) found = found || e.dst == to;
      EXPECT_TRUE(found) << id << " " << hex32(from) << " -> " << hex32(to);
    }
  }
}

TEST(Cfg, Deterministic) {
  const auto fx = build_fixture("b_o1");
  const auto a = recover_cfg(fx.image), b = recover_cfg(fx.image);
  EXPECT_EQ(a.edges, b.edges);
  EXPECT_EQ(to_dot(a), to_dot(b));
}
