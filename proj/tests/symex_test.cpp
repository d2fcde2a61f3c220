#include <gtest/gtest.h>

#include "bootkeeper/assembler.hpp"
#include "bootkeeper/corpus.hpp"
#include "bootkeeper/machine.hpp"
#include "bootkeeper/symex.hpp"

using namespace bootkeeper;

namespace {

std::set<uint32_t> concrete_tpm_stores(const FirmwareImage& img) {
  std::set<uint32_t> out;
  const auto r = run(img, 100'000'000);
  for (const auto& w : r.tpm.access_log()) out.insert(w.instr_addr);
  return out;
}

std::set<uint32_t> event_sites(const FindResult& r) {
  std::set<uint32_t> out;
  for (const auto& e : r.events) out.insert(e.instr_addr);
  return out;
}

}  // namespace

TEST(Symex, LiteralAddressIsMust) {
  const auto img = assemble(
      "start: MOVI r1, 0xFED40024\n"
      "  MOVI r2, 7\n"
      "  STORE [r1+0], r2\n"
      "  HALT\n");
  const auto r = find_tpm_writes(img, {});
  ASSERT_EQ(r.status, FindStatus::Found);
  ASSERT_EQ(r.events.size(), 1u);
  EXPECT_EQ(r.events[0].instr_addr, kLoadBase + 16);
  EXPECT_TRUE(r.events[0].must);
  ASSERT_TRUE(is_const(r.events[0].value));
  EXPECT_EQ(const_value(r.events[0].value), 7u);
}

TEST(Symex, NoStoreMeansNone) {
  const auto img = assemble(
      "start: MOVI r1, 0x300000\n"
      "  LOAD r0, [r1+0]\n"
      "  MOVI r2, 3\n"
      "  BEQ r0, r2, x\n"
      "  STORE [r1+4], r0\n"
      "x: HALT\n");
  const auto r = find_tpm_writes(img, {});
  EXPECT_EQ(r.status, FindStatus::None);
  EXPECT_TRUE(r.exploration.exhausted);
  EXPECT_EQ(r.exploration.states_created, 2u);
}

TEST(Symex, SymbolicAddressIsMay) {
  const auto img = assemble(
      "start: MOVI r1, 0x300000\n"
      "  LOAD r0, [r1+0]\n"
      "  STORE [r0+0], r1\n"
      "  HALT\n");
  const auto r = find_tpm_writes(img, {});
  ASSERT_EQ(r.status, FindStatus::Found);
  ASSERT_EQ(r.events.size(), 1u);
  EXPECT_FALSE(r.events[0].must);
}

TEST(Symex, DiamondForksBothWays) {
  const auto img = assemble(diamond_source());
  const auto r = find_tpm_writes(img, {});
  ASSERT_EQ(r.status, FindStatus::Found);
  EXPECT_EQ(r.events.size(), 1u);
  EXPECT_EQ(r.exploration.states_created, 2u);
  EXPECT_TRUE(r.exploration.exhausted);
}

TEST(Symex, HelperComputedBaseMatchesConcreteRun) {
  const auto fx = build_fixture("b_o0");
  const auto r = find_tpm_writes(fx.image, {});
  ASSERT_EQ(r.status, FindStatus::Found);
  const auto sites = event_sites(r);
  for (uint32_t a : concrete_tpm_stores(fx.image)) EXPECT_TRUE(sites.count(a)) << hex32(a);
  for (const auto& e : r.events) EXPECT_TRUE(e.must) << hex32(e.instr_addr);
}

TEST(Symex, SoundOnCorpus) {
  for (const auto& id : fixture_ids()) {
    if (id == "stress") continue;
    const auto fx = build_fixture(id);
    const auto r = find_tpm_writes(fx.image, {});
    EXPECT_EQ(r.status, FindStatus::Found) << id;
    const auto sites = event_sites(r);
    for (uint32_t a : concrete_tpm_stores(fx.image)) EXPECT_TRUE(sites.count(a)) << id << " " << hex32(a);
  }
}

TEST(Symex, StressRunsOutOfBudget) {
  const auto fx = build_fixture("stress");
  ExplorationConfig cfg;
  cfg.max_states = 2000;
  const auto r = find_tpm_writes(fx.image, cfg);
  EXPECT_EQ(r.status, FindStatus::AnalysisTimeout);
  EXPECT_FALSE(r.exploration.exhausted);
}

TEST(Symex, Deterministic) {
  const auto fx = build_fixture("b_o2");
  const auto a = find_tpm_writes(fx.image, {}), b = find_tpm_writes(fx.image, {});
  EXPECT_EQ(event_sites(a), event_sites(b));
  EXPECT_EQ(a.exploration.visited, b.exploration.visited);
  EXPECT_EQ(a.exploration.states_created, b.exploration.states_created);
}
