#include <gtest/gtest.h>

#include <filesystem>
#include <json.hpp>

#include "bootkeeper/assembler.hpp"
#include "bootkeeper/corpus.hpp"
#include "bootkeeper/machine.hpp"

using namespace bootkeeper;

namespace {

std::vector<uint8_t> rom(const FirmwareImage& img, AddressRange r) {
  std::vector<uint8_t> out;
  for (uint32_t a = r.start; a < r.start + r.length; ++a) out.push_back(img.rom_byte(a).value());
  return out;
}

Digest expected_pcr0(const Digest& m) {
  std::vector<uint8_t> buf(20, 0);
  buf.insert(buf.end(), m.begin(), m.end());
  return sha1(buf);
}

uint32_t word_at(const RunResult& r, uint32_t addr) {
  uint32_t v = 0;
  for (unsigned i = 0; i < 4; ++i) {
    auto it = r.state.mem.find(addr + i);
    v |= uint32_t{it == r.state.mem.end() ? uint8_t{0} : it->second} << (8 * i);
  }
  return v;
}

bool covered_by(uint32_t addr, const std::vector<AddressRange>& rs) {
  for (const auto& r : rs)
    if (addr >= r.start && addr - r.start < r.length) return true;
  return false;
}

}  // namespace

TEST(Corpus, Ids) {
  const auto ids = fixture_ids();
  EXPECT_EQ(ids.size(), 13u);
  EXPECT_EQ(ids.front(), "b_o0");
  try {
    build_fixture("nope");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::UnknownFixture);
  }
}

TEST(Corpus, ConcreteRunsDeliverTheManifestDigest) {
  for (const auto& fx : build_all_fixtures()) {
    const auto r = run(fx.image, 100'000'000);
    ASSERT_EQ(r.tpm.measurements().size(), 1u) << fx.spec.id;
    EXPECT_EQ(r.tpm.measurements()[0], fx.spec.delivered) << fx.spec.id;
    EXPECT_EQ(r.tpm.pcrs()[0], fx.spec.golden_pcr0) << fx.spec.id;
    EXPECT_EQ(fx.spec.golden_pcr0, expected_pcr0(fx.spec.delivered)) << fx.spec.id;
    EXPECT_EQ(assemble(fx.source), fx.image) << fx.spec.id;
  }
}

TEST(Corpus, BenignImagesMeasureThemselves) {
  for (const auto& id : {"b_o0", "b_o1", "b_o2", "b_o3", "b_os"}) {
    const auto fx = build_fixture(id);
    ASSERT_EQ(fx.spec.measured_manifest.size(), 1u);
    const auto m = fx.spec.measured_manifest[0];
    EXPECT_EQ(m.start, fx.image.entry) << id;
    EXPECT_EQ(fx.spec.delivered, sha1(rom(fx.image, m))) << id;
    const auto r = run(fx.image, 100'000'000);
    for (const auto& te : r.trace.entries) EXPECT_TRUE(covered_by(te.pc, fx.spec.measured_manifest)) << id;
  }
}

TEST(Corpus, VariantsDiffer) {
  std::set<std::vector<uint8_t>> codes;
  for (const auto& id : {"b_o0", "b_o1", "b_o2", "b_o3", "b_os"}) codes.insert(build_fixture(id).image.code);
  EXPECT_EQ(codes.size(), 5u);
}

TEST(Corpus, AttacksAreGenuine) {
  const auto o1 = build_fixture("b_o1");

  const auto a1 = build_fixture("a1_no_hash");
  EXPECT_TRUE(a1.spec.measured_manifest.empty());

  const auto a2 = build_fixture("a2_tampered_sha1");
  EXPECT_NE(a2.spec.delivered, sha1(rom(a2.image, a2.spec.measured_manifest[0])));

  const auto a3 = build_fixture("a3_hidden_code");
  const auto r3 = run(a3.image, 100'000'000);
  EXPECT_EQ(word_at(r3, kMarker), 0x0BADC0DEu);
  bool outside = false;
  for (const auto& te : r3.trace.entries) outside = outside || !covered_by(te.pc, a3.spec.measured_manifest);
  EXPECT_TRUE(outside);
  EXPECT_EQ(a3.spec.delivered, sha1(rom(a3.image, a3.spec.measured_manifest[0])));

  const auto a4 = build_fixture("a4_forged_params");
  const auto r4 = run(a4.image, 100'000'000);
  EXPECT_EQ(word_at(r4, kMarker), 0xA4A4A4A4u);
  EXPECT_EQ(rom(a4.image, a4.spec.measured_manifest[0]), rom(o1.image, o1.spec.measured_manifest[0]));
  for (const auto& te : r4.trace.entries) EXPECT_FALSE(covered_by(te.pc, a4.spec.measured_manifest));

  for (const auto& id : {"a5_overwrite", "a6_decoy"}) {
    const auto fx = build_fixture(id);
    const auto own = sha1(rom(fx.image, fx.spec.measured_manifest[0]));
    EXPECT_NE(fx.spec.delivered, own) << id;
    EXPECT_EQ(fx.spec.delivered, o1.spec.delivered) << id;
    if (std::string(id) != "a6_decoy") continue;
    // The honest digest is computed and parked in the decoy buffer.
    const auto r = run(fx.image, 100'000'000);
    for (unsigned i = 0; i < 20; i += 4) {
      const uint32_t w = own[i] | own[i + 1] << 8 | own[i + 2] << 16 | uint32_t{own[i + 3]} << 24;
      EXPECT_EQ(word_at(r, kDecoyBuf + i), w) << i;
    }
  }
}

TEST(Corpus, ControlUsesCrc32) {
  const auto fx = build_fixture("control_crc32");
  const auto c = crc32(rom(fx.image, fx.spec.measured_manifest[0]));
  for (unsigned i = 0; i < 20; i += 4) {
    const uint32_t w = fx.spec.delivered[i] | fx.spec.delivered[i + 1] << 8 | fx.spec.delivered[i + 2] << 16 |
                       uint32_t{fx.spec.delivered[i + 3]} << 24;
    EXPECT_EQ(w, c);
  }
  const std::string s = "123456789";
  EXPECT_EQ(crc32({reinterpret_cast<const uint8_t*>(s.data()), s.size()}), 0xCBF43926u);
}

TEST(Corpus, WritesFilesAndManifest) {
  const auto dir = std::filesystem::temp_directory_path() / "bootkeeper_corpus_test";
  std::filesystem::remove_all(dir);
  const auto text = build_corpus(dir.string());
  const auto j = nlohmann::json::parse(text);
  ASSERT_EQ(j.size(), 13u);
  for (const auto& e : j) {
    const auto fx = build_fixture(e.at("id"));
    EXPECT_EQ(load_image(read_file((dir / e.at("file").get<std::string>()).string())), fx.image);
    EXPECT_EQ(e.at("golden_pcr0"), to_hex(fx.spec.golden_pcr0));
    EXPECT_EQ(e.at("expected_overall"), fx.spec.expected_overall);
    EXPECT_TRUE(std::filesystem::exists(dir / (fx.spec.id + ".fasm")));
  }
  EXPECT_EQ(build_corpus(dir.string()), text);
  std::filesystem::remove_all(dir);
}
