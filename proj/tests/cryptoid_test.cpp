#include <gtest/gtest.h>

#include <json.hpp>

#include "bootkeeper/assembler.hpp"
#include "bootkeeper/corpus.hpp"
#include "bootkeeper/cryptoid.hpp"

using namespace bootkeeper;

namespace {

HashIdentification identify_source(const std::string& src) {
  const auto res = assemble_with_symbols(src);
  const auto cfg = recover_cfg(res.image);
  return check_function(cfg, res.symbols.at("sha1"), make_reference_signatures());
}

std::string replace_all(std::string s, const std::string& from, const std::string& to) {
  for (size_t p = s.find(from); p != std::string::npos; p = s.find(from, p + to.size())) s.replace(p, from.size(), to);
  return s;
}

}  // namespace

TEST(Cryptoid, ReferenceMatchesItself) {
  const auto id = identify_source(reference_sha1_source());
  EXPECT_TRUE(id.found);
  EXPECT_TRUE(id.missing.empty());
  EXPECT_EQ(id.matched.size(), make_reference_signatures().signatures.size());
  EXPECT_EQ(id.bounds.count(80), 1u);
}

TEST(Cryptoid, EveryRoundConstantIsChecked) {
  for (const char* k : {"0x5A827999", "0x6ED9EBA1", "0x8F1BBCDC", "0xCA62C1D6"}) {
    for (unsigned bit : {0u, 13u, 31u}) {
      const auto flipped = hex32(static_cast<uint32_t>(std::stoul(k, nullptr, 16)) ^ (1u << bit));
      const auto id = identify_source(replace_all(reference_sha1_source(), k, flipped));
      EXPECT_FALSE(id.found) << k << " bit " << bit;
      EXPECT_FALSE(id.missing.empty()) << k << " bit " << bit;
    }
  }
}

TEST(Cryptoid, OptimizationVariantsMatch) {
  const auto db = make_reference_signatures();
  for (const auto& fid : {"b_o0", "b_o1", "b_o2", "b_o3", "b_os"}) {
    const auto fx = build_fixture(fid);
    const auto cfg = recover_cfg(fx.image);
    const auto id = identify_hash(cfg, db);
    EXPECT_TRUE(id.found) << fid;
    EXPECT_TRUE(id.functions.count(fx.symbols.at("sha1"))) << fid;
  }
}

TEST(Cryptoid, NegativeControls) {
  const auto db = make_reference_signatures();
  for (const auto& fid : {"control_crc32", "a1_no_hash", "a2_tampered_sha1"}) {
    const auto fx = build_fixture(fid);
    EXPECT_FALSE(identify_hash(recover_cfg(fx.image), db).found) << fid;
  }
}

TEST(Cryptoid, SignatureDbJson) {
  const auto db = make_reference_signatures();
  const auto j = nlohmann::json::parse(signature_db_json(db));
  EXPECT_EQ(j.at("algorithm"), "sha1");
  EXPECT_EQ(j.at("signatures").size(), db.signatures.size());
  EXPECT_EQ(j.at("round_constants").size(), 4u);
  EXPECT_EQ(signature_db_json(db), signature_db_json(make_reference_signatures()));
}

TEST(Cryptoid, SignatureEmbedsInItself) {
  for (const auto& sig : make_reference_signatures().signatures) {
    const auto m = match_one(sig.graph, sig);
    EXPECT_TRUE(m.matched_signature.has_value()) << sig.name;
    EXPECT_DOUBLE_EQ(m.score, 1.0);
  }
}
