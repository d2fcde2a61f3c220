#include <gtest/gtest.h>

#include <json.hpp>

#include "bootkeeper/assembler.hpp"
#include "bootkeeper/corpus.hpp"
#include "bootkeeper/validator.hpp"

using namespace bootkeeper;

namespace {

std::array<PropStatus, 4> statuses(const Report& r) {
  std::array<PropStatus, 4> out{};
  for (size_t i = 0; i < 4; ++i) out[i] = r.verdicts[i].status;
  return out;
}

std::string names(const std::array<PropStatus, 4>& s) {
  std::string out;
  for (auto p : s) out += std::string(prop_status_name(p)) + " ";
  return out;
}

Report validate_fixture(const Fixture& fx) { return validate(serialize(fx.image)); }

}  // namespace

TEST(Validator, CorpusMatrix) {
  for (const auto& id : fixture_ids()) {
    const auto fx = build_fixture(id);
    const auto r = validate_fixture(fx);
    EXPECT_EQ(names(statuses(r)), names(fx.spec.expected)) << id;
    EXPECT_EQ(overall_name(r.overall), fx.spec.expected_overall) << id;
    for (const auto& v : r.verdicts)
      if (v.status == PropStatus::Fail) EXPECT_FALSE(v.evidence.empty()) << id << " " << property_id(v.property);
  }
}

TEST(Validator, OverallCombination) {
  std::array<PropertyVerdict, 4> v{};
  for (auto& x : v) x.status = PropStatus::Pass;
  EXPECT_EQ(overall_of(v), Overall::Valid);
  v[2].status = PropStatus::Inconclusive;
  EXPECT_EQ(overall_of(v), Overall::Inconclusive);
  v[3].status = PropStatus::Fail;
  EXPECT_EQ(overall_of(v), Overall::Invalid);
  EXPECT_EQ(exit_code(Overall::Valid), 0);
  EXPECT_EQ(exit_code(Overall::Invalid), 1);
  EXPECT_EQ(exit_code(Overall::Inconclusive), 3);
}

TEST(Validator, BadImageIsInconclusive) {
  auto bytes = serialize(build_fixture("b_o1").image);
  bytes.resize(bytes.size() / 2);
  const auto r = validate(bytes);
  EXPECT_EQ(r.overall, Overall::Inconclusive);
  EXPECT_FALSE(r.verdicts[0].message.empty());
}

TEST(Validator, UnreachableCodeDoesNotChangeVerdict) {
  const auto fx = build_fixture("b_o2");
  const std::string extra =
      "\n.code\n"
      "dead_code:\n"
      "  MOVI r0, 0xFED40024\n"
      "  STORE [r0+0], r0\n"
      "  JMP dead_code\n";
  const auto img = assemble(fx.source + extra);
  ASSERT_GT(img.code.size(), fx.image.code.size());
  const auto a = validate_fixture(fx);
  const auto b = validate(serialize(img));
  EXPECT_EQ(names(statuses(a)), names(statuses(b)));
  EXPECT_EQ(b.overall, Overall::Valid);
}

TEST(Validator, ReportIsDeterministic) {
  const auto fx = build_fixture("a5_overwrite");
  const auto a = report_json(validate_fixture(fx), false);
  const auto b = report_json(validate_fixture(fx), false);
  EXPECT_EQ(a, b);
  const auto j = nlohmann::json::parse(a);
  EXPECT_EQ(j.at("overall"), "invalid");
  EXPECT_EQ(j.at("properties").size(), 4u);
  EXPECT_EQ(j.at("properties")[2].at("status"), "fail");
  EXPECT_FALSE(j.contains("timings_ms"));
}

TEST(Validator, CoverageOfBenignImage) {
  const auto r = validate_fixture(build_fixture("b_o1"));
  ASSERT_TRUE(r.coverage.has_value());
  EXPECT_TRUE(r.coverage->unmeasured_reachable.empty());
  EXPECT_FALSE(r.coverage->measured.empty());
  for (const auto& b : r.coverage->reachable) EXPECT_TRUE(range_covered(b, r.coverage->measured));
}

TEST(Validator, HiddenCodeIsReported) {
  const auto fx = build_fixture("a3_hidden_code");
  const auto r = validate_fixture(fx);
  ASSERT_TRUE(r.coverage.has_value());
  ASSERT_FALSE(r.coverage->unmeasured_reachable.empty());
  const uint32_t payload = fx.symbols.at("measure_end");
  bool hit = false;
  for (const auto& u : r.coverage->unmeasured_reachable) hit = hit || (u.start >= payload && u.start < payload + 64);
  EXPECT_TRUE(hit);
}
