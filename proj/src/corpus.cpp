#include "bootkeeper/corpus.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "bootkeeper/assembler.hpp"
#include "bootkeeper/error.hpp"
#include "bootkeeper/machine.hpp"
#include "corpus_sources.hpp"

namespace bootkeeper {

namespace {

using fixtures::Level;
constexpr PropStatus P = PropStatus::Pass;
constexpr PropStatus F = PropStatus::Fail;
constexpr PropStatus I = PropStatus::Inconclusive;

const std::vector<std::string> kIds = {
    "b_o0",         "b_o1",           "b_o2",           "b_o3",         "b_os",
    "a1_no_hash",   "a2_tampered_sha1", "a3_hidden_code", "a4_forged_params",
    "a5_overwrite", "a6_decoy",       "stress",         "control_crc32",
};

Sha1::RoundConstants tampered_k() {
  auto k = Sha1::kStandard;
  k[2] ^= 0x00000100u;
  return k;
}

Digest digest_of(const FirmwareImage& img, const std::vector<AddressRange>& ranges,
                 const Sha1::RoundConstants& k = Sha1::kStandard) {
  Sha1 h(k);
  for (const auto& r : ranges) {
    for (uint32_t a = r.start; a < r.end(); ++a) {
      const auto b = img.rom_byte(a);
      if (!b) throw Error(Errc::IndexOutOfRange, "measured byte outside the image");
      const uint8_t v = *b;
      h.update({&v, 1});
    }
  }
  return h.finish();
}

Digest repeated_word(uint32_t w) {
  Digest d{};
  for (size_t i = 0; i < d.size(); ++i) d[i] = static_cast<uint8_t>(w >> (8 * (i % 4)));
  return d;
}

Fixture assemble_fixture(FixtureSpec spec, std::string source) {
  auto res = assemble_with_symbols(source);
  Fixture f{std::move(spec), std::move(source), std::move(res.image), std::move(res.symbols)};
  return f;
}

AddressRange measured(const Fixture& f) {
  const uint32_t s = f.symbols.at("start");
  return make_range(s, f.symbols.at("measure_end") - s);
}

Fixture benign_fixture(const std::string& id, Level level, const char* variant, const char* notes) {
  FixtureSpec spec;
  spec.id = id;
  spec.kind = FixtureKind::Benign;
  spec.variant = variant;
  spec.expected = {P, P, P, P};
  spec.expected_overall = "valid";
  spec.notes = notes;
  Fixture f = assemble_fixture(spec, fixtures::benign(level));
  f.spec.measured_manifest = {measured(f)};
  f.spec.delivered = digest_of(f.image, f.spec.measured_manifest);
  return f;
}

Fixture make(const std::string& id) {
  if (id == "b_o0")
    return benign_fixture(id, Level::O0, "O0",
                          "debug-flag branches, wrapper layers, spilled round counter, shift-or rotates, "
                          "TPM base built by helper calls");
  if (id == "b_o1") return benign_fixture(id, Level::O1, "O1", "canonical layout with a hook call and reserved slot");
  if (id == "b_o2") return benign_fixture(id, Level::O2, "O2", "renamed registers, reordered rounds, inlined TPM loop");
  if (id == "b_o3") return benign_fixture(id, Level::O3, "O3", "message schedule unrolled twice");
  if (id == "b_os") return benign_fixture(id, Level::Os, "Os", "inequality loop guards, minimal code");

  FixtureSpec spec;
  spec.id = id;
  spec.kind = FixtureKind::Attack;
  spec.expected_overall = "invalid";

  if (id == "a1_no_hash") {
    spec.variant = "A1_NoHash";
    spec.expected = {P, F, I, I};
    spec.delivered = repeated_word(0x11223344u);
    spec.notes = "sends a constant; nothing is hashed";
    return assemble_fixture(spec, fixtures::a1_no_hash());
  }
  if (id == "a2_tampered_sha1") {
    spec.variant = "A2_TamperedSha1";
    spec.expected = {P, F, I, I};
    spec.notes = "third round constant has one bit flipped";
    Fixture f = assemble_fixture(spec, fixtures::a2_tampered(tampered_k()));
    f.spec.measured_manifest = {measured(f)};
    f.spec.delivered = digest_of(f.image, f.spec.measured_manifest, tampered_k());
    return f;
  }
  if (id == "a3_hidden_code") {
    spec.variant = "A3_HiddenCode";
    spec.expected = {P, P, P, F};
    spec.notes = "hook pointer in data redirected to code in the unmeasured reserved slot";
    Fixture f = assemble_fixture(spec, fixtures::a3_hidden_code());
    f.spec.measured_manifest = {measured(f)};
    f.spec.delivered = digest_of(f.image, f.spec.measured_manifest);
    return f;
  }
  if (id == "a4_forged_params") {
    spec.variant = "A4_ForgedParams";
    spec.expected = {P, P, P, F};
    spec.notes = "hashes a dormant byte copy of b_o1's measured code instead of itself";
    const Fixture o1 = make("b_o1");
    const auto& r = o1.spec.measured_manifest.front();
    std::vector<uint8_t> dormant(o1.image.code.begin() + (r.start - kLoadBase),
                                 o1.image.code.begin() + (r.start - kLoadBase) + r.length);
    Fixture f = assemble_fixture(spec, fixtures::a4_forged_params(dormant));
    f.spec.measured_manifest = {make_range(f.symbols.at("dormant"), r.length)};
    f.spec.delivered = digest_of(f.image, f.spec.measured_manifest);
    return f;
  }
  if (id == "a5_overwrite" || id == "a6_decoy") {
    const Fixture o1 = make("b_o1");
    const bool a5 = id == "a5_overwrite";
    spec.variant = a5 ? "A5_Overwrite" : "A6_Decoy";
    spec.expected = {P, P, F, P};
    spec.notes = a5 ? "computed digest overwritten with b_o1's digest before sending"
                    : "computed digest copied to a decoy buffer; b_o1's digest sent from another buffer";
    spec.delivered = o1.spec.delivered;
    Fixture f = assemble_fixture(spec, a5 ? fixtures::a5_overwrite(o1.spec.delivered)
                                          : fixtures::a6_decoy(o1.spec.delivered));
    f.spec.measured_manifest = {measured(f)};
    return f;
  }
  if (id == "stress") {
    spec.kind = FixtureKind::Stress;
    spec.variant = "Stress";
    spec.expected = {I, I, I, I};
    spec.expected_overall = "inconclusive";
    spec.delivered = repeated_word(0x5354524Du);
    spec.notes = "1000 data-dependent diamonds and nested loops over uninitialized RAM before the TPM write";
    return assemble_fixture(spec, fixtures::stress());
  }
  if (id == "control_crc32") {
    spec.kind = FixtureKind::Control;
    spec.variant = "Crc32";
    spec.expected = {P, F, I, I};
    spec.notes = "measures its code with CRC32 instead of SHA-1";
    Fixture f = assemble_fixture(spec, fixtures::crc32_control());
    f.spec.measured_manifest = {measured(f)};
    const auto& r = f.spec.measured_manifest.front();
    const uint32_t c = crc32({f.image.code.data() + (r.start - kLoadBase), r.length});
    f.spec.delivered = repeated_word(c);
    return f;
  }
  throw Error(Errc::UnknownFixture, id);
}

nlohmann::json spec_json(const FixtureSpec& s) {
  nlohmann::json j;
  j["id"] = s.id;
  j["kind"] = fixture_kind_name(s.kind);
  j["variant"] = s.variant;
  j["file"] = s.id + ".fw";
  for (int i = 0; i < 4; ++i) j["expected"]["P" + std::to_string(i + 1)] = prop_status_name(s.expected[i]);
  j["expected_overall"] = s.expected_overall;
  j["measured_manifest"] = nlohmann::json::array();
  for (const auto& r : s.measured_manifest)
    j["measured_manifest"].push_back({{"start", hex32(r.start)}, {"length", r.length}});
  j["delivered"] = to_hex(s.delivered);
  j["golden_pcr0"] = to_hex(s.golden_pcr0);
  j["notes"] = s.notes;
  return j;
}

}  // namespace

const char* fixture_kind_name(FixtureKind k) {
  switch (k) {
    case FixtureKind::Benign: return "benign";
    case FixtureKind::Attack: return "attack";
    case FixtureKind::Stress: return "stress";
    case FixtureKind::Control: return "control";
  }
  return "?";
}

std::vector<std::string> fixture_ids() { return kIds; }

Fixture build_fixture(const std::string& id) {
  Fixture f = make(id);
  const Digest d = f.spec.delivered;
  f.spec.golden_pcr0 = extend_chain(std::span<const Digest>(&d, 1));
  check_image(f.image);
  return f;
}

std::vector<Fixture> build_all_fixtures() {
  std::vector<Fixture> out;
  for (const auto& id : kIds) out.push_back(build_fixture(id));
  return out;
}

std::string manifest_json(const std::vector<Fixture>& fixtures) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& f : fixtures) arr.push_back(spec_json(f.spec));
  return arr.dump(2) + "\n";
}

std::string build_corpus(const std::string& outdir) {
  std::error_code ec;
  std::filesystem::create_directories(outdir, ec);
  if (ec) throw Error(Errc::IoError, outdir + ": " + ec.message());
  const auto all = build_all_fixtures();
  for (const auto& f : all) {
    write_file((std::filesystem::path(outdir) / (f.spec.id + ".fw")).string(), serialize(f.image));
    std::ofstream src(std::filesystem::path(outdir) / (f.spec.id + ".fasm"));
    src << f.source;
  }
  const std::string text = manifest_json(all);
  std::ofstream out(std::filesystem::path(outdir) / "manifest.json");
  out << text;
  if (!out) throw Error(Errc::IoError, outdir + "/manifest.json");
  return text;
}

std::array<PropStatus, 4> expected_verdict(const FixtureSpec& spec) { return spec.expected; }

std::array<PropStatus, 4> expected_verdict(const std::string& id) {
  if (std::find(kIds.begin(), kIds.end(), id) == kIds.end()) throw Error(Errc::UnknownFixture, id);
  return make(id).spec.expected;
}

uint32_t crc32(std::span<const uint8_t> bytes) {
  uint32_t c = 0xFFFFFFFFu;
  for (uint8_t b : bytes) {
    c ^= b;
    for (int i = 0; i < 8; ++i) c = (c >> 1) ^ (0xEDB88320u & (0u - (c & 1u)));
  }
  return ~c;
}

}  // namespace bootkeeper
