#pragma once

// Fixture firmware images: benign SHA-1 measuring variants that model
// compiler optimization levels, attack variants, a path-explosion stress
// image and a CRC32 negative control, plus their ground-truth manifest.

#include <array>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "bootkeeper/isa.hpp"
#include "bootkeeper/sha1.hpp"
#include "bootkeeper/validator.hpp"

namespace bootkeeper {

// RAM layout shared by the fixtures.
inline constexpr uint32_t kShaH = 0x0030'0000;
inline constexpr uint32_t kShaW = 0x0030'0100;
inline constexpr uint32_t kShaBlk = 0x0030'0300;
inline constexpr uint32_t kDigestBuf = 0x0030'0400;
inline constexpr uint32_t kShaCtx = 0x0030'0500;
inline constexpr uint32_t kRealBuf = 0x0030'0600;
inline constexpr uint32_t kDecoyBuf = 0x0030'0640;
inline constexpr uint32_t kSendBuf = 0x0030'0680;
inline constexpr uint32_t kDebugFlags = 0x0030'0E00;
inline constexpr uint32_t kMarker = 0x0030'0F00;

enum class FixtureKind { Benign, Attack, Stress, Control };

const char* fixture_kind_name(FixtureKind k);

struct FixtureSpec {
  std::string id;       // file stem, e.g. "b_o2", "a3_hidden_code"
  FixtureKind kind = FixtureKind::Benign;
  std::string variant;  // O0..Os, A1_NoHash..A6_Decoy, Stress, Crc32
  std::array<PropStatus, 4> expected{};  // P1..P4
  std::string expected_overall;          // valid | invalid | inconclusive
  std::vector<AddressRange> measured_manifest;
  Digest delivered{};   // the 20 bytes the firmware sends to the TPM
  Digest golden_pcr0{};  // PCR0 after extending `delivered` into a zero bank
  std::string notes;
};

struct Fixture {
  FixtureSpec spec;
  std::string source;  // .fasm text
  FirmwareImage image;
  std::map<std::string, uint32_t> symbols;
};

// Ids in manifest order: 5 benign, 6 attacks, stress, control.
std::vector<std::string> fixture_ids();
Fixture build_fixture(const std::string& id);  // throws Error(UnknownFixture)
std::vector<Fixture> build_all_fixtures();

// Writes `<id>.fw` for every fixture and `manifest.json`; returns the manifest
// text. Throws Error(IoError).
std::string build_corpus(const std::string& outdir);
std::string manifest_json(const std::vector<Fixture>& fixtures);

std::array<PropStatus, 4> expected_verdict(const FixtureSpec& spec);
std::array<PropStatus, 4> expected_verdict(const std::string& id);

// Standalone SHA-1 routines in the canonical style (entry = sha1).
std::string reference_sha1_source();
// Small programs used by unit tests.
std::string jump_table_source();
std::string diamond_source();

uint32_t crc32(std::span<const uint8_t> bytes);

}  // namespace bootkeeper
