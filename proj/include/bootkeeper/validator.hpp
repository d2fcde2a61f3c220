#pragma once

// End-to-end validation of a measuring boot-stage image:
//   P1  a TPM data-FIFO write exists
//   P2  the written value comes from an authentic SHA-1 routine
//   P3  the hash output reaches the TPM unmodified
//   P4  every reachable block lies inside the hashed regions

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "bootkeeper/cfg.hpp"
#include "bootkeeper/cryptoid.hpp"
#include "bootkeeper/isa.hpp"
#include "bootkeeper/symex.hpp"

namespace bootkeeper {

enum class PropStatus { Pass, Fail, Inconclusive };
enum class Property { P1_TpmWritePresent, P2_AuthenticHash, P3_Atomicity, P4_Completeness };
enum class Overall { Valid, Invalid, Inconclusive };

const char* prop_status_name(PropStatus s);
const char* property_id(Property p);    // "P1".."P4"
const char* property_name(Property p);  // "P1_TpmWritePresent", ...
const char* overall_name(Overall o);

struct Evidence {
  enum class Kind { Instr, Range, Path };
  Kind kind = Kind::Instr;
  uint32_t addr = 0;            // Instr
  AddressRange range{};         // Range
  std::vector<uint32_t> path;   // Path (block starts)
  std::string note;
};

Evidence instr_evidence(uint32_t addr, std::string note = {});
Evidence range_evidence(AddressRange r, std::string note = {});
Evidence path_evidence(std::vector<uint32_t> path, std::string note = {});

struct PropertyVerdict {
  Property property = Property::P1_TpmWritePresent;
  PropStatus status = PropStatus::Inconclusive;
  std::vector<Evidence> evidence;
  std::string message;
};

struct CoverageReport {
  std::vector<AddressRange> measured;
  std::vector<AddressRange> reachable;
  std::vector<AddressRange> unmeasured_reachable;
  std::vector<AddressRange> conditionally_reachable;  // unresolved indirect blocks
};

struct ValidationConfig {
  double timeout_seconds = 600.0;
  ExplorationConfig exploration;  // timeout/deadline fields are overridden
  CfgOptions cfg;
  MatchLimits match;
};

struct Report {
  std::string image_sha1;
  std::array<PropertyVerdict, 4> verdicts;
  Overall overall = Overall::Inconclusive;
  std::optional<CoverageReport> coverage;
  std::vector<std::pair<std::string, double>> timings_ms;
  ValidationConfig config;
};

// Valid iff all four pass; invalid if any fails; inconclusive otherwise.
Overall overall_of(const std::array<PropertyVerdict, 4>& verdicts);

struct P1Result {
  PropertyVerdict verdict;
  FindResult find;
};

struct HashSite {
  uint32_t call_addr = 0;
  std::vector<AddressRange> inputs;  // candidate (buffer, length) ranges
  std::optional<uint32_t> out;       // output buffer (r2), when constant
  bool resolved = false;
};

struct P2Result {
  PropertyVerdict verdict;
  HashIdentification hash;
};

P1Result check_p1(const FirmwareImage& image, const Cfg& cfg, const ExplorationConfig& config);
P2Result check_p2(const FirmwareImage& image, const Cfg& cfg, const std::vector<TpmWriteEvent>& events,
                  const SignatureDb& db, const MatchLimits& limits = {});
PropertyVerdict check_p3(const FirmwareImage& image, const Cfg& cfg, const FindResult& find,
                         const HashIdentification& hash, const ExplorationConfig& config);
// Hashed regions at every observed call of the identified routine
// (r0 = buffer, r1 = length).
std::vector<HashSite> extract_measured_regions(const FindResult& find, const HashIdentification& hash);
PropertyVerdict check_p4(const Cfg& cfg, const std::vector<HashSite>& sites, CoverageReport* coverage = nullptr);

Report validate(std::span<const uint8_t> image_bytes, const ValidationConfig& config = {});
Report validate_image(const FirmwareImage& image, const std::string& image_sha1,
                      const ValidationConfig& config = {});

// JSON report; `with_timings = false` omits the timings block.
std::string report_json(const Report& r, bool with_timings = true);
std::string report_summary(const Report& r);  // human-readable, one line per property
int exit_code(Overall o);                     // 0 valid, 1 invalid, 3 inconclusive

}  // namespace bootkeeper
