#pragma once

// Assembly text generators for the fixture corpus.

#include <string>
#include <vector>

#include "bootkeeper/sha1.hpp"

namespace bootkeeper::fixtures {

enum class Level { O0, O1, O2, O3, Os };

struct Sha1Style {
  Level level = Level::O1;
  Sha1::RoundConstants k = Sha1::kStandard;
};

std::string prelude();
std::string sha1_routines(const Sha1Style& style);
// `tpm_send` helper (r0 = 20-byte buffer).
std::string tpm_send(Level level);

std::string benign(Level level);
std::string a1_no_hash();
std::string a2_tampered(const Sha1::RoundConstants& k);
std::string a3_hidden_code();
std::string a4_forged_params(const std::vector<uint8_t>& dormant);
std::string a5_overwrite(const Digest& forged);
std::string a6_decoy(const Digest& forged);
std::string stress();
std::string crc32_control();

}  // namespace bootkeeper::fixtures
