#pragma once

// Hash-function identification by labelled subgraph isomorphism of
// normalized data-flow graphs against reference signatures.

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "bootkeeper/cfg.hpp"
#include "bootkeeper/dfg.hpp"

namespace bootkeeper {

struct Signature {
  std::string name;
  Dfg graph;  // normalized; roots are matched jointly
};

struct SignatureDb {
  std::string algorithm = "sha1";
  std::vector<Signature> signatures;
  std::vector<uint32_t> round_constants;
  std::vector<uint32_t> initial_state;
  std::set<uint32_t> iteration_bounds;  // loop-guard bounds every match must show
};

struct MatchResult {
  std::optional<std::string> matched_signature;
  std::vector<std::pair<uint32_t, uint32_t>> mapping;  // signature node -> candidate node
  std::set<uint32_t> matched_blocks;
  double score = 0.0;  // fraction of signature nodes embedded by the best attempt
  bool budget_exceeded = false;
};

struct MatchLimits {
  uint64_t max_steps = 2'000'000;  // backtracking steps per signature
};

// Embeds one signature into `candidate`. Leaves (input/load slots) of the
// signature match any node; commutative operands are unordered.
MatchResult match_one(const Dfg& candidate, const Signature& sig, const MatchLimits& limits = {});
// Best match over the whole database (first full match, else best score).
MatchResult match_signature(const Dfg& candidate, const SignatureDb& db, const MatchLimits& limits = {});

SignatureDb make_reference_signatures();
std::string signature_db_json(const SignatureDb& db);

struct HashIdentification {
  bool found = false;
  uint32_t function = 0;                 // entry of the identified routine
  std::set<uint32_t> functions;          // its call closure
  std::set<uint32_t> blocks;             // blocks of the closure
  std::vector<std::string> matched;      // signatures embedded
  std::vector<std::string> missing;      // signatures or metadata not found
  std::set<uint32_t> bounds;             // loop bounds observed in the closure
};

// Call closure of `entry` (the function and everything it transitively calls).
std::set<uint32_t> call_closure(const Cfg& cfg, uint32_t entry);

// Checks one function's call closure against every signature and metadata.
HashIdentification check_function(const Cfg& cfg, uint32_t entry, const SignatureDb& db);

// Smallest function (by closure block count) whose closure matches fully.
// `restrict_to`, when given, limits the candidate entries considered.
HashIdentification identify_hash(const Cfg& cfg, const SignatureDb& db,
                                 const std::optional<std::set<uint32_t>>& restrict_to = std::nullopt);

}  // namespace bootkeeper
