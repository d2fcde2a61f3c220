#pragma once

// Path-based symbolic execution over firmware images.
//
// Memory is keyed by split address expressions (`base + offset`); must-alias
// is syntactic equality after folding. Code and .data are ROM and always read
// concretely; uninitialised RAM, stack and MMIO reads yield fresh symbols.
// States are stepped breadth-first so that path explosion exhausts the
// budget before late program points are reached.

#include <array>
#include <chrono>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <vector>

#include "bootkeeper/expr.hpp"
#include "bootkeeper/isa.hpp"
#include "bootkeeper/solver.hpp"

namespace bootkeeper {

using Clock = std::chrono::steady_clock;

struct ExplorationConfig {
  double timeout_seconds = 600.0;
  uint64_t max_states = 20'000;         // states created, including forks
  uint64_t max_depth = 20'000'000;     // instructions per state
  uint32_t loop_bound = 2;             // symbolic forks per backward branch
  uint32_t max_snapshots_per_site = 64;
  // Overrides the timeout when set (shared deadline of a whole validation).
  std::optional<Clock::time_point> deadline;

  Clock::time_point effective_deadline(Clock::time_point start) const;
};

// Definition site for reaching-definition tracking.
struct DefSite {
  enum class Kind : uint8_t { Initial, Instr, HashOut };
  Kind kind = Kind::Initial;
  uint32_t value = 0;  // instruction address or hash-output byte index

  static DefSite initial() { return {}; }
  static DefSite instr(uint32_t a) { return {Kind::Instr, a}; }
  static DefSite hash_out(uint32_t i) { return {Kind::HashOut, i}; }
  auto operator<=>(const DefSite&) const = default;
};

// Per-byte def tags: `last` is the instruction that wrote the location,
// `origin` follows copies (MOV/LOAD/STORE) back to the producing definition,
// `via` is the last store the byte passed through on its way here.
struct ByteTags {
  DefSite last;
  DefSite origin;
  DefSite via;
  auto operator<=>(const ByteTags&) const = default;
};

struct MemKey {
  uint64_t base_hash = 0;  // 0 for concrete addresses
  uint32_t offset = 0;
  auto operator<=>(const MemKey&) const = default;
};

struct MemCell {
  Expr word;          // byte value = (word >> 8*index) & 0xFF
  uint8_t index = 0;
  ByteTags tags;
};

// Persistent list of block start addresses.
struct PathNode {
  uint32_t block;
  std::shared_ptr<const PathNode> prev;
};
using PathList = std::shared_ptr<const PathNode>;
std::vector<uint32_t> path_to_vector(const PathList& p);

struct SymState {
  std::array<Expr, kNumRegs> regs;
  std::array<std::array<ByteTags, 4>, kNumRegs> reg_tags{};
  uint32_t pc = 0;
  std::map<MemKey, MemCell> mem;
  std::vector<Expr> constraints;
  uint64_t depth = 0;
  std::map<uint32_t, uint32_t> fork_counts;
  PathList path;
  uint32_t tpm_bytes = 0;  // bytes delivered to the TPM data FIFO so far
};

struct TpmWriteEvent {
  uint32_t instr_addr = 0;
  Expr value;
  std::vector<Expr> path_constraints;
  std::vector<uint32_t> path;
  bool must = true;
  bool solver_unknown = false;
};

struct CallObservation {
  uint32_t call_addr = 0;
  uint32_t target = 0;
  std::array<Expr, kNumRegs> regs;
  std::vector<Expr> constraints;
};

// A TPM store executed along a replayed path, with per-byte tags of the
// value operand.
struct TpmStoreUse {
  uint64_t step = 0;
  uint32_t instr_addr = 0;
  uint8_t value_reg = 0;
  unsigned size = 4;
  uint32_t stream_offset = 0;  // index of the first delivered byte in the FIFO stream
  std::array<ByteTags, 4> tags{};
  std::vector<uint32_t> path;  // blocks up to and including this store
};

enum class StateEnd { Halt, Fault, DepthLimit, Unresolved, Running };

struct ExploreResult {
  std::vector<TpmWriteEvent> events;           // one per store site, in discovery order
  std::set<uint32_t> visited;                  // executed instruction addresses
  bool exhausted = true;
  bool timed_out = false;
  uint64_t states_created = 0;
  uint64_t steps = 0;
  std::vector<CallObservation> calls;          // distinct per call site
  std::map<uint32_t, std::vector<SymState>> return_snapshots;  // keyed by return site
  std::set<uint32_t> snapshot_overflow;  // return sites past max_snapshots_per_site
  // Populated when tracking tags.
  std::vector<TpmStoreUse> tpm_uses;
  std::vector<std::vector<uint32_t>> completed_paths;
};

struct ExploreOptions {
  bool track_tags = false;
  bool capture_returns = true;
  bool record_paths = false;  // keep completed path block lists
  uint64_t max_paths = 0;     // 0 = unlimited; exceeding clears `exhausted`
};

// Reset state at `entry`: registers zero, r7 = stack top, memory unknown.
SymState initial_state(uint32_t entry);

ExploreResult explore(const FirmwareImage& image, uint32_t entry, const ExplorationConfig& config);
ExploreResult explore_from(const FirmwareImage& image, std::vector<SymState> roots,
                           const ExplorationConfig& config, const ExploreOptions& options,
                           uint32_t first_var = 1u << 20);

enum class FindStatus { Found, None, AnalysisTimeout };

struct FindResult {
  FindStatus status = FindStatus::None;
  std::vector<TpmWriteEvent> events;  // deduplicated by instr_addr, ascending
  ExploreResult exploration;
};

FindResult find_tpm_writes(const FirmwareImage& image, const ExplorationConfig& config);

// Deduplicates by instruction address (keeping must over may), ascending.
std::vector<TpmWriteEvent> dedup_events(const std::vector<TpmWriteEvent>& events);

// Single-step interface shared with the path replayer and the indirect-jump
// resolver.
class SymEngine {
 public:
  SymEngine(const FirmwareImage& image, bool track_tags, uint32_t first_var = 1);

  struct StepOutcome {
    std::vector<SymState> next;  // empty when the state ended
    StateEnd end = StateEnd::Running;
    std::optional<TpmWriteEvent> tpm_event;
    std::optional<TpmStoreUse> tpm_use;
    std::optional<CallObservation> call;
    std::optional<uint32_t> returned_to;
  };

  // Executes one instruction of `s`. Branches with symbolic conditions fork
  // (subject to satisfiability). When `forced_next` is set the branch
  // direction is dictated and unsatisfiable choices yield no successor.
  StepOutcome step(SymState s, std::optional<uint32_t> forced_next = std::nullopt);

  Expr read(SymState& s, const Expr& addr, unsigned size, std::array<ByteTags, 4>* tags = nullptr);
  void write(SymState& s, const Expr& addr, const Expr& value, unsigned size,
             const std::array<ByteTags, 4>& tags);

  uint32_t fresh_var();
  uint32_t next_var() const { return next_var_; }
  uint64_t steps() const { return steps_; }
  uint32_t loop_bound = 2;
  SolverLimits solver_limits;

 private:
  const FirmwareImage& image_;
  bool track_;
  uint32_t next_var_;
  uint64_t steps_ = 0;
};

}  // namespace bootkeeper
