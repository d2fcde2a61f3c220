#include "bootkeeper/validator.hpp"

#include <algorithm>
#include <map>

#include "bootkeeper/dataflow.hpp"
#include "bootkeeper/error.hpp"
#include "bootkeeper/sha1.hpp"
#include "bootkeeper/solver.hpp"

namespace bootkeeper {

Evidence instr_evidence(uint32_t addr, std::string note) {
  Evidence e;
  e.kind = Evidence::Kind::Instr;
  e.addr = addr;
  e.note = std::move(note);
  return e;
}

Evidence range_evidence(AddressRange r, std::string note) {
  Evidence e;
  e.kind = Evidence::Kind::Range;
  e.range = r;
  e.note = std::move(note);
  return e;
}

Evidence path_evidence(std::vector<uint32_t> path, std::string note) {
  Evidence e;
  e.kind = Evidence::Kind::Path;
  e.path = std::move(path);
  e.note = std::move(note);
  return e;
}

Overall overall_of(const std::array<PropertyVerdict, 4>& verdicts) {
  bool all_pass = true;
  for (const auto& v : verdicts) {
    if (v.status == PropStatus::Fail) return Overall::Invalid;
    if (v.status != PropStatus::Pass) all_pass = false;
  }
  return all_pass ? Overall::Valid : Overall::Inconclusive;
}

namespace {

PropertyVerdict verdict(Property p, PropStatus s, std::string msg, std::vector<Evidence> ev = {}) {
  PropertyVerdict v;
  v.property = p;
  v.status = s;
  v.message = std::move(msg);
  v.evidence = std::move(ev);
  return v;
}

PropertyVerdict skipped(Property p, const char* needs, uint32_t where) {
  return verdict(p, PropStatus::Inconclusive, std::string("not evaluated: requires ") + needs,
                 {instr_evidence(where, "entry")});
}

std::set<uint32_t> functions_touched(const Cfg& cfg, const Slice& slice) {
  std::set<uint32_t> out(slice.entry_functions.begin(), slice.entry_functions.end());
  std::set<uint32_t> blocks;
  for (uint32_t a : slice.instructions)
    if (const auto* b = cfg.block_containing(a)) blocks.insert(b->start);
  for (uint32_t b : blocks)
    for (uint32_t f : cfg.functions_of(b)) out.insert(f);
  return out;
}

const BasicBlock* block_of(const Cfg& cfg, uint32_t addr) { return cfg.block_containing(addr); }

bool in_blocks(const Cfg& cfg, const std::set<uint32_t>& blocks, uint32_t addr) {
  const auto* b = block_of(cfg, addr);
  return b && blocks.count(b->start);
}

std::string join(const std::vector<std::string>& v) {
  std::string s;
  for (const auto& x : v) s += (s.empty() ? "" : ", ") + x;
  return s;
}

}  // namespace

P1Result check_p1(const FirmwareImage& image, const Cfg& cfg, const ExplorationConfig& config) {
  P1Result r;
  r.find = find_tpm_writes(image, config);
  const auto P = Property::P1_TpmWritePresent;
  std::vector<Evidence> must, corroborated;
  for (const auto& e : r.find.events) {
    if (e.must) {
      must.push_back(instr_evidence(e.instr_addr, "TPM data FIFO store"));
      continue;
    }
    try {
      const auto inst = image.instruction_at(e.instr_addr);
      const Slice s = backward_slice(image, cfg, {e.instr_addr, inst.rs2});
      if (!s.instructions.empty()) corroborated.push_back(instr_evidence(e.instr_addr, "may-store, slice non-empty"));
    } catch (const Error&) {
    }
  }
  const std::string stats = std::to_string(r.find.exploration.states_created) + " states, " +
                            std::to_string(r.find.exploration.steps) + " steps";
  if (!must.empty()) {
    r.verdict = verdict(P, PropStatus::Pass, std::to_string(must.size()) + " TPM write(s); " + stats, must);
  } else if (!corroborated.empty()) {
    r.verdict = verdict(P, PropStatus::Pass, "may-write corroborated by slice; " + stats, corroborated);
  } else if (!r.find.events.empty()) {
    std::vector<Evidence> ev;
    for (const auto& e : r.find.events) ev.push_back(instr_evidence(e.instr_addr, "may-store, empty slice"));
    r.verdict = verdict(P, PropStatus::Inconclusive, "only uncorroborated may-writes; " + stats, ev);
  } else if (r.find.status == FindStatus::None) {
    std::vector<Evidence> ev;
    for (const auto& rg : reachable_blocks(cfg)) ev.push_back(range_evidence(rg, "explored, no TPM write"));
    if (ev.empty()) ev.push_back(instr_evidence(image.entry, "entry"));
    r.verdict = verdict(P, PropStatus::Fail, "no TPM write on any path; " + stats, ev);
  } else {
    r.verdict = verdict(P, PropStatus::Inconclusive,
                        std::string(r.find.exploration.timed_out ? "analysis timeout" : "exploration budget exhausted") +
                            " before any TPM write; " + stats,
                        {instr_evidence(image.entry, "entry")});
  }
  return r;
}

P2Result check_p2(const FirmwareImage& image, const Cfg& cfg, const std::vector<TpmWriteEvent>& events,
                  const SignatureDb& db, const MatchLimits& limits) {
  (void)limits;
  const auto P = Property::P2_AuthenticHash;
  P2Result r;
  if (events.empty()) {
    r.verdict = skipped(P, "a TPM write", image.entry);
    return r;
  }
  std::map<std::set<uint32_t>, HashIdentification> cache;
  std::vector<Evidence> ev;
  for (const auto& e : events) {
    Slice slice;
    try {
      slice = backward_slice(image, cfg, {e.instr_addr, image.instruction_at(e.instr_addr).rs2});
    } catch (const Error& err) {
      r.verdict = verdict(P, PropStatus::Fail, std::string("incomplete CFG: ") + err.what(),
                          {instr_evidence(e.instr_addr, "TPM store outside recovered code")});
      return r;
    }
    const auto candidates = functions_touched(cfg, slice);
    auto it = cache.find(candidates);
    if (it == cache.end()) it = cache.emplace(candidates, identify_hash(cfg, db, candidates)).first;
    const HashIdentification& id = it->second;
    if (!id.found) {
      std::vector<Evidence> fev{instr_evidence(e.instr_addr, "TPM store")};
      for (uint32_t f : candidates) fev.push_back(instr_evidence(f, "candidate function, no full match"));
      std::string msg = "no authentic " + db.algorithm + " routine in the slice of the TPM write";
      if (!id.missing.empty()) msg += "; closest candidate lacks: " + join(id.missing);
      r.verdict = verdict(P, PropStatus::Fail, msg, fev);
      r.hash = id;
      return r;
    }
    if (!r.hash.found) r.hash = id;
    ev.push_back(instr_evidence(e.instr_addr, "TPM store"));
  }
  ev.push_back(instr_evidence(r.hash.function, db.algorithm + " routine"));
  for (uint32_t b : r.hash.blocks)
    if (const auto* blk = cfg.block_at(b)) ev.push_back(range_evidence({blk->start, blk->length}, "matched block"));
  r.verdict = verdict(P, PropStatus::Pass, db.algorithm + " identified at " + hex32(r.hash.function), ev);
  return r;
}

PropertyVerdict check_p3(const FirmwareImage& image, const Cfg& cfg, const FindResult& find,
                         const HashIdentification& hash, const ExplorationConfig& config) {
  const auto P = Property::P3_Atomicity;
  if (!hash.found) return skipped(P, "an identified hash routine", image.entry);
  if (!find.exploration.exhausted)
    return verdict(P, PropStatus::Inconclusive, "hash-return states incomplete (exploration truncated)",
                   {instr_evidence(hash.function, "hash routine")});

  std::vector<SymState> roots;
  std::set<uint32_t> seeded;
  for (const auto& call : find.exploration.calls) {
    if (call.target != hash.function) continue;
    if (!is_const(call.regs[2]))
      return verdict(P, PropStatus::Inconclusive, "hash output buffer is not constant",
                     {instr_evidence(call.call_addr, "hash call")});
    const uint32_t out = const_value(call.regs[2]);
    if (find.exploration.snapshot_overflow.count(call.call_addr + kInstrSize))
      return verdict(P, PropStatus::Inconclusive, "too many distinct states at the hash return",
                     {instr_evidence(call.call_addr, "hash call")});
    auto it = find.exploration.return_snapshots.find(call.call_addr + kInstrSize);
    if (it == find.exploration.return_snapshots.end() || !seeded.insert(it->first).second) continue;
    for (SymState s : it->second) {
      for (uint32_t i = 0; i < 20; ++i) {
        auto c = s.mem.find(MemKey{0, out + i});
        if (c == s.mem.end()) continue;
        const DefSite h = DefSite::hash_out(i);
        c->second.tags = {h, h, h};
      }
      roots.push_back(std::move(s));
    }
  }
  if (roots.empty())
    return verdict(P, PropStatus::Inconclusive, "the hash routine never returns",
                   {instr_evidence(hash.function, "hash routine")});

  ExploreOptions opts;
  opts.track_tags = true;
  opts.capture_returns = false;
  const ExploreResult res = explore_from(image, std::move(roots), config, opts, 1u << 24);

  std::set<uint32_t> reached;
  for (const auto& use : res.tpm_uses) {
    reached.insert(use.instr_addr);
    for (unsigned j = 0; j < use.size; ++j) {
      const uint32_t k = use.stream_offset + j;
      const ByteTags& t = use.tags[j];
      if (t.origin == DefSite::hash_out(k % 20)) continue;
      if (t.origin.kind == DefSite::Kind::Instr && in_blocks(cfg, hash.blocks, t.origin.value)) continue;
      std::vector<Evidence> ev;
      if (t.via.kind == DefSite::Kind::Instr) ev.push_back(instr_evidence(t.via.value, "store of the sent value"));
      if (t.origin.kind == DefSite::Kind::Instr && t.origin != t.via)
        ev.push_back(instr_evidence(t.origin.value, "definition of the sent value"));
      ev.push_back(instr_evidence(use.instr_addr, "TPM store"));
      ev.push_back(path_evidence(use.path, "hash return to TPM store"));
      std::string what = t.origin.kind == DefSite::Kind::HashOut
                             ? "digest byte " + std::to_string(t.origin.value) + " sent at stream offset " +
                                   std::to_string(k)
                             : "value not produced by the hash routine";
      return verdict(P, PropStatus::Fail, "measurement modified before the TPM write: " + what, ev);
    }
  }
  for (const auto& e : find.events) {
    if (reached.count(e.instr_addr)) continue;
    if (!res.exhausted) break;
    return verdict(P, PropStatus::Fail, "TPM write not preceded by the hash routine",
                   {instr_evidence(e.instr_addr, "TPM store"), path_evidence(e.path, "path to the store")});
  }
  if (!res.exhausted)
    return verdict(P, PropStatus::Inconclusive,
                   res.timed_out ? "analysis timeout after the hash return" : "path budget exhausted after the hash return",
                   {instr_evidence(hash.function, "hash routine")});
  std::vector<Evidence> ev;
  for (uint32_t a : reached) ev.push_back(instr_evidence(a, "TPM store fed by the digest"));
  return verdict(P, PropStatus::Pass, std::to_string(res.tpm_uses.size()) + " TPM store(s) checked", ev);
}

std::vector<HashSite> extract_measured_regions(const FindResult& find, const HashIdentification& hash) {
  std::vector<HashSite> out;
  if (!hash.found) return out;
  for (const auto& call : find.exploration.calls) {
    if (call.target != hash.function) continue;
    HashSite s;
    s.call_addr = call.call_addr;
    if (is_const(call.regs[2])) s.out = const_value(call.regs[2]);
    auto values = [&](const Expr& e) -> std::optional<std::vector<uint32_t>> {
      if (is_const(e)) return std::vector<uint32_t>{const_value(e)};
      const auto r = solve(call.constraints, e, 64);
      if (r.status != SolveStatus::Values || r.capped || r.values.empty()) return std::nullopt;
      return r.values;
    };
    const auto bufs = values(call.regs[0]);
    const auto lens = values(call.regs[1]);
    if (bufs && lens) {
      s.resolved = true;
      for (uint32_t b : *bufs)
        for (uint32_t l : *lens) {
          if (l == 0) continue;
          if (uint64_t{b} + l > (uint64_t{1} << 32)) s.resolved = false;
          else s.inputs.push_back({b, l});
        }
    }
    out.push_back(std::move(s));
  }
  return out;
}

PropertyVerdict check_p4(const Cfg& cfg, const std::vector<HashSite>& sites, CoverageReport* coverage) {
  const auto P = Property::P4_Completeness;
  CoverageReport cov;
  std::vector<Evidence> ev;
  std::vector<AddressRange> measured;
  for (const auto& s : sites) {
    if (!s.resolved) {
      ev.push_back(instr_evidence(s.call_addr, "hash arguments unresolved"));
      continue;
    }
    if (s.inputs.empty()) continue;
    std::vector<AddressRange> common = {s.inputs.front()};
    for (size_t i = 1; i < s.inputs.size(); ++i) common = intersect_ranges(common, {s.inputs[i]});
    measured.insert(measured.end(), common.begin(), common.end());
  }
  cov.measured = normalize_ranges(measured);
  cov.reachable = normalize_ranges(reachable_blocks(cfg));
  cov.unmeasured_reachable = subtract_ranges(cov.reachable, cov.measured);
  for (uint32_t b : cfg.unresolved)
    if (const auto* blk = cfg.block_at(b)) cov.conditionally_reachable.push_back({blk->start, blk->length});
  if (coverage) *coverage = cov;

  if (sites.empty())
    return verdict(P, PropStatus::Fail, "no observed call of the hash routine", {instr_evidence(cfg.entry, "entry")});
  bool hole = false;
  for (const auto& [start, blk] : cfg.nodes) {
    if (range_covered({blk.start, blk.length}, cov.measured)) continue;
    bool reach = false;
    for (const auto& r : cov.reachable) reach = reach || r.contains(blk.start);
    if (!reach) continue;
    hole = true;
    ev.push_back(range_evidence({blk.start, blk.length}, "reachable block outside the measured regions"));
  }
  for (uint32_t b : cfg.unresolved) ev.push_back(instr_evidence(b, "IncompleteCfg: unresolved indirect transfer"));
  if (ev.empty()) {
    std::vector<Evidence> pe;
    for (const auto& r : cov.measured) pe.push_back(range_evidence(r, "measured"));
    return verdict(P, PropStatus::Pass, "all reachable code is measured", pe);
  }
  std::string msg;
  if (hole) msg = "reachable code outside the measured regions";
  if (!cfg.unresolved.empty()) msg += std::string(msg.empty() ? "" : "; ") + "IncompleteCfg";
  if (msg.empty()) msg = "hash arguments could not be resolved";
  return verdict(P, PropStatus::Fail, msg, ev);
}

namespace {

const SignatureDb& reference_db() {
  static const SignatureDb db = make_reference_signatures();
  return db;
}

class StageTimer {
 public:
  explicit StageTimer(Report& r) : r_(r), t_(Clock::now()) {}
  void mark(const std::string& stage) {
    const auto now = Clock::now();
    r_.timings_ms.emplace_back(stage, std::chrono::duration<double, std::milli>(now - t_).count());
    t_ = now;
  }

 private:
  Report& r_;
  Clock::time_point t_;
};

void fill_all(Report& rep, const std::string& msg, const Evidence& ev) {
  for (int i = 0; i < 4; ++i)
    rep.verdicts[i] = verdict(static_cast<Property>(i), PropStatus::Inconclusive, msg, {ev});
}

}  // namespace

Report validate_image(const FirmwareImage& image, const std::string& image_sha1, const ValidationConfig& config) {
  Report rep;
  rep.image_sha1 = image_sha1;
  rep.config = config;
  const auto t0 = Clock::now();
  const auto deadline = t0 + std::chrono::duration_cast<Clock::duration>(
                                 std::chrono::duration<double>(config.timeout_seconds));
  ExplorationConfig ec = config.exploration;
  ec.timeout_seconds = config.timeout_seconds;
  ec.deadline = deadline;
  CfgOptions co = config.cfg;
  co.deadline = deadline;
  StageTimer timer(rep);

  Cfg cfg;
  try {
    cfg = recover_cfg(image, co);
  } catch (const Error& e) {
    timer.mark("cfg");
    fill_all(rep, std::string("CFG recovery failed: ") + e.what(), instr_evidence(image.entry, "entry"));
    rep.overall = overall_of(rep.verdicts);
    rep.timings_ms.emplace_back("total", std::chrono::duration<double, std::milli>(Clock::now() - t0).count());
    return rep;
  }
  timer.mark("cfg");

  P1Result p1 = check_p1(image, cfg, ec);
  rep.verdicts[0] = p1.verdict;
  timer.mark("p1_tpm_writes");

  P2Result p2;
  if (p1.verdict.status == PropStatus::Pass) {
    p2 = check_p2(image, cfg, p1.find.events, reference_db(), config.match);
    rep.verdicts[1] = p2.verdict;
  } else {
    rep.verdicts[1] = skipped(Property::P2_AuthenticHash, "P1", image.entry);
  }
  timer.mark("p2_hash");

  const bool hash_ok = rep.verdicts[1].status == PropStatus::Pass;
  rep.verdicts[2] = hash_ok ? check_p3(image, cfg, p1.find, p2.hash, ec)
                            : skipped(Property::P3_Atomicity, "P2", image.entry);
  timer.mark("p3_atomicity");

  if (hash_ok) {
    CoverageReport cov;
    rep.verdicts[3] = check_p4(cfg, extract_measured_regions(p1.find, p2.hash), &cov);
    rep.coverage = cov;
  } else {
    rep.verdicts[3] = skipped(Property::P4_Completeness, "P2", image.entry);
  }
  timer.mark("p4_completeness");

  rep.overall = overall_of(rep.verdicts);
  rep.timings_ms.emplace_back("total", std::chrono::duration<double, std::milli>(Clock::now() - t0).count());
  return rep;
}

Report validate(std::span<const uint8_t> image_bytes, const ValidationConfig& config) {
  const std::string id = to_hex(sha1(image_bytes));
  const auto t0 = Clock::now();
  FirmwareImage image;
  try {
    image = load_image(image_bytes);
  } catch (const Error& e) {
    Report rep;
    rep.image_sha1 = id;
    rep.config = config;
    fill_all(rep, std::string("image rejected: ") + e.what(),
             range_evidence({0, static_cast<uint32_t>(image_bytes.size())}, "file bytes"));
    rep.overall = Overall::Inconclusive;
    rep.timings_ms.emplace_back("load", std::chrono::duration<double, std::milli>(Clock::now() - t0).count());
    return rep;
  }
  const double load_ms = std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
  Report rep = validate_image(image, id, config);
  rep.timings_ms.insert(rep.timings_ms.begin(), {"load", load_ms});
  return rep;
}

}  // namespace bootkeeper
