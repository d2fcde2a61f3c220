#include "bootkeeper/cryptoid.hpp"

#include <algorithm>
#include <deque>
#include <json.hpp>

#include "bootkeeper/assembler.hpp"
#include "bootkeeper/corpus.hpp"
#include "bootkeeper/error.hpp"

namespace bootkeeper {
namespace {

constexpr uint32_t kSha1K[4] = {0x5A827999, 0x6ED9EBA1, 0x8F1BBCDC, 0xCA62C1D6};
constexpr uint32_t kSha1Iv[5] = {0x67452301, 0xEFCDAB89, 0x98BADCFE, 0x10325476, 0xC3D2E1F0};

struct Label {
  DfgKind kind;
  ExprOp op;
  uint32_t value;
  size_t arity;
  auto operator<=>(const Label&) const = default;
};

Label label_of(const DfgNode& n) {
  return {n.kind, n.op, n.kind == DfgKind::Const ? n.value : 0u, n.operands.size()};
}

class Matcher {
 public:
  Matcher(const Dfg& cand, const Dfg& sig, const MatchLimits& limits)
      : cand_(cand), sig_(sig), limit_(limits.max_steps), s2c_(sig.nodes.size(), -1), c2s_(cand.nodes.size(), -1) {
    for (uint32_t i = 0; i < cand.nodes.size(); ++i) index_[label_of(cand.nodes[i])].push_back(i);
  }

  bool run() {
    std::vector<std::pair<uint32_t, int64_t>> pending;
    for (auto it = sig_.roots.rbegin(); it != sig_.roots.rend(); ++it) pending.push_back({*it, -1});
    return solve(pending);
  }

  bool exceeded() const { return exceeded_; }
  size_t best() const { return best_; }
  const std::vector<int64_t>& mapping() const { return s2c_; }

 private:
  using Pending = std::vector<std::pair<uint32_t, int64_t>>;

  bool compatible(uint32_t s, uint32_t c) const {
    const DfgNode& sn = sig_.nodes[s];
    if (sn.is_leaf()) return true;
    return label_of(sn) == label_of(cand_.nodes[c]);
  }

  bool solve(Pending pending) {
    if (exceeded_ || ++steps_ > limit_) {
      exceeded_ = true;
      return false;
    }
    if (pending.empty()) return true;
    auto [s, c] = pending.back();
    pending.pop_back();
    if (c >= 0) return try_pair(s, static_cast<uint32_t>(c), pending);
    if (s2c_[s] >= 0) return solve(pending);
    const DfgNode& sn = sig_.nodes[s];
    if (sn.is_leaf()) {
      for (uint32_t i = 0; i < cand_.nodes.size(); ++i)
        if (try_pair(s, i, pending)) return true;
      return false;
    }
    auto it = index_.find(label_of(sn));
    if (it == index_.end()) return false;
    for (uint32_t cand : it->second)
      if (try_pair(s, cand, pending)) return true;
    return false;
  }

  bool try_pair(uint32_t s, uint32_t c, const Pending& pending) {
    if (s2c_[s] >= 0) return s2c_[s] == c && solve(pending);
    if (c2s_[c] >= 0 || !compatible(s, c)) return false;
    s2c_[s] = c;
    c2s_[c] = s;
    best_ = std::max(best_, ++mapped_);
    const DfgNode& sn = sig_.nodes[s];
    bool ok;
    if (sn.is_leaf() || sn.operands.empty()) {
      ok = solve(pending);
    } else if (sn.kind == DfgKind::Op && is_commutative(sn.op)) {
      // Non-leaf operands first so that wildcards do not drive the search.
      std::vector<uint32_t> order(sn.operands.begin(), sn.operands.end());
      std::stable_partition(order.begin(), order.end(), [&](uint32_t o) { return !sig_.nodes[o].is_leaf(); });
      std::vector<bool> used(sn.operands.size(), false);
      Pending extra;
      ok = assign(order, 0, cand_.nodes[c].operands, used, extra, pending);
    } else {
      Pending next = pending;
      const auto& co = cand_.nodes[c].operands;
      for (size_t i = sn.operands.size(); i-- > 0;) next.push_back({sn.operands[i], co[i]});
      ok = solve(next);
    }
    if (!ok) {
      s2c_[s] = -1;
      c2s_[c] = -1;
      --mapped_;
    }
    return ok;
  }

  bool assign(const std::vector<uint32_t>& order, size_t i, const std::vector<uint32_t>& cops,
              std::vector<bool>& used, Pending& extra, const Pending& pending) {
    if (exceeded_) return false;
    if (i == order.size()) {
      Pending next = pending;
      for (auto it = extra.rbegin(); it != extra.rend(); ++it) next.push_back(*it);
      return solve(next);
    }
    for (size_t j = 0; j < cops.size(); ++j) {
      if (used[j] || !compatible(order[i], cops[j])) continue;
      used[j] = true;
      extra.push_back({order[i], cops[j]});
      if (assign(order, i + 1, cops, used, extra, pending)) return true;
      extra.pop_back();
      used[j] = false;
    }
    return false;
  }

  const Dfg& cand_;
  const Dfg& sig_;
  uint64_t limit_;
  uint64_t steps_ = 0;
  bool exceeded_ = false;
  size_t mapped_ = 0;
  size_t best_ = 0;
  std::vector<int64_t> s2c_;
  std::vector<int64_t> c2s_;
  std::map<Label, std::vector<uint32_t>> index_;
};

// Sub-graph of `g` made of the cones of `roots`.
Dfg extract(const Dfg& g, const std::vector<uint32_t>& roots) {
  Dfg sub;
  sub.nodes = g.nodes;
  sub.roots = roots;
  return prune(sub);
}

std::set<uint32_t> cone(const Dfg& g, uint32_t root) {
  std::set<uint32_t> out;
  std::deque<uint32_t> work{root};
  while (!work.empty()) {
    uint32_t n = work.front();
    work.pop_front();
    if (!out.insert(n).second) continue;
    for (uint32_t o : g.nodes[n].operands) work.push_back(o);
  }
  return out;
}

bool is_const_node(const Dfg& g, uint32_t n, uint32_t v) {
  return g.nodes[n].kind == DfgKind::Const && g.nodes[n].value == v;
}

}  // namespace

MatchResult match_one(const Dfg& candidate, const Signature& sig, const MatchLimits& limits) {
  MatchResult r;
  Matcher m(candidate, sig.graph, limits);
  const bool ok = m.run();
  r.budget_exceeded = m.exceeded();
  r.score = sig.graph.nodes.empty() ? 0.0 : static_cast<double>(m.best()) / static_cast<double>(sig.graph.nodes.size());
  if (!ok) return r;
  r.matched_signature = sig.name;
  r.score = 1.0;
  for (uint32_t s = 0; s < sig.graph.nodes.size(); ++s) {
    const auto c = static_cast<uint32_t>(m.mapping()[s]);
    r.mapping.push_back({s, c});
    if (candidate.nodes[c].block) r.matched_blocks.insert(candidate.nodes[c].block);
  }
  return r;
}

MatchResult match_signature(const Dfg& candidate, const SignatureDb& db, const MatchLimits& limits) {
  MatchResult best;
  for (const auto& sig : db.signatures) {
    MatchResult r = match_one(candidate, sig, limits);
    if (r.matched_signature) return r;
    if (r.score > best.score) best = std::move(r);
  }
  return best;
}

SignatureDb make_reference_signatures() {
  SignatureDb db;
  db.round_constants.assign(std::begin(kSha1K), std::end(kSha1K));
  db.initial_state.assign(std::begin(kSha1Iv), std::end(kSha1Iv));
  db.iteration_bounds = {20, 40, 60, 80};

  const FirmwareImage image = assemble(reference_sha1_source());
  const Cfg cfg = recover_cfg(image);
  std::set<uint32_t> blocks;
  for (const auto& [start, _] : cfg.nodes) blocks.insert(start);
  const Dfg g = normalize(build_dfg(cfg, blocks));

  for (int k = 0; k < 4; ++k) {
    for (uint32_t n = 0; n < g.nodes.size(); ++n) {
      const DfgNode& node = g.nodes[n];
      if (node.kind != DfgKind::Op || node.op != ExprOp::Add) continue;
      bool has_k = false;
      for (uint32_t o : node.operands) has_k |= is_const_node(g, o, kSha1K[k]);
      if (!has_k) continue;
      const std::set<uint32_t> c = cone(g, n);
      std::optional<uint32_t> rol30;
      for (uint32_t m = 0; m < g.nodes.size(); ++m) {
        const DfgNode& r = g.nodes[m];
        if (r.kind == DfgKind::Op && r.op == ExprOp::Rol && r.block == node.block &&
            is_const_node(g, r.operands[1], 30) && g.nodes[r.operands[0]].is_leaf() && c.count(r.operands[0]))
          rol30 = m;
      }
      std::vector<uint32_t> roots{n};
      if (rol30) roots.push_back(*rol30);
      db.signatures.push_back({"sha1_round_" + std::to_string(k), extract(g, roots)});
      break;
    }
  }
  for (uint32_t n = 0; n < g.nodes.size(); ++n) {
    const DfgNode& node = g.nodes[n];
    if (node.kind == DfgKind::Op && node.op == ExprOp::Rol && is_const_node(g, node.operands[1], 1)) {
      const DfgNode& x = g.nodes[node.operands[0]];
      if (x.kind == DfgKind::Op && x.op == ExprOp::Xor && x.operands.size() == 4) {
        db.signatures.push_back({"sha1_message_schedule", extract(g, {n})});
        break;
      }
    }
  }
  for (int i = 0; i < 5; ++i) {
    Signature s{"sha1_iv_" + std::to_string(i), {}};
    s.graph.nodes.push_back({DfgKind::Const, ExprOp::Const, kSha1Iv[i], {}, 0});
    s.graph.roots.push_back(0);
    db.signatures.push_back(std::move(s));
  }
  return db;
}

std::string signature_db_json(const SignatureDb& db) {
  using nlohmann::json;
  json j;
  j["algorithm"] = db.algorithm;
  for (uint32_t k : db.round_constants) j["round_constants"].push_back(hex32(k));
  for (uint32_t v : db.initial_state) j["initial_state"].push_back(hex32(v));
  j["iteration_bounds"] = json::array();
  for (uint32_t b : db.iteration_bounds) j["iteration_bounds"].push_back(b);
  j["signatures"] = json::array();
  for (const auto& s : db.signatures) {
    json sj;
    sj["name"] = s.name;
    sj["nodes"] = json::array();
    sj["edges"] = json::array();
    for (size_t i = 0; i < s.graph.nodes.size(); ++i) {
      const DfgNode& n = s.graph.nodes[i];
      json nj{{"id", i}, {"kind", dfg_kind_name(n.kind)}};
      if (n.kind == DfgKind::Const) nj["label"] = hex32(n.value);
      else if (n.kind == DfgKind::Op || n.kind == DfgKind::Branch) nj["label"] = dfg_op_name(n.op);
      else nj["label"] = dfg_kind_name(n.kind);
      sj["nodes"].push_back(nj);
      for (size_t k = 0; k < n.operands.size(); ++k)
        sj["edges"].push_back({{"src", i}, {"dst", n.operands[k]}, {"position", k}});
    }
    sj["roots"] = s.graph.roots;
    j["signatures"].push_back(sj);
  }
  return j.dump(2) + "\n";
}

std::set<uint32_t> call_closure(const Cfg& cfg, uint32_t entry) {
  std::set<uint32_t> out;
  std::deque<uint32_t> work{entry};
  while (!work.empty()) {
    uint32_t f = work.front();
    work.pop_front();
    auto it = cfg.functions.find(f);
    if (it == cfg.functions.end() || !out.insert(f).second) continue;
    for (uint32_t c : it->second.callees) work.push_back(c);
  }
  return out;
}

HashIdentification check_function(const Cfg& cfg, uint32_t entry, const SignatureDb& db) {
  HashIdentification id;
  id.function = entry;
  id.functions = call_closure(cfg, entry);
  for (uint32_t f : id.functions) {
    const auto& blocks = cfg.functions.at(f).blocks;
    id.blocks.insert(blocks.begin(), blocks.end());
  }
  const Dfg g = normalize(build_dfg(cfg, id.blocks));
  for (const auto& sig : db.signatures) {
    if (match_one(g, sig).matched_signature) id.matched.push_back(sig.name);
    else id.missing.push_back(sig.name);
  }
  id.bounds = loop_bounds(g);
  for (uint32_t b : db.iteration_bounds)
    if (!id.bounds.count(b)) id.missing.push_back("iteration_bound_" + std::to_string(b));
  id.found = id.missing.empty() && !db.signatures.empty();
  return id;
}

HashIdentification identify_hash(const Cfg& cfg, const SignatureDb& db,
                                 const std::optional<std::set<uint32_t>>& restrict_to) {
  std::vector<std::pair<size_t, uint32_t>> order;
  for (const auto& [entry, _] : cfg.functions) {
    if (restrict_to && !restrict_to->count(entry)) continue;
    size_t size = 0;
    for (uint32_t f : call_closure(cfg, entry)) size += cfg.functions.at(f).blocks.size();
    order.push_back({size, entry});
  }
  std::sort(order.begin(), order.end());
  HashIdentification best;
  for (const auto& [_, entry] : order) {
    HashIdentification id = check_function(cfg, entry, db);
    if (id.found) return id;
    if (!best.function || id.matched.size() > best.matched.size()) best = std::move(id);
  }
  best.found = false;
  return best;
}

}  // namespace bootkeeper
