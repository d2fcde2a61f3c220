#include "bootkeeper/solver.hpp"

#include <algorithm>
#include <map>

namespace bootkeeper {
namespace {

struct Domain {
  uint32_t lo = 0;
  uint32_t hi = 0xFFFFFFFFu;
  std::set<uint32_t> excluded;
  uint64_t size() const { return uint64_t{hi} - lo + 1; }
};

// Narrows `d` using `c` when it is a comparison between the variable and a
// constant. Returns false if the domain became empty.
bool narrow(const Expr& c, uint32_t var, Domain& d) {
  if (!is_comparison(c->op)) return true;
  const Expr& l = c->lhs;
  const Expr& r = c->rhs;
  const bool var_left = is_var(l) && l->value == var && is_const(r);
  const bool var_right = is_var(r) && r->value == var && is_const(l);
  if (!var_left && !var_right) return true;
  const uint32_t k = var_left ? r->value : l->value;
  auto clamp_hi = [&](uint32_t h) { d.hi = std::min(d.hi, h); };
  auto clamp_lo = [&](uint32_t lo) { d.lo = std::max(d.lo, lo); };
  switch (c->op) {
    case ExprOp::Eq:
      clamp_lo(k);
      clamp_hi(k);
      break;
    case ExprOp::Ne:
      d.excluded.insert(k);
      break;
    case ExprOp::Ult:
      if (var_left) {
        if (k == 0) return false;
        clamp_hi(k - 1);
      } else {
        if (k == 0xFFFFFFFFu) return false;
        clamp_lo(k + 1);
      }
      break;
    case ExprOp::Uge:
      if (var_left) clamp_lo(k);
      else clamp_hi(k);
      break;
    default:
      break;
  }
  while (d.lo <= d.hi && d.excluded.count(d.lo)) {
    if (d.lo == d.hi) return false;
    ++d.lo;
  }
  while (d.lo <= d.hi && d.excluded.count(d.hi)) {
    if (d.lo == d.hi) return false;
    --d.hi;
  }
  return d.lo <= d.hi;
}

struct Lcg {
  uint64_t s = 0x2545F4914F6CDD1Dull;
  uint32_t next() {
    s = s * 6364136223846793005ull + 1442695040888963407ull;
    return static_cast<uint32_t>(s >> 32);
  }
};

}  // namespace

SolveResult solve(const std::vector<Expr>& constraints, const Expr& expr, size_t cap,
                  const SolverLimits& limits) {
  SolveResult res;
  std::set<uint32_t> closure;
  collect_vars(expr, closure);

  std::vector<std::pair<Expr, std::set<uint32_t>>> pending;
  for (const auto& c : constraints) {
    if (is_const(c)) {
      if (c->value == 0) {
        res.status = SolveStatus::Unsat;
        return res;
      }
      continue;
    }
    std::set<uint32_t> vs;
    collect_vars(c, vs);
    pending.emplace_back(c, std::move(vs));
  }
  // Constraints transitively sharing variables with `expr` (all of them when
  // `expr` is ground, so that satisfiability checks see every constraint).
  std::vector<Expr> relevant;
  const bool ground = closure.empty();
  for (bool changed = true; changed;) {
    changed = false;
    for (auto it = pending.begin(); it != pending.end();) {
      bool touches = ground;
      for (uint32_t v : it->second)
        if (closure.count(v)) touches = true;
      if (touches) {
        closure.insert(it->second.begin(), it->second.end());
        relevant.push_back(it->first);
        it = pending.erase(it);
        changed = true;
      } else {
        ++it;
      }
    }
  }

  std::vector<uint32_t> vars(closure.begin(), closure.end());
  std::map<uint32_t, Domain> dom;
  for (uint32_t v : vars) {
    Domain d;
    for (const auto& c : relevant)
      if (!narrow(c, v, d)) {
        res.status = SolveStatus::Unsat;
        return res;
      }
    dom[v] = d;
  }

  std::set<uint32_t> found;
  std::unordered_map<uint32_t, uint32_t> assign;
  auto try_assignment = [&]() -> bool {  // returns true when cap exceeded
    std::unordered_map<const ExprNode*, uint32_t> memo;
    auto lookup = [&](uint32_t id) { return assign[id]; };
    for (const auto& c : relevant)
      if (eval_with(c, lookup, memo) == 0) return false;
    found.insert(eval_with(expr, lookup, memo));
    return found.size() > cap;
  };
  auto finish = [&](SolveStatus st) {
    res.status = st;
    res.values.assign(found.begin(), found.end());
    res.capped = found.size() > cap;
    if (res.capped) res.status = SolveStatus::Values;
    return res;
  };

  if (vars.empty()) {
    try_assignment();
    return finish(found.empty() ? SolveStatus::Unsat : SolveStatus::Values);
  }

  uint64_t product = 1;
  for (uint32_t v : vars) {
    product *= dom[v].size();
    if (product > limits.enumeration_limit) break;
  }
  if (product <= limits.enumeration_limit) {
    for (uint32_t v : vars) assign[v] = dom[v].lo;
    for (;;) {
      bool skip = false;
      for (uint32_t v : vars)
        if (dom[v].excluded.count(assign[v])) skip = true;
      if (!skip && try_assignment()) return finish(SolveStatus::Values);
      size_t i = 0;
      for (; i < vars.size(); ++i) {
        uint32_t& a = assign[vars[i]];
        if (a < dom[vars[i]].hi) {
          ++a;
          break;
        }
        a = dom[vars[i]].lo;
      }
      if (i == vars.size()) break;
    }
    return finish(found.empty() ? SolveStatus::Unsat : SolveStatus::Values);
  }

  // Guided sampling: boundaries, nearby constants, pseudo-random values.
  std::set<uint32_t> consts;
  collect_consts(expr, consts);
  for (const auto& c : relevant) collect_consts(c, consts);
  Lcg rng;
  std::map<uint32_t, std::vector<uint32_t>> cand;
  for (uint32_t v : vars) {
    const Domain& d = dom[v];
    std::set<uint32_t> s = {d.lo, d.hi, d.lo + 1, d.hi - 1};
    for (uint32_t k : consts)
      for (uint32_t x : {k - 1, k, k + 1}) s.insert(x);
    for (int i = 0; i < 32; ++i) s.insert(d.lo + static_cast<uint32_t>(rng.next() % d.size()));
    std::vector<uint32_t> c;
    for (uint32_t x : s)
      if (x >= d.lo && x <= d.hi && !d.excluded.count(x)) c.push_back(x);
    cand[v] = std::move(c);
  }
  for (uint32_t t = 0; t < limits.samples; ++t) {
    for (uint32_t v : vars) {
      const auto& c = cand[v];
      // First pass walks candidates in lockstep, then random combinations.
      assign[v] = t < c.size() ? c[t] : c[rng.next() % c.size()];
    }
    if (try_assignment()) return finish(SolveStatus::Values);
  }
  return finish(SolveStatus::Unknown);
}

Sat check_sat(const std::vector<Expr>& constraints, const SolverLimits& limits) {
  // Constraints over disjoint variable sets are decided independently.
  std::vector<std::set<uint32_t>> comp_vars;
  std::vector<std::vector<Expr>> comps;
  for (const auto& c : constraints) {
    std::set<uint32_t> vs;
    collect_vars(c, vs);
    std::vector<Expr> merged{c};
    for (size_t i = 0; i < comps.size();) {
      bool shares = false;
      for (uint32_t v : vs)
        if (comp_vars[i].count(v)) shares = true;
      if (!shares) {
        ++i;
        continue;
      }
      vs.insert(comp_vars[i].begin(), comp_vars[i].end());
      merged.insert(merged.end(), comps[i].begin(), comps[i].end());
      comp_vars.erase(comp_vars.begin() + static_cast<std::ptrdiff_t>(i));
      comps.erase(comps.begin() + static_cast<std::ptrdiff_t>(i));
    }
    comp_vars.push_back(std::move(vs));
    comps.push_back(std::move(merged));
  }
  Sat result = Sat::Yes;
  for (const auto& comp : comps) {
    SolveResult r = solve(comp, mk_const(1), 1, limits);
    if (r.status == SolveStatus::Unsat || (r.status == SolveStatus::Values && r.values.empty())) return Sat::No;
    if (r.status == SolveStatus::Unknown && r.values.empty()) result = Sat::Unknown;
  }
  return result;
}

}  // namespace bootkeeper
