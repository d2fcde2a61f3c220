#include "bootkeeper/expr.hpp"

#include <bit>
#include <cstdio>

namespace bootkeeper {
namespace {

uint64_t mix(uint64_t h, uint64_t v) {
  h ^= v + 0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2);
  return h * 0xff51afd7ed558ccdull;
}

Expr make(ExprOp op, uint32_t value, Expr a, Expr b) {
  uint64_t h = mix(static_cast<uint64_t>(op) + 1, value);
  uint32_t size = 1;
  if (a) {
    h = mix(h, a->hash);
    size += a->size;
  }
  if (b) {
    h = mix(h, b->hash);
    size += b->size;
  }
  if (size > (1u << 30)) size = 1u << 30;
  return std::make_shared<const ExprNode>(ExprNode{op, value, std::move(a), std::move(b), h, size});
}

uint32_t apply(ExprOp op, uint32_t a, uint32_t b) {
  switch (op) {
    case ExprOp::Add: return a + b;
    case ExprOp::Sub: return a - b;
    case ExprOp::And: return a & b;
    case ExprOp::Or: return a | b;
    case ExprOp::Xor: return a ^ b;
    case ExprOp::Shl: return a << (b & 31);
    case ExprOp::Shr: return a >> (b & 31);
    case ExprOp::Rol: return std::rotl(a, static_cast<int>(b & 31));
    case ExprOp::Eq: return a == b;
    case ExprOp::Ne: return a != b;
    case ExprOp::Ult: return a < b;
    case ExprOp::Uge: return a >= b;
    default: return 0;
  }
}

bool commutative(ExprOp op) {
  return op == ExprOp::Add || op == ExprOp::And || op == ExprOp::Or || op == ExprOp::Xor ||
         op == ExprOp::Eq || op == ExprOp::Ne;
}

}  // namespace

Expr mk_const(uint32_t v) { return make(ExprOp::Const, v, nullptr, nullptr); }
Expr mk_var(uint32_t id) { return make(ExprOp::Var, id, nullptr, nullptr); }

bool is_const(const Expr& e) { return e->op == ExprOp::Const; }
bool is_var(const Expr& e) { return e->op == ExprOp::Var; }
uint32_t const_value(const Expr& e) { return e->value; }
bool is_comparison(ExprOp op) {
  return op == ExprOp::Eq || op == ExprOp::Ne || op == ExprOp::Ult || op == ExprOp::Uge;
}

Expr mk_bin(ExprOp op, Expr a, Expr b) {
  if (is_const(a) && is_const(b)) return mk_const(apply(op, a->value, b->value));
  // Constants on the right for commutative operators.
  if (commutative(op) && is_const(a)) std::swap(a, b);
  if (op == ExprOp::Sub && is_const(b)) {
    op = ExprOp::Add;
    b = mk_const(0u - b->value);
  }
  if (is_const(b)) {
    const uint32_t c = b->value;
    switch (op) {
      case ExprOp::Add:
        if (c == 0) return a;
        if (a->op == ExprOp::Add && is_const(a->rhs)) return mk_bin(ExprOp::Add, a->lhs, mk_const(a->rhs->value + c));
        break;
      case ExprOp::Or:
      case ExprOp::Xor:
        if (c == 0) return a;
        if (op == ExprOp::Or && c == 0xFFFFFFFFu) return b;
        break;
      case ExprOp::And:
        if (c == 0xFFFFFFFFu) return a;
        if (c == 0) return b;
        break;
      case ExprOp::Shl:
      case ExprOp::Shr:
      case ExprOp::Rol:
        if ((c & 31) == 0) return a;
        if (op == ExprOp::Rol && a->op == ExprOp::Rol && is_const(a->rhs))
          return mk_bin(ExprOp::Rol, a->lhs, mk_const((a->rhs->value + c) & 31));
        break;
      default:
        break;
    }
  }
  if (expr_equal(a, b)) {
    switch (op) {
      case ExprOp::Sub:
      case ExprOp::Xor:
        return mk_const(0);
      case ExprOp::And:
      case ExprOp::Or:
        return a;
      case ExprOp::Eq:
      case ExprOp::Uge:
        return mk_const(1);
      case ExprOp::Ne:
      case ExprOp::Ult:
        return mk_const(0);
      default:
        break;
    }
  }
  return make(op, 0, std::move(a), std::move(b));
}

Expr mk_not(const Expr& cond) {
  switch (cond->op) {
    case ExprOp::Const: return mk_const(cond->value == 0);
    case ExprOp::Eq: return mk_bin(ExprOp::Ne, cond->lhs, cond->rhs);
    case ExprOp::Ne: return mk_bin(ExprOp::Eq, cond->lhs, cond->rhs);
    case ExprOp::Ult: return mk_bin(ExprOp::Uge, cond->lhs, cond->rhs);
    case ExprOp::Uge: return mk_bin(ExprOp::Ult, cond->lhs, cond->rhs);
    default: return mk_bin(ExprOp::Eq, cond, mk_const(0));
  }
}

bool expr_equal(const Expr& a, const Expr& b) {
  if (a == b) return true;
  if (!a || !b) return false;
  if (a->hash != b->hash || a->op != b->op || a->value != b->value || a->size != b->size) return false;
  return expr_equal(a->lhs, b->lhs) && expr_equal(a->rhs, b->rhs);
}

uint32_t eval_with(const Expr& e, const std::function<uint32_t(uint32_t)>& var,
                   std::unordered_map<const ExprNode*, uint32_t>& memo) {
  switch (e->op) {
    case ExprOp::Const: return e->value;
    case ExprOp::Var: return var(e->value);
    default: break;
  }
  if (auto it = memo.find(e.get()); it != memo.end()) return it->second;
  uint32_t v = apply(e->op, eval_with(e->lhs, var, memo), eval_with(e->rhs, var, memo));
  memo.emplace(e.get(), v);
  return v;
}

uint32_t eval(const Expr& e, const Assignment& vars) {
  std::unordered_map<const ExprNode*, uint32_t> memo;
  return eval_with(
      e,
      [&](uint32_t id) {
        auto it = vars.find(id);
        return it == vars.end() ? 0u : it->second;
      },
      memo);
}

namespace {
template <typename F>
void walk(const Expr& e, std::set<const ExprNode*>& seen, F&& f) {
  if (!e || !seen.insert(e.get()).second) return;
  f(e);
  walk(e->lhs, seen, f);
  walk(e->rhs, seen, f);
}
}  // namespace

void collect_vars(const Expr& e, std::set<uint32_t>& out) {
  std::set<const ExprNode*> seen;
  walk(e, seen, [&](const Expr& n) {
    if (n->op == ExprOp::Var) out.insert(n->value);
  });
}

void collect_consts(const Expr& e, std::set<uint32_t>& out) {
  std::set<const ExprNode*> seen;
  walk(e, seen, [&](const Expr& n) {
    if (n->op == ExprOp::Const) out.insert(n->value);
  });
}

std::string to_string(const Expr& e) {
  static const char* names[] = {"", "", "+", "-", "&", "|", "^", "<<", ">>", "rol", "==", "!=", "<u", ">=u"};
  char buf[32];
  switch (e->op) {
    case ExprOp::Const:
      std::snprintf(buf, sizeof buf, "0x%x", e->value);
      return buf;
    case ExprOp::Var:
      std::snprintf(buf, sizeof buf, "v%u", e->value);
      return buf;
    default:
      if (e->size > 64) return "(...)";
      return "(" + to_string(e->lhs) + " " + names[static_cast<int>(e->op)] + " " + to_string(e->rhs) + ")";
  }
}

SplitAddr split_address(const Expr& e) {
  if (is_const(e)) return {nullptr, e->value};
  if (e->op == ExprOp::Add && is_const(e->rhs)) return {e->lhs, e->rhs->value};
  return {e, 0};
}

}  // namespace bootkeeper
