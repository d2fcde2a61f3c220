#pragma once

// 32-bit symbolic expressions with constant folding on construction.
// Comparison operators produce 0 or 1.

#include <cstdint>
#include <functional>
#include <memory>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

namespace bootkeeper {

enum class ExprOp : uint8_t {
  Const,
  Var,
  Add,
  Sub,
  And,
  Or,
  Xor,
  Shl,
  Shr,
  Rol,
  Eq,
  Ne,
  Ult,
  Uge,
};

struct ExprNode;
using Expr = std::shared_ptr<const ExprNode>;

struct ExprNode {
  ExprOp op;
  uint32_t value;  // constant value or variable id
  Expr lhs, rhs;
  uint64_t hash;
  uint32_t size;   // node count, saturating
};

Expr mk_const(uint32_t v);
Expr mk_var(uint32_t id);
Expr mk_bin(ExprOp op, Expr a, Expr b);
// Logical negation of a condition (comparison flips; otherwise `e == 0`).
Expr mk_not(const Expr& cond);

inline Expr operator+(Expr a, Expr b) { return mk_bin(ExprOp::Add, std::move(a), std::move(b)); }

bool is_const(const Expr& e);
bool is_var(const Expr& e);
uint32_t const_value(const Expr& e);
bool is_comparison(ExprOp op);

// Structural equality (hash-guarded).
bool expr_equal(const Expr& a, const Expr& b);

using Assignment = std::unordered_map<uint32_t, uint32_t>;
uint32_t eval(const Expr& e, const Assignment& vars);
// Evaluation with a caller-provided variable lookup; `memo` may be reused
// across roots sharing one assignment.
uint32_t eval_with(const Expr& e, const std::function<uint32_t(uint32_t)>& var,
                   std::unordered_map<const ExprNode*, uint32_t>& memo);

void collect_vars(const Expr& e, std::set<uint32_t>& out);
void collect_consts(const Expr& e, std::set<uint32_t>& out);

std::string to_string(const Expr& e);

// Splits `base + const` address forms. base is null for constants.
struct SplitAddr {
  Expr base;
  uint32_t offset = 0;
};
SplitAddr split_address(const Expr& e);

}  // namespace bootkeeper
