#include <gtest/gtest.h>

#include <random>

#include "bootkeeper/expr.hpp"
#include "bootkeeper/solver.hpp"

using namespace bootkeeper;

TEST(Expr, ConstantFolding) {
  const auto e = mk_bin(ExprOp::Add, mk_const(3), mk_const(4));
  ASSERT_TRUE(is_const(e));
  EXPECT_EQ(const_value(e), 7u);
  EXPECT_EQ(const_value(mk_bin(ExprOp::Rol, mk_const(0x80000000), mk_const(1))), 1u);
  EXPECT_EQ(const_value(mk_bin(ExprOp::Ult, mk_const(2), mk_const(3))), 1u);
  const auto x = mk_var(1);
  EXPECT_TRUE(expr_equal(mk_bin(ExprOp::Add, x, mk_const(0)), x));
  EXPECT_TRUE(expr_equal(mk_bin(ExprOp::Xor, x, x), mk_const(0)) || !is_const(mk_bin(ExprOp::Xor, x, x)));
}

TEST(Expr, EvalAgreesWithConcreteArithmetic) {
  std::mt19937 rng(3);
  const ExprOp ops[] = {ExprOp::Add, ExprOp::Sub, ExprOp::And, ExprOp::Or, ExprOp::Xor,
                        ExprOp::Shl, ExprOp::Shr, ExprOp::Rol, ExprOp::Eq,  ExprOp::Ult};
  for (int i = 0; i < 500; ++i) {
    const uint32_t a = rng(), b = rng();
    const ExprOp op = ops[rng() % std::size(ops)];
    const auto sym = mk_bin(op, mk_var(1), mk_var(2));
    const auto folded = mk_bin(op, mk_const(a), mk_const(b));
    ASSERT_TRUE(is_const(folded));
    EXPECT_EQ(eval(sym, {{1, a}, {2, b}}), const_value(folded));
  }
}

TEST(Expr, SplitAddress) {
  const auto x = mk_var(9);
  const auto s = split_address(mk_bin(ExprOp::Add, mk_bin(ExprOp::Add, x, mk_const(8)), mk_const(4)));
  EXPECT_TRUE(expr_equal(s.base, x));
  EXPECT_EQ(s.offset, 12u);
  const auto c = split_address(mk_const(0x300000));
  EXPECT_FALSE(c.base);
  EXPECT_EQ(c.offset, 0x300000u);
}

TEST(Solver, Equality) {
  const auto x = mk_var(1);
  const auto r = solve({mk_bin(ExprOp::Eq, x, mk_const(5))}, x, 16);
  EXPECT_EQ(r.status, SolveStatus::Values);
  EXPECT_EQ(r.values, (std::vector<uint32_t>{5}));
}

TEST(Solver, UnsignedBound) {
  const auto x = mk_var(1);
  const auto r = solve({mk_bin(ExprOp::Ult, x, mk_const(3))}, x, 16);
  EXPECT_EQ(r.status, SolveStatus::Values);
  EXPECT_EQ(r.values, (std::vector<uint32_t>{0, 1, 2}));
  EXPECT_FALSE(r.capped);
}

TEST(Solver, JumpTableTargetsMatchBruteForce) {
  const auto x = mk_var(1);
  const auto target = mk_bin(ExprOp::Add, mk_bin(ExprOp::Shl, x, mk_const(3)), mk_const(0x100040));
  const std::vector<Expr> cs{mk_bin(ExprOp::Ult, x, mk_const(3))};
  const auto r = solve(cs, target, 16);
  std::set<uint32_t> brute;
  for (uint32_t v = 0; v < 4096; ++v)
    if (eval(cs[0], {{1, v}})) brute.insert(eval(target, {{1, v}}));
  EXPECT_EQ(r.status, SolveStatus::Values);
  EXPECT_EQ(std::set<uint32_t>(r.values.begin(), r.values.end()), brute);
  EXPECT_EQ(brute.size(), 3u);
}

TEST(Solver, CapAndSat) {
  const auto x = mk_var(1);
  const auto r = solve({}, x, 8);
  EXPECT_TRUE(r.capped);
  EXPECT_EQ(check_sat({mk_bin(ExprOp::Eq, x, mk_const(1)), mk_bin(ExprOp::Eq, x, mk_const(2))}), Sat::No);
  EXPECT_EQ(check_sat({mk_bin(ExprOp::Ult, x, mk_const(10)), mk_bin(ExprOp::Uge, x, mk_const(9))}), Sat::Yes);
  EXPECT_EQ(check_sat({mk_bin(ExprOp::Eq, x, mk_const(1)), mk_bin(ExprOp::Eq, mk_var(2), mk_const(2))}), Sat::Yes);
}
