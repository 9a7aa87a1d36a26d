#include <gtest/gtest.h>

#include "symalias/sse.hpp"

using namespace symalias;

namespace {

std::string canon(const char* text) { return sse::to_string(sse::parse(text)); }

}  // namespace

struct CanonCase {
  const char* in;
  const char* out;
};

class SseCanonical : public ::testing::TestWithParam<CanonCase> {};

TEST_P(SseCanonical, Prints) { EXPECT_EQ(canon(GetParam().in), GetParam().out); }

INSTANTIATE_TEST_SUITE_P(
    Forms, SseCanonical,
    ::testing::Values(CanonCase{"R3+0x8-0x8", "R3"}, CanonCase{"(R1*0x1)", "R1"},
                      CanonCase{"R6+0x4+R2", "R2+R6+0x4"}, CanonCase{"--R1", "R1"},
                      CanonCase{"-(R1+0x4)", "-R1-0x4"}, CanonCase{"(R1^R1)", "0x0"},
                      CanonCase{"~~R2", "R2"}, CanonCase{"R1-R1+0x4", "0x4"},
                      CanonCase{"(0x2*R1)", "(R1*0x2)"}, CanonCase{"(R2&R1)", "(R1&R2)"},
                      CanonCase{"(0x3*0x2)", "0x6"}, CanonCase{"(0x3<<0x1)", "0x6"},
                      CanonCase{"(R1|0x0)", "R1"}, CanonCase{"(R1*0x0)", "0x0"},
                      CanonCase{"load(R2+R1)", "load(R1+R2)"},
                      CanonCase{"R2+i*0x8+0xC", "R2+i*0x8+0x4"},
                      CanonCase{"0x92C44+i*0x8", "0x92C44+i*0x8"},
                      CanonCase{"load(load(R0+0x8)-0x4)", "load(load(R0+0x8)-0x4)"}));

TEST(Sse, EqualityIgnoresSites) {
  Sse a = sse::load(sse::reg(Reg::r(1)), Point{0, 0, 1});
  Sse b = sse::load(sse::reg(Reg::r(1)), Point{0, 0, 4});
  EXPECT_TRUE(sse::equal(a, b));
  EXPECT_EQ(sse::compare(a, b), 0);
  EXPECT_EQ(a->hash, b->hash);
}

TEST(Sse, IdempotentFoldsRespectSites) {
  // same address, different memory states: not the same value
  Sse a = sse::store(sse::reg(Reg::sp()), Point{0, 0, 3});
  Sse b = sse::store(sse::reg(Reg::sp()), Point{0, 0, 6});
  EXPECT_EQ(sse::binop(BinOpKind::Or, a, b)->kind, NodeKind::Binop);
  EXPECT_EQ(sse::binop(BinOpKind::Xor, a, b)->kind, NodeKind::Binop);
  EXPECT_EQ(sse::binop(BinOpKind::Or, a, a), a);
  EXPECT_EQ(sse::to_string(sse::binop(BinOpKind::Xor, a, a)), "0x0");
  EXPECT_EQ(sse::add(a, sse::unop(UnOpKind::Neg, b))->kind, NodeKind::Sum);
}

TEST(Sse, ParsePrintRoundTrip) {
  for (const char* t : {"R1", "0x10", "R1+0x8", "load(R3+0x8)", "load(store(R6+0x4)+0x8)", "(R1&R2)",
                        "~R1", "R2+i*0x8+0x4", "-R1-0x4", "load(GP+0x20)"}) {
    Sse e = sse::parse(t);
    EXPECT_EQ(sse::to_string(e), t);
    EXPECT_TRUE(sse::equal(sse::parse(sse::to_string(e, sse::PrintMode::Full)), e)) << t;
  }
}

TEST(Sse, FullModeKeepsSites) {
  Program p = parse_program("func main @0x1000 {\nbb0:\n  r1 = load r3+0x8\n  ret\n}\n");
  Sse e = sse::load(sse::parse("R3+0x8"), Point{0, 0, 1});
  std::string full = sse::to_string(e, sse::PrintMode::Full, &p);
  EXPECT_EQ(full, "load@main:bb0:1(R3+0x8)");
  Sse back = sse::parse(full, &p);
  EXPECT_EQ(back->site, (Point{0, 0, 1}));
}

TEST(Sse, ReplaceAndOccurs) {
  Sse e = sse::parse("load(R6+0x4)+R2");
  EXPECT_TRUE(sse::occurs(e, sse::parse("R6+0x4")));
  EXPECT_TRUE(sse::occurs_reg(e, Reg::r(2)));
  EXPECT_FALSE(sse::occurs_reg(e, Reg::r(3)));
  auto r = sse::replace(e, sse::reg(Reg::r(6)), sse::parse("R1+0x4"));
  ASSERT_TRUE(r);
  EXPECT_EQ(sse::to_string(*r), "R2+load(R1+0x8)");
}

TEST(Sse, DepthCap) {
  Sse e = sse::parse("load(load(load(load(load(R1)))))");
  EXPECT_FALSE(sse::replace(e, sse::reg(Reg::r(1)), sse::parse("load(R2)"), 5).has_value());
  EXPECT_TRUE(sse::replace(e, sse::reg(Reg::r(1)), sse::parse("load(R2)"), 6).has_value());
}

TEST(Sse, SplitOffset) {
  auto [nc, k] = sse::split_offset(sse::parse("R1+R2+0x10"));
  EXPECT_EQ(sse::to_string(nc), "R1+R2");
  EXPECT_EQ(k, 0x10u);
  auto [nc2, k2] = sse::split_offset(sse::parse("0x40"));
  EXPECT_EQ(nc2, nullptr);
  EXPECT_EQ(k2, 0x40u);
}

TEST(Sse, InductionRecognition) {
  std::vector<Sse> fam{sse::parse("load(R2+0x4)"), sse::parse("load(R2+0xC)"), sse::parse("load(R2+0x14)")};
  auto r = sse::recognize_induction(fam, Point{0, 1, 0});
  ASSERT_TRUE(r);
  EXPECT_EQ(sse::to_string(*r), "load(R2+i*0x8+0x4)");
  EXPECT_TRUE(sse::subsumed_by(sse::parse("load(R2+0x24)"), *r));
  EXPECT_FALSE(sse::subsumed_by(sse::parse("load(R2+0x26)"), *r));
  // not an arithmetic progression
  std::vector<Sse> bad{sse::parse("R2+0x4"), sse::parse("R2+0x8"), sse::parse("R2+0x14")};
  EXPECT_FALSE(sse::recognize_induction(bad, Point{0, 1, 0}));
}

TEST(Sse, CanonicalizeIsIdempotent) {
  for (const char* t : {"R6+0x4+R2", "(0x2*R1)", "load(R2+R1+0x8-0x8)", "-(R1+0x4)"}) {
    Sse raw = sse::parse(t);
    Sse c = sse::canonicalize(raw);
    EXPECT_TRUE(sse::is_canonical(c));
    EXPECT_TRUE(sse::equal(sse::canonicalize(c), c));
  }
  Sse raw = sse::raw_binop(BinOpKind::Mul, sse::val(2), sse::reg(Reg::r(1)));
  EXPECT_FALSE(sse::is_canonical(raw));
}

TEST(Sse, Predicates) {
  EXPECT_TRUE(sse::has_memory(sse::parse("R1+load(R2)")));
  EXPECT_FALSE(sse::has_memory(sse::parse("R1+R2")));
  EXPECT_TRUE(sse::has_bitwise_address(sse::parse("load((R1&0xFF))")));
  EXPECT_TRUE(sse::has_index(sse::parse("R2+i*0x8")));
  EXPECT_EQ(sse::registers(sse::parse("load(R1+R2)+GP")), (std::set<Reg>{Reg::r(1), Reg::r(2), Reg::gp()}));
}
