#include <gtest/gtest.h>

#include "symalias/oracle.hpp"

using namespace symalias;
using namespace symalias::oracle;

namespace {

Program corpus(const std::string& name) { return parse_program_file(std::string(SYMALIAS_CORPUS) + "/" + name); }

size_t visit(const RunResult& r, Point p) {
  auto v = r.last_visit(p, 0);
  EXPECT_TRUE(v) << "point never reached";
  return v.value_or(0);
}

AliasPair pair(const Program& p, Point a_at, const char* a, Point b_at, const char* b) {
  return AliasPair{a_at, sse::parse(a, &p, a_at), b_at, sse::parse(b, &p, b_at), {}};
}

}  // namespace

TEST(Interpreter, FieldLoadReadsMemory) {
  Program p = corpus("intuitive.ir");
  RunResult r = run(p, 0, RunConfig{7}, {{Reg::r(3), 0x100}});
  ASSERT_EQ(r.status, RunStatus::Ok) << r.error;
  const size_t after = visit(r, Point{0, 0, 1});
  const size_t before = visit(r, Point{0, 0, 0});
  EXPECT_EQ(r.reg(after, Reg::r(1)), r.read(0x108, r.trace[before].writes, 4));
  EXPECT_EQ(r.eval(sse::parse("load(R3+0x8)"), before), r.reg(after, Reg::r(1)));
  // the spill lands at r6+4
  const size_t end = visit(r, Point{0, 0, 3});
  const Word r6 = r.reg(end, Reg::r(6));
  EXPECT_EQ(r.read(r6 + 4, r.trace[end].writes, 4), 0x100u);
}

TEST(Interpreter, MoveCopiesValue) {
  Program p = parse_program("func f @0x1000 {\nbb0:\n  r1 = r2\n  ret r1\n}\n");
  RunResult r = run(p, 0, RunConfig{1}, {{Reg::r(2), 7}});
  ASSERT_EQ(r.status, RunStatus::Ok);
  EXPECT_EQ(r.reg(visit(r, Point{0, 0, 1}), Reg::r(1)), 7u);
  ASSERT_FALSE(r.frames.empty());
  EXPECT_EQ(r.frames[0].ret, std::optional<Word>(7));
}

TEST(Interpreter, ArithmeticWrapsAtWordSize) {
  Program p = parse_program("func f @0x1000 {\nbb0:\n  r1 = 0xFFFFFFFF\n  r2 = r1 + 0x2\n  ret\n}\n");
  RunResult r = run(p, 0, RunConfig{1});
  EXPECT_EQ(r.reg(visit(r, Point{0, 0, 2}), Reg::r(2)), 1u);
}

TEST(Interpreter, DiamondTakesOneArm) {
  Program p = corpus("diamond_ite.ir");
  const uint32_t left = *p.functions[0].block_index("left"), right = *p.functions[0].block_index("right");
  for (Word cond : {Word{0}, Word{1}}) {
    RunResult r = run(p, 0, RunConfig{3}, {{Reg::r(2), cond}});
    ASSERT_EQ(r.status, RunStatus::Ok);
    const bool l = r.last_visit(Point{0, left, 0}, 0).has_value();
    const bool rt = r.last_visit(Point{0, right, 0}, 0).has_value();
    EXPECT_NE(l, rt);
    EXPECT_EQ(l, cond != 0);
  }
}

TEST(Interpreter, StepLimitStopsLoops) {
  Program p = parse_program("func f @0x1000 {\nbb0:\n  jmp bb0\n}\n");
  RunConfig c;
  c.step_limit = 50;
  EXPECT_EQ(run(p, 0, c).status, RunStatus::StepLimit);
}

TEST(Interpreter, CallsPushFrames) {
  Program p = corpus("deep_calls.ir");
  RunResult r = run(p, 0, RunConfig{5});
  ASSERT_EQ(r.status, RunStatus::Ok) << r.error;
  EXPECT_EQ(r.frames.size(), 4u);
  EXPECT_EQ(r.frames[3].func, *p.function_index("leaf"));
}

TEST(Interpreter, DeterministicInSeed) {
  Program p = corpus("listing1.ir");
  RunResult a = run(p, 0, RunConfig{11}), b = run(p, 0, RunConfig{11});
  ASSERT_EQ(a.trace.size(), b.trace.size());
  for (size_t i = 0; i < a.trace.size(); ++i) {
    EXPECT_EQ(a.trace[i].at, b.trace[i].at);
    EXPECT_EQ(a.trace[i].regs, b.trace[i].regs);
  }
}

TEST(Certify, ComplexPairHolds) {
  Program p = corpus("complex.ir");
  auto v = certify(p, pair(p, Point{0, 0, 3}, "R1", Point{0, 0, 5}, "R0"), CertifyConfig{});
  EXPECT_EQ(v.verdict, Verdict::Pass);
  EXPECT_EQ(v.runs_compared, CertifyConfig{}.runs);
  EXPECT_FALSE(v.counterexample);
}

TEST(Certify, WrongPairIsRefuted) {
  Program p = corpus("complex.ir");
  auto v = certify(p, pair(p, Point{0, 0, 3}, "R1", Point{0, 0, 1}, "R2"), CertifyConfig{});
  EXPECT_EQ(v.verdict, Verdict::Fail);
  ASSERT_TRUE(v.counterexample);
  EXPECT_NE(v.counterexample->a_value, v.counterexample->b_value);
}

TEST(Certify, UnreachedPointIsVacuous) {
  Program p = parse_program(
      "func f @0x1000 {\nbb0:\n  r1 = 0x0\n  br r1, dead, out\ndead:\n  r2 = r3\n  jmp out\nout:\n  ret\n}\n");
  auto v = certify(p, pair(p, Point{0, 1, 1}, "R2", Point{0, 1, 0}, "R3"), CertifyConfig{});
  EXPECT_EQ(v.verdict, Verdict::Vacuous);
  EXPECT_EQ(v.runs_compared, 0u);
}

TEST(Certify, GuardedPairOnlyComparedWhenGuardHolds) {
  // the comparison splits random inputs roughly in half, so both arms run
  Program p = parse_program(
      "func f @0x1000 {\nbb0:\n  r7 = r2 < 0x80000000\n  r4 = ite r7, r0, r1\n  ret\n}\n");
  AliasPair ap = pair(p, Point{0, 0, 2}, "R4", Point{0, 0, 0}, "R0");
  EXPECT_EQ(certify(p, ap, CertifyConfig{}).verdict, Verdict::Fail);
  ap.guards.push_back(Guard{Point{0, 0, 1}, Reg::r(7), true});
  auto v = certify(p, ap, CertifyConfig{});
  EXPECT_EQ(v.verdict, Verdict::Pass);
  EXPECT_GT(v.runs_compared, 0u);
  EXPECT_LT(v.runs_compared, CertifyConfig{}.runs);
}

TEST(Certify, EngineFactsCertify) {
  for (const char* f : {"intuitive.ir", "complex.ir", "diamond_ite.ir", "struct_fields.ir"}) {
    Program p = corpus(f);
    Engine eng(p);
    Seed s{Point{0, 0, 1}, sse::reg(Reg::r(1)), Dir::Both};
    auto pairs = pairs_from_query(eng.query({s}), s);
    ASSERT_FALSE(pairs.empty()) << f;
    for (const auto& v : certify_all(p, pairs, CertifyConfig{}))
      EXPECT_NE(v.verdict, Verdict::Fail) << f;
  }
}

TEST(Certify, SerialAndParallelAgree) {
  Program p = corpus("complex.ir");
  Engine eng(p);
  Seed s{Point{0, 0, 2}, sse::parse("load(R3+0x8)", &p, Point{0, 0, 2}), Dir::Both};
  auto pairs = pairs_from_query(eng.query({s}), s);
  pairs.push_back(pair(p, Point{0, 0, 3}, "R1", Point{0, 0, 1}, "R2"));
  auto a = certify_all(p, pairs, CertifyConfig{}, false);
  auto b = certify_all(p, pairs, CertifyConfig{}, true);
  ASSERT_EQ(a.size(), b.size());
  for (size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].verdict, b[i].verdict);
    EXPECT_EQ(a[i].runs_compared, b[i].runs_compared);
  }
}

TEST(Fuzz, GeneratorIsDeterministic) {
  EXPECT_EQ(to_text(generate_program(42, 20)), to_text(generate_program(42, 20)));
  EXPECT_NE(to_text(generate_program(42, 20)), to_text(generate_program(43, 20)));
  Program g = generate_program(9, 12);
  ASSERT_EQ(g.functions.size(), 1u);
  size_t n = 0;
  for (const auto& b : g.functions[0].blocks) n += b.statements.size();
  EXPECT_LE(n, 12u + 1);
}

TEST(Fuzz, SmallCampaignFindsNothing) {
  FuzzConfig c;
  c.count = 40;
  c.max_len = 20;
  c.runs = 8;
  FuzzReport r = fuzz(c, false);
  EXPECT_EQ(r.programs, 40u);
  EXPECT_LT(r.rejected, 40u);
  EXPECT_GT(r.pairs, 0u);
  EXPECT_GT(r.passed, 0u);
  EXPECT_EQ(r.refuted, 0u);
  EXPECT_TRUE(r.failures.empty());
}
