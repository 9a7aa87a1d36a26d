// Randomized invariants. Every generator is seeded so failures reproduce.
#include <gtest/gtest.h>

#include <random>

#include "symalias/icall.hpp"
#include "symalias/oracle.hpp"
#include "symalias/taint.hpp"

using namespace symalias;

namespace {

Program corpus(const std::string& name) { return parse_program_file(std::string(SYMALIAS_CORPUS) + "/" + name); }

class ExprGen {
 public:
  explicit ExprGen(uint64_t seed) : rng_(seed) {}

  // Raw tree: binops are never folded, so canonicalize has work to do.
  Sse raw(int depth) {
    const int pick = depth <= 0 ? static_cast<int>(rng_() % 2) : static_cast<int>(rng_() % 6);
    switch (pick) {
      case 0: return sse::reg(Reg::r(static_cast<uint32_t>(rng_() % 4)));
      case 1: return sse::val(constant());
      case 2:
      case 3: return sse::raw_binop(kOps[rng_() % std::size(kOps)], raw(depth - 1), raw(depth - 1));
      case 4: return sse::unop(rng_() % 2 ? UnOpKind::Neg : UnOpKind::Not, raw(depth - 1));
      default: return sse::load(raw(depth - 1), Point{0, 0, 0});
    }
  }

 private:
  Word constant() {
    static constexpr Word kPool[] = {0, 1, 2, 4, 8, 0x1F, 0x20, 0x7FFFFFFF, 0x80000000, 0xFFFFFFFF};
    return rng_() % 3 ? kPool[rng_() % std::size(kPool)] : static_cast<Word>(rng_() & 0xFFFFFFFF);
  }

  static constexpr BinOpKind kOps[] = {BinOpKind::Add, BinOpKind::Sub, BinOpKind::Mul, BinOpKind::Shl,
                                       BinOpKind::Shr, BinOpKind::And, BinOpKind::Or,  BinOpKind::Xor,
                                       BinOpKind::CmpLt, BinOpKind::CmpEq, BinOpKind::CmpNe};
  std::mt19937_64 rng_;
};

}  // namespace

TEST(Property, CanonicalizePreservesValue) {
  Program p = parse_program("func f @0x1000 frame=0x20 {\nbb0:\n  store sp = r0\n  ret\n}\n");
  ExprGen gen(0x5eed);
  size_t compared = 0;
  for (uint64_t i = 0; i < 2000; ++i) {
    Sse raw = gen.raw(4);
    Sse c = sse::canonicalize(raw);
    ASSERT_TRUE(sse::is_canonical(c)) << sse::to_string(raw);
    for (uint64_t s : {i, i + 7777}) {
      oracle::RunResult r = oracle::run(p, 0, oracle::RunConfig{s, 1000, s % 2 == 1});
      auto a = r.eval(raw, 0), b = r.eval(c, 0);
      ASSERT_EQ(a.has_value(), b.has_value());
      if (!a) continue;
      ++compared;
      EXPECT_EQ(*a, *b) << sse::to_string(raw) << " -> " << sse::to_string(c) << " seed " << s;
    }
  }
  EXPECT_GT(compared, 3000u);
}

TEST(Property, CanonicalFormIsAFixpoint) {
  ExprGen gen(42);
  for (int i = 0; i < 2000; ++i) {
    Sse c = sse::canonicalize(gen.raw(4));
    EXPECT_TRUE(sse::equal(sse::canonicalize(c), c)) << sse::to_string(c);
  }
}

TEST(Property, PrintParseRoundTrip) {
  ExprGen gen(7);
  for (int i = 0; i < 2000; ++i) {
    Sse c = sse::canonicalize(gen.raw(4));
    const std::string text = sse::to_string(c);
    Sse back = sse::parse(text);
    EXPECT_TRUE(sse::equal(back, c)) << text << " reparsed as " << sse::to_string(back);
    EXPECT_EQ(sse::to_string(back), text);
  }
}

TEST(Property, CompareIsATotalOrder) {
  ExprGen gen(99);
  std::vector<Sse> v;
  for (int i = 0; i < 300; ++i) v.push_back(sse::canonicalize(gen.raw(3)));
  for (size_t i = 0; i < v.size(); ++i) {
    EXPECT_EQ(sse::compare(v[i], v[i]), 0);
    for (size_t j = 0; j < v.size(); j += 7) {
      const int ij = sse::compare(v[i], v[j]), ji = sse::compare(v[j], v[i]);
      EXPECT_EQ(ij < 0, ji > 0);
      EXPECT_EQ(ij == 0, sse::equal(v[i], v[j]));
      if (ij == 0) EXPECT_EQ(v[i]->hash, v[j]->hash);
    }
  }
}

TEST(Property, ProgramTextRoundTrip) {
  for (uint64_t s = 0; s < 200; ++s) {
    Program g = oracle::generate_program(s, 25);
    const std::string text = to_text(g);
    EXPECT_EQ(to_text(parse_program(text)), text) << s;
  }
  for (const char* f : {"listing1.ir", "gptr_table.ir", "server_loop.ir"}) {
    const std::string text = to_text(corpus(f));
    EXPECT_EQ(to_text(parse_program(text)), text) << f;
  }
}

TEST(Property, EngineIsDeterministic) {
  for (uint64_t s = 0; s < 60; ++s) {
    Program g = oracle::generate_program(s, 20);
    Seed seed{Point{0, 0, 1}, sse::reg(Reg::r(s % 4)), Dir::Both};
    Engine a(g), b(g);
    auto qa = a.query({seed}), qb = b.query({seed});
    ASSERT_EQ(qa.roots.size(), qb.roots.size());
    for (size_t i = 0; i < qa.roots.size(); ++i) {
      auto x = alias_set(*qa.roots[i]), y = alias_set(*qb.roots[i]);
      ASSERT_EQ(x.size(), y.size()) << s;
      for (size_t k = 0; k < x.size(); ++k) EXPECT_TRUE(sse::equal(x[k], y[k])) << s;
    }
  }
}

TEST(Property, EngineFactsAreCanonical) {
  for (const char* f : {"listing1.ir", "complex.ir", "struct_fields.ir", "nested_loops.ir"}) {
    Program p = corpus(f);
    Engine eng(p);
    auto q = eng.query({Seed{Point{0, 0, 1}, sse::reg(Reg::r(1)), Dir::Both}});
    for (const auto& inst : q.all)
      for (const auto& fact : inst->facts) EXPECT_TRUE(sse::is_canonical(fact.expr)) << f;
  }
}

TEST(Property, TaintSerialEqualsParallelOnCorpus) {
  for (const char* f : {"atoi_len.ir", "caller_checks.ir", "deep_calls.ir", "execve_args.ir", "getenv_sprintf.ir",
                        "loop_copy.ir", "memcpy_tainted_len.ir", "mutual_recursion.ir", "overflow_icall.ir",
                        "read_socket_fd.ir", "recv_strcpy_stack.ir", "server_loop.ir", "sscanf_sink.ir",
                        "strcat_env.ir", "summary_chain.ir", "system_cmd.ir", "unknown_dst.ir"}) {
    Program p = corpus(f);
    Engine eng(p);
    resolve_icalls(eng);
    TaintAnalysis serial(p, default_models(), Caps{}, eng.icall_targets());
    TaintAnalysis par(p, default_models(), Caps{}, eng.icall_targets());
    TaintResult a = serial.run(false), b = par.run(true);
    EXPECT_TRUE(same_alerts(a.alerts, b.alerts)) << f;
    EXPECT_EQ(a.metrics, b.metrics) << f;
    EXPECT_EQ(a.rounds, b.rounds) << f;
  }
}

TEST(Property, FuzzSerialEqualsParallel) {
  oracle::FuzzConfig c;
  c.count = 24;
  c.max_len = 16;
  c.runs = 6;
  c.seed = 3;
  auto a = oracle::fuzz(c, false), b = oracle::fuzz(c, true);
  EXPECT_EQ(a.programs, b.programs);
  EXPECT_EQ(a.rejected, b.rejected);
  EXPECT_EQ(a.pairs, b.pairs);
  EXPECT_EQ(a.passed, b.passed);
  EXPECT_EQ(a.vacuous, b.vacuous);
  EXPECT_EQ(a.refuted, b.refuted);
}

TEST(Property, GeneratedProgramsAliasSoundly) {
  oracle::FuzzConfig c;
  c.count = 60;
  c.max_len = 30;
  c.seed = 2024;
  auto r = oracle::fuzz(c);
  EXPECT_EQ(r.refuted, 0u);
  for (const auto& f : r.failures) ADD_FAILURE() << f.pair << "\n" << f.program_text;
}
