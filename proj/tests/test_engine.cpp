#include <gtest/gtest.h>

#include <algorithm>
#include <chrono>
#include <cstdlib>

#include "symalias/alias.hpp"

using namespace symalias;

namespace {

Program corpus(const std::string& name) { return parse_program_file(std::string(SYMALIAS_CORPUS) + "/" + name); }

std::vector<std::string> names(const std::vector<Sse>& v) {
  std::vector<std::string> out;
  for (const auto& e : v) out.push_back(sse::to_string(e));
  std::sort(out.begin(), out.end());
  return out;
}

const Instance* root(const QueryResult& q) { return q.roots.empty() ? nullptr : q.roots[0].get(); }

std::optional<uint32_t> find_fact(const Instance& inst, Point at, const char* expr) {
  for (uint32_t i = 0; i < inst.facts.size(); ++i)
    if (inst.facts[i].at == at && sse::to_string(inst.facts[i].expr) == expr) return i;
  return std::nullopt;
}

std::string dump(const QueryResult& q) {
  std::string s;
  for (const auto& inst : q.all) {
    s += inst->origin + "\n";
    for (const auto& f : inst->facts)
      s += "  " + std::to_string(f.at.func) + ":" + std::to_string(f.at.block) + ":" + std::to_string(f.at.pos) +
           " " + sse::to_string(f.expr, sse::PrintMode::Full) + "\n";
  }
  return s;
}

}  // namespace

TEST(Engine, IntuitiveExampleAliasSet) {
  Program p = corpus("intuitive.ir");
  Engine eng(p);
  auto t0 = std::chrono::steady_clock::now();
  auto q = eng.query({Seed{Point{0, 0, 0}, sse::parse("load(R3+0x8)", &p, Point{0, 0, 0}), Dir::Both}});
  EXPECT_LT(std::chrono::steady_clock::now() - t0, std::chrono::seconds(1));
  ASSERT_NE(root(q), nullptr);
  EXPECT_EQ(names(alias_set(*root(q))),
            (std::vector<std::string>{"R1", "load(R3+0x8)", "load(store(R6+0x4)+0x8)"}));
  EXPECT_FALSE(q.cap_hit);
}

TEST(Engine, ComplexExampleRuleTrace) {
  Program p = corpus("complex.ir");
  Engine eng(p);
  // line 3 loads R1 from R3+0x8: the query starts from that expression
  auto q = eng.query({Seed{Point{0, 0, 2}, sse::parse("load(R3+0x8)", &p, Point{0, 0, 2}), Dir::Both}});
  const Instance* r = root(q);
  ASSERT_NE(r, nullptr);
  auto f = find_fact(*r, Point{0, 0, 5}, "R0");
  ASSERT_TRUE(f) << dump(q);
  EXPECT_EQ(r->rule_trace(*f), (std::vector<int>{6, 8, 7, 5}));
}

TEST(Engine, ComplexExampleR1AliasesR0) {
  Program p = corpus("complex.ir");
  Engine eng(p);
  auto q = eng.query({Seed{Point{0, 0, 3}, sse::reg(Reg::r(1)), Dir::Both}});
  ASSERT_NE(root(q), nullptr);
  EXPECT_TRUE(find_fact(*root(q), Point{0, 0, 5}, "R0")) << dump(q);
  // R0 before line 5 holds load(R6), not the alias
  EXPECT_FALSE(find_fact(*root(q), Point{0, 0, 4}, "R0"));
}

TEST(Engine, DeterministicFacts) {
  Program p = corpus("listing1.ir");
  Engine a(p), b(p);
  Seed s{Point{0, *p.functions[0].block_index("found"), 1}, sse::reg(Reg::r(4)), Dir::Both};
  EXPECT_EQ(dump(a.query({s})), dump(b.query({s})));
  // cached second query is the same as the first
  EXPECT_EQ(dump(a.query({s})), dump(b.query({s})));
}

TEST(Engine, LoopProducesIndexTerm) {
  Program p = corpus("listing1.ir");
  Engine eng(p);
  const uint32_t found = *p.functions[0].block_index("found");
  auto q = eng.query({Seed{Point{0, found, 1}, sse::reg(Reg::r(4)), Dir::Bwd}});
  auto all = names(alias_set(*root(q)));
  EXPECT_NE(std::find(all.begin(), all.end(), "load(R2+i*0x8+0x4)"), all.end()) << dump(q);
  EXPECT_FALSE(q.cap_hit);
}

TEST(Engine, DescendsIntoCallees) {
  Program p = corpus("deep_calls.ir");
  Engine eng(p);
  auto q = eng.query({Seed{Point{0, 0, 2}, sse::reg(Reg::r(1)), Dir::Fwd}});
  auto reached = [&](const char* fn) {
    const uint32_t f = *p.function_index(fn);
    for (const auto& inst : q.all)
      if (inst->func == f)
        for (const auto& x : inst->facts)
          if (x.at.block == 0 && sse::to_string(x.expr) == "R0") return true;
    return false;
  };
  EXPECT_TRUE(reached("level1")) << dump(q);
  EXPECT_TRUE(reached("level2")) << dump(q);
  // level2 passes R0+0x4 on: the leaf's parameter is not an alias
  EXPECT_FALSE(reached("leaf")) << dump(q);
  auto vf = eng.visited_functions();
  EXPECT_NE(std::find(vf.begin(), vf.end(), *p.function_index("level2")), vf.end());
}

TEST(Engine, PropagatesUpToCallers) {
  Program p = corpus("caller_checks.ir");
  Engine eng(p);
  const uint32_t copier = *p.function_index("copier");
  auto q = eng.query({Seed{Point{copier, 0, 0}, sse::reg(Reg::r(0)), Dir::Bwd}});
  bool up = false;
  for (const auto& inst : q.roots)
    if (inst->func == 0) {
      up = true;
      auto set = names(alias_set(*inst));
      EXPECT_NE(std::find(set.begin(), set.end(), "R1"), set.end());
    }
  EXPECT_TRUE(up) << dump(q);
}

TEST(Engine, DemandDrivenLocality) {
  Program p = corpus("deep_calls.ir");
  Engine eng(p);
  const uint32_t leaf = *p.function_index("leaf");
  eng.query({Seed{Point{leaf, 0, 1}, sse::reg(Reg::r(1)), Dir::Fwd}}, QueryOptions{true, false});
  EXPECT_EQ(eng.visited_functions(), std::vector<uint32_t>{leaf});
}

TEST(Engine, RecursionTerminates) {
  for (const char* f : {"recursion_walk.ir", "mutual_recursion.ir"}) {
    Program p = corpus(f);
    Engine eng(p);
    auto t0 = std::chrono::steady_clock::now();
    auto q = eng.query({Seed{Point{0, 0, 2}, sse::reg(Reg::r(1)), Dir::Both}});
    EXPECT_LT(std::chrono::steady_clock::now() - t0, std::chrono::seconds(2)) << f;
    EXPECT_FALSE(q.cap_hit) << f;
    EXPECT_FALSE(q.all.empty());
  }
}

TEST(Engine, ModRefSummaries) {
  Program p = parse_program(R"(
func main @0x1000 frame=0x20 {
bb0:
  call init(r1)
  ret
}
func init @0x2000 frame=0x10 params=1 {
bb0:
  r1 = 0x5000
  store gp+0x20 = r1
  r2 = load r0+0x4
  store r2 = r1
  ret
}
)");
  Engine eng(p);
  const auto& s = eng.summary(1);
  EXPECT_TRUE(s.has_gp);
  EXPECT_EQ(names(s.mod), (std::vector<std::string>{"store(GP+0x20)", "store(load(P0+0x4))"}));
  EXPECT_EQ(names(s.ref), (std::vector<std::string>{"load(P0+0x4)"}));
}

TEST(Engine, IcallTargetsEnableDescent) {
  Program p = corpus("overflow_icall.ir");
  Engine eng(p);
  const uint32_t handle = *p.function_index("handle");
  Seed s{Point{0, 0, 2}, sse::reg(Reg::r(1)), Dir::Fwd};
  auto reaches = [&](const QueryResult& q) {
    for (const auto& inst : q.all)
      if (inst->func == handle) return true;
    return false;
  };
  EXPECT_FALSE(reaches(eng.query({s})));
  eng.set_icall_targets({{StmtId{0, 0, 5}, {handle}}});
  EXPECT_TRUE(reaches(eng.query({s})));
}

TEST(Engine, AliasSetCapReported) {
  Program p = corpus("listing1.ir");
  Caps caps;
  caps.alias_set = 2;
  Engine eng(p, caps);
  const uint32_t found = *p.functions[0].block_index("found");
  auto q = eng.query({Seed{Point{0, found, 1}, sse::reg(Reg::r(4)), Dir::Both}});
  EXPECT_TRUE(q.cap_hit);
}

TEST(Caps, ParseAndEnv) {
  Caps c = Caps::parse("alias_set=16,loop_k=2");
  EXPECT_EQ(c.alias_set, 16u);
  EXPECT_EQ(c.loop_k, 2u);
  EXPECT_EQ(c.sse_depth, Caps{}.sse_depth);
  EXPECT_THROW(Caps::parse("alias_set=0"), std::invalid_argument);
  EXPECT_THROW(Caps::parse("nonsense=3"), std::invalid_argument);
  EXPECT_THROW(Caps::parse("alias_set"), std::invalid_argument);
  EXPECT_EQ(Caps::parse(c.to_string()).to_string(), c.to_string());
  setenv("SYMALIAS_CAPS", "recursion=3", 1);
  EXPECT_EQ(Caps::from_env().recursion, 3u);
  unsetenv("SYMALIAS_CAPS");
  EXPECT_EQ(Caps::from_env().recursion, Caps{}.recursion);
}
