// Prints one PASS/FAIL line per acceptance criterion; exits non-zero if any
// criterion fails.
#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <set>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include "symalias/icall.hpp"
#include "symalias/oracle.hpp"
#include "symalias/pipeline.hpp"
#include "symalias/taint.hpp"

using namespace symalias;

namespace {

using Clock = std::chrono::steady_clock;

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string corpus_path(const std::string& name) { return std::string(SYMALIAS_CORPUS) + "/" + name; }
Program corpus(const std::string& name) { return parse_program_file(corpus_path(name)); }

double seconds_since(Clock::time_point t) { return std::chrono::duration<double>(Clock::now() - t).count(); }

std::string join(const std::vector<std::string>& v) {
  std::string s;
  for (const auto& x : v) s += (s.empty() ? "" : ", ") + x;
  return "{" + s + "}";
}

std::vector<std::string> sorted_names(const std::vector<Sse>& v) {
  std::vector<std::string> out;
  for (const auto& e : v) out.push_back(sse::to_string(e));
  std::sort(out.begin(), out.end());
  return out;
}

Outcome intuitive_example() {
  const auto t0 = Clock::now();
  Program p = corpus("intuitive.ir");
  Engine eng(p);
  auto q = eng.query({Seed{Point{0, 0, 0}, sse::parse("load(R3+0x8)", &p, Point{0, 0, 0}), Dir::Both}});
  const double s = seconds_since(t0);
  if (q.roots.empty()) return {false, "no root instance"};
  auto got = sorted_names(alias_set(*q.roots[0]));
  std::vector<std::string> want{"R1", "load(R3+0x8)", "load(store(R6+0x4)+0x8)"};
  std::ostringstream d;
  d << join(got) << " in " << s << " s";
  return {got == want && s < 1.0, d.str()};
}

Outcome complex_example() {
  const auto t0 = Clock::now();
  Program p = corpus("complex.ir");
  Engine eng(p);
  auto q = eng.query({Seed{Point{0, 0, 2}, sse::parse("load(R3+0x8)", &p, Point{0, 0, 2}), Dir::Both}});
  if (q.roots.empty()) return {false, "no root instance"};
  const Instance& r = *q.roots[0];
  // R1 holds the seed after line 3; R0 holds it after line 5
  bool r1 = false;
  std::vector<int> trace;
  for (uint32_t i = 0; i < r.facts.size(); ++i) {
    const auto& f = r.facts[i];
    const std::string e = sse::to_string(f.expr);
    if (f.at == Point{0, 0, 3} && e == "R1") r1 = true;
    if (f.at == Point{0, 0, 5} && e == "R0") trace = r.rule_trace(i);
  }
  const double s = seconds_since(t0);
  std::ostringstream d;
  d << "R1@3 " << (r1 ? "found" : "missing") << ", R0@5 rules";
  for (int x : trace) d << " " << x;
  d << " in " << s << " s";
  return {r1 && trace == std::vector<int>{6, 8, 7, 5} && s < 1.0, d.str()};
}

Outcome listing1() {
  const auto t0 = Clock::now();
  Program p = corpus("listing1.ir");
  Engine eng(p);
  auto res = resolve_icalls(eng);
  const double s = seconds_since(t0);
  if (res.size() != 2) return {false, std::to_string(res.size()) + " icall sites"};
  auto names = [&](const IcallResolution& r) {
    std::vector<std::string> v;
    for (uint32_t f : r.targets) v.push_back(p.functions[f].name);
    std::sort(v.begin(), v.end());
    return v;
  };
  const bool fptr = res[0].pattern == IcallPattern::DirectFptr && names(res[0]) == std::vector<std::string>{"fun"};
  const bool table = res[1].pattern == IcallPattern::TableStride && res[1].stride == 0x8 &&
                     res[1].field_offset == 0x4 &&
                     names(res[1]) == std::vector<std::string>{"get_handler", "set_handler"};
  std::ostringstream d;
  d << "site1 " << to_string(res[0].pattern) << " " << join(names(res[0])) << "; site2 "
    << to_string(res[1].pattern) << " stride 0x" << std::hex << res[1].stride << " offset 0x"
    << res[1].field_offset << std::dec << " " << join(names(res[1])) << " in " << s << " s";
  return {fptr && table && s < 1.0, d.str()};
}

// ---- rule table

struct RuleCase {
  int row;
  const char* body;
  uint32_t pos;
  const char* expr;
  int site;  // position of the expression's memory nodes, -1 for none
  bool forward;
  std::vector<std::tuple<std::string, uint32_t, int>> out;
  bool killed;
  int kill_rule;  // checked when non-zero
};

const std::vector<RuleCase>& rule_cases() {
  static const std::vector<RuleCase> cases = {
      {1, "r1 = r2", 0, "load(R2+0x4)", -1, true, {{"load(R1+0x4)", 1, 1}}, false, 0},
      {2, "r3 = r1 + r2", 0, "load(R1+R2+0x8)", -1, true, {{"load(R3+0x8)", 1, 2}}, false, 0},
      {3, "r4 = ite r5, r1, r2", 0, "R1+0x4", -1, true, {{"R4+0x4", 1, 3}}, false, 0},
      {4, "r4 = ite r5, r1, r2", 0, "load(R2)", -1, true, {{"load(R4)", 1, 4}}, false, 0},
      {5, "r1 = load r2+0x4", 0, "load(R2+0x4)+0x8", 0, true, {{"R1+0x8", 1, 5}}, false, 0},
      {6, "store r1+0x4 = r2", 0, "R2+0x8", -1, true, {{"store(R1+0x4)+0x8", 1, 6}}, false, 0},
      {7, "store r1+0x4 = r2\n  r3 = load r1+0x4", 1, "store(R1+0x4)", 1, true, {{"R3", 2, 7}}, false, 0},
      {8, "r1 = r2", 0, "load(R1)", -1, false, {{"load(R2)", 0, 8}}, true, 0},
      {9, "r1 = r2 + 0x4", 0, "load(R1)", -1, false, {{"load(R2+0x4)", 0, 9}}, true, 0},
      {10, "r4 = ite r5, r1, r2", 0, "R4+0x8", -1, false, {{"R1+0x8", 0, 10}, {"R2+0x8", 0, 11}}, true, 0},
      {11, "r4 = ite r5, r1, r2", 0, "R4+0x8", -1, false, {{"R1+0x8", 0, 10}, {"R2+0x8", 0, 11}}, true, 0},
      {12, "r1 = load r2+0x4", 0, "R1+0x8", -1, false, {{"load(R2+0x4)+0x8", 0, 12}}, true, 0},
      {13, "store r1 = r2\n  r3 = load r1", 0, "load(R1)+0x4", 1, false, {{"R2+0x4", 0, 13}}, true, 0},
      // footnote *: a load before the store keeps the old contents
      {13, "r3 = load r1\n  store r1 = r2", 1, "load(R1)+0x4", 0, false, {}, false, 0},
      {14, "r1 = 0x0", 0, "load(R1+0x4)", -1, true, {}, true, 14},
      {14, "r1 = r2", 0, "R1+R2", -1, true, {}, true, 14},
      {15, "r3 = load r1\n  store r1 = r2", 1, "load(R1)", 0, true, {}, true, 15},
      // footnote +: memory observed after the store survives it
      {15, "store r1 = r2\n  r3 = load r1", 0, "load(R1)", 1, true, {}, false, 0},
      {15, "r3 = load r1\n  store r1+0x4 = r2", 1, "load(R1)", 0, true, {}, false, 0},
  };
  return cases;
}

bool run_rule_case(const RuleCase& c) {
  Program p = parse_program(std::string("func f @0x1000 frame=0x40 {\nbb0:\n  ") + c.body + "\n  ret\n}\n");
  const auto& stmts = p.functions[0].blocks[0].statements;
  Sse e = c.site < 0 ? sse::parse(c.expr) : sse::parse(c.expr, nullptr, Point{0, 0, static_cast<uint32_t>(c.site)});
  StepResult r = c.forward ? step_forward(stmts, Point{0, 0, c.pos}, e) : step_backward(stmts, Point{0, 0, c.pos}, e);
  std::vector<std::tuple<std::string, uint32_t, int>> got;
  for (const auto& d : r.out) got.emplace_back(sse::to_string(d.expr), d.pos, d.rule);
  if (c.out.empty() && !c.killed) {
    // survival cases: no rule of this row may fire
    if (r.killed) return false;
    for (const auto& d : r.out)
      if (d.rule == c.row) return false;
    return true;
  }
  if (got != c.out || r.killed != c.killed) return false;
  return c.kill_rule == 0 || r.kill_rule == c.kill_rule;
}

Outcome rule_table() {
  std::set<int> failed;
  for (const auto& c : rule_cases())
    if (!run_rule_case(c)) failed.insert(c.row);
  std::ostringstream d;
  d << 15 - failed.size() << "/15 rows";
  for (int r : failed) d << " (row " << r << " failed)";
  return {failed.empty(), d.str()};
}

Outcome fuzz_campaign() {
  const auto t0 = Clock::now();
  oracle::FuzzConfig c;
  c.count = 500;
  c.max_len = 30;
  c.runs = 16;
  c.seed = 1;
  auto r = oracle::fuzz(c);
  const double s = seconds_since(t0);
  std::ostringstream d;
  d << r.programs << " programs, " << r.pairs << " pairs, " << r.passed << " passed, " << r.vacuous
    << " vacuous, " << r.refuted << " refuted in " << s << " s";
  return {r.programs >= 500 && r.pairs > 0 && r.refuted == 0 && s < 60.0, d.str()};
}

TaintResult taint_of(const std::string& name, bool icalls) {
  Program p = corpus(name);
  Engine eng(p);
  if (icalls) resolve_icalls(eng);
  return TaintAnalysis(p, default_models(), Caps{}, eng.icall_targets()).run();
}

Outcome end_to_end_taint() {
  auto plain = taint_of("overflow_icall.ir", true);
  auto checked = taint_of("overflow_icall_checked.ir", true);
  auto symbolic = taint_of("overflow_icall_symbolic.ir", true);
  const bool one = plain.alerts.size() == 1 && plain.alerts[0].sink_fn == "strcpy" && plain.alerts[0].capacity &&
                   *plain.alerts[0].capacity == 32;
  std::ostringstream d;
  d << "alerts: unchecked " << plain.alerts.size() << ", constant check " << checked.alerts.size()
    << ", symbolic check " << symbolic.alerts.size();
  return {one && checked.alerts.empty() && symbolic.alerts.empty(), d.str()};
}

Outcome ablation() {
  auto with = taint_of("overflow_icall.ir", true);
  auto without = taint_of("overflow_icall.ir", false);
  std::ostringstream d;
  d << "default " << with.alerts.size() << " alerts / " << with.metrics.tainted_blocks << " tainted blocks; no-icall "
    << without.alerts.size() << " alerts / " << without.metrics.tainted_blocks << " tainted blocks";
  return {with.alerts.size() == 1 && without.alerts.empty() &&
              without.metrics.tainted_blocks < with.metrics.tainted_blocks,
          d.str()};
}

// The summary's input argument points at received data; every other argument
// and the return value is handed to system(), which alerts on any tainted
// operand.
bool summary_case(const TaintModels& models, const LibrarySummary& s, uint32_t from, uint32_t nargs) {
  std::ostringstream os;
  os << "func main @0x1000 frame=0x100 {\nbb0:\n";
  for (uint32_t a = 0; a < nargs; ++a) os << "  r" << 10 + a << " = gp + 0x" << std::hex << 0x100 * (a + 1) << std::dec << "\n";
  os << "  call recv(0x4, r" << 10 + from << ", 0x40, 0x0)\n  r30 = call " << s.name << "(";
  for (uint32_t a = 0; a < nargs; ++a) os << (a ? ", " : "") << "r" << 10 + a;
  os << ")\n";
  uint32_t idx = nargs + 2;
  std::map<uint32_t, int32_t> probe;
  for (uint32_t a = 0; a < nargs; ++a)
    if (a != from) {
      os << "  call system(r" << 10 + a << ")\n";
      probe[idx++] = static_cast<int32_t>(a);
    }
  os << "  call system(r30)\n  ret\n}\n";
  probe[idx] = SummaryFlow::kReturn;
  Program p = parse_program(os.str());
  TaintResult r = TaintAnalysis(p, models, Caps{}, {}).run(false);
  std::set<int32_t> got, want;
  for (const auto& a : r.alerts)
    if (a.sink_fn == "system") got.insert(probe.at(a.sink_site.index));
  for (const auto& f : s.flows)
    if (f.from == from) want.insert(f.to);
  return !want.empty() && got == want;
}

Outcome summary_table() {
  const TaintModels models = default_models();
  size_t pass = 0;
  std::vector<std::string> failed;
  for (const auto& s : models.summaries) {
    std::set<uint32_t> froms;
    uint32_t nargs = 4;
    for (const auto& f : s.flows) {
      froms.insert(f.from);
      nargs = std::max(nargs, f.from + 1);
      if (f.to >= 0) nargs = std::max(nargs, static_cast<uint32_t>(f.to) + 1);
    }
    bool ok = !froms.empty();
    for (uint32_t from : froms) ok = summary_case(models, s, from, nargs) && ok;
    if (ok)
      ++pass;
    else
      failed.push_back(s.name);
  }
  std::ostringstream d;
  d << pass << "/" << models.summaries.size() << " summaries";
  if (!failed.empty()) d << " failed " << join(failed);
  return {pass == 29 && models.summaries.size() == 29, d.str()};
}

Outcome corpus_sweep() {
  const auto t0 = Clock::now();
  size_t n = 0, capped = 0, loops = 0, recursion = 0;
  std::vector<std::string> hit;
  std::vector<std::filesystem::path> files;
  for (const auto& e : std::filesystem::directory_iterator(SYMALIAS_CORPUS))
    if (e.path().extension() == ".ir") files.push_back(e.path());
  std::sort(files.begin(), files.end());
  for (const auto& f : files) {
    RunConfig cfg;
    cfg.ir_path = f.string();
    Report r = analyze(cfg);
    ++n;
    if (r.cap_hit) {
      ++capped;
      hit.push_back(f.filename().string());
    }
    for (const auto& fn : r.program->functions) {
      Cfg g = build_cfg(*r.program, static_cast<uint32_t>(&fn - r.program->functions.data()));
      if (!g.back_edges.empty()) {
        ++loops;
        break;
      }
    }
    CallGraph cg = build_call_graph(*r.program);
    for (const auto& e : cg.edges) {
      auto back = cg.callees(e.callee);
      if (e.caller == e.callee || std::find(back.begin(), back.end(), e.caller) != back.end()) {
        ++recursion;
        break;
      }
    }
  }
  const double s = seconds_since(t0);
  std::ostringstream d;
  d << n << " programs (" << loops << " with loops, " << recursion << " recursive), " << capped << " hit caps, "
    << s << " s";
  if (!hit.empty()) d << " caps hit in " << join(hit);
  return {n >= 25 && loops > 0 && recursion > 0 && capped == 0 && s < 10.0, d.str()};
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
      {"intuitive example alias set", intuitive_example},
      {"complex example rule trace", complex_example},
      {"listing 1 icall resolution", listing1},
      {"update-rule table rows", rule_table},
      {"differential fuzz against the oracle", fuzz_campaign},
      {"end-to-end taint through an icall", end_to_end_taint},
      {"icall ablation", ablation},
      {"library summary table", summary_table},
      {"corpus termination and caps", corpus_sweep},
  };
  int failures = 0;
  for (size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failures += !o.pass;
    std::printf("criterion %zu: %s  %s (%s)\n", i + 1, o.pass ? "PASS" : "FAIL", criteria[i].first, o.detail.c_str());
    std::fflush(stdout);
  }
  return failures ? 1 : 0;
}
