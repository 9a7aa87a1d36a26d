#include <omp.h>

#include <random>
#include <set>
#include <sstream>

#include "symalias/oracle.hpp"

namespace symalias::oracle {

namespace {

std::string hex(uint64_t v) {
  std::ostringstream os;
  os << "0x" << std::hex << v;
  return os.str();
}

std::string reg_name(uint32_t i) { return "r" + std::to_string(i); }

}  // namespace

Program generate_program(uint64_t seed, uint32_t max_len, uint32_t word_size) {
  std::mt19937_64 rng(seed);
  auto pick = [&](uint32_t n) { return static_cast<uint32_t>(rng() % n); };
  auto reg = [&] { return reg_name(pick(4)); };
  auto imm = [&] { return hex(pick(4) == 0 ? rng() % 0x100 : pick(8) * word_size); };
  auto operand = [&] { return pick(3) == 0 ? imm() : reg(); };
  auto addr = [&] {
    std::string base = pick(3) == 0 ? reg() : std::string("sp");
    uint32_t disp = pick(8) * word_size;
    return disp ? base + "+" + hex(disp) : base;
  };
  static const char* kOps[] = {"+", "-", "*", "&", "|", "^", "<<", ">>", "<", "=="};
  const uint32_t len = 1 + pick(std::max<uint32_t>(max_len, 2) - 1);
  std::ostringstream os;
  os << "wordsize " << word_size << "\nfunc main @0x1000 frame=0x100 {\nbb0:\n";
  for (uint32_t i = 0; i < len; ++i) {
    switch (pick(10)) {
      case 0: os << "  " << reg() << " = " << imm() << "\n"; break;
      case 1: os << "  " << reg() << " = " << reg() << "\n"; break;
      case 2:
      case 3: os << "  " << reg() << " = " << reg() << " " << kOps[pick(10)] << " " << operand() << "\n"; break;
      case 4: os << "  " << reg() << " = " << reg() << " + " << imm() << "\n"; break;
      case 5:
      case 6: os << "  " << reg() << " = load " << addr() << "\n"; break;
      case 7:
      case 8: os << "  store " << addr() << " = " << operand() << "\n"; break;
      default:
        if (pick(2))
          os << "  " << reg() << " = ite " << reg() << ", " << operand() << ", " << operand() << "\n";
        else
          os << "  " << reg() << " = " << (pick(2) ? "-" : "~") << reg() << "\n";
    }
  }
  os << "  ret\n}\n";
  return parse_program(os.str());
}

bool hygienic(const Program& program, uint64_t seed) {
  RunResult r = run(program, 0, RunConfig{seed, 10000, false});
  if (r.status != RunStatus::Ok) return false;
  struct Access {
    uint64_t addr;
    Address syntax;
  };
  std::vector<Access> acc;
  const auto& stmts = program.functions[0].blocks[0].statements;
  for (size_t i = 0; i < r.trace.size(); ++i) {
    const Point& p = r.trace[i].at;
    if (p.block != 0 || p.pos >= stmts.size()) continue;
    const Address* ad = nullptr;
    if (auto* l = std::get_if<LoadStmt>(&stmts[p.pos].form)) ad = &l->addr;
    if (auto* s = std::get_if<StoreStmt>(&stmts[p.pos].form)) ad = &s->addr;
    if (!ad) continue;
    uint64_t a = (r.reg(i, ad->base) + static_cast<Word>(ad->disp)) & r.mask;
    acc.push_back({a, *ad});
  }
  for (size_t i = 0; i < acc.size(); ++i)
    for (size_t j = i + 1; j < acc.size(); ++j) {
      const uint64_t lo = std::max(acc[i].addr, acc[j].addr);
      const uint64_t hi = std::min(acc[i].addr, acc[j].addr) + program.word_size;
      const bool overlap = lo < hi;
      if (overlap && !(acc[i].syntax == acc[j].syntax)) return false;
      if (overlap && acc[i].addr != acc[j].addr) return false;
    }
  return true;
}

FuzzReport fuzz(const FuzzConfig& cfg, bool parallel) {
  struct One {
    bool rejected = false;
    uint64_t pairs = 0, passed = 0, vacuous = 0, refuted = 0;
    std::vector<FuzzFailure> failures;
    bool cap_hit = false;
  };
  std::vector<One> res(cfg.count);
  auto work = [&](uint32_t idx) {
    One& o = res[idx];
    // rejected draws are replaced with the next candidate from this slot
    Program p;
    uint64_t s = cfg.seed * 1000003 + idx;
    for (int attempt = 0;; ++attempt, s += 0x10000000ull) {
      p = generate_program(s, cfg.max_len);
      if (hygienic(p, s)) break;
      o.rejected = true;
      if (attempt > 64) return;
    }
    const auto& stmts = p.functions[0].blocks[0].statements;
    std::vector<uint32_t> defs;
    for (uint32_t i = 0; i < stmts.size(); ++i)
      if (stmts[i].defined_register()) defs.push_back(i);
    if (defs.empty()) return;
    std::mt19937_64 rng(s);
    uint32_t k = defs[rng() % defs.size()];
    Seed seed{Point{0, 0, k + 1}, sse::reg(*stmts[k].defined_register()), Dir::Both};
    Engine eng(p);
    QueryResult q = eng.query({seed});
    o.cap_hit = q.cap_hit;
    auto pairs = pairs_from_query(q, seed);
    CertifyConfig cc;
    cc.runs = cfg.runs;
    cc.seed = s;
    for (const auto& pr : pairs) {
      PairVerdict v = certify(p, pr, cc);
      o.pairs++;
      if (v.verdict == Verdict::Pass) o.passed++;
      if (v.verdict == Verdict::Vacuous) o.vacuous++;
      if (v.verdict == Verdict::Fail) {
        o.refuted++;
        o.failures.push_back({idx, to_text(p),
                              point_name(pr.a_at, &p) + " " + sse::to_string(pr.a, sse::PrintMode::Full) +
                                  " ~ " + point_name(pr.b_at, &p) + " " +
                                  sse::to_string(pr.b, sse::PrintMode::Full),
                              *v.counterexample});
      }
    }
  };
  const auto n = static_cast<int64_t>(cfg.count);
  if (parallel) {
#pragma omp parallel for schedule(dynamic)
    for (int64_t i = 0; i < n; ++i) work(static_cast<uint32_t>(i));
  } else {
    for (int64_t i = 0; i < n; ++i) work(static_cast<uint32_t>(i));
  }
  FuzzReport rep;
  for (auto& o : res) {
    rep.programs++;
    rep.rejected += o.rejected;
    rep.pairs += o.pairs;
    rep.passed += o.passed;
    rep.vacuous += o.vacuous;
    rep.refuted += o.refuted;
    rep.cap_hit |= o.cap_hit;
    for (auto& f : o.failures) rep.failures.push_back(std::move(f));
  }
  return rep;
}

}  // namespace symalias::oracle
