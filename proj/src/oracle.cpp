#include "symalias/oracle.hpp"

#include <omp.h>

#include <algorithm>
#include <set>

#include "symalias/taint.hpp"

namespace symalias::oracle {

std::string_view to_string(RunStatus s) {
  switch (s) {
    case RunStatus::Ok: return "ok";
    case RunStatus::StepLimit: return "step limit exceeded";
    case RunStatus::CodeAccess: return "memory access to code region";
    case RunStatus::NoEntry: return "no such entry function";
  }
  return "?";
}

std::string_view to_string(Verdict v) {
  switch (v) {
    case Verdict::Pass: return "pass";
    case Verdict::Fail: return "fail";
    case Verdict::Vacuous: return "vacuous";
  }
  return "?";
}

namespace {

uint64_t mix(uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

uint64_t mix3(uint64_t a, uint64_t b, uint64_t c) { return mix(mix(mix(a) ^ b) ^ c); }

constexpr uint64_t kStackTop = 0x7fff0000;
constexpr uint64_t kHeapBase = 0x60000000;
constexpr uint64_t kCopyCap = 4096;

}  // namespace

class Memory {
 public:
  uint64_t seed = 0;
  bool small = false;
  uint32_t word_size = 4;
  uint64_t writes = 0;
  std::map<uint64_t, uint8_t> init;
  std::map<uint64_t, std::vector<std::pair<uint64_t, uint8_t>>> hist;

  uint8_t initial(uint64_t a) const {
    auto it = init.find(a);
    if (it != init.end()) return it->second;
    uint64_t h = mix3(seed, a, 0x5eed);
    if (small) return a % word_size == 0 ? static_cast<uint8_t>(h % 16) : 0;
    return static_cast<uint8_t>(h);
  }
  uint8_t byte(uint64_t a, uint64_t at_writes) const {
    auto it = hist.find(a);
    if (it != hist.end()) {
      const auto& v = it->second;
      auto p = std::lower_bound(v.begin(), v.end(), std::make_pair(at_writes, uint8_t{0}));
      if (p != v.begin()) return std::prev(p)->second;
    }
    return initial(a);
  }
  Word read(uint64_t a, uint64_t at_writes, uint32_t n) const {
    Word w = 0;
    for (uint32_t i = 0; i < n; ++i) w |= Word{byte(a + i, at_writes)} << (8 * i);
    return w;
  }
  // One logical write (a statement or an external copy) per call.
  void write(uint64_t a, const std::vector<uint8_t>& bytes) {
    for (size_t i = 0; i < bytes.size(); ++i) hist[a + i].push_back({writes, bytes[i]});
    ++writes;
  }
};

Word RunResult::reg(size_t entry, Reg r) const {
  const TraceEntry& te = trace[entry];
  auto it = te.regs.find(r.id());
  if (it != te.regs.end()) return it->second;
  uint64_t h = mix3(seed, te.frame, r.id());
  return (small_values ? h % 16 : h) & mask;
}

Word RunResult::read(uint64_t addr, uint64_t writes, uint32_t bytes) const {
  return memory->read(addr, writes, bytes) & mask;
}

std::optional<size_t> RunResult::last_visit(const Point& p, uint32_t frame, size_t limit) const {
  Point q = p;
  if (q.block == Point::kPrologue || q.block == Point::kExit) q.pos = 0;
  std::optional<size_t> best;
  for (size_t i = 0; i < trace.size() && i <= limit; ++i)
    if (trace[i].frame == frame && trace[i].at == q) best = i;
  return best;
}

namespace {

Word apply_binop(BinOpKind op, Word a, Word b, Word mask, uint32_t bits) {
  switch (op) {
    case BinOpKind::Add: return (a + b) & mask;
    case BinOpKind::Sub: return (a - b) & mask;
    case BinOpKind::Mul: return (a * b) & mask;
    case BinOpKind::Div: return b == 0 ? 0 : (a / b) & mask;
    case BinOpKind::Shl: return b >= bits ? 0 : (a << b) & mask;
    case BinOpKind::Shr: return b >= bits ? 0 : (a >> b) & mask;
    case BinOpKind::And: return a & b;
    case BinOpKind::Or: return a | b;
    case BinOpKind::Xor: return a ^ b;
    case BinOpKind::CmpLt: return a < b;
    case BinOpKind::CmpLe: return a <= b;
    case BinOpKind::CmpEq: return a == b;
    case BinOpKind::CmpNe: return a != b;
    case BinOpKind::CmpGt: return a > b;
    case BinOpKind::CmpGe: return a >= b;
  }
  return 0;
}

Word apply_unop(UnOpKind op, Word a, Word mask) {
  switch (op) {
    case UnOpKind::Not: return ~a & mask;
    case UnOpKind::Neg: return (~a + 1) & mask;
    case UnOpKind::LogicalNot: return a == 0;
  }
  return 0;
}

}  // namespace

std::optional<Word> RunResult::eval(const Sse& e, size_t entry) const {
  const TraceEntry& te = trace[entry];
  switch (e->kind) {
    case NodeKind::Val: return e->val & mask;
    case NodeKind::Reg: {
      const Frame& fr = frames[te.frame];
      if (e->reg.is_param()) {
        auto it = fr.entry_regs.find(Reg::r(e->reg.param_index()).id());
        if (it != fr.entry_regs.end()) return it->second;
        uint64_t h = mix3(seed, te.frame, e->reg.param_index());
        return (small_values ? h % 16 : h) & mask;
      }
      if (e->reg.is_rv()) return fr.ret;
      return reg(entry, e->reg);
    }
    case NodeKind::Sum: {
      Word s = 0;
      for (const auto& k : e->kids) {
        auto v = eval(k, entry);
        if (!v) return std::nullopt;
        s = (s + *v) & mask;
      }
      return s;
    }
    case NodeKind::Binop: {
      auto a = eval(e->kids[0], entry), b = eval(e->kids[1], entry);
      if (!a || !b) return std::nullopt;
      return apply_binop(e->bop, *a, *b, mask, word_size * 8);
    }
    case NodeKind::Unop: {
      auto a = eval(e->kids[0], entry);
      if (!a) return std::nullopt;
      return apply_unop(e->uop, *a, mask);
    }
    case NodeKind::Load:
    case NodeKind::Store: {
      auto a = eval(e->kids[0], entry);
      if (!a) return std::nullopt;
      Point site = e->site;
      uint64_t w;
      if (site == te.at) {
        w = te.writes;
      } else {
        if (site.func != te.at.func) return std::nullopt;
        auto v = last_visit(site, te.frame, entry);
        if (!v) v = last_visit(site, te.frame);  // site later in the run
        if (!v) return std::nullopt;
        w = trace[*v].writes;
      }
      return read(*a, w, word_size);
    }
    case NodeKind::Index: return std::nullopt;
  }
  return std::nullopt;
}

namespace {

struct Activation {
  uint32_t func = 0;
  uint32_t block = 0;
  uint32_t pos = 0;
  uint32_t frame = 0;
  std::map<uint32_t, Word> regs;
};

class Interp {
 public:
  Interp(const Program& p, const RunConfig& cfg, RunResult& out)
      : p_(p), cfg_(cfg), out_(out), models_(default_models()) {
    auto mem = std::make_shared<Memory>();
    mem->seed = cfg.seed;
    mem->small = cfg.small_values;
    mem->word_size = p.word_size;
    for (const auto& d : p.data_objects)
      for (size_t i = 0; i < d.words.size(); ++i)
        for (uint32_t b = 0; b < p.word_size; ++b)
          mem->init[d.address + i * p.word_size + b] = static_cast<uint8_t>(d.words[i] >> (8 * b));
    for (const auto& [a, s] : p.string_table) {
      for (size_t i = 0; i < s.size(); ++i) mem->init[a + i] = static_cast<uint8_t>(s[i]);
      mem->init[a + s.size()] = 0;
    }
    mem_ = mem.get();
    out_.memory = mem;
    out_.seed = cfg.seed;
    out_.small_values = cfg.small_values;
    out_.mask = p.word_mask();
    out_.word_size = p.word_size;
    for (const auto& f : p.functions) {
      size_t n = 0;
      for (const auto& b : f.blocks) n += b.statements.size();
      code_.push_back({f.entry_address, f.entry_address + 4 * std::max<size_t>(n, 1)});
    }
  }

  void run(uint32_t entry, const std::map<Reg, Word>& inputs) {
    std::map<uint32_t, Word> regs;
    regs[Reg::sp().id()] = kStackTop & out_.mask;
    regs[Reg::gp().id()] = p_.gp_value & out_.mask;
    for (const auto& [r, v] : inputs) regs[r.id()] = v & out_.mask;
    push(entry, std::move(regs));
    uint64_t steps = 0;
    while (!stack_.empty()) {
      if (++steps > cfg_.step_limit) return fail(RunStatus::StepLimit, "step limit exceeded");
      if (!step()) return;
    }
  }

 private:
  const Program& p_;
  const RunConfig& cfg_;
  RunResult& out_;
  TaintModels models_;
  Memory* mem_;
  std::vector<Activation> stack_;
  std::vector<std::pair<uint64_t, uint64_t>> code_;
  uint64_t heap_ = kHeapBase;

  void fail(RunStatus s, std::string msg) {
    out_.status = s;
    out_.error = std::move(msg);
  }

  void record(const Activation& a, Point at) {
    out_.trace.push_back(TraceEntry{at, a.frame, mem_->writes, a.regs});
  }

  void push(uint32_t func, std::map<uint32_t, Word> regs) {
    Activation a;
    a.func = func;
    a.frame = static_cast<uint32_t>(out_.frames.size());
    a.regs = std::move(regs);
    out_.frames.push_back(Frame{func, a.regs, std::nullopt});
    record(a, Point{func, Point::kPrologue, 0});
    stack_.push_back(std::move(a));
    if (p_.functions[func].blocks.empty()) ret(std::nullopt);
  }

  Word rv(const Activation& a, Reg r) const {
    auto it = a.regs.find(r.id());
    if (it != a.regs.end()) return it->second;
    uint64_t h = mix3(cfg_.seed, a.frame, r.id());
    return (cfg_.small_values ? h % 16 : h) & out_.mask;
  }
  Word val(const Activation& a, const Operand& o) const {
    return o.is_reg() ? rv(a, o.as_reg()) : (o.as_imm() & out_.mask);
  }
  bool in_code(uint64_t addr) const {
    for (const auto& [lo, hi] : code_)
      if (addr >= lo && addr < hi) return true;
    return false;
  }
  std::vector<uint8_t> bytes_of(Word w) const {
    std::vector<uint8_t> b(p_.word_size);
    for (uint32_t i = 0; i < p_.word_size; ++i) b[i] = static_cast<uint8_t>(w >> (8 * i));
    return b;
  }

  void ret(std::optional<Word> value) {
    Activation done = std::move(stack_.back());
    stack_.pop_back();
    out_.frames[done.frame].ret = value;
    record(done, Point{done.func, Point::kExit, 0});
    if (stack_.empty()) return;
    Activation& caller = stack_.back();
    const Statement& s = p_.functions[caller.func].blocks[caller.block].statements[caller.pos];
    std::optional<Reg> rd;
    if (auto* c = std::get_if<CallStmt>(&s.form)) rd = c->ret;
    if (auto* c = std::get_if<ICallStmt>(&s.form)) rd = c->ret;
    if (rd) caller.regs[rd->id()] = value.value_or(mix3(cfg_.seed, done.frame, 0xfeed)) & out_.mask;
    caller.pos++;
  }

  std::string c_string(uint64_t a) const {
    std::string s;
    for (uint64_t i = 0; i < kCopyCap; ++i) {
      uint8_t b = mem_->byte(a + i, mem_->writes);
      if (!b) break;
      s.push_back(static_cast<char>(b));
    }
    return s;
  }

  void copy_into(const Activation& a, const StmtId& site, uint64_t dst, std::vector<uint8_t> bytes) {
    if (bytes.empty()) return;
    const uint64_t sp = rv(a, Reg::sp());
    const uint64_t top = sp + p_.functions[a.func].frame_size;
    if (dst >= sp && dst < top && dst + bytes.size() > top)
      out_.overflows.push_back({site, dst, bytes.size(), top - dst});
    mem_->write(dst, bytes);
  }

  // Library calls: sources write fresh bytes, summaries copy, the rest only
  // return a fresh value.
  void external(Activation& a, const CallStmt& c, const StmtId& site) {
    std::vector<Word> args;
    for (const auto& o : c.args) args.push_back(val(a, o));
    std::optional<Word> result;
    auto arg = [&](uint32_t i) { return i < args.size() ? args[i] : Word{0}; };
    if (const SourceModel* m = models_.source(c.target)) {
      uint64_t n = 16;
      if (m->length_arg && *m->length_arg < args.size()) n = std::min<uint64_t>(arg(*m->length_arg), kCopyCap);
      auto fill = [&](uint64_t dst) {
        std::vector<uint8_t> bytes(n);
        for (uint64_t i = 0; i < n; ++i) bytes[i] = static_cast<uint8_t>(1 + mix3(cfg_.seed, site.index + 1000 * site.block, i) % 255);
        if (n) bytes[n - 1] = 0;
        copy_into(a, site, dst, std::move(bytes));
      };
      if (m->buffer_arg) {
        fill(arg(*m->buffer_arg));
        result = n;
      }
      if (m->taints_return) {
        uint64_t h = heap_;
        heap_ += 0x1000;
        fill(h);
        result = h;
      }
    } else if (const LibrarySummary* s = models_.summary(c.target)) {
      for (const auto& fl : s->flows) {
        if (fl.from >= args.size()) continue;
        if (fl.to == SummaryFlow::kReturn) {
          result = arg(fl.from);
          continue;
        }
        if (static_cast<size_t>(fl.to) >= args.size()) continue;
        std::vector<uint8_t> bytes;
        if ((c.target == "memcpy" || c.target == "memmove" || c.target == "strncpy") && args.size() > 2) {
          uint64_t n = std::min<uint64_t>(arg(2), kCopyCap);
          for (uint64_t i = 0; i < n; ++i) bytes.push_back(mem_->byte(arg(fl.from) + i, mem_->writes));
        } else {
          std::string str = c_string(arg(fl.from));
          bytes.assign(str.begin(), str.end());
          bytes.push_back(0);
        }
        uint64_t dst = arg(static_cast<uint32_t>(fl.to));
        if (c.target == "strcat" || c.target == "strncat") dst += c_string(dst).size();
        copy_into(a, site, dst, std::move(bytes));
      }
    }
    if (c.ret) a.regs[c.ret->id()] = result.value_or(mix3(cfg_.seed, site.index, 0xca11 + site.block)) & out_.mask;
    a.pos++;
  }

  void call(Activation& a, uint32_t callee, const std::vector<Operand>& ops) {
    std::map<uint32_t, Word> regs;
    regs[Reg::sp().id()] = (rv(a, Reg::sp()) - p_.functions[callee].frame_size) & out_.mask;
    regs[Reg::gp().id()] = rv(a, Reg::gp());
    for (size_t i = 0; i < ops.size(); ++i) regs[Reg::r(static_cast<uint32_t>(i)).id()] = val(a, ops[i]);
    push(callee, std::move(regs));
  }

  bool goto_label(Activation& a, const std::string& label) {
    a.block = *p_.functions[a.func].block_index(label);
    a.pos = 0;
    return true;
  }

  bool step() {
    Activation& a = stack_.back();
    const Function& fn = p_.functions[a.func];
    const auto& stmts = fn.blocks[a.block].statements;
    record(a, Point{a.func, a.block, a.pos});
    if (a.pos >= stmts.size()) {
      if (a.block + 1 < fn.blocks.size()) {
        a.block++;
        a.pos = 0;
      } else {
        ret(std::nullopt);
      }
      return true;
    }
    const Statement& s = stmts[a.pos];
    const Word mask = out_.mask;
    auto addr_of = [&](const Address& ad) { return (rv(a, ad.base) + static_cast<Word>(ad.disp)) & mask; };
    if (auto* m = std::get_if<MoveStmt>(&s.form)) {
      a.regs[m->dst.id()] = val(a, m->src);
    } else if (auto* b = std::get_if<BinOpStmt>(&s.form)) {
      a.regs[b->dst.id()] = apply_binop(b->op, val(a, b->lhs), val(a, b->rhs), mask, p_.word_size * 8);
    } else if (auto* u = std::get_if<UnOpStmt>(&s.form)) {
      a.regs[u->dst.id()] = apply_unop(u->op, val(a, u->src), mask);
    } else if (auto* t = std::get_if<IteStmt>(&s.form)) {
      a.regs[t->dst.id()] = rv(a, t->cond) ? val(a, t->then_v) : val(a, t->else_v);
    } else if (auto* l = std::get_if<LoadStmt>(&s.form)) {
      uint64_t ad = addr_of(l->addr);
      if (in_code(ad)) return fail(RunStatus::CodeAccess, "load from code at " + p_.describe(s.id)), false;
      a.regs[l->dst.id()] = mem_->read(ad, mem_->writes, p_.word_size) & mask;
    } else if (auto* st = std::get_if<StoreStmt>(&s.form)) {
      uint64_t ad = addr_of(st->addr);
      if (in_code(ad)) return fail(RunStatus::CodeAccess, "store to code at " + p_.describe(s.id)), false;
      mem_->write(ad, bytes_of(val(a, st->src)));
    } else if (auto* c = std::get_if<CallStmt>(&s.form)) {
      if (auto fi = p_.function_index(c->target))
        call(a, *fi, c->args);
      else
        external(a, *c, s.id);
      return true;
    } else if (auto* ic = std::get_if<ICallStmt>(&s.form)) {
      const Function* f = p_.function_at(rv(a, ic->target));
      if (f) {
        call(a, static_cast<uint32_t>(f - p_.functions.data()), ic->args);
      } else {
        if (ic->ret) a.regs[ic->ret->id()] = mix3(cfg_.seed, s.id.index, 0x1ca1) & mask;
        a.pos++;
      }
      return true;
    } else if (auto* br = std::get_if<BranchStmt>(&s.form)) {
      return goto_label(a, rv(a, br->cond) ? br->then_label : br->else_label);
    } else if (auto* j = std::get_if<JumpStmt>(&s.form)) {
      return goto_label(a, j->label);
    } else if (auto* r = std::get_if<RetStmt>(&s.form)) {
      std::optional<Word> v;
      if (r->value) v = val(a, *r->value);
      a.pos++;
      record(a, Point{a.func, a.block, a.pos});
      ret(v);
      return true;
    }
    a.pos++;
    return true;
  }
};

}  // namespace

RunResult run(const Program& program, uint32_t entry_func, const RunConfig& cfg,
              const std::map<Reg, Word>& inputs) {
  RunResult out;
  Interp in(program, cfg, out);
  if (entry_func >= program.functions.size()) {
    out.status = RunStatus::NoEntry;
    out.error = "no such entry function";
    return out;
  }
  in.run(entry_func, inputs);
  return out;
}

// ---- certification

namespace {

// 1 equal, 0 differ, -1 not comparable in this run.
int compare_in_run(const RunResult& r, const AliasPair& pair, Word& va, Word& vb) {
  if (r.status != RunStatus::Ok) return -1;
  int result = -1;
  for (uint32_t fr = 0; fr < r.frames.size(); ++fr) {
    if (r.frames[fr].func != pair.a_at.func || r.frames[fr].func != pair.b_at.func) continue;
    auto ia = r.last_visit(pair.a_at, fr), ib = r.last_visit(pair.b_at, fr);
    if (!ia || !ib) continue;
    bool guards_hold = true;
    for (const auto& g : pair.guards) {
      auto ig = r.last_visit(g.site, fr);
      if (!ig) {
        guards_hold = false;
        break;
      }
      guards_hold &= (r.reg(*ig, g.cond) != 0) == g.polarity;
    }
    if (!guards_hold) continue;
    auto a = r.eval(pair.a, *ia), b = r.eval(pair.b, *ib);
    if (!a || !b) continue;
    if (*a != *b) {
      va = *a, vb = *b;
      return 0;
    }
    result = 1;
  }
  return result;
}

}  // namespace

PairVerdict certify(const Program& program, const AliasPair& pair, const CertifyConfig& cfg) {
  PairVerdict v;
  // Random words almost never make a guard false; when no run compared,
  // the same number of small-valued runs follows.
  for (uint32_t i = 0; i < 2 * cfg.runs; ++i) {
    if (i == cfg.runs && v.runs_compared) break;
    RunConfig rc{cfg.seed + i, cfg.step_limit, i >= cfg.runs};
    RunResult r = run(program, cfg.entry_func, rc);
    Word a = 0, b = 0;
    int c = compare_in_run(r, pair, a, b);
    if (c < 0) continue;
    v.runs_compared++;
    if (c == 0) {
      v.verdict = Verdict::Fail;
      v.counterexample = Counterexample{rc.seed, rc.small_values, a, b};
      // shrink: look for a failing run over small inputs
      for (uint64_t s = 0; s < 64; ++s) {
        RunResult rs = run(program, cfg.entry_func, RunConfig{s, cfg.step_limit, true});
        if (compare_in_run(rs, pair, a, b) == 0) {
          v.counterexample = Counterexample{s, true, a, b};
          break;
        }
      }
      return v;
    }
  }
  v.verdict = v.runs_compared ? Verdict::Pass : Verdict::Vacuous;
  return v;
}

std::vector<PairVerdict> certify_all(const Program& program, const std::vector<AliasPair>& pairs,
                                     const CertifyConfig& cfg, bool parallel) {
  std::vector<PairVerdict> out(pairs.size());
  const auto n = static_cast<int64_t>(pairs.size());
  if (parallel) {
#pragma omp parallel for schedule(dynamic)
    for (int64_t i = 0; i < n; ++i) out[static_cast<size_t>(i)] = certify(program, pairs[static_cast<size_t>(i)], cfg);
  } else {
    for (int64_t i = 0; i < n; ++i) out[static_cast<size_t>(i)] = certify(program, pairs[static_cast<size_t>(i)], cfg);
  }
  return out;
}

std::vector<AliasPair> pairs_from_query(const QueryResult& q, const Seed& seed) {
  std::vector<AliasPair> out;
  std::set<std::pair<Point, std::string>> seen;
  for (const auto& inst : q.roots) {
    if (inst->func != seed.at.func) continue;
    for (uint32_t i = 0; i < inst->facts.size(); ++i) {
      const Fact& f = inst->facts[i];
      if (sse::has_index(f.expr)) continue;
      if (!seen.insert({f.at, sse::to_string(f.expr, sse::PrintMode::Full)}).second) continue;
      out.push_back(AliasPair{seed.at, seed.expr, f.at, f.expr, inst->guards(i)});
    }
  }
  return out;
}

}  // namespace symalias::oracle
