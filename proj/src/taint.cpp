#include "symalias/taint.hpp"

#include <omp.h>

#include <algorithm>
#include <mutex>
#include <tuple>

namespace symalias {

LengthBound length_bound(const std::vector<Constraint>& cs) {
  LengthBound b;
  for (const auto& c : cs) {
    if (c.rel != BinOpKind::CmpLt && c.rel != BinOpKind::CmpLe && c.rel != BinOpKind::CmpEq) continue;
    if (c.bound->kind != NodeKind::Val) {
      b.kind = LengthBound::Kind::Symbolic;
      return b;
    }
    Word v = c.bound->val;
    if (c.rel == BinOpKind::CmpLt) {
      if (v == 0) continue;  // unsatisfiable; ignore rather than claim a bound
      --v;
    }
    if (b.kind == LengthBound::Kind::None || v < b.value) b.value = v;
    b.kind = LengthBound::Kind::Constant;
  }
  return b;
}

std::optional<uint64_t> stack_capacity(Engine& engine, Point at, Reg dst) {
  QueryResult q = engine.query({Seed{at, sse::reg(dst), Dir::Bwd}});
  std::optional<uint64_t> best;
  for (const auto& inst : q.all)
    for (const auto& f : inst->facts) {
      if (f.at.block == Point::kExit) continue;
      auto [rest, c] = sse::split_offset(f.expr);
      if (!rest || rest->kind != NodeKind::Reg || !rest->reg.is_sp()) continue;
      const uint64_t frame = engine.program().functions[f.at.func].frame_size;
      if (c >= frame) continue;
      if (!best || frame - c > *best) best = frame - c;
    }
  return best;
}

bool same_alerts(const std::vector<Alert>& a, const std::vector<Alert>& b) {
  if (a.size() != b.size()) return false;
  for (size_t i = 0; i < a.size(); ++i) {
    const Alert &x = a[i], &y = b[i];
    if (x.sink_site != y.sink_site || x.sink_fn != y.sink_fn || x.cls != y.cls ||
        x.tainted_expr != y.tainted_expr || x.capacity != y.capacity || x.bound != y.bound ||
        x.chain != y.chain || x.rationale != y.rationale || x.constraints.size() != y.constraints.size())
      return false;
  }
  return true;
}

namespace {

BinOpKind mirror(BinOpKind k) {
  switch (k) {
    case BinOpKind::CmpLt: return BinOpKind::CmpGt;
    case BinOpKind::CmpLe: return BinOpKind::CmpGe;
    case BinOpKind::CmpGt: return BinOpKind::CmpLt;
    case BinOpKind::CmpGe: return BinOpKind::CmpLe;
    default: return k;
  }
}

std::optional<BinOpKind> negate(BinOpKind k) {
  switch (k) {
    case BinOpKind::CmpLt: return BinOpKind::CmpGe;
    case BinOpKind::CmpLe: return BinOpKind::CmpGt;
    case BinOpKind::CmpGt: return BinOpKind::CmpLe;
    case BinOpKind::CmpGe: return BinOpKind::CmpLt;
    case BinOpKind::CmpNe: return BinOpKind::CmpEq;
    default: return std::nullopt;  // == negates to !=, which bounds nothing
  }
}

bool operand_is(const Operand& o, const Sse& e) { return o.is_reg() && sse::equal(e, sse::reg(o.as_reg())); }

const CallStmt* as_call(const Statement& s) { return std::get_if<CallStmt>(&s.form); }

// Statement at a real program point, if any.
const Statement* stmt_at(const Program& p, const Point& at) {
  if (at.block == Point::kPrologue || at.block == Point::kExit) return nullptr;
  const auto& b = p.functions[at.func].blocks[at.block];
  return at.pos < b.statements.size() ? &b.statements[at.pos] : nullptr;
}

using EdgeKey = std::tuple<StmtId, uint32_t, uint32_t, uint32_t>;  // source, func, from, to

struct ConstraintLess {
  bool operator()(const Constraint& a, const Constraint& b) const {
    if (a.site != b.site) return a.site < b.site;
    if (a.rel != b.rel) return a.rel < b.rel;
    return sse::compare(a.bound, b.bound) < 0;
  }
};

class TaintHooks : public Hooks {
 public:
  TaintHooks(const Program& p, const TaintModels& m) : p_(p), m_(m) {}
  void bind(Interner* in) { in_ = in; }

  std::map<EdgeKey, std::set<Constraint, ConstraintLess>> edges;
  std::map<std::pair<uint32_t, uint32_t>, std::set<StmtId>> branch_sites;
  uint64_t ver = 0;

  std::vector<std::string> warnings() const {
    std::lock_guard<std::mutex> g(mu_);
    return {warn_.begin(), warn_.end()};
  }

  void at_statement(const Statement& s, Point at, const Fact& f, std::vector<Seed>& spawn) override {
    Point next{at.func, at.block, at.pos + 1};
    auto emit = [&](Reg dst, uint32_t cs) { spawn.push_back({next, sse::reg(dst), Dir::Fwd, true, f.cls, cs}); };
    if (auto* b = std::get_if<BinOpStmt>(&s.form)) {
      if (is_comparison(b->op)) return;
      if (operand_is(b->lhs, f.expr) || operand_is(b->rhs, f.expr)) emit(b->dst, f.cset);
    } else if (auto* u = std::get_if<UnOpStmt>(&s.form)) {
      if (u->op != UnOpKind::LogicalNot && operand_is(u->src, f.expr)) emit(u->dst, f.cset);
    } else if (auto* l = std::get_if<LoadStmt>(&s.form)) {
      // data read through a tainted pointer; the buffer's length bound says
      // nothing about the value
      if (sse::equal(f.expr, address_expr(l->addr)) || sse::equal(f.expr, sse::reg(l->addr.base)))
        emit(l->dst, without_source_length(f.cset));
    }
  }

  void at_external_call(const Statement& s, Point at, const Fact& f, bool forward,
                        std::vector<Seed>& spawn) override {
    const CallStmt* c = as_call(s);
    if (!forward || !c || !f.cls) return;
    const TaintClass k = in_->klass(f.cls);
    const bool tainted = f.tainted || (!k.chain.empty() && k.chain.back() == s.id);
    if (!tainted) return;
    const LibrarySummary* sum = m_.summary(c->target);
    bool is_arg = false;
    for (const auto& a : c->args) is_arg |= operand_is(a, f.expr);
    if (!sum) {
      if (is_arg && !m_.sink(c->target) && !m_.source(c->target)) {
        std::lock_guard<std::mutex> g(mu_);
        warn_.insert("unmodeled external '" + c->target + "' at " + p_.describe(s.id) +
                     " receives tainted data; taint kept on the argument");
      }
      return;
    }
    for (const auto& fl : sum->flows) {
      if (fl.from >= c->args.size() || !operand_is(c->args[fl.from], f.expr)) continue;
      if (fl.to == SummaryFlow::kReturn) {
        const uint32_t cs = sum->category == "String to Int" ? without_source_length(f.cset) : f.cset;
        if (c->ret)
          spawn.push_back({Point{at.func, at.block, at.pos + 1}, sse::reg(*c->ret), Dir::Fwd, true,
                           f.cls, cs});
        continue;
      }
      auto to = static_cast<uint32_t>(fl.to);
      if (to >= c->args.size() || to == fl.from || !c->args[to].is_reg()) continue;
      TaintClass nk = k;
      nk.chain.push_back(s.id);
      spawn.push_back({at, sse::reg(c->args[to].as_reg()), Dir::Both, false, in_->intern_class(nk), f.cset});
    }
  }

  uint32_t without_source_length(uint32_t cs) const {
    if (!cs) return cs;
    auto v = in_->cset(cs);
    return std::erase_if(v, [](const Constraint& c) { return c.source_length; }) ? in_->intern_cset(std::move(v))
                                                                                 : cs;
  }

  uint32_t cross_edge(uint32_t func, uint32_t from, uint32_t to, const Fact& f, bool forward) override {
    if (!f.cls || (edges.empty() && branch_sites.empty())) return f.cset;
    uint32_t cs = f.cset;
    if (!forward && cs) {
      // leaving the branch block against the edge: forget what the other
      // edges out of it established
      auto it = branch_sites.find({func, from});
      if (it != branch_sites.end()) {
        auto v = in_->cset(cs);
        auto n = std::erase_if(v, [&](const Constraint& c) { return it->second.count(c.site) > 0; });
        if (n) cs = in_->intern_cset(std::move(v));
      }
    }
    if (!f.tainted) return cs;
    auto e = edges.find({in_->klass(f.cls).source, func, from, to});
    if (e != edges.end())
      for (const auto& c : e->second) cs = in_->cset_with(cs, c);
    return cs;
  }

  uint64_t version(uint32_t) const override { return ver; }

 private:
  const Program& p_;
  const TaintModels& m_;
  Interner* in_ = nullptr;
  mutable std::mutex mu_;
  std::set<std::string> warn_;
};

}  // namespace

struct TaintAnalysis::State {
  const Program& p;
  TaintModels models;
  Interner interner;
  TaintHooks hooks;
  Engine engine;

  State(const Program& prog, TaintModels m, Caps caps)
      : p(prog), models(std::move(m)), hooks(prog, models), engine(prog, caps, &hooks, &interner) {
    hooks.bind(&interner);
  }

  struct Job {
    SourceSite src;
    std::vector<Seed> seeds;
    QueryResult result;
  };

  bool fd_from_constant_file(const Point& at, Reg fd);
  std::vector<Job> seed_sources();
  bool record_constraints(const std::vector<Job>& jobs);
  void check_sinks(const std::vector<Job>& jobs, TaintResult& out);
  void loop_copies(const std::vector<Job>& jobs, TaintResult& out);
  std::optional<uint64_t> capacity(const Point& at, const Operand& dst);
};

TaintAnalysis::TaintAnalysis(const Program& program, TaintModels models, Caps caps,
                             std::map<StmtId, std::vector<uint32_t>> icall_targets)
    : st_(std::make_unique<State>(program, std::move(models), caps)) {
  if (!icall_targets.empty()) st_->engine.set_icall_targets(icall_targets);
}

TaintAnalysis::~TaintAnalysis() = default;

bool TaintAnalysis::State::fd_from_constant_file(const Point& at, Reg fd) {
  static const std::set<std::string, std::less<>> kOpen = {"open", "open64", "fopen", "fopen64"};
  QueryResult q = engine.query({Seed{at, sse::reg(fd), Dir::Bwd}});
  for (const auto& inst : q.all)
    for (const auto& f : inst->facts) {
      if (f.at.pos == 0 || f.expr->kind != NodeKind::Reg) continue;
      const Statement* s = stmt_at(p, Point{f.at.func, f.at.block, f.at.pos - 1});
      const CallStmt* c = s ? as_call(*s) : nullptr;
      if (!c || !kOpen.count(c->target) || !c->ret || *c->ret != f.expr->reg || c->args.empty()) continue;
      const Operand& path = c->args[0];
      if (path.is_imm()) return true;
      Point call{f.at.func, f.at.block, f.at.pos - 1};
      QueryResult pq = engine.query({Seed{call, sse::reg(path.as_reg()), Dir::Bwd}}, {false, false});
      for (const auto& pi : pq.all)
        for (const auto& pf : pi->facts)
          if (pf.expr->kind == NodeKind::Val) return true;
    }
  return false;
}

std::vector<TaintAnalysis::State::Job> TaintAnalysis::State::seed_sources() {
  std::vector<Job> jobs;
  for (const auto& fn : p.functions)
    for (const auto& b : fn.blocks)
      for (const auto& s : b.statements) {
        const CallStmt* c = as_call(s);
        const SourceModel* m = c ? models.source(c->target) : nullptr;
        if (!m) continue;
        Job j;
        j.src = {s.id, c->target, false};
        Point at{s.id.func, s.id.block, s.id.index};
        if (m->fd_arg && *m->fd_arg < c->args.size() && c->args[*m->fd_arg].is_reg() &&
            fd_from_constant_file(at, c->args[*m->fd_arg].as_reg())) {
          j.src.filtered = true;
          jobs.push_back(std::move(j));
          continue;
        }
        uint32_t cls = interner.intern_class(TaintClass{s.id, {s.id}});
        uint32_t cset = 0;
        if (m->length_arg && *m->length_arg < c->args.size() && c->args[*m->length_arg].is_imm())
          cset = interner.intern_cset(
              {Constraint{BinOpKind::CmpLe, sse::val(c->args[*m->length_arg].as_imm()), s.id, true}});
        if (m->buffer_arg && *m->buffer_arg < c->args.size())
          j.seeds.push_back({at, operand_expr(c->args[*m->buffer_arg]), Dir::Both, false, cls, cset});
        if (m->taints_return && c->ret)
          j.seeds.push_back({Point{at.func, at.block, at.pos + 1}, sse::reg(*c->ret), Dir::Fwd, true, cls, cset});
        jobs.push_back(std::move(j));
      }
  return jobs;
}

// Compares on tainted values guard the edges of the branch that tests them.
bool TaintAnalysis::State::record_constraints(const std::vector<Job>& jobs) {
  bool changed = false;
  for (const auto& j : jobs)
    for (const auto& inst : j.result.all)
      for (const auto& f : inst->facts) {
        if (!f.tainted || !f.cls) continue;
        const Statement* s = stmt_at(p, f.at);
        auto* b = s ? std::get_if<BinOpStmt>(&s->form) : nullptr;
        if (!b || !is_comparison(b->op)) continue;
        const bool l = operand_is(b->lhs, f.expr), r = operand_is(b->rhs, f.expr);
        if (l == r) continue;
        BinOpKind rel = l ? b->op : mirror(b->op);
        Sse bound = operand_expr(l ? b->rhs : b->lhs);
        const auto& stmts = p.functions[f.at.func].blocks[f.at.block].statements;
        const BranchStmt* br = nullptr;
        for (size_t i = f.at.pos + 1; i < stmts.size(); ++i) {
          if (auto* x = std::get_if<BranchStmt>(&stmts[i].form); x && x->cond == b->dst) br = x;
          if (stmts[i].defined_register() == b->dst) break;
        }
        if (!br) continue;
        const Function& fn = p.functions[f.at.func];
        uint32_t t = *fn.block_index(br->then_label), e = *fn.block_index(br->else_label);
        if (t == e) continue;
        StmtId src = interner.klass(f.cls).source;
        auto add = [&](uint32_t to, BinOpKind k) {
          if (k == BinOpKind::CmpNe) return;
          changed |= hooks.edges[{src, f.at.func, f.at.block, to}].insert(Constraint{k, bound, s->id, false}).second;
        };
        add(t, rel);
        if (auto n = negate(rel)) add(e, *n);
        changed |= hooks.branch_sites[{f.at.func, f.at.block}].insert(s->id).second;
      }
  return changed;
}

std::optional<uint64_t> TaintAnalysis::State::capacity(const Point& at, const Operand& dst) {
  if (!dst.is_reg()) return std::nullopt;
  return stack_capacity(engine, at, dst.as_reg());
}

namespace {

struct Candidate {
  LengthBound bound;
  std::string expr;
  std::vector<Constraint> constraints;
  std::vector<StmtId> chain;
};

// Worst candidate first: unbounded, then larger constant bounds.
bool worse(const Candidate& a, const Candidate& b) {
  auto rank = [](const LengthBound& x) {
    return x.kind == LengthBound::Kind::None ? 0 : x.kind == LengthBound::Kind::Constant ? 1 : 2;
  };
  if (rank(a.bound) != rank(b.bound)) return rank(a.bound) < rank(b.bound);
  if (a.bound.value != b.bound.value) return a.bound.value > b.bound.value;
  if (a.chain != b.chain) return a.chain < b.chain;
  return a.expr < b.expr;
}

std::string hex(uint64_t v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "0x%llx", static_cast<unsigned long long>(v));
  return buf;
}

}  // namespace

void TaintAnalysis::State::check_sinks(const std::vector<Job>& jobs, TaintResult& out) {
  struct Hits {
    std::vector<const Fact*> src, len;
  };
  std::map<StmtId, Hits> hits;
  for (const auto& j : jobs)
    for (const auto& inst : j.result.all)
      for (const auto& f : inst->facts) {
        if (!f.tainted) continue;
        const Statement* s = stmt_at(p, f.at);
        const CallStmt* c = s ? as_call(*s) : nullptr;
        const SinkModel* m = c ? models.sink(c->target) : nullptr;
        if (!m) continue;
        for (uint32_t a : m->src_args)
          if (a < c->args.size() && operand_is(c->args[a], f.expr)) {
            hits[s->id].src.push_back(&f);
            break;
          }
        if (m->len_arg && *m->len_arg < c->args.size() && operand_is(c->args[*m->len_arg], f.expr))
          hits[s->id].len.push_back(&f);
      }
  for (auto& [site, h] : hits) {
    const CallStmt& c = *as_call(p.statement(site));
    const SinkModel& m = *models.sink(c.target);
    Point at{site.func, site.block, site.index};
    auto candidate = [&](const Fact& f) {
      Candidate x;
      x.constraints = interner.cset(f.cset);
      x.bound = length_bound(x.constraints);
      x.expr = sse::to_string(f.expr, sse::PrintMode::Compact, &p);
      x.chain = interner.klass(f.cls).chain;
      return x;
    };
    std::vector<Candidate> cands;
    if (m.cls == SinkClass::CommandExec) {
      for (const Fact* f : h.src) {
        Candidate x = candidate(*f);
        std::erase_if(x.constraints, [](const Constraint& k) { return k.source_length; });
        if (x.constraints.empty()) cands.push_back(std::move(x));
      }
      if (h.src.empty()) continue;
      out.metrics.tainted_sinks++;
      if (cands.empty()) continue;
      std::sort(cands.begin(), cands.end(), worse);
      Alert a{site, c.target, m.cls, cands[0].expr, {}, std::nullopt, std::nullopt, cands[0].chain,
              "tainted command with no constraint"};
      out.alerts.push_back(std::move(a));
      continue;
    }
    out.metrics.tainted_sinks++;
    // Length of the copy: the source's collected bound, overridden by the
    // length argument when there is one.
    std::optional<LengthBound> len_override;
    std::vector<Candidate> len_cands;
    if (m.len_arg && *m.len_arg < c.args.size()) {
      const Operand& la = c.args[*m.len_arg];
      if (la.is_imm()) {
        len_override = LengthBound{LengthBound::Kind::Constant, la.as_imm()};
      } else if (h.len.empty()) {
        len_override = LengthBound{LengthBound::Kind::Symbolic, 0};
      } else {
        for (const Fact* f : h.len) len_cands.push_back(candidate(*f));
      }
    }
    if (!len_cands.empty()) {
      cands = std::move(len_cands);
    } else {
      for (const Fact* f : h.src) {
        Candidate x = candidate(*f);
        if (len_override) {
          const LengthBound& o = *len_override;
          if (o.kind == LengthBound::Kind::Symbolic || x.bound.kind != LengthBound::Kind::Constant ||
              o.value < x.bound.value)
            x.bound = o;
        }
        cands.push_back(std::move(x));
      }
    }
    if (cands.empty()) continue;
    std::sort(cands.begin(), cands.end(), worse);
    const Candidate& w = cands[0];
    if (w.bound.kind == LengthBound::Kind::Symbolic) continue;
    std::optional<uint64_t> cap;
    if (m.dst_arg && *m.dst_arg < c.args.size()) cap = capacity(at, c.args[*m.dst_arg]);
    Alert a{site, c.target, m.cls, w.expr, w.constraints, cap, std::nullopt, w.chain, ""};
    if (w.bound.kind == LengthBound::Kind::None) {
      a.rationale = cap ? "unbounded copy into a " + hex(*cap) + "-byte stack region"
                        : "unbounded copy, destination unknown";
    } else {
      a.bound = w.bound.value;
      if (cap && w.bound.value <= *cap) continue;
      a.rationale = cap ? "copy bound " + hex(w.bound.value) + " exceeds capacity " + hex(*cap)
                        : "copy bound " + hex(w.bound.value) + ", destination unknown";
    }
    out.alerts.push_back(std::move(a));
  }
}

// memcpy-like loops: a value loaded through a tainted pointer stored through
// a pointer the loop advances.
void TaintAnalysis::State::loop_copies(const std::vector<Job>& jobs, TaintResult& out) {
  std::map<StmtId, Candidate> found;
  for (const auto& j : jobs)
    for (const auto& inst : j.result.all)
      for (const auto& f : inst->facts) {
        if (!f.tainted) continue;
        const Statement* s = stmt_at(p, f.at);
        auto* ld = s ? std::get_if<LoadStmt>(&s->form) : nullptr;
        if (!ld) continue;
        if (!sse::equal(f.expr, address_expr(ld->addr)) && !sse::equal(f.expr, sse::reg(ld->addr.base)))
          continue;
        const auto& bi = engine.block_info(f.at.func, f.at.block);
        if (!bi.in_loop) continue;
        const Function& fn = p.functions[f.at.func];
        std::vector<uint32_t> body;
        for (uint32_t b = 0; b < fn.blocks.size(); ++b) {
          const auto& x = engine.block_info(f.at.func, b);
          if (x.in_loop && x.loop_header == bi.loop_header) body.push_back(b);
        }
        auto advances = [&](Reg r) {
          for (uint32_t b : body)
            for (const auto& st : fn.blocks[b].statements)
              if (auto* bo = std::get_if<BinOpStmt>(&st.form))
                if (bo->dst == r && (bo->op == BinOpKind::Add || bo->op == BinOpKind::Sub) &&
                    ((bo->lhs == Operand::reg(r) && bo->rhs.is_imm()) ||
                     (bo->rhs == Operand::reg(r) && bo->lhs.is_imm())))
                  return true;
          return false;
        };
        for (uint32_t b : body)
          for (const auto& st : fn.blocks[b].statements) {
            auto* sto = std::get_if<StoreStmt>(&st.form);
            if (!sto || sto->src != Operand::reg(ld->dst) || !advances(sto->addr.base)) continue;
            if (found.count(st.id)) continue;
            Candidate x;
            x.constraints = interner.cset(f.cset);
            std::erase_if(x.constraints, [](const Constraint& k) { return k.source_length; });
            x.bound = length_bound(x.constraints);
            x.expr = sse::to_string(f.expr, sse::PrintMode::Compact, &p);
            x.chain = interner.klass(f.cls).chain;
            found[st.id] = x;
          }
      }
  for (auto& [site, x] : found) {
    out.metrics.tainted_sinks++;
    if (x.bound.kind == LengthBound::Kind::Symbolic) continue;
    const auto& sto = std::get<StoreStmt>(p.statement(site).form);
    auto cap = stack_capacity(engine, Point{site.func, site.block, site.index}, sto.addr.base);
    Alert a{site, "<loop-copy>", SinkClass::CopyLike, x.expr, x.constraints, cap, std::nullopt, x.chain, ""};
    if (x.bound.kind == LengthBound::Kind::Constant) {
      a.bound = x.bound.value;
      if (cap && x.bound.value <= *cap) continue;
      a.rationale = "loop copy bound " + hex(x.bound.value) + (cap ? " exceeds capacity " + hex(*cap) : ", destination unknown");
    } else {
      a.rationale = "loop copy of tainted data with no length bound";
    }
    out.alerts.push_back(std::move(a));
  }
}

TaintResult TaintAnalysis::run(bool parallel) {
  State& s = *st_;
  TaintResult out;
  auto jobs = s.seed_sources();
  for (const auto& j : jobs) out.sources.push_back(j.src);
  const auto n = static_cast<int64_t>(jobs.size());
  auto run_job = [&](int64_t i) {
    auto& j = jobs[static_cast<size_t>(i)];
    j.result = j.seeds.empty() ? QueryResult{} : s.engine.query(j.seeds);
  };
  // Constraint edges learned in one round change facts of the next.
  constexpr uint32_t kMaxRounds = 4;
  for (out.rounds = 1;; ++out.rounds) {
    if (parallel) {
#pragma omp parallel for schedule(dynamic)
      for (int64_t i = 0; i < n; ++i) run_job(i);
    } else {
      for (int64_t i = 0; i < n; ++i) run_job(i);
    }
    if (!s.record_constraints(jobs)) break;
    if (out.rounds == kMaxRounds) {
      out.warnings.push_back("constraint collection did not stabilize");
      break;
    }
    s.hooks.ver++;
    s.engine.clear_cache();
  }

  std::set<uint32_t> funcs;
  std::set<std::pair<uint32_t, uint32_t>> covered;
  for (const auto& j : jobs) {
    out.cap_hit |= j.result.cap_hit;
    for (const auto& inst : j.result.all)
      for (const auto& f : inst->facts) {
        if (f.at.block == Point::kPrologue || f.at.block == Point::kExit) continue;
        funcs.insert(f.at.func);
        covered.insert({f.at.func, f.at.block});
        if (f.tainted) out.tainted_blocks.insert({f.at.func, f.at.block});
      }
  }
  s.check_sinks(jobs, out);
  s.loop_copies(jobs, out);
  std::sort(out.alerts.begin(), out.alerts.end(),
            [](const Alert& a, const Alert& b) { return a.sink_site < b.sink_site; });
  out.metrics.analyzed_functions = funcs.size();
  out.metrics.covered_blocks = covered.size();
  out.metrics.tainted_blocks = out.tainted_blocks.size();
  out.metrics.alerts = out.alerts.size();
  for (auto& w : s.hooks.warnings()) out.warnings.push_back(std::move(w));
  if (out.cap_hit) out.warnings.push_back("analysis cap reached during taint propagation");
  return out;
}

}  // namespace symalias
