#include <algorithm>

#include "engine_internal.hpp"

namespace symalias {

std::optional<Sse> substitute(const Sse& e, const std::function<std::optional<Sse>(Reg)>& map,
                              Point site) {
  if (e->kind == NodeKind::Reg) return map(e->reg);
  if (e->kids.empty()) return e;
  std::vector<Sse> kids;
  for (const auto& k : e->kids) {
    auto nk = substitute(k, map, site);
    if (!nk) return std::nullopt;
    kids.push_back(*nk);
  }
  if (e->kind == NodeKind::Load) return sse::load(kids[0], site);
  if (e->kind == NodeKind::Store) return sse::store(kids[0], site);
  return sse::detail::rebuild(*e, std::move(kids));
}

InstanceRunner::InstanceRunner(Engine& engine, uint32_t func, QueryOptions opts, std::string origin)
    : eng_(engine), prog_(engine.program()), fn_(engine.program().functions.at(func)), opts_(opts) {
  inst_.id = impl(engine).new_id();
  inst_.func = func;
  inst_.origin = std::move(origin);
  std::lock_guard<std::mutex> g(impl(engine).mu);
  impl(engine).visited.insert(func);
}

const std::vector<Statement>& InstanceRunner::stmts(const Point& p) const {
  if (p.block == Point::kPrologue) return eng_.prologue(inst_.func);
  static const std::vector<Statement> none;
  if (p.block == Point::kExit) return none;
  return fn_.blocks[p.block].statements;
}

bool InstanceRunner::loop_boundary(const Point& p) const {
  if (p.block == Point::kPrologue || p.block == Point::kExit) return false;
  if (!eng_.block_info(inst_.func, p.block).in_loop) return false;
  return p.pos == 0 || p.pos == fn_.blocks[p.block].statements.size();
}

void InstanceRunner::enqueue(uint32_t id, bool fwd) { work_.push_back({id, fwd}); }

void InstanceRunner::add_seed(const Seed& s) {
  add_fact(s.expr, s.at, s.dir, s.tainted, s.cls, s.cset, -1, 0, std::nullopt);
}

int32_t InstanceRunner::add_fact(const Sse& e, Point at, Dir dir, bool tainted, uint32_t cls,
                                 uint32_t cset, int32_t parent, int rule,
                                 std::optional<Guard> guard) {
  const Caps& caps = eng_.caps();
  if (e->mem_depth > caps.sse_depth) return -1;
  bool boundary = loop_boundary(at);
  if (boundary && !sse::has_index(e)) {
    LoopPoint& lp = loops_[at];
    for (const auto& s : lp.summaries)
      if (sse::subsumed_by(e, s)) return -1;
  }
  Key key{e, at, tainted, cls, cset};
  if (auto it = index_.find(key); it != index_.end()) {
    Fact& f = inst_.facts[it->second];
    if (has_fwd(dir) && !f.fwd) {
      f.fwd = true;
      enqueue(it->second, true);
    }
    if (has_bwd(dir) && !f.bwd) {
      f.bwd = true;
      enqueue(it->second, false);
    }
    return static_cast<int32_t>(it->second);
  }
  if (!distinct_.count(e)) {
    if (distinct_.size() >= caps.alias_set) {
      inst_.cap_hit = true;
      return -1;
    }
  }
  std::vector<FamilyKey> fams;
  if (boundary && !sse::has_index(e)) {
    LoopPoint& lp = loops_[at];
    size_t n = sse::num_offset_positions(e);
    for (size_t j = 0; j < n; ++j) {
      FamilyKey fk{j, sse::skeleton(e, j)};
      auto& members = lp.families[fk];
      bool present = std::any_of(members.begin(), members.end(),
                                 [&](const Sse& m) { return sse::equal(m, e); });
      if (!present && members.size() >= caps.block_iter) {
        inst_.cap_hit = true;
        return -1;
      }
      fams.push_back(fk);
    }
  }
  distinct_.insert(e);
  Fact f;
  f.expr = e;
  f.at = at;
  f.tainted = tainted;
  f.cls = cls;
  f.cset = cset;
  f.parent = parent;
  f.rule = rule;
  f.guard = guard;
  f.fwd = has_fwd(dir);
  f.bwd = has_bwd(dir);
  auto id = static_cast<uint32_t>(inst_.facts.size());
  inst_.facts.push_back(f);
  index_.emplace(key, id);
  if (f.fwd) enqueue(id, true);
  if (f.bwd) enqueue(id, false);

  // loop families: summarize once loop_k members form a progression
  for (const auto& fk : fams) {
    LoopPoint& lp = loops_[at];
    auto& members = lp.families[fk];
    if (std::none_of(members.begin(), members.end(), [&](const Sse& m) { return sse::equal(m, e); }))
      members.push_back(e);
    if (members.size() < caps.loop_k) continue;
    Point header{at.func, eng_.block_info(inst_.func, at.block).loop_header, 0};
    std::optional<Sse> summary = sse::recognize_induction(members, header);
    if (!summary) {
      std::vector<Sse> last(members.end() - caps.loop_k, members.end());
      summary = sse::recognize_induction(last, header);
    }
    if (!summary) continue;
    bool known = std::any_of(lp.summaries.begin(), lp.summaries.end(),
                             [&](const Sse& s) { return sse::equal(s, *summary); });
    if (known) continue;
    lp.summaries.push_back(*summary);
    add_fact(*summary, at, dir, tainted, cls, cset, static_cast<int32_t>(id), 0, guard);
  }
  return static_cast<int32_t>(id);
}

void InstanceRunner::run() {
  while (!work_.empty()) {
    auto [id, fwd] = work_.front();
    work_.pop_front();
    Fact& f = inst_.facts[id];
    if (fwd) {
      if (f.walked_fwd) continue;
      f.walked_fwd = true;
      step_fwd(id);
    } else {
      if (f.walked_bwd) continue;
      f.walked_bwd = true;
      step_bwd(id);
    }
  }
}

void InstanceRunner::step_fwd(uint32_t id) {
  const Fact f = inst_.facts[id];
  const Point p = f.at;
  auto pass = [&](Point to, uint32_t cset) {
    add_fact(f.expr, to, Dir::Fwd, f.tainted, f.cls, cset, static_cast<int32_t>(id), 0, f.guard);
  };
  if (p.block == Point::kExit) return;
  const auto& st = stmts(p);
  if (p.block == Point::kPrologue) {
    if (p.pos >= st.size()) {
      if (!fn_.blocks.empty()) pass(Point{p.func, 0, 0}, f.cset);
      return;
    }
  } else if (p.pos >= st.size()) {
    const auto& bi = eng_.block_info(inst_.func, p.block);
    for (uint32_t s : bi.succs) {
      uint32_t cs = eng_.hooks_ ? eng_.hooks_->cross_edge(inst_.func, p.block, s, f, true) : f.cset;
      pass(Point{p.func, s, 0}, cs);
    }
    if (bi.returns) pass(Point{p.func, Point::kExit, 0}, f.cset);
    return;
  }
  const Statement& s = st[p.pos];
  if (s.is_call()) {
    call_fwd(id, s, p);
    return;
  }
  if (f.tainted && eng_.hooks_) {
    std::vector<Seed> spawn;
    eng_.hooks_->at_statement(s, p, f, spawn);
    for (const auto& sd : spawn)
      add_fact(sd.expr, sd.at, sd.dir, sd.tainted, sd.cls, sd.cset, static_cast<int32_t>(id), 0,
               f.guard);
  }
  StepResult r = step_forward(st, p, f.expr, eng_.caps().sse_depth);
  for (const auto& d : r.out) {
    auto g = d.guard ? d.guard : f.guard;
    add_fact(d.expr, Point{p.func, p.block, d.pos}, d.dir, f.tainted, f.cls, f.cset,
             static_cast<int32_t>(id), d.rule, g);
  }
  if (!r.killed) pass(Point{p.func, p.block, p.pos + 1}, f.cset);
}

void InstanceRunner::step_bwd(uint32_t id) {
  const Fact f = inst_.facts[id];
  const Point p = f.at;
  auto pass = [&](Point to, uint32_t cset) {
    add_fact(f.expr, to, Dir::Bwd, f.tainted, f.cls, cset, static_cast<int32_t>(id), 0, f.guard);
  };
  if (p.block == Point::kExit) {
    for (uint32_t b = 0; b < fn_.blocks.size(); ++b)
      if (eng_.block_info(inst_.func, b).returns)
        pass(Point{p.func, b, static_cast<uint32_t>(fn_.blocks[b].statements.size())}, f.cset);
    return;
  }
  if (p.pos == 0) {
    if (p.block == Point::kPrologue) return;
    if (p.block == 0)
      pass(Point{p.func, Point::kPrologue, static_cast<uint32_t>(eng_.prologue(inst_.func).size())},
           f.cset);
    for (uint32_t q : eng_.block_info(inst_.func, p.block).preds) {
      uint32_t cs = eng_.hooks_ ? eng_.hooks_->cross_edge(inst_.func, q, p.block, f, false) : f.cset;
      pass(Point{p.func, q, static_cast<uint32_t>(fn_.blocks[q].statements.size())}, cs);
    }
    return;
  }
  const auto& st = stmts(p);
  Point at{p.func, p.block, p.pos - 1};
  const Statement& s = st[at.pos];
  if (s.is_call()) {
    call_bwd(id, s, at);
    return;
  }
  StepResult r = step_backward(st, at, f.expr, eng_.caps().sse_depth);
  for (const auto& d : r.out) {
    auto g = d.guard ? d.guard : f.guard;
    add_fact(d.expr, Point{p.func, p.block, d.pos}, d.dir, f.tainted, f.cls, f.cset,
             static_cast<int32_t>(id), d.rule, g);
  }
  if (!r.killed) pass(at, f.cset);
}

InstanceRunner::CallView InstanceRunner::call_view(const Statement& s) const {
  CallView c;
  c.stmt = &s;
  if (auto* d = std::get_if<CallStmt>(&s.form)) {
    c.args = d->args;
    c.ret = d->ret;
    if (auto fi = prog_.function_index(d->target))
      c.targets.push_back(*fi);
    else
      c.external = true;
  } else if (auto* ic = std::get_if<ICallStmt>(&s.form)) {
    c.args = ic->args;
    c.ret = ic->ret;
    auto it = eng_.icall_targets().find(s.id);
    if (it != eng_.icall_targets().end()) c.targets = it->second;
  }
  return c;
}

bool InstanceRunner::mod_killed(const Sse& e, const CallView& c, Point at) const {
  if (!sse::has_memory(e) || sse::has_bitwise_address(e)) return false;
  for (uint32_t t : c.targets)
    for (const Sse& m : transfer_mod(eng_.summary(t), c.args, at)) {
      const Sse& addr = m->kids[0];
      if (sse::occurs(e, sse::load(addr)) || sse::occurs(e, sse::store(addr))) return true;
    }
  return false;
}

void InstanceRunner::call_fwd(uint32_t id, const Statement& s, Point at) {
  Fact f = inst_.facts[id];
  CallView c = call_view(s);
  Point next{at.func, at.block, at.pos + 1};
  bool tainted = f.tainted;
  if (f.cls && !f.tainted) {
    auto chain = eng_.interner().klass(f.cls).chain;
    if (!chain.empty() && chain.back() == s.id) tainted = true;
  }
  bool pass = !(c.ret && sse::occurs_reg(f.expr, *c.ret)) && !mod_killed(f.expr, c, at);
  if (pass)
    add_fact(f.expr, next, Dir::Fwd, tainted, f.cls, f.cset, static_cast<int32_t>(id), 0, f.guard);
  if (opts_.descend)
    for (uint32_t t : c.targets) descend(id, c, t, true, at, tainted);
  if (c.external && eng_.hooks_) {
    std::vector<Seed> spawn;
    eng_.hooks_->at_external_call(s, at, inst_.facts[id], true, spawn);
    for (const auto& sd : spawn)
      add_fact(sd.expr, sd.at, sd.dir, sd.tainted, sd.cls, sd.cset, static_cast<int32_t>(id), 0,
               std::nullopt);
  }
}

void InstanceRunner::call_bwd(uint32_t id, const Statement& s, Point at) {
  Fact f = inst_.facts[id];
  CallView c = call_view(s);
  bool tainted = f.tainted;
  if (f.cls && f.tainted) {
    auto chain = eng_.interner().klass(f.cls).chain;
    if (!chain.empty() && chain.back() == s.id) tainted = false;
  }
  bool has_rd = c.ret && sse::occurs_reg(f.expr, *c.ret);
  bool pass = !has_rd && !mod_killed(f.expr, c, at);
  int32_t passed = -1;
  if (pass)
    passed = add_fact(f.expr, at, Dir::Bwd, tainted, f.cls, f.cset, static_cast<int32_t>(id), 0,
                      f.guard);
  if (opts_.descend)
    for (uint32_t t : c.targets) descend(id, c, t, false, at, tainted);
  if (c.external && eng_.hooks_ && passed >= 0) {
    std::vector<Seed> spawn;
    eng_.hooks_->at_external_call(s, at, inst_.facts[static_cast<uint32_t>(passed)], false, spawn);
    for (const auto& sd : spawn)
      add_fact(sd.expr, sd.at, sd.dir, sd.tainted, sd.cls, sd.cset, static_cast<int32_t>(id), 0,
               std::nullopt);
  }
}

void InstanceRunner::descend(uint32_t id, const CallView& c, uint32_t callee, bool forward,
                             Point at, bool tainted) {
  const Fact f = inst_.facts[id];
  const Function& cf = prog_.functions[callee];
  bool uses_arg = false, uses_gp = false;
  auto map = [&](Reg r) -> std::optional<Sse> {
    if (!forward && c.ret && r == *c.ret) {
      uses_arg = true;
      return sse::reg(Reg::rv());
    }
    if (r.is_gp()) {
      uses_gp = true;
      return sse::reg(r);
    }
    for (uint32_t i = 0; i < c.args.size() && i < cf.num_params; ++i)
      if (c.args[i].is_reg() && c.args[i].as_reg() == r) {
        uses_arg = true;
        return sse::reg(Reg::param(i));
      }
    return std::nullopt;
  };
  Point site = forward ? Point{callee, Point::kPrologue, 0} : Point{callee, Point::kExit, 0};
  auto texpr = substitute(f.expr, map, site);
  if (!texpr) return;
  if (!uses_arg) {
    // global-only items matter only to callees touching globals
    if (!eng_.summary(callee).has_gp) return;
  }
  (void)uses_gp;
  DescentKey key{callee, forward, *texpr, tainted, f.cls, f.cset,
                 eng_.hooks_ ? eng_.hooks_->version(f.cls) : 0};
  auto child = descent(eng_, key, opts_);
  if (!child) return;
  if (child->provisional) inst_.provisional = true;
  inst_.children.push_back(child);
  import_exports(*child, c, at, id);
}

void InstanceRunner::import_exports(const Instance& child, const CallView& c, Point at,
                                    uint32_t parent) {
  Point next{at.func, at.block, at.pos + 1};
  const Function& cf = prog_.functions[child.func];
  auto mapper = [&](bool allow_rv) {
    return [&, allow_rv](Reg r) -> std::optional<Sse> {
      if (r.is_param()) {
        uint32_t i = r.param_index();
        if (i >= c.args.size() || i >= cf.num_params) return std::nullopt;
        if (allow_rv && c.ret && c.args[i].is_reg() && c.args[i].as_reg() == *c.ret)
          return std::nullopt;
        return operand_expr(c.args[i]);
      }
      if (r.is_rv()) {
        if (!allow_rv || !c.ret) return std::nullopt;
        return sse::reg(*c.ret);
      }
      if (r.is_gp()) return sse::reg(r);
      return std::nullopt;
    };
  };
  for (const auto& ex : child.exit_exports)
    if (auto e = substitute(ex.expr, mapper(true), next))
      add_fact(*e, next, Dir::Fwd, ex.tainted, ex.cls, ex.cset, static_cast<int32_t>(parent), 0,
               std::nullopt);
  for (const auto& ex : child.entry_exports)
    if (auto e = substitute(ex.expr, mapper(false), at))
      add_fact(*e, at, Dir::Bwd, ex.tainted, ex.cls, ex.cset, static_cast<int32_t>(parent), 0,
               std::nullopt);
}

std::shared_ptr<Instance> InstanceRunner::finish() {
  auto out = std::make_shared<Instance>(std::move(inst_));
  auto add = [](std::vector<Export>& v, const Fact& f) {
    for (const auto& x : v)
      if (x.tainted == f.tainted && x.cls == f.cls && x.cset == f.cset && sse::equal(x.expr, f.expr))
        return;
    v.push_back({f.expr, f.tainted, f.cls, f.cset});
  };
  for (const auto& f : out->facts) {
    if (f.at.block == Point::kPrologue && f.at.pos == 0 && f.bwd && sse::is_rooted(f.expr, false))
      add(out->entry_exports, f);
    if (f.at.block == Point::kExit && f.fwd && sse::is_rooted(f.expr, true))
      add(out->exit_exports, f);
  }
  return out;
}

}  // namespace symalias
