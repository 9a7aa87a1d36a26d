#include <algorithm>
#include <sstream>

#include "engine_internal.hpp"

namespace symalias {

// ---- interner

uint32_t Interner::intern_class(const TaintClass& c) {
  std::lock_guard<std::mutex> g(mu_);
  auto it = class_ids_.find(c);
  if (it != class_ids_.end()) return it->second;
  auto id = static_cast<uint32_t>(classes_.size());
  classes_.push_back(c);
  class_ids_.emplace(c, id);
  return id;
}

TaintClass Interner::klass(uint32_t id) const {
  std::lock_guard<std::mutex> g(mu_);
  return classes_.at(id);
}

static std::string cset_key(const std::vector<Constraint>& cs) {
  std::ostringstream os;
  for (const auto& c : cs)
    os << static_cast<int>(c.rel) << ':' << sse::to_string(c.bound, sse::PrintMode::Full) << ':'
       << c.site.func << '.' << c.site.block << '.' << c.site.index << ':' << c.source_length << ';';
  return os.str();
}

uint32_t Interner::intern_cset(std::vector<Constraint> cs) {
  std::sort(cs.begin(), cs.end(), [](const Constraint& a, const Constraint& b) {
    if (a.site != b.site) return a.site < b.site;
    if (a.rel != b.rel) return a.rel < b.rel;
    if (a.source_length != b.source_length) return a.source_length < b.source_length;
    return sse::compare(a.bound, b.bound) < 0;
  });
  std::string k = cset_key(cs);
  std::lock_guard<std::mutex> g(mu_);
  auto it = cset_ids_.find(k);
  if (it != cset_ids_.end()) return it->second;
  if (cs.empty()) return 0;
  auto id = static_cast<uint32_t>(csets_.size());
  csets_.push_back(std::move(cs));
  cset_ids_.emplace(k, id);
  return id;
}

std::vector<Constraint> Interner::cset(uint32_t id) const {
  std::lock_guard<std::mutex> g(mu_);
  return csets_.at(id);
}

uint32_t Interner::cset_with(uint32_t base, const Constraint& c) {
  auto cs = cset(base);
  for (const auto& x : cs)
    if (x.site == c.site && x.rel == c.rel && x.source_length == c.source_length &&
        sse::equal(x.bound, c.bound))
      return base;
  cs.push_back(c);
  return intern_cset(std::move(cs));
}

// ---- instance queries

std::vector<uint32_t> Instance::facts_at(const Point& p) const {
  std::vector<uint32_t> out;
  for (uint32_t i = 0; i < facts.size(); ++i)
    if (facts[i].at == p) out.push_back(i);
  return out;
}

std::vector<int> Instance::rule_trace(uint32_t fact) const {
  std::vector<int> out;
  for (int32_t i = static_cast<int32_t>(fact); i >= 0; i = facts[static_cast<uint32_t>(i)].parent)
    if (int r = facts[static_cast<uint32_t>(i)].rule) out.push_back(r);
  std::reverse(out.begin(), out.end());
  return out;
}

std::vector<Guard> Instance::guards(uint32_t fact) const {
  std::vector<Guard> out;
  for (int32_t i = static_cast<int32_t>(fact); i >= 0; i = facts[static_cast<uint32_t>(i)].parent) {
    const auto& g = facts[static_cast<uint32_t>(i)].guard;
    if (g && std::find(out.begin(), out.end(), *g) == out.end()) out.push_back(*g);
  }
  return out;
}

std::vector<Sse> alias_set(const Instance& inst) {
  std::vector<Sse> out;
  for (const auto& f : inst.facts) {
    if (f.at.block == Point::kPrologue || f.at.block == Point::kExit) continue;
    auto regs = sse::registers(f.expr);
    if (std::any_of(regs.begin(), regs.end(), [](Reg r) { return r.is_param() || r.is_rv(); }))
      continue;
    if (std::none_of(out.begin(), out.end(), [&](const Sse& x) { return sse::equal(x, f.expr); }))
      out.push_back(f.expr);
  }
  std::sort(out.begin(), out.end(), sse::Less());
  return out;
}

std::vector<Sse> transfer_mod(const FunctionSummary& callee, const std::vector<Operand>& args,
                              Point callsite) {
  std::vector<Sse> out;
  for (const auto& m : callee.mod) {
    auto e = substitute(
        m,
        [&](Reg r) -> std::optional<Sse> {
          if (r.is_param()) {
            if (r.param_index() >= args.size()) return std::nullopt;
            return operand_expr(args[r.param_index()]);
          }
          if (r.is_gp()) return sse::reg(r);
          return std::nullopt;
        },
        callsite);
    if (e) out.push_back(*e);
  }
  return out;
}

// ---- engine

Engine::Engine(const Program& program, Caps caps, Hooks* hooks, Interner* interner)
    : impl_(std::make_unique<Impl>()), program_(program), caps_(caps), hooks_(hooks) {
  if (!interner) {
    own_interner_ = std::make_unique<Interner>();
    interner = own_interner_.get();
  }
  interner_ = interner;
  cfgs_ = build_all_cfgs(program);
  cg_ = build_call_graph(program);
  summaries_.resize(program.functions.size());
  compute_block_info();
  compute_modref();
}

Engine::~Engine() = default;

void Engine::compute_block_info() {
  blocks_.assign(program_.functions.size(), {});
  prologues_.assign(program_.functions.size(), {});
  for (uint32_t f = 0; f < program_.functions.size(); ++f) {
    const Function& fn = program_.functions[f];
    const Cfg& cfg = cfgs_[f];
    auto& bi = blocks_[f];
    bi.resize(fn.blocks.size());
    std::vector<uint32_t> last(fn.blocks.size(), kNoBlock);
    for (uint32_t i = 0; i < cfg.blocks.size(); ++i) {
      const auto& cb = cfg.blocks[i];
      if (cb.orig_block == kNoBlock) continue;
      last[cb.orig_block] = i;
      if (cb.in_loop && !bi[cb.orig_block].in_loop) {
        bi[cb.orig_block].in_loop = true;
        bi[cb.orig_block].loop_header = cfg.blocks[cb.loop_header].orig_block;
      }
    }
    for (uint32_t b = 0; b < fn.blocks.size(); ++b) {
      const auto& cb = cfg.blocks[last[b]];
      if (last[b] == cfg.exit) bi[b].returns = true;
      for (uint32_t s : cb.succs) {
        uint32_t ob = cfg.blocks[s].orig_block;
        if (ob == kNoBlock) {
          bi[b].returns = true;
        } else if (std::find(bi[b].succs.begin(), bi[b].succs.end(), ob) == bi[b].succs.end()) {
          bi[b].succs.push_back(ob);
          bi[ob].preds.push_back(b);
        }
      }
    }
    for (uint32_t i = 0; i < fn.num_params; ++i) {
      Statement s;
      s.id = StmtId{f, Point::kPrologue, i};
      s.form = MoveStmt{Reg::r(i), Operand::reg(Reg::param(i))};
      prologues_[f].push_back(s);
    }
  }
}

void Engine::set_icall_targets(const std::map<StmtId, std::vector<uint32_t>>& targets) {
  icall_targets_ = targets;
  cg_ = build_call_graph(program_);
  for (const auto& [site, ts] : targets)
    for (uint32_t t : ts) {
      CallEdge e{site.func, t, site, true};
      if (std::find(cg_.edges.begin(), cg_.edges.end(), e) == cg_.edges.end())
        cg_.edges.push_back(e);
    }
  clear_cache();
  compute_modref();
  clear_cache();
}

void Engine::clear_cache() {
  std::lock_guard<std::mutex> g(impl_->mu);
  impl_->cache.clear();
}

std::vector<uint32_t> Engine::visited_functions() const {
  std::lock_guard<std::mutex> g(impl_->mu);
  return {impl_->visited.begin(), impl_->visited.end()};
}

namespace {

struct Frame {
  DescentKey key;
  bool hit = false;
  bool depends = false;
};
thread_local std::vector<Frame> t_stack;
thread_local std::vector<std::pair<DescentKey, std::shared_ptr<const Instance>>> t_provisional;

}  // namespace

std::shared_ptr<const Instance> InstanceRunner::descent(Engine& eng, const DescentKey& key,
                                                        QueryOptions opts) {
  Engine::Impl& im = impl(eng);
  {
    std::lock_guard<std::mutex> g(im.mu);
    auto it = im.cache.find(key);
    if (it != im.cache.end()) return it->second;
  }
  for (size_t i = 0; i < t_stack.size(); ++i)
    if (t_stack[i].key == key) {
      t_stack[i].hit = true;
      for (size_t j = i + 1; j < t_stack.size(); ++j) t_stack[j].depends = true;
      for (const auto& [k, v] : t_provisional)
        if (k == key) return v;
      auto empty = std::make_shared<Instance>();
      empty->func = key.callee;
      empty->provisional = true;
      return empty;
    }
  if (t_stack.size() >= eng.caps().recursion) {
    for (auto& fr : t_stack) fr.depends = true;
    auto empty = std::make_shared<Instance>();
    empty->func = key.callee;
    empty->cap_hit = true;
    empty->provisional = true;
    return empty;
  }
  auto compute = [&]() {
    InstanceRunner r(eng, key.callee, opts,
                     std::string(key.forward ? "down-fwd:" : "down-bwd:") +
                         sse::to_string(key.expr));
    Seed s;
    s.at = key.forward ? Point{key.callee, Point::kPrologue, 0} : Point{key.callee, Point::kExit, 0};
    s.expr = key.expr;
    s.dir = key.forward ? Dir::Fwd : Dir::Bwd;
    s.tainted = key.tainted;
    s.cls = key.cls;
    s.cset = key.cset;
    r.add_seed(s);
    r.run();
    return std::shared_ptr<const Instance>(r.finish());
  };
  t_stack.push_back({key});
  size_t me = t_stack.size() - 1;
  auto result = compute();
  if (t_stack[me].hit) {
    // one re-analysis with the first round as the recursive summary
    t_provisional.push_back({key, result});
    t_stack[me].hit = false;
    result = compute();
    t_provisional.pop_back();
  }
  bool depends = t_stack[me].depends;
  t_stack.pop_back();
  if (!depends) {
    auto fixed = std::make_shared<Instance>(*result);
    fixed->provisional = false;
    result = fixed;
    std::lock_guard<std::mutex> g(im.mu);
    result = im.cache.emplace(key, result).first->second;
  }
  return result;
}

QueryResult Engine::query(const std::vector<Seed>& seeds, QueryOptions opts) {
  QueryResult out;
  std::map<uint32_t, std::vector<Seed>> by_func;
  for (const auto& s : seeds) by_func[s.at.func].push_back(s);
  struct Pending {
    std::shared_ptr<const Instance> inst;
    uint32_t depth;
  };
  std::vector<Pending> work;
  for (auto& [f, ss] : by_func) {
    InstanceRunner r(*this, f, opts, "root");
    for (const auto& s : ss) r.add_seed(s);
    r.run();
    auto inst = r.finish();
    out.roots.push_back(inst);
    work.push_back({inst, 0});
  }
  std::set<std::pair<uint32_t, StmtId>> seen;
  for (size_t w = 0; opts.upward && w < work.size(); ++w) {
    auto [inst, depth] = work[w];
    if (depth >= caps_.recursion) {
      if (!inst->entry_exports.empty() || !inst->exit_exports.empty()) out.cap_hit = true;
      continue;
    }
    if (inst->entry_exports.empty() && inst->exit_exports.empty()) continue;
    for (const CallEdge* e : cg_.callers(inst->func)) {
      if (!seen.insert({inst->func, e->site}).second) continue;
      const Statement& s = program_.statement(e->site);
      std::vector<Operand> args;
      std::optional<Reg> ret;
      if (auto* c = std::get_if<CallStmt>(&s.form)) {
        args = c->args;
        ret = c->ret;
      } else if (auto* ic = std::get_if<ICallStmt>(&s.form)) {
        args = ic->args;
        ret = ic->ret;
      }
      const Function& callee = program_.functions[inst->func];
      Point at{e->caller, e->site.block, e->site.index};
      Point next{at.func, at.block, at.pos + 1};
      auto mapper = [&](bool after) {
        return [&, after](Reg r) -> std::optional<Sse> {
          if (r.is_param()) {
            uint32_t i = r.param_index();
            if (i >= args.size() || i >= callee.num_params) return std::nullopt;
            if (after && ret && args[i].is_reg() && args[i].as_reg() == *ret) return std::nullopt;
            return operand_expr(args[i]);
          }
          if (r.is_rv()) {
            if (!after || !ret) return std::nullopt;
            return sse::reg(*ret);
          }
          if (r.is_gp()) return sse::reg(r);
          return std::nullopt;
        };
      };
      InstanceRunner r(*this, e->caller, opts, "up:" + program_.describe(e->site));
      bool any = false;
      for (const auto& ex : inst->entry_exports)
        if (auto x = substitute(ex.expr, mapper(false), at)) {
          r.add_seed(Seed{at, *x, Dir::Bwd, ex.tainted, ex.cls, ex.cset});
          any = true;
        }
      for (const auto& ex : inst->exit_exports)
        if (auto x = substitute(ex.expr, mapper(true), next)) {
          r.add_seed(Seed{next, *x, Dir::Fwd, ex.tainted, ex.cls, ex.cset});
          any = true;
        }
      if (!any) continue;
      r.run();
      auto up = r.finish();
      out.roots.push_back(up);
      work.push_back({up, depth + 1});
    }
  }
  std::vector<std::shared_ptr<const Instance>> stack(out.roots.begin(), out.roots.end());
  std::set<const Instance*> have;
  while (!stack.empty()) {
    auto i = stack.back();
    stack.pop_back();
    if (!have.insert(i.get()).second) continue;
    out.all.push_back(i);
    if (i->cap_hit) out.cap_hit = true;
    for (const auto& c : i->children) stack.push_back(c);
  }
  std::sort(out.all.begin(), out.all.end(),
            [](const auto& a, const auto& b) { return a->id < b->id; });
  if (out.cap_hit) out.warnings.push_back("analysis cap reached; results are partial");
  return out;
}

}  // namespace symalias
