#include <algorithm>

#include "engine_internal.hpp"

namespace symalias {

namespace {

void add_unique(std::vector<Sse>& v, const Sse& e) {
  if (std::none_of(v.begin(), v.end(), [&](const Sse& x) { return sse::equal(x, e); }))
    v.push_back(e);
}

bool global_only(const Sse& e) {
  for (Reg r : sse::registers(e))
    if (!r.is_gp()) return false;
  return true;
}

bool same(std::vector<Sse> a, std::vector<Sse> b) {
  if (a.size() != b.size()) return false;
  std::sort(a.begin(), a.end(), sse::Less());
  std::sort(b.begin(), b.end(), sse::Less());
  for (size_t i = 0; i < a.size(); ++i)
    if (!sse::equal(a[i], b[i])) return false;
  return true;
}

}  // namespace

// MOD/REF: addresses written/read by a function (directly or through its
// callees), traced back to the function entry and kept when rooted in the
// parameters or gp.
void Engine::compute_modref() {
  const size_t n = program_.functions.size();
  summaries_.assign(n, {});
  QueryOptions local{false, false};
  for (size_t round = 0; round < n + 2; ++round) {
    bool changed = false;
    for (uint32_t f = 0; f < n; ++f) {
      const Function& fn = program_.functions[f];
      Point entry{f, Point::kPrologue, 0};
      std::vector<Seed> stores, loads;
      FunctionSummary next;
      auto seed = [&](std::vector<Seed>& v, Point at, const Sse& addr) {
        v.push_back(Seed{at, addr, Dir::Bwd, false, 0, 0});
      };
      for (uint32_t b = 0; b < fn.blocks.size(); ++b) {
        const auto& st = fn.blocks[b].statements;
        for (uint32_t k = 0; k < st.size(); ++k) {
          Point at{f, b, k};
          const Statement& s = st[k];
          if (auto* x = std::get_if<StoreStmt>(&s.form)) {
            seed(stores, at, address_expr(x->addr));
          } else if (auto* l = std::get_if<LoadStmt>(&s.form)) {
            seed(loads, at, address_expr(l->addr));
          } else if (s.is_call()) {
            std::vector<Operand> args;
            std::vector<uint32_t> targets;
            if (auto* c = std::get_if<CallStmt>(&s.form)) {
              args = c->args;
              if (auto t = program_.function_index(c->target)) targets.push_back(*t);
            } else if (auto* ic = std::get_if<ICallStmt>(&s.form)) {
              args = ic->args;
              auto it = icall_targets_.find(s.id);
              if (it != icall_targets_.end()) targets = it->second;
            }
            for (uint32_t t : targets) {
              FunctionSummary callee = summaries_[t];
              for (const Sse& m : transfer_mod(callee, args, at)) {
                if (global_only(m))
                  add_unique(next.mod, sse::store(m->kids[0], entry));
                else
                  seed(stores, at, m->kids[0]);
              }
              FunctionSummary refs;
              refs.mod = callee.ref;
              for (const Sse& m : transfer_mod(refs, args, at)) {
                if (global_only(m))
                  add_unique(next.ref, sse::load(m->kids[0], entry));
                else
                  seed(loads, at, m->kids[0]);
              }
            }
          }
        }
      }
      auto trace = [&](const std::vector<Seed>& seeds, std::vector<Sse>& into, bool is_store) {
        if (seeds.empty()) return;
        InstanceRunner r(*this, f, local, "modref");
        for (const auto& s : seeds) r.add_seed(s);
        r.run();
        auto inst = r.finish();
        for (const auto& ex : inst->entry_exports)
          add_unique(into, is_store ? sse::store(ex.expr, entry) : sse::load(ex.expr, entry));
      };
      trace(stores, next.mod, true);
      trace(loads, next.ref, false);
      for (const auto& v : {next.mod, next.ref})
        for (const auto& e : v)
          if (global_only(e)) next.has_gp = true;
      if (!same(next.mod, summaries_[f].mod) || !same(next.ref, summaries_[f].ref)) changed = true;
      summaries_[f] = std::move(next);
    }
    if (!changed) break;
  }
  std::lock_guard<std::mutex> g(impl_->mu);
  impl_->visited.clear();
}

}  // namespace symalias
