#include <algorithm>
#include <cstdlib>
#include <sstream>

#include "symalias/alias.hpp"

namespace symalias {

Sse address_expr(const Address& a) {
  return sse::add(sse::reg(a.base), sse::val(static_cast<Word>(a.disp)));
}

Sse operand_expr(const Operand& o) {
  return o.is_reg() ? sse::reg(o.as_reg()) : sse::val(o.as_imm());
}

namespace {

const Reg kPlaceholder = Reg(Reg::kScratchBase + 0xFFE);

bool before_or_other(const Point& site, const Point& at, uint32_t k) {
  return !site.same_block(at) || site.pos <= k;
}

bool after_or_other(const Point& site, const Point& at, uint32_t k) {
  return !site.same_block(at) || site.pos > k;
}

// Memory nodes of `kind` in e whose address equals addr.
void collect_mem(const Sse& e, NodeKind kind, const Sse& addr, std::vector<const Node*>& out) {
  if (e->kind == kind && sse::equal(e->kids[0], addr)) out.push_back(e.get());
  for (const auto& k : e->kids) collect_mem(k, kind, addr, out);
}

// Replaces pattern by `dst`, refusing when the old value of dst would remain.
std::optional<Sse> replace_by_reg(const Sse& e, const Sse& pattern, Reg dst, uint32_t cap) {
  auto r = sse::replace(e, pattern, sse::reg(kPlaceholder), cap);
  if (!r || sse::occurs_reg(*r, dst)) return std::nullopt;
  return sse::replace(*r, sse::reg(kPlaceholder), sse::reg(dst), cap);
}

std::vector<Sse> sum_terms(const Sse& e, Word& constant) {
  constant = 0;
  if (e->kind == NodeKind::Val) {
    constant = e->val;
    return {};
  }
  if (e->kind != NodeKind::Sum) return {e};
  std::vector<Sse> t(e->kids.begin(), e->kids.end());
  if (t.back()->kind == NodeKind::Val) {
    constant = t.back()->val;
    t.pop_back();
  }
  return t;
}

// Rule 2 matching: exact subtree, or for additive patterns a subset of the
// terms at some offset position.
std::optional<Sse> match_operation(const Sse& e, const Sse& pattern, Reg dst, uint32_t cap) {
  if (pattern->kind == NodeKind::Val) {
    if (sse::equal(e, pattern)) return sse::reg(dst);
    return std::nullopt;
  }
  bool additive = pattern->kind == NodeKind::Sum || pattern->kind == NodeKind::Reg ||
                  (pattern->kind == NodeKind::Unop && pattern->uop == UnOpKind::Neg);
  if (!additive) {
    if (!sse::occurs(e, pattern)) return std::nullopt;
    return replace_by_reg(e, pattern, dst, cap);
  }
  Word c = 0;
  auto pterms = sum_terms(pattern, c);
  bool dst_in_pattern = sse::occurs_reg(pattern, dst);
  Sse cur = e;
  bool any = false;
  size_t n = sse::num_offset_positions(cur);
  for (size_t j = 0; j < n; ++j) {
    Sse sub = sse::offset_positions(cur)[j];
    Word d = 0;
    auto terms = sum_terms(sub, d);
    std::vector<bool> used(terms.size(), false);
    bool subset = true;
    for (const auto& p : pterms) {
      bool found = false;
      for (size_t i = 0; i < terms.size(); ++i)
        if (!used[i] && sse::equal(terms[i], p)) {
          used[i] = found = true;
          break;
        }
      if (!found) {
        subset = false;
        break;
      }
    }
    if (!subset) continue;
    if (c != d && !dst_in_pattern && d == 0) continue;
    std::vector<Sse> rest;
    for (size_t i = 0; i < terms.size(); ++i)
      if (!used[i]) rest.push_back(terms[i]);
    rest.push_back(sse::reg(kPlaceholder));
    rest.push_back(sse::val(d - c));
    cur = sse::replace_position(cur, j, sse::sum(std::move(rest)));
    any = true;
  }
  if (!any) {
    // the pattern may still sit inside a non-additive context, e.g. (R1+0x4)*R2
    if (!sse::occurs(e, pattern)) return std::nullopt;
    return replace_by_reg(e, pattern, dst, cap);
  }
  if (cur->mem_depth > cap || sse::occurs_reg(cur, dst)) return std::nullopt;
  return sse::replace(cur, sse::reg(kPlaceholder), sse::reg(dst), cap);
}

// Move-like replacement (rules 1, 3, 4): an immediate source matches only the
// whole expression.
std::optional<Sse> match_move(const Sse& e, const Operand& src, Reg dst, uint32_t cap) {
  if (src.is_imm()) {
    if (e->kind == NodeKind::Val && e->val == src.as_imm()) return sse::reg(dst);
    return std::nullopt;
  }
  if (src.as_reg() == dst || !sse::occurs_reg(e, src.as_reg())) return std::nullopt;
  return replace_by_reg(e, sse::reg(src.as_reg()), dst, cap);
}

std::optional<Sse> match_load(const std::vector<Statement>& block, Point at, const Sse& e,
                              const Sse& addr, Reg dst, uint32_t cap, NodeKind kind) {
  std::vector<const Node*> nodes;
  collect_mem(e, kind, addr, nodes);
  if (nodes.empty()) return std::nullopt;
  for (const Node* n : nodes) {
    if (kind == NodeKind::Store && !before_or_other(n->site, at, at.pos)) return std::nullopt;
    if (!mem_stable(block, at, addr, n->site)) return std::nullopt;
  }
  Sse pattern = kind == NodeKind::Load ? sse::load(addr) : sse::store(addr);
  return replace_by_reg(e, pattern, dst, cap);
}

// Rule 15 condition: a memory node at `addr` observing memory before stmt k.
bool overwritten(const Sse& e, const Sse& addr, Point at) {
  std::vector<const Node*> nodes;
  collect_mem(e, NodeKind::Load, addr, nodes);
  collect_mem(e, NodeKind::Store, addr, nodes);
  for (const Node* n : nodes)
    if (before_or_other(n->site, at, at.pos)) return true;
  return false;
}

}  // namespace

bool mem_stable(const std::vector<Statement>& block, Point at, const Sse& addr, const Point& site) {
  if (!site.same_block(at)) return true;
  uint32_t lo = std::min(site.pos, at.pos), hi = std::max(site.pos, at.pos);
  for (uint32_t i = lo; i < hi && i < block.size(); ++i)
    if (auto* st = std::get_if<StoreStmt>(&block[i].form))
      if (sse::equal(address_expr(st->addr), addr)) return false;
  return true;
}

StepResult step_forward(const std::vector<Statement>& block, Point at, const Sse& e,
                        uint32_t cap) {
  StepResult r;
  const Statement& s = block.at(at.pos);
  const uint32_t next = at.pos + 1;
  auto emit = [&](std::optional<Sse> x, int rule, Dir dir, std::optional<Guard> g = {}) {
    if (x) r.out.push_back({*x, next, rule, dir, g});
  };
  std::optional<Reg> dst;
  std::visit(
      [&](const auto& st) {
        using T = std::decay_t<decltype(st)>;
        if constexpr (std::is_same_v<T, MoveStmt>) {
          dst = st.dst;
          emit(match_move(e, st.src, st.dst, cap), 1, Dir::Fwd);
        } else if constexpr (std::is_same_v<T, BinOpStmt>) {
          dst = st.dst;
          Sse p = sse::binop(st.op, operand_expr(st.lhs), operand_expr(st.rhs));
          emit(match_operation(e, p, st.dst, cap), 2, Dir::Fwd);
        } else if constexpr (std::is_same_v<T, UnOpStmt>) {
          dst = st.dst;
          Sse p = sse::unop(st.op, operand_expr(st.src));
          emit(match_operation(e, p, st.dst, cap), 2, Dir::Fwd);
        } else if constexpr (std::is_same_v<T, IteStmt>) {
          dst = st.dst;
          if (st.cond == st.dst) return;  // the guard would name the overwritten value
          emit(match_move(e, st.then_v, st.dst, cap), 3, Dir::Fwd, Guard{at, st.cond, true});
          emit(match_move(e, st.else_v, st.dst, cap), 4, Dir::Fwd, Guard{at, st.cond, false});
        } else if constexpr (std::is_same_v<T, LoadStmt>) {
          dst = st.dst;
          Sse a = address_expr(st.addr);
          if (sse::has_bitwise_address(e)) return;
          auto x = match_load(block, at, e, a, st.dst, cap, NodeKind::Load);
          if (x) {
            emit(x, 5, Dir::Fwd);
          } else {
            emit(match_load(block, at, e, a, st.dst, cap, NodeKind::Store), 7, Dir::Fwd);
          }
        } else if constexpr (std::is_same_v<T, StoreStmt>) {
          Sse a = address_expr(st.addr);
          if (st.src.is_reg() && sse::occurs_reg(e, st.src.as_reg())) {
            auto x = sse::replace(e, sse::reg(st.src.as_reg()), sse::store(a, Point{at.func, at.block, next}),
                                  cap);
            if (x && !overwritten(*x, a, at)) emit(x, 6, Dir::Both);
          }
          if (!sse::has_bitwise_address(e) && overwritten(e, a, at)) {
            r.killed = true;
            r.kill_rule = 15;
          }
        } else if constexpr (std::is_same_v<T, RetStmt>) {
          if (st.value) {
            dst = Reg::rv();
            emit(match_move(e, *st.value, Reg::rv(), cap), 1, Dir::Fwd);
          }
        }
      },
      s.form);
  if (dst && sse::occurs_reg(e, *dst)) {
    r.killed = true;
    r.kill_rule = 14;
  }
  return r;
}

StepResult step_backward(const std::vector<Statement>& block, Point at, const Sse& e,
                         uint32_t cap) {
  StepResult r;
  const Statement& s = block.at(at.pos);
  const uint32_t here = at.pos, after = at.pos + 1;
  std::optional<Reg> dst = s.defined_register();
  if (auto* rs = std::get_if<RetStmt>(&s.form); rs && rs->value) dst = Reg::rv();
  if (s.is_call()) return r;

  // definition match: the new expression replaces the old one at point k
  if (dst && sse::occurs_reg(e, *dst)) {
    r.killed = true;
    auto def = [&](const Sse& repl, int rule, std::optional<Guard> g = {}) {
      auto x = sse::replace(e, sse::reg(*dst), repl, cap);
      if (x) r.out.push_back({*x, here, rule, Dir::Both, g});
      r.kill_rule = rule;
    };
    std::visit(
        [&](const auto& st) {
          using T = std::decay_t<decltype(st)>;
          if constexpr (std::is_same_v<T, MoveStmt>) {
            def(operand_expr(st.src), 8);
          } else if constexpr (std::is_same_v<T, BinOpStmt>) {
            def(sse::binop(st.op, operand_expr(st.lhs), operand_expr(st.rhs)), 9);
          } else if constexpr (std::is_same_v<T, UnOpStmt>) {
            def(sse::unop(st.op, operand_expr(st.src)), 9);
          } else if constexpr (std::is_same_v<T, IteStmt>) {
            def(operand_expr(st.then_v), 10, Guard{at, st.cond, true});
            def(operand_expr(st.else_v), 11, Guard{at, st.cond, false});
            r.kill_rule = 10;
          } else if constexpr (std::is_same_v<T, LoadStmt>) {
            def(sse::load(address_expr(st.addr), at), 12);
          } else if constexpr (std::is_same_v<T, RetStmt>) {
            def(operand_expr(*st.value), 8);
          }
        },
        s.form);
    return r;
  }

  // rule 13: a later load of the stored cell reads the stored value
  if (auto* st = std::get_if<StoreStmt>(&s.form); st && !sse::has_bitwise_address(e)) {
    Sse a = address_expr(st->addr);
    std::vector<const Node*> nodes;
    collect_mem(e, NodeKind::Load, a, nodes);
    bool ok = !nodes.empty();
    Point from{at.func, at.block, after};
    for (const Node* n : nodes)
      ok = ok && after_or_other(n->site, at, here) && mem_stable(block, from, a, n->site);
    if (ok) {
      if (auto x = sse::replace(e, sse::load(a), operand_expr(st->src), cap)) {
        r.out.push_back({*x, here, 13, Dir::Both, {}});
        r.killed = true;
        r.kill_rule = 13;
        return r;
      }
    }
  }

  // use matches at point k+1, forward only (rule 6 both ways)
  std::visit(
      [&](const auto& st) {
        using T = std::decay_t<decltype(st)>;
        auto emit = [&](std::optional<Sse> x, int rule, Dir dir, std::optional<Guard> g = {}) {
          if (x) r.out.push_back({*x, after, rule, dir, g});
        };
        if constexpr (std::is_same_v<T, MoveStmt>) {
          emit(match_move(e, st.src, st.dst, cap), 1, Dir::Fwd);
        } else if constexpr (std::is_same_v<T, BinOpStmt>) {
          Sse p = sse::binop(st.op, operand_expr(st.lhs), operand_expr(st.rhs));
          if (!sse::occurs_reg(p, st.dst)) emit(match_operation(e, p, st.dst, cap), 2, Dir::Fwd);
        } else if constexpr (std::is_same_v<T, UnOpStmt>) {
          Sse p = sse::unop(st.op, operand_expr(st.src));
          if (!sse::occurs_reg(p, st.dst)) emit(match_operation(e, p, st.dst, cap), 2, Dir::Fwd);
        } else if constexpr (std::is_same_v<T, IteStmt>) {
          if (st.cond == st.dst) return;
          auto arm = [&](const Operand& o) {
            return o.is_reg() && o.as_reg() == st.dst ? std::nullopt
                                                      : match_move(e, o, st.dst, cap);
          };
          emit(arm(st.then_v), 3, Dir::Fwd, Guard{at, st.cond, true});
          emit(arm(st.else_v), 4, Dir::Fwd, Guard{at, st.cond, false});
        } else if constexpr (std::is_same_v<T, LoadStmt>) {
          Sse a = address_expr(st.addr);
          if (!sse::occurs_reg(a, st.dst) && !sse::has_bitwise_address(e))
            emit(match_load(block, at, e, a, st.dst, cap, NodeKind::Load), 5, Dir::Fwd);
        } else if constexpr (std::is_same_v<T, StoreStmt>) {
          if (st.src.is_reg() && sse::occurs_reg(e, st.src.as_reg())) {
            Sse a = address_expr(st.addr);
            emit(sse::replace(e, sse::reg(st.src.as_reg()), sse::store(a, Point{at.func, at.block, after}),
                              cap),
                 6, Dir::Both);
          }
        } else if constexpr (std::is_same_v<T, RetStmt>) {
          if (st.value && !(st.value->is_reg() && st.value->as_reg() == Reg::rv()))
            emit(match_move(e, *st.value, Reg::rv(), cap), 1, Dir::Fwd);
        }
      },
      s.form);
  return r;
}

// ---- caps

Caps Caps::parse(std::string_view text, Caps c) {
  std::string t(text);
  std::stringstream ss(t);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    auto eq = item.find('=');
    if (eq == std::string::npos) throw std::invalid_argument("cap '" + item + "' lacks '='");
    std::string k = item.substr(0, eq);
    char* end = nullptr;
    unsigned long v = std::strtoul(item.c_str() + eq + 1, &end, 10);
    if (*end != '\0' || v == 0) throw std::invalid_argument("cap '" + k + "' needs a positive integer");
    auto u = static_cast<uint32_t>(v);
    if (k == "sse_depth") c.sse_depth = u;
    else if (k == "alias_set") c.alias_set = u;
    else if (k == "loop_k") c.loop_k = u;
    else if (k == "block_iter") c.block_iter = u;
    else if (k == "recursion") c.recursion = u;
    else throw std::invalid_argument("unknown cap '" + k + "'");
  }
  return c;
}

Caps Caps::parse(std::string_view text) { return parse(text, Caps{}); }
Caps Caps::from_env() { return from_env(Caps{}); }

Caps Caps::from_env(Caps base) {
  const char* v = std::getenv("SYMALIAS_CAPS");
  return v ? parse(v, base) : base;
}

std::string Caps::to_string() const {
  return "sse_depth=" + std::to_string(sse_depth) + ",alias_set=" + std::to_string(alias_set) +
         ",loop_k=" + std::to_string(loop_k) + ",block_iter=" + std::to_string(block_iter) +
         ",recursion=" + std::to_string(recursion);
}

}  // namespace symalias
