#include "symalias/sse.hpp"

#include <algorithm>
#include <functional>

namespace symalias {

namespace {

size_t mix(size_t h, size_t v) { return h ^ (v + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2)); }

size_t compute_hash(const Node& n) {
  size_t h = static_cast<size_t>(n.kind) * 1315423911u;
  switch (n.kind) {
    case NodeKind::Reg: h = mix(h, n.reg.id()); break;
    case NodeKind::Val: h = mix(h, std::hash<Word>()(n.val)); break;
    case NodeKind::Binop: h = mix(h, static_cast<size_t>(n.bop)); break;
    case NodeKind::Unop: h = mix(h, static_cast<size_t>(n.uop)); break;
    case NodeKind::Index:
      h = mix(h, n.stride);
      h = mix(h, n.index_id.func * 31u + n.index_id.block * 7u + n.index_id.pos);
      break;
    default: break;
  }
  for (const auto& k : n.kids) h = mix(h, k->hash);
  return h;
}

Sse finish(Node n) {
  n.hash = compute_hash(n);
  uint32_t d = 0;
  for (const auto& k : n.kids) d = std::max(d, k->mem_depth);
  if (n.kind == NodeKind::Load || n.kind == NodeKind::Store) ++d;
  n.mem_depth = d;
  return std::make_shared<const Node>(std::move(n));
}

int rank(const Sse& e) {
  if (e->kind == NodeKind::Reg) return 0;
  if (e->kind == NodeKind::Val) return 2;
  return 1;
}

const Reg kHole = Reg(Reg::kScratchBase + 0xFFF);

}  // namespace

namespace sse {

int compare(const Sse& a, const Sse& b) {
  if (a == b) return 0;
  int ra = rank(a), rb = rank(b);
  if (ra != rb) return ra < rb ? -1 : 1;
  if (a->kind != b->kind) return a->kind < b->kind ? -1 : 1;
  switch (a->kind) {
    case NodeKind::Reg:
      if (a->reg != b->reg) return a->reg < b->reg ? -1 : 1;
      return 0;
    case NodeKind::Val:
      if (a->val != b->val) return a->val < b->val ? -1 : 1;
      return 0;
    case NodeKind::Binop:
      if (a->bop != b->bop) return a->bop < b->bop ? -1 : 1;
      break;
    case NodeKind::Unop:
      if (a->uop != b->uop) return a->uop < b->uop ? -1 : 1;
      break;
    case NodeKind::Index:
      if (a->stride != b->stride) return a->stride < b->stride ? -1 : 1;
      if (a->index_id != b->index_id) return a->index_id < b->index_id ? -1 : 1;
      break;
    default: break;
  }
  if (a->kids.size() != b->kids.size()) return a->kids.size() < b->kids.size() ? -1 : 1;
  for (size_t i = 0; i < a->kids.size(); ++i)
    if (int c = compare(a->kids[i], b->kids[i])) return c;
  return 0;
}

bool equal(const Sse& a, const Sse& b) {
  if (a == b) return true;
  if (a->hash != b->hash) return false;
  return compare(a, b) == 0;
}

// Equal including memory sites: the same value, not just the same shape.
static bool identical(const Sse& a, const Sse& b) {
  if (a == b) return true;
  if (!equal(a, b)) return false;
  std::function<bool(const Sse&, const Sse&)> sites = [&](const Sse& x, const Sse& y) {
    if ((x->kind == NodeKind::Load || x->kind == NodeKind::Store) && x->site != y->site) return false;
    for (size_t i = 0; i < x->kids.size(); ++i)
      if (!sites(x->kids[i], y->kids[i])) return false;
    return true;
  };
  return sites(a, b);
}

Sse reg(Reg r) {
  Node n;
  n.kind = NodeKind::Reg;
  n.reg = r;
  return finish(std::move(n));
}

Sse val(Word v) {
  Node n;
  n.kind = NodeKind::Val;
  n.val = v;
  return finish(std::move(n));
}

static bool is_val(const Sse& e, Word v) { return e->kind == NodeKind::Val && e->val == v; }

Sse sum(std::vector<Sse> terms) {
  std::vector<Sse> flat;
  Word c = 0;
  std::function<void(const Sse&)> take = [&](const Sse& t) {
    if (t->kind == NodeKind::Sum) {
      for (const auto& k : t->kids) take(k);
    } else if (t->kind == NodeKind::Val) {
      c += t->val;
    } else {
      flat.push_back(t);
    }
  };
  for (const auto& t : terms) take(t);
  // x + (-x) cancels
  for (size_t i = 0; i < flat.size(); ++i) {
    if (!flat[i] || flat[i]->kind != NodeKind::Unop || flat[i]->uop != UnOpKind::Neg) continue;
    for (size_t j = 0; j < flat.size(); ++j)
      if (j != i && flat[j] && identical(flat[j], flat[i]->kids[0])) {
        flat[i] = nullptr;
        flat[j] = nullptr;
        break;
      }
  }
  flat.erase(std::remove(flat.begin(), flat.end(), nullptr), flat.end());
  for (auto& t : flat)
    if (t->kind == NodeKind::Index && t->kids[0]->kind == NodeKind::Val && c) {
      // a constant-based family absorbs the offset into its base
      Node n = *t;
      n.kids = {val(t->kids[0]->val + c)};
      t = finish(std::move(n));
      c = 0;
      break;
    }
  for (const auto& t : flat)
    if (t->kind == NodeKind::Index && t->kids[0]->kind != NodeKind::Val && t->stride) {
      c %= t->stride;  // constants inside an index family are only known modulo the stride
      break;
    }
  std::stable_sort(flat.begin(), flat.end(), [](const Sse& a, const Sse& b) { return compare(a, b) < 0; });
  if (flat.empty()) return val(c);
  if (flat.size() == 1 && c == 0) return flat[0];
  Node n;
  n.kind = NodeKind::Sum;
  n.kids = std::move(flat);
  if (c) n.kids.push_back(val(c));
  return finish(std::move(n));
}

Sse unop(UnOpKind op, const Sse& a) {
  if (op == UnOpKind::Neg) {
    if (a->kind == NodeKind::Val) return val(~a->val + 1);
    if (a->kind == NodeKind::Unop && a->uop == UnOpKind::Neg) return a->kids[0];
    if (a->kind == NodeKind::Sum) {
      std::vector<Sse> t;
      for (const auto& k : a->kids) t.push_back(unop(UnOpKind::Neg, k));
      return sum(std::move(t));
    }
  } else if (op == UnOpKind::Not) {
    if (a->kind == NodeKind::Val) return val(~a->val);
    if (a->kind == NodeKind::Unop && a->uop == UnOpKind::Not) return a->kids[0];
  }
  Node n;
  n.kind = NodeKind::Unop;
  n.uop = op;
  n.kids = {a};
  return finish(std::move(n));
}

Sse add(const Sse& a, const Sse& b) { return sum({a, b}); }
Sse sub(const Sse& a, const Sse& b) { return sum({a, unop(UnOpKind::Neg, b)}); }

static Sse make_binop(BinOpKind op, Sse a, Sse b) {
  Node n;
  n.kind = NodeKind::Binop;
  n.bop = op;
  n.kids = {std::move(a), std::move(b)};
  return finish(std::move(n));
}

Sse binop(BinOpKind op, const Sse& a0, const Sse& b0) {
  Sse a = a0, b = b0;
  switch (op) {
    case BinOpKind::Add: return add(a, b);
    case BinOpKind::Sub: return sub(a, b);
    default: break;
  }
  if (is_commutative(op) && compare(b, a) < 0) std::swap(a, b);
  bool av = a->kind == NodeKind::Val, bv = b->kind == NodeKind::Val;
  switch (op) {
    case BinOpKind::Mul:
      if (av && bv) return val(a->val * b->val);
      if (is_val(b, 1)) return a;
      if (is_val(b, 0)) return val(0);
      break;
    case BinOpKind::And:
      if (av && bv) return val(a->val & b->val);
      if (is_val(b, 0)) return val(0);
      if (is_val(b, ~Word{0})) return a;
      if (identical(a, b)) return a;
      break;
    case BinOpKind::Or:
      if (av && bv) return val(a->val | b->val);
      if (is_val(b, 0)) return a;
      if (identical(a, b)) return a;
      break;
    case BinOpKind::Xor:
      if (av && bv) return val(a->val ^ b->val);
      if (is_val(b, 0)) return a;
      if (identical(a, b)) return val(0);
      break;
    case BinOpKind::Shl:
      // an amount above 32 bits is reduced differently per word size
      if (av && bv && b->val <= 0xFFFFFFFFu) return val(b->val < 64 ? a->val << b->val : 0);
      if (is_val(b, 0)) return a;
      break;
    case BinOpKind::Shr:
      // high bits would differ between word sizes
      if (av && bv && a->val <= 0xFFFFFFFFu && b->val <= 0xFFFFFFFFu) return val(b->val < 64 ? a->val >> b->val : 0);
      if (is_val(b, 0)) return a;
      break;
    case BinOpKind::Div:
      if (is_val(b, 1)) return a;
      break;
    default: break;
  }
  return make_binop(op, a, b);
}

Sse raw_binop(BinOpKind op, const Sse& a, const Sse& b) { return make_binop(op, a, b); }

static Sse mem(NodeKind k, const Sse& addr, Point site) {
  Node n;
  n.kind = k;
  n.kids = {addr};
  n.site = site;
  return finish(std::move(n));
}

Sse load(const Sse& addr, Point site) { return mem(NodeKind::Load, addr, site); }
Sse store(const Sse& addr, Point site) { return mem(NodeKind::Store, addr, site); }

Sse index(const Sse& base, Word stride, Point id) {
  if (stride == 0) return base;
  auto [nc, k] = split_offset(base);
  Node n;
  n.kind = NodeKind::Index;
  n.stride = stride;
  n.index_id = id;
  if (!nc) {
    n.kids = {val(k)};
    return finish(std::move(n));
  }
  n.kids = {nc};
  return sum({finish(std::move(n)), val(k)});
}

Sse detail::rebuild(const Node& n, std::vector<Sse> kids) {
  switch (n.kind) {
    case NodeKind::Reg: return reg(n.reg);
    case NodeKind::Val: return val(n.val);
    case NodeKind::Sum: return sum(std::move(kids));
    case NodeKind::Binop: return binop(n.bop, kids[0], kids[1]);
    case NodeKind::Unop: return unop(n.uop, kids[0]);
    case NodeKind::Load: return load(kids[0], n.site);
    case NodeKind::Store: return store(kids[0], n.site);
    case NodeKind::Index: return index(kids[0], n.stride, n.index_id);
  }
  return nullptr;
}

Sse canonicalize(const Sse& e) {
  std::vector<Sse> kids;
  for (const auto& k : e->kids) kids.push_back(canonicalize(k));
  return detail::rebuild(*e, std::move(kids));
}

bool is_canonical(const Sse& e) {
  Sse c = canonicalize(e);
  // same shape including node kinds at every level
  std::function<bool(const Sse&, const Sse&)> same = [&](const Sse& a, const Sse& b) {
    return compare(a, b) == 0;
  };
  return same(c, e);
}

bool occurs(const Sse& e, const Sse& p) {
  if (e->hash == p->hash && equal(e, p)) return true;
  for (const auto& k : e->kids)
    if (occurs(k, p)) return true;
  return false;
}

bool occurs_reg(const Sse& e, Reg r) {
  if (e->kind == NodeKind::Reg) return e->reg == r;
  for (const auto& k : e->kids)
    if (occurs_reg(k, r)) return true;
  return false;
}

static Sse replace_rec(const Sse& e, const Sse& p, const Sse& r) {
  if (e->hash == p->hash && equal(e, p)) return r;
  if (e->kids.empty()) return e;
  std::vector<Sse> kids;
  bool changed = false;
  for (const auto& k : e->kids) {
    Sse nk = replace_rec(k, p, r);
    changed |= nk != k;
    kids.push_back(std::move(nk));
  }
  return changed ? detail::rebuild(*e, std::move(kids)) : e;
}

std::optional<Sse> replace(const Sse& e, const Sse& pattern, const Sse& replacement,
                           uint32_t depth_cap) {
  Sse r = replace_rec(e, pattern, replacement);
  if (r->mem_depth > depth_cap) return std::nullopt;
  return r;
}

std::set<Reg> registers(const Sse& e) {
  std::set<Reg> out;
  std::function<void(const Sse&)> go = [&](const Sse& x) {
    if (x->kind == NodeKind::Reg) out.insert(x->reg);
    for (const auto& k : x->kids) go(k);
  };
  go(e);
  return out;
}

bool has_memory(const Sse& e) { return e->mem_depth > 0; }

static bool has_bitwise(const Sse& e) {
  if (e->kind == NodeKind::Binop && is_bitwise(e->bop)) return true;
  if (e->kind == NodeKind::Unop && e->uop == UnOpKind::Not) return true;
  for (const auto& k : e->kids)
    if (has_bitwise(k)) return true;
  return false;
}

bool has_bitwise_address(const Sse& e) {
  if ((e->kind == NodeKind::Load || e->kind == NodeKind::Store) && has_bitwise(e->kids[0]))
    return true;
  for (const auto& k : e->kids)
    if (has_bitwise_address(k)) return true;
  return false;
}

bool is_rooted(const Sse& e, bool allow_rv) {
  for (Reg r : registers(e)) {
    if (r.is_gp() || r.is_param()) continue;
    if (allow_rv && r.is_rv()) continue;
    return false;
  }
  return true;
}

bool has_index(const Sse& e) {
  if (e->kind == NodeKind::Index) return true;
  for (const auto& k : e->kids)
    if (has_index(k)) return true;
  return false;
}

std::pair<Sse, Word> split_offset(const Sse& e) {
  if (e->kind == NodeKind::Val) return {nullptr, e->val};
  if (e->kind == NodeKind::Sum && e->kids.back()->kind == NodeKind::Val) {
    std::vector<Sse> t(e->kids.begin(), e->kids.end() - 1);
    return {sum(std::move(t)), e->kids.back()->val};
  }
  return {e, 0};
}

// Offset positions: the root and every memory address, in preorder.
static void positions(const Sse& e, std::vector<Sse>& out, bool root) {
  if (root) out.push_back(e);
  if (e->kind == NodeKind::Load || e->kind == NodeKind::Store) out.push_back(e->kids[0]);
  for (const auto& k : e->kids) positions(k, out, false);
}

static std::vector<Sse> positions(const Sse& e) {
  std::vector<Sse> out;
  positions(e, out, true);
  return out;
}

// Rebuilds e with its j-th offset position replaced by `with`.
static Sse with_position(const Sse& e, size_t j, const Sse& with) {
  size_t counter = 0;
  std::function<Sse(const Sse&, bool)> go = [&](const Sse& x, bool root) -> Sse {
    if (root) {
      if (counter++ == j) return with;
    }
    std::vector<Sse> kids;
    bool changed = false;
    for (size_t i = 0; i < x->kids.size(); ++i) {
      Sse k = x->kids[i];
      Sse nk;
      if ((x->kind == NodeKind::Load || x->kind == NodeKind::Store) && i == 0) {
        if (counter++ == j) {
          nk = with;
        } else {
          nk = go(k, false);
        }
      } else {
        nk = go(k, false);
      }
      changed |= nk != k;
      kids.push_back(nk);
    }
    return changed ? detail::rebuild(*x, std::move(kids)) : x;
  };
  return go(e, true);
}

Sse skeleton(const Sse& e, size_t j) {
  auto pos = positions(e);
  auto [nc, k] = split_offset(pos[j]);
  (void)k;
  Sse hole = nc ? add(nc, reg(kHole)) : reg(kHole);
  return with_position(e, j, hole);
}

size_t num_offset_positions(const Sse& e) { return positions(e).size(); }
std::vector<Sse> offset_positions(const Sse& e) { return positions(e); }
Sse replace_position(const Sse& e, size_t j, const Sse& with) { return with_position(e, j, with); }

std::optional<Sse> recognize_induction(const std::vector<Sse>& family, Point id) {
  if (family.size() < 2) return std::nullopt;
  size_t npos = positions(family[0]).size();
  for (const auto& f : family)
    if (positions(f).size() != npos) return std::nullopt;
  for (size_t j = 0; j < npos; ++j) {
    Sse sk = skeleton(family[0], j);
    std::vector<Word> ks;
    bool ok = true;
    for (const auto& f : family) {
      if (!equal(skeleton(f, j), sk)) {
        ok = false;
        break;
      }
      ks.push_back(split_offset(positions(f)[j]).second);
    }
    if (!ok) continue;
    std::sort(ks.begin(), ks.end(), [](Word a, Word b) {
      return static_cast<int64_t>(a) < static_cast<int64_t>(b);
    });
    if (std::adjacent_find(ks.begin(), ks.end()) != ks.end()) continue;
    Word c = ks[1] - ks[0];
    if (static_cast<int64_t>(c) <= 0) continue;
    for (size_t i = 2; i < ks.size(); ++i)
      if (ks[i] - ks[i - 1] != c) ok = false;
    if (!ok) continue;
    auto [nc, k0] = split_offset(positions(family[0])[j]);
    (void)k0;
    Sse sub = nc ? sum({index(nc, c, id), val(ks[0])}) : index(val(ks[0]), c, id);
    return with_position(family[0], j, sub);
  }
  return std::nullopt;
}

bool subsumed_by(const Sse& e, const Sse& summary) {
  auto ps = positions(summary);
  auto pe = positions(e);
  if (ps.size() != pe.size()) return false;
  for (size_t j = 0; j < ps.size(); ++j) {
    const Sse& s = ps[j];
    Sse idx;
    Word off = 0;
    if (s->kind == NodeKind::Index) {
      idx = s;
    } else if (s->kind == NodeKind::Sum) {
      for (const auto& t : s->kids)
        if (t->kind == NodeKind::Index) idx = t;
      if (idx) off = split_offset(s).second;
      if (idx && s->kids.size() > (off ? 2u : 1u)) idx = nullptr;  // index must be the only term
    }
    if (!idx) continue;
    if (!equal(skeleton(summary, j), skeleton(e, j))) {
      // skeleton of the summary keeps the index term; compare outside the position
      Sse a = with_position(summary, j, reg(kHole));
      Sse b = with_position(e, j, reg(kHole));
      if (!equal(a, b)) continue;
    }
    auto [nc, k] = split_offset(pe[j]);
    const Sse& base = idx->kids[0];
    Word st = idx->stride;
    if (base->kind == NodeKind::Val) {
      if (nc) continue;
      if ((k - base->val - off) % st == 0) return true;
    } else {
      if (!nc || !equal(nc, base)) continue;
      if ((k - off) % st == 0) return true;
    }
  }
  return false;
}

}  // namespace sse
}  // namespace symalias
