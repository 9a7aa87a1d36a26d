#include "symalias/icall.hpp"

#include <algorithm>
#include <set>

namespace symalias {

std::string_view to_string(IcallPattern p) {
  switch (p) {
    case IcallPattern::DirectFptr: return "direct-fptr";
    case IcallPattern::TableStride: return "table-stride";
    case IcallPattern::GptrLoad: return "gptr-load";
    case IcallPattern::GptrTable: return "gptr-table";
    case IcallPattern::Unresolved: return "unresolved";
  }
  return "?";
}

namespace {

// No registers besides gp: the expression names the same value everywhere.
bool is_global(const Sse& e) {
  for (Reg r : sse::registers(e))
    if (!r.is_gp()) return false;
  return true;
}

bool same_place(const LocatedSse& a, const LocatedSse& b) {
  if (!sse::equal(a.expr, b.expr)) return false;
  return is_global(a.expr) || a.at == b.at;
}

// Tables run from a labeled object up to the next labeled one; objects with
// generated names continue the table they follow.
uint64_t extent_end(const Program& p, const DataObject& obj) {
  uint64_t end = obj.address + obj.words.size() * p.word_size;
  for (const auto& d : p.data_objects) {
    if (d.address <= obj.address) continue;
    if (d.label.rfind("data_", 0) != 0) return d.address;
    end = std::max<uint64_t>(end, d.address + d.words.size() * p.word_size);
  }
  return end;
}

const DataObject* table_object(const Program& p, uint64_t address) {
  const DataObject* d = p.data_object_containing(address);
  if (!d) return nullptr;
  // An unlabeled continuation belongs to the labeled object before it.
  const DataObject* head = d;
  for (const auto& o : p.data_objects) {
    if (o.address > d->address) break;
    if (o.label.rfind("data_", 0) != 0) head = &o;
  }
  return extent_end(p, *head) > address ? head : d;
}

bool table_has_function(const Program& p, const DataObject& obj) {
  uint64_t end = extent_end(p, obj);
  for (uint64_t a = obj.address; a < end; a += p.word_size)
    if (auto w = p.data_word_at(a); w && p.function_at(*w)) return true;
  return false;
}

std::optional<uint32_t> function_index_at(const Program& p, uint64_t addr) {
  const Function* f = p.function_at(addr);
  if (!f) return std::nullopt;
  return static_cast<uint32_t>(f - p.functions.data());
}

std::vector<LocatedSse> collect_facts(const QueryResult& qr) {
  std::vector<LocatedSse> out;
  std::set<std::pair<Point, Sse>, decltype([](const auto& a, const auto& b) {
             if (a.first != b.first) return a.first < b.first;
             return sse::compare(a.second, b.second) < 0;
           })>
      seen;
  for (const auto& inst : qr.all)
    for (const auto& f : inst->facts)
      if (seen.insert({f.at, f.expr}).second) out.push_back({f.at, f.expr});
  return out;
}

}  // namespace

std::vector<StmtId> find_icall_sites(const Program& program) {
  std::vector<StmtId> out;
  for (const auto& f : program.functions)
    for (const auto& b : f.blocks)
      for (const auto& s : b.statements)
        if (std::holds_alternative<ICallStmt>(s.form)) out.push_back(s.id);
  return out;
}

std::vector<PointerRef> collect_pointer_refs(const Program& program,
                                             const AddressTakenSet& address_taken) {
  std::vector<PointerRef> out;
  auto classify = [&](uint64_t v, PointerRef& r) {
    if (address_taken.count(v)) {
      r.kind = PointerRef::Kind::Fptr;
      r.value = v;
      return true;
    }
    const DataObject* obj = table_object(program, v);
    if (obj && table_has_function(program, *obj)) {
      r.kind = PointerRef::Kind::Dptr;
      r.value = v;
      r.extent_end = extent_end(program, *obj);
      return true;
    }
    return false;
  };
  for (const auto& f : program.functions)
    for (const auto& b : f.blocks)
      for (const auto& s : b.statements)
        for (uint64_t v : statement_immediates(s)) {
          PointerRef r;
          r.site = s.id;
          if (classify(v, r)) out.push_back(std::move(r));
        }
  for (const auto& d : program.data_objects)
    for (size_t i = 0; i < d.words.size(); ++i) {
      PointerRef r;
      r.in_data = true;
      r.data_address = d.address + i * program.word_size;
      if (classify(d.words[i], r)) out.push_back(std::move(r));
    }
  return out;
}

void compute_pointer_aliases(Engine& engine, std::vector<PointerRef>& refs) {
  const Program& p = engine.program();
  for (auto& r : refs) {
    r.aliases.clear();
    if (r.in_data) {
      r.aliases.push_back({Point{}, sse::load(sse::val(r.data_address))});
      continue;
    }
    const Statement& s = p.statement(r.site);
    const Point after{r.site.func, r.site.block, r.site.index + 1};
    std::vector<Seed> seeds;
    auto is_ref = [&](const Operand& o) { return o.is_imm() && o.as_imm() == r.value; };
    std::visit(
        [&](const auto& st) {
          using T = std::decay_t<decltype(st)>;
          if constexpr (std::is_same_v<T, MoveStmt>) {
            seeds.push_back({after, sse::reg(st.dst), Dir::Both});
          } else if constexpr (std::is_same_v<T, IteStmt>) {
            seeds.push_back({after, sse::reg(st.dst), Dir::Both});
          } else if constexpr (std::is_same_v<T, StoreStmt>) {
            if (is_ref(st.src)) seeds.push_back({after, sse::store(address_expr(st.addr), after), Dir::Both});
          } else if constexpr (std::is_same_v<T, CallStmt>) {
            auto callee = p.function_index(st.target);
            if (!callee) return;
            for (size_t i = 0; i < st.args.size(); ++i)
              if (is_ref(st.args[i]))
                seeds.push_back({Point{*callee, Point::kPrologue, 0},
                                 sse::reg(Reg::param(static_cast<uint32_t>(i))), Dir::Fwd});
          } else if constexpr (std::is_same_v<T, RetStmt>) {
            seeds.push_back({Point{r.site.func, Point::kExit, 0}, sse::reg(Reg::rv()), Dir::Fwd});
          }
        },
        s.form);
    if (seeds.empty()) continue;
    QueryResult qr = engine.query(seeds);
    r.aliases = collect_facts(qr);
  }
}

std::vector<LocatedSse> call_target_aliases(Engine& engine, const StmtId& site) {
  const auto& ic = std::get<ICallStmt>(engine.program().statement(site).form);
  Seed s{Point{site.func, site.block, site.index}, sse::reg(ic.target), Dir::Bwd};
  return collect_facts(engine.query({s}));
}

IcallResolution resolve(const Program& program, const StmtId& site,
                        const std::vector<LocatedSse>& ctexprs,
                        const std::vector<PointerRef>& refs) {
  IcallResolution res;
  res.callsite = site;
  std::set<uint32_t> targets;
  std::set<IcallPattern> hits;
  std::vector<std::pair<uint64_t, uint64_t>> tables;  // matched extents
  auto note = [&](IcallPattern pat, const Sse& ct, const Sse& pe) {
    if (hits.empty() || pat < *hits.begin()) {
      res.ct_evidence = sse::to_string(ct, sse::PrintMode::Compact, &program);
      res.p_evidence = pe ? sse::to_string(pe, sse::PrintMode::Compact, &program) : "";
    }
    hits.insert(pat);
  };

  // Table walks: load(Index(base, stride) + off).
  for (const auto& ct : ctexprs) {
    const Sse& e = ct.expr;
    if (e->kind != NodeKind::Load) continue;
    auto [rest, off] = sse::split_offset(e->kids[0]);
    if (!rest || rest->kind != NodeKind::Index) continue;
    const Sse& base = rest->kids[0];
    const Word stride = rest->stride;
    if (stride == 0) continue;
    struct Base { uint64_t b; IcallPattern pat; Sse evidence; };
    std::vector<Base> bases;
    if (base->kind == NodeKind::Val) {
      bases.push_back({base->val, IcallPattern::TableStride, nullptr});
    } else {
      for (const auto& r : refs) {
        if (r.kind != PointerRef::Kind::Dptr) continue;
        for (const auto& a : r.aliases) {
          bool direct = same_place(a, LocatedSse{ct.at, base});
          bool via_store = base->kind == NodeKind::Load && is_global(base) &&
                           a.expr->kind == NodeKind::Store && sse::equal(a.expr->kids[0], base->kids[0]);
          if (!direct && !via_store) continue;
          IcallPattern pat = sse::has_memory(base) ? IcallPattern::GptrTable : IcallPattern::TableStride;
          bases.push_back({r.value, pat, a.expr});
          break;
        }
      }
    }
    for (const auto& bs : bases) {
      const uint64_t first = (bs.b + off) & program.word_mask();
      const DataObject* obj = table_object(program, first);
      if (!obj) continue;
      const uint64_t end = extent_end(program, *obj);
      const uint64_t field = (first - obj->address) % stride;
      bool any = false;
      for (uint64_t a = obj->address + field; a < end; a += stride) {
        auto w = program.data_word_at(a);
        if (!w) continue;
        if (*w == 0) {
          res.null_target = true;
        } else if (auto fi = function_index_at(program, *w)) {
          targets.insert(*fi);
          any = true;
        }
      }
      if (!any) continue;
      tables.push_back({obj->address, end});
      if (hits.empty() || bs.pat < *hits.begin() || res.stride == 0) {
        res.stride = stride;
        res.field_offset = field;
      }
      note(bs.pat, e, bs.evidence);
    }
  }
  auto in_table = [&](uint64_t a) {
    return std::any_of(tables.begin(), tables.end(),
                       [&](const auto& t) { return a >= t.first && a < t.second; });
  };

  for (const auto& ct : ctexprs) {
    const Sse& e = ct.expr;
    // Function constant or a function word read straight from data.
    if (e->kind == NodeKind::Val) {
      if (auto fi = function_index_at(program, e->val)) {
        targets.insert(*fi);
        note(IcallPattern::DirectFptr, e, nullptr);
      }
      continue;
    }
    if (e->kind != NodeKind::Load) continue;
    const Sse& addr = e->kids[0];
    if (addr->kind == NodeKind::Val) {
      if (in_table(addr->val)) continue;
      if (auto w = program.data_word_at(addr->val)) {
        if (auto fi = function_index_at(program, *w)) {
          targets.insert(*fi);
          note(IcallPattern::DirectFptr, e, nullptr);
          continue;
        }
      }
    }
    if (!is_global(e) || sse::has_index(e)) continue;
    // A global cell some function pointer was stored to.
    for (const auto& r : refs) {
      if (r.kind != PointerRef::Kind::Fptr) continue;
      for (const auto& a : r.aliases) {
        const bool stored = a.expr->kind == NodeKind::Store && sse::equal(a.expr->kids[0], addr);
        const bool loaded = sse::equal(a.expr, e);
        if (!stored && !loaded) continue;
        if (auto fi = function_index_at(program, r.value)) {
          targets.insert(*fi);
          note(IcallPattern::GptrLoad, e, a.expr);
        }
        break;
      }
    }
  }

  // Plain intersection with function pointer aliases.
  for (const auto& r : refs) {
    if (r.kind != PointerRef::Kind::Fptr) continue;
    if (r.in_data && in_table(r.data_address)) continue;
    auto fi = function_index_at(program, r.value);
    if (!fi || targets.count(*fi)) continue;
    for (const auto& a : r.aliases) {
      if (is_global(a.expr) && sse::has_memory(a.expr)) continue;  // handled above
      auto it = std::find_if(ctexprs.begin(), ctexprs.end(),
                             [&](const LocatedSse& ct) { return same_place(a, ct); });
      if (it == ctexprs.end()) continue;
      targets.insert(*fi);
      note(IcallPattern::DirectFptr, it->expr, a.expr);
      break;
    }
  }

  res.targets.assign(targets.begin(), targets.end());
  if (!res.targets.empty()) res.pattern = *hits.begin();
  return res;
}

CallGraph augment_callgraph(const CallGraph& cg, const std::vector<IcallResolution>& res) {
  CallGraph out = cg;
  for (const auto& r : res)
    for (uint32_t t : r.targets) {
      CallEdge e{r.callsite.func, t, r.callsite, true};
      if (std::find(out.edges.begin(), out.edges.end(), e) == out.edges.end()) out.edges.push_back(e);
    }
  return out;
}

IcallMetrics icall_metrics(const std::vector<IcallResolution>& res) {
  IcallMetrics m;
  m.all = res.size();
  for (const auto& r : res) {
    if (r.resolved()) ++m.resolved;
    m.targets += r.targets.size();
  }
  m.percent = m.all ? 100.0 * static_cast<double>(m.resolved) / static_cast<double>(m.all) : 0.0;
  return m;
}

std::vector<IcallResolution> resolve_icalls(Engine& engine) {
  const Program& p = engine.program();
  const auto sites = find_icall_sites(p);
  auto refs = collect_pointer_refs(p, find_address_taken(p));
  std::vector<IcallResolution> res;
  std::map<StmtId, std::vector<uint32_t>> installed = engine.icall_targets();
  // Resolved targets can expose further flows; a few rounds reach the fixpoint.
  for (int round = 0; round < 4; ++round) {
    compute_pointer_aliases(engine, refs);
    res.clear();
    std::map<StmtId, std::vector<uint32_t>> found;
    for (const auto& s : sites) {
      res.push_back(resolve(p, s, call_target_aliases(engine, s), refs));
      if (res.back().resolved()) found[s] = res.back().targets;
    }
    if (found == installed) break;
    installed = found;
    engine.set_icall_targets(installed);
  }
  return res;
}

}  // namespace symalias
