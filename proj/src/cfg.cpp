#include "symalias/cfg.hpp"

#include <algorithm>
#include <functional>
#include <sstream>

namespace symalias {

size_t Cfg::num_edges() const {
  size_t n = 0;
  for (const auto& b : blocks) n += b.succs.size();
  return n;
}

uint32_t Cfg::block_of(uint32_t orig, uint32_t index) const {
  for (uint32_t i = 0; i < blocks.size(); ++i) {
    const auto& b = blocks[i];
    if (b.orig_block != orig) continue;
    if ((index >= b.begin && index < b.end) || (b.begin == b.end && index == b.begin)) return i;
  }
  // index == size of the source block: the last node of it
  uint32_t last = kNoBlock;
  for (uint32_t i = 0; i < blocks.size(); ++i)
    if (blocks[i].orig_block == orig) last = i;
  return last;
}

Cfg build_cfg(const Program& program, uint32_t func) {
  const Function& fn = program.functions.at(func);
  Cfg cfg;
  cfg.func = func;
  std::vector<uint32_t> first(fn.blocks.size()), last(fn.blocks.size());
  for (uint32_t ob = 0; ob < fn.blocks.size(); ++ob) {
    const auto& st = fn.blocks[ob].statements;
    first[ob] = static_cast<uint32_t>(cfg.blocks.size());
    uint32_t start = 0;
    auto emit = [&](uint32_t b, uint32_t e, bool call) {
      CfgBlock blk;
      blk.orig_block = ob;
      blk.begin = b;
      blk.end = e;
      blk.is_callsite = call;
      if (!cfg.blocks.empty() && cfg.blocks.back().orig_block == ob)
        cfg.blocks.back().succs.push_back(static_cast<uint32_t>(cfg.blocks.size()));
      cfg.blocks.push_back(blk);
    };
    for (uint32_t i = 0; i < st.size(); ++i) {
      if (!st[i].is_call()) continue;
      if (i > start) emit(start, i, false);
      emit(i, i + 1, true);
      start = i + 1;
    }
    if (start < st.size() || cfg.blocks.size() == first[ob])
      emit(start, static_cast<uint32_t>(st.size()), false);
    last[ob] = static_cast<uint32_t>(cfg.blocks.size() - 1);
  }

  std::vector<uint32_t> returning;
  for (uint32_t ob = 0; ob < fn.blocks.size(); ++ob) {
    auto& tail = cfg.blocks[last[ob]];
    const auto& st = fn.blocks[ob].statements;
    const Statement* term = st.empty() ? nullptr : &st.back();
    auto add = [&](uint32_t to) {
      if (std::find(tail.succs.begin(), tail.succs.end(), to) == tail.succs.end())
        tail.succs.push_back(to);
    };
    if (term && std::holds_alternative<BranchStmt>(term->form)) {
      const auto& br = std::get<BranchStmt>(term->form);
      add(first[*fn.block_index(br.then_label)]);
      add(first[*fn.block_index(br.else_label)]);
    } else if (term && std::holds_alternative<JumpStmt>(term->form)) {
      add(first[*fn.block_index(std::get<JumpStmt>(term->form).label)]);
    } else if (term && std::holds_alternative<RetStmt>(term->form)) {
      returning.push_back(last[ob]);
    } else if (ob + 1 < fn.blocks.size()) {
      add(first[ob + 1]);
    } else {
      returning.push_back(last[ob]);
    }
  }
  cfg.entry = first.empty() ? 0 : first[0];
  if (returning.size() == 1) {
    cfg.exit = returning[0];
  } else {
    CfgBlock ex;
    cfg.exit = static_cast<uint32_t>(cfg.blocks.size());
    cfg.blocks.push_back(ex);
    for (uint32_t r : returning) cfg.blocks[r].succs.push_back(cfg.exit);
  }
  for (uint32_t i = 0; i < cfg.blocks.size(); ++i)
    for (uint32_t s : cfg.blocks[i].succs) cfg.blocks[s].preds.push_back(i);

  // reachability and back edges by iterative DFS
  std::vector<int> state(cfg.blocks.size(), 0);  // 0 new, 1 on stack, 2 done
  std::vector<std::pair<uint32_t, size_t>> stack{{cfg.entry, 0}};
  state[cfg.entry] = 1;
  while (!stack.empty()) {
    auto& [b, i] = stack.back();
    if (i < cfg.blocks[b].succs.size()) {
      uint32_t s = cfg.blocks[b].succs[i++];
      if (state[s] == 0) {
        state[s] = 1;
        stack.push_back({s, 0});
      } else if (state[s] == 1) {
        cfg.back_edges.push_back({b, s});
      }
    } else {
      state[b] = 2;
      stack.pop_back();
    }
  }
  for (uint32_t i = 0; i < cfg.blocks.size(); ++i) {
    cfg.blocks[i].reachable = state[i] == 2;
    if (!cfg.blocks[i].reachable && i != cfg.exit)
      cfg.warnings.push_back("unreachable block in " + fn.name + ": " +
                             fn.blocks[cfg.blocks[i].orig_block].label);
  }

  // natural loops; smaller bodies win the header assignment
  std::vector<std::pair<uint32_t, std::vector<uint32_t>>> loops;
  for (auto [u, h] : cfg.back_edges) {
    std::vector<bool> in(cfg.blocks.size(), false);
    in[h] = true;
    std::vector<uint32_t> work;
    if (!in[u]) {
      in[u] = true;
      work.push_back(u);
    }
    while (!work.empty()) {
      uint32_t x = work.back();
      work.pop_back();
      for (uint32_t p : cfg.blocks[x].preds)
        if (!in[p] && cfg.blocks[p].reachable) {
          in[p] = true;
          work.push_back(p);
        }
    }
    std::vector<uint32_t> body;
    for (uint32_t i = 0; i < in.size(); ++i)
      if (in[i]) body.push_back(i);
    loops.push_back({h, body});
  }
  std::sort(loops.begin(), loops.end(),
            [](const auto& a, const auto& b) { return a.second.size() > b.second.size(); });
  for (const auto& [h, body] : loops)
    for (uint32_t b : body) {
      cfg.blocks[b].in_loop = true;
      cfg.blocks[b].loop_header = h;
    }
  return cfg;
}

std::vector<Cfg> build_all_cfgs(const Program& program) {
  std::vector<Cfg> out;
  for (uint32_t f = 0; f < program.functions.size(); ++f) out.push_back(build_cfg(program, f));
  return out;
}

std::vector<uint32_t> postorder(const Cfg& cfg) {
  std::vector<uint32_t> out;
  if (cfg.blocks.empty()) return out;
  std::vector<bool> seen(cfg.blocks.size(), false);
  std::vector<std::pair<uint32_t, size_t>> stack{{cfg.entry, 0}};
  seen[cfg.entry] = true;
  while (!stack.empty()) {
    auto& [b, i] = stack.back();
    if (i < cfg.blocks[b].succs.size()) {
      uint32_t s = cfg.blocks[b].succs[i++];
      if (!seen[s]) {
        seen[s] = true;
        stack.push_back({s, 0});
      }
    } else {
      out.push_back(b);
      stack.pop_back();
    }
  }
  return out;
}

std::string to_dot(const Cfg& cfg, const Program& program) {
  const Function& fn = program.functions[cfg.func];
  std::ostringstream os;
  os << "digraph \"" << fn.name << "\" {\n  node [shape=box, fontname=monospace];\n";
  for (uint32_t i = 0; i < cfg.blocks.size(); ++i) {
    const auto& b = cfg.blocks[i];
    os << "  n" << i << " [label=\"";
    if (b.orig_block == kNoBlock) {
      os << "<exit>";
    } else {
      os << fn.blocks[b.orig_block].label << "[" << b.begin << ":" << b.end << "]\\l";
      for (uint32_t k = b.begin; k < b.end; ++k) {
        std::string t = to_text(fn.blocks[b.orig_block].statements[k], fn);
        std::string esc;
        for (char c : t) esc += (c == '"' ? std::string("\\\"") : std::string(1, c));
        os << esc << "\\l";
      }
    }
    os << "\"";
    if (b.is_callsite) os << ", style=filled, fillcolor=lightgrey";
    if (!b.reachable) os << ", color=red";
    os << "];\n";
  }
  for (uint32_t i = 0; i < cfg.blocks.size(); ++i)
    for (uint32_t s : cfg.blocks[i].succs) os << "  n" << i << " -> n" << s << ";\n";
  os << "}\n";
  return os.str();
}

std::vector<uint32_t> CallGraph::callees(uint32_t f) const {
  std::vector<uint32_t> out;
  for (const auto& e : edges)
    if (e.caller == f && std::find(out.begin(), out.end(), e.callee) == out.end())
      out.push_back(e.callee);
  return out;
}

std::vector<const CallEdge*> CallGraph::callers(uint32_t f) const {
  std::vector<const CallEdge*> out;
  for (const auto& e : edges)
    if (e.callee == f) out.push_back(&e);
  return out;
}

std::vector<uint32_t> CallGraph::targets_at(const StmtId& site) const {
  std::vector<uint32_t> out;
  for (const auto& e : edges)
    if (e.site == site) out.push_back(e.callee);
  return out;
}

CallGraph build_call_graph(const Program& program) {
  CallGraph cg;
  for (uint32_t f = 0; f < program.functions.size(); ++f) {
    const Function& fn = program.functions[f];
    cg.nodes.push_back(fn.name);
    for (const auto& b : fn.blocks)
      for (const auto& s : b.statements) {
        if (auto* c = std::get_if<CallStmt>(&s.form)) {
          if (auto idx = program.function_index(c->target))
            cg.edges.push_back({f, *idx, s.id, false});
        } else if (std::holds_alternative<ICallStmt>(s.form)) {
          cg.icall_sites.push_back(s.id);
        }
      }
  }
  return cg;
}

AddressTakenSet find_address_taken(const Program& program) {
  AddressTakenSet out;
  auto consider = [&](uint64_t v) {
    if (program.function_at(v)) out.insert(v);
  };
  for (const auto& d : program.data_objects)
    for (Word w : d.words) consider(w);
  for (const auto& f : program.functions)
    for (const auto& b : f.blocks)
      for (const auto& s : b.statements)
        for (uint64_t v : statement_immediates(s)) consider(v);
  return out;
}

}  // namespace symalias
