#include <algorithm>
#include <set>

#include "symalias/alias.hpp"

namespace symalias {

namespace {

using Item = std::pair<uint32_t, Sse>;

struct ItemLess {
  bool operator()(const Item& a, const Item& b) const {
    if (a.first != b.first) return a.first < b.first;
    return sse::compare(a.second, b.second) < 0;
  }
};

using ItemSet = std::set<Item, ItemLess>;

}  // namespace

UpdateResult forward_update(const std::vector<Statement>& block, Point start,
                            const std::vector<Item>& live, uint32_t cap) {
  UpdateResult out;
  ItemSet seen_f, seen_b;
  std::vector<Item> work(live.begin(), live.end());
  while (!work.empty()) {
    auto [pos, e] = work.back();
    work.pop_back();
    if (!seen_f.insert({pos, e}).second) continue;
    out.new_f.push_back({pos, e});
    if (pos >= block.size()) continue;
    if (block[pos].is_call()) {
      work.push_back({pos + 1, e});
      continue;
    }
    StepResult r = step_forward(block, Point{start.func, start.block, pos}, e, cap);
    for (const auto& d : r.out) {
      if (has_fwd(d.dir)) work.push_back({d.pos, d.expr});
      if (has_bwd(d.dir) && seen_b.insert({d.pos, d.expr}).second) out.new_b.push_back({d.pos, d.expr});
    }
    if (!r.killed) work.push_back({pos + 1, e});
  }
  return out;
}

UpdateResult backward_update(const std::vector<Statement>& block, Point start,
                             const std::vector<Item>& live, uint32_t cap) {
  UpdateResult out;
  ItemSet seen_f, seen_b;
  std::vector<Item> work(live.begin(), live.end());
  while (!work.empty()) {
    auto [pos, e] = work.back();
    work.pop_back();
    if (!seen_b.insert({pos, e}).second) continue;
    out.new_b.push_back({pos, e});
    if (pos == 0) continue;
    if (block[pos - 1].is_call()) {
      work.push_back({pos - 1, e});
      continue;
    }
    StepResult r = step_backward(block, Point{start.func, start.block, pos - 1}, e, cap);
    for (const auto& d : r.out) {
      if (has_bwd(d.dir)) work.push_back({d.pos, d.expr});
      if (has_fwd(d.dir) && seen_f.insert({d.pos, d.expr}).second) out.new_f.push_back({d.pos, d.expr});
    }
    if (!r.killed) work.push_back({pos - 1, e});
  }
  return out;
}

void trace_block(const std::vector<Statement>& block, Point start, BlockState& st,
                 uint32_t max_rounds, uint32_t cap) {
  const auto n = static_cast<uint32_t>(block.size());
  ItemSet fwd, bwd;
  std::vector<Item> next_f, next_b;
  for (const auto& e : st.in_f) next_f.push_back({0, e});
  for (const auto& t : st.target_f) next_f.push_back(t);
  for (const auto& e : st.in_b) next_b.push_back({n, e});
  for (const auto& t : st.target_b) next_b.push_back(t);
  uint32_t round = 0;
  while (!next_f.empty() || !next_b.empty()) {
    if (++round > max_rounds) {
      st.divergent = true;
      break;
    }
    UpdateResult f = forward_update(block, start, next_f, cap);
    next_f.clear();
    for (const auto& i : f.new_f) fwd.insert(i);
    for (const auto& i : f.new_b)
      if (!bwd.count(i)) next_b.push_back(i);
    UpdateResult b = backward_update(block, start, next_b, cap);
    next_b.clear();
    for (const auto& i : b.new_b) bwd.insert(i);
    for (const auto& i : b.new_f)
      if (!fwd.count(i)) next_f.push_back(i);
  }
  auto add = [](std::vector<Sse>& v, const Sse& e) {
    if (std::none_of(v.begin(), v.end(), [&](const Sse& x) { return sse::equal(x, e); }))
      v.push_back(e);
  };
  st.out_f.clear();
  st.out_b.clear();
  st.all.clear();
  for (const auto& [p, e] : fwd)
    if (p == n) add(st.out_f, e);
  for (const auto& [p, e] : bwd)
    if (p == 0) add(st.out_b, e);
  ItemSet all(fwd.begin(), fwd.end());
  all.insert(bwd.begin(), bwd.end());
  st.all.assign(all.begin(), all.end());
}

}  // namespace symalias
