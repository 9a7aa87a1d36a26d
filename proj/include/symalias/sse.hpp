#pragma once

#include <compare>
#include <cstdint>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "symalias/microir.hpp"

namespace symalias {

// A program point: the position before statement `pos` of source block
// `block` (pos == block size means the end of the block). Two pseudo blocks
// stand for a function's virtual parameter prologue and its exit.
struct Point {
  static constexpr uint32_t kPrologue = 0xFFFFFFFEu;
  static constexpr uint32_t kExit = 0xFFFFFFFDu;

  uint32_t func = 0;
  uint32_t block = 0;
  uint32_t pos = 0;

  bool same_block(const Point& o) const { return func == o.func && block == o.block; }
  friend constexpr auto operator<=>(const Point&, const Point&) = default;
};

std::string point_name(const Point& p, const Program* program);

enum class NodeKind { Reg, Val, Sum, Binop, Unop, Load, Store, Index };

struct Node;
using Sse = std::shared_ptr<const Node>;

// Immutable expression node. Load/Store carry the point whose memory state
// they read; the point is metadata and takes no part in equality or hashing.
struct Node {
  NodeKind kind = NodeKind::Val;
  Reg reg;
  Word val = 0;
  BinOpKind bop = BinOpKind::Add;
  UnOpKind uop = UnOpKind::Neg;
  std::vector<Sse> kids;
  Word stride = 0;   // Index
  Point index_id;    // Index: loop header the index ranges over
  Point site;        // Load/Store
  size_t hash = 0;
  uint32_t mem_depth = 0;
};

namespace sse {

inline constexpr uint32_t kDefaultDepthCap = 5;

Sse reg(Reg r);
Sse val(Word v);
// Canonicalizing constructors (children are assumed canonical).
Sse add(const Sse& a, const Sse& b);
Sse sub(const Sse& a, const Sse& b);
Sse binop(BinOpKind op, const Sse& a, const Sse& b);
Sse unop(UnOpKind op, const Sse& a);
Sse load(const Sse& addr, Point site = {});
Sse store(const Sse& addr, Point site = {});
Sse index(const Sse& base, Word stride, Point id);
Sse sum(std::vector<Sse> terms);

// Non-canonical constructor, used to feed canonicalize in tests.
Sse raw_binop(BinOpKind op, const Sse& a, const Sse& b);

Sse canonicalize(const Sse& e);
bool is_canonical(const Sse& e);

bool equal(const Sse& a, const Sse& b);
int compare(const Sse& a, const Sse& b);  // total order, ignores sites

bool occurs(const Sse& e, const Sse& pattern);
bool occurs_reg(const Sse& e, Reg r);
// Replaces every occurrence; nullopt when the result exceeds the depth cap.
std::optional<Sse> replace(const Sse& e, const Sse& pattern, const Sse& replacement,
                           uint32_t depth_cap = kDefaultDepthCap);
// Rewrites nodes bottom-up with `fn` (which returns nullptr to keep a node).
template <class Fn>
Sse rewrite(const Sse& e, Fn&& fn);

std::set<Reg> registers(const Sse& e);
bool has_memory(const Sse& e);
// True when some memory node's address contains a bitwise operation.
bool has_bitwise_address(const Sse& e);
// Registers other than gp and the parameter/return pseudo registers.
bool is_rooted(const Sse& e, bool allow_rv);
bool has_index(const Sse& e);

// Splits e into (non-constant part, additive constant). The non-constant part
// is nullptr for a pure constant.
std::pair<Sse, Word> split_offset(const Sse& e);

// Family of expressions differing in one additive constant; returns the
// IndexTerm form if the constants form base, base+c, base+2c, ... with c > 0.
std::optional<Sse> recognize_induction(const std::vector<Sse>& family, Point index_id);
// True when `e` is one of the values `summary` (an IndexTerm form) stands for.
bool subsumed_by(const Sse& e, const Sse& summary);
// Positions that may carry an additive constant: the root and every memory
// address, in preorder.
size_t num_offset_positions(const Sse& e);
std::vector<Sse> offset_positions(const Sse& e);
Sse replace_position(const Sse& e, size_t j, const Sse& with);
// e with the constant at position j abstracted away; equal skeletons mean the
// expressions differ at most in that constant.
Sse skeleton(const Sse& e, size_t j);

enum class PrintMode { Compact, Full };
std::string to_string(const Sse& e, PrintMode mode = PrintMode::Compact,
                      const Program* program = nullptr);

// Parses both print modes. Registers are case-insensitive. Sites in full mode
// need `program` to resolve names.
Sse parse(std::string_view text, const Program* program = nullptr, Point default_site = {});

struct Hash {
  size_t operator()(const Sse& e) const { return e->hash; }
};
struct Eq {
  bool operator()(const Sse& a, const Sse& b) const { return equal(a, b); }
};
struct Less {
  bool operator()(const Sse& a, const Sse& b) const { return compare(a, b) < 0; }
};

}  // namespace sse

// --- template implementation

namespace sse::detail {
Sse rebuild(const Node& n, std::vector<Sse> kids);
}

template <class Fn>
Sse sse::rewrite(const Sse& e, Fn&& fn) {
  std::vector<Sse> kids;
  bool changed = false;
  kids.reserve(e->kids.size());
  for (const auto& k : e->kids) {
    Sse nk = rewrite(k, fn);
    changed |= nk != k;
    kids.push_back(std::move(nk));
  }
  Sse cur = changed ? detail::rebuild(*e, std::move(kids)) : e;
  if (Sse r = fn(cur)) return r;
  return cur;
}

}  // namespace symalias
