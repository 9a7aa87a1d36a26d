#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "symalias/cfg.hpp"
#include "symalias/microir.hpp"
#include "symalias/sse.hpp"

namespace symalias {

struct Caps {
  uint32_t sse_depth = 5;
  uint32_t alias_set = 256;
  uint32_t loop_k = 3;
  uint32_t block_iter = 64;
  uint32_t recursion = 8;

  // "sse_depth=5,alias_set=256,..."; unknown keys or zero values throw.
  static Caps parse(std::string_view text, Caps base);
  static Caps parse(std::string_view text);
  // Reads SYMALIAS_CAPS when set.
  static Caps from_env(Caps base);
  static Caps from_env();
  std::string to_string() const;
};

enum class Dir : uint8_t { Fwd = 1, Bwd = 2, Both = 3 };
inline bool has_fwd(Dir d) { return static_cast<uint8_t>(d) & 1; }
inline bool has_bwd(Dir d) { return static_cast<uint8_t>(d) & 2; }

// The ITE condition a derivation relied on: `cond` evaluated at `site` is
// nonzero iff `polarity`.
struct Guard {
  Point site;
  Reg cond;
  bool polarity = true;
  friend bool operator==(const Guard&, const Guard&) = default;
};

// ---- single-statement rule application

struct Derived {
  Sse expr;
  uint32_t pos = 0;  // point the result lives at
  int rule = 0;
  Dir dir = Dir::Fwd;
  std::optional<Guard> guard;
};

struct StepResult {
  std::vector<Derived> out;  // at the point after (forward) or before (backward)
  bool killed = false;
  int kill_rule = 0;  // 14, 15, or the definition rule that consumed it
};

// `block` holds the statements of the block containing at.pos; e is live at
// point at (before the statement) for forward steps and at at.pos + 1 for
// backward steps. Calls are not handled here.
StepResult step_forward(const std::vector<Statement>& block, Point at, const Sse& e,
                        uint32_t depth_cap = sse::kDefaultDepthCap);
StepResult step_backward(const std::vector<Statement>& block, Point at, const Sse& e,
                         uint32_t depth_cap = sse::kDefaultDepthCap);

// True when no store to `addr` sits between positions a and b of the block.
bool mem_stable(const std::vector<Statement>& block, Point at, const Sse& addr, const Point& site);

// Address operand of a load/store statement as an expression.
Sse address_expr(const Address& a);
Sse operand_expr(const Operand& o);

// ---- taint classes and constraint sets (interned, shared by all jobs)

struct TaintClass {
  StmtId source;
  std::vector<StmtId> chain;  // trigger sites; the last one is the live trigger
  friend auto operator<=>(const TaintClass&, const TaintClass&) = default;
};

// `tainted-length rel bound` established at `site`.
struct Constraint {
  BinOpKind rel = BinOpKind::CmpLt;
  Sse bound;
  StmtId site;
  bool source_length = false;
};

class Interner {
 public:
  uint32_t intern_class(const TaintClass& c);
  TaintClass klass(uint32_t id) const;
  uint32_t intern_cset(std::vector<Constraint> cs);
  std::vector<Constraint> cset(uint32_t id) const;
  uint32_t cset_with(uint32_t base, const Constraint& c);

 private:
  mutable std::mutex mu_;
  std::vector<TaintClass> classes_{TaintClass{}};
  std::map<TaintClass, uint32_t> class_ids_;
  std::vector<std::vector<Constraint>> csets_{{}};
  std::map<std::string, uint32_t> cset_ids_;
};

// ---- facts and instances

struct Fact {
  Sse expr;
  Point at;
  bool tainted = false;
  uint32_t cls = 0;
  uint32_t cset = 0;
  bool fwd = false, bwd = false;  // requested walking directions
  bool walked_fwd = false, walked_bwd = false;
  int32_t parent = -1;
  int rule = 0;
  std::optional<Guard> guard;
};

struct Seed {
  Point at;
  Sse expr;
  Dir dir = Dir::Both;
  bool tainted = false;
  uint32_t cls = 0;
  uint32_t cset = 0;
};

struct Export {
  Sse expr;
  bool tainted = false;
  uint32_t cls = 0;
  uint32_t cset = 0;
};

// One analyzed function under one seed context.
struct Instance {
  uint32_t id = 0;
  uint32_t func = 0;
  std::string origin;  // "root", "down:<callee key>", "up:<callsite>"
  std::vector<Fact> facts;
  std::vector<Export> entry_exports;  // rooted backward facts at the prologue start
  std::vector<Export> exit_exports;   // rooted forward facts at the exit
  std::vector<std::shared_ptr<const Instance>> children;  // descents used
  bool cap_hit = false;
  bool provisional = false;  // depended on an unfinished recursive summary

  std::vector<uint32_t> facts_at(const Point& p) const;
  // Rules along the parent chain, oldest first, skipping pass-through steps.
  std::vector<int> rule_trace(uint32_t fact) const;
  std::vector<Guard> guards(uint32_t fact) const;
};

// ---- summaries

struct FunctionSummary {
  std::vector<Sse> mod;  // store(...) in parameter/gp terms
  std::vector<Sse> ref;  // load(...) in parameter/gp terms
  bool has_gp = false;
};

// Extension points for the taint layer.
class Hooks {
 public:
  virtual ~Hooks() = default;
  // A fact reached external call `s` (pos 0 of `at`); may add seeds to the
  // current instance.
  virtual void at_external_call(const Statement& s, Point at, const Fact& f, bool forward,
                                std::vector<Seed>& spawn) {
    (void)s, (void)at, (void)f, (void)forward, (void)spawn;
  }
  // A tainted fact is about to be stepped forward over non-call statement `s`
  // (at `at`); values computed from it may be seeded.
  virtual void at_statement(const Statement& s, Point at, const Fact& f, std::vector<Seed>& spawn) {
    (void)s, (void)at, (void)f, (void)spawn;
  }
  // New constraint set for a fact crossing the CFG edge from -> to, walking
  // forward or (against the edge) backward.
  virtual uint32_t cross_edge(uint32_t func, uint32_t from_block, uint32_t to_block,
                              const Fact& f, bool forward) {
    (void)func, (void)from_block, (void)to_block, (void)forward;
    return f.cset;
  }
  // Changes whenever cross_edge could answer differently for this class.
  virtual uint64_t version(uint32_t cls) const {
    (void)cls;
    return 0;
  }
};

struct QueryOptions {
  bool descend = true;
  bool upward = true;
};

struct QueryResult {
  std::vector<std::shared_ptr<const Instance>> roots;  // root and upward instances
  std::vector<std::shared_ptr<const Instance>> all;    // roots plus every reachable descent
  bool cap_hit = false;
  std::vector<std::string> warnings;
};

class Engine {
 public:
  Engine(const Program& program, Caps caps = {}, Hooks* hooks = nullptr,
         Interner* interner = nullptr);
  ~Engine();

  const Program& program() const { return program_; }
  const Caps& caps() const { return caps_; }
  const Cfg& cfg(uint32_t f) const { return cfgs_[f]; }
  const CallGraph& call_graph() const { return cg_; }
  Interner& interner() { return *interner_; }

  // Adds indirect edges and recomputes MOD/REF; clears the descent cache.
  void set_icall_targets(const std::map<StmtId, std::vector<uint32_t>>& targets);
  const std::map<StmtId, std::vector<uint32_t>>& icall_targets() const { return icall_targets_; }
  const FunctionSummary& summary(uint32_t f) const { return summaries_[f]; }
  void clear_cache();

  QueryResult query(const std::vector<Seed>& seeds, QueryOptions opts = {});

  // Functions whose facts were computed since construction (demand-driven locality).
  std::vector<uint32_t> visited_functions() const;

  // Block structure at source level.
  struct BlockInfo {
    std::vector<uint32_t> succs, preds;
    bool returns = false;
    bool in_loop = false;
    uint32_t loop_header = 0;  // innermost enclosing loop header block
  };
  const BlockInfo& block_info(uint32_t f, uint32_t b) const { return blocks_[f][b]; }
  const std::vector<Statement>& prologue(uint32_t f) const { return prologues_[f]; }

 private:
  friend class InstanceRunner;
  struct Impl;
  std::unique_ptr<Impl> impl_;
  const Program& program_;
  Caps caps_;
  Hooks* hooks_;
  std::unique_ptr<Interner> own_interner_;
  Interner* interner_;
  std::vector<Cfg> cfgs_;
  CallGraph cg_;
  std::map<StmtId, std::vector<uint32_t>> icall_targets_;
  std::vector<FunctionSummary> summaries_;
  std::vector<std::vector<BlockInfo>> blocks_;
  std::vector<std::vector<Statement>> prologues_;

  void compute_block_info();
  void compute_modref();
};

// ---- spec-level wrappers over the per-block rules

struct BlockState {
  std::vector<Sse> in_f, in_b;  // live at block start (forward) / end (backward)
  std::vector<std::pair<uint32_t, Sse>> target_f, target_b;  // seeds at positions
  std::vector<Sse> out_f, out_b;
  std::vector<std::pair<uint32_t, Sse>> all;  // every (position, expr) reached
  bool divergent = false;
};

// One forward pass over the block from its start; returns new forward and
// backward-tracked expressions with their positions.
struct UpdateResult {
  std::vector<std::pair<uint32_t, Sse>> new_f, new_b;
};
UpdateResult forward_update(const std::vector<Statement>& block, Point start,
                            const std::vector<std::pair<uint32_t, Sse>>& live,
                            uint32_t depth_cap = sse::kDefaultDepthCap);
UpdateResult backward_update(const std::vector<Statement>& block, Point start,
                             const std::vector<std::pair<uint32_t, Sse>>& live,
                             uint32_t depth_cap = sse::kDefaultDepthCap);
// Alternates forward and backward updates until nothing new appears.
void trace_block(const std::vector<Statement>& block, Point start, BlockState& st,
                 uint32_t max_rounds = 64, uint32_t depth_cap = sse::kDefaultDepthCap);

// Caller-side view of callee MOD entries at a callsite.
std::vector<Sse> transfer_mod(const FunctionSummary& callee, const std::vector<Operand>& args,
                              Point callsite);

// Distinct program-level expressions of an instance: real blocks only, no
// parameter or return pseudo registers.
std::vector<Sse> alias_set(const Instance& inst);

}  // namespace symalias
