#pragma once

#include <deque>
#include <functional>
#include <set>
#include <unordered_map>
#include <unordered_set>

#include "symalias/alias.hpp"

namespace symalias {

// Substitutes registers through `map` (nullopt aborts) and moves every memory
// node to `site`.
std::optional<Sse> substitute(const Sse& e, const std::function<std::optional<Sse>(Reg)>& map,
                              Point site);

struct DescentKey {
  uint32_t callee = 0;
  bool forward = true;
  Sse expr;
  bool tainted = false;
  uint32_t cls = 0, cset = 0;
  uint64_t version = 0;

  bool operator==(const DescentKey& o) const {
    return callee == o.callee && forward == o.forward && tainted == o.tainted && cls == o.cls &&
           cset == o.cset && version == o.version && sse::equal(expr, o.expr);
  }
};

struct DescentKeyHash {
  size_t operator()(const DescentKey& k) const {
    size_t h = k.expr->hash;
    h = h * 31 + k.callee;
    h = h * 31 + (k.forward ? 1 : 2);
    h = h * 31 + (k.tainted ? 7 : 3);
    h = h * 31 + k.cls;
    h = h * 31 + k.cset;
    h = h * 31 + static_cast<size_t>(k.version);
    return h;
  }
};

struct Engine::Impl {
  std::mutex mu;
  std::unordered_map<DescentKey, std::shared_ptr<const Instance>, DescentKeyHash> cache;
  std::set<uint32_t> visited;
  uint32_t next_id = 1;

  uint32_t new_id() {
    std::lock_guard<std::mutex> g(mu);
    return next_id++;
  }
};

// Worklist analysis of one function for one seed context.
class InstanceRunner {
 public:
  InstanceRunner(Engine& engine, uint32_t func, QueryOptions opts, std::string origin);

  void add_seed(const Seed& s);
  void run();
  std::shared_ptr<Instance> finish();

  // Cached callee analysis for one translated item.
  static std::shared_ptr<const Instance> descent(Engine& engine, const DescentKey& key,
                                                 QueryOptions opts);
  static Engine::Impl& impl(Engine& e) { return *e.impl_; }

 private:
  struct Key {
    Sse expr;
    Point at;
    bool tainted;
    uint32_t cls, cset;
    bool operator==(const Key& o) const {
      return at == o.at && tainted == o.tainted && cls == o.cls && cset == o.cset &&
             sse::equal(expr, o.expr);
    }
  };
  struct KeyHash {
    size_t operator()(const Key& k) const {
      return k.expr->hash ^ (k.at.block * 0x9e3779b9u + k.at.pos * 131u + k.cls * 17u +
                             k.cset * 7u + (k.tainted ? 1u : 0u));
    }
  };
  struct FamilyKey {
    size_t position;
    Sse skeleton;
    bool operator==(const FamilyKey& o) const {
      return position == o.position && sse::equal(skeleton, o.skeleton);
    }
  };
  struct FamilyHash {
    size_t operator()(const FamilyKey& k) const { return k.skeleton->hash * 31 + k.position; }
  };
  struct LoopPoint {
    std::unordered_map<FamilyKey, std::vector<Sse>, FamilyHash> families;
    std::vector<Sse> summaries;
  };

  Engine& eng_;
  const Program& prog_;
  const Function& fn_;
  QueryOptions opts_;
  Instance inst_;
  std::unordered_map<Key, uint32_t, KeyHash> index_;
  std::unordered_set<Sse, sse::Hash, sse::Eq> distinct_;
  std::deque<std::pair<uint32_t, bool>> work_;
  std::map<Point, LoopPoint> loops_;

  int32_t add_fact(const Sse& e, Point at, Dir dir, bool tainted, uint32_t cls, uint32_t cset,
                   int32_t parent, int rule, std::optional<Guard> guard);
  void enqueue(uint32_t id, bool fwd);
  bool loop_boundary(const Point& p) const;
  void step_fwd(uint32_t id);
  void step_bwd(uint32_t id);
  const std::vector<Statement>& stmts(const Point& p) const;

  struct CallView {
    const Statement* stmt;
    std::vector<Operand> args;
    std::optional<Reg> ret;
    std::vector<uint32_t> targets;  // program functions
    bool external = false;
  };
  CallView call_view(const Statement& s) const;
  bool mod_killed(const Sse& e, const CallView& c, Point at) const;
  void call_fwd(uint32_t id, const Statement& s, Point at);
  void call_bwd(uint32_t id, const Statement& s, Point at);
  void descend(uint32_t id, const CallView& c, uint32_t callee, bool forward, Point at,
               bool tainted);
  void import_exports(const Instance& child, const CallView& c, Point at, uint32_t parent);
};

}  // namespace symalias
