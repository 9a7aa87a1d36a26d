#pragma once

#include <cstdint>
#include <limits>
#include <set>
#include <string>
#include <vector>

#include "symalias/microir.hpp"

namespace symalias {

inline constexpr uint32_t kNoBlock = std::numeric_limits<uint32_t>::max();

// A CFG node covers the statement range [begin, end) of one source block.
// Call statements always get a node of their own.
struct CfgBlock {
  uint32_t orig_block = kNoBlock;  // kNoBlock for the synthetic exit
  uint32_t begin = 0, end = 0;
  std::vector<uint32_t> succs, preds;
  bool is_callsite = false;
  bool reachable = false;
  bool in_loop = false;
  uint32_t loop_header = kNoBlock;  // innermost enclosing loop header

  uint32_t size() const { return end - begin; }
};

struct Cfg {
  uint32_t func = 0;
  std::vector<CfgBlock> blocks;
  uint32_t entry = 0;
  uint32_t exit = 0;
  std::vector<std::pair<uint32_t, uint32_t>> back_edges;
  std::vector<std::string> warnings;

  size_t num_edges() const;
  // CFG node holding statement `index` of source block `orig`.
  uint32_t block_of(uint32_t orig, uint32_t index) const;
  const Statement& stmt(const Function& fn, uint32_t block, uint32_t pos) const {
    const CfgBlock& b = blocks[block];
    return fn.blocks[b.orig_block].statements[b.begin + pos];
  }
};

Cfg build_cfg(const Program& program, uint32_t func);
std::vector<Cfg> build_all_cfgs(const Program& program);

// Reachable blocks, each after all of its successors on the DFS tree.
std::vector<uint32_t> postorder(const Cfg& cfg);

std::string to_dot(const Cfg& cfg, const Program& program);

struct CallEdge {
  uint32_t caller = 0;
  uint32_t callee = 0;
  StmtId site;
  bool indirect = false;
  friend bool operator==(const CallEdge&, const CallEdge&) = default;
};

struct CallGraph {
  std::vector<std::string> nodes;
  std::vector<CallEdge> edges;
  std::vector<StmtId> icall_sites;

  std::vector<uint32_t> callees(uint32_t f) const;
  std::vector<const CallEdge*> callers(uint32_t f) const;
  std::vector<uint32_t> targets_at(const StmtId& site) const;
};

CallGraph build_call_graph(const Program& program);

using AddressTakenSet = std::set<uint64_t>;
AddressTakenSet find_address_taken(const Program& program);

}  // namespace symalias
