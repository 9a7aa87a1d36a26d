#pragma once

#include <string>
#include <vector>

#include "symalias/alias.hpp"

namespace symalias {

enum class IcallPattern { DirectFptr, TableStride, GptrLoad, GptrTable, Unresolved };
std::string_view to_string(IcallPattern p);

// An expression at a program point (function taken from the point).
struct LocatedSse {
  Point at;
  Sse expr;
};

struct PointerRef {
  enum class Kind { Fptr, Dptr };
  Kind kind = Kind::Fptr;
  bool in_data = false;     // a data word rather than a code immediate
  StmtId site;              // code references
  uint64_t data_address = 0;  // data references: address of the word
  uint64_t value = 0;       // function entry (fptr) or table base (dptr)
  uint64_t extent_end = 0;  // dptr: first address past the table
  std::vector<LocatedSse> aliases;  // Pexpr
};

struct IcallResolution {
  StmtId callsite;
  std::vector<uint32_t> targets;  // function indices, sorted
  IcallPattern pattern = IcallPattern::Unresolved;
  bool null_target = false;
  uint64_t stride = 0, field_offset = 0;
  std::string ct_evidence, p_evidence;

  bool resolved() const { return !targets.empty(); }
};

struct IcallMetrics {
  size_t all = 0, resolved = 0, targets = 0;
  double percent = 0.0;
};

std::vector<StmtId> find_icall_sites(const Program& program);

// References without aliases; see compute_pointer_aliases.
std::vector<PointerRef> collect_pointer_refs(const Program& program,
                                             const AddressTakenSet& address_taken);
void compute_pointer_aliases(Engine& engine, std::vector<PointerRef>& refs);

// Backward alias set of the call target register at the callsite.
std::vector<LocatedSse> call_target_aliases(Engine& engine, const StmtId& site);

IcallResolution resolve(const Program& program, const StmtId& site,
                        const std::vector<LocatedSse>& ctexprs, const std::vector<PointerRef>& refs);

CallGraph augment_callgraph(const CallGraph& cg, const std::vector<IcallResolution>& res);

IcallMetrics icall_metrics(const std::vector<IcallResolution>& res);

// Whole stage: refs, call-target queries and matching, iterated until the
// target sets stop growing; installs the targets into the engine.
std::vector<IcallResolution> resolve_icalls(Engine& engine);

}  // namespace symalias
