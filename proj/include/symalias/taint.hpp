#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "symalias/alias.hpp"

namespace symalias {

enum class SinkClass { CopyLike, FormatLike, CommandExec };
std::string_view to_string(SinkClass c);

struct SourceModel {
  std::string name;
  std::optional<uint32_t> buffer_arg;  // pointee tainted after the call
  bool taints_return = false;          // getenv
  std::optional<uint32_t> length_arg;
  std::optional<uint32_t> fd_arg;      // read-like: filtered when opened from a constant path
};

struct SinkModel {
  std::string name;
  SinkClass cls = SinkClass::CopyLike;
  std::vector<uint32_t> src_args;
  std::optional<uint32_t> dst_arg;
  std::optional<uint32_t> len_arg;
};

// to == kReturn means the return value.
struct SummaryFlow {
  static constexpr int32_t kReturn = -1;
  uint32_t from = 0;
  int32_t to = 0;
  friend bool operator==(const SummaryFlow&, const SummaryFlow&) = default;
};

struct LibrarySummary {
  std::string name;
  std::string category;  // "String Copy", "String Index", ...
  std::vector<SummaryFlow> flows;
};

struct TaintModels {
  std::vector<SourceModel> sources;
  std::vector<SinkModel> sinks;
  std::vector<LibrarySummary> summaries;

  const SourceModel* source(std::string_view name) const;
  const SinkModel* sink(std::string_view name) const;
  const LibrarySummary* summary(std::string_view name) const;
};

TaintModels default_models();

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Config JSON with optional `sources`, `sinks` and `summaries` arrays; entries
// replace defaults of the same name or add new ones. Throws ConfigError and
// leaves `base` untouched on malformed input.
TaintModels load_models_text(const std::string& json_text, const TaintModels& base);
TaintModels load_models(const std::string& path);

// Tightest upper bound on the tainted length implied by a constraint set.
struct LengthBound {
  enum class Kind { None, Constant, Symbolic };
  Kind kind = Kind::None;
  uint64_t value = 0;
};
LengthBound length_bound(const std::vector<Constraint>& cs);

struct Alert {
  StmtId sink_site;
  std::string sink_fn;
  SinkClass cls = SinkClass::CopyLike;
  std::string tainted_expr;
  std::vector<Constraint> constraints;
  std::optional<uint64_t> capacity;
  std::optional<uint64_t> bound;
  std::vector<StmtId> chain;  // source, then trigger points
  std::string rationale;
};

struct SourceSite {
  StmtId site;
  std::string fn;
  bool filtered = false;  // fd traced to a constant-path open
};

struct TaintMetrics {
  size_t analyzed_functions = 0;
  size_t covered_blocks = 0;
  size_t tainted_blocks = 0;
  size_t tainted_sinks = 0;
  size_t alerts = 0;
  friend bool operator==(const TaintMetrics&, const TaintMetrics&) = default;
};

struct TaintResult {
  std::vector<SourceSite> sources;
  std::vector<Alert> alerts;  // sorted by sink site
  TaintMetrics metrics;
  std::set<std::pair<uint32_t, uint32_t>> tainted_blocks;  // (function, block)
  bool cap_hit = false;
  uint32_t rounds = 0;
  std::vector<std::string> warnings;
};

// Value of an expression at a point: SP+k resolved to a frame capacity.
std::optional<uint64_t> stack_capacity(Engine& engine, Point at, Reg dst);

class TaintAnalysis {
 public:
  TaintAnalysis(const Program& program, TaintModels models, Caps caps,
                std::map<StmtId, std::vector<uint32_t>> icall_targets);
  ~TaintAnalysis();

  // One job per source callsite; `parallel` runs them with OpenMP.
  TaintResult run(bool parallel = true);

 private:
  struct State;
  std::unique_ptr<State> st_;
};

bool same_alerts(const std::vector<Alert>& a, const std::vector<Alert>& b);

}  // namespace symalias
