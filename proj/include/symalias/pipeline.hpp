#pragma once

#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "symalias/icall.hpp"
#include "symalias/oracle.hpp"
#include "symalias/taint.hpp"

namespace symalias {

inline constexpr int kReportSchemaVersion = 1;

// Bad IR, bad config, bad seed spec, unreadable file: exit code 2.
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class ReportFormat { Json, Text };

struct RunConfig {
  std::string ir_path;
  std::optional<std::string> config_path;
  // Precedence: defaults < config "caps" < SYMALIAS_CAPS < this.
  std::optional<std::string> caps_override;
  bool enable_icall = true;
  bool parallel = true;
  std::vector<std::string> seeds;  // "function:block[:pos]:expr"
  std::optional<std::string> out_path;
  ReportFormat format = ReportFormat::Json;
  bool alert_exit = true;
};

struct SeedQuery {
  std::string spec;
  Point at;
  Sse expr;
  std::vector<std::string> aliases;  // sorted, paper notation
  // point name -> expressions live there, across root instances
  std::vector<std::pair<std::string, std::vector<std::string>>> per_point;
  bool cap_hit = false;
};

struct StageTime {
  std::string stage;
  double ms = 0;
};

struct Report {
  std::shared_ptr<const Program> program;
  std::string ir_path;
  Caps caps;
  bool icall_enabled = true;
  size_t functions = 0;
  std::vector<IcallResolution> icalls;
  IcallMetrics icall_metrics;
  TaintResult taint;
  std::vector<SeedQuery> queries;
  std::vector<StageTime> timings;
  std::vector<std::string> warnings;
  bool cap_hit = false;
};

// Parses "main:bb0:3:load(R3+0x8)" (position optional, default 0).
Seed parse_seed_spec(const Program& program, const std::string& spec);

// "main:bb0:3", "f:$entry:0", "f:$exit:0".
Point parse_point(const Program& program, const std::string& text);

// [{"a_at": point, "a": expr, "b_at": point, "b": expr,
//   "guards": [{"at": point, "cond": reg, "polarity": bool}]}]
std::vector<oracle::AliasPair> parse_pairs_json(const Program& program, const std::string& json_text);
nlohmann::json verdicts_json(const Program& program, const std::vector<oracle::AliasPair>& pairs,
                             const std::vector<oracle::PairVerdict>& verdicts);

Caps caps_from_config_text(const std::string& json_text, Caps base);

// Runs the full pipeline on an already-loaded program.
Report analyze_program(const Program& program, const TaintModels& models, const RunConfig& cfg,
                       Caps caps);
// Loads IR and config from disk; throws InputError.
Report analyze(const RunConfig& cfg);

int exit_code(const Report& report, const RunConfig& cfg);

nlohmann::json icalls_json(const std::vector<IcallResolution>& res, const Program& program);
nlohmann::json queries_json(const std::vector<SeedQuery>& queries);
nlohmann::json report_json(const Report& report, bool with_timings = true);
std::string report_text(const Report& report);

}  // namespace symalias
