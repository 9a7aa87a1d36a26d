#include <cstdio>
#include <sstream>

#include "symalias/pipeline.hpp"

namespace symalias {

namespace {

using nlohmann::json;

std::string hex(uint64_t v) {
  char buf[24];
  std::snprintf(buf, sizeof buf, "0x%llx", static_cast<unsigned long long>(v));
  return buf;
}

json opt_u64(const std::optional<uint64_t>& v) { return v ? json(*v) : json(nullptr); }

std::string constraint_text(const Constraint& c) {
  return "len " + std::string(to_symbol(c.rel)) + " " + sse::to_string(c.bound);
}

json alert_json(const Alert& a, const Program& p) {
  json cs = json::array();
  for (const auto& c : a.constraints)
    cs.push_back({{"relation", std::string(to_symbol(c.rel))},
                  {"bound", sse::to_string(c.bound)},
                  {"site", p.describe(c.site)},
                  {"source_length", c.source_length}});
  json chain = json::array();
  for (const auto& s : a.chain) chain.push_back(p.describe(s));
  return {{"sink_site", p.describe(a.sink_site)},
          {"sink_fn", a.sink_fn},
          {"class", std::string(to_string(a.cls))},
          {"tainted_expr", a.tainted_expr},
          {"constraints", cs},
          {"capacity", opt_u64(a.capacity)},
          {"bound", opt_u64(a.bound)},
          {"chain", chain},
          {"rationale", a.rationale}};
}

}  // namespace

json icalls_json(const std::vector<IcallResolution>& res, const Program& p) {
  json out = json::array();
  for (const auto& r : res) {
    json targets = json::array();
    for (uint32_t f : r.targets) targets.push_back(p.functions[f].name);
    json row = {{"callsite", p.describe(r.callsite)},
                {"pattern", std::string(to_string(r.pattern))},
                {"targets", targets},
                {"null_target", r.null_target}};
    if (r.pattern == IcallPattern::TableStride || r.pattern == IcallPattern::GptrTable) {
      row["stride"] = r.stride;
      row["field_offset"] = r.field_offset;
    }
    row["evidence"] = {{"ctexpr", r.ct_evidence}, {"pexpr", r.p_evidence}};
    out.push_back(row);
  }
  return out;
}

json queries_json(const std::vector<SeedQuery>& queries) {
  json out = json::array();
  for (const auto& q : queries) {
    json points = json::array();
    for (const auto& [name, es] : q.per_point) points.push_back({{"point", name}, {"exprs", es}});
    out.push_back({{"seed", q.spec},
                   {"aliases", q.aliases},
                   {"points", points},
                   {"cap_hit", q.cap_hit}});
  }
  return out;
}

json report_json(const Report& r, bool with_timings) {
  const Program& p = *r.program;
  const auto& m = r.taint.metrics;
  json alerts = json::array();
  for (const auto& a : r.taint.alerts) alerts.push_back(alert_json(a, p));
  json sources = json::array();
  for (const auto& s : r.taint.sources)
    sources.push_back({{"site", p.describe(s.site)}, {"fn", s.fn}, {"filtered", s.filtered}});

  json j = {
      {"schema_version", kReportSchemaVersion},
      {"ir", r.ir_path},
      {"caps", r.caps.to_string()},
      {"icall_resolution", r.icall_enabled},
      {"functions", r.functions},
      {"icalls",
       {{"all_icalls", r.icall_metrics.all},
        {"resolved_icalls", r.icall_metrics.resolved},
        {"icall_targets", r.icall_metrics.targets},
        {"percent_resolved", r.icall_metrics.percent},
        {"sites", icalls_json(r.icalls, p)}}},
      {"taint",
       {{"analyzed_functions", m.analyzed_functions},
        {"covered_blocks", m.covered_blocks},
        {"tainted_blocks", m.tainted_blocks},
        {"tainted_sinks", m.tainted_sinks},
        {"alerts", m.alerts},
        {"rounds", r.taint.rounds},
        {"sources", sources}}},
      {"alerts", alerts},
      {"warnings", r.warnings},
      {"cap_hit", r.cap_hit},
  };
  if (!r.queries.empty()) j["queries"] = queries_json(r.queries);
  if (with_timings) {
    json t = json::object();
    for (const auto& s : r.timings) t[s.stage + "_ms"] = s.ms;
    j["timings"] = t;
  }
  return j;
}

std::string report_text(const Report& r) {
  const Program& p = *r.program;
  std::ostringstream os;
  const auto& im = r.icall_metrics;
  os << "ir: " << r.ir_path << (r.icall_enabled ? "" : "  (icall resolution off)") << "\n";
  char pct[32];
  std::snprintf(pct, sizeof pct, "%.1f%%", im.percent);
  os << "\nindirect calls\n"
     << "  All I-Calls " << im.all << "  Resolved I-Calls " << im.resolved << "  I-Call targets "
     << im.targets << "  % " << pct << "\n";
  for (const auto& c : r.icalls) {
    os << "  " << p.describe(c.callsite) << "  " << to_string(c.pattern);
    if (c.stride) os << " stride " << hex(c.stride) << " off " << hex(c.field_offset);
    os << "  ->";
    for (uint32_t f : c.targets) os << " " << p.functions[f].name;
    if (c.null_target) os << " (null)";
    os << "\n";
  }
  const auto& m = r.taint.metrics;
  os << "\ntaint\n"
     << "  Ana. Func " << m.analyzed_functions << "  Covered Blocks " << m.covered_blocks
     << "  Tainted Blocks " << m.tainted_blocks << "  Tainted Sinks " << m.tainted_sinks
     << "  Alerts " << m.alerts << "\n";
  for (const auto& a : r.taint.alerts) {
    os << "\nalert " << p.describe(a.sink_site) << " " << a.sink_fn << " [" << to_string(a.cls)
       << "]\n  tainted " << a.tainted_expr << "\n";
    if (a.capacity) os << "  capacity " << hex(*a.capacity) << "\n";
    if (a.bound) os << "  bound " << hex(*a.bound) << "\n";
    for (const auto& c : a.constraints)
      os << "  constraint " << constraint_text(c) << " @" << p.describe(c.site) << "\n";
    os << "  chain";
    for (const auto& s : a.chain) os << " " << p.describe(s);
    os << "\n  " << a.rationale << "\n";
  }
  for (const auto& q : r.queries) {
    os << "\nseed " << q.spec << "\n";
    for (const auto& a : q.aliases) os << "  " << a << "\n";
  }
  for (const auto& w : r.warnings) os << "\nwarning: " << w;
  if (!r.warnings.empty()) os << "\n";
  if (r.cap_hit) os << "\nnote: an analysis cap was hit; results may be incomplete\n";
  os << "\ntimings";
  for (const auto& t : r.timings) {
    char buf[64];
    std::snprintf(buf, sizeof buf, " %s=%.2fms", t.stage.c_str(), t.ms);
    os << buf;
  }
  os << "\n";
  return os.str();
}

}  // namespace symalias
