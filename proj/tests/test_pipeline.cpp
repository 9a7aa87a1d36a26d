#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>

#include "json.hpp"
#include "symalias/pipeline.hpp"

using namespace symalias;
using nlohmann::json;

namespace {

std::string corpus_path(const std::string& name) { return std::string(SYMALIAS_CORPUS) + "/" + name; }

RunConfig config_for(const std::string& name) {
  RunConfig c;
  c.ir_path = corpus_path(name);
  return c;
}

std::string temp_file(const std::string& name, const std::string& body) {
  auto path = std::filesystem::temp_directory_path() / ("symalias_test_" + name);
  std::ofstream(path) << body;
  return path.string();
}

json strip_timings(json j) {
  j.erase("timings");
  return j;
}

}  // namespace

TEST(Pipeline, CorpusMatchesExpected) {
  std::ifstream in(corpus_path("expected.json"));
  json exp = json::parse(in);
  for (const auto& [name, e] : exp.items()) {
    Report r = analyze(config_for(name));
    json j = report_json(r);
    EXPECT_EQ(j["icalls"]["all_icalls"], e["all_icalls"]) << name;
    EXPECT_EQ(j["icalls"]["resolved_icalls"], e["resolved_icalls"]) << name;
    EXPECT_EQ(j["icalls"]["icall_targets"], e["icall_targets"]) << name;
    std::vector<std::string> sinks;
    for (const auto& a : j["alerts"]) sinks.push_back(a["sink_fn"]);
    EXPECT_EQ(sinks, e["alert_sinks"].get<std::vector<std::string>>()) << name;
    EXPECT_FALSE(r.cap_hit) << name;
  }
}

TEST(Pipeline, ReportShape) {
  Report r = analyze(config_for("listing1.ir"));
  json j = report_json(r);
  EXPECT_EQ(j["schema_version"], kReportSchemaVersion);
  EXPECT_EQ(j["functions"], 4);
  EXPECT_EQ(j["icall_resolution"], true);
  ASSERT_EQ(j["icalls"]["sites"].size(), 2u);
  const json& table = j["icalls"]["sites"][1];
  EXPECT_EQ(table["pattern"], "table-stride");
  EXPECT_EQ(table["stride"], 8);
  EXPECT_EQ(table["field_offset"], 4);
  EXPECT_EQ(table["targets"], (json{"get_handler", "set_handler"}));
  for (const char* s : {"parse_ms", "cfg_ms", "icall_ms", "taint_ms", "total_ms"})
    EXPECT_TRUE(j["timings"].contains(s)) << s;
  EXPECT_FALSE(report_json(r, false).contains("timings"));
}

TEST(Pipeline, DeterministicModuloTimings) {
  for (const char* f : {"listing1.ir", "overflow_icall.ir", "server_loop.ir"}) {
    RunConfig a = config_for(f), b = config_for(f);
    b.parallel = false;
    EXPECT_EQ(strip_timings(report_json(analyze(a))).dump(), strip_timings(report_json(analyze(b))).dump()) << f;
  }
}

TEST(Pipeline, ExitCodes) {
  RunConfig c = config_for("overflow_icall.ir");
  Report r = analyze(c);
  EXPECT_EQ(exit_code(r, c), 1);
  c.alert_exit = false;
  EXPECT_EQ(exit_code(r, c), 0);
  RunConfig q = config_for("overflow_icall_checked.ir");
  EXPECT_EQ(exit_code(analyze(q), q), 0);
}

TEST(Pipeline, NoIcallAblation) {
  RunConfig c = config_for("overflow_icall.ir");
  c.enable_icall = false;
  Report r = analyze(c);
  EXPECT_TRUE(r.taint.alerts.empty());
  EXPECT_EQ(r.icall_metrics.all, 1u);
  EXPECT_EQ(r.icall_metrics.resolved, 0u);
  EXPECT_EQ(report_json(r)["icall_resolution"], false);
}

TEST(Pipeline, InputErrors) {
  EXPECT_THROW(analyze(config_for("does_not_exist.ir")), InputError);
  RunConfig bad;
  bad.ir_path = temp_file("bad.ir", "func main @0x1000 {\nbb0:\n  r1 = frob r2\n}\n");
  try {
    analyze(bad);
    FAIL() << "no error";
  } catch (const InputError& e) {
    EXPECT_NE(std::string(e.what()).find("line 3"), std::string::npos) << e.what();
  }
  RunConfig cfg = config_for("listing1.ir");
  cfg.config_path = temp_file("bad.json", "{\"sinks\": 3}");
  EXPECT_THROW(analyze(cfg), InputError);
  cfg.config_path.reset();
  cfg.caps_override = "alias_set=zero";
  EXPECT_THROW(analyze(cfg), InputError);
  cfg.caps_override.reset();
  cfg.seeds = {"main:nowhere:R1"};
  EXPECT_THROW(analyze(cfg), InputError);
}

TEST(Pipeline, CapPrecedence) {
  const std::string conf = temp_file("caps.json", R"({"caps": {"alias_set": 100, "loop_k": 5}})");
  RunConfig c = config_for("empty.ir");
  c.config_path = conf;
  unsetenv("SYMALIAS_CAPS");
  Report r = analyze(c);
  EXPECT_EQ(r.caps.alias_set, 100u);
  EXPECT_EQ(r.caps.loop_k, 5u);
  setenv("SYMALIAS_CAPS", "alias_set=50", 1);
  r = analyze(c);
  EXPECT_EQ(r.caps.alias_set, 50u);
  EXPECT_EQ(r.caps.loop_k, 5u);
  c.caps_override = "alias_set=25";
  r = analyze(c);
  EXPECT_EQ(r.caps.alias_set, 25u);
  unsetenv("SYMALIAS_CAPS");

  EXPECT_EQ(caps_from_config_text("{}", Caps{}).to_string(), Caps{}.to_string());
  EXPECT_THROW(caps_from_config_text(R"({"caps": {"alias_set": -1}})", Caps{}), ConfigError);
  EXPECT_THROW(caps_from_config_text(R"({"caps": {"nope": 1}})", Caps{}), ConfigError);
  EXPECT_THROW(caps_from_config_text(R"({"caps": [1]})", Caps{}), ConfigError);
}

TEST(Pipeline, SeedSpecsAndPoints) {
  Program p = parse_program_file(corpus_path("listing1.ir"));
  Seed s = parse_seed_spec(p, "main:found:1:R4");
  EXPECT_EQ(s.at, (Point{0, *p.functions[0].block_index("found"), 1}));
  EXPECT_EQ(sse::to_string(s.expr), "R4");
  Seed d = parse_seed_spec(p, "main:bb0:load(SP+0x10)");
  EXPECT_EQ(d.at, (Point{0, 0, 0}));
  EXPECT_EQ(sse::to_string(d.expr), "load(SP+0x10)");
  for (const char* bad : {"", "main", "main:bb0", "nope:bb0:R1", "main:bb0:99:R1", "main:bb0:0:R1+"})
    EXPECT_THROW(parse_seed_spec(p, bad), InputError) << bad;

  EXPECT_EQ(parse_point(p, "main:$entry:0").block, Point::kPrologue);
  EXPECT_EQ(parse_point(p, "main:$exit:0").block, Point::kExit);
  EXPECT_EQ(point_name(parse_point(p, "main:loop:2"), &p), "main:loop:2");
  EXPECT_THROW(parse_point(p, "main:loop"), InputError);
}

TEST(Pipeline, SeedQueriesInReport) {
  RunConfig c = config_for("intuitive.ir");
  c.seeds = {"main:bb0:0:load(R3+0x8)"};
  Report r = analyze(c);
  ASSERT_EQ(r.queries.size(), 1u);
  EXPECT_EQ(r.queries[0].aliases, (std::vector<std::string>{"R1", "load(R3+0x8)", "load(store(R6+0x4)+0x8)"}));
  json j = report_json(r);
  ASSERT_TRUE(j.contains("queries"));
  EXPECT_EQ(j["queries"][0]["aliases"].size(), 3u);
  EXPECT_FALSE(report_json(analyze(config_for("intuitive.ir"))).contains("queries"));
}

TEST(Pipeline, PairsFileRoundTrip) {
  Program p = parse_program_file(corpus_path("complex.ir"));
  auto pairs = parse_pairs_json(p, R"([
    {"a_at": "main:bb0:3", "a": "R1", "b_at": "main:bb0:5", "b": "R0"},
    {"a_at": "main:bb0:3", "a": "R1", "b_at": "main:bb0:1", "b": "R2",
     "guards": [{"at": "main:bb0:0", "cond": "r6", "polarity": true}]}
  ])");
  ASSERT_EQ(pairs.size(), 2u);
  EXPECT_EQ(pairs[1].guards.size(), 1u);
  EXPECT_EQ(pairs[1].guards[0].cond, Reg::r(6));
  auto verdicts = oracle::certify_all(p, pairs, oracle::CertifyConfig{});
  json v = verdicts_json(p, pairs, verdicts);
  EXPECT_EQ(v[0]["verdict"], "pass");
  EXPECT_EQ(v[0]["a_at"], "main:bb0:3");
  EXPECT_EQ(v[1]["verdict"], "fail");
  EXPECT_TRUE(v[1].contains("counterexample"));
  for (const char* bad : {"{}", "[{\"a_at\": \"main:bb0:3\"}]", "[{\"a_at\": \"main:bb0:3\", \"a\": \"R1+\", "
                                                                "\"b_at\": \"main:bb0:3\", \"b\": \"R1\"}]"})
    EXPECT_THROW(parse_pairs_json(p, bad), InputError) << bad;
}

TEST(Pipeline, EmptyProgram) {
  Report r = analyze(config_for("empty.ir"));
  json j = report_json(r);
  EXPECT_EQ(j["functions"], 0);
  EXPECT_EQ(j["icalls"]["all_icalls"], 0);
  EXPECT_EQ(j["icalls"]["percent_resolved"], 0.0);
  EXPECT_EQ(j["taint"]["alerts"], 0);
  EXPECT_TRUE(j["alerts"].empty());
}

TEST(Pipeline, TextReport) {
  std::string t = report_text(analyze(config_for("overflow_icall.ir")));
  for (const char* col : {"All I-Calls", "Resolved I-Calls", "Ana. Func", "Tainted Sinks", "Alerts", "strcpy"})
    EXPECT_NE(t.find(col), std::string::npos) << col;
}
