#include "symalias/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

namespace symalias {

namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

std::string read_file(const std::string& path, const char* what) {
  std::ifstream in(path);
  if (!in) throw InputError(std::string("cannot open ") + what + " '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

bool all_digits(std::string_view s) {
  return !s.empty() && std::all_of(s.begin(), s.end(), [](char c) { return c >= '0' && c <= '9'; });
}

SeedQuery run_seed(Engine& engine, const Program& program, const std::string& spec) {
  SeedQuery sq;
  sq.spec = spec;
  Seed seed = parse_seed_spec(program, spec);
  sq.at = seed.at;
  sq.expr = seed.expr;
  QueryResult q = engine.query({seed});
  sq.cap_hit = q.cap_hit;
  std::set<std::string> names;
  std::map<Point, std::set<std::string>> by_point;
  for (const auto& inst : q.roots) {
    for (const Sse& e : alias_set(*inst)) names.insert(sse::to_string(e));
    for (const Fact& f : inst->facts) by_point[f.at].insert(sse::to_string(f.expr));
  }
  sq.aliases.assign(names.begin(), names.end());
  for (auto& [p, es] : by_point)
    sq.per_point.emplace_back(point_name(p, &program), std::vector<std::string>(es.begin(), es.end()));
  return sq;
}

}  // namespace

Seed parse_seed_spec(const Program& program, const std::string& spec) {
  auto fail = [&](const std::string& why) -> InputError {
    return InputError("bad --seed '" + spec + "': " + why);
  };
  const size_t c1 = spec.find(':');
  const size_t c2 = c1 == std::string::npos ? c1 : spec.find(':', c1 + 1);
  if (c2 == std::string::npos) throw fail("expected function:block[:pos]:expr");
  const std::string fname = spec.substr(0, c1);
  const std::string label = spec.substr(c1 + 1, c2 - c1 - 1);
  std::string rest = spec.substr(c2 + 1);
  uint32_t pos = 0;
  if (size_t c3 = rest.find(':'); c3 != std::string::npos && all_digits(rest.substr(0, c3))) {
    pos = static_cast<uint32_t>(std::stoul(rest.substr(0, c3)));
    rest = rest.substr(c3 + 1);
  }
  auto fi = program.function_index(fname);
  if (!fi) throw fail("no function '" + fname + "'");
  const Function& fn = program.functions[*fi];
  auto bi = fn.block_index(label);
  if (!bi) throw fail("no block '" + label + "' in " + fname);
  if (pos > fn.blocks[*bi].statements.size()) throw fail("position past the end of the block");
  Point at{*fi, *bi, pos};
  Seed s;
  s.at = at;
  s.dir = Dir::Both;
  try {
    s.expr = sse::parse(rest, &program, at);
  } catch (const std::exception& e) {
    throw fail(e.what());
  }
  return s;
}

Point parse_point(const Program& program, const std::string& text) {
  const size_t c1 = text.find(':');
  const size_t c2 = text.rfind(':');
  if (c1 == std::string::npos || c2 == c1 || !all_digits(text.substr(c2 + 1)))
    throw InputError("bad point '" + text + "': expected function:block:pos");
  const std::string fname = text.substr(0, c1), label = text.substr(c1 + 1, c2 - c1 - 1);
  auto fi = program.function_index(fname);
  if (!fi) throw InputError("bad point '" + text + "': no function '" + fname + "'");
  const auto pos = static_cast<uint32_t>(std::stoul(text.substr(c2 + 1)));
  if (label == "$entry") return {*fi, Point::kPrologue, pos};
  if (label == "$exit") return {*fi, Point::kExit, pos};
  auto bi = program.functions[*fi].block_index(label);
  if (!bi) throw InputError("bad point '" + text + "': no block '" + label + "'");
  if (pos > program.functions[*fi].blocks[*bi].statements.size())
    throw InputError("bad point '" + text + "': position past the end of the block");
  return {*fi, *bi, pos};
}

std::vector<oracle::AliasPair> parse_pairs_json(const Program& program, const std::string& json_text) {
  std::vector<oracle::AliasPair> out;
  try {
    auto j = nlohmann::json::parse(json_text);
    if (!j.is_array()) throw InputError("pairs file must hold a JSON array");
    for (const auto& e : j) {
      oracle::AliasPair ap;
      ap.a_at = parse_point(program, e.at("a_at").get<std::string>());
      ap.b_at = parse_point(program, e.at("b_at").get<std::string>());
      ap.a = sse::parse(e.at("a").get<std::string>(), &program, ap.a_at);
      ap.b = sse::parse(e.at("b").get<std::string>(), &program, ap.b_at);
      for (const auto& g : e.value("guards", nlohmann::json::array())) {
        auto r = parse_register(g.at("cond").get<std::string>());
        if (!r) throw InputError("bad guard register '" + g.at("cond").get<std::string>() + "'");
        ap.guards.push_back({parse_point(program, g.at("at").get<std::string>()), *r,
                             g.value("polarity", true)});
      }
      out.push_back(std::move(ap));
    }
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("malformed pairs file: ") + e.what());
  } catch (const InputError&) {
    throw;
  } catch (const std::exception& e) {
    throw InputError(std::string("bad pair expression: ") + e.what());
  }
  return out;
}

nlohmann::json verdicts_json(const Program& program, const std::vector<oracle::AliasPair>& pairs,
                             const std::vector<oracle::PairVerdict>& verdicts) {
  nlohmann::json out = nlohmann::json::array();
  for (size_t i = 0; i < pairs.size(); ++i) {
    const auto& ap = pairs[i];
    const auto& v = verdicts[i];
    nlohmann::json row = {{"a_at", point_name(ap.a_at, &program)},
                          {"a", sse::to_string(ap.a)},
                          {"b_at", point_name(ap.b_at, &program)},
                          {"b", sse::to_string(ap.b)},
                          {"verdict", std::string(oracle::to_string(v.verdict))},
                          {"runs_compared", v.runs_compared}};
    if (v.counterexample)
      row["counterexample"] = {{"seed", v.counterexample->seed},
                               {"small_values", v.counterexample->small_values},
                               {"a_value", v.counterexample->a_value},
                               {"b_value", v.counterexample->b_value}};
    out.push_back(row);
  }
  return out;
}

Caps caps_from_config_text(const std::string& json_text, Caps base) {
  nlohmann::json cfg;
  try {
    cfg = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed config: ") + e.what());
  }
  if (!cfg.is_object() || !cfg.contains("caps")) return base;
  const auto& c = cfg["caps"];
  if (!c.is_object()) throw ConfigError("\"caps\" must be an object");
  std::string text;
  for (const auto& [k, v] : c.items()) {
    if (!v.is_number_unsigned()) throw ConfigError("cap '" + k + "' needs a positive integer");
    text += k + "=" + std::to_string(v.get<uint64_t>()) + ",";
  }
  try {
    return Caps::parse(text, base);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
}

Report analyze_program(const Program& program, const TaintModels& models, const RunConfig& cfg,
                       Caps caps) {
  Report r;
  r.program = std::make_shared<const Program>(program);
  const Program& p = *r.program;
  r.ir_path = cfg.ir_path;
  r.caps = caps;
  r.icall_enabled = cfg.enable_icall;
  r.functions = p.functions.size();

  auto t = Clock::now();
  Engine engine(p, caps);
  r.timings.push_back({"cfg", ms_since(t)});

  t = Clock::now();
  if (cfg.enable_icall) {
    r.icalls = resolve_icalls(engine);
  } else {
    for (const StmtId& s : find_icall_sites(p)) {
      IcallResolution u;
      u.callsite = s;
      r.icalls.push_back(std::move(u));
    }
  }
  r.icall_metrics = icall_metrics(r.icalls);
  r.timings.push_back({"icall", ms_since(t)});

  t = Clock::now();
  TaintAnalysis ta(p, models, caps, engine.icall_targets());
  r.taint = ta.run(cfg.parallel);
  r.timings.push_back({"taint", ms_since(t)});
  r.cap_hit = r.taint.cap_hit;
  r.warnings = r.taint.warnings;

  t = Clock::now();
  for (const auto& spec : cfg.seeds) {
    r.queries.push_back(run_seed(engine, p, spec));
    r.cap_hit |= r.queries.back().cap_hit;
  }
  if (!cfg.seeds.empty()) r.timings.push_back({"queries", ms_since(t)});
  return r;
}

Report analyze(const RunConfig& cfg) {
  const auto t0 = Clock::now();
  Program program;
  try {
    program = parse_program(read_file(cfg.ir_path, "IR file"));
  } catch (const ParseError& e) {
    throw InputError(cfg.ir_path + ":" + e.diagnostic().to_string());
  }
  const double parse_ms = ms_since(t0);

  TaintModels models = default_models();
  Caps caps;
  try {
    if (cfg.config_path) {
      const std::string text = read_file(*cfg.config_path, "config");
      models = load_models_text(text, models);
      caps = caps_from_config_text(text, caps);
    }
    caps = Caps::from_env(caps);
    if (cfg.caps_override) caps = Caps::parse(*cfg.caps_override, caps);
  } catch (const ConfigError& e) {
    throw InputError(e.what());
  } catch (const std::invalid_argument& e) {
    throw InputError(std::string("bad caps: ") + e.what());
  }

  Report r = analyze_program(program, models, cfg, caps);
  r.timings.insert(r.timings.begin(), StageTime{"parse", parse_ms});
  r.timings.push_back({"total", ms_since(t0)});
  return r;
}

int exit_code(const Report& report, const RunConfig& cfg) {
  return cfg.alert_exit && !report.taint.alerts.empty() ? 1 : 0;
}

}  // namespace symalias
