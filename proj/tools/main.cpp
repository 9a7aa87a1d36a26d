#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "symalias/pipeline.hpp"

using namespace symalias;

namespace {

constexpr int kExitOk = 0, kExitAlerts = 1, kExitInput = 2;

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Program load_ir(const std::string& path) {
  try {
    return parse_program(slurp(path));
  } catch (const ParseError& e) {
    throw InputError(path + ":" + e.diagnostic().to_string());
  }
}

void emit(const std::string& text, const std::optional<std::string>& out) {
  if (!out) {
    std::cout << text;
    return;
  }
  std::ofstream f(*out);
  if (!f) throw InputError("cannot write '" + *out + "'");
  f << text;
}

int dump_cfg(const std::string& ir, const std::string& fname) {
  Program p = load_ir(ir);
  auto fi = p.function_index(fname);
  if (!fi) throw InputError("no function '" + fname + "'");
  std::cout << to_dot(build_cfg(p, *fi), p);
  return kExitOk;
}

int oracle_certify(const std::string& ir, const std::string& pairs_path, uint32_t runs,
                   uint64_t seed, const std::optional<std::string>& out) {
  Program p = load_ir(ir);
  auto pairs = parse_pairs_json(p, slurp(pairs_path));
  oracle::CertifyConfig cc;
  cc.runs = runs;
  cc.seed = seed;
  auto verdicts = oracle::certify_all(p, pairs, cc);
  emit(verdicts_json(p, pairs, verdicts).dump(2) + "\n", out);
  for (const auto& v : verdicts)
    if (v.verdict == oracle::Verdict::Fail) return kExitAlerts;
  return kExitOk;
}

int oracle_fuzz(const oracle::FuzzConfig& fc, bool serial, const std::optional<std::string>& out) {
  auto rep = oracle::fuzz(fc, !serial);
  nlohmann::json failures = nlohmann::json::array();
  for (const auto& f : rep.failures)
    failures.push_back({{"program_index", f.program_index},
                        {"pair", f.pair},
                        {"seed", f.counterexample.seed},
                        {"small_values", f.counterexample.small_values},
                        {"a_value", f.counterexample.a_value},
                        {"b_value", f.counterexample.b_value},
                        {"program", f.program_text}});
  nlohmann::json j = {{"programs", rep.programs}, {"rejected", rep.rejected},
                      {"pairs", rep.pairs},       {"passed", rep.passed},
                      {"vacuous", rep.vacuous},   {"refuted", rep.refuted},
                      {"cap_hit", rep.cap_hit},   {"failures", failures}};
  emit(j.dump(2) + "\n", out);
  return rep.refuted ? kExitAlerts : kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Demand-driven alias analysis, indirect-call resolution and taint checking for micro-IR"};
  app.require_subcommand(0, 1);

  RunConfig cfg;
  std::string ir, config, caps, format = "json", out, dump_cfg_fn;
  bool no_icall = false, dump_aliases = false, dump_icalls = false, no_alert_exit = false,
       serial = false;
  app.add_option("--ir", ir, "micro-IR program");
  app.add_option("--config", config, "JSON config with sources, sinks, summaries, caps");
  app.add_option("--caps", caps, "cap overrides, e.g. alias_set=128,loop_k=2");
  app.add_flag("--no-icall", no_icall, "disable indirect-call resolution");
  app.add_option("--seed", cfg.seeds, "manual alias query function:block[:pos]:expr")->take_all();
  app.add_option("--dump-cfg", dump_cfg_fn, "print the CFG of a function as DOT and exit");
  app.add_flag("--dump-aliases", dump_aliases, "print the alias sets of --seed queries as JSON");
  app.add_flag("--dump-icalls", dump_icalls, "print per-callsite icall resolutions as JSON");
  app.add_option("--out", out, "write the report here instead of stdout");
  app.add_option("--format", format, "report format")->check(CLI::IsMember({"json", "text"}));
  app.add_flag("--no-alert-exit", no_alert_exit, "exit 0 even when alerts are found");
  app.add_flag("--serial", serial, "run per-source taint jobs serially");

  auto* orc = app.add_subcommand("oracle", "concrete-execution differential oracle");
  orc->require_subcommand(1);
  auto* cert = orc->add_subcommand("certify", "check alias pairs against concrete runs");
  std::string cert_ir, pairs_path;
  uint32_t cert_runs = 16;
  uint64_t cert_seed = 1;
  cert->add_option("--ir", cert_ir, "micro-IR program")->required();
  cert->add_option("--pairs", pairs_path, "JSON array of alias pairs")->required();
  cert->add_option("--runs", cert_runs, "random runs per pair");
  cert->add_option("--seed", cert_seed, "base seed");
  cert->add_option("--out", out, "write verdicts here");

  auto* fz = orc->add_subcommand("fuzz", "random programs cross-checked against the engine");
  oracle::FuzzConfig fc;
  fz->add_option("--count", fc.count, "programs to generate");
  fz->add_option("--max-len", fc.max_len, "statements per program")->check(CLI::Range(1u, 200u));
  fz->add_option("--runs", fc.runs, "random runs per pair");
  fz->add_option("--seed", fc.seed, "generator seed");
  fz->add_flag("--serial", serial, "no OpenMP");
  fz->add_option("--out", out, "write the summary here");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitInput;
  }

  const std::optional<std::string> out_path = out.empty() ? std::nullopt : std::optional(out);
  try {
    if (*cert) return oracle_certify(cert_ir, pairs_path, cert_runs, cert_seed, out_path);
    if (*fz) return oracle_fuzz(fc, serial, out_path);

    if (ir.empty()) throw InputError("--ir is required");
    if (!dump_cfg_fn.empty()) return dump_cfg(ir, dump_cfg_fn);

    cfg.ir_path = ir;
    if (!config.empty()) cfg.config_path = config;
    if (!caps.empty()) cfg.caps_override = caps;
    cfg.enable_icall = !no_icall;
    cfg.parallel = !serial;
    cfg.out_path = out_path;
    cfg.format = format == "text" ? ReportFormat::Text : ReportFormat::Json;
    cfg.alert_exit = !no_alert_exit;
    if (dump_aliases && cfg.seeds.empty()) throw InputError("--dump-aliases needs at least one --seed");

    Report r = analyze(cfg);
    // Dumps go to stdout; the report then only goes to --out when given.
    const bool dumping = dump_aliases || dump_icalls;
    if (dump_icalls) std::cout << icalls_json(r.icalls, *r.program).dump(2) << "\n";
    if (dump_aliases) std::cout << queries_json(r.queries).dump(2) << "\n";
    if (!dumping || out_path) {
      const std::string text =
          cfg.format == ReportFormat::Json ? report_json(r).dump(2) + "\n" : report_text(r);
      emit(text, out_path);
    }
    return exit_code(r, cfg) ? kExitAlerts : kExitOk;
  } catch (const InputError& e) {
    std::cerr << "symalias: " << e.what() << "\n";
    return kExitInput;
  }
}
