// OpenMP kernels against their serial reference: taint per-source jobs,
// certification of alias pairs, and the differential fuzz campaign.
#include <benchmark/benchmark.h>

#include <sstream>

#include "symalias/icall.hpp"
#include "symalias/oracle.hpp"
#include "symalias/taint.hpp"

using namespace symalias;

namespace {

// `n` handlers, each receiving into its own buffer and copying through a
// helper into a small stack buffer.
Program many_sources(int n) {
  std::ostringstream os;
  for (int i = 0; i < n; ++i) {
    os << "func h" << i << " @0x" << std::hex << 0x10000 + 0x100 * i << std::dec << " frame=0x80 {\nbb0:\n"
       << "  r1 = gp + 0x" << std::hex << 0x1000 * (i + 1) << std::dec << "\n"
       << "  call recv(0x4, r1, 0x200, 0x0)\n"
       << "  r2 = call strchr(r1, 0x3a)\n"
       << "  r3 = r2 < 0x10\n"
       << "  br r3, out, copy\ncopy:\n"
       << "  r5 = sp + 0x20\n"
       << "  call helper(r5, r2)\n"
       << "  jmp out\nout:\n  ret\n}\n";
  }
  os << "func helper @0x1000 frame=0x20 params=2 {\nbb0:\n  call strcpy(r0, r1)\n  ret\n}\n";
  return parse_program(os.str());
}

void BM_Taint(benchmark::State& st) {
  static const Program p = many_sources(48);
  const bool parallel = st.range(0) != 0;
  for (auto _ : st) {
    TaintAnalysis ta(p, default_models(), Caps{}, {});
    benchmark::DoNotOptimize(ta.run(parallel));
  }
  st.SetLabel(parallel ? "parallel" : "serial");
}
BENCHMARK(BM_Taint)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_Certify(benchmark::State& st) {
  // a generated loop-free program: every run terminates
  static const Program p = oracle::generate_program(7, 30);
  static const std::vector<oracle::AliasPair> pairs = [] {
    Engine eng(p);
    std::vector<oracle::AliasPair> all;
    const auto& stmts = p.functions[0].blocks[0].statements;
    for (uint32_t i = 0; i < stmts.size(); ++i)
      if (auto r = stmts[i].defined_register()) {
        Seed s{Point{0, 0, i + 1}, sse::reg(*r), Dir::Both};
        auto more = oracle::pairs_from_query(eng.query({s}), s);
        all.insert(all.end(), more.begin(), more.end());
      }
    return all;
  }();
  const bool parallel = st.range(0) != 0;
  oracle::CertifyConfig cfg;
  for (auto _ : st) benchmark::DoNotOptimize(oracle::certify_all(p, pairs, cfg, parallel));
  st.SetLabel(std::to_string(pairs.size()) + " pairs, " + (parallel ? "parallel" : "serial"));
}
BENCHMARK(BM_Certify)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_Fuzz(benchmark::State& st) {
  const bool parallel = st.range(0) != 0;
  oracle::FuzzConfig cfg;
  cfg.count = 40;
  for (auto _ : st) benchmark::DoNotOptimize(oracle::fuzz(cfg, parallel));
  st.SetLabel(parallel ? "parallel" : "serial");
}
BENCHMARK(BM_Fuzz)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
