#pragma once

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "symalias/alias.hpp"

namespace symalias::oracle {

struct RunConfig {
  uint64_t seed = 0;
  uint64_t step_limit = 100000;
  // Uninitialized registers and memory read as small numbers; used when
  // shrinking counterexamples.
  bool small_values = false;
};

enum class RunStatus { Ok, StepLimit, CodeAccess, NoEntry };
std::string_view to_string(RunStatus s);

struct TraceEntry {
  Point at;
  uint32_t frame = 0;
  uint64_t writes = 0;  // memory writes performed before this point
  std::map<uint32_t, Word> regs;  // assigned registers only
};

struct Frame {
  uint32_t func = 0;
  std::map<uint32_t, Word> entry_regs;  // registers at the prologue
  std::optional<Word> ret;
};

// A copy through an external call that ran past the top of the caller frame.
struct Overflow {
  StmtId site;
  uint64_t dst = 0, bytes = 0, limit = 0;
};

class Memory;

struct RunResult {
  RunStatus status = RunStatus::Ok;
  std::string error;
  std::vector<TraceEntry> trace;
  std::vector<Frame> frames;
  std::vector<Overflow> overflows;
  std::shared_ptr<const Memory> memory;
  uint64_t seed = 0;
  bool small_values = false;
  Word mask = ~Word{0};
  uint32_t word_size = 4;

  Word reg(size_t entry, Reg r) const;
  Word read(uint64_t addr, uint64_t writes, uint32_t bytes) const;
  // Latest visit of `p` in `frame` at or before trace index `limit`.
  std::optional<size_t> last_visit(const Point& p, uint32_t frame, size_t limit = SIZE_MAX) const;
  // Value of `e` at trace entry `entry`; nullopt when it cannot be evaluated
  // (index terms, memory sites never reached in the frame).
  std::optional<Word> eval(const Sse& e, size_t entry) const;
};

RunResult run(const Program& program, uint32_t entry_func, const RunConfig& cfg,
              const std::map<Reg, Word>& inputs = {});

// ---- alias certification

struct AliasPair {
  Point a_at;
  Sse a;
  Point b_at;
  Sse b;
  std::vector<Guard> guards;  // conditions the derivation relied on
};

enum class Verdict { Pass, Fail, Vacuous };
std::string_view to_string(Verdict v);

struct Counterexample {
  uint64_t seed = 0;
  bool small_values = false;
  Word a_value = 0, b_value = 0;
};

struct PairVerdict {
  Verdict verdict = Verdict::Vacuous;
  uint32_t runs_compared = 0;
  std::optional<Counterexample> counterexample;
};

struct CertifyConfig {
  uint32_t runs = 16;
  uint64_t seed = 1;
  uint32_t entry_func = 0;
  uint64_t step_limit = 100000;
};

PairVerdict certify(const Program& program, const AliasPair& pair, const CertifyConfig& cfg);
std::vector<PairVerdict> certify_all(const Program& program, const std::vector<AliasPair>& pairs,
                                     const CertifyConfig& cfg, bool parallel = true);

// Pairs (seed expression, alias) from every fact of the query's root
// instances, with the guards along each derivation.
std::vector<AliasPair> pairs_from_query(const QueryResult& q, const Seed& seed);

// ---- differential fuzzing

struct FuzzConfig {
  uint32_t count = 500;
  uint32_t max_len = 30;
  uint32_t runs = 16;
  uint64_t seed = 1;
};

struct FuzzFailure {
  uint32_t program_index = 0;
  std::string program_text;
  std::string pair;
  Counterexample counterexample;
};

struct FuzzReport {
  uint32_t programs = 0;
  uint32_t rejected = 0;  // generated programs discarded by the hygiene check
  uint64_t pairs = 0;
  uint64_t passed = 0, vacuous = 0, refuted = 0;
  std::vector<FuzzFailure> failures;
  bool cap_hit = false;
};

// Random straight-line program over r0..r3 and sp; deterministic in `seed`.
Program generate_program(uint64_t seed, uint32_t max_len, uint32_t word_size = 4);
// Concrete accesses that overlap while their address operands differ hide
// aliasing the rules cannot see; such programs are rejected.
bool hygienic(const Program& program, uint64_t seed);

FuzzReport fuzz(const FuzzConfig& cfg, bool parallel = true);

}  // namespace symalias::oracle
