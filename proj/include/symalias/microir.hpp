#pragma once

#include <compare>
#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace symalias {

// Register identifiers. General registers r0..r255 share the low range; the
// remaining ids are reserved for the stack pointer, the global pointer and two
// engine-internal pseudo registers (the return value and formal parameters).
class Reg {
 public:
  static constexpr uint32_t kSp = 0x1000;
  static constexpr uint32_t kGp = 0x1001;
  static constexpr uint32_t kRv = 0x1002;
  static constexpr uint32_t kParamBase = 0x2000;
  static constexpr uint32_t kScratchBase = 0x3000;

  constexpr Reg() = default;
  constexpr explicit Reg(uint32_t id) : id_(id) {}

  static constexpr Reg r(uint32_t n) { return Reg(n); }
  static constexpr Reg sp() { return Reg(kSp); }
  static constexpr Reg gp() { return Reg(kGp); }
  static constexpr Reg rv() { return Reg(kRv); }
  static constexpr Reg param(uint32_t i) { return Reg(kParamBase + i); }

  constexpr uint32_t id() const { return id_; }
  constexpr bool is_general() const { return id_ < kSp; }
  constexpr bool is_sp() const { return id_ == kSp; }
  constexpr bool is_gp() const { return id_ == kGp; }
  constexpr bool is_rv() const { return id_ == kRv; }
  constexpr bool is_param() const { return id_ >= kParamBase && id_ < kScratchBase; }
  constexpr uint32_t param_index() const { return id_ - kParamBase; }

  // IR spelling: r3, sp, gp (pseudo registers: rv, p0).
  std::string name() const;
  // Expression spelling used by the SSE printer: R3, SP, GP, RV, P0.
  std::string upper_name() const;

  friend constexpr auto operator<=>(Reg, Reg) = default;

 private:
  uint32_t id_ = 0;
};

std::optional<Reg> parse_register(std::string_view text);

using Word = uint64_t;

struct Operand {
  std::variant<Reg, Word> value;

  static Operand reg(Reg r) { return Operand{r}; }
  static Operand imm(Word w) { return Operand{w}; }
  bool is_reg() const { return std::holds_alternative<Reg>(value); }
  bool is_imm() const { return std::holds_alternative<Word>(value); }
  Reg as_reg() const { return std::get<Reg>(value); }
  Word as_imm() const { return std::get<Word>(value); }
  std::string to_string() const;
  friend bool operator==(const Operand&, const Operand&) = default;
};

enum class BinOpKind {
  Add, Sub, Mul, Div, Shl, Shr, And, Or, Xor,
  CmpLt, CmpLe, CmpEq, CmpNe, CmpGt, CmpGe,
};

enum class UnOpKind { Not, Neg, LogicalNot };

std::string_view to_symbol(BinOpKind op);
std::string_view to_symbol(UnOpKind op);
bool is_commutative(BinOpKind op);
bool is_comparison(BinOpKind op);
bool is_bitwise(BinOpKind op);

// Base-plus-displacement memory address. A zero displacement is the plain
// register form `load rj`.
struct Address {
  Reg base;
  int64_t disp = 0;
  std::string to_string() const;
  friend bool operator==(const Address&, const Address&) = default;
};

// Identifies a statement: function index, source block index, statement index
// within that block. Stable for the lifetime of the Program.
struct StmtId {
  uint32_t func = 0;
  uint32_t block = 0;
  uint32_t index = 0;
  friend constexpr auto operator<=>(const StmtId&, const StmtId&) = default;
};

struct MoveStmt {
  Reg dst; Operand src;
  friend bool operator==(const MoveStmt&, const MoveStmt&) = default;
};
struct BinOpStmt {
  Reg dst; BinOpKind op; Operand lhs; Operand rhs;
  friend bool operator==(const BinOpStmt&, const BinOpStmt&) = default;
};
struct UnOpStmt {
  Reg dst; UnOpKind op; Operand src;
  friend bool operator==(const UnOpStmt&, const UnOpStmt&) = default;
};
// Value select: dst = cond ? then_v : else_v. Not control flow.
struct IteStmt {
  Reg dst; Reg cond; Operand then_v; Operand else_v;
  friend bool operator==(const IteStmt&, const IteStmt&) = default;
};
struct LoadStmt {
  Reg dst; Address addr;
  friend bool operator==(const LoadStmt&, const LoadStmt&) = default;
};
struct StoreStmt {
  Address addr; Operand src;
  friend bool operator==(const StoreStmt&, const StoreStmt&) = default;
};
struct CallStmt {
  std::string target; std::vector<Operand> args; std::optional<Reg> ret;
  friend bool operator==(const CallStmt&, const CallStmt&) = default;
};
struct ICallStmt {
  Reg target; std::vector<Operand> args; std::optional<Reg> ret;
  friend bool operator==(const ICallStmt&, const ICallStmt&) = default;
};
struct BranchStmt {
  Reg cond; std::string then_label; std::string else_label;
  friend bool operator==(const BranchStmt&, const BranchStmt&) = default;
};
struct JumpStmt {
  std::string label;
  friend bool operator==(const JumpStmt&, const JumpStmt&) = default;
};
struct RetStmt {
  std::optional<Operand> value;
  friend bool operator==(const RetStmt&, const RetStmt&) = default;
};

using StmtForm = std::variant<MoveStmt, BinOpStmt, UnOpStmt, IteStmt, LoadStmt, StoreStmt,
                              CallStmt, ICallStmt, BranchStmt, JumpStmt, RetStmt>;

struct Statement {
  StmtId id;
  StmtForm form;
  uint32_t line = 0;

  bool is_terminator() const;
  bool is_call() const;  // direct or indirect
  std::optional<Reg> defined_register() const;
};

struct BasicBlock {
  std::string label;
  std::vector<Statement> statements;
};

struct StackBuffer {
  std::string name;
  uint64_t offset = 0;  // from the frame top (sp)
  uint64_t size = 0;
  friend bool operator==(const StackBuffer&, const StackBuffer&) = default;
};

struct Function {
  std::string name;
  uint64_t entry_address = 0;
  uint64_t frame_size = 0;
  uint32_t num_params = 4;
  std::vector<StackBuffer> stack_buffers;
  std::vector<BasicBlock> blocks;  // blocks[0] is the entry block

  std::optional<uint32_t> block_index(std::string_view label) const;
  const Statement& statement(const StmtId& id) const {
    return blocks.at(id.block).statements.at(id.index);
  }
};

struct DataObject {
  std::string label;
  uint64_t address = 0;
  std::vector<Word> words;
};

struct Program {
  std::vector<Function> functions;
  std::vector<DataObject> data_objects;  // sorted by address
  std::map<uint64_t, std::string> string_table;
  uint32_t word_size = 4;
  uint64_t gp_value = 0x100000;

  std::optional<uint32_t> function_index(std::string_view name) const;
  const Function* function_by_name(std::string_view name) const;
  const Function* function_at(uint64_t entry_address) const;
  const Statement& statement(const StmtId& id) const {
    return functions.at(id.func).statement(id);
  }
  // Address -> word list, one entry per data object.
  std::map<uint64_t, std::vector<Word>> data_section() const;
  // The data object containing `address`, if any.
  const DataObject* data_object_containing(uint64_t address) const;
  std::optional<Word> data_word_at(uint64_t address) const;
  Word word_mask() const { return word_size >= 8 ? ~Word{0} : ((Word{1} << (8 * word_size)) - 1); }
  std::string describe(const StmtId& id) const;  // "main:bb0:3"
};

struct Diagnostic {
  uint32_t line = 0;
  uint32_t column = 0;
  std::string message;
  std::optional<StmtId> point;
  std::string to_string() const;
};

class ParseError : public std::runtime_error {
 public:
  explicit ParseError(Diagnostic d);
  const Diagnostic& diagnostic() const { return diag_; }

 private:
  Diagnostic diag_;
};

// Parses and validates micro-IR text. Throws ParseError on the first problem.
Program parse_program(std::string_view text);
Program parse_program_file(const std::string& path);

// Checks structural invariants of an already-built Program.
std::vector<Diagnostic> validate(const Program& program);

std::string to_text(const Statement& stmt, const Function& fn);
std::string to_text(const Program& program);

bool structurally_equal(const Program& a, const Program& b);

// Immediate operands appearing in a statement, in operand order.
std::vector<uint64_t> statement_immediates(const Statement& s);

}  // namespace symalias
