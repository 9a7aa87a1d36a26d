#include "symalias/microir.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <set>
#include <sstream>

namespace symalias {

std::string Reg::name() const {
  if (is_sp()) return "sp";
  if (is_gp()) return "gp";
  if (is_rv()) return "rv";
  if (is_param()) return "p" + std::to_string(param_index());
  if (id_ >= kScratchBase) return "t" + std::to_string(id_ - kScratchBase);
  return "r" + std::to_string(id_);
}

std::string Reg::upper_name() const {
  std::string s = name();
  for (auto& c : s) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  return s;
}

std::optional<Reg> parse_register(std::string_view t) {
  if (t == "sp") return Reg::sp();
  if (t == "gp") return Reg::gp();
  if (t.size() >= 2 && t[0] == 'r') {
    uint32_t n = 0;
    auto [p, ec] = std::from_chars(t.data() + 1, t.data() + t.size(), n);
    if (ec == std::errc() && p == t.data() + t.size() && n < 256) return Reg::r(n);
  }
  return std::nullopt;
}

static std::string hex(uint64_t v) {
  std::ostringstream os;
  os << "0x" << std::hex << std::uppercase << v;
  return os.str();
}

std::string Operand::to_string() const {
  if (is_reg()) return as_reg().name();
  return hex(as_imm());
}

std::string_view to_symbol(BinOpKind op) {
  switch (op) {
    case BinOpKind::Add: return "+";
    case BinOpKind::Sub: return "-";
    case BinOpKind::Mul: return "*";
    case BinOpKind::Div: return "/";
    case BinOpKind::Shl: return "<<";
    case BinOpKind::Shr: return ">>";
    case BinOpKind::And: return "&";
    case BinOpKind::Or: return "|";
    case BinOpKind::Xor: return "^";
    case BinOpKind::CmpLt: return "<";
    case BinOpKind::CmpLe: return "<=";
    case BinOpKind::CmpEq: return "==";
    case BinOpKind::CmpNe: return "!=";
    case BinOpKind::CmpGt: return ">";
    case BinOpKind::CmpGe: return ">=";
  }
  return "?";
}

std::string_view to_symbol(UnOpKind op) {
  switch (op) {
    case UnOpKind::Not: return "~";
    case UnOpKind::Neg: return "-";
    case UnOpKind::LogicalNot: return "!";
  }
  return "?";
}

bool is_commutative(BinOpKind op) {
  return op == BinOpKind::Add || op == BinOpKind::Mul || op == BinOpKind::And ||
         op == BinOpKind::Or || op == BinOpKind::Xor || op == BinOpKind::CmpEq ||
         op == BinOpKind::CmpNe;
}

bool is_comparison(BinOpKind op) { return op >= BinOpKind::CmpLt; }

bool is_bitwise(BinOpKind op) {
  return op == BinOpKind::And || op == BinOpKind::Or || op == BinOpKind::Xor ||
         op == BinOpKind::Shl || op == BinOpKind::Shr;
}

std::string Address::to_string() const {
  std::string s = base.name();
  if (disp > 0) s += "+" + hex(static_cast<uint64_t>(disp));
  if (disp < 0) s += "-" + hex(static_cast<uint64_t>(-disp));
  return s;
}

bool Statement::is_terminator() const {
  return std::holds_alternative<BranchStmt>(form) || std::holds_alternative<JumpStmt>(form) ||
         std::holds_alternative<RetStmt>(form);
}

bool Statement::is_call() const {
  return std::holds_alternative<CallStmt>(form) || std::holds_alternative<ICallStmt>(form);
}

std::optional<Reg> Statement::defined_register() const {
  return std::visit(
      [](const auto& s) -> std::optional<Reg> {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, MoveStmt> || std::is_same_v<T, BinOpStmt> ||
                      std::is_same_v<T, UnOpStmt> || std::is_same_v<T, IteStmt> ||
                      std::is_same_v<T, LoadStmt>)
          return s.dst;
        else if constexpr (std::is_same_v<T, CallStmt> || std::is_same_v<T, ICallStmt>)
          return s.ret;
        else
          return std::nullopt;
      },
      form);
}

std::optional<uint32_t> Function::block_index(std::string_view label) const {
  for (uint32_t i = 0; i < blocks.size(); ++i)
    if (blocks[i].label == label) return i;
  return std::nullopt;
}

std::optional<uint32_t> Program::function_index(std::string_view name) const {
  for (uint32_t i = 0; i < functions.size(); ++i)
    if (functions[i].name == name) return i;
  return std::nullopt;
}

const Function* Program::function_by_name(std::string_view name) const {
  auto i = function_index(name);
  return i ? &functions[*i] : nullptr;
}

const Function* Program::function_at(uint64_t addr) const {
  for (const auto& f : functions)
    if (f.entry_address == addr) return &f;
  return nullptr;
}

std::map<uint64_t, std::vector<Word>> Program::data_section() const {
  std::map<uint64_t, std::vector<Word>> out;
  for (const auto& d : data_objects) out[d.address] = d.words;
  return out;
}

const DataObject* Program::data_object_containing(uint64_t address) const {
  for (const auto& d : data_objects)
    if (address >= d.address && address < d.address + d.words.size() * word_size) return &d;
  return nullptr;
}

std::optional<Word> Program::data_word_at(uint64_t address) const {
  const DataObject* d = data_object_containing(address);
  if (!d || (address - d->address) % word_size) return std::nullopt;
  return d->words[(address - d->address) / word_size];
}

std::string Program::describe(const StmtId& id) const {
  if (id.func >= functions.size()) return "?";
  const Function& f = functions[id.func];
  std::string b = id.block < f.blocks.size() ? f.blocks[id.block].label : "?";
  return f.name + ":" + b + ":" + std::to_string(id.index);
}

std::string Diagnostic::to_string() const {
  return "line " + std::to_string(line) + ":" + std::to_string(column) + ": " + message;
}

ParseError::ParseError(Diagnostic d) : std::runtime_error(d.to_string()), diag_(std::move(d)) {}

// ---------------------------------------------------------------------------
// Lexer

namespace {

enum class Tok { Ident, Number, String, Punct, Newline, End };

struct Token {
  Tok kind;
  std::string text;
  uint64_t value = 0;
  uint32_t line = 0, col = 0;
};

std::vector<Token> lex(std::string_view src) {
  std::vector<Token> out;
  uint32_t line = 1, col = 1;
  size_t i = 0;
  auto fail = [&](const std::string& msg) { throw ParseError({line, col, msg, std::nullopt}); };
  while (i < src.size()) {
    char c = src[i];
    if (c == '#') {
      while (i < src.size() && src[i] != '\n') ++i;
      continue;
    }
    if (c == '\n') {
      out.push_back({Tok::Newline, "\\n", 0, line, col});
      ++i, ++line, col = 1;
      continue;
    }
    if (std::isspace(static_cast<unsigned char>(c))) {
      ++i, ++col;
      continue;
    }
    uint32_t start_col = col;
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_' || c == '.') {
      size_t j = i;
      while (j < src.size() && (std::isalnum(static_cast<unsigned char>(src[j])) || src[j] == '_' ||
                                src[j] == '.'))
        ++j;
      out.push_back({Tok::Ident, std::string(src.substr(i, j - i)), 0, line, start_col});
      col += static_cast<uint32_t>(j - i);
      i = j;
      continue;
    }
    if (std::isdigit(static_cast<unsigned char>(c))) {
      size_t j = i;
      int base = 10;
      if (c == '0' && j + 1 < src.size() && (src[j + 1] == 'x' || src[j + 1] == 'X')) {
        base = 16;
        j += 2;
      }
      size_t ds = j;
      while (j < src.size() && std::isxdigit(static_cast<unsigned char>(src[j]))) ++j;
      uint64_t v = 0;
      auto [p, ec] = std::from_chars(src.data() + ds, src.data() + j, v, base);
      if (ec != std::errc() || p != src.data() + j) fail("malformed number");
      out.push_back({Tok::Number, std::string(src.substr(i, j - i)), v, line, start_col});
      col += static_cast<uint32_t>(j - i);
      i = j;
      continue;
    }
    if (c == '"') {
      std::string s;
      size_t j = i + 1;
      while (j < src.size() && src[j] != '"') {
        if (src[j] == '\n') fail("unterminated string");
        if (src[j] == '\\' && j + 1 < src.size()) {
          char e = src[j + 1];
          s += e == 'n' ? '\n' : e == 't' ? '\t' : e == '0' ? '\0' : e;
          j += 2;
          continue;
        }
        s += src[j++];
      }
      if (j >= src.size()) fail("unterminated string");
      out.push_back({Tok::String, s, 0, line, start_col});
      col += static_cast<uint32_t>(j + 1 - i);
      i = j + 1;
      continue;
    }
    static const char* two[] = {"<<", ">>", "<=", ">=", "==", "!="};
    bool matched = false;
    for (const char* t : two) {
      if (src.substr(i, 2) == t) {
        out.push_back({Tok::Punct, t, 0, line, start_col});
        i += 2, col += 2;
        matched = true;
        break;
      }
    }
    if (matched) continue;
    if (std::string_view("=,()[]{}:@+-*/&|^~!<>").find(c) != std::string_view::npos) {
      out.push_back({Tok::Punct, std::string(1, c), 0, line, start_col});
      ++i, ++col;
      continue;
    }
    fail(std::string("unexpected character '") + c + "'");
  }
  out.push_back({Tok::End, "", 0, line, col});
  return out;
}

// ---------------------------------------------------------------------------
// Parser

class Parser {
 public:
  explicit Parser(std::vector<Token> toks) : t_(std::move(toks)) {}

  Program run() {
    Program p;
    skip_nl();
    while (!at(Tok::End)) {
      const Token& k = peek();
      if (k.kind != Tok::Ident) fail(k, "expected a top-level directive");
      if (k.text == "wordsize") {
        next();
        uint64_t w = number();
        if (w != 4 && w != 8) fail(k, "wordsize must be 4 or 8");
        p.word_size = static_cast<uint32_t>(w);
      } else if (k.text == "gp") {
        next();
        p.gp_value = number();
      } else if (k.text == "func") {
        parse_function(p);
      } else if (k.text == "data") {
        parse_data(p);
      } else if (k.text == "strings") {
        parse_strings(p);
      } else {
        fail(k, "unknown directive '" + k.text + "'");
      }
      end_line();
    }
    std::sort(p.data_objects.begin(), p.data_objects.end(),
              [](const DataObject& a, const DataObject& b) { return a.address < b.address; });
    for (uint32_t f = 0; f < p.functions.size(); ++f)
      for (uint32_t b = 0; b < p.functions[f].blocks.size(); ++b) {
        auto& st = p.functions[f].blocks[b].statements;
        for (uint32_t i = 0; i < st.size(); ++i) st[i].id = StmtId{f, b, i};
      }
    return p;
  }

 private:
  std::vector<Token> t_;
  size_t pos_ = 0;

  const Token& peek(size_t k = 0) const { return t_[std::min(pos_ + k, t_.size() - 1)]; }
  const Token& next() { return t_[std::min(pos_++, t_.size() - 1)]; }
  bool at(Tok k) const { return peek().kind == k; }
  bool at_punct(std::string_view s) const { return peek().kind == Tok::Punct && peek().text == s; }
  bool at_ident(std::string_view s) const { return peek().kind == Tok::Ident && peek().text == s; }

  [[noreturn]] static void fail(const Token& t, const std::string& msg) {
    throw ParseError({t.line, t.col, msg, std::nullopt});
  }

  void expect_punct(std::string_view s) {
    if (!at_punct(s)) fail(peek(), "expected '" + std::string(s) + "'");
    next();
  }
  void skip_nl() {
    while (at(Tok::Newline)) next();
  }
  void end_line() {
    if (at(Tok::End)) return;
    if (!at(Tok::Newline) && !at_punct("}")) fail(peek(), "unexpected '" + peek().text + "'");
    skip_nl();
  }
  std::string ident() {
    if (!at(Tok::Ident)) fail(peek(), "expected identifier");
    return next().text;
  }
  uint64_t number() {
    bool neg = false;
    if (at_punct("-")) {
      next();
      neg = true;
    }
    if (!at(Tok::Number)) fail(peek(), "expected number");
    uint64_t v = next().value;
    return neg ? (~v + 1) : v;
  }
  Reg reg() {
    const Token& t = peek();
    if (t.kind != Tok::Ident) fail(t, "expected register");
    auto r = parse_register(t.text);
    if (!r) fail(t, "invalid register '" + t.text + "'");
    next();
    return *r;
  }
  bool at_register() const { return at(Tok::Ident) && parse_register(peek().text).has_value(); }

  Operand operand() {
    if (at_register()) return Operand::reg(reg());
    if (at(Tok::Number) || (at_punct("-") && peek(1).kind == Tok::Number))
      return Operand::imm(number());
    fail(peek(), "expected operand");
  }

  // key=value with a numeric value
  uint64_t keyed(std::string_view key) {
    const Token& k = peek();
    if (!at_ident(key)) fail(k, "expected '" + std::string(key) + "='");
    next();
    expect_punct("=");
    return number();
  }

  Address address() {
    std::string close;
    if (at_punct("(")) close = ")";
    if (at_punct("[")) close = "]";
    if (!close.empty()) next();
    Address a{reg(), 0};
    if (at_punct("+") || at_punct("-")) {
      bool neg = next().text == "-";
      if (!at(Tok::Number)) fail(peek(), "expected displacement");
      uint64_t v = next().value;
      a.disp = neg ? -static_cast<int64_t>(v) : static_cast<int64_t>(v);
    }
    if (!close.empty()) expect_punct(close);
    return a;
  }

  std::vector<Operand> args() {
    expect_punct("(");
    std::vector<Operand> out;
    if (!at_punct(")")) {
      out.push_back(operand());
      while (at_punct(",")) {
        next();
        out.push_back(operand());
      }
    }
    expect_punct(")");
    return out;
  }

  void parse_function(Program& p) {
    const Token& kw = next();
    Function f;
    f.name = ident();
    expect_punct("@");
    f.entry_address = number();
    while (at(Tok::Ident)) {
      if (at_ident("frame")) f.frame_size = keyed("frame");
      else if (at_ident("params")) f.num_params = static_cast<uint32_t>(keyed("params"));
      else fail(peek(), "unknown function attribute '" + peek().text + "'");
    }
    if (f.num_params > 16) fail(kw, "too many parameters");
    expect_punct("{");
    skip_nl();
    std::set<std::string> labels;
    while (!at_punct("}")) {
      if (at(Tok::End)) fail(peek(), "unterminated function '" + f.name + "'");
      if (at_ident("buf")) {
        const Token& bt = next();
        StackBuffer b;
        if (!at(Tok::Ident)) fail(bt, "malformed stack-buffer declaration");
        b.name = ident();
        if (!at_punct("@")) fail(bt, "malformed stack-buffer declaration");
        next();
        if (!at_ident("sp")) fail(bt, "malformed stack-buffer declaration");
        next();
        if (at_punct("+")) {
          next();
          b.offset = number();
        }
        if (!at_ident("size")) fail(bt, "malformed stack-buffer declaration");
        b.size = keyed("size");
        f.stack_buffers.push_back(b);
        end_line();
        continue;
      }
      if (at(Tok::Ident) && peek(1).kind == Tok::Punct && peek(1).text == ":") {
        const Token& lt = next();
        next();
        if (!labels.insert(lt.text).second) fail(lt, "duplicate label '" + lt.text + "'");
        f.blocks.push_back(BasicBlock{lt.text, {}});
        skip_nl();
        continue;
      }
      if (f.blocks.empty() || (!f.blocks.back().statements.empty() &&
                               f.blocks.back().statements.back().is_terminator())) {
        // statement after a terminator without a label starts an anonymous block
        std::string name = "_b" + std::to_string(f.blocks.size());
        labels.insert(name);
        f.blocks.push_back(BasicBlock{name, {}});
      }
      const Token& st = peek();
      Statement s;
      s.form = statement();
      s.line = st.line;
      f.blocks.back().statements.push_back(std::move(s));
      end_line();
    }
    next();  // }
    if (f.blocks.empty()) f.blocks.push_back(BasicBlock{"bb0", {}});
    p.functions.push_back(std::move(f));
  }

  StmtForm statement() {
    const Token& t = peek();
    if (at_ident("store")) {
      next();
      Address a = address();
      expect_punct("=");
      return StoreStmt{a, operand()};
    }
    if (at_ident("br")) {
      next();
      Reg c = reg();
      expect_punct(",");
      std::string l1 = ident();
      expect_punct(",");
      return BranchStmt{c, l1, ident()};
    }
    if (at_ident("jmp")) {
      next();
      return JumpStmt{ident()};
    }
    if (at_ident("ret")) {
      next();
      if (at(Tok::Newline) || at(Tok::End) || at_punct("}")) return RetStmt{};
      return RetStmt{operand()};
    }
    if (at_ident("call")) {
      next();
      std::string n = ident();
      return CallStmt{n, args(), std::nullopt};
    }
    if (at_ident("icall")) {
      next();
      Reg r = reg();
      return ICallStmt{r, args(), std::nullopt};
    }
    if (!at_register()) fail(t, "expected statement");
    Reg dst = reg();
    if (dst.is_sp() || dst.is_gp()) fail(t, "sp and gp cannot be assigned");
    expect_punct("=");
    if (at_ident("load")) {
      next();
      return LoadStmt{dst, address()};
    }
    if (at_ident("call")) {
      next();
      std::string n = ident();
      return CallStmt{n, args(), dst};
    }
    if (at_ident("icall")) {
      next();
      Reg r = reg();
      return ICallStmt{r, args(), dst};
    }
    if (at_ident("ite")) {
      next();
      Reg c = reg();
      expect_punct(",");
      Operand a = operand();
      expect_punct(",");
      return IteStmt{dst, c, a, operand()};
    }
    if (at_ident("binop")) {
      next();
      expect_punct("(");
      std::string name = ident();
      static const std::map<std::string, BinOpKind> names = {
          {"add", BinOpKind::Add}, {"sub", BinOpKind::Sub}, {"mul", BinOpKind::Mul},
          {"div", BinOpKind::Div}, {"shl", BinOpKind::Shl}, {"shr", BinOpKind::Shr},
          {"and", BinOpKind::And}, {"or", BinOpKind::Or},   {"xor", BinOpKind::Xor},
          {"lt", BinOpKind::CmpLt}, {"le", BinOpKind::CmpLe}, {"eq", BinOpKind::CmpEq},
          {"ne", BinOpKind::CmpNe}, {"gt", BinOpKind::CmpGt}, {"ge", BinOpKind::CmpGe}};
      auto it = names.find(name);
      if (it == names.end()) fail(t, "unknown binop '" + name + "'");
      expect_punct(",");
      Operand a = operand();
      expect_punct(",");
      Operand b = operand();
      expect_punct(")");
      return BinOpStmt{dst, it->second, a, b};
    }
    if (at_punct("~") || at_punct("!") ||
        (at_punct("-") && peek(1).kind != Tok::Number)) {
      std::string op = next().text;
      UnOpKind k = op == "~" ? UnOpKind::Not : op == "!" ? UnOpKind::LogicalNot : UnOpKind::Neg;
      return UnOpStmt{dst, k, operand()};
    }
    Operand a = operand();
    if (peek().kind == Tok::Punct) {
      static const std::map<std::string, BinOpKind> ops = {
          {"+", BinOpKind::Add},   {"-", BinOpKind::Sub},   {"*", BinOpKind::Mul},
          {"/", BinOpKind::Div},   {"<<", BinOpKind::Shl},  {">>", BinOpKind::Shr},
          {"&", BinOpKind::And},   {"|", BinOpKind::Or},    {"^", BinOpKind::Xor},
          {"<", BinOpKind::CmpLt}, {"<=", BinOpKind::CmpLe}, {"==", BinOpKind::CmpEq},
          {"!=", BinOpKind::CmpNe}, {">", BinOpKind::CmpGt}, {">=", BinOpKind::CmpGe}};
      auto it = ops.find(peek().text);
      if (it != ops.end()) {
        next();
        return BinOpStmt{dst, it->second, a, operand()};
      }
    }
    return MoveStmt{dst, a};
  }

  void parse_data(Program& p) {
    next();
    DataObject d;
    if (at(Tok::Ident)) d.label = ident();
    expect_punct("@");
    d.address = number();
    if (d.label.empty()) d.label = "data_" + hex(d.address).substr(2);
    expect_punct("{");
    skip_nl();
    while (!at_punct("}")) {
      if (!at_ident("word")) fail(peek(), "expected 'word'");
      next();
      d.words.push_back(number());
      if (at_punct(",")) next();
      skip_nl();
    }
    next();
    p.data_objects.push_back(std::move(d));
  }

  void parse_strings(Program& p) {
    next();
    expect_punct("{");
    skip_nl();
    while (!at_punct("}")) {
      expect_punct("@");
      uint64_t a = number();
      if (!at(Tok::String)) fail(peek(), "expected string literal");
      p.string_table[a] = next().text;
      if (at_punct(",")) next();
      skip_nl();
    }
    next();
  }
};

std::vector<uint64_t> code_immediates(const Statement& s) {
  std::vector<uint64_t> out;
  auto add = [&](const Operand& o) {
    if (o.is_imm()) out.push_back(o.as_imm());
  };
  std::visit(
      [&](const auto& x) {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, MoveStmt>) add(x.src);
        else if constexpr (std::is_same_v<T, BinOpStmt>) add(x.lhs), add(x.rhs);
        else if constexpr (std::is_same_v<T, UnOpStmt>) add(x.src);
        else if constexpr (std::is_same_v<T, IteStmt>) add(x.then_v), add(x.else_v);
        else if constexpr (std::is_same_v<T, StoreStmt>) add(x.src);
        else if constexpr (std::is_same_v<T, CallStmt> || std::is_same_v<T, ICallStmt>)
          for (const auto& a : x.args) add(a);
        else if constexpr (std::is_same_v<T, RetStmt>) {
          if (x.value) add(*x.value);
        }
      },
      s.form);
  return out;
}

}  // namespace

std::vector<uint64_t> statement_immediates(const Statement& s) { return code_immediates(s); }

Program parse_program(std::string_view text) {
  Parser ps(lex(text));
  Program p = ps.run();
  auto diags = validate(p);
  if (!diags.empty()) throw ParseError(diags.front());
  return p;
}

Program parse_program_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError({0, 0, "cannot open '" + path + "'", std::nullopt});
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_program(ss.str());
}

std::vector<Diagnostic> validate(const Program& p) {
  std::vector<Diagnostic> out;
  auto diag = [&](uint32_t line, std::string msg, std::optional<StmtId> at = std::nullopt) {
    out.push_back({line, 1, std::move(msg), at});
  };
  std::set<std::string> names;
  std::set<uint64_t> entries;
  for (const auto& f : p.functions) {
    if (!names.insert(f.name).second) diag(0, "duplicate function '" + f.name + "'");
    if (!entries.insert(f.entry_address).second)
      diag(0, "duplicate entry address " + hex(f.entry_address) + " for '" + f.name + "'");
    if (p.data_object_containing(f.entry_address))
      diag(0, "function '" + f.name + "' overlaps the data section");
    for (const auto& b : f.stack_buffers)
      if (b.offset + b.size > f.frame_size)
        diag(0, "stack buffer '" + b.name + "' exceeds frame of '" + f.name + "'");
    std::set<std::string> labels;
    for (const auto& b : f.blocks)
      if (!labels.insert(b.label).second) diag(0, "duplicate label '" + b.label + "'");
    for (const auto& b : f.blocks)
      for (const auto& s : b.statements) {
        auto check = [&](const std::string& l) {
          if (!f.block_index(l)) diag(s.line, "undefined label '" + l + "' in '" + f.name + "'", s.id);
        };
        if (auto* br = std::get_if<BranchStmt>(&s.form)) check(br->then_label), check(br->else_label);
        if (auto* j = std::get_if<JumpStmt>(&s.form)) check(j->label);
        if (auto* c = std::get_if<CallStmt>(&s.form))
          if (auto* g = p.function_by_name(c->target); g && c->args.size() > g->num_params)
            diag(s.line, "too many arguments to '" + c->target + "'", s.id);
      }
    for (const auto& b : f.blocks)
      for (size_t i = 0; i + 1 < b.statements.size(); ++i)
        if (b.statements[i].is_terminator())
          diag(b.statements[i].line, "terminator in the middle of block '" + b.label + "'",
               b.statements[i].id);
  }
  for (size_t i = 1; i < p.data_objects.size(); ++i) {
    const auto& a = p.data_objects[i - 1];
    if (a.address + a.words.size() * p.word_size > p.data_objects[i].address)
      diag(0, "data object '" + p.data_objects[i].label + "' overlaps '" + a.label + "'");
  }
  return out;
}

std::string to_text(const Statement& stmt, const Function&) {
  return std::visit(
      [](const auto& s) -> std::string {
        using T = std::decay_t<decltype(s)>;
        auto arglist = [](const std::vector<Operand>& a) {
          std::string r = "(";
          for (size_t i = 0; i < a.size(); ++i) r += (i ? ", " : "") + a[i].to_string();
          return r + ")";
        };
        if constexpr (std::is_same_v<T, MoveStmt>)
          return s.dst.name() + " = " + s.src.to_string();
        else if constexpr (std::is_same_v<T, BinOpStmt>)
          return s.dst.name() + " = " + s.lhs.to_string() + " " + std::string(to_symbol(s.op)) +
                 " " + s.rhs.to_string();
        else if constexpr (std::is_same_v<T, UnOpStmt>)
          return s.dst.name() + " = " + std::string(to_symbol(s.op)) + s.src.to_string();
        else if constexpr (std::is_same_v<T, IteStmt>)
          return s.dst.name() + " = ite " + s.cond.name() + ", " + s.then_v.to_string() + ", " +
                 s.else_v.to_string();
        else if constexpr (std::is_same_v<T, LoadStmt>)
          return s.dst.name() + " = load " + s.addr.to_string();
        else if constexpr (std::is_same_v<T, StoreStmt>)
          return "store " + s.addr.to_string() + " = " + s.src.to_string();
        else if constexpr (std::is_same_v<T, CallStmt>)
          return (s.ret ? s.ret->name() + " = " : std::string()) + "call " + s.target +
                 arglist(s.args);
        else if constexpr (std::is_same_v<T, ICallStmt>)
          return (s.ret ? s.ret->name() + " = " : std::string()) + "icall " + s.target.name() +
                 arglist(s.args);
        else if constexpr (std::is_same_v<T, BranchStmt>)
          return "br " + s.cond.name() + ", " + s.then_label + ", " + s.else_label;
        else if constexpr (std::is_same_v<T, JumpStmt>)
          return "jmp " + s.label;
        else
          return s.value ? "ret " + s.value->to_string() : std::string("ret");
      },
      stmt.form);
}

std::string to_text(const Program& p) {
  std::ostringstream os;
  os << "wordsize " << p.word_size << "\n";
  os << "gp " << hex(p.gp_value) << "\n";
  for (const auto& f : p.functions) {
    os << "func " << f.name << " @" << hex(f.entry_address) << " frame=" << hex(f.frame_size)
       << " params=" << f.num_params << " {\n";
    for (const auto& b : f.stack_buffers)
      os << "  buf " << b.name << " @sp+" << hex(b.offset) << " size=" << hex(b.size) << "\n";
    for (const auto& b : f.blocks) {
      os << b.label << ":\n";
      for (const auto& s : b.statements) os << "  " << to_text(s, f) << "\n";
    }
    os << "}\n";
  }
  for (const auto& d : p.data_objects) {
    os << "data " << d.label << " @" << hex(d.address) << " {";
    for (size_t i = 0; i < d.words.size(); ++i) os << (i ? ", " : " ") << "word " << hex(d.words[i]);
    os << " }\n";
  }
  if (!p.string_table.empty()) {
    os << "strings {\n";
    for (const auto& [a, s] : p.string_table) {
      os << "  @" << hex(a) << " \"";
      for (char c : s) {
        if (c == '"' || c == '\\') os << '\\' << c;
        else if (c == '\n') os << "\\n";
        else if (c == '\t') os << "\\t";
        else if (c == '\0') os << "\\0";
        else os << c;
      }
      os << "\"\n";
    }
    os << "}\n";
  }
  return os.str();
}

bool structurally_equal(const Program& a, const Program& b) {
  if (a.word_size != b.word_size || a.gp_value != b.gp_value ||
      a.functions.size() != b.functions.size() || a.string_table != b.string_table ||
      a.data_objects.size() != b.data_objects.size())
    return false;
  for (size_t i = 0; i < a.data_objects.size(); ++i) {
    const auto &x = a.data_objects[i], &y = b.data_objects[i];
    if (x.label != y.label || x.address != y.address || x.words != y.words) return false;
  }
  for (size_t i = 0; i < a.functions.size(); ++i) {
    const auto &f = a.functions[i], &g = b.functions[i];
    if (f.name != g.name || f.entry_address != g.entry_address || f.frame_size != g.frame_size ||
        f.num_params != g.num_params || f.stack_buffers != g.stack_buffers ||
        f.blocks.size() != g.blocks.size())
      return false;
    for (size_t j = 0; j < f.blocks.size(); ++j) {
      const auto &x = f.blocks[j], &y = g.blocks[j];
      if (x.label != y.label || x.statements.size() != y.statements.size()) return false;
      for (size_t k = 0; k < x.statements.size(); ++k)
        if (x.statements[k].form != y.statements[k].form || x.statements[k].id != y.statements[k].id)
          return false;
    }
  }
  return true;
}

}  // namespace symalias
