#include <cctype>
#include <charconv>
#include <sstream>

#include "symalias/sse.hpp"

namespace symalias {

std::string point_name(const Point& p, const Program* program) {
  std::string fn, blk;
  const Function* f =
      program && p.func < program->functions.size() ? &program->functions[p.func] : nullptr;
  fn = f ? f->name : "f" + std::to_string(p.func);
  if (p.block == Point::kPrologue)
    blk = "$entry";
  else if (p.block == Point::kExit)
    blk = "$exit";
  else if (f && p.block < f->blocks.size())
    blk = f->blocks[p.block].label;
  else
    blk = "b" + std::to_string(p.block);
  return fn + ":" + blk + ":" + std::to_string(p.pos);
}

namespace sse {
namespace {

std::string hex(Word v) {
  std::ostringstream os;
  os << "0x" << std::hex << std::uppercase << v;
  return os.str();
}

std::string signed_hex(Word v) {
  auto s = static_cast<int64_t>(v);
  if (s < 0) return "-" + hex(~v + 1);
  return hex(v);
}

struct Printer {
  PrintMode mode;
  const Program* program;

  std::string site(const Point& p) const { return point_name(p, program); }

  std::string index_text(const Sse& e) const {
    if (mode == PrintMode::Full)
      return "idx(" + print(e->kids[0]) + "," + hex(e->stride) + "," + site(e->index_id) + ")";
    return print(e->kids[0]) + "+i*" + hex(e->stride);
  }

  // Operand of a prefix operator: compound sums get parentheses.
  std::string atom(const Sse& e) const {
    if (e->kind == NodeKind::Sum || (e->kind == NodeKind::Index && mode == PrintMode::Compact))
      return "(" + print(e) + ")";
    return print(e);
  }

  std::string print(const Sse& e) const {
    switch (e->kind) {
      case NodeKind::Reg: return e->reg.upper_name();
      case NodeKind::Val: return signed_hex(e->val);
      case NodeKind::Index: return index_text(e);
      case NodeKind::Sum: {
        std::string out;
        for (size_t i = 0; i < e->kids.size(); ++i) {
          const Sse& t = e->kids[i];
          std::string s;
          if (t->kind == NodeKind::Unop && t->uop == UnOpKind::Neg) {
            s = "-" + atom(t->kids[0]);
          } else {
            s = print(t);
          }
          if (i > 0 && s[0] != '-') out += "+";
          out += s;
        }
        return out;
      }
      case NodeKind::Binop:
        return "(" + print(e->kids[0]) + std::string(to_symbol(e->bop)) + print(e->kids[1]) + ")";
      case NodeKind::Unop: return std::string(to_symbol(e->uop)) + atom(e->kids[0]);
      case NodeKind::Load:
      case NodeKind::Store: {
        std::string s = e->kind == NodeKind::Load ? "load" : "store";
        if (mode == PrintMode::Full) s += "@" + site(e->site);
        return s + "(" + print(e->kids[0]) + ")";
      }
    }
    return "?";
  }
};

class Parser {
 public:
  Parser(std::string_view text, const Program* program, Point def)
      : s_(text), program_(program), def_(def) {}

  Sse run() {
    Sse e = expr();
    skip();
    if (i_ != s_.size()) fail("unexpected trailing input");
    return e;
  }

 private:
  std::string_view s_;
  size_t i_ = 0;
  const Program* program_;
  Point def_;

  [[noreturn]] void fail(const std::string& msg) const {
    Diagnostic d;
    d.column = static_cast<uint32_t>(i_ + 1);
    d.message = "expression: " + msg + " in '" + std::string(s_) + "'";
    throw ParseError(d);
  }

  void skip() {
    while (i_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[i_]))) ++i_;
  }
  bool eat(std::string_view t) {
    skip();
    if (s_.substr(i_, t.size()) == t) {
      i_ += t.size();
      return true;
    }
    return false;
  }
  void expect(std::string_view t) {
    if (!eat(t)) fail("expected '" + std::string(t) + "'");
  }

  std::string ident() {
    skip();
    size_t b = i_;
    while (i_ < s_.size() && (std::isalnum(static_cast<unsigned char>(s_[i_])) || s_[i_] == '_'))
      ++i_;
    return std::string(s_.substr(b, i_ - b));
  }

  Word number() {
    skip();
    size_t b = i_;
    int base = 10;
    if (s_.substr(i_, 2) == "0x" || s_.substr(i_, 2) == "0X") {
      i_ += 2;
      b = i_;
      base = 16;
    }
    while (i_ < s_.size() && std::isxdigit(static_cast<unsigned char>(s_[i_]))) ++i_;
    Word v = 0;
    auto [p, ec] = std::from_chars(s_.data() + b, s_.data() + i_, v, base);
    if (ec != std::errc() || p != s_.data() + i_ || b == i_) fail("bad number");
    return v;
  }

  Point site() {
    skip();
    size_t b = i_;
    while (i_ < s_.size() && s_[i_] != '(' && s_[i_] != ')' && s_[i_] != ',' &&
           !std::isspace(static_cast<unsigned char>(s_[i_])))
      ++i_;
    std::string t(s_.substr(b, i_ - b));
    size_t c1 = t.find(':'), c2 = t.rfind(':');
    if (c1 == std::string::npos || c1 == c2) fail("bad site '" + t + "'");
    std::string fn = t.substr(0, c1), blk = t.substr(c1 + 1, c2 - c1 - 1);
    Point p;
    p.pos = static_cast<uint32_t>(std::stoul(t.substr(c2 + 1)));
    const Function* f = nullptr;
    if (program_) {
      auto fi = program_->function_index(fn);
      if (!fi) fail("unknown function '" + fn + "'");
      p.func = *fi;
      f = &program_->functions[*fi];
    } else if (fn.size() > 1 && fn[0] == 'f') {
      p.func = static_cast<uint32_t>(std::stoul(fn.substr(1)));
    }
    if (blk == "$entry") {
      p.block = Point::kPrologue;
    } else if (blk == "$exit") {
      p.block = Point::kExit;
    } else if (f) {
      auto bi = f->block_index(blk);
      if (!bi) fail("unknown block '" + blk + "'");
      p.block = *bi;
    } else if (blk.size() > 1 && blk[0] == 'b') {
      p.block = static_cast<uint32_t>(std::stoul(blk.substr(1)));
    } else {
      fail("cannot resolve block '" + blk + "' without a program");
    }
    return p;
  }

  static std::optional<Reg> reg_name(std::string t) {
    for (auto& c : t) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    if (t == "rv") return Reg::rv();
    if (t.size() >= 2 && t[0] == 'p' && std::isdigit(static_cast<unsigned char>(t[1]))) {
      uint32_t n = 0;
      auto [p, ec] = std::from_chars(t.data() + 1, t.data() + t.size(), n);
      if (ec == std::errc() && p == t.data() + t.size()) return Reg::param(n);
    }
    return parse_register(t);
  }

  Sse expr() {
    std::vector<Sse> terms;
    std::optional<Word> stride;
    bool neg = false;
    if (eat("-")) neg = true;
    for (;;) {
      skip();
      if (s_.substr(i_, 2) == "i*") {
        if (neg || stride) fail("bad index term");
        i_ += 2;
        stride = number();
      } else {
        Sse t = term();
        terms.push_back(neg ? unop(UnOpKind::Neg, t) : t);
      }
      skip();
      if (i_ < s_.size() && s_[i_] == '+') {
        ++i_;
        neg = false;
      } else if (i_ < s_.size() && s_[i_] == '-') {
        ++i_;
        neg = true;
      } else {
        break;
      }
    }
    Sse base = sum(std::move(terms));
    if (stride) return index(base, *stride, def_);
    return base;
  }

  Sse term() {
    skip();
    if (eat("~")) return unop(UnOpKind::Not, term());
    if (eat("!")) return unop(UnOpKind::LogicalNot, term());
    if (eat("-")) return unop(UnOpKind::Neg, term());
    if (eat("(")) {
      Sse a = expr();
      static const std::pair<std::string_view, BinOpKind> ops[] = {
          {"<<", BinOpKind::Shl},   {">>", BinOpKind::Shr},   {"<=", BinOpKind::CmpLe},
          {">=", BinOpKind::CmpGe}, {"==", BinOpKind::CmpEq}, {"!=", BinOpKind::CmpNe},
          {"<", BinOpKind::CmpLt},  {">", BinOpKind::CmpGt},  {"*", BinOpKind::Mul},
          {"/", BinOpKind::Div},    {"&", BinOpKind::And},    {"|", BinOpKind::Or},
          {"^", BinOpKind::Xor}};
      for (auto [sym, op] : ops)
        if (eat(sym)) {
          Sse b = expr();
          expect(")");
          return binop(op, a, b);
        }
      expect(")");
      return a;
    }
    if (i_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[i_]))) return val(number());
    std::string id = ident();
    if (id.empty()) fail("expected expression");
    if (id == "load" || id == "store") {
      Point p = def_;
      if (eat("@")) p = site();
      expect("(");
      Sse a = expr();
      expect(")");
      return id == "load" ? load(a, p) : store(a, p);
    }
    if (id == "idx") {
      expect("(");
      Sse b = expr();
      expect(",");
      Word st = number();
      expect(",");
      Point p = site();
      expect(")");
      return index(b, st, p);
    }
    if (auto r = reg_name(id)) return reg(*r);
    fail("unknown token '" + id + "'");
  }
};

}  // namespace

std::string to_string(const Sse& e, PrintMode mode, const Program* program) {
  return Printer{mode, program}.print(e);
}

Sse parse(std::string_view text, const Program* program, Point default_site) {
  return Parser(text, program, default_site).run();
}

}  // namespace sse
}  // namespace symalias
