#include "implicit/expr.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <optional>
#include <utility>

#include "implicit/dual.hpp"
#include "implicit/error.hpp"

namespace implicit {
namespace detail {

enum class Op : std::uint8_t {
  Num, Var, Neg, Add, Sub, Mul, Div, Pow,
  Sin, Cos, Exp, Log, Sqrt, Abs, Min, Max,
  Piecewise,
  Lt, Le, Gt, Ge, And, Or,
};

struct Node {
  Op op = Op::Num;
  double num = 0.0;
  int ival = 0;             // variable index (0-based) or integer exponent
  std::uint32_t a = 0;      // first operand / base / condition lhs
  std::uint32_t b = 0;      // second operand / otherwise branch
  std::uint32_t first = 0;  // piecewise: first clause
  std::uint32_t count = 0;  // piecewise: number of guarded clauses
};

struct Tree {
  std::vector<Node> nodes;
  std::vector<std::pair<std::uint32_t, std::uint32_t>> clauses;  // (condition, value)
  std::uint32_t root = 0;
  std::size_t max_var = 0;
};

}  // namespace detail

namespace {

using detail::Node;
using detail::Op;
using detail::Tree;

// ---------------------------------------------------------------- printing

std::string format_number(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return {buf, res.ptr};
}

const char* function_name(Op op) {
  switch (op) {
    case Op::Sin: return "sin";
    case Op::Cos: return "cos";
    case Op::Exp: return "exp";
    case Op::Log: return "log";
    case Op::Sqrt: return "sqrt";
    case Op::Abs: return "abs";
    case Op::Min: return "min";
    case Op::Max: return "max";
    default: return "?";
  }
}

const char* binary_symbol(Op op) {
  switch (op) {
    case Op::Add: return " + ";
    case Op::Sub: return " - ";
    case Op::Mul: return " * ";
    case Op::Div: return " / ";
    case Op::Lt: return " < ";
    case Op::Le: return " <= ";
    case Op::Gt: return " > ";
    case Op::Ge: return " >= ";
    case Op::And: return " and ";
    case Op::Or: return " or ";
    default: return " ? ";
  }
}

void print_node(const Tree& t, std::uint32_t i, std::string& out) {
  const Node& n = t.nodes[i];
  switch (n.op) {
    case Op::Num: out += format_number(n.num); return;
    case Op::Var: out += "x" + std::to_string(n.ival + 1); return;
    case Op::Neg:
      out += "(-";
      print_node(t, n.a, out);
      out += ")";
      return;
    case Op::Add: case Op::Sub: case Op::Mul: case Op::Div:
    case Op::And: case Op::Or:
      out += "(";
      print_node(t, n.a, out);
      out += binary_symbol(n.op);
      print_node(t, n.b, out);
      out += ")";
      return;
    case Op::Lt: case Op::Le: case Op::Gt: case Op::Ge:
      print_node(t, n.a, out);
      out += binary_symbol(n.op);
      print_node(t, n.b, out);
      return;
    case Op::Pow:
      out += "(";
      print_node(t, n.a, out);
      out += "^" + std::to_string(n.ival) + ")";
      return;
    case Op::Sin: case Op::Cos: case Op::Exp: case Op::Log: case Op::Sqrt: case Op::Abs:
      out += function_name(n.op);
      out += "(";
      print_node(t, n.a, out);
      out += ")";
      return;
    case Op::Min: case Op::Max:
      out += function_name(n.op);
      out += "(";
      print_node(t, n.a, out);
      out += ", ";
      print_node(t, n.b, out);
      out += ")";
      return;
    case Op::Piecewise:
      out += "piecewise{ ";
      for (std::uint32_t k = 0; k < n.count; ++k) {
        const auto& [cond, value] = t.clauses[n.first + k];
        print_node(t, cond, out);
        out += " : ";
        print_node(t, value, out);
        out += " ; ";
      }
      out += "otherwise : ";
      print_node(t, n.b, out);
      out += " }";
      return;
  }
}

std::string print_subtree(const Tree& t, std::uint32_t i) {
  std::string s;
  print_node(t, i, s);
  return s;
}

bool same_node(const Tree& ta, std::uint32_t ia, const Tree& tb, std::uint32_t ib) {
  const Node& a = ta.nodes[ia];
  const Node& b = tb.nodes[ib];
  if (a.op != b.op) return false;
  switch (a.op) {
    case Op::Num: return a.num == b.num;
    case Op::Var: return a.ival == b.ival;
    case Op::Pow: return a.ival == b.ival && same_node(ta, a.a, tb, b.a);
    case Op::Neg: case Op::Sin: case Op::Cos: case Op::Exp: case Op::Log: case Op::Sqrt:
    case Op::Abs:
      return same_node(ta, a.a, tb, b.a);
    case Op::Piecewise:
      if (a.count != b.count || !same_node(ta, a.b, tb, b.b)) return false;
      for (std::uint32_t k = 0; k < a.count; ++k) {
        const auto& ca = ta.clauses[a.first + k];
        const auto& cb = tb.clauses[b.first + k];
        if (!same_node(ta, ca.first, tb, cb.first) || !same_node(ta, ca.second, tb, cb.second))
          return false;
      }
      return true;
    default:
      return same_node(ta, a.a, tb, b.a) && same_node(ta, a.b, tb, b.b);
  }
}

// -------------------------------------------------------------- evaluation

[[noreturn]] void domain_failure(const Tree& t, std::uint32_t i, const std::string& what,
                                 double value) {
  throw Error(ErrorKind::Domain,
              what + " in `" + print_subtree(t, i) + "` (argument " + format_number(value) + ")");
}

template <class T>
T ipow(T base, unsigned n) {
  T result(1.0);
  while (n != 0) {
    if (n & 1u) result = result * base;
    n >>= 1u;
    if (n != 0) base = base * base;
  }
  return result;
}

template <class T>
T eval_node(const Tree& t, std::uint32_t i, const T* x, const double* xp);

template <class T>
bool test_node(const Tree& t, std::uint32_t i, const T* x, const double* xp) {
  const Node& n = t.nodes[i];
  switch (n.op) {
    case Op::And: return test_node(t, n.a, x, xp) && test_node(t, n.b, x, xp);
    case Op::Or: return test_node(t, n.a, x, xp) || test_node(t, n.b, x, xp);
    default: break;
  }
  // Guards only look at primal values.
  const double lhs = eval_node<double>(t, n.a, xp, xp);
  const double rhs = eval_node<double>(t, n.b, xp, xp);
  switch (n.op) {
    case Op::Lt: return lhs < rhs;
    case Op::Le: return lhs <= rhs;
    case Op::Gt: return lhs > rhs;
    case Op::Ge: return lhs >= rhs;
    default: return false;
  }
}

template <class T>
T eval_node(const Tree& t, std::uint32_t i, const T* x, const double* xp) {
  using std::sin, std::cos, std::exp, std::log, std::sqrt, std::abs;
  const Node& n = t.nodes[i];
  switch (n.op) {
    case Op::Num: return T(n.num);
    case Op::Var: return x[n.ival];
    case Op::Neg: return -eval_node(t, n.a, x, xp);
    case Op::Add: return eval_node(t, n.a, x, xp) + eval_node(t, n.b, x, xp);
    case Op::Sub: return eval_node(t, n.a, x, xp) - eval_node(t, n.b, x, xp);
    case Op::Mul: return eval_node(t, n.a, x, xp) * eval_node(t, n.b, x, xp);
    case Op::Div: {
      T num = eval_node(t, n.a, x, xp);
      T den = eval_node(t, n.b, x, xp);
      if (primal(den) == 0.0) domain_failure(t, i, "division by zero", primal(den));
      return num / den;
    }
    case Op::Pow: {
      T base = eval_node(t, n.a, x, xp);
      if (n.ival >= 0) return ipow(base, static_cast<unsigned>(n.ival));
      if (primal(base) == 0.0) domain_failure(t, i, "division by zero", 0.0);
      return T(1.0) / ipow(base, static_cast<unsigned>(-n.ival));
    }
    case Op::Sin: return sin(eval_node(t, n.a, x, xp));
    case Op::Cos: return cos(eval_node(t, n.a, x, xp));
    case Op::Exp: return exp(eval_node(t, n.a, x, xp));
    case Op::Log: {
      T arg = eval_node(t, n.a, x, xp);
      if (!(primal(arg) > 0.0)) domain_failure(t, i, "log of non-positive value", primal(arg));
      return log(arg);
    }
    case Op::Sqrt: {
      T arg = eval_node(t, n.a, x, xp);
      if (primal(arg) < 0.0) domain_failure(t, i, "sqrt of negative value", primal(arg));
      return sqrt(arg);
    }
    case Op::Abs: return abs(eval_node(t, n.a, x, xp));
    case Op::Min: {
      T a = eval_node(t, n.a, x, xp);
      T b = eval_node(t, n.b, x, xp);
      return primal(b) < primal(a) ? b : a;
    }
    case Op::Max: {
      T a = eval_node(t, n.a, x, xp);
      T b = eval_node(t, n.b, x, xp);
      return primal(b) > primal(a) ? b : a;
    }
    case Op::Piecewise:
      for (std::uint32_t k = 0; k < n.count; ++k) {
        const auto& [cond, value] = t.clauses[n.first + k];
        if (test_node(t, cond, x, xp)) return eval_node(t, value, x, xp);
      }
      return eval_node(t, n.b, x, xp);
    default:
      break;
  }
  throw Error(ErrorKind::InvalidArgument, "condition used as a value");
}

// ----------------------------------------------------------------- parsing

enum class Tok { Number, Ident, Punct, Rel, End };

struct Token {
  Tok kind;
  std::string_view text;
  std::size_t offset;
};

std::vector<Token> tokenize(std::string_view src) {
  std::vector<Token> out;
  std::size_t i = 0;
  while (i < src.size()) {
    const char c = src[i];
    if (std::isspace(static_cast<unsigned char>(c))) {
      ++i;
      continue;
    }
    const std::size_t start = i;
    if (std::isdigit(static_cast<unsigned char>(c)) ||
        (c == '.' && i + 1 < src.size() && std::isdigit(static_cast<unsigned char>(src[i + 1])))) {
      while (i < src.size() && std::isdigit(static_cast<unsigned char>(src[i]))) ++i;
      if (i < src.size() && src[i] == '.') {
        ++i;
        while (i < src.size() && std::isdigit(static_cast<unsigned char>(src[i]))) ++i;
      }
      if (i < src.size() && (src[i] == 'e' || src[i] == 'E')) {
        std::size_t j = i + 1;
        if (j < src.size() && (src[j] == '+' || src[j] == '-')) ++j;
        if (j < src.size() && std::isdigit(static_cast<unsigned char>(src[j]))) {
          i = j;
          while (i < src.size() && std::isdigit(static_cast<unsigned char>(src[i]))) ++i;
        }
      }
      out.push_back({Tok::Number, src.substr(start, i - start), start});
    } else if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      while (i < src.size() &&
             (std::isalnum(static_cast<unsigned char>(src[i])) || src[i] == '_'))
        ++i;
      out.push_back({Tok::Ident, src.substr(start, i - start), start});
    } else if (c == '<' || c == '>') {
      i += (i + 1 < src.size() && src[i + 1] == '=') ? 2 : 1;
      out.push_back({Tok::Rel, src.substr(start, i - start), start});
    } else if (std::string_view("+-*/^(){}:;,").find(c) != std::string_view::npos) {
      ++i;
      out.push_back({Tok::Punct, src.substr(start, 1), start});
    } else {
      throw SyntaxError(ErrorKind::Syntax, start, std::string("unexpected character '") + c + "'");
    }
  }
  out.push_back({Tok::End, {}, src.size()});
  return out;
}

std::optional<Op> function_op(std::string_view name) {
  if (name == "sin") return Op::Sin;
  if (name == "cos") return Op::Cos;
  if (name == "exp") return Op::Exp;
  if (name == "log") return Op::Log;
  if (name == "sqrt") return Op::Sqrt;
  if (name == "abs") return Op::Abs;
  if (name == "min") return Op::Min;
  if (name == "max") return Op::Max;
  return std::nullopt;
}

bool is_keyword(std::string_view s) {
  return s == "piecewise" || s == "otherwise" || s == "and" || s == "or";
}

class Parser {
 public:
  Parser(std::string_view src, std::size_t dim) : tokens_(tokenize(src)), dim_(dim) {}

  Tree run() {
    tree_.root = expr();
    if (peek().kind != Tok::End) error(peek(), "unexpected trailing input");
    return std::move(tree_);
  }

 private:
  const Token& peek() const { return tokens_[pos_]; }
  const Token& next() { return tokens_[pos_++]; }
  bool punct(char c) const { return peek().kind == Tok::Punct && peek().text[0] == c; }
  bool ident(std::string_view s) const { return peek().kind == Tok::Ident && peek().text == s; }

  [[noreturn]] void error(const Token& tok, const std::string& msg) const {
    throw SyntaxError(ErrorKind::Syntax, tok.offset, msg);
  }

  void expect(char c) {
    if (!punct(c)) {
      const Token& tok = peek();
      error(tok, std::string("expected '") + c + "'" +
                     (tok.kind == Tok::End ? " but reached end of input"
                                           : " but found '" + std::string(tok.text) + "'"));
    }
    ++pos_;
  }

  std::uint32_t add(Node n) {
    tree_.nodes.push_back(n);
    return static_cast<std::uint32_t>(tree_.nodes.size() - 1);
  }
  std::uint32_t binary(Op op, std::uint32_t a, std::uint32_t b) {
    Node n;
    n.op = op;
    n.a = a;
    n.b = b;
    return add(n);
  }

  std::uint32_t expr() {
    std::uint32_t lhs = term();
    while (punct('+') || punct('-')) {
      const Op op = next().text[0] == '+' ? Op::Add : Op::Sub;
      lhs = binary(op, lhs, term());
    }
    return lhs;
  }

  std::uint32_t term() {
    std::uint32_t lhs = unary();
    while (punct('*') || punct('/')) {
      const Op op = next().text[0] == '*' ? Op::Mul : Op::Div;
      lhs = binary(op, lhs, unary());
    }
    return lhs;
  }

  std::uint32_t unary() {
    if (punct('-')) {
      ++pos_;
      Node n;
      n.op = Op::Neg;
      n.a = unary();
      return add(n);
    }
    return power();
  }

  std::uint32_t power() {
    std::uint32_t base = primary();
    if (!punct('^')) return base;
    ++pos_;
    bool negative = false;
    if (punct('-') || punct('+')) negative = next().text[0] == '-';
    const Token& tok = peek();
    if (tok.kind != Tok::Number ||
        !std::all_of(tok.text.begin(), tok.text.end(),
                     [](char c) { return std::isdigit(static_cast<unsigned char>(c)); }))
      error(tok, "exponent must be an integer literal");
    ++pos_;
    int value = 0;
    auto res = std::from_chars(tok.text.data(), tok.text.data() + tok.text.size(), value);
    if (res.ec != std::errc{} || value > 1024) error(tok, "exponent out of range");
    Node n;
    n.op = Op::Pow;
    n.a = base;
    n.ival = negative ? -value : value;
    return add(n);
  }

  std::uint32_t primary() {
    const Token& tok = peek();
    switch (tok.kind) {
      case Tok::Number: {
        ++pos_;
        double v = 0.0;
        auto res = std::from_chars(tok.text.data(), tok.text.data() + tok.text.size(), v);
        if (res.ec != std::errc{} || res.ptr != tok.text.data() + tok.text.size())
          error(tok, "malformed number '" + std::string(tok.text) + "'");
        Node n;
        n.op = Op::Num;
        n.num = v;
        return add(n);
      }
      case Tok::Ident: return identifier();
      case Tok::Punct:
        if (tok.text[0] == '(') {
          ++pos_;
          std::uint32_t inner = expr();
          expect(')');
          return inner;
        }
        error(tok, "unexpected '" + std::string(tok.text) + "'");
      case Tok::Rel: error(tok, "unexpected comparison outside a piecewise guard");
      case Tok::End: error(tok, "unexpected end of input");
    }
    error(tok, "unexpected token");
  }

  std::uint32_t identifier() {
    const Token& tok = next();
    const std::string_view name = tok.text;
    if (name == "piecewise") return piecewise(tok);
    if (auto op = function_op(name)) {
      expect('(');
      Node n;
      n.op = *op;
      n.a = expr();
      if (*op == Op::Min || *op == Op::Max) {
        expect(',');
        n.b = expr();
      }
      expect(')');
      return add(n);
    }
    if (name.size() >= 2 && name[0] == 'x' &&
        std::all_of(name.begin() + 1, name.end(),
                    [](char c) { return std::isdigit(static_cast<unsigned char>(c)); })) {
      std::size_t index = 0;
      auto res = std::from_chars(name.data() + 1, name.data() + name.size(), index);
      if (res.ec != std::errc{} || index == 0 || index > dim_)
        throw SyntaxError(ErrorKind::VariableIndex, tok.offset,
                          "variable '" + std::string(name) + "' outside x1..x" +
                              std::to_string(dim_));
      tree_.max_var = std::max(tree_.max_var, index);
      Node n;
      n.op = Op::Var;
      n.ival = static_cast<int>(index - 1);
      return add(n);
    }
    if (is_keyword(name)) error(tok, "unexpected keyword '" + std::string(name) + "'");
    throw SyntaxError(ErrorKind::UnknownIdentifier, tok.offset,
                      "unknown identifier '" + std::string(name) + "'");
  }

  std::uint32_t piecewise(const Token& head) {
    expect('{');
    std::vector<std::pair<std::uint32_t, std::uint32_t>> clauses;
    std::optional<std::uint32_t> otherwise;
    while (!otherwise) {
      if (peek().kind == Tok::End) error(head, "unterminated piecewise block");
      if (ident("otherwise")) {
        ++pos_;
        expect(':');
        otherwise = expr();
        if (punct(';')) ++pos_;
        break;
      }
      std::uint32_t cond = condition();
      expect(':');
      std::uint32_t value = expr();
      if (!punct(';')) {
        if (punct('}')) error(peek(), "piecewise block requires a final 'otherwise' clause");
        expect(';');
      }
      ++pos_;
      clauses.emplace_back(cond, value);
    }
    expect('}');
    Node n;
    n.op = Op::Piecewise;
    n.first = static_cast<std::uint32_t>(tree_.clauses.size());
    n.count = static_cast<std::uint32_t>(clauses.size());
    n.b = *otherwise;
    tree_.clauses.insert(tree_.clauses.end(), clauses.begin(), clauses.end());
    return add(n);
  }

  std::uint32_t condition() {
    std::uint32_t lhs = conjunction();
    while (ident("or")) {
      ++pos_;
      lhs = binary(Op::Or, lhs, conjunction());
    }
    return lhs;
  }

  std::uint32_t conjunction() {
    std::uint32_t lhs = comparison();
    while (ident("and")) {
      ++pos_;
      lhs = binary(Op::And, lhs, comparison());
    }
    return lhs;
  }

  std::uint32_t comparison() {
    // "(" may open either a nested condition or an arithmetic subexpression;
    // try the condition first and fall back.
    if (punct('(')) {
      const std::size_t saved_pos = pos_;
      const std::size_t saved_nodes = tree_.nodes.size();
      const std::size_t saved_var = tree_.max_var;
      std::optional<SyntaxError> first_error;
      try {
        ++pos_;
        std::uint32_t inner = condition();
        expect(')');
        if (peek().kind != Tok::Rel && !punct('+') && !punct('-') && !punct('*') && !punct('/') &&
            !punct('^'))
          return inner;
      } catch (const SyntaxError& e) {
        first_error = e;
      }
      pos_ = saved_pos;
      tree_.nodes.resize(saved_nodes);
      tree_.max_var = saved_var;
      try {
        return relation();
      } catch (const SyntaxError& e) {
        if (first_error && first_error->offset() > e.offset()) throw *first_error;
        throw;
      }
    }
    return relation();
  }

  std::uint32_t relation() {
    std::uint32_t lhs = expr();
    const Token& tok = peek();
    if (tok.kind != Tok::Rel) error(tok, "expected a comparison (<, <=, >, >=)");
    ++pos_;
    Op op = Op::Lt;
    if (tok.text == "<") op = Op::Lt;
    else if (tok.text == "<=") op = Op::Le;
    else if (tok.text == ">") op = Op::Gt;
    else op = Op::Ge;
    return binary(op, lhs, expr());
  }

  std::vector<Token> tokens_;
  std::size_t pos_ = 0;
  std::size_t dim_;
  Tree tree_;
};

}  // namespace

ScalarField parse(std::string_view source, std::size_t dim) {
  if (dim == 0) throw Error(ErrorKind::InvalidArgument, "dimension must be positive");
  if (source.find_first_not_of(" \t\r\n") == std::string_view::npos)
    throw SyntaxError(ErrorKind::Syntax, 0, "empty expression");
  ScalarField field;
  field.tree_ = std::make_shared<const Tree>(Parser(source, dim).run());
  field.dim_ = dim;
  field.source_ = std::string(source);
  return field;
}

std::size_t ScalarField::max_variable() const noexcept { return tree_ ? tree_->max_var : 0; }

namespace {
void check_point(std::size_t dim, std::span<const double> x) {
  if (x.size() != dim)
    throw Error(ErrorKind::InvalidArgument, "point has length " + std::to_string(x.size()) +
                                                ", field expects " + std::to_string(dim));
}
}  // namespace

double ScalarField::eval(std::span<const double> x) const {
  check_point(dim_, x);
  return eval_node<double>(*tree_, tree_->root, x.data(), x.data());
}

void ScalarField::gradient(std::span<const double> x, std::span<double> out) const {
  check_point(dim_, x);
  check_point(dim_, out);
  using D = Dual<double>;
  // Small fixed buffer covers every dimension used in practice.
  D stack_buf[16];
  std::vector<D> heap_buf;
  D* xs = stack_buf;
  if (dim_ > 16) {
    heap_buf.resize(dim_);
    xs = heap_buf.data();
  }
  for (std::size_t k = 0; k < dim_; ++k) xs[k] = D(x[k], 0.0);
  for (std::size_t k = 0; k < dim_; ++k) {
    xs[k].d = 1.0;
    out[k] = eval_node<D>(*tree_, tree_->root, xs, x.data()).d;
    xs[k].d = 0.0;
  }
}

Eigen::VectorXd ScalarField::gradient(std::span<const double> x) const {
  Eigen::VectorXd g(static_cast<Eigen::Index>(dim_));
  gradient(x, as_span(g));
  return g;
}

Eigen::MatrixXd ScalarField::hessian(std::span<const double> x) const {
  check_point(dim_, x);
  using D = Dual<Dual<double>>;
  const auto n = static_cast<Eigen::Index>(dim_);
  Eigen::MatrixXd h(n, n);
  std::vector<D> xs(dim_);
  for (std::size_t k = 0; k < dim_; ++k) xs[k] = D(Dual<double>(x[k], 0.0), Dual<double>(0.0, 0.0));
  for (std::size_t i = 0; i < dim_; ++i) {
    xs[i].v.d = 1.0;
    for (std::size_t j = i; j < dim_; ++j) {
      xs[j].d.v = 1.0;
      const double hij = eval_node<D>(*tree_, tree_->root, xs.data(), x.data()).d.d;
      h(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = hij;
      h(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i)) = hij;
      xs[j].d.v = 0.0;
    }
    xs[i].v.d = 0.0;
  }
  return h;
}

std::string ScalarField::print() const { return tree_ ? print_subtree(*tree_, tree_->root) : ""; }

bool ScalarField::same_tree(const ScalarField& other) const {
  if (!tree_ || !other.tree_) return tree_ == other.tree_;
  return same_node(*tree_, tree_->root, *other.tree_, other.tree_->root);
}

}  // namespace implicit
