// SPDX-License-Identifier: Apache-2.0
#include "atlas/pyast.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <functional>
#include <set>
#include <sstream>

namespace atlas::py {

namespace {

constexpr std::array<std::string_view, 35> kKeywords = {
    "False", "None",   "True",    "and",      "as",       "assert", "async",
    "await", "break",  "class",   "continue", "def",      "del",    "elif",
    "else",  "except", "finally", "for",      "from",     "global", "if",
    "import", "in",    "is",      "lambda",   "nonlocal", "not",    "or",
    "pass",  "raise",  "return",  "try",      "while",    "with",   "yield"};

// Longest first within each length class.
constexpr std::array<std::string_view, 4> kOps3 = {"**=", "//=", ">>=", "<<="};
constexpr std::array<std::string_view, 19> kOps2 = {
    "**", "//", ">>", "<<", "<=", ">=", "==", "!=", "->", ":=",
    "+=", "-=", "*=", "/=", "%=", "&=", "|=", "^=", "@="};
constexpr std::string_view kOps1 = "+-*/%@&|^~<>()[]{},:.;=";

enum class Tok { name, number, string, op, newline, indent, dedent, end };

struct Token {
  Tok kind;
  std::string text;
  int line;
  int col;
  bool bytes = false;
};

bool ident_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_'; }
bool ident_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; }

class Lexer {
 public:
  explicit Lexer(std::string_view src) : src_(src) {}

  std::vector<Token> run() {
    while (pos_ < src_.size()) {
      if (line_start_ && brackets_.empty()) {
        if (!indentation()) continue;
      }
      const char c = src_[pos_];
      if (c == ' ' || c == '\f') {
        advance();
      } else if (c == '\t') {
        fail("tab characters are not supported");
      } else if (c == '#') {
        while (pos_ < src_.size() && src_[pos_] != '\n') advance();
      } else if (c == '\r' || c == '\n') {
        newline_char();
        if (brackets_.empty()) {
          emit(Tok::newline, "");
          line_start_ = true;
        }
      } else if (c == '\\') {
        advance();
        if (pos_ >= src_.size() || (src_[pos_] != '\n' && src_[pos_] != '\r'))
          fail("unexpected character after line continuation character");
        newline_char();
        if (pos_ >= src_.size()) fail("unexpected EOF after line continuation");
      } else if (string_start()) {
        string_literal();
      } else if (ident_start(c)) {
        const int col = col_;
        const std::size_t b = pos_;
        while (pos_ < src_.size() && ident_char(src_[pos_])) advance();
        if (pos_ < src_.size() && static_cast<unsigned char>(src_[pos_]) >= 0x80)
          fail("non-ASCII identifiers are not supported");
        tokens_.push_back({Tok::name, std::string(src_.substr(b, pos_ - b)), line_, col});
      } else if (std::isdigit(static_cast<unsigned char>(c)) ||
                 (c == '.' && pos_ + 1 < src_.size() &&
                  std::isdigit(static_cast<unsigned char>(src_[pos_ + 1])))) {
        number();
      } else if (static_cast<unsigned char>(c) >= 0x80) {
        fail("invalid non-ASCII character");
      } else {
        op();
      }
    }
    if (!brackets_.empty()) fail("unexpected EOF: unclosed bracket");
    if (!tokens_.empty() && tokens_.back().kind != Tok::newline &&
        tokens_.back().kind != Tok::dedent)
      emit(Tok::newline, "");
    while (indents_.size() > 1) {
      indents_.pop_back();
      emit(Tok::dedent, "");
    }
    emit(Tok::end, "");
    return std::move(tokens_);
  }

 private:
  [[noreturn]] void fail(const std::string& msg) const { throw SyntaxError(msg, line_, col_); }

  void advance() {
    ++pos_;
    ++col_;
  }

  void newline_char() {
    if (src_[pos_] == '\r' && pos_ + 1 < src_.size() && src_[pos_ + 1] == '\n') ++pos_;
    ++pos_;
    ++line_;
    col_ = 0;
  }

  void emit(Tok kind, std::string text) { tokens_.push_back({kind, std::move(text), line_, col_}); }

  // Returns false when the physical line was blank or comment-only and has
  // been consumed entirely.
  bool indentation() {
    int width = 0;
    while (pos_ < src_.size() && (src_[pos_] == ' ' || src_[pos_] == '\f')) {
      width = src_[pos_] == ' ' ? width + 1 : 0;
      advance();
    }
    if (pos_ < src_.size() && src_[pos_] == '\t') fail("tab indentation is not supported");
    if (pos_ >= src_.size()) return false;
    const char c = src_[pos_];
    if (c == '#' || c == '\n' || c == '\r') {
      while (pos_ < src_.size() && src_[pos_] != '\n' && src_[pos_] != '\r') advance();
      if (pos_ < src_.size()) newline_char();
      return false;
    }
    line_start_ = false;
    if (width > indents_.back()) {
      if (tokens_.empty() || tokens_.back().kind != Tok::newline) fail("unexpected indent");
      indents_.push_back(width);
      emit(Tok::indent, "");
    } else {
      while (width < indents_.back()) {
        indents_.pop_back();
        emit(Tok::dedent, "");
      }
      if (width != indents_.back()) fail("unindent does not match any outer indentation level");
    }
    return true;
  }

  bool string_start() const {
    std::size_t i = pos_;
    while (i < src_.size() && i - pos_ < 2 && std::isalpha(static_cast<unsigned char>(src_[i]))) ++i;
    if (i >= src_.size() || (src_[i] != '\'' && src_[i] != '"')) return false;
    std::string prefix;
    for (std::size_t k = pos_; k < i; ++k)
      prefix += static_cast<char>(std::tolower(static_cast<unsigned char>(src_[k])));
    static const std::set<std::string> valid = {"", "r", "u", "b", "br", "rb", "f", "fr", "rf"};
    return valid.count(prefix) > 0;
  }

  void string_literal() {
    const int line = line_, col = col_;
    bool is_bytes = false;
    while (src_[pos_] != '\'' && src_[pos_] != '"') {
      const char p = static_cast<char>(std::tolower(static_cast<unsigned char>(src_[pos_])));
      if (p == 'f') fail("f-strings are not supported");
      if (p == 'b') is_bytes = true;
      advance();
    }
    const char quote = src_[pos_];
    const bool triple = pos_ + 2 < src_.size() && src_[pos_ + 1] == quote && src_[pos_ + 2] == quote;
    const std::size_t body_start = pos_;
    for (int k = 0; k < (triple ? 3 : 1); ++k) advance();
    while (true) {
      if (pos_ >= src_.size()) throw SyntaxError("unterminated string literal", line, col);
      const char c = src_[pos_];
      if (is_bytes && static_cast<unsigned char>(c) >= 0x80)
        fail("bytes can only contain ASCII literal characters");
      if (c == '\\') {
        advance();
        if (pos_ >= src_.size()) throw SyntaxError("unterminated string literal", line, col);
        if (src_[pos_] == '\n' || src_[pos_] == '\r')
          newline_char();
        else
          advance();
        continue;
      }
      if (c == '\n' || c == '\r') {
        if (!triple) throw SyntaxError("unterminated string literal", line, col);
        newline_char();
        continue;
      }
      if (c == quote) {
        if (!triple) {
          advance();
          break;
        }
        if (pos_ + 2 < src_.size() && src_[pos_ + 1] == quote && src_[pos_ + 2] == quote) {
          advance();
          advance();
          advance();
          break;
        }
      }
      advance();
    }
    Token t{Tok::string, std::string(src_.substr(body_start, pos_ - body_start)), line, col};
    t.bytes = is_bytes;
    tokens_.push_back(std::move(t));
  }

  bool digit_run(int base) {
    auto is_digit = [base](char c) {
      const unsigned char u = static_cast<unsigned char>(c);
      switch (base) {
        case 16: return std::isxdigit(u) != 0;
        case 8: return c >= '0' && c <= '7';
        case 2: return c == '0' || c == '1';
        default: return std::isdigit(u) != 0;
      }
    };
    if (pos_ >= src_.size() || !is_digit(src_[pos_])) return false;
    while (pos_ < src_.size()) {
      if (is_digit(src_[pos_])) {
        advance();
      } else if (src_[pos_] == '_' && pos_ + 1 < src_.size() && is_digit(src_[pos_ + 1])) {
        advance();
      } else {
        break;
      }
    }
    return true;
  }

  void number() {
    const int col = col_;
    const std::size_t b = pos_;
    const char c0 = src_[pos_];
    const char c1 = pos_ + 1 < src_.size()
                        ? static_cast<char>(std::tolower(static_cast<unsigned char>(src_[pos_ + 1])))
                        : '\0';
    if (c0 == '0' && (c1 == 'x' || c1 == 'o' || c1 == 'b')) {
      advance();
      advance();
      if (pos_ < src_.size() && src_[pos_] == '_') advance();
      if (!digit_run(c1 == 'x' ? 16 : c1 == 'o' ? 8 : 2)) fail("invalid number literal");
    } else {
      bool is_int = true;
      if (c0 != '.') digit_run(10);
      const std::string int_part(src_.substr(b, pos_ - b));
      if (pos_ < src_.size() && src_[pos_] == '.') {
        is_int = false;
        advance();
        digit_run(10);
      }
      if (pos_ < src_.size() && (src_[pos_] == 'e' || src_[pos_] == 'E')) {
        is_int = false;
        advance();
        if (pos_ < src_.size() && (src_[pos_] == '+' || src_[pos_] == '-')) advance();
        if (!digit_run(10)) fail("invalid decimal literal");
      }
      if (pos_ < src_.size() && (src_[pos_] == 'j' || src_[pos_] == 'J')) {
        is_int = false;
        advance();
      }
      if (is_int && int_part.size() > 1 && int_part[0] == '0' &&
          int_part.find_first_not_of("0_") != std::string::npos)
        fail("leading zeros in decimal integer literals are not permitted");
    }
    if (pos_ < src_.size() && (ident_char(src_[pos_]) || src_[pos_] == '.'))
      fail("invalid number literal");
    tokens_.push_back({Tok::number, std::string(src_.substr(b, pos_ - b)), line_, col});
  }

  void op() {
    const auto rest = src_.substr(pos_);
    std::string_view found;
    if (rest.substr(0, 3) == "...") found = "...";
    for (auto o : kOps3)
      if (found.empty() && rest.substr(0, 3) == o) found = o;
    for (auto o : kOps2)
      if (found.empty() && rest.substr(0, 2) == o) found = o;
    if (found.empty() && kOps1.find(rest[0]) != std::string_view::npos) found = rest.substr(0, 1);
    if (found.empty()) fail(std::string("invalid character '") + rest[0] + "'");
    const int col = col_;
    if (found == "(" || found == "[" || found == "{") brackets_.push_back(found[0]);
    if (found == ")" || found == "]" || found == "}") {
      const char open = found == ")" ? '(' : found == "]" ? '[' : '{';
      if (brackets_.empty() || brackets_.back() != open) fail("unmatched '" + std::string(found) + "'");
      brackets_.pop_back();
    }
    for (std::size_t k = 0; k < found.size(); ++k) advance();
    tokens_.push_back({Tok::op, std::string(found), line_, col});
  }

  std::string_view src_;
  std::size_t pos_ = 0;
  int line_ = 1;
  int col_ = 0;
  bool line_start_ = true;
  std::vector<int> indents_{0};
  std::vector<char> brackets_;
  std::vector<Token> tokens_;
};

}  // namespace

bool is_keyword(std::string_view word) {
  return std::find(kKeywords.begin(), kKeywords.end(), word) != kKeywords.end();
}

class Parser {
 public:
  explicit Parser(std::vector<Token> tokens) : toks_(std::move(tokens)) {}

  SyntaxTree run() {
    const NodeId module = make("Module");
    while (!at(Tok::end)) {
      if (at(Tok::newline)) {
        ++pos_;
        continue;
      }
      statement(module);
    }
    return std::move(tree_);
  }

 private:
  // ---- token helpers -------------------------------------------------------

  const Token& peek(std::size_t k = 0) const {
    return toks_[std::min(pos_ + k, toks_.size() - 1)];
  }
  bool at(Tok kind) const { return peek().kind == kind; }
  bool at_op(std::string_view s, std::size_t k = 0) const {
    return peek(k).kind == Tok::op && peek(k).text == s;
  }
  bool at_kw(std::string_view s, std::size_t k = 0) const {
    return peek(k).kind == Tok::name && peek(k).text == s;
  }
  bool at_name(std::size_t k = 0) const {
    return peek(k).kind == Tok::name && !is_keyword(peek(k).text);
  }
  bool at_async_for() const { return at_kw("async") && at_kw("for", 1); }
  bool at_comp_for() const { return at_kw("for") || at_async_for(); }

  [[noreturn]] void fail(const std::string& msg) const {
    throw SyntaxError(msg, peek().line, peek().col);
  }
  void expect_op(std::string_view s) {
    if (!at_op(s)) fail("expected '" + std::string(s) + "'");
    ++pos_;
  }
  void expect_kw(std::string_view s) {
    if (!at_kw(s)) fail("expected '" + std::string(s) + "'");
    ++pos_;
  }
  std::string expect_name() {
    if (!at_name()) fail("expected identifier");
    return toks_[pos_++].text;
  }
  void expect_newline() {
    if (!at(Tok::newline)) fail("invalid syntax");
    ++pos_;
  }

  bool at_expr_start() const {
    const Token& t = peek();
    switch (t.kind) {
      case Tok::number:
      case Tok::string: return true;
      case Tok::name:
        return !is_keyword(t.text) || t.text == "not" || t.text == "lambda" ||
               t.text == "await" || t.text == "None" || t.text == "True" || t.text == "False";
      case Tok::op:
        return t.text == "(" || t.text == "[" || t.text == "{" || t.text == "-" || t.text == "+" ||
               t.text == "~" || t.text == "*" || t.text == "...";
      default: return false;
    }
  }

  // ---- tree helpers --------------------------------------------------------

  NodeId make(std::string type) {
    Node n;
    n.type = std::move(type);
    n.line = peek().line;
    tree_.nodes_.push_back(std::move(n));
    return tree_.nodes_.size() - 1;
  }
  NodeId make(std::string type, std::initializer_list<NodeId> children) {
    const NodeId id = make(std::move(type));
    for (NodeId c : children) attach(id, c);
    return id;
  }
  void attach(NodeId parent, NodeId child) {
    tree_.nodes_[child].parent = parent;
    tree_.nodes_[parent].children.push_back(child);
  }
  const std::string& type_of(NodeId id) const { return tree_.nodes_[id].type; }
  Node& node(NodeId id) { return tree_.nodes_[id]; }

  enum class TargetKind { assign, del, aug };

  void check_target(NodeId id, TargetKind kind, bool in_sequence = false) {
    const std::string& t = type_of(id);
    if (t == "Name" || t == "Attribute" || t == "Subscript") return;
    if (kind != TargetKind::aug && (t == "Tuple" || t == "List")) {
      for (NodeId c : tree_.nodes_[id].children) check_target(c, kind, true);
      return;
    }
    if (kind == TargetKind::assign && in_sequence && t == "Starred") {
      check_target(tree_.nodes_[id].children.at(0), kind, false);
      return;
    }
    throw SyntaxError("cannot assign to " + t, tree_.nodes_[id].line, 0);
  }

  // ---- statements ----------------------------------------------------------

  void statement(NodeId parent) {
    if (at_op("@")) return decorated(parent);
    if (at_kw("def")) return attach(parent, function_def({}, false));
    if (at_kw("class")) return attach(parent, class_def({}));
    if (at_kw("if")) return attach(parent, if_stmt());
    if (at_kw("while")) return attach(parent, while_stmt());
    if (at_kw("for")) return attach(parent, for_stmt(false));
    if (at_kw("try")) return attach(parent, try_stmt());
    if (at_kw("with")) return attach(parent, with_stmt(false));
    if (at_kw("async")) {
      ++pos_;
      if (at_kw("def")) return attach(parent, function_def({}, true));
      if (at_kw("for")) return attach(parent, for_stmt(true));
      if (at_kw("with")) return attach(parent, with_stmt(true));
      fail("invalid syntax after 'async'");
    }
    simple_statements(parent);
  }

  void simple_statements(NodeId parent) {
    attach(parent, simple_statement());
    while (at_op(";")) {
      ++pos_;
      if (at(Tok::newline)) break;
      attach(parent, simple_statement());
    }
    expect_newline();
  }

  void block(NodeId parent) {
    expect_op(":");
    if (!at(Tok::newline)) {
      simple_statements(parent);
      return;
    }
    ++pos_;
    if (!at(Tok::indent)) fail("expected an indented block");
    ++pos_;
    while (!at(Tok::dedent) && !at(Tok::end)) statement(parent);
    if (at(Tok::dedent)) ++pos_;
  }

  NodeId simple_statement() {
    const Token& t = peek();
    if (t.kind == Tok::name) {
      const std::string& w = t.text;
      if (w == "pass" || w == "break" || w == "continue") {
        ++pos_;
        return make(w == "pass" ? "Pass" : w == "break" ? "Break" : "Continue");
      }
      if (w == "return") {
        const NodeId r = make("Return");
        ++pos_;
        if (at_expr_start()) attach(r, star_expressions());
        return r;
      }
      if (w == "raise") {
        const NodeId r = make("Raise");
        ++pos_;
        if (at_expr_start()) {
          attach(r, expression());
          if (at_kw("from")) {
            ++pos_;
            attach(r, expression());
          }
        }
        return r;
      }
      if (w == "global" || w == "nonlocal") {
        const NodeId g = make(w == "global" ? "Global" : "Nonlocal");
        ++pos_;
        node(g).identifiers.push_back(expect_name());
        while (at_op(",")) {
          ++pos_;
          node(g).identifiers.push_back(expect_name());
        }
        return g;
      }
      if (w == "del") {
        const NodeId d = make("Delete");
        ++pos_;
        do {
          if (at_op(",")) ++pos_;
          if (!at_expr_start()) {
            if (node(d).children.empty()) fail("invalid syntax");
            break;
          }
          const NodeId target = bitor_expr();
          check_target(target, TargetKind::del);
          attach(d, target);
        } while (at_op(","));
        return d;
      }
      if (w == "assert") {
        const NodeId a = make("Assert");
        ++pos_;
        attach(a, expression());
        if (at_op(",")) {
          ++pos_;
          attach(a, expression());
        }
        return a;
      }
      if (w == "import") return import_stmt();
      if (w == "from") return import_from();
    }
    return expression_statement();
  }

  NodeId expression_statement() {
    const NodeId first = at_kw("yield") ? yield_expr() : star_expressions();
    if (at_op(":")) {
      const std::string& t = type_of(first);
      if (t != "Name" && t != "Attribute" && t != "Subscript")
        fail("only single target (not " + t + ") can be annotated");
      ++pos_;
      const NodeId ann = make("AnnAssign", {first, expression()});
      if (at_op("=")) {
        ++pos_;
        attach(ann, at_kw("yield") ? yield_expr() : star_expressions());
      }
      return ann;
    }
    static const std::set<std::string, std::less<>> aug = {"+=", "-=", "*=", "/=", "//=", "%=", "@=",
                                                           "&=", "|=", "^=", ">>=", "<<=", "**="};
    if (peek().kind == Tok::op && aug.count(peek().text)) {
      check_target(first, TargetKind::aug);
      ++pos_;
      return make("AugAssign", {first, at_kw("yield") ? yield_expr() : star_expressions()});
    }
    if (at_op("=")) {
      std::vector<NodeId> parts{first};
      while (at_op("=")) {
        ++pos_;
        parts.push_back(at_kw("yield") ? yield_expr() : star_expressions());
      }
      const NodeId assign = make("Assign");
      for (std::size_t i = 0; i + 1 < parts.size(); ++i) {
        check_target(parts[i], TargetKind::assign);
        if (type_of(parts[i]) == "Starred") fail("starred assignment target must be in a list or tuple");
        attach(assign, parts[i]);
      }
      attach(assign, parts.back());
      return assign;
    }
    if (type_of(first) == "Starred") fail("can't use starred expression here");
    return make("Expr", {first});
  }

  std::string dotted_name() {
    std::string name = expect_name();
    while (at_op(".")) {
      ++pos_;
      name += "." + expect_name();
    }
    return name;
  }

  static void add_dotted(Node& n, const std::string& dotted) {
    std::size_t start = 0;
    while (true) {
      const auto dot = dotted.find('.', start);
      n.identifiers.push_back(dotted.substr(start, dot - start));
      if (dot == std::string::npos) break;
      start = dot + 1;
    }
  }

  NodeId import_stmt() {
    const NodeId imp = make("Import");
    ++pos_;
    do {
      if (at_op(",")) ++pos_;
      const NodeId alias = make("alias");
      add_dotted(node(alias), dotted_name());
      if (at_kw("as")) {
        ++pos_;
        node(alias).identifiers.push_back(expect_name());
      }
      attach(imp, alias);
    } while (at_op(","));
    return imp;
  }

  NodeId import_from() {
    const NodeId imp = make("ImportFrom");
    ++pos_;
    int level = 0;
    while (at_op(".") || at_op("...")) {
      level += at_op(".") ? 1 : 3;
      ++pos_;
    }
    if (at_name()) {
      add_dotted(node(imp), dotted_name());
    } else if (level == 0) {
      fail("expected module name");
    }
    expect_kw("import");
    if (at_op("*")) {
      ++pos_;
      const NodeId alias = make("alias");
      attach(imp, alias);
      return imp;
    }
    const bool paren = at_op("(");
    if (paren) ++pos_;
    while (true) {
      const NodeId alias = make("alias");
      node(alias).identifiers.push_back(expect_name());
      if (at_kw("as")) {
        ++pos_;
        node(alias).identifiers.push_back(expect_name());
      }
      attach(imp, alias);
      if (!at_op(",")) break;
      ++pos_;
      if (paren && at_op(")")) break;
      if (!paren && !at_name()) fail("trailing comma not allowed without surrounding parentheses");
    }
    if (paren) expect_op(")");
    return imp;
  }

  void decorated(NodeId parent) {
    std::vector<NodeId> decorators;
    while (at_op("@")) {
      ++pos_;
      decorators.push_back(named_expression());
      expect_newline();
    }
    if (at_kw("def")) return attach(parent, function_def(decorators, false));
    if (at_kw("class")) return attach(parent, class_def(decorators));
    if (at_kw("async") && at_kw("def", 1)) {
      ++pos_;
      return attach(parent, function_def(decorators, true));
    }
    fail("invalid syntax after decorator");
  }

  NodeId function_def(const std::vector<NodeId>& decorators, bool is_async) {
    const NodeId fn = make(is_async ? "AsyncFunctionDef" : "FunctionDef");
    expect_kw("def");
    expect_name();
    expect_op("(");
    attach(fn, parameters(true, ")"));
    expect_op(")");
    for (NodeId d : decorators) attach(fn, d);
    if (at_op("->")) {
      ++pos_;
      attach(fn, expression());
    }
    block(fn);
    return fn;
  }

  NodeId parameters(bool annotations, std::string_view closer) {
    const NodeId args = make("arguments");
    bool any = false, seen_slash = false, seen_star = false, bare_star = false;
    bool seen_default = false, seen_kwarg = false;
    int kwonly = 0;
    while (!at_op(closer)) {
      if (seen_kwarg) fail("arguments cannot follow var-keyword argument");
      if (at_op("/")) {
        if (!any || seen_slash || seen_star) fail("invalid syntax at '/'");
        seen_slash = true;
        ++pos_;
      } else if (at_op("*")) {
        if (seen_star) fail("* argument may appear only once");
        seen_star = true;
        ++pos_;
        if (at_name()) {
          attach(args, param(annotations));
        } else {
          bare_star = true;
        }
      } else if (at_op("**")) {
        ++pos_;
        attach(args, param(annotations));
        seen_kwarg = true;
      } else {
        const NodeId a = param(annotations);
        attach(args, a);
        if (seen_star) ++kwonly;
        if (at_op("=")) {
          ++pos_;
          attach(args, expression());
          if (!seen_star) seen_default = true;
        } else if (!seen_star && seen_default) {
          fail("non-default argument follows default argument");
        }
      }
      any = true;
      if (!at_op(",")) break;
      ++pos_;
    }
    if (bare_star && kwonly == 0) fail("named arguments must follow bare *");
    return args;
  }

  NodeId param(bool annotations) {
    const NodeId a = make("arg");
    expect_name();
    if (annotations && at_op(":")) {
      ++pos_;
      attach(a, expression());
    }
    return a;
  }

  NodeId class_def(const std::vector<NodeId>& decorators) {
    const NodeId cls = make("ClassDef");
    expect_kw("class");
    expect_name();
    if (at_op("(")) {
      ++pos_;
      arguments(cls, false);
    }
    for (NodeId d : decorators) attach(cls, d);
    block(cls);
    return cls;
  }

  NodeId if_stmt() {
    const NodeId s = make("If");
    ++pos_;  // 'if' or 'elif'
    attach(s, named_expression());
    block(s);
    if (at_kw("elif")) {
      attach(s, if_stmt());
    } else if (at_kw("else")) {
      ++pos_;
      block(s);
    }
    return s;
  }

  NodeId while_stmt() {
    const NodeId s = make("While");
    expect_kw("while");
    attach(s, named_expression());
    block(s);
    if (at_kw("else")) {
      ++pos_;
      block(s);
    }
    return s;
  }

  NodeId for_stmt(bool is_async) {
    const NodeId s = make(is_async ? "AsyncFor" : "For");
    expect_kw("for");
    const NodeId target = star_targets();
    check_target(target, TargetKind::assign);
    attach(s, target);
    expect_kw("in");
    attach(s, star_expressions());
    block(s);
    if (at_kw("else")) {
      ++pos_;
      block(s);
    }
    return s;
  }

  NodeId try_stmt() {
    const NodeId s = make("Try");
    expect_kw("try");
    block(s);
    int handlers = 0;
    bool bare_seen = false;
    while (at_kw("except")) {
      if (bare_seen) fail("default 'except:' must be last");
      const NodeId h = make("ExceptHandler");
      ++pos_;
      if (!at_op(":")) {
        attach(h, expression());
        if (at_kw("as")) {
          ++pos_;
          expect_name();
        }
      } else {
        bare_seen = true;
      }
      block(h);
      attach(s, h);
      ++handlers;
    }
    if (handlers > 0 && at_kw("else")) {
      ++pos_;
      block(s);
    }
    bool final_block = false;
    if (at_kw("finally")) {
      ++pos_;
      block(s);
      final_block = true;
    }
    if (handlers == 0 && !final_block) fail("expected 'except' or 'finally' block");
    return s;
  }

  NodeId with_stmt(bool is_async) {
    const NodeId s = make(is_async ? "AsyncWith" : "With");
    expect_kw("with");
    do {
      if (at_op(",")) ++pos_;
      const NodeId item = make("withitem");
      attach(item, expression());
      if (at_kw("as")) {
        ++pos_;
        const NodeId target = star_target();
        check_target(target, TargetKind::assign);
        if (type_of(target) == "Starred") fail("cannot use starred expression here");
        attach(item, target);
      }
      attach(s, item);
    } while (at_op(","));
    block(s);
    return s;
  }

  // ---- expressions ---------------------------------------------------------

  NodeId star_targets() {
    const NodeId first = star_target();
    if (!at_op(",")) return first;
    const NodeId tuple = make("Tuple", {first});
    while (at_op(",")) {
      ++pos_;
      if (!at_expr_start()) break;
      attach(tuple, star_target());
    }
    return tuple;
  }

  NodeId star_target() {
    if (at_op("*")) {
      ++pos_;
      return make("Starred", {bitor_expr()});
    }
    return bitor_expr();
  }

  NodeId star_expressions() {
    const NodeId first = star_expression();
    if (!at_op(",")) return first;
    const NodeId tuple = make("Tuple", {first});
    while (at_op(",")) {
      ++pos_;
      if (!at_expr_start()) break;
      attach(tuple, star_expression());
    }
    return tuple;
  }

  NodeId star_expression() {
    if (at_op("*")) {
      ++pos_;
      return make("Starred", {bitor_expr()});
    }
    return expression();
  }

  NodeId star_named_expression() {
    if (at_op("*")) {
      ++pos_;
      return make("Starred", {bitor_expr()});
    }
    return named_expression();
  }

  NodeId named_expression() {
    if (at_name() && at_op(":=", 1)) {
      const NodeId target = make("Name");
      node(target).identifiers.push_back(toks_[pos_].text);
      pos_ += 2;
      return make("NamedExpr", {target, expression()});
    }
    return expression();
  }

  NodeId yield_expr() {
    const NodeId y0 = make("Yield");
    expect_kw("yield");
    if (at_kw("from")) {
      ++pos_;
      node(y0).type = "YieldFrom";
      attach(y0, expression());
      return y0;
    }
    if (at_expr_start()) attach(y0, star_expressions());
    return y0;
  }

  NodeId expression() {
    if (at_kw("lambda")) return lambda_expr();
    const NodeId body = disjunction();
    if (!at_kw("if")) return body;
    ++pos_;
    const NodeId test = disjunction();
    expect_kw("else");
    return make("IfExp", {test, body, expression()});
  }

  NodeId lambda_expr() {
    const NodeId lam = make("Lambda");
    expect_kw("lambda");
    attach(lam, parameters(false, ":"));
    expect_op(":");
    attach(lam, expression());
    return lam;
  }

  NodeId disjunction() { return bool_chain("or", &Parser::conjunction); }
  NodeId conjunction() { return bool_chain("and", &Parser::inversion); }

  NodeId bool_chain(std::string_view word, NodeId (Parser::*next)()) {
    const NodeId first = (this->*next)();
    if (!at_kw(word)) return first;
    const NodeId op = make("BoolOp", {first});
    while (at_kw(word)) {
      ++pos_;
      attach(op, (this->*next)());
    }
    return op;
  }

  NodeId inversion() {
    if (at_kw("not")) {
      ++pos_;
      return make("UnaryOp", {inversion()});
    }
    return comparison();
  }

  bool comparison_operator() {
    static const std::set<std::string, std::less<>> ops = {"==", "!=", "<", ">", "<=", ">="};
    if (peek().kind == Tok::op && ops.count(peek().text)) {
      ++pos_;
      return true;
    }
    if (at_kw("in")) {
      ++pos_;
      return true;
    }
    if (at_kw("not") && at_kw("in", 1)) {
      pos_ += 2;
      return true;
    }
    if (at_kw("is")) {
      ++pos_;
      if (at_kw("not")) ++pos_;
      return true;
    }
    return false;
  }

  NodeId comparison() {
    const NodeId left = bitor_expr();
    const std::size_t save = pos_;
    if (!comparison_operator()) return left;
    pos_ = save;
    const NodeId cmp = make("Compare", {left});
    while (comparison_operator()) attach(cmp, bitor_expr());
    return cmp;
  }

  NodeId binary_chain(std::initializer_list<std::string_view> ops, NodeId (Parser::*next)()) {
    NodeId left = (this->*next)();
    while (peek().kind == Tok::op &&
           std::find(ops.begin(), ops.end(), std::string_view(peek().text)) != ops.end()) {
      ++pos_;
      left = make("BinOp", {left, (this->*next)()});
    }
    return left;
  }

  NodeId bitor_expr() { return binary_chain({"|"}, &Parser::bitxor_expr); }
  NodeId bitxor_expr() { return binary_chain({"^"}, &Parser::bitand_expr); }
  NodeId bitand_expr() { return binary_chain({"&"}, &Parser::shift_expr); }
  NodeId shift_expr() { return binary_chain({"<<", ">>"}, &Parser::sum_expr); }
  NodeId sum_expr() { return binary_chain({"+", "-"}, &Parser::term); }
  NodeId term() { return binary_chain({"*", "/", "//", "%", "@"}, &Parser::factor); }

  NodeId factor() {
    if (at_op("+") || at_op("-") || at_op("~")) {
      ++pos_;
      return make("UnaryOp", {factor()});
    }
    return power();
  }

  NodeId power() {
    const NodeId base = await_primary();
    if (!at_op("**")) return base;
    ++pos_;
    return make("BinOp", {base, factor()});
  }

  NodeId await_primary() {
    if (at_kw("await")) {
      ++pos_;
      return make("Await", {primary()});
    }
    return primary();
  }

  NodeId primary() {
    NodeId e = atom();
    while (true) {
      if (at_op(".")) {
        ++pos_;
        expect_name();
        e = make("Attribute", {e});
      } else if (at_op("(")) {
        ++pos_;
        const NodeId call = make("Call", {e});
        arguments(call, true);
        e = call;
      } else if (at_op("[")) {
        ++pos_;
        const NodeId sub = make("Subscript", {e});
        attach(sub, slices());
        expect_op("]");
        e = sub;
      } else {
        return e;
      }
    }
  }

  // Parses call or class-base arguments; the opening '(' is consumed.
  void arguments(NodeId owner, bool allow_genexp) {
    bool seen_keyword = false, seen_kwunpack = false;
    int count = 0;
    while (!at_op(")")) {
      if (at_op("*")) {
        if (seen_kwunpack) fail("iterable argument unpacking follows keyword argument unpacking");
        ++pos_;
        attach(owner, make("Starred", {expression()}));
      } else if (at_op("**")) {
        ++pos_;
        attach(owner, make("keyword", {expression()}));
        seen_kwunpack = true;
      } else if (at_name() && at_op("=", 1)) {
        pos_ += 2;
        attach(owner, make("keyword", {expression()}));
        seen_keyword = true;
      } else {
        const NodeId arg = named_expression();
        if (at_comp_for()) {
          if (!allow_genexp || count > 0) fail("Generator expression must be parenthesized");
          const NodeId gen = make("GeneratorExp", {arg});
          comprehensions(gen);
          attach(owner, gen);
          if (!at_op(")")) fail("Generator expression must be parenthesized");
          break;
        }
        if (seen_kwunpack) fail("positional argument follows keyword argument unpacking");
        if (seen_keyword) fail("positional argument follows keyword argument");
        attach(owner, arg);
      }
      ++count;
      if (!at_op(",")) break;
      ++pos_;
    }
    expect_op(")");
  }

  NodeId slices() {
    const NodeId first = slice_item();
    if (!at_op(",")) return first;
    const NodeId tuple = make("Tuple", {first});
    while (at_op(",")) {
      ++pos_;
      if (at_op("]")) break;
      attach(tuple, slice_item());
    }
    return tuple;
  }

  NodeId slice_item() {
    NodeId lower = kNoNode;
    if (!at_op(":")) {
      lower = expression();
      if (!at_op(":")) return lower;
    }
    const NodeId sl = make("Slice");
    if (lower != kNoNode) attach(sl, lower);
    ++pos_;  // ':'
    if (!at_op(":") && !at_op("]") && !at_op(",")) attach(sl, expression());
    if (at_op(":")) {
      ++pos_;
      if (!at_op("]") && !at_op(",")) attach(sl, expression());
    }
    return sl;
  }

  void comprehensions(NodeId owner) {
    if (!at_comp_for()) fail("expected 'for'");
    while (at_comp_for()) {
      if (at_kw("async")) ++pos_;
      ++pos_;  // 'for'
      const NodeId comp = make("comprehension");
      const NodeId target = star_targets();
      check_target(target, TargetKind::assign);
      attach(comp, target);
      expect_kw("in");
      attach(comp, disjunction());
      while (at_kw("if")) {
        ++pos_;
        attach(comp, disjunction());
      }
      attach(owner, comp);
    }
  }

  NodeId atom() {
    const Token& t = peek();
    if (t.kind == Tok::name) {
      if (t.text == "None" || t.text == "True" || t.text == "False") {
        ++pos_;
        return make("Constant");
      }
      if (is_keyword(t.text)) fail("invalid syntax at '" + t.text + "'");
      const NodeId n = make("Name");
      node(n).identifiers.push_back(t.text);
      ++pos_;
      return n;
    }
    if (t.kind == Tok::number) {
      ++pos_;
      return make("Constant");
    }
    if (t.kind == Tok::string) {
      const bool bytes = t.bytes;
      const NodeId c = make("Constant");
      while (at(Tok::string)) {
        if (peek().bytes != bytes) fail("cannot mix bytes and nonbytes literals");
        ++pos_;
      }
      return c;
    }
    if (at_op("...")) {
      ++pos_;
      return make("Constant");
    }
    if (at_op("(")) return paren_atom();
    if (at_op("[")) return list_atom();
    if (at_op("{")) return brace_atom();
    fail("invalid syntax");
  }

  NodeId paren_atom() {
    ++pos_;
    if (at_op(")")) {
      ++pos_;
      return make("Tuple");
    }
    if (at_kw("yield")) {
      const NodeId y = yield_expr();
      expect_op(")");
      return y;
    }
    const NodeId first = star_named_expression();
    if (at_comp_for()) {
      if (type_of(first) == "Starred") fail("iterable unpacking cannot be used in comprehension");
      const NodeId gen = make("GeneratorExp", {first});
      comprehensions(gen);
      expect_op(")");
      return gen;
    }
    if (at_op(",")) {
      const NodeId tuple = make("Tuple", {first});
      while (at_op(",")) {
        ++pos_;
        if (at_op(")")) break;
        attach(tuple, star_named_expression());
      }
      expect_op(")");
      return tuple;
    }
    if (type_of(first) == "Starred") fail("cannot use starred expression here");
    expect_op(")");
    return first;
  }

  NodeId list_atom() {
    ++pos_;
    const NodeId list = make("List");
    if (at_op("]")) {
      ++pos_;
      return list;
    }
    const NodeId first = star_named_expression();
    if (at_comp_for()) {
      if (type_of(first) == "Starred") fail("iterable unpacking cannot be used in comprehension");
      node(list).type = "ListComp";
      attach(list, first);
      comprehensions(list);
      expect_op("]");
      return list;
    }
    attach(list, first);
    while (at_op(",")) {
      ++pos_;
      if (at_op("]")) break;
      attach(list, star_named_expression());
    }
    expect_op("]");
    return list;
  }

  NodeId brace_atom() {
    ++pos_;
    if (at_op("}")) {
      ++pos_;
      return make("Dict");
    }
    if (at_op("**")) {
      const NodeId dict = make("Dict");
      dict_items(dict);
      return dict;
    }
    const NodeId first = star_named_expression();
    if (at_op(":")) {
      const std::string& t = type_of(first);
      if (t == "Starred" || t == "NamedExpr") fail("invalid dictionary key");
      ++pos_;
      const NodeId value = expression();
      if (at_comp_for()) {
        const NodeId comp = make("DictComp", {first, value});
        comprehensions(comp);
        expect_op("}");
        return comp;
      }
      const NodeId dict = make("Dict", {first, value});
      if (at_op(",")) {
        ++pos_;
        dict_items(dict);
      } else {
        expect_op("}");
      }
      return dict;
    }
    if (at_comp_for()) {
      if (type_of(first) == "Starred") fail("iterable unpacking cannot be used in comprehension");
      const NodeId comp = make("SetComp", {first});
      comprehensions(comp);
      expect_op("}");
      return comp;
    }
    const NodeId set = make("Set", {first});
    while (at_op(",")) {
      ++pos_;
      if (at_op("}")) break;
      attach(set, star_named_expression());
    }
    expect_op("}");
    return set;
  }

  // Remaining `key: value` / `**mapping` items up to and including '}'.
  void dict_items(NodeId dict) {
    while (!at_op("}")) {
      if (at_op("**")) {
        ++pos_;
        attach(dict, bitor_expr());
      } else {
        attach(dict, expression());
        expect_op(":");
        attach(dict, expression());
      }
      if (!at_op(",")) break;
      ++pos_;
    }
    expect_op("}");
  }

  std::vector<Token> toks_;
  std::size_t pos_ = 0;
  SyntaxTree tree_;
};

namespace {

template <class F>
void walk(const SyntaxTree& tree, NodeId start, F&& visit) {
  std::vector<NodeId> stack{start};
  while (!stack.empty()) {
    const NodeId id = stack.back();
    stack.pop_back();
    visit(id);
    const auto& kids = tree.node(id).children;
    for (auto it = kids.rbegin(); it != kids.rend(); ++it) stack.push_back(*it);
  }
}

}  // namespace

bool SyntaxTree::contains(std::string_view type) const { return !find_all(type).empty(); }

std::vector<NodeId> SyntaxTree::find_all(std::string_view type) const {
  std::vector<NodeId> out;
  if (nodes_.empty()) return out;
  walk(*this, root(), [&](NodeId id) {
    if (nodes_[id].type == type) out.push_back(id);
  });
  return out;
}

bool SyntaxTree::references(NodeId id, std::string_view identifier) const {
  bool found = false;
  walk(*this, id, [&](NodeId n) {
    const auto& ids = nodes_[n].identifiers;
    if (std::find(ids.begin(), ids.end(), identifier) != ids.end()) found = true;
  });
  return found;
}

std::map<std::string, int> SyntaxTree::type_counts() const {
  std::map<std::string, int> counts;
  if (nodes_.empty()) return counts;
  walk(*this, root(), [&](NodeId id) { ++counts[nodes_[id].type]; });
  return counts;
}

std::string SyntaxTree::dump() const {
  std::ostringstream out;
  std::function<void(NodeId)> rec = [&](NodeId id) {
    const Node& n = nodes_[id];
    out << '(' << n.type;
    for (const auto& s : n.identifiers) out << " '" << s << "'";
    for (NodeId c : n.children) {
      out << ' ';
      rec(c);
    }
    out << ')';
  };
  if (!nodes_.empty()) rec(root());
  return out.str();
}

SyntaxTree parse_module(std::string_view source) {
  Lexer lexer(source);
  Parser parser(lexer.run());
  return parser.run();
}

std::optional<SyntaxTree> try_parse_module(std::string_view source) {
  try {
    return parse_module(source);
  } catch (const SyntaxError&) {
    return std::nullopt;
  }
}

}  // namespace atlas::py
