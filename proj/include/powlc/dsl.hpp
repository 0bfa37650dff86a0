#pragma once

#include <array>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "powlc/model.hpp"

namespace powlc {

struct SourceSpan {
  int start_line = 1;
  int start_col = 1;
  int end_line = 1;
  int end_col = 1;
};

struct ParseError {
  SourceSpan span;
  std::string message;
  std::vector<std::string> expected;
};

struct ParseResult {
  std::optional<PowlModel> model;
  std::vector<ParseError> errors;

  bool ok() const { return model.has_value() && errors.empty(); }
};

namespace dsl_detail {

enum class Tok { Ident, String, LBrace, RBrace, At, Slash, Arrow, Eof };

struct Token {
  Tok kind;
  std::string text;  // identifier name or decoded string value
  SourceSpan span;
};

inline const std::array<std::string_view, 9> kReserved = {
    "process", "act", "tau", "po", "choice", "order", "edges", "start", "end"};

inline bool is_reserved(std::string_view s) {
  for (auto r : kReserved)
    if (r == s) return true;
  return false;
}

inline bool is_ident_start(char c) {
  return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c == '_';
}
inline bool is_ident_char(char c) { return is_ident_start(c) || (c >= '0' && c <= '9'); }

class Lexer {
 public:
  Lexer(std::string_view text, std::vector<ParseError>& errors) : text_(text), errors_(errors) {}

  std::vector<Token> run() {
    std::vector<Token> tokens;
    while (pos_ < text_.size()) {
      char c = text_[pos_];
      if (c == '\n') {
        advance();
        continue;
      }
      if (c == ' ' || c == '\t' || c == '\r') {
        advance();
        continue;
      }
      if (c == '#') {
        while (pos_ < text_.size() && text_[pos_] != '\n') advance();
        continue;
      }
      int sl = line_, sc = col_;
      if (c == '{' || c == '}' || c == '@' || c == '/') {
        advance();
        Tok k = c == '{' ? Tok::LBrace : c == '}' ? Tok::RBrace : c == '@' ? Tok::At : Tok::Slash;
        tokens.push_back({k, std::string(1, c), span(sl, sc)});
        continue;
      }
      if (c == '-') {
        advance();
        if (pos_ < text_.size() && text_[pos_] == '>') {
          advance();
          tokens.push_back({Tok::Arrow, "->", span(sl, sc)});
        } else {
          error(span(sl, sc), "expected '->'");
        }
        continue;
      }
      if (c == '"') {
        tokens.push_back(lex_string(sl, sc));
        continue;
      }
      if (is_ident_start(c)) {
        std::size_t begin = pos_;
        while (pos_ < text_.size() && is_ident_char(text_[pos_])) advance();
        tokens.push_back({Tok::Ident, std::string(text_.substr(begin, pos_ - begin)), span(sl, sc)});
        continue;
      }
      advance();
      error(span(sl, sc), std::string("unexpected character '") + c + "'");
    }
    tokens.push_back({Tok::Eof, "", span(line_, col_)});
    return tokens;
  }

 private:
  void advance() {
    char c = text_[pos_++];
    if (c == '\n') {
      ++line_;
      col_ = 1;
    } else if ((c & 0xC0) != 0x80) {  // count code points, not bytes
      ++col_;
    }
  }

  SourceSpan span(int sl, int sc) const {
    return {sl, sc, line_, col_ > 1 ? col_ - 1 : col_};
  }

  void error(SourceSpan s, std::string msg, std::vector<std::string> expected = {}) {
    errors_.push_back({s, std::move(msg), std::move(expected)});
  }

  Token lex_string(int sl, int sc) {
    advance();  // opening quote
    std::string value;
    while (pos_ < text_.size()) {
      char c = text_[pos_];
      if (c == '"') {
        advance();
        return {Tok::String, value, span(sl, sc)};
      }
      if (c == '\n') break;
      if (c == '\\') {
        advance();
        if (pos_ >= text_.size()) break;
        char esc = text_[pos_];
        advance();
        if (esc == '\\' || esc == '"') {
          value += esc;
        } else {
          error(span(sl, sc), std::string("unknown escape '\\") + esc + "' in string");
        }
        continue;
      }
      if (static_cast<unsigned char>(c) < 0x20) {
        error(span(sl, sc), "control character in string");
        advance();
        continue;
      }
      value += c;
      advance();
    }
    error(span(sl, sc), "unterminated string");
    return {Tok::String, value, span(sl, sc)};
  }

  std::string_view text_;
  std::vector<ParseError>& errors_;
  std::size_t pos_ = 0;
  int line_ = 1;
  int col_ = 1;
};

class Parser {
 public:
  explicit Parser(std::string_view text) : tokens_(Lexer(text, errors_).run()) {}

  ParseResult run() {
    PowlModel model;
    bool header_ok = true;
    if (!eat_keyword("process")) header_ok = false;
    if (header_ok) {
      if (auto name = expect_string("process name"))
        model.name = *name;
      else
        header_ok = false;
    }
    if (header_ok && expect(Tok::LBrace, "'{'")) {
      model.root = parse_node();
      expect(Tok::RBrace, "'}'");
    }
    if (peek().kind != Tok::Eof && errors_.empty())
      error(peek().span, "trailing input after model", {"end of file"});

    model.assignment = assignment_;
    if (model.root) run_semantic_checks(model);

    ParseResult result;
    result.errors = std::move(errors_);
    if (model.root && result.errors.empty()) result.model = std::move(model);
    return result;
  }

 private:
  const Token& peek() const { return tokens_[pos_]; }
  const Token& get() { return tokens_[pos_ < tokens_.size() - 1 ? pos_++ : pos_]; }

  bool at_keyword(std::string_view kw) const {
    return peek().kind == Tok::Ident && peek().text == kw;
  }

  bool eat_keyword(std::string_view kw) {
    if (at_keyword(kw)) {
      get();
      return true;
    }
    error(peek().span, "expected '" + std::string(kw) + "'", {std::string(kw)});
    return false;
  }

  bool expect(Tok kind, const std::string& what) {
    if (peek().kind == kind) {
      get();
      return true;
    }
    error(peek().span, "expected " + what, {what});
    return false;
  }

  std::optional<std::string> expect_string(const std::string& what) {
    if (peek().kind == Tok::String) return get().text;
    error(peek().span, "expected " + what + " (a quoted string)", {"string"});
    return std::nullopt;
  }

  std::optional<Token> expect_id(const std::string& what) {
    if (peek().kind == Tok::Ident && !is_reserved(peek().text)) return get();
    if (peek().kind == Tok::Ident)
      error(peek().span, "'" + peek().text + "' is a reserved word; expected " + what,
            {"identifier"});
    else
      error(peek().span, "expected " + what, {"identifier"});
    return std::nullopt;
  }

  void error(SourceSpan s, std::string msg, std::vector<std::string> expected = {}) {
    errors_.push_back({s, std::move(msg), std::move(expected)});
  }

  // Skips to the next statement keyword or block boundary at the current
  // nesting depth, so one bad construct doesn't swallow the rest.
  void sync() {
    int depth = 0;
    while (peek().kind != Tok::Eof) {
      const Token& t = peek();
      if (depth == 0) {
        if (t.kind == Tok::RBrace) return;
        if (t.kind == Tok::Ident &&
            (t.text == "act" || t.text == "tau" || t.text == "po" || t.text == "choice" ||
             t.text == "order" || t.text == "edges"))
          return;
      }
      if (t.kind == Tok::LBrace) ++depth;
      if (t.kind == Tok::RBrace) --depth;
      if (depth < 0) return;
      get();
    }
  }

  void register_node(const std::string& id, SourceSpan span) {
    auto [it, inserted] = node_spans_.try_emplace(id, span);
    if (!inserted) error(span, "duplicate id '" + id + "'");
  }

  PowlNodePtr parse_node() {
    if (at_keyword("act")) return parse_act();
    if (at_keyword("tau")) return parse_tau();
    if (at_keyword("po")) return parse_po();
    if (at_keyword("choice")) return parse_choice();
    error(peek().span, "expected a node", {"act", "tau", "po", "choice"});
    sync();
    return nullptr;
  }

  PowlNodePtr parse_act() {
    SourceSpan start = get().span;  // 'act'
    auto id = expect_id("an activity id");
    auto label = expect_string("an activity label");
    bool ok = expect(Tok::At, "'@'");
    auto pool = ok ? expect_string("a pool name") : std::nullopt;
    ok = ok && expect(Tok::Slash, "'/'");
    auto lane = ok ? expect_string("a lane name") : std::nullopt;
    if (!id || !label || !pool || !lane) {
      sync();
      return nullptr;
    }
    register_node(id->text, start);
    if (trim_copy(*label).empty())
      error(start, "empty activity label");
    else if (*label == "tau")
      error(start, "'tau' is not a valid activity label");
    if (trim_copy(*pool).empty()) error(start, "missing pool for activity '" + id->text + "'");
    if (trim_copy(*lane).empty()) error(start, "missing lane for activity '" + id->text + "'");
    assignment_.insert({id->text, ResourceContext{trim_copy(*pool), trim_copy(*lane)}});
    return make_transition(id->text, *label);
  }

  PowlNodePtr parse_tau() {
    SourceSpan start = get().span;  // 'tau'
    auto id = expect_id("a transition id");
    if (!id) {
      sync();
      return nullptr;
    }
    register_node(id->text, start);
    return make_transition(id->text, std::nullopt);
  }

  std::vector<PowlNodePtr> parse_children(const std::string& owner) {
    std::vector<PowlNodePtr> children;
    while (true) {
      if (at_keyword("act") || at_keyword("tau") || at_keyword("po") || at_keyword("choice")) {
        if (auto child = parse_node()) children.push_back(std::move(child));
        continue;
      }
      break;
    }
    if (children.empty())
      error(peek().span, "'" + owner + "' needs at least one child node",
            {"act", "tau", "po", "choice"});
    return children;
  }

  // Resolves a direct-child reference; cross-level references are invalid.
  std::optional<int> resolve_child(const std::vector<PowlNodePtr>& children, const Token& ref,
                                   const std::string& owner, const char* where) {
    for (std::size_t i = 0; i < children.size(); ++i)
      if (children[i]->id == ref.text) return static_cast<int>(i);
    error(ref.span, "unknown child reference '" + ref.text + "' in " + where + " of '" + owner +
                        "' (direct children only)");
    return std::nullopt;
  }

  PowlNodePtr parse_po() {
    SourceSpan start = get().span;  // 'po'
    auto id = expect_id("a partial order id");
    if (!id || !expect(Tok::LBrace, "'{'")) {
      sync();
      return nullptr;
    }
    register_node(id->text, start);
    auto children = parse_children(id->text);

    IndexEdgeSet order;
    if (at_keyword("order")) {
      get();
      expect(Tok::LBrace, "'{'");
      while (peek().kind == Tok::Ident && !is_reserved(peek().text)) {
        Token from = get();
        if (!expect(Tok::Arrow, "'->'")) break;
        auto to = expect_id("a child id");
        if (!to) break;
        auto a = resolve_child(children, from, id->text, "order");
        auto b = resolve_child(children, *to, id->text, "order");
        if (a && b) {
          if (*a == *b)
            error(from.span, "self-edge in partial order '" + id->text + "'");
          else
            order.emplace(*a, *b);
        }
      }
      expect(Tok::RBrace, "'}'");
    }
    expect(Tok::RBrace, "'}'");

    if (auto cycle = find_cycle(order, static_cast<int>(children.size()))) {
      std::string names;
      for (std::size_t i = 0; i < cycle->size(); ++i) {
        if (i) names += " -> ";
        names += children[static_cast<std::size_t>((*cycle)[i])]->id;
      }
      error(start, "cycle in order relation: " + names);
      order.clear();
    }
    return make_partial_order(id->text, std::move(children), std::move(order));
  }

  PowlNodePtr parse_choice() {
    SourceSpan start = get().span;  // 'choice'
    auto id = expect_id("a choice id");
    if (!id || !expect(Tok::LBrace, "'{'")) {
      sync();
      return nullptr;
    }
    register_node(id->text, start);
    auto children = parse_children(id->text);

    IndexEdgeSet edges;
    if (!at_keyword("edges")) {
      error(peek().span, "choice '" + id->text + "' requires an edges block", {"edges"});
      sync();
    }
    if (at_keyword("edges")) {
      get();
      expect(Tok::LBrace, "'{'");
      bool any = false;
      while (peek().kind == Tok::Ident) {
        Token from = peek();
        if (from.text != "start" && from.text != "end" && is_reserved(from.text)) break;
        get();
        if (!expect(Tok::Arrow, "'->'")) break;
        if (peek().kind != Tok::Ident) {
          error(peek().span, "expected an edge target", {"identifier", "end"});
          break;
        }
        Token to = get();
        any = true;

        std::optional<int> a, b;
        if (from.text == "start")
          a = kChoiceSource;
        else if (from.text == "end")
          error(from.span, "'end' cannot be an edge source in choice '" + id->text + "'");
        else
          a = resolve_child(children, from, id->text, "edges");
        if (to.text == "end")
          b = kChoiceSink;
        else if (to.text == "start")
          error(to.span, "'start' cannot be an edge target in choice '" + id->text + "'");
        else
          b = resolve_child(children, to, id->text, "edges");
        if (a && b) edges.emplace(*a, *b);
      }
      if (!any) error(peek().span, "choice '" + id->text + "' needs at least one edge");
      expect(Tok::RBrace, "'}'");
    }
    expect(Tok::RBrace, "'}'");

    auto node = make_choice(id->text, std::move(children), std::move(edges));
    // Off-path children are reported here with the child's own span.
    PowlModel probe{"", node, {}};
    for (const auto& v : validate_model(probe).violations) {
      if (v.rule == "child-off-path") {
        auto it = node_spans_.find(v.node_id);
        error(it != node_spans_.end() ? it->second : start, v.message);
      }
    }
    return node;
  }

  // Safety net: any model invariant not caught by a targeted check above
  // still surfaces as a parse error, so a clean parse implies a clean
  // validation report.
  void run_semantic_checks(const PowlModel& model) {
    if (!errors_.empty()) return;
    for (const auto& v : validate_model(model).violations) {
      auto it = node_spans_.find(v.node_id);
      error(it != node_spans_.end() ? it->second : SourceSpan{}, v.message);
    }
  }

  std::vector<ParseError> errors_;
  std::vector<Token> tokens_;
  std::size_t pos_ = 0;
  std::map<std::string, SourceSpan> node_spans_;
  std::map<std::string, ResourceContext> assignment_;
};

inline std::string escape_string(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (c == '\\' || c == '"') out += '\\';
    out += c;
  }
  return out;
}

inline void print_node(const PowlNodePtr& node, const PowlModel& model, int indent,
                       std::string& out) {
  std::string pad(static_cast<std::size_t>(indent) * 2, ' ');
  if (const auto* t = node->as_transition()) {
    if (t->visible()) {
      auto it = model.assignment.find(node->id);
      const ResourceContext ctx = it != model.assignment.end() ? it->second : ResourceContext{};
      out += pad + "act " + node->id + " \"" + escape_string(*t->label) + "\" @ \"" +
             escape_string(ctx.pool) + "\" / \"" + escape_string(ctx.lane) + "\"\n";
    } else {
      out += pad + "tau " + node->id + "\n";
    }
    return;
  }
  if (const auto* po = node->as_partial_order()) {
    out += pad + "po " + node->id + " {\n";
    for (const auto& c : po->children) print_node(c, model, indent + 1, out);
    if (!po->order.empty()) {
      out += pad + "  order {\n";
      for (const auto& [a, b] : po->order)
        out += pad + "    " + po->children[static_cast<std::size_t>(a)]->id + " -> " +
               po->children[static_cast<std::size_t>(b)]->id + "\n";
      out += pad + "  }\n";
    }
    out += pad + "}\n";
    return;
  }
  const auto* cg = node->as_choice();
  auto endpoint = [&](int v) -> std::string {
    if (v == kChoiceSource) return "start";
    if (v == kChoiceSink) return "end";
    return cg->children[static_cast<std::size_t>(v)]->id;
  };
  out += pad + "choice " + node->id + " {\n";
  for (const auto& c : cg->children) print_node(c, model, indent + 1, out);
  out += pad + "  edges {\n";
  for (const auto& [a, b] : cg->edges)
    out += pad + "    " + endpoint(a) + " -> " + endpoint(b) + "\n";
  out += pad + "  }\n";
  out += pad + "}\n";
}

}  // namespace dsl_detail

/// Parses a model program. All errors carry source spans; independent
/// semantic faults are collected rather than reported fail-fast.
inline ParseResult parse(std::string_view text) { return dsl_detail::Parser(text).run(); }

/// Canonical textual form; parse(print(m)) is structurally identical to m.
inline std::string print(const PowlModel& model) {
  std::string out = "process \"" + dsl_detail::escape_string(model.name) + "\" {\n";
  if (model.root) dsl_detail::print_node(model.root, model, 1, out);
  out += "}\n";
  return out;
}

}  // namespace powlc
