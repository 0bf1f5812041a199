#include <cctype>
#include <charconv>
#include <optional>
#include <set>

#include "qolab/error.hpp"
#include "qolab/frontend.hpp"

namespace qolab {

namespace {

enum class TokenKind { Ident, Number, String, Symbol, End };

struct Token {
  TokenKind kind = TokenKind::End;
  std::string text;  // identifiers keep their case; keyword checks are case-insensitive
  std::size_t pos = 0;
};

std::string upper(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  return out;
}

std::vector<Token> tokenize(std::string_view text) {
  std::vector<Token> tokens;
  std::size_t i = 0;
  const std::size_t n = text.size();
  while (i < n) {
    const char c = text[i];
    if (std::isspace(static_cast<unsigned char>(c))) {
      ++i;
      continue;
    }
    if (c == '-' && i + 1 < n && text[i + 1] == '-') {
      while (i < n && text[i] != '\n') ++i;
      continue;
    }
    if (c == '/' && i + 1 < n && text[i + 1] == '*') {
      const auto end = text.find("*/", i + 2);
      if (end == std::string_view::npos) throw ParseError("unterminated comment", i);
      i = end + 2;
      continue;
    }
    const std::size_t start = i;
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      while (i < n && (std::isalnum(static_cast<unsigned char>(text[i])) || text[i] == '_')) ++i;
      tokens.push_back({TokenKind::Ident, std::string(text.substr(start, i - start)), start});
      continue;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) ||
        (c == '-' && i + 1 < n && std::isdigit(static_cast<unsigned char>(text[i + 1])))) {
      ++i;
      while (i < n && std::isdigit(static_cast<unsigned char>(text[i]))) ++i;
      if (i < n && (text[i] == '.' || std::isalpha(static_cast<unsigned char>(text[i])))) {
        throw UnsupportedError("only integer numeric literals are supported (at " + std::to_string(start) + ")");
      }
      tokens.push_back({TokenKind::Number, std::string(text.substr(start, i - start)), start});
      continue;
    }
    if (c == '\'') {
      std::string value;
      ++i;
      bool closed = false;
      while (i < n) {
        if (text[i] == '\'') {
          if (i + 1 < n && text[i + 1] == '\'') {
            value.push_back('\'');
            i += 2;
            continue;
          }
          ++i;
          closed = true;
          break;
        }
        value.push_back(text[i++]);
      }
      if (!closed) throw ParseError("unterminated string literal", start);
      tokens.push_back({TokenKind::String, std::move(value), start});
      continue;
    }
    static constexpr std::string_view two_char[] = {"<>", "!=", "<=", ">="};
    bool matched = false;
    for (auto sym : two_char) {
      if (text.substr(i, 2) == sym) {
        tokens.push_back({TokenKind::Symbol, std::string(sym), start});
        i += 2;
        matched = true;
        break;
      }
    }
    if (matched) continue;
    if (std::string_view("(),.*=<>;").find(c) != std::string_view::npos) {
      tokens.push_back({TokenKind::Symbol, std::string(1, c), start});
      ++i;
      continue;
    }
    throw ParseError(std::string("unexpected character '") + c + "'", start);
  }
  tokens.push_back({TokenKind::End, "", n});
  return tokens;
}

const std::set<std::string>& reserved() {
  static const std::set<std::string> words = {"SELECT", "FROM", "WHERE", "AND", "OR", "NOT", "JOIN", "INNER",
                                              "LEFT", "RIGHT", "FULL", "OUTER", "CROSS", "ON", "AS", "IN",
                                              "BETWEEN", "LIKE", "IS", "NULL", "GROUP", "ORDER", "BY", "HAVING",
                                              "UNION", "EXISTS", "LIMIT", "USING", "NATURAL"};
  return words;
}

class Parser {
 public:
  explicit Parser(std::string_view text) : tokens_(tokenize(text)) {}

  QuerySpec parse() {
    QuerySpec spec;
    expect_keyword("SELECT");
    parse_select_list(spec);
    expect_keyword("FROM");
    parse_from_list(spec);
    if (accept_keyword("WHERE")) parse_conjunction(spec);
    reject_trailing_clauses();
    accept_symbol(";");
    if (peek().kind != TokenKind::End) fail("unexpected token '" + peek().text + "'");
    check_references(spec);
    return spec;
  }

 private:
  const Token& peek(std::size_t ahead = 0) const {
    const std::size_t i = std::min(pos_ + ahead, tokens_.size() - 1);
    return tokens_[i];
  }
  const Token& next() {
    const Token& t = tokens_[pos_];
    if (pos_ + 1 < tokens_.size()) ++pos_;
    return t;
  }

  [[noreturn]] void fail(const std::string& message) const { throw ParseError(message, peek().pos); }
  [[noreturn]] void unsupported(const std::string& construct) const {
    throw UnsupportedError("unsupported construct: " + construct + " (at " + std::to_string(peek().pos) + ")");
  }

  bool is_keyword(const Token& t, std::string_view word) const {
    return t.kind == TokenKind::Ident && upper(t.text) == word;
  }
  bool accept_keyword(std::string_view word) {
    if (!is_keyword(peek(), word)) return false;
    next();
    return true;
  }
  void expect_keyword(std::string_view word) {
    if (!accept_keyword(word)) fail("expected " + std::string(word));
  }
  bool is_symbol(const Token& t, std::string_view sym) const { return t.kind == TokenKind::Symbol && t.text == sym; }
  bool accept_symbol(std::string_view sym) {
    if (!is_symbol(peek(), sym)) return false;
    next();
    return true;
  }
  void expect_symbol(std::string_view sym) {
    if (!accept_symbol(sym)) fail("expected '" + std::string(sym) + "'");
  }

  std::string expect_identifier(const char* what) {
    const Token& t = peek();
    if (t.kind != TokenKind::Ident || reserved().count(upper(t.text))) fail(std::string("expected ") + what);
    return next().text;
  }

  bool at_alias_name() const {
    const Token& t = peek();
    return t.kind == TokenKind::Ident && !reserved().count(upper(t.text));
  }

  void reject_trailing_clauses() {
    for (const char* word : {"GROUP", "ORDER", "HAVING", "LIMIT", "UNION"}) {
      if (is_keyword(peek(), word)) unsupported(word);
    }
    if (is_keyword(peek(), "OR")) unsupported("disjunction (OR)");
  }

  ColumnRef parse_column_ref() {
    const std::size_t at = peek().pos;
    ColumnRef ref;
    ref.alias = expect_identifier("alias-qualified column");
    if (!accept_symbol(".")) throw ParseError("column references must be qualified as alias.column", at);
    ref.column = expect_identifier("column name");
    references_.push_back({ref.alias, at});
    return ref;
  }

  void parse_select_list(QuerySpec& spec) {
    if (is_keyword(peek(), "COUNT")) {
      next();
      expect_symbol("(");
      expect_symbol("*");
      expect_symbol(")");
      if (accept_keyword("AS")) expect_identifier("label");
      return;
    }
    do {
      if (!is_keyword(peek(), "MIN")) unsupported("select list other than COUNT(*) or MIN(alias.column)");
      next();
      expect_symbol("(");
      spec.output.min_columns.push_back(parse_column_ref());
      expect_symbol(")");
      std::string label;
      if (accept_keyword("AS")) label = expect_identifier("label");
      spec.output.min_labels.push_back(std::move(label));
    } while (accept_symbol(","));
  }

  void parse_from_list(QuerySpec& spec) {
    do {
      parse_from_item(spec);
    } while (accept_symbol(","));
  }

  void parse_from_item(QuerySpec& spec) {
    parse_from_primary(spec);
    for (;;) {
      for (const char* word : {"LEFT", "RIGHT", "FULL", "OUTER", "CROSS", "NATURAL"}) {
        if (is_keyword(peek(), word)) unsupported(std::string(word) + " JOIN");
      }
      if (accept_keyword("INNER")) {
        expect_keyword("JOIN");
      } else if (!accept_keyword("JOIN")) {
        break;
      }
      parse_from_primary(spec);
      if (is_keyword(peek(), "USING")) unsupported("JOIN ... USING");
      expect_keyword("ON");
      parse_conjunction(spec);
    }
  }

  void parse_from_primary(QuerySpec& spec) {
    if (accept_symbol("(")) {
      if (accept_keyword("SELECT")) {
        expect_symbol("*");
        expect_keyword("FROM");
        parse_from_list(spec);
        if (accept_keyword("WHERE")) parse_conjunction(spec);
        reject_trailing_clauses();
        expect_symbol(")");
        accept_keyword("AS");
        if (at_alias_name()) next();
        return;
      }
      parse_from_item(spec);
      expect_symbol(")");
      return;
    }
    const std::size_t at = peek().pos;
    std::string table = expect_identifier("table name");
    std::string alias = table;
    if (accept_keyword("AS")) {
      alias = expect_identifier("alias");
    } else if (at_alias_name()) {
      alias = next().text;
    }
    if (spec.declares(alias)) throw ParseError("duplicate alias " + alias, at);
    spec.aliases.emplace_back(std::move(alias), std::move(table));
  }

  void parse_conjunction(QuerySpec& spec) {
    do {
      parse_term(spec);
      if (is_keyword(peek(), "OR")) unsupported("disjunction (OR)");
    } while (accept_keyword("AND"));
  }

  void parse_term(QuerySpec& spec) {
    if (is_keyword(peek(), "NOT")) unsupported("negation (NOT)");
    if (is_keyword(peek(), "EXISTS")) unsupported("subquery (EXISTS)");
    if (is_symbol(peek(), "(")) {
      if (is_keyword(peek(1), "SELECT")) unsupported("subquery in predicate");
      next();
      parse_conjunction(spec);
      expect_symbol(")");
      return;
    }
    parse_predicate(spec);
  }

  std::optional<Value> accept_literal() {
    const Token& t = peek();
    if (t.kind == TokenKind::Number) {
      std::int64_t v = 0;
      auto [ptr, ec] = std::from_chars(t.text.data(), t.text.data() + t.text.size(), v);
      if (ec != std::errc()) fail("integer literal out of range");
      next();
      return Value{v};
    }
    if (t.kind == TokenKind::String) return Value{next().text};
    return std::nullopt;
  }

  Value expect_literal() {
    auto v = accept_literal();
    if (!v) fail("expected literal");
    return *v;
  }

  std::optional<SelectionOp> accept_compare_op() {
    const Token& t = peek();
    if (t.kind != TokenKind::Symbol) return std::nullopt;
    std::optional<SelectionOp> op;
    if (t.text == "=") op = SelectionOp::Eq;
    if (t.text == "<>" || t.text == "!=") op = SelectionOp::Ne;
    if (t.text == "<") op = SelectionOp::Lt;
    if (t.text == "<=") op = SelectionOp::Le;
    if (t.text == ">") op = SelectionOp::Gt;
    if (t.text == ">=") op = SelectionOp::Ge;
    if (op) next();
    return op;
  }

  static SelectionOp flip(SelectionOp op) {
    switch (op) {
      case SelectionOp::Lt: return SelectionOp::Gt;
      case SelectionOp::Le: return SelectionOp::Ge;
      case SelectionOp::Gt: return SelectionOp::Lt;
      case SelectionOp::Ge: return SelectionOp::Le;
      default: return op;
    }
  }

  void parse_predicate(QuerySpec& spec) {
    if (auto lit = accept_literal()) {
      auto op = accept_compare_op();
      if (!op) fail("expected comparison operator");
      ColumnRef col = parse_column_ref();
      spec.selections.push_back({std::move(col), flip(*op), {std::move(*lit)}});
      return;
    }
    ColumnRef left = parse_column_ref();
    if (accept_keyword("LIKE")) {
      const Token& t = peek();
      if (t.kind != TokenKind::String) fail("LIKE expects a string pattern");
      spec.selections.push_back({std::move(left), SelectionOp::Like, {Value{next().text}}});
      return;
    }
    if (is_keyword(peek(), "NOT")) unsupported("NOT LIKE / NOT IN");
    if (is_keyword(peek(), "IS")) unsupported("IS [NOT] NULL");
    if (accept_keyword("IN")) {
      expect_symbol("(");
      if (is_keyword(peek(), "SELECT")) unsupported("subquery (IN SELECT)");
      std::vector<Value> values;
      do {
        values.push_back(expect_literal());
      } while (accept_symbol(","));
      expect_symbol(")");
      spec.selections.push_back({std::move(left), SelectionOp::In, std::move(values)});
      return;
    }
    if (accept_keyword("BETWEEN")) {
      Value lo = expect_literal();
      expect_keyword("AND");
      Value hi = expect_literal();
      spec.selections.push_back({std::move(left), SelectionOp::Between, {std::move(lo), std::move(hi)}});
      return;
    }
    auto op = accept_compare_op();
    if (!op) fail("expected comparison operator");
    if (auto lit = accept_literal()) {
      spec.selections.push_back({std::move(left), *op, {std::move(*lit)}});
      return;
    }
    ColumnRef right = parse_column_ref();
    if (*op != SelectionOp::Eq) unsupported("non-equality join predicate");
    if (left.alias == right.alias) unsupported("column-to-column predicate within one alias");
    spec.joins.push_back({std::move(left), std::move(right)});
  }

  void check_references(const QuerySpec& spec) const {
    for (const auto& [alias, pos] : references_) {
      if (!spec.declares(alias)) throw ParseError("unknown alias " + alias, pos);
    }
  }

  std::vector<Token> tokens_;
  std::size_t pos_ = 0;
  std::vector<std::pair<std::string, std::size_t>> references_;
};

}  // namespace

std::string_view to_string(SelectionOp op) {
  switch (op) {
    case SelectionOp::Eq: return "=";
    case SelectionOp::Ne: return "<>";
    case SelectionOp::Lt: return "<";
    case SelectionOp::Le: return "<=";
    case SelectionOp::Gt: return ">";
    case SelectionOp::Ge: return ">=";
    case SelectionOp::Like: return "LIKE";
    case SelectionOp::In: return "IN";
    case SelectionOp::Between: return "BETWEEN";
  }
  return "?";
}

const std::string& QuerySpec::table_of(std::string_view alias) const {
  for (const auto& [a, t] : aliases) {
    if (a == alias) return t;
  }
  throw SchemaError("unknown alias " + std::string(alias));
}

bool QuerySpec::declares(std::string_view alias) const {
  for (const auto& entry : aliases) {
    if (entry.first == alias) return true;
  }
  return false;
}

QuerySpec parse_query(std::string_view text) { return Parser(text).parse(); }

std::string render_literal(const Value& value) {
  if (const auto* i = std::get_if<std::int64_t>(&value)) return std::to_string(*i);
  std::string out = "'";
  for (char c : std::get<std::string>(value)) {
    if (c == '\'') out.push_back('\'');
    out.push_back(c);
  }
  out.push_back('\'');
  return out;
}

std::string render_predicate(const SelectionPredicate& pred) {
  const std::string col = pred.column.alias + "." + pred.column.column;
  switch (pred.op) {
    case SelectionOp::In: {
      std::string out = col + " IN (";
      for (std::size_t i = 0; i < pred.operands.size(); ++i) {
        if (i) out += ", ";
        out += render_literal(pred.operands[i]);
      }
      return out + ")";
    }
    case SelectionOp::Between:
      return col + " BETWEEN " + render_literal(pred.operands.at(0)) + " AND " + render_literal(pred.operands.at(1));
    default:
      return col + " " + std::string(to_string(pred.op)) + " " + render_literal(pred.operands.at(0));
  }
}

std::string render_predicate(const JoinPredicate& pred) {
  return pred.left.alias + "." + pred.left.column + " = " + pred.right.alias + "." + pred.right.column;
}

std::string render_query(const QuerySpec& spec) {
  std::string out = "SELECT ";
  if (spec.output.count_star()) {
    out += "COUNT(*)";
  } else {
    for (std::size_t i = 0; i < spec.output.min_columns.size(); ++i) {
      if (i) out += ", ";
      const auto& c = spec.output.min_columns[i];
      out += "MIN(" + c.alias + "." + c.column + ")";
      if (i < spec.output.min_labels.size() && !spec.output.min_labels[i].empty()) {
        out += " AS " + spec.output.min_labels[i];
      }
    }
  }
  out += "\nFROM ";
  for (std::size_t i = 0; i < spec.aliases.size(); ++i) {
    if (i) out += ",\n     ";
    out += spec.aliases[i].second + " AS " + spec.aliases[i].first;
  }
  std::vector<std::string> conjuncts;
  for (const auto& s : spec.selections) conjuncts.push_back(render_predicate(s));
  for (const auto& j : spec.joins) conjuncts.push_back(render_predicate(j));
  for (std::size_t i = 0; i < conjuncts.size(); ++i) {
    out += i == 0 ? "\nWHERE " : "\n  AND ";
    out += conjuncts[i];
  }
  out += ";\n";
  return out;
}

}  // namespace qolab
