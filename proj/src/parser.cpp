#include "respec/parser.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <limits>
#include <numbers>

#include "respec/error.hpp"

namespace respec {
namespace {

enum class Tok { Ident, Number, Symbol, Selector, End };

struct Token {
    Tok kind = Tok::End;
    std::string text;
    double number = 0.0;
    int line = 1;
    int column = 1;
};

bool is_ident_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_'; }
bool is_ident_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; }

/// Tokenizes one line; `#` ends the line.
void tokenize_line(const std::string& line, int line_no, std::vector<Token>& out) {
    std::size_t i = 0;
    while (i < line.size()) {
        char c = line[i];
        int col = static_cast<int>(i) + 1;
        if (std::isspace(static_cast<unsigned char>(c))) {
            ++i;
            continue;
        }
        if (c == '#') break;
        Token t;
        t.line = line_no;
        t.column = col;
        if (is_ident_start(c)) {
            std::size_t j = i;
            while (j < line.size() && is_ident_char(line[j])) ++j;
            t.kind = Tok::Ident;
            t.text = line.substr(i, j - i);
            i = j;
        } else if (std::isdigit(static_cast<unsigned char>(c)) ||
                   (c == '.' && i + 1 < line.size() && std::isdigit(static_cast<unsigned char>(line[i + 1])))) {
            std::size_t j = i;
            while (j < line.size() && (std::isdigit(static_cast<unsigned char>(line[j])) || line[j] == '.')) ++j;
            if (j < line.size() && (line[j] == 'e' || line[j] == 'E')) {
                std::size_t k = j + 1;
                if (k < line.size() && (line[k] == '+' || line[k] == '-')) ++k;
                if (k < line.size() && std::isdigit(static_cast<unsigned char>(line[k]))) {
                    j = k;
                    while (j < line.size() && std::isdigit(static_cast<unsigned char>(line[j]))) ++j;
                }
            }
            t.kind = Tok::Number;
            t.text = line.substr(i, j - i);
            auto [ptr, ec] = std::from_chars(t.text.data(), t.text.data() + t.text.size(), t.number);
            if (ec != std::errc() || ptr != t.text.data() + t.text.size())
                throw ParseError(ErrorCode::Syntax, "malformed number '" + t.text + "'", line_no, col);
            i = j;
        } else if (c == '@') {
            std::size_t j = i + 1;
            while (j < line.size() && (std::isalnum(static_cast<unsigned char>(line[j])) || line[j] == '.')) ++j;
            t.kind = Tok::Selector;
            t.text = line.substr(i, j - i);
            i = j;
        } else {
            std::string two = line.substr(i, 2);
            t.kind = Tok::Symbol;
            if (two == "=>" || two == ":=") {
                t.text = two;
                i += 2;
            } else if (std::string("()[],&|!<>+-*/=.").find(c) != std::string::npos) {
                t.text = std::string(1, c);
                ++i;
            } else {
                throw ParseError(ErrorCode::Syntax, std::string("unexpected character '") + c + "'", line_no, col);
            }
        }
        out.push_back(std::move(t));
    }
}

bool is_keyword(const std::string& s) {
    return s == "G" || s == "F" || s == "U" || s == "let" || s == "events" || s == "entities" || s == "pi" ||
           s == "inf" || s == "robot" || s == "norm2" || s == "abs" || s == "sin" || s == "cos" || s == "atan2" ||
           s == "wrap";
}

bool function_named(const std::string& s, Function& fn) {
    static const std::pair<const char*, Function> table[] = {
        {"norm2", Function::Norm2}, {"abs", Function::Abs},     {"sin", Function::Sin},
        {"cos", Function::Cos},     {"atan2", Function::Atan2}, {"wrap", Function::Wrap},
    };
    for (const auto& [name, f] : table)
        if (s == name) {
            fn = f;
            return true;
        }
    return false;
}

/// Recoverable failure; the parser backtracks over these.
struct Fail {};

class Parser {
public:
    Parser(std::vector<Token> tokens, const Schema& schema) : toks_(std::move(tokens)), schema_(schema) {
        Token end;
        if (!toks_.empty()) {
            end.line = toks_.back().line;
            end.column = toks_.back().column + static_cast<int>(toks_.back().text.size());
        }
        toks_.push_back(end);
    }

    bool at_end() const { return toks_[pos_].kind == Tok::End; }

    template <class F>
    auto top(F&& fn) -> decltype(fn()) {
        try {
            auto result = fn();
            if (!at_end()) fail("unexpected '" + toks_[pos_].text + "'");
            return result;
        } catch (const Fail&) {
            const Token& t = toks_[best_pos_];
            throw ParseError(best_code_, best_message_, t.line, t.column);
        }
    }

    // ---------------------------------------------------------------- formulas

    SpecFormula spec() {
        SpecFormula lhs = spec_and();
        while (accept("|")) lhs = spec_or(lhs, spec_and());
        return lhs;
    }

    StateFormula state() {
        StateFormula lhs = state_and();
        while (accept("|")) lhs = state_or(lhs, state_and());
        return lhs;
    }

    Predicate predicate() {
        std::size_t at = pos_;
        Expr lhs = expr();
        Relation rel;
        if (accept("<")) rel = Relation::Less;
        else if (accept(">")) rel = Relation::Greater;
        else fail("expected '<' or '>'");
        Expr rhs = expr();
        if (lhs->vector || rhs->vector) hard(ErrorCode::TypeMismatch, "predicate sides must be scalars", at);
        return Predicate{lhs, rel, rhs};
    }

    Expr expr() {
        Expr lhs = term();
        for (;;) {
            std::size_t at = pos_;
            if (accept("+")) lhs = build(at, [&] { return make_binary(ExprKind::Add, lhs, term()); });
            else if (accept("-")) lhs = build(at, [&] { return make_binary(ExprKind::Subtract, lhs, term()); });
            else return lhs;
        }
    }

    Bounds bounds(bool allow_unbounded) {
        std::size_t at = pos_;
        expect("[");
        double a = number();
        expect(",");
        double b;
        if (peek_ident("inf")) {
            ++pos_;
            b = std::numeric_limits<double>::infinity();
        } else {
            b = number();
        }
        expect("]");
        if (a > b) hard(ErrorCode::BoundsReversed, "bounds are reversed (lower > upper)", at);
        if (std::isinf(b) && !allow_unbounded) hard(ErrorCode::BoundsReversed, "only G may have an unbounded window", at);
        return Bounds{a, b};
    }

    // Declarations -----------------------------------------------------------

    void declaration(Schema& schema) {
        std::string word = toks_[pos_].text;
        ++pos_;
        if (word == "let") {
            std::size_t at = pos_;
            std::string name = ident();
            if (is_keyword(name)) hard(ErrorCode::Syntax, "'" + name + "' is reserved", at);
            expect("=");
            Expr body = expr();
            if (!schema.aliases.count(name)) schema.alias_order.push_back(name);
            schema.aliases[name] = body;
        } else {
            auto& target = word == "events" ? schema.events : schema.entities;
            do {
                std::size_t at = pos_;
                std::string name = ident();
                if (is_keyword(name)) hard(ErrorCode::Syntax, "'" + name + "' is reserved", at);
                target.insert(name);
            } while (accept(","));
        }
        if (!at_end()) fail("unexpected '" + toks_[pos_].text + "'");
    }

    Schema& schema() { return schema_; }

    // Modification helpers ---------------------------------------------------

    bool peek_kind(Tok k) const { return toks_[pos_].kind == k; }

    Selector selector() {
        if (!peek_kind(Tok::Selector)) fail("expected a selector such as @0.1");
        std::size_t at = pos_++;
        try {
            return parse_selector(toks_[at].text);
        } catch (const Error& e) {
            hard(e.code(), e.what(), at);
        }
    }

    template <class F>
    auto attempt(F&& fn) -> std::optional<decltype(fn())> {
        std::size_t saved = pos_;
        try {
            return fn();
        } catch (const Fail&) {
            pos_ = saved;
            return std::nullopt;
        }
    }

    bool accept(const char* sym) {
        if (toks_[pos_].kind == Tok::Symbol && toks_[pos_].text == sym) {
            ++pos_;
            return true;
        }
        return false;
    }

    void expect(const char* sym) {
        if (!accept(sym)) fail(std::string("expected '") + sym + "'");
    }

    [[noreturn]] void fail(const std::string& message, ErrorCode code = ErrorCode::Syntax) { fail_at(pos_, message, code); }

private:
    std::vector<Token> toks_;
    Schema schema_;
    std::size_t pos_ = 0;
    std::size_t best_pos_ = 0;
    ErrorCode best_code_ = ErrorCode::Syntax;
    std::string best_message_ = "syntax error";

    [[noreturn]] void fail_at(std::size_t at, const std::string& message, ErrorCode code = ErrorCode::Syntax) {
        bool better = at > best_pos_ ||
                      (at == best_pos_ && code == ErrorCode::UnknownName && best_code_ == ErrorCode::Syntax);
        if (better || (at == 0 && best_pos_ == 0 && best_message_ == "syntax error")) {
            best_pos_ = at;
            best_code_ = code;
            best_message_ = message;
        }
        throw Fail{};
    }

    [[noreturn]] void hard(ErrorCode code, const std::string& message, std::size_t at) {
        const Token& t = toks_[at];
        throw ParseError(code, message, t.line, t.column);
    }

    template <class F>
    Expr build(std::size_t at, F&& fn) {
        try {
            return fn();
        } catch (const ParseError&) {
            throw;
        } catch (const Error& e) {
            hard(e.code(), e.what(), at);
        }
    }

    bool peek_ident(const char* s) const { return toks_[pos_].kind == Tok::Ident && toks_[pos_].text == s; }

    std::string ident() {
        if (!peek_kind(Tok::Ident)) fail("expected a name");
        return toks_[pos_++].text;
    }

    double number() {
        if (!peek_kind(Tok::Number)) fail("expected a number");
        return toks_[pos_++].number;
    }

    SpecFormula spec_and() {
        SpecFormula lhs = spec_unary();
        while (accept("&")) lhs = spec_and_node(lhs, spec_unary());
        return lhs;
    }

    static SpecFormula spec_and_node(SpecFormula a, SpecFormula b) { return respec::spec_and(std::move(a), std::move(b)); }
    static SpecFormula spec_or(SpecFormula a, SpecFormula b) { return respec::spec_or(std::move(a), std::move(b)); }
    static StateFormula state_or(StateFormula a, StateFormula b) { return respec::state_or(std::move(a), std::move(b)); }

    SpecFormula spec_unary() {
        if (peek_ident("G")) {
            ++pos_;
            if (toks_[pos_].text == "[") {
                Bounds b = bounds(true);
                return spec_always(b, state_unary());
            }
            if (auto trig = attempt([&] {
                    expect("(");
                    EventFormula alpha = event();
                    expect("=>");
                    SpecFormula body = spec();
                    expect(")");
                    return spec_trigger(alpha, body);
                }))
                return *trig;
            expect("(");
            StateFormula phi = state();
            expect(")");
            return spec_always(Bounds{0.0, std::numeric_limits<double>::infinity()}, phi);
        }
        if (peek_ident("F")) {
            ++pos_;
            Bounds b = bounds(false);
            return spec_eventually(b, state_unary());
        }
        if (auto until = attempt([&] {
                StateFormula hold = state_unary();
                if (!peek_ident("U")) fail("expected 'U'");
                ++pos_;
                Bounds b = bounds(false);
                return spec_until(b, hold, state_unary());
            }))
            return *until;
        expect("(");
        SpecFormula inner = spec();
        expect(")");
        return inner;
    }

    StateFormula state_and() {
        StateFormula lhs = state_unary();
        while (accept("&")) lhs = respec::state_and(lhs, state_unary());
        return lhs;
    }

    StateFormula state_unary() {
        if (accept("!")) {
            if (auto p = attempt([&] { return predicate(); })) return state_not(*p);
            expect("(");
            Predicate p = predicate();
            expect(")");
            return state_not(p);
        }
        if (auto p = attempt([&] { return predicate(); })) return state_pred(*p);
        expect("(");
        StateFormula inner = state();
        expect(")");
        return inner;
    }

    EventFormula event() {
        EventFormula lhs = event_unary();
        while (accept("&")) lhs = event_and(lhs, event_unary());
        return lhs;
    }

    EventFormula event_unary() {
        if (accept("!")) return event_not(event_unary());
        if (auto p = attempt([&] { return predicate(); })) return event_pred(*p);
        if (auto inner = attempt([&] {
                expect("(");
                EventFormula e = event();
                expect(")");
                return e;
            }))
            return *inner;
        std::size_t at = pos_;
        std::string name = ident();
        if (is_keyword(name) || schema_.aliases.count(name)) fail_at(at, "'" + name + "' is not an event", ErrorCode::Syntax);
        if (!schema_.events.empty() && !schema_.events.count(name))
            fail_at(at, "unknown event '" + name + "'", ErrorCode::UnknownName);
        if (toks_[pos_].text == "." || toks_[pos_].text == "(") fail("unexpected '" + toks_[pos_].text + "'");
        return event_atom(name);
    }

    Expr term() {
        Expr lhs = unary();
        for (;;) {
            std::size_t at = pos_;
            if (accept("*")) lhs = build(at, [&] { return make_binary(ExprKind::Multiply, lhs, unary()); });
            else if (accept("/")) lhs = build(at, [&] { return make_binary(ExprKind::Divide, lhs, unary()); });
            else return lhs;
        }
    }

    Expr unary() {
        if (accept("-")) {
            if (peek_kind(Tok::Number)) return make_constant(-toks_[pos_++].number);
            return make_negate(unary());
        }
        return primary();
    }

    Expr primary() {
        std::size_t at = pos_;
        const Token& t = toks_[pos_];
        if (t.kind == Tok::Number) {
            ++pos_;
            return make_constant(t.number);
        }
        if (accept("(")) {
            Expr inner = expr();
            expect(")");
            return inner;
        }
        if (accept("[")) {
            Expr x = expr();
            expect(",");
            Expr y = expr();
            expect("]");
            return build(at, [&] { return make_vector(x, y); });
        }
        if (t.kind != Tok::Ident) fail("expected an expression");
        std::string name = t.text;
        ++pos_;
        if (name == "pi") return make_constant(std::numbers::pi);
        Function fn;
        if (function_named(name, fn)) {
            expect("(");
            std::vector<Expr> args{expr()};
            while (accept(",")) args.push_back(expr());
            expect(")");
            return build(at, [&] { return make_call(fn, std::move(args)); });
        }
        if (accept(".")) {
            if (name != "robot") {
                if (is_keyword(name)) fail_at(at, "'" + name + "' has no fields");
                if (!schema_.entities.empty() && !schema_.entities.count(name))
                    fail_at(at, "unknown entity '" + name + "'", ErrorCode::UnknownName);
            }
            std::size_t field_at = pos_;
            std::string field = ident();
            bool ok = name == "robot" ? is_robot_field(field) : is_entity_field(field);
            if (!ok) fail_at(field_at, "unknown field '" + name + "." + field + "'", ErrorCode::UnknownName);
            return make_variable(name, field);
        }
        auto alias = schema_.aliases.find(name);
        if (alias != schema_.aliases.end()) return make_alias(name, alias->second);
        if (is_keyword(name)) fail_at(at, "unexpected '" + name + "'");
        fail_at(at, "unknown name '" + name + "'", ErrorCode::UnknownName);
    }
};

std::vector<std::string> split_lines(const std::string& text) {
    std::vector<std::string> lines;
    std::size_t start = 0;
    for (;;) {
        std::size_t nl = text.find('\n', start);
        lines.push_back(text.substr(start, nl == std::string::npos ? std::string::npos : nl - start));
        if (nl == std::string::npos) break;
        start = nl + 1;
    }
    return lines;
}

bool is_declaration(const std::vector<Token>& line) {
    return !line.empty() && line[0].kind == Tok::Ident &&
           (line[0].text == "let" || line[0].text == "events" || line[0].text == "entities");
}

/// Splits source into declaration lines and the remaining body tokens.
/// Declarations must precede the body.
void split_source(const std::string& text, Schema& schema, std::vector<Token>& body) {
    int line_no = 0;
    for (const auto& line : split_lines(text)) {
        ++line_no;
        std::vector<Token> toks;
        tokenize_line(line, line_no, toks);
        if (toks.empty()) continue;
        if (is_declaration(toks)) {
            if (!body.empty())
                throw ParseError(ErrorCode::Syntax, "declarations must precede the formula", line_no, toks[0].column);
            Parser p(toks, schema);
            p.top([&] {
                p.declaration(p.schema());
                return 0;
            });
            schema = p.schema();
        } else {
            body.insert(body.end(), toks.begin(), toks.end());
        }
    }
}

std::vector<Token> tokenize(const std::string& text) {
    std::vector<Token> toks;
    int line_no = 0;
    for (const auto& line : split_lines(text)) tokenize_line(line, ++line_no, toks);
    return toks;
}

} // namespace

SpecDocument parse_document(const std::string& text, const Schema& base) {
    SpecDocument doc;
    doc.schema = base;
    std::vector<Token> body;
    split_source(text, doc.schema, body);
    if (body.empty()) throw ParseError(ErrorCode::Syntax, "missing formula", 1, 1);
    Parser p(body, doc.schema);
    doc.formula = p.top([&] { return p.spec(); });
    return doc;
}

SpecFormula parse_spec(const std::string& text, const Schema& schema) {
    Parser p(tokenize(text), schema);
    return p.top([&] { return p.spec(); });
}

Predicate parse_predicate(const std::string& text, const Schema& schema) {
    Parser p(tokenize(text), schema);
    return p.top([&] { return p.predicate(); });
}

Expr parse_expression(const std::string& text, const Schema& schema) {
    Parser p(tokenize(text), schema);
    return p.top([&] { return p.expr(); });
}

std::string print_document(const SpecDocument& doc) {
    std::string out;
    for (const auto& name : doc.schema.alias_order)
        out += "let " + name + " = " + print_expr(doc.schema.aliases.at(name)) + "\n";
    auto list = [&](const char* word, const std::set<std::string>& names) {
        if (names.empty()) return;
        out += word;
        bool first = true;
        for (const auto& n : names) {
            out += first ? " " : ", ";
            out += n;
            first = false;
        }
        out += "\n";
    };
    list("events", doc.schema.events);
    list("entities", doc.schema.entities);
    out += print_formula(doc.formula) + "\n";
    return out;
}

ParsedModification parse_modification(const std::string& text, const Schema& schema) {
    Schema merged = schema;
    std::vector<Token> body;
    split_source(text, merged, body);
    if (body.empty() || body[0].kind != Tok::Ident)
        throw ParseError(ErrorCode::Syntax, "expected a modification command", body.empty() ? 1 : body[0].line,
                         body.empty() ? 1 : body[0].column);

    // Command words contain '-', which the tokenizer splits: add-conj -> add, -, conj.
    std::string word = body[0].text;
    std::size_t skip = 1;
    if (body.size() >= 3 && body[1].text == "-" && body[2].kind == Tok::Ident) {
        word += "-" + body[2].text;
        skip = 3;
    }
    Token head = body[0];
    std::vector<Token> rest(body.begin() + static_cast<std::ptrdiff_t>(skip), body.end());

    Schema declarations;
    for (const auto& name : merged.alias_order)
        if (!schema.aliases.count(name)) {
            declarations.alias_order.push_back(name);
            declarations.aliases[name] = merged.aliases.at(name);
        }
    for (const auto& e : merged.events)
        if (!schema.events.count(e)) declarations.events.insert(e);
    for (const auto& e : merged.entities)
        if (!schema.entities.count(e)) declarations.entities.insert(e);

    Parser p(rest, merged);
    ModificationCommand cmd;
    if (word == "add-conj") {
        cmd = AddConjunction{p.top([&] { return p.spec(); })};
    } else if (word == "add-disj") {
        cmd = AddDisjunction{p.top([&] { return p.spec(); })};
    } else if (word == "replace") {
        cmd = ReplaceFull{p.top([&] { return p.spec(); })};
    } else if (word == "set-bounds") {
        cmd = p.top([&] {
            Selector s = p.selector();
            return SetBounds{s, p.bounds(true)};
        });
    } else if (word == "set-pred") {
        cmd = p.top([&] {
            SetPredicate sp;
            if (p.peek_kind(Tok::Selector)) {
                sp.target = p.selector();
                sp.predicate = p.predicate();
                return sp;
            }
            if (auto pair = p.attempt([&] {
                    Predicate from = p.predicate();
                    p.expect(":=");
                    return std::make_pair(from, p.predicate());
                })) {
                sp.pattern_pred = pair->first;
                sp.predicate = pair->second;
                return sp;
            }
            sp.pattern_expr = p.expr();
            p.expect(":=");
            sp.replacement_expr = p.expr();
            if (sp.pattern_expr->vector != sp.replacement_expr->vector)
                p.fail("pattern and replacement must have the same shape", ErrorCode::TypeMismatch);
            return sp;
        });
    } else {
        throw ParseError(ErrorCode::Syntax, "unknown modification '" + word + "'", head.line, head.column);
    }
    return ParsedModification{std::move(cmd), std::move(declarations)};
}

} // namespace respec
