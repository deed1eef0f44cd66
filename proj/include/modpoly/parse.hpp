#pragma once

// Task strings such as
//
//   "2n1^4n2 + n1^2n2^2 + 3n1n2^3 mod 97"     flat polynomial
//   "(4n1 + n2^2)^3 mod 23"                   h(g1(n1) + g2(n2))
//   "(2n1 + 3n2)^4 - n1^2 mod 23"             wrapped form plus extra terms
//
// Grammar (whitespace ignored, '*' optional between factors):
//
//   task   := sum [ "mod" INT ]
//   sum    := [sign] item { sign item }
//   item   := [INT] "(" sum ")" "^" INT  |  term
//   term   := INT { factor }  |  factor { factor }
//   factor := ("n1" | "n2") [ "^" INT ]

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "modpoly/error.hpp"
#include "modpoly/field.hpp"

namespace modpoly {

/// A term as written: signed integer coefficient, exponents of n1 and n2.
struct Term {
    std::int64_t coeff = 1;
    std::uint32_t a = 0;
    std::uint32_t b = 0;

    friend bool operator==(const Term&, const Term&) = default;
};

/// coeff * (inner)^exponent
struct Group {
    std::int64_t coeff = 1;
    std::vector<Term> inner;
    std::uint32_t exponent = 1;

    friend bool operator==(const Group&, const Group&) = default;
};

/// Syntax tree of a task string. At most one parenthesised group.
struct TaskExpr {
    std::optional<Group> group;
    std::vector<Term> terms; ///< flat terms, after the group when both exist
    std::optional<std::uint64_t> modulus;

    friend bool operator==(const TaskExpr&, const TaskExpr&) = default;
};

using ParsedTask = std::variant<ModPolynomial, ComposedTask>;

namespace detail {

class TaskLexer {
public:
    explicit TaskLexer(std::string_view text) : text_(text) {}

    void skip_space() {
        while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    }
    bool done() {
        skip_space();
        return pos_ >= text_.size();
    }
    std::size_t pos() const noexcept { return pos_; }

    bool peek_char(char c) {
        skip_space();
        return pos_ < text_.size() && text_[pos_] == c;
    }
    bool accept_char(char c) {
        if (!peek_char(c)) return false;
        ++pos_;
        return true;
    }
    void expect_char(char c) {
        if (!accept_char(c)) throw ParseError(std::string("expected '") + c + "'", pos_);
    }
    bool peek_digit() {
        skip_space();
        return pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]));
    }
    std::uint64_t integer() {
        if (!peek_digit()) throw ParseError("expected an integer", pos_);
        std::uint64_t v = 0;
        const auto start = pos_;
        while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) {
            v = v * 10 + static_cast<std::uint64_t>(text_[pos_] - '0');
            if (v > (std::uint64_t{1} << 40)) throw ParseError("integer too large", start);
            ++pos_;
        }
        return v;
    }
    /// 1 or 2 if the next token is n1 / n2.
    int peek_variable() {
        skip_space();
        if (pos_ + 1 < text_.size() && text_[pos_] == 'n' && (text_[pos_ + 1] == '1' || text_[pos_ + 1] == '2')) {
            // n12 would be ambiguous
            if (pos_ + 2 < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_ + 2]))) return 0;
            return text_[pos_ + 1] - '0';
        }
        return 0;
    }
    void advance(std::size_t n) { pos_ += n; }
    void seek(std::size_t pos) { pos_ = pos; }
    bool accept_keyword(std::string_view kw) {
        skip_space();
        if (text_.substr(pos_, kw.size()) == kw) {
            pos_ += kw.size();
            return true;
        }
        return false;
    }

private:
    std::string_view text_;
    std::size_t pos_ = 0;
};

inline std::uint32_t parse_exponent(TaskLexer& lex) {
    const auto at = lex.pos();
    const auto e = lex.integer();
    if (e == 0)
        throw ParseError("exponent 0 is not supported (multiplication experts need strictly positive exponents)", at);
    if (e > 1'000'000) throw ParseError("exponent too large", at);
    return static_cast<std::uint32_t>(e);
}

inline Term parse_term(TaskLexer& lex, std::int64_t sign) {
    Term t;
    t.coeff = sign;
    bool any = false;
    if (lex.peek_digit()) {
        t.coeff = sign * static_cast<std::int64_t>(lex.integer());
        any = true;
    }
    for (;;) {
        if (any && lex.peek_char('*')) lex.accept_char('*');
        const int var = lex.peek_variable();
        if (var == 0) {
            if (any && lex.peek_char('(')) throw ParseError("coefficient must precede a parenthesised group directly", lex.pos());
            break;
        }
        lex.advance(2);
        std::uint32_t e = 1;
        if (lex.accept_char('^')) e = parse_exponent(lex);
        (var == 1 ? t.a : t.b) += e;
        any = true;
    }
    if (!any) throw ParseError("expected a term", lex.pos());
    return t;
}

inline std::vector<Term> parse_flat_sum(TaskLexer& lex) {
    std::vector<Term> terms;
    std::int64_t sign = lex.accept_char('-') ? -1 : 1;
    for (;;) {
        if (lex.peek_char('(')) throw ParseError("nested groups are not supported", lex.pos());
        terms.push_back(parse_term(lex, sign));
        if (lex.accept_char('+')) sign = 1;
        else if (lex.accept_char('-')) sign = -1;
        else break;
    }
    return terms;
}

} // namespace detail

inline TaskExpr parse_task_expr(std::string_view text) {
    detail::TaskLexer lex(text);
    TaskExpr expr;
    std::int64_t sign = lex.accept_char('-') ? -1 : 1;
    for (;;) {
        // optional coefficient directly in front of a group
        std::int64_t coeff = sign;
        const auto save = lex.pos();
        bool group = false;
        if (lex.peek_digit()) {
            const auto c = lex.integer();
            if (lex.peek_char('(')) {
                coeff = sign * static_cast<std::int64_t>(c);
                group = true;
            } else {
                lex.seek(save);
            }
        } else if (lex.peek_char('(')) {
            group = true;
        }
        if (group) {
            const auto at = lex.pos();
            if (expr.group) throw ParseError("at most one parenthesised group is supported", at);
            if (!expr.terms.empty()) throw ParseError("the parenthesised group must come first", at);
            lex.expect_char('(');
            Group g;
            g.coeff = coeff;
            g.inner = detail::parse_flat_sum(lex);
            lex.expect_char(')');
            lex.expect_char('^');
            g.exponent = detail::parse_exponent(lex);
            expr.group = std::move(g);
        } else {
            expr.terms.push_back(detail::parse_term(lex, sign));
        }
        if (lex.accept_char('+')) sign = 1;
        else if (lex.accept_char('-')) sign = -1;
        else break;
    }
    if (lex.accept_keyword("mod")) {
        const auto at = lex.pos();
        expr.modulus = lex.integer();
        if (*expr.modulus < 2) throw ParseError("modulus must be at least 2", at);
    }
    if (!lex.done()) throw ParseError("unexpected trailing input", lex.pos());
    return expr;
}

namespace detail {

inline void format_terms(std::string& out, const std::vector<Term>& terms, bool leading) {
    for (std::size_t i = 0; i < terms.size(); ++i) {
        const auto& t = terms[i];
        const bool negative = t.coeff < 0;
        const std::uint64_t mag = negative ? static_cast<std::uint64_t>(-t.coeff) : static_cast<std::uint64_t>(t.coeff);
        if (i == 0 && leading) {
            if (negative) out += "-";
        } else {
            out += negative ? " - " : " + ";
        }
        const bool bare = t.a == 0 && t.b == 0;
        if (mag != 1 || bare) out += std::to_string(mag);
        if (t.a > 0) out += t.a == 1 ? "n1" : "n1^" + std::to_string(t.a);
        if (t.b > 0) out += t.b == 1 ? "n2" : "n2^" + std::to_string(t.b);
    }
}

} // namespace detail

/// Canonical text of an expression; parse_task_expr(format_task(e)) == e.
inline std::string format_task(const TaskExpr& expr) {
    std::string out;
    if (expr.group) {
        const auto& g = *expr.group;
        if (g.coeff == -1) out += "-";
        else if (g.coeff != 1) out += std::to_string(g.coeff);
        out += "(";
        detail::format_terms(out, g.inner, true);
        out += ")^" + std::to_string(g.exponent);
        detail::format_terms(out, expr.terms, false);
    } else {
        detail::format_terms(out, expr.terms, true);
    }
    if (expr.modulus) out += " mod " + std::to_string(*expr.modulus);
    return out;
}

inline TaskExpr to_expr(const ModPolynomial& poly) {
    TaskExpr e;
    for (const auto& t : poly.terms()) e.terms.push_back({static_cast<std::int64_t>(t.coeff), t.a, t.b});
    e.modulus = poly.p();
    return e;
}

inline std::string format_polynomial(const ModPolynomial& poly) { return format_task(to_expr(poly)); }

namespace detail {

inline std::uint64_t reduce(std::int64_t c, std::uint64_t p) {
    const auto m = static_cast<std::int64_t>(p);
    return static_cast<std::uint64_t>(((c % m) + m) % m);
}

using SparsePoly = std::map<std::pair<std::uint32_t, std::uint32_t>, std::uint64_t>;

inline SparsePoly to_sparse(const std::vector<Term>& terms, std::int64_t scale, std::uint64_t p) {
    SparsePoly out;
    for (const auto& t : terms) {
        auto& c = out[{t.a, t.b}];
        c = (c + reduce(t.coeff, p) * reduce(scale, p)) % p;
    }
    return out;
}

inline SparsePoly multiply(const SparsePoly& x, const SparsePoly& y, std::uint64_t p) {
    SparsePoly out;
    for (const auto& [ex, cx] : x)
        for (const auto& [ey, cy] : y) {
            auto& c = out[{ex.first + ey.first, ex.second + ey.second}];
            c = (c + cx * cy) % p;
        }
    return out;
}

} // namespace detail

/// Fully expanded polynomial of an expression with like terms merged and
/// zero coefficients dropped. Flat expressions keep their written term
/// order; expanded groups are ordered by descending (a, b).
inline ModPolynomial expand(const TaskExpr& expr, std::uint64_t p) {
    require_prime_modulus(p);
    if (!expr.group) {
        std::vector<Monomial> terms;
        for (const auto& t : expr.terms) {
            const auto c = static_cast<Residue>(detail::reduce(t.coeff, p));
            auto it = std::find_if(terms.begin(), terms.end(), [&](const Monomial& m) { return m.a == t.a && m.b == t.b; });
            if (it == terms.end()) terms.push_back({c, t.a, t.b});
            else it->coeff = static_cast<Residue>((std::uint64_t{it->coeff} + c) % p);
        }
        std::erase_if(terms, [](const Monomial& m) { return m.coeff == 0; });
        if (terms.empty()) throw ArgumentError("polynomial is identically zero mod " + std::to_string(p));
        return ModPolynomial(p, std::move(terms));
    }
    detail::SparsePoly total = detail::to_sparse(expr.terms, 1, p);
    if (expr.group) {
        const auto base = detail::to_sparse(expr.group->inner, 1, p);
        detail::SparsePoly power{{{0, 0}, 1}};
        for (std::uint32_t i = 0; i < expr.group->exponent; ++i) power = detail::multiply(power, base, p);
        for (const auto& [e, c] : power) {
            auto& t = total[e];
            t = (t + c * detail::reduce(expr.group->coeff, p)) % p;
        }
    }
    std::vector<Monomial> terms;
    for (auto it = total.rbegin(); it != total.rend(); ++it)
        if (it->second != 0) terms.push_back({static_cast<Residue>(it->second), it->first.first, it->first.second});
    if (terms.empty()) throw ArgumentError("polynomial is identically zero mod " + std::to_string(p));
    return ModPolynomial(p, std::move(terms));
}

/// True when the expression is a bare group whose inner terms each depend on
/// at most one variable, i.e. has the form h(g1(n1) + g2(n2)).
inline bool is_composed_form(const TaskExpr& expr) {
    if (!expr.group || !expr.terms.empty()) return false;
    for (const auto& t : expr.group->inner)
        if (t.a > 0 && t.b > 0) return false;
    return true;
}

inline ComposedTask to_composed(const TaskExpr& expr, std::uint64_t p) {
    if (!is_composed_form(expr)) throw ArgumentError("expression is not of the form h(g1(n1) + g2(n2))");
    require_prime_modulus(p);
    std::vector<Residue> g1(p, 0), g2(p, 0), h(p, 0);
    for (std::uint64_t n = 0; n < p; ++n) {
        std::uint64_t v1 = 0, v2 = 0;
        for (const auto& t : expr.group->inner) {
            const auto c = detail::reduce(t.coeff, p);
            if (t.b == 0) v1 = (v1 + c * pow_mod(n, t.a, p)) % p; // includes constants
            else v2 = (v2 + c * pow_mod(n, t.b, p)) % p;
        }
        g1[n] = static_cast<Residue>(v1);
        g2[n] = static_cast<Residue>(v2);
        h[n] = static_cast<Residue>(detail::reduce(expr.group->coeff, p) * pow_mod(n, expr.group->exponent, p) % p);
    }
    return ComposedTask(p, std::move(g1), std::move(g2), std::move(h));
}

inline std::uint64_t resolve_modulus(const TaskExpr& expr, const std::optional<std::uint64_t>& p) {
    const std::uint64_t requested = p.value_or(0);
    if (expr.modulus && p && *expr.modulus != requested)
        throw ArgumentError("task string says mod " + std::to_string(*expr.modulus) + " but modulus " +
                            std::to_string(requested) + " was requested");
    if (expr.modulus) return *expr.modulus;
    if (p) return requested;
    throw ArgumentError("no modulus given (append 'mod p' or pass one)");
}

/// Composed form when the expression is a bare h(g1(n1) + g2(n2)) group,
/// otherwise the expanded polynomial.
inline ParsedTask parse_polynomial(std::string_view text, std::optional<std::uint64_t> p = std::nullopt) {
    const auto expr = parse_task_expr(text);
    const auto modulus = resolve_modulus(expr, p);
    require_prime_modulus(modulus);
    if (is_composed_form(expr)) return to_composed(expr, modulus);
    return expand(expr, modulus);
}

/// Always the expanded polynomial, whatever the written form.
inline ModPolynomial expand_polynomial(std::string_view text, std::optional<std::uint64_t> p = std::nullopt) {
    const auto expr = parse_task_expr(text);
    return expand(expr, resolve_modulus(expr, p));
}

inline TaskOracle make_oracle(const ParsedTask& task) {
    return std::visit([](const auto& t) { return make_oracle(t); }, task);
}

} // namespace modpoly
