#pragma once

#include <algorithm>
#include <memory>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace stratgen {

/// Error thrown by the term parser; carries a byte offset into the input.
class parse_error : public std::runtime_error {
public:
    parse_error(const std::string& msg, std::size_t offset)
        : std::runtime_error(msg + " (at offset " + std::to_string(offset) + ")"),
          offset_(offset) {}
    std::size_t offset() const { return offset_; }

private:
    std::size_t offset_;
};

class invalid_position : public std::runtime_error {
public:
    explicit invalid_position(const std::string& msg) : std::runtime_error(msg) {}
};

enum class Op { Star, Wedge, Pure };

inline int arity(Op op) { return op == Op::Pure ? 1 : 2; }

inline const char* op_name(Op op) {
    switch (op) {
        case Op::Star: return "*";
        case Op::Wedge: return "/\\";
        case Op::Pure: return "pure";
    }
    return "?";
}

/**
 * @brief Immutable object-logic term: an atom or an application of *, /\ or pure.
 *
 * Atoms whose name starts with an upper-case letter are pattern metavariables;
 * all other atoms are ground symbols drawn from a theory alphabet.
 */
class Term {
public:
    Term() = default;

    static Term atom(std::string name) {
        auto n = std::make_shared<Node>();
        n->is_atom = true;
        n->name = std::move(name);
        return Term(std::move(n));
    }

    static Term app(Op op, std::vector<Term> args) {
        if (static_cast<int>(args.size()) != arity(op))
            throw std::invalid_argument("arity mismatch for operator");
        auto n = std::make_shared<Node>();
        n->is_atom = false;
        n->op = op;
        n->args = std::move(args);
        return Term(std::move(n));
    }

    static Term star(Term a, Term b) { return app(Op::Star, {std::move(a), std::move(b)}); }
    static Term wedge(Term a, Term b) { return app(Op::Wedge, {std::move(a), std::move(b)}); }
    static Term pure(Term a) { return app(Op::Pure, {std::move(a)}); }

    bool valid() const { return node_ != nullptr; }
    bool is_atom() const { return node_->is_atom; }
    bool is_metavar() const {
        return node_->is_atom && !node_->name.empty() &&
               node_->name[0] >= 'A' && node_->name[0] <= 'Z';
    }
    const std::string& name() const { return node_->name; }
    Op op() const { return node_->op; }
    const std::vector<Term>& args() const { return node_->args; }

    friend bool operator==(const Term& a, const Term& b) { return compare(a, b) == 0; }
    friend bool operator!=(const Term& a, const Term& b) { return compare(a, b) != 0; }
    friend bool operator<(const Term& a, const Term& b) { return compare(a, b) < 0; }

    static int compare(const Term& a, const Term& b) {
        if (a.node_ == b.node_) return 0;
        if (a.is_atom() != b.is_atom()) return a.is_atom() ? -1 : 1;
        if (a.is_atom()) return a.name().compare(b.name());
        if (a.op() != b.op()) return a.op() < b.op() ? -1 : 1;
        for (std::size_t i = 0; i < a.args().size(); ++i) {
            int c = compare(a.args()[i], b.args()[i]);
            if (c != 0) return c;
        }
        return 0;
    }

private:
    struct Node {
        bool is_atom = true;
        std::string name;
        Op op = Op::Star;
        std::vector<Term> args;
    };
    explicit Term(std::shared_ptr<const Node> n) : node_(std::move(n)) {}
    std::shared_ptr<const Node> node_;
};

/// 1-based path from the root; the empty path is the root itself.
using Position = std::vector<int>;

using Substitution = std::vector<std::pair<std::string, Term>>;

inline std::optional<Term> lookup(const Substitution& s, const std::string& v) {
    for (const auto& [k, t] : s)
        if (k == v) return t;
    return std::nullopt;
}

// ---------------------------------------------------------------------------
// printing

inline void print_term(std::ostream& os, const Term& t, int parent_prec) {
    // precedence: pure/atom 3, star 2, wedge 1; star and wedge right-associative
    if (t.is_atom()) {
        os << t.name();
        return;
    }
    switch (t.op()) {
        case Op::Pure:
            os << "pure(";
            print_term(os, t.args()[0], 0);
            os << ")";
            break;
        case Op::Star: {
            bool paren = parent_prec > 2;
            if (paren) os << "(";
            print_term(os, t.args()[0], 3);
            os << " * ";
            print_term(os, t.args()[1], 2);
            if (paren) os << ")";
            break;
        }
        case Op::Wedge: {
            bool paren = parent_prec > 1;
            if (paren) os << "(";
            print_term(os, t.args()[0], 2);
            os << " /\\ ";
            print_term(os, t.args()[1], 1);
            if (paren) os << ")";
            break;
        }
    }
}

inline std::string to_text(const Term& t) {
    std::ostringstream os;
    print_term(os, t, 0);
    return os.str();
}

// ---------------------------------------------------------------------------
// parsing
//
//   term  := wterm
//   wterm := sterm ("/\" wterm)?
//   sterm := aterm ("*" sterm)?
//   aterm := IDENT | "pure" "(" term ")" | "(" term ")"
//
// Upper-case IDENTs are metavariables; lower-case IDENTs must belong to the
// given alphabet (empty alphabet = accept any lower-case ident).

namespace detail {

struct TermScanner {
    std::string_view src;
    std::size_t pos = 0;

    void skip_ws() {
        while (pos < src.size() && (src[pos] == ' ' || src[pos] == '\t')) ++pos;
    }
    bool eat(std::string_view tok) {
        skip_ws();
        if (src.substr(pos, tok.size()) == tok) {
            pos += tok.size();
            return true;
        }
        return false;
    }
    static bool ident_char(char c) {
        return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') ||
               (c >= '0' && c <= '9') || c == '_' || c == '\'';
    }
    std::string ident() {
        skip_ws();
        std::size_t start = pos;
        while (pos < src.size() && ident_char(src[pos])) ++pos;
        return std::string(src.substr(start, pos - start));
    }
};

inline Term parse_wterm(TermScanner& s, const std::set<std::string>& alphabet);

inline Term parse_aterm(TermScanner& s, const std::set<std::string>& alphabet) {
    s.skip_ws();
    if (s.eat("(")) {
        Term t = parse_wterm(s, alphabet);
        if (!s.eat(")")) throw parse_error("expected ')'", s.pos);
        return t;
    }
    std::size_t at = s.pos;
    std::string id = s.ident();
    if (id.empty()) throw parse_error("expected term", at);
    if (id == "pure") {
        if (!s.eat("(")) throw parse_error("expected '(' after pure", s.pos);
        Term t = parse_wterm(s, alphabet);
        if (!s.eat(")")) throw parse_error("expected ')'", s.pos);
        return Term::pure(t);
    }
    if (id[0] >= 'A' && id[0] <= 'Z') return Term::atom(id);  // metavariable
    if (!alphabet.empty() && !alphabet.count(id))
        throw parse_error("unknown symbol '" + id + "' outside alphabet", at);
    return Term::atom(id);
}

inline Term parse_sterm(TermScanner& s, const std::set<std::string>& alphabet) {
    Term lhs = parse_aterm(s, alphabet);
    if (s.eat("*")) return Term::star(lhs, parse_sterm(s, alphabet));
    return lhs;
}

inline Term parse_wterm(TermScanner& s, const std::set<std::string>& alphabet) {
    Term lhs = parse_sterm(s, alphabet);
    if (s.eat("/\\")) return Term::wedge(lhs, parse_wterm(s, alphabet));
    return lhs;
}

}  // namespace detail

inline Term parse_term(std::string_view text, const std::set<std::string>& alphabet = {}) {
    detail::TermScanner s{text};
    Term t = detail::parse_wterm(s, alphabet);
    s.skip_ws();
    if (s.pos != text.size()) throw parse_error("trailing input after term", s.pos);
    return t;
}

// ---------------------------------------------------------------------------
// positions

inline Term subterm_at(const Term& t, const Position& p) {
    Term cur = t;
    for (std::size_t d = 0; d < p.size(); ++d) {
        if (cur.is_atom() || p[d] < 1 || p[d] > static_cast<int>(cur.args().size()))
            throw invalid_position("invalid position at depth " + std::to_string(d));
        cur = cur.args()[p[d] - 1];
    }
    return cur;
}

inline Term replace_at(const Term& t, const Position& p, const Term& s, std::size_t depth = 0) {
    if (depth == p.size()) return s;
    if (t.is_atom() || p[depth] < 1 || p[depth] > static_cast<int>(t.args().size()))
        throw invalid_position("invalid position at depth " + std::to_string(depth));
    std::vector<Term> args = t.args();
    args[p[depth] - 1] = replace_at(args[p[depth] - 1], p, s, depth + 1);
    return Term::app(t.op(), std::move(args));
}

/// All positions of t in post-order (children before their parent, left first).
inline std::vector<Position> positions_postorder(const Term& t) {
    std::vector<Position> out;
    Position cur;
    auto walk = [&](auto&& self, const Term& u) -> void {
        for (std::size_t i = 0; i < (u.is_atom() ? 0 : u.args().size()); ++i) {
            cur.push_back(static_cast<int>(i + 1));
            self(self, u.args()[i]);
            cur.pop_back();
        }
        out.push_back(cur);
    };
    walk(walk, t);
    return out;
}

/// All (position, atom name) pairs for atom subterms, at any depth.
inline std::set<std::pair<Position, std::string>> leaf_positions(const Term& t) {
    std::set<std::pair<Position, std::string>> out;
    Position cur;
    auto walk = [&](auto&& self, const Term& u) -> void {
        if (u.is_atom()) {
            out.emplace(cur, u.name());
            return;
        }
        for (std::size_t i = 0; i < u.args().size(); ++i) {
            cur.push_back(static_cast<int>(i + 1));
            self(self, u.args()[i]);
            cur.pop_back();
        }
    };
    walk(walk, t);
    return out;
}

/// Root-level atom children: (1-based child index, atom name).
/// This is the position notion used by the symb_at_pos link feature.
inline std::set<std::pair<int, std::string>> root_atom_positions(const Term& t) {
    std::set<std::pair<int, std::string>> out;
    if (t.is_atom()) return out;
    for (std::size_t i = 0; i < t.args().size(); ++i)
        if (t.args()[i].is_atom())
            out.emplace(static_cast<int>(i + 1), t.args()[i].name());
    return out;
}

/// Operator symbols (star/wedge/pure heads) occurring anywhere in t; atoms excluded.
inline std::set<std::string> operator_symbols(const Term& t) {
    std::set<std::string> out;
    auto walk = [&](auto&& self, const Term& u) -> void {
        if (u.is_atom()) return;
        out.insert(op_name(u.op()));
        for (const Term& a : u.args()) self(self, a);
    };
    walk(walk, t);
    return out;
}

/// Head symbol: the operator name for applications, the atom's own name for atoms.
inline std::string top_symbol_of(const Term& t) {
    return t.is_atom() ? t.name() : op_name(t.op());
}

// ---------------------------------------------------------------------------
// matching

/// First-order matching: find sigma with sigma(pattern) == t, if one exists.
inline std::optional<Substitution> match_term(const Term& pattern, const Term& t) {
    Substitution sigma;
    auto go = [&](auto&& self, const Term& pat, const Term& u) -> bool {
        if (pat.is_metavar()) {
            if (auto bound = lookup(sigma, pat.name())) return *bound == u;
            sigma.emplace_back(pat.name(), u);
            return true;
        }
        if (pat.is_atom()) return u == pat;
        if (u.is_atom() || u.op() != pat.op()) return false;
        for (std::size_t i = 0; i < pat.args().size(); ++i)
            if (!self(self, pat.args()[i], u.args()[i])) return false;
        return true;
    };
    if (!go(go, pattern, t)) return std::nullopt;
    return sigma;
}

/// Apply a substitution to a pattern; metavariables without a binding are kept.
inline Term apply_substitution(const Substitution& sigma, const Term& pattern) {
    if (pattern.is_metavar()) {
        if (auto bound = lookup(sigma, pattern.name())) return *bound;
        return pattern;
    }
    if (pattern.is_atom()) return pattern;
    std::vector<Term> args;
    args.reserve(pattern.args().size());
    for (const Term& a : pattern.args()) args.push_back(apply_substitution(sigma, a));
    return Term::app(pattern.op(), std::move(args));
}

inline bool is_ground(const Term& t) {
    if (t.is_atom()) return !t.is_metavar();
    for (const Term& a : t.args())
        if (!is_ground(a)) return false;
    return true;
}

}  // namespace stratgen
