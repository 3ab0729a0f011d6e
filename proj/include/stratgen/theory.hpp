#pragma once

#include <map>
#include <set>
#include <string>
#include <vector>

#include "stratgen/kernel.hpp"

namespace stratgen {

struct Conjecture {
    std::string name;
    std::vector<std::pair<std::string, Term>> assumes;  // declaration order
    Term shows;

    std::map<std::string, Term> hyps() const {
        std::map<std::string, Term> out;
        for (const auto& [n, t] : assumes) out.emplace(n, t);
        return out;
    }
};

struct Script {
    std::string name;
    std::string conjecture;
    std::vector<TacticApp> tactics;
};

/**
 * @brief A parsed theory file: atom alphabet, named axioms, conjectures with
 * named hypotheses, and tactic scripts.
 */
struct TheoryFile {
    std::set<std::string> alphabet;
    std::map<std::string, Equation> axioms;
    std::vector<std::string> axiom_order;
    std::map<std::string, Conjecture> conjectures;
    std::map<std::string, Script> scripts;
    std::vector<std::string> conjecture_order;
    std::vector<std::string> script_order;
};

namespace detail {

inline std::string strip(const std::string& s) {
    std::size_t a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    std::size_t b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

inline std::vector<std::string> split_on(const std::string& s, const std::string& sep) {
    std::vector<std::string> out;
    std::size_t pos = 0;
    while (true) {
        std::size_t hit = s.find(sep, pos);
        if (hit == std::string::npos) {
            out.push_back(s.substr(pos));
            return out;
        }
        out.push_back(s.substr(pos, hit - pos));
        pos = hit + sep.size();
    }
}

}  // namespace detail

/// Parse one script tactic:  subst {NAMES} | rule NAME | rule {NAMES} | rule class LABEL
inline TacticApp parse_tactic(const std::string& text) {
    std::string t = detail::strip(text);
    auto names_in_braces = [&](const std::string& body) {
        std::set<std::string> names;
        for (auto& part : detail::split_on(body, ",")) {
            std::string p = detail::strip(part);
            if (p.empty()) throw parse_error("empty name in tactic argument", 0);
            names.insert(p);
        }
        return names;
    };
    if (t.rfind("subst", 0) == 0) {
        std::string rest = detail::strip(t.substr(5));
        if (rest.size() < 2 || rest.front() != '{' || rest.back() != '}')
            throw parse_error("subst expects {NAMES}", 0);
        return TacticApp::subst(names_in_braces(rest.substr(1, rest.size() - 2)));
    }
    if (t.rfind("rule", 0) == 0) {
        std::string rest = detail::strip(t.substr(4));
        if (rest.rfind("class", 0) == 0) {
            std::string label = detail::strip(rest.substr(5));
            if (label.empty()) throw parse_error("rule class expects a label", 0);
            return TacticApp::rule_class(label);
        }
        if (!rest.empty() && rest.front() == '{') {
            if (rest.back() != '}') throw parse_error("rule expects {NAMES}", 0);
            return TacticApp::rule(names_in_braces(rest.substr(1, rest.size() - 2)));
        }
        if (rest.empty()) throw parse_error("rule expects a hypothesis name", 0);
        return TacticApp::rule({rest});
    }
    throw parse_error("unknown tactic: " + t, 0);
}

/**
 * Parse a theory file. Line-oriented stanzas:
 *   atoms a b c ...
 *   axiom NAME: [COND ==>] LHS <-> RHS
 *   conjecture NAME: assumes n1: TERM and n2: TERM ... shows TERM
 *   script NAME for CONJ: TAC; TAC; ...
 * '#' starts a comment.
 */
inline TheoryFile parse_theory(const std::string& text) {
    TheoryFile th;
    int lineno = 0;
    auto fail = [&](const std::string& msg) {
        throw parse_error("line " + std::to_string(lineno) + ": " + msg, 0);
    };
    for (const std::string& raw : detail::split_on(text, "\n")) {
        ++lineno;
        std::string line = raw;
        std::size_t hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = detail::strip(line);
        if (line.empty()) continue;

        if (line.rfind("atoms", 0) == 0) {
            for (auto& a : detail::split_on(line.substr(5), " ")) {
                std::string atom = detail::strip(a);
                if (atom.empty()) continue;
                if (atom == "pure" || atom == "and" || atom == "shows" || atom == "assumes")
                    fail("'" + atom + "' cannot be an atom name");
                if (atom[0] >= 'A' && atom[0] <= 'Z') fail("atom names must be lower-case");
                th.alphabet.insert(atom);
            }
            continue;
        }
        if (line.rfind("axiom", 0) == 0) {
            std::size_t colon = line.find(':');
            if (colon == std::string::npos) fail("axiom without ':'");
            std::string name = detail::strip(line.substr(5, colon - 5));
            if (name.empty()) fail("axiom without a name");
            if (th.axioms.count(name)) fail("duplicate axiom " + name);
            std::string body = line.substr(colon + 1);
            Equation eq;
            eq.name = name;
            auto imp = detail::split_on(body, "==>");
            std::string eq_part = body;
            try {
                if (imp.size() == 2) {
                    eq.condition = parse_term(detail::strip(imp[0]));
                    eq_part = imp[1];
                } else if (imp.size() > 2) {
                    fail("more than one '==>' in axiom");
                }
                auto sides = detail::split_on(eq_part, "<->");
                if (sides.size() != 2) fail("axiom body must be LHS <-> RHS");
                eq.lhs = parse_term(detail::strip(sides[0]));
                eq.rhs = parse_term(detail::strip(sides[1]));
            } catch (const parse_error& e) {
                fail(e.what());
            }
            validate_equation(eq);
            th.axioms.emplace(name, std::move(eq));
            th.axiom_order.push_back(name);
            continue;
        }
        if (line.rfind("conjecture", 0) == 0) {
            std::size_t colon = line.find(':');
            if (colon == std::string::npos) fail("conjecture without ':'");
            Conjecture c;
            c.name = detail::strip(line.substr(10, colon - 10));
            if (c.name.empty()) fail("conjecture without a name");
            if (th.conjectures.count(c.name)) fail("duplicate conjecture " + c.name);
            std::string body = detail::strip(line.substr(colon + 1));
            // the 'shows' keyword as a standalone token
            std::size_t shows_at = std::string::npos;
            for (std::size_t at = body.find("shows"); at != std::string::npos;
                 at = body.find("shows", at + 1)) {
                bool left_ok = at == 0 || body[at - 1] == ' ' || body[at - 1] == '\t';
                std::size_t end = at + 5;
                bool right_ok = end >= body.size() || body[end] == ' ' || body[end] == '\t';
                if (left_ok && right_ok) {
                    shows_at = at;
                    break;
                }
            }
            if (shows_at == std::string::npos) fail("conjecture without 'shows'");
            std::string before = detail::strip(body.substr(0, shows_at));
            std::string concl_text = detail::strip(body.substr(shows_at + 5));
            try {
                if (!before.empty()) {
                    if (before.rfind("assumes", 0) != 0) fail("expected 'assumes'");
                    for (auto& part : detail::split_on(before.substr(7), " and ")) {
                        std::string hyp = detail::strip(part);
                        std::size_t hcolon = hyp.find(':');
                        if (hcolon == std::string::npos) fail("hypothesis without ':'");
                        std::string hname = detail::strip(hyp.substr(0, hcolon));
                        Term hterm = parse_term(detail::strip(hyp.substr(hcolon + 1)), th.alphabet);
                        if (!is_ground(hterm)) fail("hypothesis " + hname + " is not ground");
                        for (const auto& [n, _] : c.assumes)
                            if (n == hname) fail("duplicate hypothesis " + hname);
                        c.assumes.emplace_back(hname, std::move(hterm));
                    }
                }
                c.shows = parse_term(concl_text, th.alphabet);
                if (!is_ground(c.shows)) fail("conclusion is not ground");
            } catch (const parse_error& e) {
                fail(e.what());
            }
            th.conjecture_order.push_back(c.name);
            th.conjectures.emplace(c.name, std::move(c));
            continue;
        }
        if (line.rfind("script", 0) == 0) {
            std::size_t colon = line.find(':');
            if (colon == std::string::npos) fail("script without ':'");
            std::string head = detail::strip(line.substr(6, colon - 6));
            auto parts = detail::split_on(head, " for ");
            if (parts.size() != 2) fail("script header must be NAME for CONJ");
            Script s;
            s.name = detail::strip(parts[0]);
            s.conjecture = detail::strip(parts[1]);
            if (th.scripts.count(s.name)) fail("duplicate script " + s.name);
            try {
                for (auto& tac : detail::split_on(line.substr(colon + 1), ";")) {
                    std::string t = detail::strip(tac);
                    if (t.empty()) continue;
                    s.tactics.push_back(parse_tactic(t));
                }
            } catch (const parse_error& e) {
                fail(e.what());
            }
            if (s.tactics.empty()) fail("script without tactics");
            th.script_order.push_back(s.name);
            th.scripts.emplace(s.name, std::move(s));
            continue;
        }
        fail("unknown stanza: " + line);
    }

    // cross references: scripts name declared conjectures, axioms, and
    // hypotheses of their own conjecture (running a script against another
    // conjecture is still allowed and fails at replay time instead)
    for (const auto& [name, s] : th.scripts) {
        auto cit = th.conjectures.find(s.conjecture);
        if (cit == th.conjectures.end())
            throw parse_error("script " + name + " references unknown conjecture " + s.conjecture, 0);
        auto hyps = cit->second.hyps();
        for (const TacticApp& t : s.tactics) {
            if (t.kind == TacticApp::Kind::Subst) {
                for (const auto& eq : t.rule_refs)
                    if (!th.axioms.count(eq))
                        throw parse_error("script " + name + " references unknown axiom " + eq, 0);
            } else if (t.arg_kind == TacticApp::ArgKind::RuleRefs) {
                for (const auto& hyp : t.rule_refs)
                    if (!hyps.count(hyp))
                        throw parse_error("script " + name + " references unknown hypothesis " + hyp,
                                          0);
            }
        }
    }
    return th;
}

}  // namespace stratgen
