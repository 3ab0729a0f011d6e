#pragma once

#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "stratgen/term.hpp"

namespace stratgen {

// ---------------------------------------------------------------------------
// feature data: DNF lists of atoms with a set semantics
// ---------------------------------------------------------------------------

/// The distinguished absence witness: "this feature holds of nothing here".
struct BottomDatum {
    friend bool operator==(BottomDatum, BottomDatum) { return true; }
    friend bool operator<(BottomDatum, BottomDatum) { return false; }
};

struct TermDatum {
    Term term;
    friend bool operator==(const TermDatum& a, const TermDatum& b) { return a.term == b.term; }
    friend bool operator<(const TermDatum& a, const TermDatum& b) { return a.term < b.term; }
};

/// One DNF atom. Symbol atoms carry operator/atom names; position atoms are
/// 1-based index paths; Int and Term atoms are representable but no
/// implemented feature gives them a matcher.
using Datum = std::variant<BottomDatum, bool, long long, Position, std::string, TermDatum>;

inline bool is_bottom_datum(const Datum& d) { return std::holds_alternative<BottomDatum>(d); }

inline Datum sym(std::string s) { return Datum(std::in_place_type<std::string>, std::move(s)); }
inline Datum pos1(int i) { return Datum(std::in_place_type<Position>, Position{i}); }

using Conjunct = std::set<Datum>;
using Dnf = std::vector<Conjunct>;

enum class FeatureKind { TopSymbol, HasSymbol, IsMatch, SymbAtPos };

inline FeatureKind feature_kind(const std::string& name) {
    if (name == "top_symbol") return FeatureKind::TopSymbol;
    if (name == "has_symbol") return FeatureKind::HasSymbol;
    if (name == "is_match") return FeatureKind::IsMatch;
    if (name == "symb_at_pos") return FeatureKind::SymbAtPos;
    throw std::invalid_argument("unknown feature name: " + name);
}

/// Features whose matcher pins a single value per element: a conjunct naming
/// two distinct non-bottom atoms can never hold.
inline bool feature_exclusive(FeatureKind k) {
    return k == FeatureKind::TopSymbol || k == FeatureKind::IsMatch;
}

/**
 * @brief Lattice-valued feature data: Top, or a DNF over atoms.
 *
 * Canonical form: no unsatisfiable conjunct, no conjunct a superset of
 * another (absorption-minimised antichain), conjuncts sorted. The empty DNF
 * is bottom. Equality of canonical forms is decidable equality of the data.
 */
struct FeatureData {
    bool is_top = false;
    Dnf dnf;  // meaningful only when !is_top

    static FeatureData top() { return FeatureData{true, {}}; }
    static FeatureData bottom() { return FeatureData{false, {}}; }
    static FeatureData of(Dnf d) { return FeatureData{false, std::move(d)}; }
    static FeatureData single(Datum d) { return FeatureData{false, {Conjunct{std::move(d)}}}; }

    bool is_bottom() const { return !is_top && dnf.empty(); }

    friend bool operator==(const FeatureData& a, const FeatureData& b) {
        return a.is_top == b.is_top && (a.is_top || a.dnf == b.dnf);
    }
    friend bool operator!=(const FeatureData& a, const FeatureData& b) { return !(a == b); }
    friend bool operator<(const FeatureData& a, const FeatureData& b) {
        if (a.is_top != b.is_top) return b.is_top;
        return a.dnf < b.dnf;
    }
};

namespace detail {

inline bool conjunct_unsat(FeatureKind k, const Conjunct& c) {
    bool has_bottom = false;
    std::size_t non_bottom = 0;
    for (const Datum& d : c) {
        if (is_bottom_datum(d))
            has_bottom = true;
        else
            ++non_bottom;
    }
    if (has_bottom && non_bottom > 0) return true;  // bottom is disjoint from everything
    if (feature_exclusive(k) && non_bottom > 1) return true;
    return false;
}

inline bool superset_of_some(const Conjunct& c, const Dnf& dnf, const Conjunct* skip) {
    for (const Conjunct& other : dnf) {
        if (&other == skip || &other == &c) continue;
        if (other.size() <= c.size() &&
            std::includes(c.begin(), c.end(), other.begin(), other.end()))
            return true;
    }
    return false;
}

}  // namespace detail

/// Bring data to canonical form: prune unsatisfiable conjuncts, absorb
/// supersets, sort. An empty conjunct denotes "always" and collapses to Top.
inline FeatureData canonicalise(FeatureKind k, const FeatureData& x) {
    if (x.is_top) return FeatureData::top();
    Dnf pruned;
    for (const Conjunct& c : x.dnf) {
        if (c.empty()) return FeatureData::top();
        if (!detail::conjunct_unsat(k, c)) pruned.push_back(c);
    }
    std::sort(pruned.begin(), pruned.end());
    pruned.erase(std::unique(pruned.begin(), pruned.end()), pruned.end());
    Dnf out;
    for (const Conjunct& c : pruned)
        if (!detail::superset_of_some(c, pruned, nullptr)) out.push_back(c);
    return FeatureData::of(std::move(out));
}

/// Greatest lower bound: set-semantics intersection, computed by distributing
/// conjunct unions and re-minimising.
inline FeatureData meet_f(FeatureKind k, const FeatureData& x, const FeatureData& y) {
    if (x.is_top) return canonicalise(k, y);
    if (y.is_top) return canonicalise(k, x);
    Dnf product;
    for (const Conjunct& a : x.dnf)
        for (const Conjunct& b : y.dnf) {
            Conjunct u = a;
            u.insert(b.begin(), b.end());
            product.push_back(std::move(u));
        }
    return canonicalise(k, FeatureData::of(std::move(product)));
}

/// Least upper bound: set-semantics union.
inline FeatureData join_f(FeatureKind k, const FeatureData& x, const FeatureData& y) {
    if (x.is_top || y.is_top) return FeatureData::top();
    Dnf both = x.dnf;
    both.insert(both.end(), y.dnf.begin(), y.dnf.end());
    return canonicalise(k, FeatureData::of(std::move(both)));
}

inline bool feature_orthogonal(FeatureKind k, const FeatureData& x, const FeatureData& y) {
    return meet_f(k, x, y).is_bottom();
}

inline bool feature_subtype(FeatureKind k, const FeatureData& x, const FeatureData& y) {
    return meet_f(k, x, y) == canonicalise(k, x);
}

/// Semantic representation: the canonical antichain of atom sets, or Top's
/// universal-set marker (nullopt).
inline std::optional<std::vector<Conjunct>> sem(FeatureKind k, const FeatureData& x) {
    FeatureData c = canonicalise(k, x);
    if (c.is_top) return std::nullopt;
    return c.dnf;
}

// ---------------------------------------------------------------------------
// goal classes
// ---------------------------------------------------------------------------

inline const std::vector<std::string>& class_feature_names() {
    static const std::vector<std::string> names{"has_symbol", "top_symbol"};
    return names;
}

inline const std::vector<std::string>& link_feature_names() {
    static const std::vector<std::string> names{"is_match", "symb_at_pos"};
    return names;
}

/**
 * @brief A class: a map from feature names to feature data, describing a
 * family of elements. Absent features are Top. The label records provenance
 * (which hypothesis role, or "concl").
 */
struct GoalClass {
    std::string label;
    std::map<std::string, FeatureData> features;

    FeatureData at(const std::string& feature) const {
        auto it = features.find(feature);
        return it == features.end() ? FeatureData::top() : it->second;
    }

    GoalClass canonical() const {
        GoalClass out;
        out.label = label;
        for (const auto& [name, data] : features) {
            FeatureData c = canonicalise(feature_kind(name), data);
            if (!c.is_top) out.features.emplace(name, std::move(c));
        }
        return out;
    }

    friend bool operator==(const GoalClass& a, const GoalClass& b) {
        return a.label == b.label && a.canonical().features == b.canonical().features;
    }
    friend bool operator!=(const GoalClass& a, const GoalClass& b) { return !(a == b); }
};

/// Content comparison that ignores the provenance label.
inline int class_content_compare(const GoalClass& a, const GoalClass& b) {
    auto fa = a.canonical().features;
    auto fb = b.canonical().features;
    if (fa < fb) return -1;
    if (fb < fa) return 1;
    return 0;
}

inline GoalClass top_class(std::string label = "top") { return GoalClass{std::move(label), {}}; }

inline GoalClass bottom_class(std::string label = "bot") {
    GoalClass c{std::move(label), {}};
    for (const auto& f : class_feature_names()) c.features.emplace(f, FeatureData::bottom());
    return c;
}

namespace detail {

inline std::string merged_label(const std::string& a, const std::string& b) {
    return a == b ? a : a + "|" + b;
}

template <typename F>
GoalClass class_pointwise(const GoalClass& c1, const GoalClass& c2, F&& op) {
    GoalClass out;
    out.label = merged_label(c1.label, c2.label);
    std::set<std::string> names;
    for (const auto& [n, _] : c1.features) names.insert(n);
    for (const auto& [n, _] : c2.features) names.insert(n);
    for (const auto& n : names) {
        FeatureData v = op(feature_kind(n), c1.at(n), c2.at(n));
        if (!v.is_top) out.features.emplace(n, std::move(v));
    }
    return out;
}

}  // namespace detail

inline GoalClass class_meet(const GoalClass& c1, const GoalClass& c2) {
    return detail::class_pointwise(c1, c2, [](FeatureKind k, const FeatureData& x, const FeatureData& y) {
        return meet_f(k, x, y);
    });
}

inline GoalClass class_join(const GoalClass& c1, const GoalClass& c2) {
    return detail::class_pointwise(c1, c2, [](FeatureKind k, const FeatureData& x, const FeatureData& y) {
        return join_f(k, x, y);
    });
}

inline bool class_orthogonal(const GoalClass& c1, const GoalClass& c2) {
    for (const auto& n : class_feature_names())
        if (feature_orthogonal(feature_kind(n), c1.at(n), c2.at(n))) return true;
    return false;
}

inline bool class_subtype(const GoalClass& c1, const GoalClass& c2) {
    for (const auto& n : class_feature_names())
        if (!feature_subtype(feature_kind(n), c1.at(n), c2.at(n))) return false;
    return true;
}

// ---------------------------------------------------------------------------
// class and link matchers
// ---------------------------------------------------------------------------

namespace detail {

inline bool top_symbol_conjunct_holds(const Conjunct& c, const std::string& top) {
    for (const Datum& d : c) {
        const auto* s = std::get_if<std::string>(&d);
        if (!s || *s != top) return false;
    }
    return true;
}

inline bool has_symbol_conjunct_holds(const Conjunct& c, const std::set<std::string>& ops) {
    for (const Datum& d : c) {
        const auto* s = std::get_if<std::string>(&d);
        if (!s || !ops.count(*s)) return false;
    }
    return true;
}

}  // namespace detail

/// Per-feature predicate on a single element; Top always holds, bottom never.
inline bool match_feature(const std::string& feature, const FeatureData& data, const Term& e) {
    FeatureData c = canonicalise(feature_kind(feature), data);
    if (c.is_top) return true;
    if (feature_kind(feature) == FeatureKind::TopSymbol) {
        std::string top = top_symbol_of(e);
        for (const Conjunct& conj : c.dnf)
            if (detail::top_symbol_conjunct_holds(conj, top)) return true;
        return false;
    }
    if (feature_kind(feature) == FeatureKind::HasSymbol) {
        std::set<std::string> ops = operator_symbols(e);
        for (const Conjunct& conj : c.dnf)
            if (detail::has_symbol_conjunct_holds(conj, ops)) return true;
        return false;
    }
    throw std::invalid_argument("feature " + feature + " is not a class feature");
}

/// A class matches an element iff the predicate of every feature holds.
inline bool match_class(const GoalClass& c, const Term& e) {
    for (const auto& [name, data] : c.features)
        if (!match_feature(name, data, e)) return false;
    return true;
}

/**
 * Binary link-feature matcher.
 *
 * is_match: the data's booleans are compared against the result of an exact
 * match between the elements.
 *
 * symb_at_pos: a position atom [i] holds iff the i-th root child of both
 * elements is the same atom; the bottom atom holds iff the elements share no
 * root-level (index, atom) pair at all. Deeper paths never hold.
 */
inline bool match_link_feature(const std::string& feature, const FeatureData& data, const Term& e1,
                               const Term& e2) {
    FeatureKind k = feature_kind(feature);
    FeatureData c = canonicalise(k, data);
    if (c.is_top) return true;
    if (k == FeatureKind::IsMatch) {
        bool eq = (e1 == e2);
        for (const Conjunct& conj : c.dnf) {
            bool ok = true;
            for (const Datum& d : conj) {
                const bool* b = std::get_if<bool>(&d);
                if (!b || *b != eq) {
                    ok = false;
                    break;
                }
            }
            if (ok) return true;
        }
        return false;
    }
    if (k == FeatureKind::SymbAtPos) {
        auto a1 = root_atom_positions(e1);
        auto a2 = root_atom_positions(e2);
        std::set<std::pair<int, std::string>> common;
        for (const auto& p : a1)
            if (a2.count(p)) common.insert(p);
        auto datum_holds = [&](const Datum& d) {
            if (is_bottom_datum(d)) return common.empty();
            const Position* p = std::get_if<Position>(&d);
            if (!p || p->size() != 1) return false;
            for (const auto& [i, s] : common)
                if (i == (*p)[0]) return true;
            return false;
        };
        for (const Conjunct& conj : c.dnf) {
            bool ok = true;
            for (const Datum& d : conj)
                if (!datum_holds(d)) {
                    ok = false;
                    break;
                }
            if (ok) return true;
        }
        return false;
    }
    throw std::invalid_argument("feature " + feature + " is not a link feature");
}

// ---------------------------------------------------------------------------
// links
// ---------------------------------------------------------------------------

/// Reference to a class within a goal type: the conclusion or a fact label.
struct ClassRef {
    bool is_concl = false;
    std::string label;  // empty for concl

    static ClassRef concl() { return ClassRef{true, ""}; }
    static ClassRef fact(std::string l) { return ClassRef{false, std::move(l)}; }

    friend bool operator==(const ClassRef& a, const ClassRef& b) {
        return a.is_concl == b.is_concl && a.label == b.label;
    }
    friend bool operator<(const ClassRef& a, const ClassRef& b) {
        if (a.is_concl != b.is_concl) return a.is_concl;  // concl sorts first
        return a.label < b.label;
    }
    std::string to_text() const { return is_concl ? "concl" : label; }
};

struct LinkKey {
    std::string feature;
    ClassRef c1;
    ClassRef c2;

    friend bool operator==(const LinkKey& a, const LinkKey& b) {
        return a.feature == b.feature && a.c1 == b.c1 && a.c2 == b.c2;
    }
    friend bool operator<(const LinkKey& a, const LinkKey& b) {
        return std::tie(a.feature, a.c1, a.c2) < std::tie(b.feature, b.c1, b.c2);
    }
};

/// A link: entries keyed by (feature, class, class); missing entries are Top.
struct Link {
    std::map<LinkKey, FeatureData> entries;

    FeatureData at(const LinkKey& key) const {
        auto it = entries.find(key);
        return it == entries.end() ? FeatureData::top() : it->second;
    }

    Link canonical() const {
        Link out;
        for (const auto& [key, data] : entries) {
            FeatureData c = canonicalise(feature_kind(key.feature), data);
            if (!c.is_top) out.entries.emplace(key, std::move(c));
        }
        return out;
    }

    friend bool operator==(const Link& a, const Link& b) {
        return a.canonical().entries == b.canonical().entries;
    }
    friend bool operator!=(const Link& a, const Link& b) { return !(a == b); }
};

namespace detail {

inline std::set<LinkKey> link_keys(const Link& a, const Link& b) {
    std::set<LinkKey> keys;
    for (const auto& [k, _] : a.entries) keys.insert(k);
    for (const auto& [k, _] : b.entries) keys.insert(k);
    return keys;
}

}  // namespace detail

inline Link link_meet(const Link& l1, const Link& l2) {
    Link out;
    for (const auto& key : detail::link_keys(l1, l2)) {
        FeatureData v = meet_f(feature_kind(key.feature), l1.at(key), l2.at(key));
        if (!v.is_top) out.entries.emplace(key, std::move(v));
    }
    return out;
}

inline Link link_join(const Link& l1, const Link& l2) {
    Link out;
    for (const auto& key : detail::link_keys(l1, l2)) {
        FeatureData v = join_f(feature_kind(key.feature), l1.at(key), l2.at(key));
        if (!v.is_top) out.entries.emplace(key, std::move(v));
    }
    return out;
}

inline bool link_orthogonal(const Link& l1, const Link& l2) {
    for (const auto& key : detail::link_keys(l1, l2))
        if (feature_orthogonal(feature_kind(key.feature), l1.at(key), l2.at(key))) return true;
    return false;
}

inline bool link_subtype(const Link& l1, const Link& l2) {
    for (const auto& key : detail::link_keys(l1, l2))
        if (!feature_subtype(feature_kind(key.feature), l1.at(key), l2.at(key))) return false;
    return true;
}

// ---------------------------------------------------------------------------
// goal types
// ---------------------------------------------------------------------------

/**
 * @brief A goal type: the conclusion class, a set of pairwise-orthogonal fact
 * classes, and a link relating them. Labels every strategy-graph wire.
 */
struct GoalType {
    GoalClass concl;
    std::vector<GoalClass> facts;  // kept sorted by label
    Link link;

    const GoalClass* fact(const std::string& label) const {
        for (const auto& f : facts)
            if (f.label == label) return &f;
        return nullptr;
    }

    void sort_facts() {
        std::sort(facts.begin(), facts.end(),
                  [](const GoalClass& a, const GoalClass& b) { return a.label < b.label; });
    }

    friend bool operator==(const GoalType& a, const GoalType& b) {
        if (a.concl != b.concl || a.link != b.link) return false;
        if (a.facts.size() != b.facts.size()) return false;
        for (std::size_t i = 0; i < a.facts.size(); ++i)
            if (a.facts[i] != b.facts[i]) return false;
        return true;
    }
    friend bool operator!=(const GoalType& a, const GoalType& b) { return !(a == b); }
};

inline void validate_goal_type(const GoalType& g) {
    for (std::size_t i = 0; i < g.facts.size(); ++i)
        for (std::size_t j = i + 1; j < g.facts.size(); ++j)
            if (!class_orthogonal(g.facts[i], g.facts[j]))
                throw std::invalid_argument("fact classes " + g.facts[i].label + " and " +
                                            g.facts[j].label + " are not orthogonal");
    for (const auto& [key, _] : g.link.entries)
        for (const ClassRef* r : {&key.c1, &key.c2})
            if (!r->is_concl && g.fact(r->label) == nullptr)
                throw std::invalid_argument("link references unknown class " + r->label);
}

/// Disjunctive orthogonality: concl classes, links, or all fact pairs.
inline bool gt_orthogonal(const GoalType& g1, const GoalType& g2) {
    if (class_orthogonal(g1.concl, g2.concl)) return true;
    if (link_orthogonal(g1.link, g2.link)) return true;
    if (g1.facts.empty() || g2.facts.empty()) return true;  // vacuous all-pairs
    for (const auto& f1 : g1.facts)
        for (const auto& f2 : g2.facts)
            if (!class_orthogonal(f1, f2)) return false;
    return true;
}

/// Conjunctive subtyping with an existential reading over the fact classes.
inline bool gt_subtype(const GoalType& g1, const GoalType& g2) {
    if (!class_subtype(g1.concl, g2.concl)) return false;
    if (!link_subtype(g1.link, g2.link)) return false;
    for (const auto& f1 : g1.facts)
        for (const auto& f2 : g2.facts)
            if (class_subtype(f1, f2)) return true;
    return false;
}

// ---------------------------------------------------------------------------
// generalisation
// ---------------------------------------------------------------------------

inline GoalClass gen_class(const GoalClass& c1, const GoalClass& c2) { return class_join(c1, c2); }

inline Link gen_link(const Link& l1, const Link& l2) { return link_join(l1, l2); }

class gen_map_failure : public std::runtime_error {
public:
    explicit gen_map_failure(const std::string& msg) : std::runtime_error(msg) {}
};

/**
 * Pairwise generalisation of two fact-class sets: classes with equal
 * provenance labels are joined, unpaired classes pass through, and whenever
 * H1 <: H2 without H1 and H2 being orthogonal only H2 is retained.
 */
inline std::vector<GoalClass> gen_map(const std::vector<GoalClass>& f1,
                                      const std::vector<GoalClass>& f2) {
    auto index = [](const std::vector<GoalClass>& fs) {
        std::map<std::string, const GoalClass*> m;
        for (const auto& c : fs)
            if (!m.emplace(c.label, &c).second)
                throw gen_map_failure("ambiguous fact label " + c.label);
        return m;
    };
    auto m1 = index(f1);
    auto m2 = index(f2);
    std::vector<GoalClass> merged;
    for (const auto& [label, c1] : m1) {
        auto it = m2.find(label);
        merged.push_back(it == m2.end() ? *c1 : class_join(*c1, *it->second));
    }
    for (const auto& [label, c2] : m2)
        if (!m1.count(label)) merged.push_back(*c2);
    std::sort(merged.begin(), merged.end(),
              [](const GoalClass& a, const GoalClass& b) { return a.label < b.label; });

    std::vector<GoalClass> out;
    for (const auto& c : merged) {
        bool dropped = false;
        for (const auto& d : merged) {
            if (c.label == d.label) continue;
            if (class_subtype(c, d) && !class_orthogonal(c, d)) {
                // mutual subtypes (equal content): keep the label-smaller one
                if (class_subtype(d, c) && !(c.label > d.label)) continue;
                dropped = true;
                break;
            }
        }
        if (!dropped) out.push_back(c);
    }
    return out;
}

inline GoalType gen_goal_type(const GoalType& g1, const GoalType& g2) {
    GoalType out;
    out.concl = gen_class(g1.concl, g2.concl);
    out.facts = gen_map(g1.facts, g2.facts);
    out.link = gen_link(g1.link, g2.link);
    return out;
}

// ---------------------------------------------------------------------------
// textual form
// ---------------------------------------------------------------------------

inline std::string to_text(const Datum& d) {
    if (is_bottom_datum(d)) return "bot";
    if (const bool* b = std::get_if<bool>(&d)) return *b ? "true" : "false";
    if (const long long* n = std::get_if<long long>(&d)) return std::to_string(*n);
    if (const Position* p = std::get_if<Position>(&d)) {
        std::string s;
        for (std::size_t i = 0; i < p->size(); ++i) {
            if (i) s += ".";
            s += std::to_string((*p)[i]);
        }
        return s;
    }
    if (const std::string* s = std::get_if<std::string>(&d)) return *s;
    return "term(" + to_text(std::get<TermDatum>(d).term) + ")";
}

inline std::string to_text(const FeatureData& fd) {
    if (fd.is_top) return "top";
    if (fd.dnf.empty()) return "bot";
    std::string s = "[";
    for (std::size_t i = 0; i < fd.dnf.size(); ++i) {
        if (i) s += ",";
        s += "[";
        bool first = true;
        for (const Datum& d : fd.dnf[i]) {
            if (!first) s += ",";
            s += to_text(d);
            first = false;
        }
        s += "]";
    }
    return s + "]";
}

inline std::string to_text(const GoalClass& c) {
    GoalClass canon = c.canonical();
    std::string s = "{";
    bool first = true;
    for (const auto& [name, data] : canon.features) {
        if (!first) s += ",";
        s += name + ":" + to_text(data);
        first = false;
    }
    return s + "}";
}

inline std::string to_text(const Link& l) {
    Link canon = l.canonical();
    std::string s = "{";
    bool first = true;
    for (const auto& [key, data] : canon.entries) {
        if (!first) s += ",";
        s += key.feature + "(" + key.c1.to_text() + "," + key.c2.to_text() + "):" + to_text(data);
        first = false;
    }
    return s + "}";
}

inline std::string to_text(const GoalType& g) {
    std::string s = "gt{concl:" + to_text(g.concl) + ",facts:{";
    GoalType sorted = g;
    sorted.sort_facts();
    bool first = true;
    for (const auto& f : sorted.facts) {
        if (!first) s += ",";
        s += f.label + ":" + to_text(f);
        first = false;
    }
    s += "},link:" + to_text(g.link) + "}";
    return s;
}

// ---------------------------------------------------------------------------
// parsing of the textual form
// ---------------------------------------------------------------------------

namespace detail {

struct LatticeScanner {
    std::string_view src;
    std::size_t pos = 0;

    void skip_ws() {
        while (pos < src.size() &&
               (src[pos] == ' ' || src[pos] == '\t' || src[pos] == '\n' || src[pos] == '\r'))
            ++pos;
    }
    bool peek(std::string_view tok) {
        skip_ws();
        return src.substr(pos, tok.size()) == tok;
    }
    bool eat(std::string_view tok) {
        if (!peek(tok)) return false;
        pos += tok.size();
        return true;
    }
    void expect(std::string_view tok) {
        if (!eat(tok)) throw parse_error(std::string("expected '") + std::string(tok) + "'", pos);
    }
    std::string ident() {
        skip_ws();
        std::size_t start = pos;
        while (pos < src.size() && TermScanner::ident_char(src[pos])) ++pos;
        if (start == pos) throw parse_error("expected identifier", pos);
        return std::string(src.substr(start, pos - start));
    }
};

inline Datum parse_datum(LatticeScanner& s, FeatureKind k) {
    s.skip_ws();
    if (s.eat("bot")) return Datum(BottomDatum{});
    switch (k) {
        case FeatureKind::IsMatch: {
            if (s.eat("true")) return Datum(true);
            if (s.eat("false")) return Datum(false);
            throw parse_error("expected true/false/bot", s.pos);
        }
        case FeatureKind::SymbAtPos: {
            Position p;
            while (true) {
                std::size_t start = s.pos;
                long v = 0;
                bool any = false;
                while (s.pos < s.src.size() && s.src[s.pos] >= '0' && s.src[s.pos] <= '9') {
                    v = v * 10 + (s.src[s.pos] - '0');
                    ++s.pos;
                    any = true;
                }
                if (!any) throw parse_error("expected position index", start);
                p.push_back(static_cast<int>(v));
                if (s.pos < s.src.size() && s.src[s.pos] == '.') {
                    ++s.pos;
                    continue;
                }
                break;
            }
            return Datum(std::move(p));
        }
        case FeatureKind::TopSymbol:
        case FeatureKind::HasSymbol: {
            if (s.eat("/\\")) return sym("/\\");
            if (s.eat("\\/")) return sym("\\/");
            if (s.eat("*")) return sym("*");
            return sym(s.ident());
        }
    }
    throw parse_error("cannot parse datum", s.pos);
}

inline FeatureData parse_feature_data(LatticeScanner& s, FeatureKind k) {
    s.skip_ws();
    if (s.eat("top")) return FeatureData::top();
    if (s.peek("bot")) {
        s.eat("bot");
        return FeatureData::bottom();
    }
    s.expect("[");
    Dnf dnf;
    if (!s.eat("]")) {
        while (true) {
            s.expect("[");
            Conjunct c;
            if (!s.eat("]")) {
                while (true) {
                    c.insert(parse_datum(s, k));
                    if (s.eat(",")) continue;
                    s.expect("]");
                    break;
                }
            }
            dnf.push_back(std::move(c));
            if (s.eat(",")) continue;
            s.expect("]");
            break;
        }
    }
    return canonicalise(k, FeatureData::of(std::move(dnf)));
}

inline GoalClass parse_goal_class(LatticeScanner& s, std::string label) {
    GoalClass c;
    c.label = std::move(label);
    s.expect("{");
    if (!s.eat("}")) {
        while (true) {
            std::string name = s.ident();
            FeatureKind k = feature_kind(name);  // validates the name
            if (k != FeatureKind::TopSymbol && k != FeatureKind::HasSymbol)
                throw parse_error(name + " is not a class feature", s.pos);
            s.expect(":");
            FeatureData data = parse_feature_data(s, k);
            if (!data.is_top) c.features.emplace(name, std::move(data));
            if (s.eat(",")) continue;
            s.expect("}");
            break;
        }
    }
    return c;
}

inline ClassRef parse_class_ref(LatticeScanner& s) {
    std::string id = s.ident();
    return id == "concl" ? ClassRef::concl() : ClassRef::fact(id);
}

inline Link parse_link(LatticeScanner& s) {
    Link l;
    s.expect("{");
    if (!s.eat("}")) {
        while (true) {
            std::string name = s.ident();
            FeatureKind k = feature_kind(name);
            if (k != FeatureKind::IsMatch && k != FeatureKind::SymbAtPos)
                throw parse_error(name + " is not a link feature", s.pos);
            s.expect("(");
            ClassRef c1 = parse_class_ref(s);
            s.expect(",");
            ClassRef c2 = parse_class_ref(s);
            s.expect(")");
            s.expect(":");
            FeatureData data = parse_feature_data(s, k);
            if (!data.is_top) l.entries.emplace(LinkKey{name, c1, c2}, std::move(data));
            if (s.eat(",")) continue;
            s.expect("}");
            break;
        }
    }
    return l;
}

inline GoalType parse_goal_type(LatticeScanner& s) {
    s.expect("gt");
    s.expect("{");
    GoalType g;
    bool saw_concl = false;
    while (true) {
        std::string section = s.ident();
        s.expect(":");
        if (section == "concl") {
            g.concl = parse_goal_class(s, "concl");
            saw_concl = true;
        } else if (section == "facts") {
            s.expect("{");
            if (!s.eat("}")) {
                while (true) {
                    std::string label = s.ident();
                    s.expect(":");
                    g.facts.push_back(parse_goal_class(s, label));
                    if (s.eat(",")) continue;
                    s.expect("}");
                    break;
                }
            }
        } else if (section == "link") {
            g.link = parse_link(s);
        } else {
            throw parse_error("unknown goal-type section " + section, s.pos);
        }
        if (s.eat(",")) continue;
        s.expect("}");
        break;
    }
    if (!saw_concl) throw parse_error("goal type without concl", s.pos);
    g.sort_facts();
    validate_goal_type(g);
    return g;
}

}  // namespace detail

inline FeatureData parse_feature_data(std::string_view text, FeatureKind k) {
    detail::LatticeScanner s{text};
    FeatureData d = detail::parse_feature_data(s, k);
    s.skip_ws();
    if (s.pos != text.size()) throw parse_error("trailing input", s.pos);
    return d;
}

inline GoalClass parse_goal_class(std::string_view text, std::string label = "c") {
    detail::LatticeScanner s{text};
    GoalClass c = detail::parse_goal_class(s, std::move(label));
    s.skip_ws();
    if (s.pos != text.size()) throw parse_error("trailing input", s.pos);
    return c;
}

inline GoalType parse_goal_type(std::string_view text) {
    detail::LatticeScanner s{text};
    GoalType g = detail::parse_goal_type(s);
    s.skip_ws();
    if (s.pos != text.size()) throw parse_error("trailing input", s.pos);
    return g;
}

}  // namespace stratgen
