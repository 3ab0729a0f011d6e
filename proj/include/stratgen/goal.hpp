#pragma once

#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "stratgen/kernel.hpp"
#include "stratgen/lattice.hpp"

namespace stratgen {

/**
 * @brief A goal: a proof state paired with a class-indexed fact map and a
 * parent pointer (empty for the first goal). The runtime instance of a goal
 * type.
 */
struct Goal {
    std::map<std::string, std::set<Term>> fmap;
    ProofState ps;
    std::shared_ptr<const Goal> parent;  // null = first goal
};

namespace detail {

inline std::set<Term> resolve_class_ref(const ClassRef& ref, const Goal& g) {
    if (ref.is_concl) return {g.ps.concl};
    auto it = g.fmap.find(ref.label);
    return it == g.fmap.end() ? std::set<Term>{} : it->second;
}

inline bool link_entry_holds(const LinkKey& key, const FeatureData& data, const std::set<Term>& s1,
                             const std::set<Term>& s2) {
    if (s1.empty() || s2.empty()) return false;
    bool any = false;
    for (const Term& e1 : s1) {
        bool found = false;
        for (const Term& e2 : s2)
            if (match_link_feature(key.feature, data, e1, e2)) {
                found = true;
                any = true;
                break;
            }
        if (!found) return false;  // every e1 needs a partner
    }
    for (const Term& e2 : s2) {
        bool found = false;
        for (const Term& e1 : s1)
            if (match_link_feature(key.feature, data, e1, e2)) {
                found = true;
                break;
            }
        if (!found) return false;  // and dually
    }
    return any;
}

}  // namespace detail

/// A goal g has type G iff the conclusion matches G's concl class, every fact
/// class has a non-empty fmap entry of matching facts, and every link entry is
/// witnessed with every element partnered on both sides.
inline bool goal_has_type(const Goal& g, const GoalType& G) {
    if (!match_class(G.concl, g.ps.concl)) return false;
    for (const GoalClass& c : G.facts) {
        auto it = g.fmap.find(c.label);
        if (it == g.fmap.end() || it->second.empty()) return false;
        for (const Term& f : it->second)
            if (!match_class(c, f)) return false;
    }
    for (const auto& [key, data] : G.link.entries) {
        auto s1 = detail::resolve_class_ref(key.c1, g);
        auto s2 = detail::resolve_class_ref(key.c2, g);
        if (!detail::link_entry_holds(key, data, s1, s2)) return false;
    }
    return true;
}

/// Which of the three lifting steps failed.
enum class LiftFailure { None, Conclusion, FactClass, Link };

/**
 * Lift a new proof state into a goal of type G below parent g:
 *   1. set parent and state, fail if the conclusion does not match G(concl);
 *   2. populate each fact class with the carried and newly generated facts
 *      that match it, fail on an empty entry;
 *   3. filter each link-used fact class down to the elements captured by a
 *      link match, fail if a link has no witnessing pair or an entry drains.
 */
inline std::optional<Goal> lift_one(const ProofState& ps, const std::shared_ptr<const Goal>& g,
                                    const GoalType& G, const std::set<Term>& new_facts = {},
                                    LiftFailure* failure = nullptr) {
    auto fail = [&](LiftFailure f) {
        if (failure) *failure = f;
        return std::nullopt;
    };
    if (failure) *failure = LiftFailure::None;

    if (!match_class(G.concl, ps.concl)) return fail(LiftFailure::Conclusion);

    Goal out;
    out.ps = ps;
    out.parent = g;

    std::set<Term> pool = new_facts;
    if (g)
        for (const auto& [_, facts] : g->fmap) pool.insert(facts.begin(), facts.end());
    for (const GoalClass& c : G.facts) {
        std::set<Term> entry;
        for (const Term& f : pool)
            if (match_class(c, f)) entry.insert(f);
        if (entry.empty()) return fail(LiftFailure::FactClass);
        out.fmap.emplace(c.label, std::move(entry));
    }

    // link filtering: keep only elements captured by some link match, taking
    // each entry against the unfiltered step-2 sets
    std::map<std::string, std::set<Term>> kept = out.fmap;
    for (const auto& [key, data] : G.link.entries) {
        auto s1 = detail::resolve_class_ref(key.c1, out);
        auto s2 = detail::resolve_class_ref(key.c2, out);
        if (s1.empty() || s2.empty()) return fail(LiftFailure::Link);
        std::set<Term> captured1, captured2;
        for (const Term& e1 : s1)
            for (const Term& e2 : s2)
                if (match_link_feature(key.feature, data, e1, e2)) {
                    captured1.insert(e1);
                    captured2.insert(e2);
                }
        if (captured1.empty()) return fail(LiftFailure::Link);
        if (!key.c1.is_concl) {
            auto& ks = kept[key.c1.label];
            std::set<Term> next;
            for (const Term& e : ks)
                if (captured1.count(e)) next.insert(e);
            ks = std::move(next);
        }
        if (!key.c2.is_concl) {
            auto& ks = kept[key.c2.label];
            std::set<Term> next;
            for (const Term& e : ks)
                if (captured2.count(e)) next.insert(e);
            ks = std::move(next);
        }
    }
    for (const auto& [label, facts] : kept)
        if (facts.empty()) return fail(LiftFailure::Link);
    out.fmap = std::move(kept);
    return out;
}

/// Naive unlifting: project the underlying proof state.
inline ProofState unlift(const Goal& g) { return g.ps; }

}  // namespace stratgen
