#pragma once

#include <deque>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "stratgen/term.hpp"

namespace stratgen {

/**
 * @brief A named, optionally conditional rewrite equation, applied left to right.
 *
 * Invariant: metavariables of rhs and of the condition are a subset of the
 * metavariables of lhs, so any match of lhs grounds the whole equation.
 */
struct Equation {
    std::string name;
    std::optional<Term> condition;
    Term lhs;
    Term rhs;

    bool conditional() const { return condition.has_value(); }
};

inline std::set<std::string> metavars(const Term& t) {
    std::set<std::string> out;
    auto walk = [&](auto&& self, const Term& u) -> void {
        if (u.is_atom()) {
            if (u.is_metavar()) out.insert(u.name());
            return;
        }
        for (const Term& a : u.args()) self(self, a);
    };
    walk(walk, t);
    return out;
}

inline void validate_equation(const Equation& eq) {
    auto lhs_vars = metavars(eq.lhs);
    auto check = [&](const Term& t, const char* what) {
        for (const auto& v : metavars(t))
            if (!lhs_vars.count(v))
                throw std::invalid_argument(std::string("equation ") + eq.name + ": metavariable " +
                                            v + " of " + what + " not bound by lhs");
    };
    check(eq.rhs, "rhs");
    if (eq.condition) check(*eq.condition, "condition");
}

/// Named hypotheses plus the open conclusion.
struct ProofState {
    std::map<std::string, Term> hyps;
    Term concl;

    friend bool operator==(const ProofState& a, const ProofState& b) {
        return a.concl == b.concl && a.hyps == b.hyps;
    }
    friend bool operator!=(const ProofState& a, const ProofState& b) { return !(a == b); }
};

/// Tactic argument: either a set of rule/hypothesis names or a goal-class label.
struct TacticApp {
    enum class Kind { Subst, Rule };
    enum class ArgKind { RuleRefs, ClassRef };

    Kind kind = Kind::Subst;
    ArgKind arg_kind = ArgKind::RuleRefs;
    std::set<std::string> rule_refs;  // equation names (subst) or hypothesis names (rule)
    std::string class_ref;            // goal-class label (rule only)

    static TacticApp subst(std::set<std::string> eqs) {
        TacticApp t;
        t.kind = Kind::Subst;
        t.arg_kind = ArgKind::RuleRefs;
        t.rule_refs = std::move(eqs);
        return t;
    }
    static TacticApp rule(std::set<std::string> hyps) {
        TacticApp t;
        t.kind = Kind::Rule;
        t.arg_kind = ArgKind::RuleRefs;
        t.rule_refs = std::move(hyps);
        return t;
    }
    static TacticApp rule_class(std::string label) {
        TacticApp t;
        t.kind = Kind::Rule;
        t.arg_kind = ArgKind::ClassRef;
        t.class_ref = std::move(label);
        return t;
    }

    friend bool operator==(const TacticApp& a, const TacticApp& b) {
        return a.kind == b.kind && a.arg_kind == b.arg_kind && a.rule_refs == b.rule_refs &&
               a.class_ref == b.class_ref;
    }
    friend bool operator<(const TacticApp& a, const TacticApp& b) {
        return std::tie(a.kind, a.arg_kind, a.rule_refs, a.class_ref) <
               std::tie(b.kind, b.arg_kind, b.rule_refs, b.class_ref);
    }

    std::string to_text() const {
        std::string s;
        if (kind == Kind::Subst) {
            s = "subst {";
            bool first = true;
            for (const auto& r : rule_refs) {
                if (!first) s += ",";
                s += r;
                first = false;
            }
            s += "}";
        } else if (arg_kind == ArgKind::ClassRef) {
            s = "rule class " + class_ref;
        } else {
            s = "rule";
            if (rule_refs.size() == 1) {
                s += " " + *rule_refs.begin();
            } else {
                s += " {";
                bool first = true;
                for (const auto& r : rule_refs) {
                    if (!first) s += ",";
                    s += r;
                    first = false;
                }
                s += "}";
            }
        }
        return s;
    }
};

// ---------------------------------------------------------------------------
// atomic tactics
//
// Both tactics have the type  proof state -> { [proof state] }:  a set of
// alternatives, each alternative an ordered list of child states.

/**
 * Rewrite the conclusion left-to-right with any of the given equations, at any
 * position. One alternative per (position, equation) pair that matches;
 * positions are enumerated innermost-first (post-order), so deeper redexes come
 * first in the result. For a conditional equation the alternative is
 * [condition state, rewritten state]; otherwise the singleton [rewritten state].
 * Hypotheses carry over unchanged. Empty result signals tactic failure.
 */
inline std::vector<std::vector<ProofState>> apply_subst(const std::vector<Equation>& eqs,
                                                        const ProofState& ps) {
    std::vector<std::vector<ProofState>> out;
    std::set<std::vector<Term>> seen;
    for (const Position& p : positions_postorder(ps.concl)) {
        Term sub = subterm_at(ps.concl, p);
        for (const Equation& eq : eqs) {
            auto sigma = match_term(eq.lhs, sub);
            if (!sigma) continue;
            std::vector<ProofState> alt;
            if (eq.condition)
                alt.push_back(ProofState{ps.hyps, apply_substitution(*sigma, *eq.condition)});
            alt.push_back(ProofState{ps.hyps, replace_at(ps.concl, p, apply_substitution(*sigma, eq.rhs))});
            std::vector<Term> key;
            for (const auto& s : alt) key.push_back(s.concl);
            if (seen.insert(std::move(key)).second) out.push_back(std::move(alt));
        }
    }
    return out;
}

/// Discharge the goal iff some candidate term equals the conclusion exactly.
/// Returns {[]} (one empty alternative) on success, {} on failure.
inline std::vector<std::vector<ProofState>> apply_rule(const std::set<Term>& candidates,
                                                       const ProofState& ps) {
    if (candidates.count(ps.concl)) return {{}};
    return {};
}

// ---------------------------------------------------------------------------
// proof traces and script replay

/**
 * @brief Tree of tactic applications; children of a node are one element of
 * the set returned by applying its tactic to its state.
 */
struct TraceNode {
    ProofState state;
    TacticApp tactic;
    std::vector<std::shared_ptr<TraceNode>> children;
};

using ProofTrace = std::shared_ptr<TraceNode>;

class replay_failure : public std::runtime_error {
public:
    replay_failure(std::size_t deepest_step, const std::string& msg)
        : std::runtime_error(msg), deepest_step_(deepest_step) {}
    /// Index (0-based) of the deepest script entry some branch reached.
    std::size_t deepest_step() const { return deepest_step_; }

private:
    std::size_t deepest_step_;
};

namespace detail {

struct ReplayCtx {
    const std::map<std::string, Equation>* axioms;
    const std::map<std::string, Term>* hyps;
    const std::vector<TacticApp>* script;
    std::size_t deepest = 0;
};

inline std::vector<std::vector<ProofState>> run_tactic(const ReplayCtx& ctx, const TacticApp& t,
                                                       const ProofState& ps) {
    if (t.kind == TacticApp::Kind::Subst) {
        std::vector<Equation> eqs;
        for (const auto& name : t.rule_refs) {
            auto it = ctx.axioms->find(name);
            if (it == ctx.axioms->end())
                throw std::invalid_argument("subst references undeclared axiom " + name);
            eqs.push_back(it->second);
        }
        return apply_subst(eqs, ps);
    }
    // rule: candidates are the named hypotheses; names that do not resolve
    // contribute nothing, so the tactic simply fails on them.
    std::set<Term> candidates;
    for (const auto& name : t.rule_refs) {
        auto it = ps.hyps.find(name);
        if (it != ps.hyps.end()) candidates.insert(it->second);
    }
    return apply_rule(candidates, ps);
}

struct PendingGoal {
    ProofState state;
    std::shared_ptr<TraceNode> node;  // trace slot, tactic filled on application
};

inline bool replay_go(ReplayCtx& ctx, std::deque<PendingGoal> queue, std::size_t step) {
    if (step == ctx.script->size()) {
        if (!queue.empty()) return false;
        return true;
    }
    ctx.deepest = std::max(ctx.deepest, step);
    if (queue.empty()) return false;  // script left over with nothing to prove
    PendingGoal g = queue.front();
    queue.pop_front();
    const TacticApp& tac = (*ctx.script)[step];
    auto alts = run_tactic(ctx, tac, g.state);
    for (const auto& alt : alts) {
        g.node->tactic = tac;
        g.node->children.clear();
        std::deque<PendingGoal> next = queue;
        for (auto it = alt.rbegin(); it != alt.rend(); ++it) {
            auto child = std::make_shared<TraceNode>();
            child->state = *it;
            next.push_front(PendingGoal{*it, child});
        }
        // children in alternative order (condition first)
        for (std::size_t i = 0; i < alt.size(); ++i) g.node->children.push_back(next[i].node);
        if (replay_go(ctx, std::move(next), step + 1)) return true;
        g.node->children.clear();
    }
    return false;
}

}  // namespace detail

/**
 * Replay a tactic script against a conjecture by depth-first backtracking over
 * the set-valued tactic results, applying script entries in order to the
 * leftmost goal of the frontier. Succeeds iff some branch discharges all goals
 * consuming the whole script; returns the successful trace.
 */
inline ProofTrace replay_script(const std::map<std::string, Equation>& axioms,
                                const std::map<std::string, Term>& hyps, const Term& conclusion,
                                const std::vector<TacticApp>& script) {
    detail::ReplayCtx ctx;
    ctx.axioms = &axioms;
    ctx.hyps = &hyps;
    ctx.script = &script;
    auto root = std::make_shared<TraceNode>();
    root->state = ProofState{hyps, conclusion};
    std::deque<detail::PendingGoal> queue;
    queue.push_back(detail::PendingGoal{root->state, root});
    if (!detail::replay_go(ctx, std::move(queue), 0))
        throw replay_failure(ctx.deepest, "replay failed; deepest failing step " +
                                              std::to_string(ctx.deepest + 1) + " of " +
                                              std::to_string(script.size()));
    return root;
}

/// Tactic applications of a trace in application (frontier) order.
inline std::vector<const TraceNode*> trace_nodes_preorder(const ProofTrace& trace) {
    std::vector<const TraceNode*> out;
    std::deque<const TraceNode*> queue{trace.get()};
    while (!queue.empty()) {
        const TraceNode* n = queue.front();
        queue.pop_front();
        out.push_back(n);
        for (auto it = n->children.rbegin(); it != n->children.rend(); ++it)
            queue.push_front(it->get());
    }
    return out;
}

}  // namespace stratgen
