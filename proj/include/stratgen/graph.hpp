#pragma once

#include <cassert>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "stratgen/goal.hpp"

namespace stratgen {

using NodeId = int;
using WireId = int;

/// Wire label: a concrete goal type, or a named goal-type variable as used in
/// tactic signatures and the evaluation meta-rule. Runtime graphs carry only
/// concrete labels.
struct WireLabel {
    std::optional<GoalType> concrete;
    std::string var;  // set when not concrete

    static WireLabel of(GoalType g) { return WireLabel{std::move(g), ""}; }
    static WireLabel variable(std::string name) { return WireLabel{std::nullopt, std::move(name)}; }
    bool is_concrete() const { return concrete.has_value(); }
    const GoalType& type() const {
        if (!concrete) throw std::logic_error("goal-type variable " + var + " in runtime graph");
        return *concrete;
    }
};

struct Endpoint {
    enum class Kind { Node, BoundaryIn, BoundaryOut };
    Kind kind = Kind::Node;
    NodeId node = 0;  // Kind::Node
    int port = 0;     // output port (src) / input port (dst) / boundary index

    static Endpoint at(NodeId n, int port) { return Endpoint{Kind::Node, n, port}; }
    static Endpoint boundary_in(int idx) { return Endpoint{Kind::BoundaryIn, 0, idx}; }
    static Endpoint boundary_out(int idx) { return Endpoint{Kind::BoundaryOut, 0, idx}; }

    friend bool operator==(const Endpoint& a, const Endpoint& b) {
        return a.kind == b.kind && a.node == b.node && a.port == b.port;
    }
};

struct Wire {
    WireId id = 0;
    Endpoint src;
    Endpoint dst;
    WireLabel label;
};

struct StrategyGraph;

struct AtomicTacticNode {
    TacticApp tactic;
};

/// A named node nesting one or more child graphs; evaluated in place, child
/// choice is a search branch point.
struct GraphTacticNode {
    std::string name;
    std::vector<StrategyGraph> children;
};

struct StrategyNode {
    NodeId id = 0;
    std::variant<AtomicTacticNode, GraphTacticNode> payload;

    bool is_atomic() const { return std::holds_alternative<AtomicTacticNode>(payload); }
    const AtomicTacticNode& atomic() const { return std::get<AtomicTacticNode>(payload); }
    const GraphTacticNode& graph() const { return std::get<GraphTacticNode>(payload); }
    std::string display() const {
        return is_atomic() ? atomic().tactic.to_text() : graph().name;
    }
};

/**
 * @brief Directed multigraph of tactic nodes with goal-type-labelled wires
 * and ordered boundary ports. Feedback wires (source and target on the same
 * node) realise loops; goals travelling a feedback wire re-enter the tactic.
 */
struct StrategyGraph {
    std::map<NodeId, StrategyNode> nodes;
    std::map<WireId, Wire> wires;
    std::vector<WireId> inputs;
    std::vector<WireId> outputs;
    NodeId next_node = 1;
    WireId next_wire = 1;

    NodeId add_atomic(TacticApp t) {
        NodeId id = next_node++;
        nodes.emplace(id, StrategyNode{id, AtomicTacticNode{std::move(t)}});
        return id;
    }
    NodeId add_graph_tactic(std::string name, std::vector<StrategyGraph> children) {
        NodeId id = next_node++;
        nodes.emplace(id, StrategyNode{id, GraphTacticNode{std::move(name), std::move(children)}});
        return id;
    }
    WireId add_wire(Endpoint src, Endpoint dst, GoalType label) {
        WireId id = next_wire++;
        wires.emplace(id, Wire{id, src, dst, WireLabel::of(std::move(label))});
        return id;
    }

    std::vector<const Wire*> wires_into(NodeId n) const {
        std::vector<const Wire*> out;
        for (const auto& [_, w] : wires)
            if (w.dst.kind == Endpoint::Kind::Node && w.dst.node == n) out.push_back(&w);
        return out;
    }
    std::vector<const Wire*> wires_out_of(NodeId n, int port) const {
        std::vector<const Wire*> out;
        for (const auto& [_, w] : wires)
            if (w.src.kind == Endpoint::Kind::Node && w.src.node == n && w.src.port == port)
                out.push_back(&w);
        return out;
    }
    std::vector<const Wire*> wires_out_of(NodeId n) const {
        std::vector<const Wire*> out;
        for (const auto& [_, w] : wires)
            if (w.src.kind == Endpoint::Kind::Node && w.src.node == n) out.push_back(&w);
        return out;
    }
    int out_port_count(NodeId n) const {
        int count = 0;
        for (const auto& [_, w] : wires)
            if (w.src.kind == Endpoint::Kind::Node && w.src.node == n)
                count = std::max(count, w.src.port + 1);
        return count;
    }
    bool is_feedback(const Wire& w) const {
        return w.src.kind == Endpoint::Kind::Node && w.dst.kind == Endpoint::Kind::Node &&
               w.src.node == w.dst.node;
    }
    /// Self-feedback wire of a node, if any.
    const Wire* feedback_wire(NodeId n) const {
        for (const auto& [_, w] : wires)
            if (is_feedback(w) && w.src.node == n) return &w;
        return nullptr;
    }
};

// ---------------------------------------------------------------------------
// typed tactic signatures

/// Number of output ports a tactic application exposes: a subst over a set
/// containing a conditional equation has two (condition wire first), anything
/// else has one. The rule output carries only discharge-empty lists.
inline int tactic_output_arity(const TacticApp& t, const std::map<std::string, Equation>& axioms) {
    if (t.kind == TacticApp::Kind::Rule) return 1;
    for (const auto& name : t.rule_refs) {
        auto it = axioms.find(name);
        if (it != axioms.end() && it->second.conditional()) return 2;
    }
    return 1;
}

/// Signature of a tactic node read off its incident wires.
inline std::pair<GoalType, std::vector<GoalType>> tactic_signature(const StrategyGraph& g, NodeId n,
                                                                   const std::map<std::string, Equation>& axioms) {
    auto ins = g.wires_into(n);
    if (ins.empty()) throw std::logic_error("tactic node without input wire");
    GoalType alpha = ins[0]->label.type();
    for (std::size_t i = 1; i < ins.size(); ++i)
        alpha = gen_goal_type(alpha, ins[i]->label.type());  // merged entry/feedback label
    const StrategyNode& node = g.nodes.at(n);
    int arity = node.is_atomic() ? tactic_output_arity(node.atomic().tactic, axioms)
                                 : static_cast<int>(node.graph().children[0].outputs.size());
    std::vector<GoalType> betas;
    for (int p = 0; p < arity; ++p) {
        auto outs = g.wires_out_of(n, p);
        if (outs.empty()) throw std::logic_error("tactic output port " + std::to_string(p) +
                                                 " of node " + std::to_string(n) + " unwired");
        GoalType beta = outs[0]->label.type();
        for (std::size_t i = 1; i < outs.size(); ++i)
            beta = gen_goal_type(beta, outs[i]->label.type());
        betas.push_back(std::move(beta));
    }
    return {alpha, betas};
}

// ---------------------------------------------------------------------------
// lifting a tactic to goal level

/// One lifted alternative: the produced goals, partitioned per output port.
using LiftedAlternative = std::vector<std::vector<Goal>>;

/**
 * Lift an atomic tactic to  alpha -> { [beta_1] x ... x [beta_n] }  and apply
 * it to a goal: if the goal has type alpha, run the underlying tactic
 * (resolving class arguments against the goal's fact map) and emit every
 * partition of each resulting state list in which each state lifts into
 * exactly one output whose type it satisfies. Empty result = inapplicable.
 */
inline std::vector<LiftedAlternative> lift_tactic(const TacticApp& t, const GoalType& alpha,
                                                  const std::vector<GoalType>& betas, const Goal& g,
                                                  const std::map<std::string, Equation>& axioms) {
    std::vector<LiftedAlternative> result;
    if (!goal_has_type(g, alpha)) return result;

    std::vector<std::vector<ProofState>> alts;
    if (t.kind == TacticApp::Kind::Subst) {
        std::vector<Equation> eqs;
        for (const auto& name : t.rule_refs) {
            auto it = axioms.find(name);
            if (it == axioms.end()) throw std::invalid_argument("undeclared axiom " + name);
            eqs.push_back(it->second);
        }
        alts = apply_subst(eqs, g.ps);
    } else {
        std::set<Term> candidates;
        if (t.arg_kind == TacticApp::ArgKind::ClassRef) {
            auto it = g.fmap.find(t.class_ref);
            if (it != g.fmap.end()) candidates = it->second;
        } else {
            for (const auto& name : t.rule_refs) {
                auto it = g.ps.hyps.find(name);
                if (it != g.ps.hyps.end()) candidates.insert(it->second);
            }
        }
        alts = apply_rule(candidates, g.ps);
    }

    auto parent = std::make_shared<const Goal>(g);
    for (const auto& states : alts) {
        // candidate lifted goals per (state, output port)
        std::vector<std::vector<std::optional<Goal>>> lifted(states.size());
        for (std::size_t s = 0; s < states.size(); ++s) {
            lifted[s].resize(betas.size());
            for (std::size_t b = 0; b < betas.size(); ++b)
                lifted[s][b] = lift_one(states[s], parent, betas[b]);
        }
        // enumerate assignments state -> port, lexicographic in port indices
        std::vector<std::size_t> choice(states.size(), 0);
        auto emit = [&](auto&& self, std::size_t s) -> void {
            if (s == states.size()) {
                LiftedAlternative part(betas.size());
                for (std::size_t i = 0; i < states.size(); ++i)
                    part[choice[i]].push_back(*lifted[i][choice[i]]);
                result.push_back(std::move(part));
                return;
            }
            for (std::size_t b = 0; b < betas.size(); ++b) {
                if (!lifted[s][b]) continue;
                choice[s] = b;
                self(self, s + 1);
            }
        };
        emit(emit, 0);
    }
    return result;
}

// ---------------------------------------------------------------------------
// evaluation

struct TranscriptEntry {
    std::string tactic;
    ProofState consumed;
    std::vector<ProofState> produced;
};

struct EvalResult {
    enum class Status { Proved, Open, Stuck };
    Status status = Status::Stuck;
    std::vector<Goal> open_goals;
    std::vector<TranscriptEntry> transcript;
    int steps = 0;
};

class budget_exhausted : public std::runtime_error {
public:
    explicit budget_exhausted(int budget)
        : std::runtime_error("evaluation budget of " + std::to_string(budget) + " steps exhausted") {}
};

class boundary_lift_error : public std::runtime_error {
public:
    explicit boundary_lift_error(const std::string& msg) : std::runtime_error(msg) {}
};

struct EvalOptions {
    int budget = 10000;
};

/// Runtime state: goals resting on wires of one graph. A wire holds an
/// ordered queue of goals; empty output lists are dropped eagerly, which is
/// the engine's fused form of the delete-empty-node structural rule.
struct EvalState {
    const StrategyGraph* graph = nullptr;
    std::map<WireId, std::vector<Goal>> goals;
    std::vector<TranscriptEntry> transcript;
};

namespace detail {

struct EvalCtx {
    const std::map<std::string, Equation>* axioms;
    int budget = 10000;
    int steps = 0;
    bool saw_stuck = false;
    std::optional<EvalState> first_open;
    std::optional<EvalState> proved;

    void tick() {
        if (++steps > budget) throw budget_exhausted(budget);
    }
};

/// Wire carrying a pending goal headed into a tactic node, smallest id first.
inline const Wire* select_pending(const EvalState& st) {
    for (const auto& [wid, gs] : st.goals) {
        if (gs.empty()) continue;
        const Wire& w = st.graph->wires.at(wid);
        if (w.dst.kind == Endpoint::Kind::Node) return &w;
    }
    return nullptr;
}

inline bool no_goals(const EvalState& st) {
    for (const auto& [_, gs] : st.goals)
        if (!gs.empty()) return false;
    return true;
}

/// Route one goal leaving an output port: feedback wires are type-tested
/// first, then the remaining wires in id order. Returns the chosen wire or
/// null when no label accepts the goal.
inline const Wire* route(const StrategyGraph& g, NodeId node, int port, const Goal& goal) {
    auto outs = g.wires_out_of(node, port);
    std::sort(outs.begin(), outs.end(), [&](const Wire* a, const Wire* b) {
        bool fa = g.is_feedback(*a), fb = g.is_feedback(*b);
        if (fa != fb) return fa;
        return a->id < b->id;
    });
    for (const Wire* w : outs)
        if (goal_has_type(goal, w->label.type())) return w;
    return nullptr;
}

/// Enumerate the successor states of applying the node at the head of the
/// pending queue to its first goal. One successor per lifted alternative (or
/// per child-graph outcome for graph tactics).
inline std::vector<EvalState> successors(const EvalState& st, EvalCtx& ctx) {
    std::vector<EvalState> result;
    const Wire* pending = select_pending(st);
    if (!pending) return result;
    const StrategyGraph& g = *st.graph;
    const StrategyNode& node = g.nodes.at(pending->dst.node);
    Goal goal = st.goals.at(pending->id).front();

    auto [alpha, betas] = tactic_signature(g, node.id, *ctx.axioms);

    std::vector<std::pair<LiftedAlternative, std::vector<TranscriptEntry>>> alternatives;
    if (node.is_atomic()) {
        for (auto& alt : lift_tactic(node.atomic().tactic, alpha, betas, goal, *ctx.axioms)) {
            std::vector<ProofState> produced;
            for (const auto& lst : alt)
                for (const Goal& out : lst) produced.push_back(out.ps);
            alternatives.push_back(
                {std::move(alt), {TranscriptEntry{node.atomic().tactic.to_text(), goal.ps, produced}}});
        }
    } else {
        // in-place evaluation of a graph tactic: each child graph is an
        // alternative; each complete inner run yields one successor
        if (!goal_has_type(goal, alpha)) return result;
        for (const StrategyGraph& child : node.graph().children) {
            if (child.inputs.size() != 1)
                throw std::logic_error("graph-tactic child must have one input");
            EvalState inner;
            inner.graph = &child;
            inner.goals[child.inputs[0]].push_back(goal);
            // collect all terminal inner outcomes
            std::vector<EvalState> terminals;
            std::function<void(EvalState)> run = [&](EvalState is) {
                ctx.tick();
                const Wire* p = select_pending(is);
                if (!p) {
                    terminals.push_back(std::move(is));
                    return;
                }
                for (auto& nxt : successors(is, ctx)) run(std::move(nxt));
            };
            run(std::move(inner));
            for (EvalState& term : terminals) {
                LiftedAlternative per_port(child.outputs.size());
                for (std::size_t p = 0; p < child.outputs.size(); ++p) {
                    auto it = term.goals.find(child.outputs[p]);
                    if (it != term.goals.end()) per_port[p] = it->second;
                }
                alternatives.push_back({std::move(per_port), std::move(term.transcript)});
            }
        }
    }

    for (auto& [alt, entries] : alternatives) {
        EvalState next = st;
        auto& queue = next.goals.at(pending->id);
        queue.erase(queue.begin());  // consume exactly one goal
        bool ok = true;
        std::size_t produced = 0;
        for (std::size_t port = 0; port < alt.size() && ok; ++port) {
            for (Goal& out : alt[port]) {
                const Wire* target = route(g, node.id, static_cast<int>(port), out);
                if (!target) {
                    ok = false;
                    break;
                }
                next.goals[target->id].push_back(std::move(out));
                ++produced;
            }
        }
        if (!ok) continue;
        (void)produced;  // conservation: one consumed, `produced` routed onward
        for (auto& e : entries) next.transcript.push_back(std::move(e));
        result.push_back(std::move(next));
    }
    return result;
}

inline bool eval_dfs(EvalState st, EvalCtx& ctx) {
    ctx.tick();
    const Wire* pending = select_pending(st);
    if (!pending) {
        if (no_goals(st)) {
            ctx.proved = std::move(st);
            return true;
        }
        if (!ctx.first_open) ctx.first_open = std::move(st);
        return false;
    }
    auto succ = successors(st, ctx);
    if (succ.empty()) {
        ctx.saw_stuck = true;
        return false;
    }
    for (auto& s : succ)
        if (eval_dfs(std::move(s), ctx)) return true;
    return false;
}

}  // namespace detail

/// Single evaluation step: all successor states of firing the first pending
/// goal node into its tactic. Empty when the selected goal is stuck.
inline std::vector<EvalState> eval_step(const EvalState& st,
                                        const std::map<std::string, Equation>& axioms,
                                        int budget = 10000) {
    detail::EvalCtx ctx;
    ctx.axioms = &axioms;
    ctx.budget = budget;
    return detail::successors(st, ctx);
}

/**
 * Depth-first evaluation of a strategy graph on an initial goal: propagate
 * goals from the input boundary towards the outputs, backtracking over
 * tactic alternatives and graph-tactic children. Terminates with Proved when
 * every goal is discharged, Open when goals rest on the output boundary, and
 * Stuck otherwise. Search is bounded by a step budget.
 */
inline EvalResult evaluate(const StrategyGraph& g, const Goal& initial,
                           const std::map<std::string, Equation>& axioms, EvalOptions opts = {}) {
    if (g.inputs.size() != 1) throw std::invalid_argument("strategy must have exactly one input wire");
    const Wire& in = g.wires.at(g.inputs[0]);
    if (!goal_has_type(initial, in.label.type()))
        throw boundary_lift_error("initial goal does not lift against the strategy input label");

    detail::EvalCtx ctx;
    ctx.axioms = &axioms;
    ctx.budget = opts.budget;
    EvalState st;
    st.graph = &g;
    st.goals[in.id].push_back(initial);
    detail::eval_dfs(std::move(st), ctx);

    EvalResult res;
    res.steps = ctx.steps;
    if (ctx.proved) {
        res.status = EvalResult::Status::Proved;
        res.transcript = std::move(ctx.proved->transcript);
    } else if (ctx.first_open) {
        res.status = EvalResult::Status::Open;
        res.transcript = std::move(ctx.first_open->transcript);
        for (const auto& [wid, gs] : ctx.first_open->goals)
            for (const Goal& goal : gs) res.open_goals.push_back(goal);
    } else {
        res.status = EvalResult::Status::Stuck;
    }
    return res;
}

// ---------------------------------------------------------------------------
// DOT export

namespace detail {

inline std::string dot_escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        if (c == '"' || c == '\\') out += '\\';
        out += c;
    }
    return out;
}

/// Short, stable digest of a goal type for edge labels.
inline std::string abbrev_label(const GoalType& gt) {
    std::string s = "c:" + to_text(gt.concl.at("top_symbol"));
    for (const auto& [key, data] : gt.link.canonical().entries) {
        if (!key.c1.is_concl) continue;
        s += " " + key.feature.substr(0, key.feature.find('_')) + "(" + key.c2.to_text() +
             ")=" + to_text(data);
    }
    return s;
}

}  // namespace detail

/// Deterministic DOT rendering; feedback edges are dashed.
inline std::string to_dot(const StrategyGraph& g, const std::string& name = "strategy") {
    std::ostringstream os;
    os << "digraph \"" << detail::dot_escape(name) << "\" {\n";
    os << "  rankdir=TB;\n";
    for (std::size_t i = 0; i < g.inputs.size(); ++i)
        os << "  in" << i << " [shape=point,label=\"\"];\n";
    for (std::size_t i = 0; i < g.outputs.size(); ++i)
        os << "  out" << i << " [shape=point,label=\"\"];\n";
    for (const auto& [id, node] : g.nodes) {
        if (node.is_atomic()) {
            os << "  n" << id << " [shape=box,label=\"" << detail::dot_escape(node.display())
               << "\"];\n";
        } else {
            os << "  n" << id << " [shape=box,peripheries=2,label=\""
               << detail::dot_escape(node.display()) << "\"];\n";
        }
    }
    auto endpoint_name = [&](const Endpoint& e, bool as_dst) -> std::string {
        switch (e.kind) {
            case Endpoint::Kind::Node: return "n" + std::to_string(e.node);
            case Endpoint::Kind::BoundaryIn: return "in" + std::to_string(e.port);
            case Endpoint::Kind::BoundaryOut: return "out" + std::to_string(e.port);
        }
        (void)as_dst;
        return "?";
    };
    for (const auto& [id, w] : g.wires) {
        os << "  " << endpoint_name(w.src, false) << " -> " << endpoint_name(w.dst, true);
        os << " [label=\""
           << detail::dot_escape(w.label.is_concrete() ? detail::abbrev_label(w.label.type())
                                                       : w.label.var)
           << "\"";
        if (g.is_feedback(w)) os << ",style=dashed,constraint=false";
        os << "];\n";
    }
    os << "}\n";
    return os.str();
}

}  // namespace stratgen
