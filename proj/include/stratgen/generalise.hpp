#pragma once

#include <algorithm>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "stratgen/graph.hpp"

namespace stratgen {

class derive_error : public std::runtime_error {
public:
    explicit derive_error(const std::string& msg) : std::runtime_error(msg) {}
};

class pipeline_error : public std::runtime_error {
public:
    explicit pipeline_error(const std::string& msg) : std::runtime_error(msg) {}
};

class gen_failure : public std::runtime_error {
public:
    explicit gen_failure(const std::string& msg) : std::runtime_error(msg) {}
};

class layering_error : public std::runtime_error {
public:
    explicit layering_error(const std::string& msg) : std::runtime_error(msg) {}
};

// ---------------------------------------------------------------------------
// goal-type derivation
// ---------------------------------------------------------------------------

namespace detail {

inline GoalClass derive_class(const Term& t, std::string label) {
    GoalClass c;
    c.label = std::move(label);
    c.features.emplace("top_symbol", FeatureData::single(sym(top_symbol_of(t))));
    Conjunct ops;
    for (const auto& op : operator_symbols(t)) ops.insert(sym(op));
    if (!ops.empty()) c.features.emplace("has_symbol", FeatureData::of({std::move(ops)}));
    return c;
}

inline FeatureData derive_symb_at_pos(const Term& a, const Term& b) {
    auto pa = root_atom_positions(a);
    auto pb = root_atom_positions(b);
    Dnf dnf;
    for (const auto& p : pa)
        if (pb.count(p)) dnf.push_back(Conjunct{pos1(p.first)});
    if (dnf.empty()) dnf.push_back(Conjunct{Datum(BottomDatum{})});
    return canonicalise(FeatureKind::SymbAtPos, FeatureData::of(std::move(dnf)));
}

inline FeatureData derive_is_match(const Term& a, const Term& b) {
    return FeatureData::single(Datum(a == b));
}

/// Provenance labels for fact classes, assigned by canonical order of the
/// derived class content so that analogous hypotheses of different
/// conjectures land in the same class.
inline std::string fact_label(std::size_t index) {
    static const char* names[] = {"H", "P", "Q", "R", "S", "T", "U", "V", "W"};
    if (index < sizeof(names) / sizeof(names[0])) return names[index];
    return "F" + std::to_string(index + 1);
}

}  // namespace detail

/**
 * Locally-maximum goal-type derivation: the conclusion and each hypothesis
 * become a class as specific as the two implemented features allow, and the
 * conclusion-to-fact link features holding of the state are recorded
 * (fact-fact entries are not retained). Hypotheses are labelled by the
 * canonical order of their derived class content, not by their user name.
 */
inline GoalType derive_goal_type(const ProofState& ps) {
    GoalType g;
    g.concl = detail::derive_class(ps.concl, "concl");

    std::vector<std::pair<GoalClass, Term>> classed;
    for (const auto& [name, term] : ps.hyps) classed.push_back({detail::derive_class(term, ""), term});
    std::sort(classed.begin(), classed.end(), [](const auto& a, const auto& b) {
        int c = class_content_compare(a.first, b.first);
        if (c != 0) return c < 0;
        return a.second < b.second;
    });
    for (std::size_t i = 0; i < classed.size(); ++i) {
        if (i > 0 && class_content_compare(classed[i - 1].first, classed[i].first) == 0)
            throw derive_error("two hypotheses derive the identical class " +
                               to_text(classed[i].first) + "; fact classes must be orthogonal");
        classed[i].first.label = detail::fact_label(i);
    }
    for (std::size_t i = 0; i < classed.size(); ++i)
        for (std::size_t j = i + 1; j < classed.size(); ++j)
            if (!class_orthogonal(classed[i].first, classed[j].first))
                throw derive_error("derived fact classes " + classed[i].first.label + " and " +
                                   classed[j].first.label + " are not orthogonal");

    for (const auto& [cls, term] : classed) {
        g.facts.push_back(cls);
        g.link.entries.emplace(LinkKey{"symb_at_pos", ClassRef::concl(), ClassRef::fact(cls.label)},
                               detail::derive_symb_at_pos(ps.concl, term));
        g.link.entries.emplace(LinkKey{"is_match", ClassRef::concl(), ClassRef::fact(cls.label)},
                               detail::derive_is_match(ps.concl, term));
    }
    g.sort_facts();
    return g;
}

/// Label of the class each hypothesis falls into, per derive_goal_type.
inline std::map<std::string, std::string> hypothesis_class_labels(const ProofState& ps) {
    GoalType g = derive_goal_type(ps);
    std::map<std::string, std::string> out;
    for (const auto& [name, term] : ps.hyps)
        for (const GoalClass& c : g.facts)
            if (match_class(c, term)) {
                out[name] = c.label;
                break;
            }
    return out;
}

// ---------------------------------------------------------------------------
// trace to strategy graph
// ---------------------------------------------------------------------------

/**
 * Turn a complete proof trace into a low-level strategy graph of the same
 * shape: one atomic tactic node per application, every wire labelled with the
 * derived goal type of the state flowing across it, and hypothesis-naming
 * rule arguments replaced by their class. Discharge wires of rule nodes run
 * to the output boundary, vacuously labelled with the rule's input type.
 */
inline StrategyGraph trace_to_graph(const ProofTrace& trace) {
    StrategyGraph g;
    auto labels = hypothesis_class_labels(trace->state);

    auto abstract_tactic = [&](const TacticApp& t) {
        if (t.kind == TacticApp::Kind::Rule && t.arg_kind == TacticApp::ArgKind::RuleRefs) {
            std::set<std::string> classes;
            for (const auto& name : t.rule_refs) {
                auto it = labels.find(name);
                if (it == labels.end())
                    throw pipeline_error("rule argument " + name + " is not a hypothesis");
                classes.insert(it->second);
            }
            if (classes.size() != 1) throw pipeline_error("rule argument set spans several classes");
            return TacticApp::rule_class(*classes.begin());
        }
        return t;
    };

    auto walk = [&](auto&& self, const TraceNode& n) -> NodeId {
        NodeId id = g.add_atomic(abstract_tactic(n.tactic));
        if (n.children.empty()) {
            WireId w = g.add_wire(Endpoint::at(id, 0),
                                  Endpoint::boundary_out(static_cast<int>(g.outputs.size())),
                                  derive_goal_type(n.state));
            g.outputs.push_back(w);
        } else {
            for (std::size_t i = 0; i < n.children.size(); ++i) {
                NodeId child = self(self, *n.children[i]);
                g.add_wire(Endpoint::at(id, static_cast<int>(i)), Endpoint::at(child, 0),
                           derive_goal_type(n.children[i]->state));
            }
        }
        return id;
    };

    NodeId root = walk(walk, *trace);
    WireId in =
        g.add_wire(Endpoint::boundary_in(0), Endpoint::at(root, 0), derive_goal_type(trace->state));
    g.inputs.push_back(in);
    return g;
}

// ---------------------------------------------------------------------------
// tactic generalisation
// ---------------------------------------------------------------------------

/// Generalise two same-kind atomic tactics: rule-set arguments are unioned;
/// class arguments must name the same class (labels are content-canonical).
inline std::optional<TacticApp> gen_tactic(const TacticApp& t1, const TacticApp& t2) {
    if (t1.kind != t2.kind || t1.arg_kind != t2.arg_kind) return std::nullopt;
    if (t1.arg_kind == TacticApp::ArgKind::ClassRef) {
        if (t1.class_ref != t2.class_ref) return std::nullopt;
        return t1;
    }
    TacticApp out = t1;
    out.rule_refs.insert(t2.rule_refs.begin(), t2.rule_refs.end());
    return out;
}

// ---------------------------------------------------------------------------
// largest common subgraph and push-out
// ---------------------------------------------------------------------------

/// Correspondence between two subgraphs with identical tactic skeletons.
struct SegmentMatch {
    std::map<NodeId, NodeId> correspondence;

    bool empty() const { return correspondence.empty(); }
    std::size_t size() const { return correspondence.size(); }
};

namespace detail {

inline bool nodes_compatible(const StrategyNode& a, const StrategyNode& b) {
    if (a.is_atomic() != b.is_atomic()) return false;
    if (a.is_atomic()) return gen_tactic(a.atomic().tactic, b.atomic().tactic).has_value();
    return true;  // graph tactics: checked for real during the push-out
}

/// Directed wires between two nodes, as (src-port, a-is-src) pairs.
inline std::vector<std::pair<int, bool>> wires_between(const StrategyGraph& g, NodeId a, NodeId b) {
    std::vector<std::pair<int, bool>> out;
    for (const auto& [_, w] : g.wires) {
        if (w.src.kind != Endpoint::Kind::Node || w.dst.kind != Endpoint::Kind::Node) continue;
        if (w.src.node == a && w.dst.node == b) out.push_back({w.src.port, true});
        if (w.src.node == b && w.dst.node == a) out.push_back({w.src.port, false});
    }
    std::sort(out.begin(), out.end());
    return out;
}

inline bool connected_subset(const StrategyGraph& g, const std::set<NodeId>& nodes) {
    if (nodes.empty()) return false;
    std::set<NodeId> seen{*nodes.begin()};
    std::vector<NodeId> stack{*nodes.begin()};
    while (!stack.empty()) {
        NodeId n = stack.back();
        stack.pop_back();
        for (const auto& [_, w] : g.wires) {
            if (w.src.kind != Endpoint::Kind::Node || w.dst.kind != Endpoint::Kind::Node) continue;
            NodeId other = -1;
            if (w.src.node == n && nodes.count(w.dst.node)) other = w.dst.node;
            if (w.dst.node == n && nodes.count(w.src.node)) other = w.src.node;
            if (other != -1 && !seen.count(other)) {
                seen.insert(other);
                stack.push_back(other);
            }
        }
    }
    return seen.size() == nodes.size();
}

/// Reassign boundary port indices to match the order of the boundary lists.
inline void normalize_boundaries(StrategyGraph& g) {
    for (std::size_t i = 0; i < g.inputs.size(); ++i)
        g.wires.at(g.inputs[i]).src.port = static_cast<int>(i);
    for (std::size_t i = 0; i < g.outputs.size(); ++i)
        g.wires.at(g.outputs[i]).dst.port = static_cast<int>(i);
}

}  // namespace detail

/**
 * Exact maximal common connected subgraph of two graphs under tactic-skeleton
 * isomorphism: corresponding nodes must generalise via gen_tactic and the
 * wiring between mapped nodes must agree port for port. Exhaustive
 * branch-and-bound at desk scale; ties broken by the smallest lexicographic
 * node-id pairing. An empty match is allowed.
 */
inline SegmentMatch largest_common_subgraph(const StrategyGraph& g1, const StrategyGraph& g2) {
    std::vector<NodeId> n1;
    for (const auto& [id, _] : g1.nodes) n1.push_back(id);

    SegmentMatch best;
    std::vector<std::pair<NodeId, NodeId>> best_pairs;
    std::map<NodeId, NodeId> current;
    std::set<NodeId> used2;

    auto consistent = [&](NodeId u, NodeId v) {
        if (!detail::nodes_compatible(g1.nodes.at(u), g2.nodes.at(v))) return false;
        for (const auto& [u2, v2] : current)
            if (detail::wires_between(g1, u, u2) != detail::wires_between(g2, v, v2)) return false;
        return true;
    };
    auto harvest = [&]() {
        if (current.empty()) return;
        std::set<NodeId> mapped;
        for (const auto& [u, _] : current) mapped.insert(u);
        if (!detail::connected_subset(g1, mapped)) return;
        std::vector<std::pair<NodeId, NodeId>> pairs(current.begin(), current.end());
        if (current.size() > best.size() || (current.size() == best.size() && pairs < best_pairs)) {
            best.correspondence = current;
            best_pairs = pairs;
        }
    };
    auto extend = [&](auto&& self, std::size_t i) -> void {
        if (i == n1.size()) {
            harvest();
            return;
        }
        if (current.size() + (n1.size() - i) < best.size()) return;  // bound
        NodeId u = n1[i];
        for (const auto& [v, node2] : g2.nodes) {
            (void)node2;
            if (used2.count(v)) continue;
            if (!consistent(u, v)) continue;
            current.emplace(u, v);
            used2.insert(v);
            self(self, i + 1);
            current.erase(u);
            used2.erase(v);
        }
        self(self, i + 1);  // leave u unmapped
    };
    extend(extend, 0);
    return best;
}

/**
 * Push-out generalisation of two graph-tactic bodies over their largest
 * common subgraph: identified tactic nodes are replaced by their
 * generalisation, identified wires by the join of their labels; unidentified
 * parts of the second body are kept as additional branches.
 */
inline StrategyGraph pushout_gen(const StrategyGraph& b1, const StrategyGraph& b2) {
    SegmentMatch m = largest_common_subgraph(b1, b2);
    if (m.empty()) throw gen_failure("no common subgraph to push out over");

    StrategyGraph out = b1;
    for (const auto& [u, v] : m.correspondence) {
        const StrategyNode& a = b1.nodes.at(u);
        const StrategyNode& b = b2.nodes.at(v);
        if (a.is_atomic()) {
            auto gen = gen_tactic(a.atomic().tactic, b.atomic().tactic);
            if (!gen) throw gen_failure("identified tactics are not generalisable");
            out.nodes.at(u).payload = AtomicTacticNode{*gen};
        } else {
            out.nodes.at(u).payload = GraphTacticNode{
                a.graph().name, {pushout_gen(a.graph().children[0], b.graph().children[0])}};
        }
    }

    auto image = [&](NodeId u) -> std::optional<NodeId> {
        auto it = m.correspondence.find(u);
        if (it == m.correspondence.end()) return std::nullopt;
        return it->second;
    };
    auto ep_matches = [&](const Endpoint& e1, const Endpoint& e2) {
        if (e1.kind != e2.kind) return false;
        if (e1.kind == Endpoint::Kind::Node)
            return image(e1.node).has_value() && *image(e1.node) == e2.node && e1.port == e2.port;
        return e1.port == e2.port;  // same boundary index
    };
    std::set<WireId> matched2;
    for (auto& [wid, w] : out.wires) {
        const Wire& orig = b1.wires.at(wid);
        for (const auto& [wid2, w2] : b2.wires) {
            if (matched2.count(wid2)) continue;
            if (ep_matches(orig.src, w2.src) && ep_matches(orig.dst, w2.dst)) {
                matched2.insert(wid2);
                w.label = WireLabel::of(gen_goal_type(orig.label.type(), w2.label.type()));
                break;
            }
        }
    }

    // append unmatched parts of b2 as alternative branches
    std::map<NodeId, NodeId> copied;
    for (const auto& [id, node] : b2.nodes) {
        bool mapped = false;
        for (const auto& [_, v] : m.correspondence)
            if (v == id) mapped = true;
        if (mapped) continue;
        NodeId fresh = out.next_node++;
        StrategyNode n = node;
        n.id = fresh;
        out.nodes.emplace(fresh, std::move(n));
        copied.emplace(id, fresh);
    }
    for (const auto& [wid2, w2] : b2.wires) {
        if (matched2.count(wid2)) continue;
        auto carry = [&](const Endpoint& e) -> std::optional<Endpoint> {
            if (e.kind != Endpoint::Kind::Node) return e;
            auto it = copied.find(e.node);
            if (it != copied.end()) return Endpoint::at(it->second, e.port);
            for (const auto& [u, v] : m.correspondence)
                if (v == e.node) return Endpoint::at(u, e.port);
            return std::nullopt;
        };
        auto src = carry(w2.src);
        auto dst = carry(w2.dst);
        if (!src || !dst) throw gen_failure("unmatched wire references an unmapped node");
        WireId id = out.add_wire(*src, *dst, w2.label.type());
        if (src->kind == Endpoint::Kind::BoundaryIn) out.inputs.push_back(id);
        if (dst->kind == Endpoint::Kind::BoundaryOut) out.outputs.push_back(id);
    }
    detail::normalize_boundaries(out);
    return out;
}

// ---------------------------------------------------------------------------
// loop rules
// ---------------------------------------------------------------------------

namespace detail {

/// Generalised payload of two nodes of one graph, if the pair generalises.
/// With nesting allowed, a non-generalisable same-arity pair becomes a graph
/// tactic holding both originals as alternative children.
inline std::optional<StrategyNode> gen_node_payload(const StrategyGraph& g, NodeId a, NodeId b,
                                                    bool allow_nesting = false) {
    const StrategyNode& na = g.nodes.at(a);
    const StrategyNode& nb = g.nodes.at(b);
    if (na.is_atomic() && nb.is_atomic()) {
        auto t = gen_tactic(na.atomic().tactic, nb.atomic().tactic);
        if (t) return StrategyNode{0, AtomicTacticNode{*t}};
    } else if (!na.is_atomic() && !nb.is_atomic()) {
        try {
            StrategyGraph fused = pushout_gen(na.graph().children[0], nb.graph().children[0]);
            std::string name = na.graph().name;
            const std::string& other = nb.graph().name;
            // "blk1a" + "blk1b" fuse to the shared name "blk1"
            if (!name.empty() && !other.empty() && name.size() == other.size() &&
                name.substr(0, name.size() - 1) == other.substr(0, other.size() - 1))
                name = name.substr(0, name.size() - 1);
            return StrategyNode{0, GraphTacticNode{name, {std::move(fused)}}};
        } catch (const gen_failure&) {
            return std::nullopt;
        }
    }
    if (!allow_nesting) return std::nullopt;

    // nest both tactics in a fresh graph tactic that unfolds to either
    auto wrap = [&](NodeId n) {
        StrategyGraph child;
        NodeId id = child.next_node++;
        StrategyNode copy = g.nodes.at(n);
        copy.id = id;
        child.nodes.emplace(id, std::move(copy));
        GoalType in_label = g.wires_into(n)[0]->label.type();
        WireId win = child.add_wire(Endpoint::boundary_in(0), Endpoint::at(id, 0), in_label);
        child.inputs.push_back(win);
        int ports = g.out_port_count(n);
        for (int p = 0; p < ports; ++p) {
            GoalType out_label = g.wires_out_of(n, p)[0]->label.type();
            WireId wout = child.add_wire(Endpoint::at(id, p), Endpoint::boundary_out(p), out_label);
            child.outputs.push_back(wout);
        }
        return child;
    };
    if (g.out_port_count(a) != g.out_port_count(b)) return std::nullopt;
    return StrategyNode{0, GraphTacticNode{"nest", {wrap(a), wrap(b)}}};
}

struct ChainRedex {
    NodeId t1 = 0;
    NodeId t2 = 0;
    WireId chain = 0;
    int port = 0;
};

inline bool all_to_boundary(const StrategyGraph& g, NodeId n, int port) {
    for (const Wire* w : g.wires_out_of(n, port))
        if (w->dst.kind != Endpoint::Kind::BoundaryOut) return false;
    return true;
}

inline std::vector<ChainRedex> loop1_redexes(const StrategyGraph& g, bool allow_nesting) {
    std::vector<ChainRedex> out;
    for (const auto& [wid, w] : g.wires) {
        if (w.src.kind != Endpoint::Kind::Node || w.dst.kind != Endpoint::Kind::Node) continue;
        NodeId t1 = w.src.node, t2 = w.dst.node;
        if (t1 == t2) continue;
        if (g.feedback_wire(t1) || g.feedback_wire(t2)) continue;  // loop2 territory
        auto in1 = g.wires_into(t1);
        auto in2 = g.wires_into(t2);
        if (in1.size() != 1 || in2.size() != 1 || in2[0]->id != wid) continue;
        if (g.wires_out_of(t1, w.src.port).size() != 1) continue;
        int ports1 = g.out_port_count(t1);
        if (ports1 != g.out_port_count(t2)) continue;
        auto exits = g.wires_out_of(t2, w.src.port);
        if (exits.size() != 1) continue;
        bool side_ok = true;
        for (int p = 0; p < ports1 && side_ok; ++p) {
            if (p == w.src.port) continue;
            side_ok = all_to_boundary(g, t1, p) && all_to_boundary(g, t2, p) &&
                      g.wires_out_of(t1, p).size() == 1 && g.wires_out_of(t2, p).size() == 1;
        }
        if (!side_ok) continue;
        if (!gen_node_payload(g, t1, t2, allow_nesting)) continue;
        const GoalType& A = in1[0]->label.type();
        const GoalType& B = w.label.type();
        const GoalType& C = exits[0]->label.type();
        if (!gt_orthogonal(B, C)) continue;
        if (!gt_subtype(B, A)) continue;
        out.push_back(ChainRedex{t1, t2, wid, w.src.port});
    }
    std::sort(out.begin(), out.end(), [](const ChainRedex& a, const ChainRedex& b) {
        return std::tie(a.t1, a.t2) < std::tie(b.t1, b.t2);
    });
    return out;
}

inline StrategyGraph fire_loop1(const StrategyGraph& g, const ChainRedex& r, bool allow_nesting) {
    StrategyGraph out = g;
    StrategyNode fused_node = *gen_node_payload(g, r.t1, r.t2, allow_nesting);
    NodeId fused = out.next_node++;
    fused_node.id = fused;
    out.nodes.emplace(fused, std::move(fused_node));

    GoalType B = g.wires.at(r.chain).label.type();
    out.wires.at(g.wires_into(r.t1)[0]->id).dst = Endpoint::at(fused, 0);
    out.wires.at(g.wires_out_of(r.t2, r.port)[0]->id).src = Endpoint::at(fused, r.port);
    int ports = g.out_port_count(r.t1);
    for (int p = 0; p < ports; ++p) {
        if (p == r.port) continue;
        const Wire* w1 = g.wires_out_of(r.t1, p)[0];
        const Wire* w2 = g.wires_out_of(r.t2, p)[0];
        Wire& kept = out.wires.at(w1->id);
        kept.src = Endpoint::at(fused, p);
        kept.label = WireLabel::of(gen_goal_type(w1->label.type(), w2->label.type()));
        out.wires.erase(w2->id);
        out.outputs.erase(std::remove(out.outputs.begin(), out.outputs.end(), w2->id),
                          out.outputs.end());
    }
    out.wires.erase(r.chain);
    out.add_wire(Endpoint::at(fused, r.port), Endpoint::at(fused, 0), B);
    out.nodes.erase(r.t1);
    out.nodes.erase(r.t2);
    detail::normalize_boundaries(out);
    return out;
}

struct Loop2Redex {
    NodeId loop = 0;
    NodeId pred = 0;
    WireId entry = 0;
};

inline std::vector<Loop2Redex> loop2_redexes(const StrategyGraph& g, bool allow_nesting) {
    std::vector<Loop2Redex> out;
    for (const auto& [id, node] : g.nodes) {
        const Wire* fb = g.feedback_wire(id);
        if (!fb) continue;
        const Wire* entry = nullptr;
        for (const Wire* w : g.wires_into(id))
            if (!g.is_feedback(*w)) entry = w;
        if (!entry || entry->src.kind != Endpoint::Kind::Node) continue;
        NodeId pred = entry->src.node;
        if (pred == id || g.feedback_wire(pred)) continue;
        if (g.out_port_count(pred) != 1) continue;
        if (g.wires_out_of(pred, 0).size() != 1) continue;
        auto pred_in = g.wires_into(pred);
        if (pred_in.size() != 1) continue;
        if (!gen_node_payload(g, id, pred, allow_nesting)) continue;

        GoalType fused_fb = gen_goal_type(fb->label.type(), entry->label.type());
        bool ok = true;
        for (const Wire* w : g.wires_out_of(id, fb->src.port)) {
            if (g.is_feedback(*w)) continue;
            if (!gt_orthogonal(fused_fb, w->label.type())) ok = false;
        }
        if (!ok) continue;
        if (!gt_subtype(fused_fb, pred_in[0]->label.type())) continue;
        out.push_back(Loop2Redex{id, pred, entry->id});
    }
    std::sort(out.begin(), out.end(), [](const Loop2Redex& a, const Loop2Redex& b) {
        return std::tie(a.pred, a.loop) < std::tie(b.pred, b.loop);
    });
    return out;
}

inline StrategyGraph fire_loop2(const StrategyGraph& g, const Loop2Redex& r, bool allow_nesting) {
    StrategyGraph out = g;
    const Wire* fb = g.feedback_wire(r.loop);
    GoalType fused_fb = gen_goal_type(fb->label.type(), g.wires.at(r.entry).label.type());

    out.nodes.at(r.loop).payload = gen_node_payload(g, r.loop, r.pred, allow_nesting)->payload;
    out.wires.at(fb->id).label = WireLabel::of(fused_fb);
    out.wires.at(g.wires_into(r.pred)[0]->id).dst = Endpoint::at(r.loop, 0);
    out.wires.erase(r.entry);
    out.nodes.erase(r.pred);
    detail::normalize_boundaries(out);
    return out;
}

}  // namespace detail

/// All loop1 rewrites applicable to the graph, one successor per redex: a
/// chain A -t-> B -t'-> C with generalisable tactics, B orthogonal to C and
/// B a subtype of A, folds into one looped tactic.
inline std::vector<StrategyGraph> apply_loop1(const StrategyGraph& g, bool allow_nesting = false) {
    std::vector<StrategyGraph> out;
    for (const auto& r : detail::loop1_redexes(g, allow_nesting))
        out.push_back(detail::fire_loop1(g, r, allow_nesting));
    return out;
}

/// All loop2 rewrites: fold the tactic feeding a looped tactic into the loop,
/// generalising the feedback label.
inline std::vector<StrategyGraph> apply_loop2(const StrategyGraph& g, bool allow_nesting = false) {
    std::vector<StrategyGraph> out;
    for (const auto& r : detail::loop2_redexes(g, allow_nesting))
        out.push_back(detail::fire_loop2(g, r, allow_nesting));
    return out;
}

// ---------------------------------------------------------------------------
// layering
// ---------------------------------------------------------------------------

/**
 * Replace a connected segment by a graph tactic containing it. Requires the
 * segment's input wire labels to be pairwise orthogonal, and likewise its
 * output wire labels; boundary wires keep their labels.
 */
inline StrategyGraph layer(const StrategyGraph& g, const std::set<NodeId>& segment,
                           const std::string& name) {
    if (!detail::connected_subset(g, segment)) throw layering_error("segment is not connected");
    std::vector<const Wire*> incoming, outgoing, internal;
    for (const auto& [_, w] : g.wires) {
        bool src_in = w.src.kind == Endpoint::Kind::Node && segment.count(w.src.node);
        bool dst_in = w.dst.kind == Endpoint::Kind::Node && segment.count(w.dst.node);
        if (src_in && dst_in)
            internal.push_back(&w);
        else if (dst_in)
            incoming.push_back(&w);
        else if (src_in)
            outgoing.push_back(&w);
    }
    auto by_id = [](const Wire* a, const Wire* b) { return a->id < b->id; };
    std::sort(incoming.begin(), incoming.end(), by_id);
    std::sort(outgoing.begin(), outgoing.end(), by_id);
    for (std::size_t i = 0; i < incoming.size(); ++i)
        for (std::size_t j = i + 1; j < incoming.size(); ++j)
            if (!gt_orthogonal(incoming[i]->label.type(), incoming[j]->label.type()))
                throw layering_error("segment input labels are not pairwise orthogonal");
    for (std::size_t i = 0; i < outgoing.size(); ++i)
        for (std::size_t j = i + 1; j < outgoing.size(); ++j)
            if (!gt_orthogonal(outgoing[i]->label.type(), outgoing[j]->label.type()))
                throw layering_error("segment output labels are not pairwise orthogonal");

    StrategyGraph body;
    std::map<NodeId, NodeId> to_body;
    for (NodeId n : segment) {
        NodeId fresh = body.next_node++;
        StrategyNode copy = g.nodes.at(n);
        copy.id = fresh;
        body.nodes.emplace(fresh, std::move(copy));
        to_body.emplace(n, fresh);
    }
    for (std::size_t i = 0; i < incoming.size(); ++i) {
        WireId w = body.add_wire(Endpoint::boundary_in(static_cast<int>(i)),
                                 Endpoint::at(to_body.at(incoming[i]->dst.node), incoming[i]->dst.port),
                                 incoming[i]->label.type());
        body.inputs.push_back(w);
    }
    for (const Wire* w : internal)
        body.add_wire(Endpoint::at(to_body.at(w->src.node), w->src.port),
                      Endpoint::at(to_body.at(w->dst.node), w->dst.port), w->label.type());
    for (std::size_t i = 0; i < outgoing.size(); ++i) {
        WireId w = body.add_wire(Endpoint::at(to_body.at(outgoing[i]->src.node), outgoing[i]->src.port),
                                 Endpoint::boundary_out(static_cast<int>(i)),
                                 outgoing[i]->label.type());
        body.outputs.push_back(w);
    }

    StrategyGraph out = g;
    NodeId gt = out.next_node++;
    out.nodes.emplace(gt, StrategyNode{gt, GraphTacticNode{name, {std::move(body)}}});
    for (std::size_t i = 0; i < incoming.size(); ++i)
        out.wires.at(incoming[i]->id).dst = Endpoint::at(gt, 0);
    for (std::size_t i = 0; i < outgoing.size(); ++i)
        out.wires.at(outgoing[i]->id).src = Endpoint::at(gt, static_cast<int>(i));
    for (const Wire* w : internal) out.wires.erase(w->id);
    for (NodeId n : segment) out.nodes.erase(n);
    detail::normalize_boundaries(out);
    return out;
}

// ---------------------------------------------------------------------------
// repeated-segment detection
// ---------------------------------------------------------------------------

/// Two disjoint adjacent segments with identical tactic skeletons.
struct RepeatedSegments {
    std::set<NodeId> first;
    std::set<NodeId> second;
    std::map<NodeId, NodeId> correspondence;
    WireId chain = 0;  // wire from the first segment into the second

    std::size_t size() const { return correspondence.size(); }
};

namespace detail {

/// Grow isomorphic adjacent segments: seg2 is seeded at the target of the
/// candidate chain wire, seg1 at a given entry node; both grow forward in
/// lockstep until hitting the chain wire (seg1's exit), the output boundary,
/// or a mismatch.
inline std::optional<RepeatedSegments> grow_segments(const StrategyGraph& g, NodeId entry1,
                                                     const Wire& chain) {
    NodeId entry2 = chain.dst.node;
    std::map<NodeId, NodeId> corr;
    std::vector<std::pair<NodeId, NodeId>> frontier{{entry1, entry2}};
    while (!frontier.empty()) {
        auto [u, v] = frontier.back();
        frontier.pop_back();
        if (corr.count(u)) {
            if (corr.at(u) != v) return std::nullopt;
            continue;
        }
        if (u == v) return std::nullopt;
        if (!nodes_compatible(g.nodes.at(u), g.nodes.at(v))) return std::nullopt;
        int ports = g.out_port_count(u);
        if (ports != g.out_port_count(v)) return std::nullopt;
        corr.emplace(u, v);
        for (int p = 0; p < ports; ++p) {
            auto wu = g.wires_out_of(u, p);
            auto wv = g.wires_out_of(v, p);
            if (wu.size() != 1 || wv.size() != 1) return std::nullopt;
            const Wire* a = wu[0];
            const Wire* b = wv[0];
            if (a->id == chain.id) continue;  // seg1's exit; seg2's exit wire b stops growth
            bool a_out = a->dst.kind == Endpoint::Kind::BoundaryOut;
            bool b_out = b->dst.kind == Endpoint::Kind::BoundaryOut;
            if (a_out != b_out) return std::nullopt;
            if (a_out) continue;
            if (b->id == chain.id) return std::nullopt;  // segments would overlap the chain
            frontier.push_back({a->dst.node, b->dst.node});
        }
    }
    // the chain wire must actually leave seg1
    if (!corr.count(chain.src.node)) return std::nullopt;
    RepeatedSegments out;
    out.correspondence = corr;
    out.chain = chain.id;
    for (const auto& [u, v] : corr) {
        out.first.insert(u);
        out.second.insert(v);
    }
    for (NodeId n : out.first)
        if (out.second.count(n)) return std::nullopt;  // disjointness
    if (out.size() < 2) return std::nullopt;           // repeated segments of length >= 2
    return out;
}

inline std::vector<NodeId> ancestors_of(const StrategyGraph& g, NodeId n) {
    std::set<NodeId> seen{n};
    std::vector<NodeId> stack{n};
    while (!stack.empty()) {
        NodeId cur = stack.back();
        stack.pop_back();
        for (const Wire* w : g.wires_into(cur))
            if (w->src.kind == Endpoint::Kind::Node && !seen.count(w->src.node)) {
                seen.insert(w->src.node);
                stack.push_back(w->src.node);
            }
    }
    return std::vector<NodeId>(seen.begin(), seen.end());
}

}  // namespace detail

/// Largest pair of repeated adjacent segments (tactic skeletons identical,
/// length >= 2), if any; deterministic tie-breaking by wire and node ids.
inline std::optional<RepeatedSegments> find_repeated_segments(const StrategyGraph& g) {
    std::optional<RepeatedSegments> best;
    for (const auto& [wid, w] : g.wires) {
        if (w.src.kind != Endpoint::Kind::Node || w.dst.kind != Endpoint::Kind::Node) continue;
        if (g.is_feedback(w)) continue;
        for (NodeId entry1 : detail::ancestors_of(g, w.src.node)) {
            auto cand = detail::grow_segments(g, entry1, w);
            if (!cand) continue;
            if (!best || cand->size() > best->size()) best = cand;
        }
    }
    return best;
}

// ---------------------------------------------------------------------------
// the generalisation pipeline
// ---------------------------------------------------------------------------

struct PipelineOptions {
    bool nest_mismatched = false;  // gen_tactic fallback nesting, off by default
};

struct PipelineStep {
    std::string kind;  // trace | loop1 | loop2 | layer | pushout
    StrategyGraph graph;
};

struct PipelineResult {
    std::vector<PipelineStep> steps;
    bool completed = true;
    std::string error;

    const StrategyGraph& final_graph() const { return steps.back().graph; }
};

/**
 * Generalise a replayed proof trace into a strategy: lift the trace to a
 * graph, fold repeated tactic applications with loop1/loop2, layer repeated
 * adjacent segments into graph tactics and fuse them by push-out (loop1 over
 * graph tactics), repeating until no rule fires. Deterministic; on a failing
 * later stage the best graph reached so far is returned.
 */
inline PipelineResult generalise_pipeline(const ProofTrace& trace, PipelineOptions opts = {}) {
    PipelineResult res;
    res.steps.push_back({"trace", trace_to_graph(trace)});
    int layer_counter = 0;
    try {
        while (true) {
            const StrategyGraph& g = res.steps.back().graph;
            auto l1 = detail::loop1_redexes(g, opts.nest_mismatched);
            if (!l1.empty()) {
                bool graph_pair = !g.nodes.at(l1[0].t1).is_atomic();
                res.steps.push_back({graph_pair ? "pushout" : "loop1",
                                     detail::fire_loop1(g, l1[0], opts.nest_mismatched)});
                continue;
            }
            auto l2 = detail::loop2_redexes(g, opts.nest_mismatched);
            if (!l2.empty()) {
                res.steps.push_back({"loop2", detail::fire_loop2(g, l2[0], opts.nest_mismatched)});
                continue;
            }
            auto rep = find_repeated_segments(g);
            if (rep) {
                ++layer_counter;
                std::string base = "blk" + std::to_string(layer_counter);
                StrategyGraph once = layer(g, rep->first, base + "a");
                res.steps.push_back({"layer", once});
                StrategyGraph twice = layer(once, rep->second, base + "b");
                res.steps.push_back({"layer", std::move(twice)});
                continue;
            }
            break;
        }
    } catch (const std::exception& e) {
        res.completed = false;
        res.error = e.what();
    }
    return res;
}

}  // namespace stratgen
