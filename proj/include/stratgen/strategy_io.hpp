#pragma once

#include <sstream>
#include <string>

#include "stratgen/graph.hpp"
#include "stratgen/theory.hpp"

namespace stratgen {

// ---------------------------------------------------------------------------
// printing
//
//   strategy {
//     node n1 kind=atomic tactic="subst {ax1}"
//     node n2 kind=graph name="blk1" { ...nested graph... }
//     wire w1 in:0 -> n1:0 label=gt{...}
//     wire w2 n1:0 -> n1:0 label=gt{...}
//     input w1
//     output w3
//   }

namespace detail {

inline std::string endpoint_text(const Endpoint& e) {
    switch (e.kind) {
        case Endpoint::Kind::Node:
            return "n" + std::to_string(e.node) + ":" + std::to_string(e.port);
        case Endpoint::Kind::BoundaryIn: return "in:" + std::to_string(e.port);
        case Endpoint::Kind::BoundaryOut: return "out:" + std::to_string(e.port);
    }
    return "?";
}

inline void print_graph_body(std::ostringstream& os, const StrategyGraph& g, int indent) {
    std::string pad(static_cast<std::size_t>(indent) * 2, ' ');
    for (const auto& [id, node] : g.nodes) {
        if (node.is_atomic()) {
            os << pad << "node n" << id << " kind=atomic tactic=\"" << node.atomic().tactic.to_text()
               << "\"\n";
        } else {
            os << pad << "node n" << id << " kind=graph name=\"" << node.graph().name << "\"";
            for (const StrategyGraph& child : node.graph().children) {
                os << " {\n";
                print_graph_body(os, child, indent + 1);
                os << pad << "}";
            }
            os << "\n";
        }
    }
    for (const auto& [id, w] : g.wires) {
        os << pad << "wire w" << id << " " << endpoint_text(w.src) << " -> " << endpoint_text(w.dst)
           << " label=" << (w.label.is_concrete() ? to_text(w.label.type()) : "?" + w.label.var)
           << "\n";
    }
    if (!g.inputs.empty()) {
        os << pad << "input";
        for (WireId w : g.inputs) os << " w" << w;
        os << "\n";
    }
    if (!g.outputs.empty()) {
        os << pad << "output";
        for (WireId w : g.outputs) os << " w" << w;
        os << "\n";
    }
}

}  // namespace detail

inline std::string print_strategy(const StrategyGraph& g) {
    std::ostringstream os;
    os << "strategy {\n";
    detail::print_graph_body(os, g, 1);
    os << "}\n";
    return os.str();
}

// ---------------------------------------------------------------------------
// parsing

namespace detail {

inline std::string scan_quoted(LatticeScanner& s) {
    s.expect("\"");
    std::string out;
    while (s.pos < s.src.size() && s.src[s.pos] != '"') out += s.src[s.pos++];
    if (s.pos == s.src.size()) throw parse_error("unterminated string", s.pos);
    ++s.pos;
    return out;
}

inline int scan_id(LatticeScanner& s, char prefix) {
    s.skip_ws();
    if (s.pos >= s.src.size() || s.src[s.pos] != prefix)
        throw parse_error(std::string("expected '") + prefix + "' id", s.pos);
    ++s.pos;
    int v = 0;
    bool any = false;
    while (s.pos < s.src.size() && s.src[s.pos] >= '0' && s.src[s.pos] <= '9') {
        v = v * 10 + (s.src[s.pos] - '0');
        ++s.pos;
        any = true;
    }
    if (!any) throw parse_error("expected numeric id", s.pos);
    return v;
}

inline Endpoint parse_endpoint(LatticeScanner& s) {
    s.skip_ws();
    if (s.peek("in:")) {
        s.eat("in:");
        int idx = 0;
        while (s.pos < s.src.size() && s.src[s.pos] >= '0' && s.src[s.pos] <= '9')
            idx = idx * 10 + (s.src[s.pos++] - '0');
        return Endpoint::boundary_in(idx);
    }
    if (s.peek("out:")) {
        s.eat("out:");
        int idx = 0;
        while (s.pos < s.src.size() && s.src[s.pos] >= '0' && s.src[s.pos] <= '9')
            idx = idx * 10 + (s.src[s.pos++] - '0');
        return Endpoint::boundary_out(idx);
    }
    int node = scan_id(s, 'n');
    s.expect(":");
    int port = 0;
    bool any = false;
    while (s.pos < s.src.size() && s.src[s.pos] >= '0' && s.src[s.pos] <= '9') {
        port = port * 10 + (s.src[s.pos++] - '0');
        any = true;
    }
    if (!any) throw parse_error("expected port number", s.pos);
    return Endpoint::at(node, port);
}

inline StrategyGraph parse_graph_body(LatticeScanner& s) {
    StrategyGraph g;
    while (true) {
        s.skip_ws();
        if (s.peek("}")) break;
        if (s.eat("node")) {
            int id = scan_id(s, 'n');
            s.expect("kind=");
            std::string kind = s.ident();
            if (kind == "atomic") {
                s.expect("tactic=");
                TacticApp t = parse_tactic(scan_quoted(s));
                g.nodes.emplace(id, StrategyNode{id, AtomicTacticNode{std::move(t)}});
            } else if (kind == "graph") {
                s.expect("name=");
                std::string name = scan_quoted(s);
                std::vector<StrategyGraph> children;
                while (s.eat("{")) {
                    children.push_back(parse_graph_body(s));
                    s.expect("}");
                }
                if (children.empty()) throw parse_error("graph tactic without a child graph", s.pos);
                g.nodes.emplace(id, StrategyNode{id, GraphTacticNode{name, std::move(children)}});
            } else {
                throw parse_error("unknown node kind " + kind, s.pos);
            }
            g.next_node = std::max(g.next_node, id + 1);
            continue;
        }
        if (s.eat("wire")) {
            int id = scan_id(s, 'w');
            Endpoint src = parse_endpoint(s);
            s.expect("->");
            Endpoint dst = parse_endpoint(s);
            s.expect("label=");
            GoalType label = parse_goal_type(s);
            g.wires.emplace(id, Wire{id, src, dst, WireLabel::of(std::move(label))});
            g.next_wire = std::max(g.next_wire, id + 1);
            continue;
        }
        auto at_wire_id = [&]() {
            s.skip_ws();
            return s.pos + 1 < s.src.size() && s.src[s.pos] == 'w' && s.src[s.pos + 1] >= '0' &&
                   s.src[s.pos + 1] <= '9';
        };
        if (s.eat("input")) {
            while (at_wire_id()) g.inputs.push_back(scan_id(s, 'w'));
            continue;
        }
        if (s.eat("output")) {
            while (at_wire_id()) g.outputs.push_back(scan_id(s, 'w'));
            continue;
        }
        throw parse_error("unexpected token in strategy body", s.pos);
    }
    return g;
}

inline void validate_strategy(const StrategyGraph& g) {
    for (const auto& [id, w] : g.wires) {
        auto check_node = [&](const Endpoint& e) {
            if (e.kind == Endpoint::Kind::Node && !g.nodes.count(e.node))
                throw parse_error("wire w" + std::to_string(id) + " references unknown node n" +
                                      std::to_string(e.node),
                                  0);
        };
        check_node(w.src);
        check_node(w.dst);
        if (w.dst.kind == Endpoint::Kind::Node && w.dst.port != 0)
            throw parse_error("tactic input ports are always 0", 0);
    }
    for (WireId w : g.inputs)
        if (!g.wires.count(w)) throw parse_error("input list references unknown wire", 0);
    for (WireId w : g.outputs)
        if (!g.wires.count(w)) throw parse_error("output list references unknown wire", 0);
    for (const auto& [id, node] : g.nodes) {
        if (!node.is_atomic())
            for (const StrategyGraph& child : node.graph().children) validate_strategy(child);
        if (g.wires_into(id).empty())
            throw parse_error("node n" + std::to_string(id) + " has no input wire", 0);
    }
}

}  // namespace detail

inline StrategyGraph parse_strategy(std::string_view text) {
    detail::LatticeScanner s{text};
    s.expect("strategy");
    s.expect("{");
    StrategyGraph g = detail::parse_graph_body(s);
    s.expect("}");
    s.skip_ws();
    if (s.pos != text.size()) throw parse_error("trailing input after strategy", s.pos);
    detail::validate_strategy(g);
    return g;
}

}  // namespace stratgen
