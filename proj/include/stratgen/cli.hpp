#pragma once

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include "stratgen/generalise.hpp"
#include "stratgen/strategy_io.hpp"

namespace stratgen {

// exit-code contract:
//   0 success / proved
//   1 replay or evaluation failure (goal not proved, boundary lift failure)
//   2 parse error, unknown name, or unreadable file
//   3 generalisation pipeline failure
//   4 evaluation budget exhausted
namespace exit_code {
inline constexpr int ok = 0;
inline constexpr int not_proved = 1;
inline constexpr int parse = 2;
inline constexpr int pipeline = 3;
inline constexpr int budget = 4;
}  // namespace exit_code

namespace detail {

inline std::optional<std::string> read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) return std::nullopt;
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

struct LoadedScript {
    const TheoryFile* theory;
    const Conjecture* conjecture;
    const Script* script;
};

inline int load_theory(const std::string& path, TheoryFile& th, std::ostream& err) {
    auto text = read_file(path);
    if (!text) {
        err << "error: cannot read " << path << "\n";
        return exit_code::parse;
    }
    try {
        th = parse_theory(*text);
    } catch (const std::exception& e) {
        err << "error: " << path << ": " << e.what() << "\n";
        return exit_code::parse;
    }
    return exit_code::ok;
}

inline const Conjecture* find_conjecture(const TheoryFile& th, const std::string& name,
                                         std::ostream& err) {
    auto it = th.conjectures.find(name);
    if (it == th.conjectures.end()) {
        err << "error: unknown conjecture " << name << "\n";
        return nullptr;
    }
    return &it->second;
}

inline const Script* find_script(const TheoryFile& th, const std::string& name, std::ostream& err) {
    auto it = th.scripts.find(name);
    if (it == th.scripts.end()) {
        err << "error: unknown script " << name << "\n";
        return nullptr;
    }
    return &it->second;
}

/// Frontier snapshots along the successful trace, in application order.
inline void print_trace(const ProofTrace& trace, std::ostream& out) {
    std::deque<const TraceNode*> frontier{trace.get()};
    int step = 0;
    while (!frontier.empty()) {
        const TraceNode* n = frontier.front();
        frontier.pop_front();
        ++step;
        out << "step " << step << ": " << n->tactic.to_text() << " on " << to_text(n->state.concl)
            << "\n";
        for (auto it = n->children.rbegin(); it != n->children.rend(); ++it)
            frontier.push_front(it->get());
        out << "  goals:";
        if (frontier.empty()) out << " (none)";
        for (const TraceNode* g : frontier) out << " [" << to_text(g->state.concl) << "]";
        out << "\n";
    }
}

/// Initial goal for evaluating a strategy on a conjecture: the fact map is
/// populated by matching hypotheses against the input label's fact classes.
inline Goal initial_goal(const Conjecture& conj, const GoalType& input_label) {
    Goal g;
    g.ps = ProofState{conj.hyps(), conj.shows};
    for (const GoalClass& c : input_label.facts) {
        std::set<Term> entry;
        for (const auto& [_, term] : g.ps.hyps)
            if (match_class(c, term)) entry.insert(term);
        if (!entry.empty()) g.fmap.emplace(c.label, std::move(entry));
    }
    return g;
}

}  // namespace detail

/// Replay a script against a conjecture and print the per-step goal lists.
inline int cmd_check(const std::string& theory_path, const std::string& conjecture,
                     const std::string& script, std::ostream& out, std::ostream& err) {
    TheoryFile th;
    if (int rc = detail::load_theory(theory_path, th, err)) return rc;
    const Conjecture* conj = detail::find_conjecture(th, conjecture, err);
    if (!conj) return exit_code::parse;
    const Script* s = detail::find_script(th, script, err);
    if (!s) return exit_code::parse;

    try {
        ProofTrace trace = replay_script(th.axioms, conj->hyps(), conj->shows, s->tactics);
        detail::print_trace(trace, out);
        out << "proved " << conjecture << " (" << s->tactics.size() << " steps)\n";
        return exit_code::ok;
    } catch (const replay_failure& e) {
        err << "replay failed: " << e.what() << "\n";
        return exit_code::not_proved;
    }
}

/// Replay then generalise; write the final strategy, numbered intermediate
/// snapshots, and DOT renderings into out_dir.
inline int cmd_generalise(const std::string& theory_path, const std::string& conjecture,
                          const std::string& script, const std::string& out_dir, std::ostream& out,
                          std::ostream& err) {
    TheoryFile th;
    if (int rc = detail::load_theory(theory_path, th, err)) return rc;
    const Conjecture* conj = detail::find_conjecture(th, conjecture, err);
    if (!conj) return exit_code::parse;
    const Script* s = detail::find_script(th, script, err);
    if (!s) return exit_code::parse;

    ProofTrace trace;
    try {
        trace = replay_script(th.axioms, conj->hyps(), conj->shows, s->tactics);
    } catch (const replay_failure& e) {
        err << "replay failed: " << e.what() << "\n";
        return exit_code::not_proved;
    }

    PipelineResult pipeline = generalise_pipeline(trace);
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec) {
        err << "error: cannot create " << out_dir << "\n";
        return exit_code::pipeline;
    }
    auto write = [&](const std::string& name, const std::string& content) {
        std::ofstream f(out_dir + "/" + name, std::ios::binary);
        f << content;
    };
    for (std::size_t i = 0; i < pipeline.steps.size(); ++i) {
        const PipelineStep& st = pipeline.steps[i];
        char idx[8];
        std::snprintf(idx, sizeof idx, "%03zu", i);
        std::string base = "step-" + std::string(idx) + "-" + st.kind;
        write(base + ".strat", print_strategy(st.graph));
        write(base + ".dot", to_dot(st.graph, base));
        out << "step " << i << ": " << st.kind << " (" << st.graph.nodes.size() << " nodes)\n";
    }
    write("final.strat", print_strategy(pipeline.final_graph()));
    write("final.dot", to_dot(pipeline.final_graph(), "final"));
    if (!pipeline.completed) {
        err << "pipeline failed: " << pipeline.error << "\n";
        return exit_code::pipeline;
    }
    out << "strategy written to " << out_dir << "/final.strat\n";
    return exit_code::ok;
}

/// Evaluate a strategy file on a conjecture and print the transcript.
inline int cmd_eval(const std::string& theory_path, const std::string& conjecture,
                    const std::string& strategy_path, std::ostream& out, std::ostream& err,
                    int budget = 10000) {
    TheoryFile th;
    if (int rc = detail::load_theory(theory_path, th, err)) return rc;
    const Conjecture* conj = detail::find_conjecture(th, conjecture, err);
    if (!conj) return exit_code::parse;
    auto text = detail::read_file(strategy_path);
    if (!text) {
        err << "error: cannot read " << strategy_path << "\n";
        return exit_code::parse;
    }
    StrategyGraph strat;
    try {
        strat = parse_strategy(*text);
        if (strat.inputs.size() != 1) throw parse_error("strategy must have one input wire", 0);
    } catch (const std::exception& e) {
        err << "error: " << strategy_path << ": " << e.what() << "\n";
        return exit_code::parse;
    }

    Goal initial = detail::initial_goal(*conj, strat.wires.at(strat.inputs[0]).label.type());
    try {
        EvalResult res = evaluate(strat, initial, th.axioms, EvalOptions{budget});
        for (const TranscriptEntry& e : res.transcript) {
            out << "apply " << e.tactic << ": " << to_text(e.consumed.concl) << " ->";
            if (e.produced.empty()) out << " (discharged)";
            for (const ProofState& p : e.produced) out << " [" << to_text(p.concl) << "]";
            out << "\n";
        }
        switch (res.status) {
            case EvalResult::Status::Proved:
                out << "proved " << conjecture << " (" << res.transcript.size()
                    << " tactic applications)\n";
                return exit_code::ok;
            case EvalResult::Status::Open:
                out << "open goals remain\n";
                return exit_code::not_proved;
            case EvalResult::Status::Stuck:
                out << "stuck: no tactic applies\n";
                return exit_code::not_proved;
        }
        return exit_code::not_proved;
    } catch (const boundary_lift_error& e) {
        err << "not proved: " << e.what() << "\n";
        return exit_code::not_proved;
    } catch (const budget_exhausted& e) {
        err << "error: " << e.what() << "\n";
        return exit_code::budget;
    }
}

/// Lattice calculator: OP [FEATURE FD FD | CLASS CLASS | GT GT] with
/// OP in {meet, join, orthogonal, subtype}.
inline int cmd_lattice(const std::string& expr, std::ostream& out, std::ostream& err) {
    try {
        detail::LatticeScanner s{expr};
        std::string op = s.ident();
        if (op != "meet" && op != "join" && op != "orthogonal" && op != "subtype")
            throw parse_error("unknown operation " + op, s.pos);
        s.skip_ws();
        if (s.peek("gt")) {
            GoalType a = detail::parse_goal_type(s);
            GoalType b = detail::parse_goal_type(s);
            s.skip_ws();
            if (s.pos != expr.size()) throw parse_error("trailing input", s.pos);
            if (op == "join")
                out << to_text(gen_goal_type(a, b)) << "\n";
            else if (op == "orthogonal")
                out << (gt_orthogonal(a, b) ? "true" : "false") << "\n";
            else if (op == "subtype")
                out << (gt_subtype(a, b) ? "true" : "false") << "\n";
            else
                throw parse_error("meet is not defined on goal types", s.pos);
            return exit_code::ok;
        }
        if (s.peek("{")) {
            GoalClass a = detail::parse_goal_class(s, "a");
            GoalClass b = detail::parse_goal_class(s, "b");
            s.skip_ws();
            if (s.pos != expr.size()) throw parse_error("trailing input", s.pos);
            if (op == "meet")
                out << to_text(class_meet(a, b)) << "\n";
            else if (op == "join")
                out << to_text(class_join(a, b)) << "\n";
            else if (op == "orthogonal")
                out << (class_orthogonal(a, b) ? "true" : "false") << "\n";
            else
                out << (class_subtype(a, b) ? "true" : "false") << "\n";
            return exit_code::ok;
        }
        std::string feature = s.ident();
        FeatureKind k = feature_kind(feature);
        FeatureData a = detail::parse_feature_data(s, k);
        FeatureData b = detail::parse_feature_data(s, k);
        s.skip_ws();
        if (s.pos != expr.size()) throw parse_error("trailing input", s.pos);
        if (op == "meet")
            out << to_text(meet_f(k, a, b)) << "\n";
        else if (op == "join")
            out << to_text(join_f(k, a, b)) << "\n";
        else if (op == "orthogonal")
            out << (feature_orthogonal(k, a, b) ? "true" : "false") << "\n";
        else
            out << (feature_subtype(k, a, b) ? "true" : "false") << "\n";
        return exit_code::ok;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return exit_code::parse;
    }
}

}  // namespace stratgen
