// Acceptance suite: runs every criterion end to end against the shipped
// theory file and prints one PASS/FAIL line per criterion.
//
//   usage: acceptance [theory-file]

#include <chrono>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>

#include "stratgen/cli.hpp"

using namespace stratgen;
using Clock = std::chrono::steady_clock;

namespace {

int failures = 0;

void report(int criterion, const std::string& what, bool ok) {
    std::cout << (ok ? "PASS" : "FAIL") << " criterion " << criterion << ": " << what << "\n";
    if (!ok) ++failures;
}

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

FeatureData fd(FeatureKind k, const std::string& s) { return parse_feature_data(s, k); }

// ---------------------------------------------------------------------------
// criterion 1: lattice laws on a randomized corpus + brute-force semantics

using World = std::set<Datum>;

std::vector<Datum> universe_for(FeatureKind k) {
    switch (k) {
        case FeatureKind::TopSymbol:
        case FeatureKind::HasSymbol: return {sym("*"), sym("/\\"), sym("\\/"), sym("pure")};
        case FeatureKind::IsMatch: return {Datum(false), Datum(true)};
        case FeatureKind::SymbAtPos: return {pos1(1), pos1(2), pos1(3), Datum(BottomDatum{})};
    }
    return {};
}

std::vector<World> worlds_for(FeatureKind k) {
    std::vector<World> out;
    auto uni = universe_for(k);
    switch (k) {
        case FeatureKind::TopSymbol:
            for (const Datum& d : uni) out.push_back({d});
            return out;
        case FeatureKind::IsMatch:
            return {{Datum(true)}, {Datum(false)}};
        default: {
            std::vector<Datum> base;
            for (const Datum& d : uni)
                if (!is_bottom_datum(d)) base.push_back(d);
            for (std::size_t mask = 0; mask < (1u << base.size()); ++mask) {
                World w;
                for (std::size_t i = 0; i < base.size(); ++i)
                    if (mask & (1u << i)) w.insert(base[i]);
                if (k == FeatureKind::SymbAtPos && w.empty()) continue;
                out.push_back(std::move(w));
            }
            if (k == FeatureKind::SymbAtPos) out.push_back({Datum(BottomDatum{})});
            return out;
        }
    }
}

bool sat(const FeatureData& x, const World& w) {
    if (x.is_top) return true;
    for (const Conjunct& c : x.dnf)
        if (std::includes(w.begin(), w.end(), c.begin(), c.end())) return true;
    return false;
}

FeatureData random_fd(FeatureKind k, std::mt19937& rng) {
    std::uniform_int_distribution<int> pick(0, 11);
    int p = pick(rng);
    if (p == 0) return FeatureData::top();
    if (p == 1) return FeatureData::bottom();
    auto uni = universe_for(k);
    std::uniform_int_distribution<int> n_conj(1, 3), n_atom(1, 2);
    std::uniform_int_distribution<std::size_t> atom(0, uni.size() - 1);
    Dnf dnf;
    for (int i = n_conj(rng); i > 0; --i) {
        Conjunct c;
        for (int j = n_atom(rng); j > 0; --j) c.insert(uni[atom(rng)]);
        dnf.push_back(std::move(c));
    }
    return canonicalise(k, FeatureData::of(std::move(dnf)));
}

void criterion_1() {
    auto start = Clock::now();
    std::mt19937 rng(20260810);
    bool ok = true;
    const FeatureKind kinds[] = {FeatureKind::TopSymbol, FeatureKind::HasSymbol,
                                 FeatureKind::IsMatch, FeatureKind::SymbAtPos};
    for (FeatureKind k : kinds) {
        auto ws = worlds_for(k);
        for (int i = 0; i < 1000 && ok; ++i) {
            FeatureData x = random_fd(k, rng), y = random_fd(k, rng), z = random_fd(k, rng);
            FeatureData cx = canonicalise(k, x);
            ok = ok && meet_f(k, x, y) == meet_f(k, y, x);
            ok = ok && join_f(k, x, y) == join_f(k, y, x);
            ok = ok && meet_f(k, x, meet_f(k, y, z)) == meet_f(k, meet_f(k, x, y), z);
            ok = ok && join_f(k, x, join_f(k, y, z)) == join_f(k, join_f(k, x, y), z);
            ok = ok && meet_f(k, x, x) == cx && join_f(k, x, x) == cx;
            ok = ok && join_f(k, x, meet_f(k, x, y)) == cx;
            ok = ok && meet_f(k, x, join_f(k, x, y)) == cx;
            ok = ok && meet_f(k, x, FeatureData::top()) == cx;
            ok = ok && join_f(k, x, FeatureData::bottom()) == cx;
            FeatureData m = meet_f(k, x, y), j = join_f(k, x, y);
            for (const World& w : ws) {
                ok = ok && sat(m, w) == (sat(x, w) && sat(y, w));
                ok = ok && sat(j, w) == (sat(x, w) || sat(y, w));
            }
        }
    }
    double elapsed = seconds_since(start);
    ok = ok && elapsed < 10.0;
    std::ostringstream what;
    what << "lattice laws and sem-homomorphism on 1000 random values per feature ("
         << elapsed << " s)";
    report(1, what.str(), ok);
}

// ---------------------------------------------------------------------------
// criterion 2: the worked class examples, exactly

void criterion_2() {
    GoalClass c1 = parse_goal_class("{top_symbol: [[*]], has_symbol: [[*,/\\],[\\/,*]]}", "C1");
    GoalClass c2 = parse_goal_class("{top_symbol: [[/\\]], has_symbol: [[*,/\\],[\\/,*]]}", "C2");
    GoalClass c3 = parse_goal_class("{top_symbol: [[*]], has_symbol: [[*,/\\,\\/]]}", "C3");
    bool ok = class_orthogonal(c2, c3);
    GoalClass joined = class_join(c2, c3);
    ok = ok && joined.at("top_symbol") == fd(FeatureKind::TopSymbol, "[[/\\],[*]]");
    ok = ok && joined.at("has_symbol") == fd(FeatureKind::HasSymbol, "[[*,/\\],[\\/,*]]");
    ok = ok && class_subtype(c3, c1);
    report(2, "class orthogonality, join, and subtyping of the worked examples", ok);
}

// ---------------------------------------------------------------------------
// criteria 3 and 4: script replay through the command surface

void criterion_3(const std::string& theory) {
    std::ostringstream out, err;
    auto t1 = Clock::now();
    int rc1 = cmd_check(theory, "conj1", "fig1", out, err);
    double s1 = seconds_since(t1);
    auto t2 = Clock::now();
    int rc2 = cmd_check(theory, "conj2", "short2", out, err);
    double s2 = seconds_since(t2);
    bool ok = rc1 == 0 && rc2 == 0 && s1 < 1.0 && s2 < 1.0;
    std::ostringstream what;
    what << "replay: nine-step script proves conjecture 1 (" << s1 << " s), four-step script "
         << "proves conjecture 2 (" << s2 << " s)";
    report(3, what.str(), ok);
}

void criterion_4(const std::string& theory) {
    std::ostringstream out, err;
    int rc = cmd_check(theory, "conj2", "fig1", out, err);
    report(4, "negative control: the nine-step script on conjecture 2 exits 1", rc == 1);
}

// ---------------------------------------------------------------------------
// criterion 5: goal-type derivation computes the expected class and link values

void criterion_5(const TheoryFile& th) {
    const Conjecture& conj1 = th.conjectures.at("conj1");
    GoalType gt1 = derive_goal_type(ProofState{conj1.hyps(), conj1.shows});
    auto link = [&](const GoalType& g, const char* f, const char* fact) {
        return canonicalise(feature_kind(f),
                            g.link.at(LinkKey{f, ClassRef::concl(), ClassRef::fact(fact)}));
    };
    bool ok = gt1.fact("H") && gt1.fact("P");
    if (ok) {
        ok = ok && gt1.fact("H")->at("has_symbol") == fd(FeatureKind::HasSymbol, "[[*,/\\]]");
        ok = ok && gt1.fact("H")->at("top_symbol") == fd(FeatureKind::TopSymbol, "[[*]]");
        ok = ok && gt1.fact("P")->at("has_symbol") == fd(FeatureKind::HasSymbol, "[[pure]]");
        ok = ok && gt1.fact("P")->at("top_symbol") == fd(FeatureKind::TopSymbol, "[[pure]]");
        ok = ok && link(gt1, "symb_at_pos", "H") == fd(FeatureKind::SymbAtPos, "[[bot]]");
    }
    // the state after the four reassociations aligns with H at position 1
    GoalType gt3 = derive_goal_type(
        ProofState{conj1.hyps(), parse_term("c * (((f /\\ e) /\\ e) * d * b) * a")});
    ok = ok && link(gt3, "symb_at_pos", "H") == fd(FeatureKind::SymbAtPos, "[[1]]");
    report(5, "derived goal types carry the expected class and link values", ok);
}

// ---------------------------------------------------------------------------
// criterion 6: end-to-end generalisation into the mutation strategy

std::filesystem::path gen_dir() {
    auto dir = std::filesystem::temp_directory_path() / "stratgen_acceptance";
    std::filesystem::remove_all(dir);
    return dir;
}

void criterion_6(const std::string& theory, const std::filesystem::path& dir) {
    std::ostringstream out, err;
    int rc = cmd_generalise(theory, "conj1", "fig1", dir.string(), out, err);
    bool ok = rc == 0;

    // snapshots in order: loop1 once, loop2 twice, layering,
    // then the push-out
    for (const char* name :
         {"step-000-trace.strat", "step-001-loop1.strat", "step-002-loop2.strat",
          "step-003-loop2.strat", "step-004-layer.strat", "step-005-layer.strat",
          "step-006-pushout.strat", "final.strat"})
        ok = ok && std::filesystem::exists(dir / name);

    if (ok) {
        StrategyGraph final = parse_strategy(slurp((dir / "final.strat").string()));
        ok = ok && final.nodes.size() == 3;
        const StrategyNode* ax1_loop = nullptr;
        const StrategyNode* graph_loop = nullptr;
        const StrategyNode* rule_h = nullptr;
        for (const auto& [id, n] : final.nodes) {
            if (!n.is_atomic())
                graph_loop = &n;
            else if (n.atomic().tactic.kind == TacticApp::Kind::Subst)
                ax1_loop = &n;
            else
                rule_h = &n;
        }
        ok = ok && ax1_loop && graph_loop && rule_h;
        if (ok) {
            ok = ok && ax1_loop->atomic().tactic == TacticApp::subst({"ax1"});
            ok = ok && rule_h->atomic().tactic == TacticApp::rule_class("H");
            const Wire* fb1 = final.feedback_wire(ax1_loop->id);
            const Wire* fb2 = final.feedback_wire(graph_loop->id);
            ok = ok && fb1 && fb2;
            auto link = [&](const Wire* w, const char* f) {
                return canonicalise(feature_kind(f), w->label.type().link.at(LinkKey{
                                                         f, ClassRef::concl(), ClassRef::fact("H")}));
            };
            if (ok) {
                ok = ok && link(fb1, "symb_at_pos") == fd(FeatureKind::SymbAtPos, "[[bot]]");
                ok = ok && link(fb2, "is_match") == fd(FeatureKind::IsMatch, "[[false]]");
                std::set<std::string> body;
                for (const auto& [_, n] : graph_loop->graph().children[0].nodes)
                    body.insert(n.atomic().tactic.to_text());
                ok = ok && body == std::set<std::string>{"subst {ax2}", "rule class P"};
            }
        }
    }
    report(6,
           "generalisation yields looped subst ax1 ([[bot]] guard), a looped {subst ax2; rule "
           "class P} block ([[false]] guard), then rule class H",
           ok);
}

// ---------------------------------------------------------------------------
// criterion 7: transfer through the command surface

void criterion_7(const std::string& theory, const std::filesystem::path& dir) {
    std::string strat = (dir / "final.strat").string();
    std::ostringstream out2, err2;
    auto t1 = Clock::now();
    int rc2 = cmd_eval(theory, "conj2", strat, out2, err2);
    double s2 = seconds_since(t1);
    bool ok = rc2 == 0 && s2 < 1.0;

    // the transcript must be exactly these four applications, in order
    std::vector<std::string> applied;
    std::istringstream lines(out2.str());
    std::string line;
    while (std::getline(lines, line))
        if (line.rfind("apply ", 0) == 0) applied.push_back(line.substr(6, line.find(':') - 6));
    ok = ok && applied == std::vector<std::string>{"subst {ax1}", "subst {ax2}", "rule class P",
                                                   "rule class H"};

    std::ostringstream out1, err1;
    auto t2 = Clock::now();
    int rc1 = cmd_eval(theory, "conj1", strat, out1, err1);
    double s1 = seconds_since(t2);
    ok = ok && rc1 == 0 && s1 < 1.0;
    ok = ok && out1.str().find("proved conj1 (9 tactic applications)") != std::string::npos;

    std::ostringstream what;
    what << "transfer: the strategy proves conjecture 2 in 4 applications (" << s2
         << " s) and conjecture 1 in 9 (" << s1 << " s)";
    report(7, what.str(), ok);
}

// ---------------------------------------------------------------------------
// criterion 8: proof preservation across every pipeline rewrite

void criterion_8(const TheoryFile& th) {
    const Conjecture& conj1 = th.conjectures.at("conj1");
    ProofTrace trace =
        replay_script(th.axioms, conj1.hyps(), conj1.shows, th.scripts.at("fig1").tactics);
    PipelineResult pipe = generalise_pipeline(trace);
    bool ok = pipe.completed;
    for (const auto& step : pipe.steps) {
        const GoalType& label = step.graph.wires.at(step.graph.inputs[0]).label.type();
        Goal g0;
        g0.ps = ProofState{conj1.hyps(), conj1.shows};
        for (const GoalClass& c : label.facts) {
            std::set<Term> entry;
            for (const auto& [_, term] : g0.ps.hyps)
                if (match_class(c, term)) entry.insert(term);
            if (!entry.empty()) g0.fmap.emplace(c.label, std::move(entry));
        }
        EvalResult res = evaluate(step.graph, g0, th.axioms);
        ok = ok && res.status == EvalResult::Status::Proved;
    }
    report(8, "every intermediate strategy of the pipeline still proves conjecture 1", ok);
}

// ---------------------------------------------------------------------------
// criterion 9: orthogonal output labels leave at most one partition

void criterion_9(const TheoryFile& th) {
    bool ok = true;
    int exercised = 0;
    std::vector<std::string> goals{
        "((a /\\ e) * b) * c",       "(a * b) * (c /\\ e)",  "((a * b) * c) * (d /\\ e)",
        "(b /\\ e) * (a * a)",       "((b * b) /\\ e) * a",  "(a /\\ e) * (b /\\ e)",
        "((a /\\ e) * b) /\\ e",     "a * ((b /\\ e) * c)",  "((a * a) /\\ e) * (b * c)",
        "(((a /\\ e) * b) * c) * d", "(c /\\ e) * pure(a)",  "((a /\\ e) * (b /\\ e)) * c"};
    for (const auto& concl : goals) {
        ProofState ps{{{"p", parse_term("pure(e)")}, {"h", parse_term("a * (b /\\ e) * c")}},
                      parse_term(concl)};
        GoalType alpha = derive_goal_type(ps);
        Goal g;
        g.ps = ps;
        for (const GoalClass& c : alpha.facts) {
            std::set<Term> entry;
            for (const auto& [_, term] : ps.hyps)
                if (match_class(c, term)) entry.insert(term);
            g.fmap.emplace(c.label, std::move(entry));
        }
        auto raw = apply_subst({th.axioms.at("ax2")}, ps);
        if (raw.empty()) continue;
        GoalType beta1 = derive_goal_type(raw[0][0]);
        GoalType beta2 = derive_goal_type(raw[0][1]);
        if (!gt_orthogonal(beta1, beta2)) continue;
        auto lifted =
            lift_tactic(TacticApp::subst({"ax2"}), alpha, {beta1, beta2}, g, th.axioms);
        ok = ok && lifted.size() <= raw.size();
        ++exercised;
    }
    ok = ok && exercised >= 6;
    std::ostringstream what;
    what << "orthogonal output labels admit at most one partition per alternative (" << exercised
         << " cases)";
    report(9, what.str(), ok);
}

}  // namespace

int main(int argc, char** argv) {
    std::string theory = argc > 1 ? argv[1] : "theories/sep.thy";
    TheoryFile th;
    try {
        th = parse_theory(slurp(theory));
    } catch (const std::exception& e) {
        std::cerr << "cannot load theory " << theory << ": " << e.what() << "\n";
        return 1;
    }

    criterion_1();
    criterion_2();
    criterion_3(theory);
    criterion_4(theory);
    criterion_5(th);
    auto dir = gen_dir();
    criterion_6(theory, dir);
    criterion_7(theory, dir);
    criterion_8(th);
    criterion_9(th);

    if (failures == 0)
        std::cout << "all acceptance criteria passed\n";
    else
        std::cout << failures << " acceptance criteria FAILED\n";
    return failures == 0 ? 0 : 1;
}
