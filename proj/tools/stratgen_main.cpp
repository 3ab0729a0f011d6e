#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "stratgen/cli.hpp"

int main(int argc, char** argv) {
    CLI::App app{"stratgen: replay, type, and generalise rewrite proofs into strategy graphs"};
    app.require_subcommand(1);

    std::string theory, conjecture, script, strategy, out_dir;
    int budget = 10000;
    std::vector<std::string> lattice_expr;

    auto* check = app.add_subcommand("check", "replay a tactic script against a conjecture");
    check->add_option("theory", theory, "theory file")->required();
    check->add_option("conjecture", conjecture, "conjecture name")->required();
    check->add_option("script", script, "script name")->required();

    auto* gen = app.add_subcommand("generalise", "replay a script and generalise it into a strategy");
    gen->add_option("theory", theory, "theory file")->required();
    gen->add_option("conjecture", conjecture, "conjecture name")->required();
    gen->add_option("script", script, "script name")->required();
    gen->add_option("outdir", out_dir, "output directory for strategy and DOT files")->required();

    auto* eval = app.add_subcommand("eval", "evaluate a strategy file on a conjecture");
    eval->add_option("theory", theory, "theory file")->required();
    eval->add_option("conjecture", conjecture, "conjecture name")->required();
    eval->add_option("strategy", strategy, "strategy file")->required();
    eval->add_option("--budget", budget, "evaluation step budget");

    auto* lattice = app.add_subcommand("lattice", "goal-type lattice calculator");
    lattice->add_option("expr", lattice_expr, "e.g.: meet top_symbol [[/\\]] [[*]]")->required();

    CLI11_PARSE(app, argc, argv);

    if (check->parsed())
        return stratgen::cmd_check(theory, conjecture, script, std::cout, std::cerr);
    if (gen->parsed())
        return stratgen::cmd_generalise(theory, conjecture, script, out_dir, std::cout, std::cerr);
    if (eval->parsed())
        return stratgen::cmd_eval(theory, conjecture, strategy, std::cout, std::cerr, budget);
    if (lattice->parsed()) {
        std::string expr;
        for (const auto& part : lattice_expr) {
            if (!expr.empty()) expr += " ";
            expr += part;
        }
        return stratgen::cmd_lattice(expr, std::cout, std::cerr);
    }
    return 2;
}
