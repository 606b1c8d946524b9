#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <thread>

#include <CLI11.hpp>

#include "getree/harness.hpp"

namespace {

int default_workers() {
    const unsigned n = std::thread::hardware_concurrency();
    return n == 0 ? 1 : static_cast<int>(n);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"getree: grammatical evolution of decision-tree policies with Q-learning leaves"};
    app.require_subcommand(1);

    // train
    auto* train = app.add_subcommand("train", "run a config-driven multi-seed experiment");
    std::string train_config, train_output;
    std::uint64_t train_seed = 0;
    int train_runs = 0, train_workers = default_workers();
    train->add_option("-c,--config", train_config, "experiment config file")->required();
    train->add_option("-o,--output", train_output, "override output directory");
    auto* train_seed_opt = train->add_option("-s,--seed", train_seed, "override seed base");
    train->add_option("-r,--runs", train_runs, "override run count");
    train->add_option("-w,--workers", train_workers, "parallel workers");

    // test
    auto* test = app.add_subcommand("test", "greedy evaluation of a serialized tree");
    getree::TestOptions test_opt;
    test->add_option("-t,--tree", test_opt.tree_file, "tree JSON file")->required();
    test->add_option("-e,--env", test_opt.environment, "environment id")->required();
    test->add_option("-n,--episodes", test_opt.episodes, "episode count");
    test->add_option("--max-steps", test_opt.max_steps, "episode step budget override");
    test->add_option("--sigma", test_opt.sigma, "additive observation noise stddev");
    test->add_option("-s,--seed", test_opt.seed, "evaluation seed");
    test->add_option("--csv", test_opt.csv_out, "write per-episode scores CSV here");

    // simplify
    auto* simp = app.add_subcommand("simplify", "prune a trained tree on validation episodes");
    getree::SimplifyOptions simp_opt;
    simp->add_option("-t,--tree", simp_opt.tree_file, "tree JSON file")->required();
    simp->add_option("-e,--env", simp_opt.environment, "environment id")->required();
    simp->add_option("-n,--episodes", simp_opt.episodes, "validation episodes");
    simp->add_option("-s,--seed", simp_opt.seed, "validation seed");
    simp->add_option("--max-steps", simp_opt.max_steps, "episode step budget override");
    simp->add_option("-o,--output", simp_opt.out_file, "write the simplified tree here");

    // inspect
    auto* inspect = app.add_subcommand("inspect", "pretty-print a tree and score its complexity");
    std::string inspect_tree, inspect_dot;
    inspect->add_option("-t,--tree", inspect_tree, "tree JSON file")->required();
    inspect->add_option("--dot", inspect_dot, "write a DOT graph here");

    // compare
    auto* compare = app.add_subcommand("compare", "Mann-Whitney U test between two result sets");
    std::string compare_a, compare_b;
    compare->add_option("a", compare_a, "results dir or JSON file")->required();
    compare->add_option("b", compare_b, "results dir or JSON file")->required();

    // sweep
    auto* sweep = app.add_subcommand("sweep", "noise-robustness curve or stability trace");
    getree::SweepOptions sweep_opt;
    std::string sweep_sigmas;
    sweep->add_option("-t,--tree", sweep_opt.tree_file, "tree JSON file")->required();
    sweep->add_option("-e,--env", sweep_opt.environment, "environment id")->required();
    sweep->add_option("--sigmas", sweep_sigmas, "comma-separated noise stddev list");
    sweep->add_flag("--stability", sweep_opt.stability, "emit the distance-from-equilibrium trace");
    sweep->add_option("-n,--episodes", sweep_opt.episodes, "episodes per point");
    sweep->add_option("--horizon", sweep_opt.horizon, "trace horizon (stability mode)");
    sweep->add_option("--max-steps", sweep_opt.max_steps, "episode step budget override");
    sweep->add_option("-s,--seed", sweep_opt.seed, "evaluation seed");
    sweep->add_option("--csv", sweep_opt.csv_out, "write the curve CSV here");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*train) {
            getree::ExperimentConfig cfg = getree::ExperimentConfig::load(train_config);
            if (!train_output.empty()) cfg.output_dir = train_output;
            if (train_seed_opt->count() > 0) cfg.seed_base = train_seed;
            if (train_runs > 0) cfg.runs = train_runs;
            const auto records = getree::cmd_train(cfg, train_workers);
            int failed = 0;
            for (const auto& r : records) {
                if (r.valid)
                    std::printf("run %d: training %.2f, testing %.2f +- %.2f, M %.2f\n",
                                r.run_index, r.training_score, r.testing_mean, r.testing_std,
                                r.report.M);
                else {
                    std::printf("run %d: FAILED (%s)\n", r.run_index, r.error.c_str());
                    ++failed;
                }
            }
            std::printf("records written to %s\n", cfg.output_dir.c_str());
            return failed > 0 ? 1 : 0;
        }
        if (*test) {
            const auto summary = getree::cmd_test(test_opt);
            std::printf("episodes %zu  mean %.4f  std %.4f\n", summary.scores.size(),
                        summary.mean, summary.stddev);
            return 0;
        }
        if (*simp) {
            const auto before = getree::cmd_inspect(simp_opt.tree_file).report;
            const auto tree = getree::cmd_simplify(simp_opt);
            const auto after = getree::complexity(tree);
            std::printf("M %.2f -> %.2f\n", before.M, after.M);
            std::fputs(tree.pretty().c_str(), stdout);
            return 0;
        }
        if (*inspect) {
            const auto result = getree::cmd_inspect(inspect_tree);
            std::fputs(result.pretty.c_str(), stdout);
            std::printf("l=%ld n_o=%ld n_nao=%ld n_naoc=%ld M=%.2f\n", result.report.l,
                        result.report.n_o, result.report.n_nao, result.report.n_naoc,
                        result.report.M);
            if (!inspect_dot.empty()) {
                std::ofstream out(inspect_dot);
                if (!out) throw std::runtime_error("cannot write " + inspect_dot);
                out << result.dot;
            }
            return 0;
        }
        if (*compare) {
            std::vector<double> a, b;
            const auto outcome = getree::cmd_compare(compare_a, compare_b, &a, &b);
            std::printf("n_a=%zu n_b=%zu U=%.2f p=%.6g (%s)\n", a.size(), b.size(), outcome.u,
                        outcome.p_value,
                        outcome.method == getree::TestOutcome::Method::Exact
                            ? "exact"
                            : "normal approximation");
            std::printf("%s at alpha=0.05\n",
                        outcome.p_value < 0.05 ? "significant" : "not significant");
            return 0;
        }
        if (*sweep) {
            if (!sweep_sigmas.empty()) {
                std::stringstream ss(sweep_sigmas);
                std::string item;
                while (std::getline(ss, item, ','))
                    sweep_opt.sigmas.push_back(std::stod(item));
            }
            std::fputs(getree::cmd_sweep(sweep_opt).c_str(), stdout);
            return 0;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
