#include <cstdint>
#include <exception>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "dss/driver.hpp"

namespace {

struct CommonArgs {
    std::string config_path;
    std::string out_dir = ".";
    std::string resume_path;
    std::uint64_t seed = 0;
    bool seed_given = false;
};

void add_common(CLI::App* cmd, CommonArgs& args, bool needs_resume) {
    cmd->add_option("--config", args.config_path, "experiment config (JSON)")
        ->required()
        ->check(CLI::ExistingFile);
    cmd->add_option("--out", args.out_dir, "output directory");
    auto* seed = cmd->add_option("--seed", args.seed, "override the config's seed");
    seed->each([&args](const std::string&) { args.seed_given = true; });
    auto* resume =
        cmd->add_option("--resume", args.resume_path, "checkpoint file to start from");
    if (needs_resume) resume->required();
}

dss::DriverOptions to_options(const CommonArgs& args) {
    dss::DriverOptions opt;
    opt.out_dir = args.out_dir;
    opt.resume_path = args.resume_path;
    if (args.seed_given) opt.seed_override = args.seed;
    return opt;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{
        "Steady states of dissipative spin systems: exact solvers and a "
        "variational transformer ansatz"};
    app.require_subcommand(1);

    CommonArgs exact_args, train_args, eval_args, bench_args;
    auto* exact = app.add_subcommand("exact", "exact steady-state sweep (CSV)");
    add_common(exact, exact_args, false);
    auto* train = app.add_subcommand("train", "variational optimization");
    add_common(train, train_args, false);
    auto* evaluate =
        app.add_subcommand("evaluate", "observables of a trained checkpoint (CSV)");
    add_common(evaluate, eval_args, true);
    auto* benchmark =
        app.add_subcommand("benchmark", "trained ansatz vs exact over a sweep (CSV)");
    add_common(benchmark, bench_args, false);

    CLI11_PARSE(app, argc, argv);

    try {
        if (exact->parsed()) {
            const auto cfg = dss::load_experiment_config(exact_args.config_path);
            dss::run_exact(cfg, to_options(exact_args));
        } else if (train->parsed()) {
            const auto cfg = dss::load_experiment_config(train_args.config_path);
            dss::run_train(cfg, to_options(train_args));
        } else if (evaluate->parsed()) {
            const auto cfg = dss::load_experiment_config(eval_args.config_path);
            dss::run_evaluate(cfg, to_options(eval_args));
        } else if (benchmark->parsed()) {
            const auto cfg = dss::load_experiment_config(bench_args.config_path);
            dss::run_benchmark(cfg, to_options(bench_args));
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
