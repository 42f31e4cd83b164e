#include "dss/driver.hpp"

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <stdexcept>

#include "dss/checkpoint.hpp"
#include "dss/exact.hpp"
#include "dss/observables.hpp"

namespace dss {

namespace {

namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

struct SweepPoint {
    std::string parameter;  // "none" for the base point
    double value = 0.0;
};

std::vector<SweepPoint> sweep_points(const ExperimentConfig& cfg) {
    if (cfg.sweep.parameter.empty() || cfg.sweep.values.empty())
        return {{"none", 0.0}};
    std::vector<SweepPoint> pts;
    for (double v : cfg.sweep.values) pts.push_back({cfg.sweep.parameter, v});
    return pts;
}

std::string sweep_arg(const SweepPoint& p) {
    return p.parameter == "none" ? std::string{} : p.parameter;
}

std::ofstream open_output(const std::string& out_dir, const std::string& name) {
    fs::create_directories(out_dir);
    const fs::path path = fs::path(out_dir) / name;
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open output file: " + path.string());
    out << std::setprecision(12);
    return out;
}

std::uint64_t effective_seed(const ExperimentConfig& cfg, const DriverOptions& opt) {
    return opt.seed_override ? *opt.seed_override : cfg.seed;
}

DensityMatrixDense solve_point(const SuperOperator& s, std::string& solver,
                               SolveReport& report) {
    const int n = s.sites();
    if (n <= 6) {
        solver = "ed";
        return steady_state_ed(s, &report);
    }
    if (n <= 8) {
        solver = "bicgstab";
        return steady_state_bicgstab(s, 1e-7, nullptr, &report);
    }
    throw std::invalid_argument(
        "exact solvers support at most 8 sites (ed up to 6, bicgstab up to 8); got " +
        std::to_string(n));
}

double exact_magnetization(const DensityMatrixDense& rho, char axis, int n) {
    const ObservableSpec obs = magnetization_observable(axis, n);
    return expectation_exact(obs.terms, rho) / static_cast<double>(n);
}

TrainConfig make_train_config(const ExperimentConfig& cfg, std::uint64_t seed,
                              const std::string& checkpoint_path) {
    TrainConfig tc;
    tc.model = cfg.ansatz;
    tc.sampler = cfg.sampler;
    tc.optimizer.kind = cfg.optimizer.kind;
    tc.learning_rate = cfg.optimizer.learning_rate;
    tc.diagonal_shift = cfg.optimizer.diagonal_shift;
    tc.iterations = cfg.optimizer.iterations;
    tc.checkpoint_every = cfg.optimizer.checkpoint_every;
    tc.master_seed = seed;
    tc.checkpoint_path = checkpoint_path;
    return tc;
}

}  // namespace

void write_manifest(const std::string& out_dir, const std::string& command,
                    const ExperimentConfig& cfg, std::uint64_t seed) {
    nlohmann::json effective = cfg.raw;
    effective["seed"] = seed;  // reflects any command-line override
    const nlohmann::json manifest = {
        {"command", command},
        {"config_hash", config_hash(effective)},
        {"code_version", kCodeVersion},
        {"seed", seed},
    };
    auto out = open_output(out_dir, "manifest.json");
    out << manifest.dump(2) << "\n";
}

void run_exact(const ExperimentConfig& cfg, const DriverOptions& opt) {
    const std::uint64_t seed = effective_seed(cfg, opt);
    const int n = model_sites(cfg.model);
    auto csv = open_output(opt.out_dir, "exact.csv");
    csv << kExactCsvHeader << "\n";
    for (const SweepPoint& p : sweep_points(cfg)) {
        const SuperOperator s = build_superoperator(cfg.model, sweep_arg(p), p.value);
        std::string solver;
        SolveReport report;
        const auto t0 = Clock::now();
        const DensityMatrixDense rho = solve_point(s, solver, report);
        const double wall = std::chrono::duration<double>(Clock::now() - t0).count();
        csv << p.parameter << ',' << p.value << ',' << solver << ','
            << exact_magnetization(rho, 'x', n) << ','
            << exact_magnetization(rho, 'y', n) << ','
            << exact_magnetization(rho, 'z', n) << ',' << purity_exact(rho) << ','
            << report.residual << ',' << wall << "\n";
    }
    write_manifest(opt.out_dir, "exact", cfg, seed);
}

void run_train(const ExperimentConfig& cfg, const DriverOptions& opt) {
    const std::uint64_t seed = effective_seed(cfg, opt);
    const SuperOperator s = build_superoperator(cfg.model);
    fs::create_directories(opt.out_dir);
    const std::string checkpoint_path =
        (fs::path(opt.out_dir) / "checkpoint.bin").string();
    auto log = open_output(opt.out_dir, "train_log.jsonl");

    const TrainConfig tc = make_train_config(cfg, seed, checkpoint_path);
    std::optional<TrainState> resume;
    if (!opt.resume_path.empty()) resume = load_checkpoint(opt.resume_path);
    train(s, tc, &log, resume ? &*resume : nullptr);
    write_manifest(opt.out_dir, "train", cfg, seed);
}

void run_evaluate(const ExperimentConfig& cfg, const DriverOptions& opt) {
    if (opt.resume_path.empty())
        throw std::invalid_argument("evaluate needs a checkpoint (--resume PATH)");
    const std::uint64_t seed = effective_seed(cfg, opt);
    const TrainState state = load_checkpoint(opt.resume_path);
    const TransformerAnsatz ansatz(state.model);

    SamplerConfig sampler = cfg.sampler;
    sampler.samples_per_chain = cfg.eval_samples_per_chain;
    sampler.seed = seed;

    auto csv = open_output(opt.out_dir, "evaluate.csv");
    csv << kEvaluateCsvHeader << "\n";
    for (char axis : {'x', 'y', 'z'}) {
        const ObservableEstimate e =
            estimate_magnetization(ansatz, state.params, axis, sampler);
        csv << "sigma_" << axis << ',' << e.mean << ',' << e.error << ','
            << e.n_samples << "\n";
    }
    write_manifest(opt.out_dir, "evaluate", cfg, seed);
}

void run_benchmark(const ExperimentConfig& cfg, const DriverOptions& opt,
                   double tolerance) {
    const std::uint64_t seed = effective_seed(cfg, opt);
    const int n = model_sites(cfg.model);
    if (n > 6)
        throw std::invalid_argument(
            "benchmark needs an ED reference, limited to 6 sites; got " +
            std::to_string(n));

    auto csv = open_output(opt.out_dir, "benchmark.csv");
    csv << kBenchmarkCsvHeader << "\n";
    for (const SweepPoint& p : sweep_points(cfg)) {
        const SuperOperator s = build_superoperator(cfg.model, sweep_arg(p), p.value);
        const DensityMatrixDense rho = steady_state_ed(s);

        const TrainConfig tc = make_train_config(cfg, seed, /*checkpoint=*/"");
        const TrainState state = train(s, tc);
        const TransformerAnsatz ansatz(state.model);

        SamplerConfig sampler = cfg.sampler;
        sampler.samples_per_chain = cfg.eval_samples_per_chain;
        sampler.seed = SplitRng::derive(seed, 0x0b5e7661).state;
        for (char axis : {'x', 'y', 'z'}) {
            const ObservableEstimate e =
                estimate_magnetization(ansatz, state.params, axis, sampler);
            const double exact = exact_magnetization(rho, axis, n);
            const double dev = std::abs(e.mean - exact);
            csv << p.parameter << ',' << p.value << ",sigma_" << axis << ','
                << e.mean << ',' << e.error << ',' << exact << ',' << dev << ','
                << tolerance << ',' << (dev <= tolerance ? "pass" : "fail") << "\n";
        }
    }
    write_manifest(opt.out_dir, "benchmark", cfg, seed);
}

}  // namespace dss
