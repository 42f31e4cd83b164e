#pragma once

#include <optional>
#include <string>

#include "dss/config.hpp"

namespace dss {

inline constexpr const char* kCodeVersion = "0.1.0";

// CSV schema versions; the headers below are locked by a test.
inline constexpr const char* kExactCsvHeader =
    "parameter,value,solver,sigma_x,sigma_y,sigma_z,purity,residual,wall_seconds";
inline constexpr const char* kEvaluateCsvHeader =
    "observable,mean,mc_error,n_samples";
inline constexpr const char* kBenchmarkCsvHeader =
    "parameter,value,observable,ansatz_mean,mc_error,exact,abs_dev,tolerance,pass";

struct DriverOptions {
    std::string out_dir = ".";
    std::optional<std::uint64_t> seed_override;
    std::string resume_path;  // train: resume checkpoint; evaluate: input
};

// Writes <out>/manifest.json ({command, config_hash, code_version,
// seed}) so a finished run is reproducible from its artifacts.
void write_manifest(const std::string& out_dir, const std::string& command,
                    const ExperimentConfig& cfg, std::uint64_t seed);

// Steady states over the sweep grid, one CSV row per point. ED for
// N <= 6, BiCGStab for N <= 8; larger systems are refused.
// Writes <out>/exact.csv.
void run_exact(const ExperimentConfig& cfg, const DriverOptions& opt);

// Variational optimization at the model's base point. Writes
// <out>/train_log.jsonl and <out>/checkpoint.bin.
void run_train(const ExperimentConfig& cfg, const DriverOptions& opt);

// Magnetizations of a trained checkpoint. Writes <out>/evaluate.csv.
void run_evaluate(const ExperimentConfig& cfg, const DriverOptions& opt);

// Trains at every sweep point and compares magnetizations against the
// exact steady state. Writes <out>/benchmark.csv.
void run_benchmark(const ExperimentConfig& cfg, const DriverOptions& opt,
                   double tolerance = 0.02);

}  // namespace dss
