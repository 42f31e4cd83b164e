#pragma once

#include <array>
#include <string>
#include <vector>

#include <json.hpp>

#include "dss/ansatz.hpp"
#include "dss/operators.hpp"
#include "dss/sampler.hpp"
#include "dss/vmc.hpp"

namespace dss {

// Physical model section. `kind` selects the Hamiltonian family:
//   tfi_chain        - periodic transverse-field Ising chain (V, g)
//   tfi_grid         - rows x cols periodic Ising grid (V, g)
//   heisenberg_chain - periodic XYZ chain with fields (J, B)
// All couplings are in units of the uniform lowering rate gamma.
struct ModelSection {
    std::string kind = "tfi_chain";
    int sites = 4;
    int rows = 2, cols = 2;  // tfi_grid only
    double V = 2.0;
    double g = 1.0;
    std::array<double, 3> J{0.0, 0.0, 1.0};
    std::array<double, 3> B{0.0, 0.0, 0.0};
    double gamma = 1.0;
};

// One swept scalar per run; an empty grid means a single point at the
// model's base value. Valid names: g, V, gamma, Jx, Jy, Jz, Bx, By, Bz.
struct SweepSection {
    std::string parameter;
    std::vector<double> values;
};

struct OptimizerSection {
    std::string kind = "sgd";  // sgd | adam
    long iterations = 2000;
    long checkpoint_every = 200;
    ScheduleSpec learning_rate{0.0061, 30000, 40000, 0.001};
    ScheduleSpec diagonal_shift{0.004, 30000, 40000, 0.01};
};

struct ExperimentConfig {
    ModelSection model;
    ModelConfig ansatz;  // sites derived from the model section
    SamplerConfig sampler;
    long eval_samples_per_chain = 2048;  // evaluate/benchmark draws
    OptimizerSection optimizer;
    SweepSection sweep;
    std::string output_dir = ".";
    std::uint64_t seed = 0;
    nlohmann::json raw;  // the parsed document, with defaults applied
};

int model_sites(const ModelSection& m);

// Parse with defaults; unknown keys raise (typo protection).
ExperimentConfig parse_experiment_config(const nlohmann::json& doc);
ExperimentConfig load_experiment_config(const std::string& path);

// Hamiltonian at a sweep point: the named parameter (may be empty for
// the base point) overrides the model section's value.
HamiltonianSpec build_hamiltonian(const ModelSection& m,
                                  const std::string& sweep_parameter = "",
                                  double sweep_value = 0.0);

SuperOperator build_superoperator(const ModelSection& m,
                                  const std::string& sweep_parameter = "",
                                  double sweep_value = 0.0);

// FNV-1a hash of the canonical JSON dump, as fixed-width hex.
std::string config_hash(const nlohmann::json& doc);

}  // namespace dss
