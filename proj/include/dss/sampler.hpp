#pragma once

#include <cstdint>
#include <vector>

#include "dss/ansatz.hpp"
#include "dss/spinspace.hpp"

namespace dss {

// Counter-based splittable stream (splitmix64). Streams derived from
// one master seed are independent and lock-free.
struct SplitRng {
    std::uint64_t state = 0;

    static SplitRng derive(std::uint64_t master, std::uint64_t stream);
    std::uint64_t next_u64();
    double next_double();       // uniform in [0, 1)
    int next_int(int bound);    // uniform in [0, bound)
    double next_gauss();
};

struct SamplerConfig {
    int n_chains = 16;
    long burn_in = -1;           // attempted flips per chain; -1 -> 10 * 2N
    long thinning = -1;          // attempted flips between draws; -1 -> 2N
    long samples_per_chain = 64;
    std::uint64_t seed = 0;
};

struct ChainState {
    JointConfig current;
    Complex current_log_density{0.0, 0.0};
    SplitRng rng;
    long accept_count = 0;
    long step_count = 0;
};

struct SampleBatch {
    std::vector<JointConfig> configs;
    Eigen::VectorXcd log_densities;
    int n_chains = 0;
    long samples_per_chain = 0;
    double acceptance_rate = 0.0;
    bool frozen_warning = false;  // acceptance below 1% during burn-in
};

// Single-spin flip, site uniform over the 2N pooled copies. Symmetric.
JointConfig propose_local(const JointConfig& x, SplitRng& rng);

// One Metropolis update targeting P proportional to |rho|^2.
void metropolis_step(ChainState& state, const TransformerAnsatz& ansatz,
                     const Eigen::VectorXd& theta);

SampleBatch sample_joint(const TransformerAnsatz& ansatz,
                         const Eigen::VectorXd& theta, const SamplerConfig& cfg);

// Chain over diagonal configurations alpha with stationary weight
// |rho(alpha, alpha)|; configs carry left == right.
SampleBatch sample_diagonal(const TransformerAnsatz& ansatz,
                            const Eigen::VectorXd& theta,
                            const SamplerConfig& cfg);

}  // namespace dss
