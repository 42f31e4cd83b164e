#include "dss/sampler.hpp"

#include <cmath>
#include <numbers>

#include "dss/parallel.hpp"

namespace dss {

namespace {

std::uint64_t mix64(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

long default_burn_in(int doubled_sites) { return 10L * doubled_sites; }
long default_thinning(int doubled_sites) { return doubled_sites; }

struct DiagonalTarget {
    // Stationary weight |rho(a, a)|: the log-weight is Re log rho.
    static JointConfig propose(const JointConfig& x, SplitRng& rng) {
        JointConfig xp = x;
        const int site = rng.next_int(x.sites());
        xp.left[static_cast<std::size_t>(site)] =
            static_cast<int8_t>(-xp.left[static_cast<std::size_t>(site)]);
        xp.right = xp.left;
        return xp;
    }
    static double log_weight(Complex log_density) { return log_density.real(); }
};

struct JointTarget {
    static JointConfig propose(const JointConfig& x, SplitRng& rng) {
        return propose_local(x, rng);
    }
    // P proportional to |rho|^2.
    static double log_weight(Complex log_density) {
        return 2.0 * log_density.real();
    }
};

template <typename Target>
void step(ChainState& state, const TransformerAnsatz& ansatz,
          const Eigen::VectorXd& theta) {
    const JointConfig proposal = Target::propose(state.current, state.rng);
    const Complex proposal_log_density = ansatz.log_density(theta, proposal);
    const double log_ratio = Target::log_weight(proposal_log_density) -
                             Target::log_weight(state.current_log_density);
    ++state.step_count;
    if (log_ratio >= 0.0 ||
        state.rng.next_double() < std::exp(log_ratio)) {
        state.current = proposal;
        state.current_log_density = proposal_log_density;
        ++state.accept_count;
    }
}

template <typename Target>
SampleBatch run_chains(const TransformerAnsatz& ansatz,
                       const Eigen::VectorXd& theta, const SamplerConfig& cfg,
                       int flips_per_site_pool) {
    if (cfg.n_chains < 1 || cfg.samples_per_chain < 1)
        throw std::invalid_argument("sampler: chain and sample counts must be positive");
    const int n = ansatz.config().sites;
    const long burn_in =
        cfg.burn_in >= 0 ? cfg.burn_in : default_burn_in(flips_per_site_pool);
    const long thinning =
        cfg.thinning > 0 ? cfg.thinning : default_thinning(flips_per_site_pool);

    SampleBatch batch;
    batch.n_chains = cfg.n_chains;
    batch.samples_per_chain = cfg.samples_per_chain;
    const long total =
        static_cast<long>(cfg.n_chains) * cfg.samples_per_chain;
    batch.configs.resize(static_cast<std::size_t>(total));
    batch.log_densities.resize(total);

    std::vector<double> acceptance(static_cast<std::size_t>(cfg.n_chains));
    std::vector<char> frozen(static_cast<std::size_t>(cfg.n_chains), 0);

    parallel_for(cfg.n_chains, [&](int chain) {
        ChainState state;
        state.rng = SplitRng::derive(cfg.seed, static_cast<std::uint64_t>(chain));
        SpinConfig alpha(static_cast<std::size_t>(n)), beta;
        for (auto& s : alpha)
            s = state.rng.next_int(2) ? int8_t{1} : int8_t{-1};
        if constexpr (std::is_same_v<Target, DiagonalTarget>) {
            beta = alpha;
        } else {
            beta.resize(static_cast<std::size_t>(n));
            for (auto& s : beta)
                s = state.rng.next_int(2) ? int8_t{1} : int8_t{-1};
        }
        state.current = {std::move(alpha), std::move(beta)};
        state.current_log_density = ansatz.log_density(theta, state.current);

        for (long i = 0; i < burn_in; ++i) step<Target>(state, ansatz, theta);
        if (burn_in > 0 && state.accept_count < state.step_count / 100)
            frozen[static_cast<std::size_t>(chain)] = 1;

        for (long k = 0; k < cfg.samples_per_chain; ++k) {
            for (long i = 0; i < thinning; ++i) step<Target>(state, ansatz, theta);
            const long idx = static_cast<long>(chain) * cfg.samples_per_chain + k;
            batch.configs[static_cast<std::size_t>(idx)] = state.current;
            batch.log_densities[idx] = state.current_log_density;
        }
        acceptance[static_cast<std::size_t>(chain)] =
            state.step_count > 0
                ? static_cast<double>(state.accept_count) /
                      static_cast<double>(state.step_count)
                : 1.0;
    });

    double mean_acceptance = 0.0;
    for (double a : acceptance) mean_acceptance += a;
    batch.acceptance_rate = mean_acceptance / cfg.n_chains;
    for (char f : frozen) batch.frozen_warning = batch.frozen_warning || f;
    return batch;
}

}  // namespace

SplitRng SplitRng::derive(std::uint64_t master, std::uint64_t stream) {
    return SplitRng{mix64(master + 0x9e3779b97f4a7c15ULL * (stream + 1))};
}

std::uint64_t SplitRng::next_u64() {
    state += 0x9e3779b97f4a7c15ULL;
    return mix64(state);
}

double SplitRng::next_double() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

int SplitRng::next_int(int bound) {
    return static_cast<int>(next_double() * bound);
}

double SplitRng::next_gauss() {
    // Box-Muller, one value per call.
    double u = next_double();
    if (u <= 0.0) u = 0x1.0p-53;
    return std::sqrt(-2.0 * std::log(u)) *
           std::cos(2.0 * std::numbers::pi * next_double());
}

JointConfig propose_local(const JointConfig& x, SplitRng& rng) {
    JointConfig xp = x;
    const int n = x.sites();
    const int site = rng.next_int(2 * n);
    auto& value = site < n ? xp.left[static_cast<std::size_t>(site)]
                           : xp.right[static_cast<std::size_t>(site - n)];
    value = static_cast<int8_t>(-value);
    return xp;
}

void metropolis_step(ChainState& state, const TransformerAnsatz& ansatz,
                     const Eigen::VectorXd& theta) {
    step<JointTarget>(state, ansatz, theta);
}

SampleBatch sample_joint(const TransformerAnsatz& ansatz,
                         const Eigen::VectorXd& theta,
                         const SamplerConfig& cfg) {
    return run_chains<JointTarget>(ansatz, theta, cfg,
                                   2 * ansatz.config().sites);
}

SampleBatch sample_diagonal(const TransformerAnsatz& ansatz,
                            const Eigen::VectorXd& theta,
                            const SamplerConfig& cfg) {
    return run_chains<DiagonalTarget>(ansatz, theta, cfg,
                                      2 * ansatz.config().sites);
}

}  // namespace dss
