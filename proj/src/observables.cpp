#include "dss/observables.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <unordered_map>

#include "dss/parallel.hpp"

namespace dss {

namespace {

int8_t bit_to_spin(unsigned bit) { return bit ? int8_t{-1} : int8_t{1}; }
unsigned spin_to_bit(int8_t spin) { return spin < 0 ? 1u : 0u; }

Eigen::Matrix2cd pauli(char axis) {
    switch (axis) {
        case 'x': return pauli_x();
        case 'y': return pauli_y();
        case 'z': return pauli_z();
        default: throw std::invalid_argument("axis must be one of x, y, z");
    }
}

// sign(Re rho(alpha, alpha)) given z = log rho(alpha, alpha).
double diagonal_sign(Complex log_diag) {
    return std::cos(log_diag.imag()) < 0.0 ? -1.0 : 1.0;
}

}  // namespace

ObservableSpec magnetization_observable(char axis, int n_sites) {
    ObservableSpec obs;
    obs.name = std::string("sigma_") + axis;
    obs.site_average = true;
    const Eigen::Matrix2cd m = pauli(axis);
    for (int i = 0; i < n_sites; ++i) obs.terms.push_back({{i}, m, Complex{1.0, 0.0}});
    return obs;
}

Complex local_observable_estimator(const TransformerAnsatz& ansatz,
                                   const Eigen::VectorXd& theta,
                                   const SpinConfig& alpha,
                                   const ObservableSpec& obs) {
    const Complex log_diag = ansatz.log_density(theta, {alpha, alpha});
    if (!std::isfinite(log_diag.real()) || !std::isfinite(log_diag.imag()))
        throw std::runtime_error("vanishing diagonal amplitude in local estimator");

    Complex total{0.0, 0.0};
    for (const auto& term : obs.terms) {
        const int k = static_cast<int>(term.sites.size());
        const int dim = 1 << k;
        unsigned col = 0;
        for (int s : term.sites)
            col = (col << 1) | spin_to_bit(alpha[static_cast<std::size_t>(s)]);
        for (unsigned row = 0; row < static_cast<unsigned>(dim); ++row) {
            const Complex v = term.coefficient * term.matrix(row, col);
            if (std::abs(v) < 1e-15) continue;
            if (row == col) {
                total += v;
                continue;
            }
            SpinConfig beta = alpha;
            for (int b = 0; b < k; ++b)
                beta[static_cast<std::size_t>(term.sites[static_cast<std::size_t>(b)])] =
                    bit_to_spin((row >> (k - 1 - b)) & 1u);
            total += v * std::exp(ansatz.log_density(theta, {alpha, beta}) - log_diag);
        }
    }
    if (obs.site_average && !obs.terms.empty())
        total /= static_cast<double>(obs.terms.size());
    return total;
}

ObservableEstimate estimate_observable(const TransformerAnsatz& ansatz,
                                       const Eigen::VectorXd& theta,
                                       const ObservableSpec& obs,
                                       const SamplerConfig& cfg) {
    const SampleBatch batch = sample_diagonal(ansatz, theta, cfg);
    const int n = ansatz.config().sites;

    // Diagonal chains revisit few distinct configurations at these
    // sizes; evaluate the local estimator once per distinct alpha.
    std::unordered_map<std::uint64_t, int> slot_of;
    std::vector<SpinConfig> distinct;
    std::vector<int> sample_slot(batch.configs.size());
    for (std::size_t i = 0; i < batch.configs.size(); ++i) {
        const auto key = config_to_index(batch.configs[i].left);
        const auto [it, inserted] =
            slot_of.emplace(key, static_cast<int>(distinct.size()));
        if (inserted) distinct.push_back(batch.configs[i].left);
        sample_slot[i] = it->second;
    }
    (void)n;

    std::vector<double> value(distinct.size());
    parallel_for(static_cast<int>(distinct.size()), [&](int s) {
        const Complex a = local_observable_estimator(
            ansatz, theta, distinct[static_cast<std::size_t>(s)], obs);
        value[static_cast<std::size_t>(s)] = a.real();
    });

    // The chain targets |rho(alpha,alpha)|; the physical weight carries
    // the diagonal's sign, so estimate E[s A~] / E[s] with a jackknife
    // over chains.
    const int chains = batch.n_chains;
    const long per_chain = batch.samples_per_chain;
    Eigen::VectorXd num = Eigen::VectorXd::Zero(chains);
    Eigen::VectorXd den = Eigen::VectorXd::Zero(chains);
    for (std::size_t i = 0; i < batch.configs.size(); ++i) {
        const int chain = static_cast<int>(static_cast<long>(i) / per_chain);
        const double s = diagonal_sign(batch.log_densities(static_cast<Eigen::Index>(i)));
        num(chain) += s * value[static_cast<std::size_t>(sample_slot[i])];
        den(chain) += s;
    }
    const double num_total = num.sum();
    const double den_total = den.sum();
    if (std::abs(den_total) < 1e-12)
        throw std::runtime_error("diagonal sign weights cancel; cannot estimate");

    ObservableEstimate out;
    out.mean = num_total / den_total;
    out.n_samples = static_cast<long>(batch.configs.size());
    if (chains > 1) {
        Eigen::VectorXd loo(chains);
        for (int c = 0; c < chains; ++c)
            loo(c) = (num_total - num(c)) / (den_total - den(c));
        const double center = loo.mean();
        out.error = std::sqrt((chains - 1.0) / chains *
                              (loo.array() - center).square().sum());
    }
    return out;
}

ObservableEstimate estimate_magnetization(const TransformerAnsatz& ansatz,
                                          const Eigen::VectorXd& theta,
                                          char axis, const SamplerConfig& cfg) {
    return estimate_observable(
        ansatz, theta, magnetization_observable(axis, ansatz.config().sites), cfg);
}

double estimate_observable_enumerated(const TransformerAnsatz& ansatz,
                                      const Eigen::VectorXd& theta,
                                      const ObservableSpec& obs) {
    const int n = ansatz.config().sites;
    if (n > 7) throw std::invalid_argument("enumeration unsupported beyond 7 sites");
    const std::uint64_t dim = 1ull << n;

    // Stabilize exp(log rho) against a global offset.
    std::vector<Complex> log_diag(dim);
    double max_re = -std::numeric_limits<double>::infinity();
    for (std::uint64_t a = 0; a < dim; ++a) {
        const SpinConfig alpha = index_to_config(a, n);
        log_diag[a] = ansatz.log_density(theta, {alpha, alpha});
        max_re = std::max(max_re, log_diag[a].real());
    }
    double num = 0.0, den = 0.0;
    for (std::uint64_t a = 0; a < dim; ++a) {
        const SpinConfig alpha = index_to_config(a, n);
        const double d = std::exp(log_diag[a] - max_re).real();
        num += d * local_observable_estimator(ansatz, theta, alpha, obs).real();
        den += d;
    }
    return num / den;
}

double purity_enumerated(const TransformerAnsatz& ansatz,
                         const Eigen::VectorXd& theta) {
    if (ansatz.config().sites > 7)
        throw std::invalid_argument(
            "purity is enumeration-only and unsupported beyond 7 sites");
    const Eigen::MatrixXcd rho = ansatz.enumerate_full_matrix(theta);
    return (rho * rho).trace().real();
}

}  // namespace dss
