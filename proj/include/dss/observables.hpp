#pragma once

#include <string>
#include <vector>

#include "dss/ansatz.hpp"
#include "dss/operators.hpp"
#include "dss/sampler.hpp"

namespace dss {

// A Hermitian physical-lattice observable as a sum of few-site terms.
// With site_average set, estimates are divided by the term count
// (e.g. the spatially averaged magnetization (1/N) sum_i sigma_i^k).
struct ObservableSpec {
    std::string name;
    std::vector<LocalTerm> terms;
    bool site_average = false;
};

// (1/N) sum_i sigma_i^k for axis in {'x', 'y', 'z'}.
ObservableSpec magnetization_observable(char axis, int n_sites);

struct ObservableEstimate {
    double mean = 0.0;
    double error = 0.0;  // jackknife over chains
    long n_samples = 0;
};

// Local estimator A~(alpha) = sum_beta rho(alpha,beta)/rho(alpha,alpha)
// <beta|A|alpha>; the beta sum only visits configurations connected to
// alpha by the observable's terms. Throws on a non-finite diagonal.
Complex local_observable_estimator(const TransformerAnsatz& ansatz,
                                   const Eigen::VectorXd& theta,
                                   const SpinConfig& alpha,
                                   const ObservableSpec& obs);

// Diagonal-chain Monte Carlo average of the local estimator, with the
// diagonal sign carried as a reweighting factor and a jackknife error
// over independent chains.
ObservableEstimate estimate_observable(const TransformerAnsatz& ansatz,
                                       const Eigen::VectorXd& theta,
                                       const ObservableSpec& obs,
                                       const SamplerConfig& cfg);

ObservableEstimate estimate_magnetization(const TransformerAnsatz& ansatz,
                                          const Eigen::VectorXd& theta,
                                          char axis, const SamplerConfig& cfg);

// Exact average over the enumerated diagonal distribution (test path
// that removes Monte Carlo noise from the estimator itself).
double estimate_observable_enumerated(const TransformerAnsatz& ansatz,
                                      const Eigen::VectorXd& theta,
                                      const ObservableSpec& obs);

// Tr(rho^2) / (Tr rho)^2 on the fully enumerated matrix. N <= 7 only;
// larger systems throw (no Monte Carlo purity estimator is provided).
double purity_enumerated(const TransformerAnsatz& ansatz,
                         const Eigen::VectorXd& theta);

}  // namespace dss
