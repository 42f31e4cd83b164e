#pragma once

#include <functional>
#include <iosfwd>
#include <optional>
#include <string>

#include "dss/ansatz.hpp"
#include "dss/operators.hpp"
#include "dss/sampler.hpp"

namespace dss {

struct ScheduleSpec {
    double base = 0.0;
    long switch_step = 0;
    long decay_steps = 1;
    double floor_fraction = 0.0;
};

// Constant up to switch_step, then cosine decay over decay_steps down
// to the additive floor; clamped at the floor beyond switch + decay.
double schedule_value(const ScheduleSpec& spec, long step);

// Estimator view of a batch: weighted configurations with filled
// log-densities, log-derivatives, local costs and the
// derivative-weighted connected sums. Flagged (non-finite) samples are
// dropped with their weight renormalized away.
struct VmcBatch {
    std::vector<JointConfig> configs;
    std::vector<double> weights;   // sums to 1 over unflagged rows
    long n_samples = 0;            // raw sample count behind the weights
    Eigen::VectorXcd log_densities;
    Eigen::MatrixXcd log_derivs;   // rows x parameters
    Eigen::VectorXcd local_costs;  // local estimator of L rho / rho
    Eigen::MatrixXcd weighted_derivs;  // rows x parameters, the T-sum
    long flagged = 0;
};

// Local estimator sum_{x'} L(x, x') rho(x')/rho(x), ratios in log form.
Complex local_cost(const TransformerAnsatz& ansatz, const Eigen::VectorXd& theta,
                   const JointConfig& x, const SuperOperator& s);

// Fills every estimator column for the given weighted configurations.
// Coincident configurations may appear multiple times; weights are
// per-row. Derivative evaluations are cached across rows and connected
// configurations.
VmcBatch fill_estimators(const TransformerAnsatz& ansatz,
                         const Eigen::VectorXd& theta, const SuperOperator& s,
                         std::vector<JointConfig> configs,
                         std::vector<double> weights, long n_samples);

struct CostGrad {
    double cost = 0.0;
    double cost_err = 0.0;
    Eigen::VectorXd grad;
};

// cost = <|local cost|^2>, gradient in the real-parameter form
//   2 Re( <conj(Lc) T_i> - cost <conj(O_i)> ).
CostGrad estimate_cost_and_grad(const VmcBatch& batch);

// Centered covariance of the log-derivatives, real part.
Eigen::MatrixXd metric_tensor(const VmcBatch& batch);

// Solves (S + shift I) delta = grad; falls back to grad/shift on
// breakdown (reported through the optional flag).
Eigen::VectorXd sr_precondition(const Eigen::MatrixXd& metric,
                                const Eigen::VectorXd& grad, double shift,
                                bool* fallback = nullptr);

struct OptimizerConfig {
    std::string kind = "sgd";  // sgd | adam
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

struct TrainConfig {
    ModelConfig model;
    SamplerConfig sampler;
    OptimizerConfig optimizer;
    ScheduleSpec learning_rate;
    ScheduleSpec diagonal_shift;
    long iterations = 1000;
    long checkpoint_every = 200;
    std::uint64_t master_seed = 0;
    std::string checkpoint_path;  // empty disables checkpointing
};

struct TrainState {
    ModelConfig model;
    Eigen::VectorXd params;
    Eigen::VectorXd moment1, moment2;  // adam moments, zero for sgd
    long step = 0;
    std::uint64_t master_seed = 0;
    std::string optimizer_kind = "sgd";
};

struct IterationRecord {
    long step;
    double cost;
    double cost_err;
    double acceptance;
    double learning_rate;
    double shift;
};

// Full optimization loop: sample, estimate, precondition, update.
// One JSON line per iteration goes to `log` when given. Starts from
// `resume` if provided, otherwise from seeded initialization.
TrainState train(const SuperOperator& s, const TrainConfig& cfg,
                 std::ostream* log = nullptr,
                 const TrainState* resume = nullptr,
                 const std::function<void(const IterationRecord&)>& on_iteration = {});

}  // namespace dss
