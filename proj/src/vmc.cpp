#include "dss/vmc.hpp"

#include <cmath>
#include <numbers>
#include <ostream>
#include <unordered_map>

#include "dss/checkpoint.hpp"
#include "dss/parallel.hpp"
#include "nlohmann/json.hpp"

namespace dss {

namespace {

// Shared evaluation cache for one parameter snapshot, keyed by the
// packed joint index.
struct DerivCache {
    std::unordered_map<std::uint64_t, int> slots;
    std::vector<JointConfig> configs;
    std::vector<Complex> log_rho;
    std::vector<Eigen::VectorXcd> derivs;
};

int cache_slot(DerivCache& cache, const JointConfig& x) {
    const auto [it, inserted] =
        cache.slots.emplace(joint_to_index(x), static_cast<int>(cache.log_rho.size()));
    if (inserted) {
        cache.configs.push_back(x);
        cache.log_rho.emplace_back();
        cache.derivs.emplace_back();
    }
    return it->second;
}

}  // namespace

double schedule_value(const ScheduleSpec& spec, long step) {
    if (step < spec.switch_step) return spec.base;
    const long offset = std::min(step - spec.switch_step, spec.decay_steps);
    const double phase = std::numbers::pi * static_cast<double>(offset) /
                         static_cast<double>(spec.decay_steps);
    const double floor = spec.floor_fraction * spec.base;
    return floor + (spec.base - floor) * (1.0 + std::cos(phase)) / 2.0;
}

Complex local_cost(const TransformerAnsatz& ansatz, const Eigen::VectorXd& theta,
                   const JointConfig& x, const SuperOperator& s) {
    const Complex log_rho_x = ansatz.log_density(theta, x);
    Complex sum{0.0, 0.0};
    for (const auto& el : s.connected_elements(x))
        sum += el.amplitude *
               std::exp(ansatz.log_density(theta, el.config) - log_rho_x);
    return sum;
}

VmcBatch fill_estimators(const TransformerAnsatz& ansatz,
                         const Eigen::VectorXd& theta, const SuperOperator& s,
                         std::vector<JointConfig> configs,
                         std::vector<double> weights, long n_samples) {
    if (configs.size() != weights.size())
        throw std::invalid_argument("configs and weights differ in length");
    const Eigen::Index n_rows = static_cast<Eigen::Index>(configs.size());
    const int n_params = ansatz.parameter_count();

    VmcBatch batch;
    batch.n_samples = n_samples;

    // Row plans: connected elements per row, with every configuration
    // interned into the shared cache.
    std::vector<std::vector<std::pair<int, Complex>>> plans(
        static_cast<std::size_t>(configs.size()));
    std::vector<int> row_slot(configs.size());
    DerivCache cache;
    for (std::size_t i = 0; i < configs.size(); ++i) {
        row_slot[i] = cache_slot(cache, configs[i]);
        for (const auto& el : s.connected_elements(configs[i]))
            plans[i].emplace_back(cache_slot(cache, el.config), el.amplitude);
    }

    const int n_distinct = static_cast<int>(cache.log_rho.size());
    parallel_for(n_distinct, [&](int slot) {
        const JointConfig& x = cache.configs[static_cast<std::size_t>(slot)];
        auto ld = ansatz.log_derivatives(theta, x);
        cache.log_rho[static_cast<std::size_t>(slot)] = ld.log_density;
        cache.derivs[static_cast<std::size_t>(slot)] = std::move(ld.derivs);
    });

    batch.log_densities.resize(n_rows);
    batch.local_costs.resize(n_rows);
    batch.log_derivs.resize(n_rows, n_params);
    batch.weighted_derivs.resize(n_rows, n_params);

    for (Eigen::Index i = 0; i < n_rows; ++i) {
        const std::size_t ui = static_cast<std::size_t>(i);
        const int slot = row_slot[ui];
        const Complex log_rho_x = cache.log_rho[static_cast<std::size_t>(slot)];
        batch.log_densities[i] = log_rho_x;
        batch.log_derivs.row(i) =
            cache.derivs[static_cast<std::size_t>(slot)].transpose();
        Complex lc{0.0, 0.0};
        Eigen::RowVectorXcd t_row = Eigen::RowVectorXcd::Zero(n_params);
        for (const auto& [conn_slot, amplitude] : plans[ui]) {
            const std::size_t us = static_cast<std::size_t>(conn_slot);
            const Complex ratio =
                amplitude * std::exp(cache.log_rho[us] - log_rho_x);
            lc += ratio;
            t_row += ratio * cache.derivs[us].transpose();
        }
        const bool ok = std::isfinite(lc.real()) && std::isfinite(lc.imag()) &&
                        t_row.allFinite();
        if (!ok) {
            ++batch.flagged;
            weights[ui] = 0.0;
            lc = Complex{0.0, 0.0};
            t_row.setZero();
        }
        batch.local_costs[i] = lc;
        batch.weighted_derivs.row(i) = t_row;
    }

    double total_weight = 0.0;
    for (double w : weights) total_weight += w;
    if (total_weight <= 0.0)
        throw std::runtime_error("all samples flagged non-finite");
    for (double& w : weights) w /= total_weight;
    batch.configs = std::move(configs);
    batch.weights = std::move(weights);
    return batch;
}

CostGrad estimate_cost_and_grad(const VmcBatch& batch) {
    const Eigen::Index n = batch.local_costs.size();
    if (n == 0) throw std::invalid_argument("empty batch");
    const Eigen::Map<const Eigen::VectorXd> w(batch.weights.data(), n);

    const Eigen::ArrayXd abs2 = batch.local_costs.array().abs2();
    const double cost = (w.array() * abs2).sum();
    const double second = (w.array() * abs2.square()).sum();
    CostGrad out;
    out.cost = cost;
    out.cost_err =
        batch.n_samples > 1
            ? std::sqrt(std::max(0.0, second - cost * cost) /
                        static_cast<double>(batch.n_samples))
            : 0.0;

    const Eigen::VectorXcd weighted_conj_lc =
        (w.array() * batch.local_costs.conjugate().array()).matrix();
    const Eigen::VectorXcd first_term =
        batch.weighted_derivs.transpose() * weighted_conj_lc;
    const Eigen::VectorXcd mean_derivs =
        batch.log_derivs.transpose() * w.cast<Complex>();
    out.grad =
        2.0 * (first_term - cost * mean_derivs.conjugate()).real();
    return out;
}

Eigen::MatrixXd metric_tensor(const VmcBatch& batch) {
    const Eigen::Index n = batch.log_derivs.rows();
    const Eigen::Map<const Eigen::VectorXd> w(batch.weights.data(), n);
    const Eigen::VectorXcd mean =
        batch.log_derivs.transpose() * w.cast<Complex>();
    const Eigen::MatrixXcd weighted =
        w.cast<Complex>().asDiagonal() * batch.log_derivs;
    const Eigen::MatrixXcd second = batch.log_derivs.adjoint() * weighted;
    return (second - mean.conjugate() * mean.transpose()).real();
}

Eigen::VectorXd sr_precondition(const Eigen::MatrixXd& metric,
                                const Eigen::VectorXd& grad, double shift,
                                bool* fallback) {
    if (shift <= 0.0) throw std::invalid_argument("diagonal shift must be positive");
    if (fallback) *fallback = false;
    Eigen::MatrixXd shifted = metric;
    shifted.diagonal().array() += shift;
    Eigen::LDLT<Eigen::MatrixXd> ldlt(shifted);
    if (ldlt.info() == Eigen::Success) {
        Eigen::VectorXd delta = ldlt.solve(grad);
        // One step of iterative refinement.
        delta += ldlt.solve(grad - shifted * delta);
        const double residual = (shifted * delta - grad).norm();
        if (delta.allFinite() && residual <= 1e-10 * std::max(grad.norm(), 1e-300))
            return delta;
    }
    if (fallback) *fallback = true;
    return grad / shift;
}

TrainState train(const SuperOperator& s, const TrainConfig& cfg,
                 std::ostream* log, const TrainState* resume,
                 const std::function<void(const IterationRecord&)>& on_iteration) {
    const TransformerAnsatz ansatz(cfg.model);
    TrainState state;
    if (resume) {
        state = *resume;
        if (state.params.size() != ansatz.parameter_count())
            throw std::invalid_argument("resume state does not match model");
    } else {
        state.model = cfg.model;
        state.params = ansatz.init_params();
        state.moment1 = Eigen::VectorXd::Zero(ansatz.parameter_count());
        state.moment2 = Eigen::VectorXd::Zero(ansatz.parameter_count());
        state.step = 0;
        state.master_seed = cfg.master_seed;
        state.optimizer_kind = cfg.optimizer.kind;
    }
    const bool adam = cfg.optimizer.kind == "adam";
    if (!adam && cfg.optimizer.kind != "sgd")
        throw std::invalid_argument("unknown optimizer: " + cfg.optimizer.kind);

    long flagged_total = 0;
    long samples_total = 0;

    for (long step = state.step; step < cfg.iterations; ++step) {
        SamplerConfig sampler_cfg = cfg.sampler;
        sampler_cfg.seed =
            SplitRng::derive(cfg.master_seed, static_cast<std::uint64_t>(step))
                .state;
        const SampleBatch samples = sample_joint(ansatz, state.params, sampler_cfg);

        // Aggregate coincident draws; estimators see weights, not copies.
        std::unordered_map<std::uint64_t, std::size_t> index;
        std::vector<JointConfig> configs;
        std::vector<double> weights;
        const long n_total = static_cast<long>(samples.configs.size());
        for (const auto& x : samples.configs) {
            const auto [it, inserted] = index.emplace(joint_to_index(x), configs.size());
            if (inserted) {
                configs.push_back(x);
                weights.push_back(0.0);
            }
            weights[it->second] += 1.0 / static_cast<double>(n_total);
        }

        const VmcBatch batch = fill_estimators(ansatz, state.params, s,
                                               std::move(configs),
                                               std::move(weights), n_total);
        flagged_total += batch.flagged;
        samples_total += n_total;
        if (flagged_total * 1000 > samples_total)
            throw std::runtime_error("more than 0.1% of samples flagged non-finite");

        const CostGrad cg = estimate_cost_and_grad(batch);
        if (!std::isfinite(cg.cost)) {
            if (!cfg.checkpoint_path.empty())
                save_checkpoint(cfg.checkpoint_path, state);
            throw std::runtime_error("non-finite cost at step " +
                                     std::to_string(step));
        }

        const double lr = schedule_value(cfg.learning_rate, step);
        const double shift = schedule_value(cfg.diagonal_shift, step);
        const Eigen::MatrixXd metric = metric_tensor(batch);
        const Eigen::VectorXd delta = sr_precondition(metric, cg.grad, shift);

        if (adam) {
            state.moment1 = cfg.optimizer.beta1 * state.moment1 +
                            (1.0 - cfg.optimizer.beta1) * delta;
            state.moment2 =
                cfg.optimizer.beta2 * state.moment2.array().matrix() +
                (1.0 - cfg.optimizer.beta2) * delta.array().square().matrix();
            const double c1 =
                1.0 - std::pow(cfg.optimizer.beta1, static_cast<double>(step + 1));
            const double c2 =
                1.0 - std::pow(cfg.optimizer.beta2, static_cast<double>(step + 1));
            state.params -=
                lr * ((state.moment1 / c1).array() /
                      ((state.moment2 / c2).array().sqrt() + cfg.optimizer.epsilon))
                         .matrix();
        } else {
            state.params -= lr * delta;
        }
        state.step = step + 1;

        if (log) {
            nlohmann::json line = {{"step", step},        {"cost", cg.cost},
                                   {"cost_err", cg.cost_err}, {"accept", samples.acceptance_rate},
                                   {"lr", lr},            {"shift", shift}};
            (*log) << line.dump() << "\n";
        }
        if (on_iteration)
            on_iteration({step, cg.cost, cg.cost_err, samples.acceptance_rate,
                          lr, shift});
        if (!cfg.checkpoint_path.empty() && cfg.checkpoint_every > 0 &&
            (step + 1) % cfg.checkpoint_every == 0)
            save_checkpoint(cfg.checkpoint_path, state);
    }
    if (!cfg.checkpoint_path.empty()) save_checkpoint(cfg.checkpoint_path, state);
    return state;
}

}  // namespace dss
