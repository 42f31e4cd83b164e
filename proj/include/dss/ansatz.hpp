#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "dss/operators.hpp"
#include "dss/spinspace.hpp"

namespace dss {

struct ModelConfig {
    int sites = 0;
    int conv1_channels = 8;
    int conv2_channels = 16;
    int heads = 2;
    std::string activation = "gelu";  // gelu | relu | tanh
    std::uint64_t seed = 0;
    // Row-major site ordering for grids; the circular convolution runs
    // along the flattened ring, attention is geometry-agnostic.
};

// Named slices of the flat parameter vector.
struct ParamLayout {
    int c1 = 0, c2 = 0, heads = 0, head_dim = 0;
    int conv1_w = 0, conv1_b = 0;
    int conv2_w = 0, conv2_b = 0;
    int attn_q = 0, attn_k = 0, attn_v = 0;
    int out_proj = 0;
    int dense_w = 0, dense_b = 0;
    int total = 0;

    static ParamLayout from(const ModelConfig& cfg);
};

// Forward evaluation and exact reverse-mode parameter derivatives of
// the density-operator network: two circular convolutions, one
// multi-head self-attention block with residual, mean pooling, and a
// dense head producing z = F0 + i F1. Amplitudes are Hermitian by the
// log-sum-exp symmetrization over the two site orderings.
class TransformerAnsatz {
  public:
    explicit TransformerAnsatz(ModelConfig cfg);

    const ModelConfig& config() const { return cfg_; }
    const ParamLayout& layout() const { return layout_; }
    int parameter_count() const { return layout_.total; }

    // Weights ~ N(0, 1/fan_in), biases zero; deterministic per seed.
    Eigen::VectorXd init_params() const;

    Complex raw_forward(const Eigen::VectorXd& theta, const SpinConfig& left,
                        const SpinConfig& right) const;

    Complex log_density(const Eigen::VectorXd& theta, const JointConfig& x) const;
    Eigen::VectorXcd log_density_batch(const Eigen::VectorXd& theta,
                                       const std::vector<JointConfig>& xs) const;

    struct LogDerivatives {
        Complex log_density;
        Eigen::VectorXcd derivs;  // d log rho / d theta_i, one per parameter
    };
    LogDerivatives log_derivatives(const Eigen::VectorXd& theta,
                                   const JointConfig& x) const;

    // exp(log_density) over all joint configurations, trace-normalized.
    Eigen::MatrixXcd enumerate_full_matrix(const Eigen::VectorXd& theta) const;

    // Attention weight rows of the last head for one ordered pair
    // (test hook: rows sum to one).
    std::vector<Eigen::MatrixXd> attention_weights(const Eigen::VectorXd& theta,
                                                   const SpinConfig& left,
                                                   const SpinConfig& right) const;

  private:
    struct Cache;
    Complex forward(const Eigen::VectorXd& theta, const SpinConfig& left,
                    const SpinConfig& right, Cache* cache) const;
    Eigen::VectorXd backward_real(const Eigen::VectorXd& theta,
                                  const Cache& cache,
                                  const Eigen::RowVector2d& df) const;
    Eigen::VectorXcd backward(const Eigen::VectorXd& theta,
                              const Cache& cache) const;

    ModelConfig cfg_;
    ParamLayout layout_;
    int activation_ = 0;
};

}  // namespace dss
