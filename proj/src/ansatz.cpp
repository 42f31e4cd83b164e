#include "dss/ansatz.hpp"

#include <cmath>
#include <numbers>
#include <random>

namespace dss {

namespace {

constexpr Complex kI{0.0, 1.0};
constexpr int kTaps = 2;  // kernel is fixed at 2x1

enum Activation { kGelu = 0, kRelu = 1, kTanh = 2 };

double act_value(int kind, double x) {
    switch (kind) {
        case kGelu:
            return 0.5 * x * (1.0 + std::erf(x / std::numbers::sqrt2));
        case kRelu:
            return x > 0 ? x : 0.0;
        default:
            return std::tanh(x);
    }
}

double act_deriv(int kind, double x) {
    switch (kind) {
        case kGelu: {
            const double cdf = 0.5 * (1.0 + std::erf(x / std::numbers::sqrt2));
            const double pdf =
                std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi);
            return cdf + x * pdf;
        }
        case kRelu:
            return x > 0 ? 1.0 : 0.0;
        default: {
            const double t = std::tanh(x);
            return 1.0 - t * t;
        }
    }
}

// out(i, :) = in((i + shift) mod N, :)
template <typename Derived>
Eigen::MatrixXd rotate_rows(const Eigen::MatrixBase<Derived>& in, int shift) {
    const int n = static_cast<int>(in.rows());
    Eigen::MatrixXd out(in.rows(), in.cols());
    for (int i = 0; i < n; ++i)
        out.row(i) = in.row(((i + shift) % n + n) % n);
    return out;
}

using ConstMap = Eigen::Map<const Eigen::MatrixXd>;

void check_finite(const Eigen::MatrixXd& m, const char* layer) {
    if (!m.allFinite())
        throw std::runtime_error(std::string("non-finite activation in layer ") +
                                 layer);
}

}  // namespace

ParamLayout ParamLayout::from(const ModelConfig& cfg) {
    if (cfg.sites < 1) throw std::invalid_argument("model needs at least 1 site");
    if (cfg.conv1_channels < 1 || cfg.conv2_channels < 1 || cfg.heads < 1)
        throw std::invalid_argument("channel and head counts must be positive");
    if (cfg.conv2_channels % cfg.heads != 0)
        throw std::invalid_argument("conv2 channels must be divisible by heads");
    ParamLayout l;
    l.c1 = cfg.conv1_channels;
    l.c2 = cfg.conv2_channels;
    l.heads = cfg.heads;
    l.head_dim = cfg.conv2_channels / cfg.heads;
    int off = 0;
    auto slice = [&off](int count) {
        const int start = off;
        off += count;
        return start;
    };
    l.conv1_w = slice(kTaps * 2 * l.c1);
    l.conv1_b = slice(l.c1);
    l.conv2_w = slice(kTaps * l.c1 * l.c2);
    l.conv2_b = slice(l.c2);
    l.attn_q = slice(l.heads * l.c2 * l.head_dim);
    l.attn_k = slice(l.heads * l.c2 * l.head_dim);
    l.attn_v = slice(l.heads * l.c2 * l.head_dim);
    l.out_proj = slice(l.c2 * l.c2);
    l.dense_w = slice(l.c2 * 2);
    l.dense_b = slice(2);
    l.total = off;
    return l;
}

struct TransformerAnsatz::Cache {
    Eigen::MatrixXd x0;        // N x 2 stacked input
    Eigen::MatrixXd z1, x1;    // conv1 pre/post activation, N x C1
    Eigen::MatrixXd z2, xf;    // conv2 pre/post activation, N x C2
    std::vector<Eigen::MatrixXd> q, k, v, omega;  // per head
    Eigen::MatrixXd concat;    // N x C2 concatenated heads
    Eigen::RowVectorXd pooled; // 1 x C2
};

TransformerAnsatz::TransformerAnsatz(ModelConfig cfg)
    : cfg_(std::move(cfg)), layout_(ParamLayout::from(cfg_)) {
    if (cfg_.activation == "gelu")
        activation_ = kGelu;
    else if (cfg_.activation == "relu")
        activation_ = kRelu;
    else if (cfg_.activation == "tanh")
        activation_ = kTanh;
    else
        throw std::invalid_argument("unknown activation: " + cfg_.activation);
}

Eigen::VectorXd TransformerAnsatz::init_params() const {
    Eigen::VectorXd theta = Eigen::VectorXd::Zero(layout_.total);
    std::mt19937_64 rng(cfg_.seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    auto fill = [&](int offset, int count, double fan_in) {
        const double sigma = 1.0 / std::sqrt(fan_in);
        for (int i = 0; i < count; ++i) theta[offset + i] = sigma * gauss(rng);
    };
    const auto& l = layout_;
    fill(l.conv1_w, kTaps * 2 * l.c1, kTaps * 2.0);
    fill(l.conv2_w, kTaps * l.c1 * l.c2, kTaps * static_cast<double>(l.c1));
    fill(l.attn_q, l.heads * l.c2 * l.head_dim, l.c2);
    fill(l.attn_k, l.heads * l.c2 * l.head_dim, l.c2);
    fill(l.attn_v, l.heads * l.c2 * l.head_dim, l.c2);
    fill(l.out_proj, l.c2 * l.c2, l.c2);
    fill(l.dense_w, l.c2 * 2, l.c2);
    return theta;
}

Complex TransformerAnsatz::forward(const Eigen::VectorXd& theta,
                                   const SpinConfig& left,
                                   const SpinConfig& right, Cache* cache) const {
    const int n = cfg_.sites;
    if (static_cast<int>(left.size()) != n || static_cast<int>(right.size()) != n)
        throw std::invalid_argument("configuration length does not match model");
    if (theta.size() != layout_.total)
        throw std::invalid_argument("parameter vector length mismatch");
    const auto& l = layout_;
    const double* p = theta.data();

    Eigen::MatrixXd x0(n, 2);
    for (int i = 0; i < n; ++i) {
        x0(i, 0) = static_cast<double>(left[static_cast<std::size_t>(i)]);
        x0(i, 1) = static_cast<double>(right[static_cast<std::size_t>(i)]);
    }

    Eigen::MatrixXd z1 =
        ConstMap(p + l.conv1_b, 1, l.c1).replicate(n, 1);
    for (int t = 0; t < kTaps; ++t)
        z1 += rotate_rows(x0, t) * ConstMap(p + l.conv1_w + t * 2 * l.c1, 2, l.c1);
    Eigen::MatrixXd x1 = z1.unaryExpr(
        [this](double v) { return act_value(activation_, v); });

    Eigen::MatrixXd z2 =
        ConstMap(p + l.conv2_b, 1, l.c2).replicate(n, 1);
    for (int t = 0; t < kTaps; ++t)
        z2 += rotate_rows(x1, t) *
              ConstMap(p + l.conv2_w + t * l.c1 * l.c2, l.c1, l.c2);
    Eigen::MatrixXd xf = z2.unaryExpr(
        [this](double v) { return act_value(activation_, v); });
    check_finite(xf, "conv");

    const int d = l.head_dim;
    const double scale = 1.0 / std::sqrt(static_cast<double>(d));
    Eigen::MatrixXd concat(n, l.c2);
    std::vector<Eigen::MatrixXd> qs, ks, vs, omegas;
    for (int mu = 0; mu < l.heads; ++mu) {
        const int woff = mu * l.c2 * d;
        Eigen::MatrixXd q = xf * ConstMap(p + l.attn_q + woff, l.c2, d);
        Eigen::MatrixXd k = xf * ConstMap(p + l.attn_k + woff, l.c2, d);
        Eigen::MatrixXd v = xf * ConstMap(p + l.attn_v + woff, l.c2, d);
        Eigen::MatrixXd scores = scale * (q * k.transpose());
        Eigen::MatrixXd omega(n, n);
        for (int i = 0; i < n; ++i) {
            const double m = scores.row(i).maxCoeff();
            Eigen::ArrayXd e = (scores.row(i).array() - m).exp();
            omega.row(i) = (e / e.sum()).matrix().transpose();
        }
        concat.middleCols(mu * d, d) = omega * v;
        if (cache) {
            qs.push_back(std::move(q));
            ks.push_back(std::move(k));
            vs.push_back(std::move(v));
            omegas.push_back(std::move(omega));
        }
    }
    Eigen::MatrixXd attended =
        concat * ConstMap(p + l.out_proj, l.c2, l.c2) + xf;
    Eigen::RowVectorXd pooled = attended.colwise().mean();
    Eigen::RowVector2d f =
        pooled * ConstMap(p + l.dense_w, l.c2, 2) +
        ConstMap(p + l.dense_b, 1, 2);
    check_finite(f, "dense");

    if (cache) {
        cache->x0 = std::move(x0);
        cache->z1 = std::move(z1);
        cache->x1 = std::move(x1);
        cache->z2 = std::move(z2);
        cache->xf = std::move(xf);
        cache->q = std::move(qs);
        cache->k = std::move(ks);
        cache->v = std::move(vs);
        cache->omega = std::move(omegas);
        cache->concat = std::move(concat);
        cache->pooled = std::move(pooled);
    }
    return Complex{f(0), f(1)};
}

// One real reverse pass for the scalar f = df0 * F0 + df1 * F1.
Eigen::VectorXd TransformerAnsatz::backward_real(
    const Eigen::VectorXd& theta, const Cache& cache,
    const Eigen::RowVector2d& df) const {
    const auto& l = layout_;
    const int n = cfg_.sites;
    const int d = l.head_dim;
    const double* p = theta.data();
    Eigen::VectorXd grad = Eigen::VectorXd::Zero(l.total);

    auto store = [&grad](int offset, const Eigen::MatrixXd& m) {
        // Same column-major order as the forward maps.
        Eigen::Map<Eigen::MatrixXd>(grad.data() + offset, m.rows(), m.cols()) = m;
    };

    // dense head
    store(l.dense_w, cache.pooled.transpose() * df);
    store(l.dense_b, df);
    Eigen::VectorXd dh = ConstMap(p + l.dense_w, l.c2, 2) * df.transpose();

    // mean pooling and residual
    Eigen::MatrixXd dattended =
        Eigen::VectorXd::Ones(n) * (dh.transpose() / static_cast<double>(n));
    store(l.out_proj, cache.concat.transpose() * dattended);
    Eigen::MatrixXd dconcat =
        dattended * ConstMap(p + l.out_proj, l.c2, l.c2).transpose();
    Eigen::MatrixXd dxf = dattended;

    const double scale = 1.0 / std::sqrt(static_cast<double>(d));
    for (int mu = 0; mu < l.heads; ++mu) {
        const int woff = mu * l.c2 * d;
        const Eigen::MatrixXd dhead = dconcat.middleCols(mu * d, d);
        const auto& omega = cache.omega[static_cast<std::size_t>(mu)];
        Eigen::MatrixXd domega =
            dhead * cache.v[static_cast<std::size_t>(mu)].transpose();
        Eigen::MatrixXd dv = omega.transpose() * dhead;
        Eigen::MatrixXd dscores(n, n);
        for (int i = 0; i < n; ++i) {
            const double dot = domega.row(i).dot(omega.row(i));
            dscores.row(i) = omega.row(i).cwiseProduct(
                (domega.row(i).array() - dot).matrix());
        }
        Eigen::MatrixXd dq =
            scale * (dscores * cache.k[static_cast<std::size_t>(mu)]);
        Eigen::MatrixXd dk =
            scale * (dscores.transpose() * cache.q[static_cast<std::size_t>(mu)]);
        store(l.attn_q + woff, cache.xf.transpose() * dq);
        store(l.attn_k + woff, cache.xf.transpose() * dk);
        store(l.attn_v + woff, cache.xf.transpose() * dv);
        dxf += dq * ConstMap(p + l.attn_q + woff, l.c2, d).transpose();
        dxf += dk * ConstMap(p + l.attn_k + woff, l.c2, d).transpose();
        dxf += dv * ConstMap(p + l.attn_v + woff, l.c2, d).transpose();
    }

    // conv2
    Eigen::MatrixXd dz2 = dxf.cwiseProduct(cache.z2.unaryExpr(
        [this](double v) { return act_deriv(activation_, v); }));
    store(l.conv2_b, dz2.colwise().sum());
    Eigen::MatrixXd dx1 = Eigen::MatrixXd::Zero(n, l.c1);
    for (int t = 0; t < kTaps; ++t) {
        store(l.conv2_w + t * l.c1 * l.c2,
              rotate_rows(cache.x1, t).transpose() * dz2);
        dx1 += rotate_rows(
            (dz2 * ConstMap(p + l.conv2_w + t * l.c1 * l.c2, l.c1, l.c2)
                       .transpose())
                .eval(),
            -t);
    }

    // conv1
    Eigen::MatrixXd dz1 = dx1.cwiseProduct(cache.z1.unaryExpr(
        [this](double v) { return act_deriv(activation_, v); }));
    store(l.conv1_b, dz1.colwise().sum());
    for (int t = 0; t < kTaps; ++t)
        store(l.conv1_w + t * 2 * l.c1,
              rotate_rows(cache.x0, t).transpose() * dz1);

    return grad;
}

Eigen::VectorXcd TransformerAnsatz::backward(const Eigen::VectorXd& theta,
                                             const Cache& cache) const {
    // dz/dtheta = dF0/dtheta + i dF1/dtheta; parameters are real.
    const Eigen::VectorXd g0 =
        backward_real(theta, cache, Eigen::RowVector2d{1.0, 0.0});
    const Eigen::VectorXd g1 =
        backward_real(theta, cache, Eigen::RowVector2d{0.0, 1.0});
    return g0.cast<Complex>() + kI * g1.cast<Complex>();
}

Complex TransformerAnsatz::raw_forward(const Eigen::VectorXd& theta,
                                       const SpinConfig& left,
                                       const SpinConfig& right) const {
    return forward(theta, left, right, nullptr);
}

Complex TransformerAnsatz::log_density(const Eigen::VectorXd& theta,
                                       const JointConfig& x) const {
    const Complex z1 = forward(theta, x.left, x.right, nullptr);
    const Complex z2 = forward(theta, x.right, x.left, nullptr);
    const double m = std::max(z1.real(), z2.real());
    return m + std::log(std::exp(z1 - m) + std::exp(std::conj(z2) - m));
}

Eigen::VectorXcd TransformerAnsatz::log_density_batch(
    const Eigen::VectorXd& theta, const std::vector<JointConfig>& xs) const {
    Eigen::VectorXcd out(static_cast<Eigen::Index>(xs.size()));
    for (std::size_t i = 0; i < xs.size(); ++i)
        out[static_cast<Eigen::Index>(i)] = log_density(theta, xs[i]);
    return out;
}

TransformerAnsatz::LogDerivatives TransformerAnsatz::log_derivatives(
    const Eigen::VectorXd& theta, const JointConfig& x) const {
    Cache c1, c2;
    const Complex z1 = forward(theta, x.left, x.right, &c1);
    const Complex z2 = forward(theta, x.right, x.left, &c2);
    const Eigen::VectorXcd g1 = backward(theta, c1);
    const Eigen::VectorXcd g2 = backward(theta, c2);
    const double m = std::max(z1.real(), z2.real());
    const Complex u1 = std::exp(z1 - m);
    const Complex u2 = std::exp(std::conj(z2) - m);
    Complex denom = u1 + u2;
    // Guard against catastrophic cancellation between the two
    // orderings (an amplitude crossing zero). Clamping the denominator
    // keeps the derivative finite; downstream consumers only use
    // rho * derivs or |rho|^2-weighted averages, both of which are
    // insensitive to the clamp because the exp(log_density) factor
    // shrinks by exactly the amount the derivative grows.
    const double floor = 1e-30 * (std::abs(u1) + std::abs(u2));
    if (std::abs(denom) < floor) denom *= floor / std::max(std::abs(denom), 1e-300);
    if (denom == Complex{0.0, 0.0}) denom = floor;
    LogDerivatives out;
    out.log_density = m + std::log(denom);
    out.derivs = (u1 * g1 + u2 * g2.conjugate()) / denom;
    if (!out.derivs.allFinite())
        throw std::runtime_error("non-finite log-derivative (symmetrization)");
    return out;
}

Eigen::MatrixXcd TransformerAnsatz::enumerate_full_matrix(
    const Eigen::VectorXd& theta) const {
    const int n = cfg_.sites;
    if (n > 7)
        throw std::invalid_argument("full enumeration supports N <= 7");
    const Eigen::Index dim = Eigen::Index{1} << n;
    Eigen::MatrixXcd rho(dim, dim);
    for (Eigen::Index a = 0; a < dim; ++a) {
        const SpinConfig alpha = index_to_config(static_cast<std::uint64_t>(a), n);
        for (Eigen::Index b = 0; b < dim; ++b) {
            const SpinConfig beta =
                index_to_config(static_cast<std::uint64_t>(b), n);
            rho(a, b) = std::exp(log_density(theta, {alpha, beta}));
        }
    }
    const Complex trace = rho.trace();
    if (std::abs(trace) > 0) rho /= trace;
    return rho;
}

std::vector<Eigen::MatrixXd> TransformerAnsatz::attention_weights(
    const Eigen::VectorXd& theta, const SpinConfig& left,
    const SpinConfig& right) const {
    Cache cache;
    forward(theta, left, right, &cache);
    return cache.omega;
}

}  // namespace dss
