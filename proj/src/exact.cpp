#include "dss/exact.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/Sparse>
#include <Eigen/SparseLU>
#include <cmath>
#include <random>

namespace dss {

namespace {

using SparseCd = Eigen::SparseMatrix<Complex>;

int sites_from_vector_length(Eigen::Index len) {
    int n = 0;
    while ((Eigen::Index{1} << (2 * n)) < len) ++n;
    if ((Eigen::Index{1} << (2 * n)) != len)
        throw std::invalid_argument("vector length is not 4^N");
    return n;
}

// Hermitize and trace-normalize a raw solver output.
DensityMatrixDense finalize(Eigen::MatrixXcd rho, SolveReport* report) {
    rho = ((rho + rho.adjoint()) / 2.0).eval();
    const double trace = rho.trace().real();
    if (std::abs(trace) < 1e-12 * rho.norm())
        throw std::runtime_error("steady-state candidate has vanishing trace");
    rho /= trace;
    if (report) {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(rho,
                                                           Eigen::EigenvaluesOnly);
        report->min_rho_eigenvalue = es.eigenvalues().minCoeff();
    }
    return DensityMatrixDense{std::move(rho)};
}

SparseCd sparse_superoperator(const SuperOperator& s) {
    const Eigen::Index dim = Eigen::Index{1} << (2 * s.sites());
    std::vector<Eigen::Triplet<Complex>> triplets;
    for (Eigen::Index r = 0; r < dim; ++r) {
        const JointConfig x = index_to_joint(static_cast<std::uint64_t>(r), s.sites());
        for (const auto& el : s.connected_elements(x))
            triplets.emplace_back(
                r, static_cast<Eigen::Index>(joint_to_index(el.config)),
                el.amplitude);
    }
    SparseCd m(dim, dim);
    m.setFromTriplets(triplets.begin(), triplets.end());
    return m;
}

}  // namespace

int DensityMatrixDense::sites() const {
    int n = 0;
    while ((Eigen::Index{1} << n) < rho.rows()) ++n;
    return n;
}

Eigen::VectorXcd DensityMatrixDense::vectorize() const {
    const Eigen::Index d = rho.rows();
    Eigen::VectorXcd v(d * d);
    for (Eigen::Index a = 0; a < d; ++a)
        for (Eigen::Index b = 0; b < d; ++b) v[a * d + b] = rho(a, b);
    return v;
}

DensityMatrixDense DensityMatrixDense::devectorize(const Eigen::VectorXcd& v) {
    const int n = sites_from_vector_length(v.size());
    const Eigen::Index d = Eigen::Index{1} << n;
    Eigen::MatrixXcd rho(d, d);
    for (Eigen::Index a = 0; a < d; ++a)
        for (Eigen::Index b = 0; b < d; ++b) rho(a, b) = v[a * d + b];
    return DensityMatrixDense{std::move(rho)};
}

DensityMatrixDense steady_state_ed(const SuperOperator& s, SolveReport* report) {
    const int n = s.sites();
    if (n > 6)
        throw std::invalid_argument("exact diagonalization supports N <= 6");
    Eigen::VectorXcd null_vec;
    double eigenvalue = 0.0;
    double scale = 0.0;
    if (n <= 4) {
        const Eigen::MatrixXcd l = s.to_dense();
        const Eigen::MatrixXcd lsq = l.adjoint() * l;
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(lsq);
        eigenvalue = es.eigenvalues()(0);
        scale = es.eigenvalues().cwiseAbs().maxCoeff();
        null_vec = es.eigenvectors().col(0);
    } else {
        const SparseCd l = sparse_superoperator(s);
        SparseCd lsq = (SparseCd(l.adjoint()) * l).pruned(1e-15);
        scale = 0.0;
        for (Eigen::Index k = 0; k < lsq.rows(); ++k)
            scale = std::max(scale, std::abs(lsq.coeff(k, k)));
        SparseCd shifted = lsq;
        const double eps = 1e-10 * scale;
        SparseCd identity(lsq.rows(), lsq.cols());
        identity.setIdentity();
        shifted += eps * identity;
        Eigen::SparseLU<SparseCd> lu(shifted);
        if (lu.info() != Eigen::Success)
            throw std::runtime_error("sparse factorization of L^dag L failed");
        // Inverse iteration; the null space dominates with weight 1/eps.
        std::mt19937_64 rng(12345);
        std::normal_distribution<double> gauss;
        Eigen::VectorXcd v(lsq.rows());
        for (Eigen::Index k = 0; k < v.size(); ++k)
            v[k] = Complex{gauss(rng), gauss(rng)};
        v.normalize();
        for (int it = 0; it < 100; ++it) {
            v = lu.solve(v);
            v.normalize();
            eigenvalue = (v.adjoint() * (lsq * v))(0).real();
            if (eigenvalue <= 1e-10 * scale) break;
        }
        null_vec = v;
    }
    if (eigenvalue > 1e-10 * scale)
        throw std::runtime_error(
            "no steady state found: smallest eigenvalue of L^dag L is " +
            std::to_string(eigenvalue));
    if (report) {
        report->eigenvalue = eigenvalue;
        report->residual = s.apply_dense(null_vec).norm() / null_vec.norm();
    }
    return finalize(DensityMatrixDense::devectorize(null_vec).rho, report);
}

DensityMatrixDense steady_state_bicgstab(const SuperOperator& s, double tol,
                                         const Eigen::VectorXcd* initial,
                                         SolveReport* report) {
    const int n = s.sites();
    const Eigen::Index dim = Eigen::Index{1} << (2 * n);
    const Eigen::Index half = Eigen::Index{1} << n;
    const SparseCd l = sparse_superoperator(s);

    // Reference diagonal configuration: all spins up on both copies.
    const Eigen::Index ref_row = 0;
    auto apply = [&](const Eigen::VectorXcd& v) {
        Eigen::VectorXcd y = l * v;
        Complex trace{0.0, 0.0};
        for (Eigen::Index a = 0; a < half; ++a) trace += v[a * half + a];
        y[ref_row] = trace;
        return y;
    };
    Eigen::VectorXcd b = Eigen::VectorXcd::Zero(dim);
    b[ref_row] = 1.0;

    const long max_iter =
        std::min<long>(20L * static_cast<long>(dim), 2'000'000L);
    Eigen::VectorXcd x =
        initial ? *initial : Eigen::VectorXcd(Eigen::VectorXcd::Zero(dim));
    if (initial && initial->size() != dim)
        throw std::invalid_argument("initial guess has wrong length");

    Eigen::VectorXcd r = b - apply(x);
    Eigen::VectorXcd rhat = r;
    Eigen::VectorXcd p = Eigen::VectorXcd::Zero(dim);
    Eigen::VectorXcd v = Eigen::VectorXcd::Zero(dim);
    Complex rho_old{1.0, 0.0}, alpha{1.0, 0.0}, omega{1.0, 0.0};
    const double bnorm = b.norm();
    int restarts = 0;
    int iterations = 0;
    double target = tol;

    std::mt19937_64 restart_rng(987654321);
    std::normal_distribution<double> gauss;
    // Fresh random shadow residual; cures the exact breakdowns these
    // highly structured generators produce (omega or rho hitting 0).
    auto restart = [&]() {
        if (++restarts > 8) throw std::runtime_error("bicgstab: repeated breakdown");
        r = b - apply(x);
        rhat.resize(dim);
        for (Eigen::Index k = 0; k < dim; ++k)
            rhat[k] = Complex{gauss(restart_rng), gauss(restart_rng)};
        rho_old = alpha = omega = Complex{1.0, 0.0};
        p.setZero();
        v.setZero();
    };

    auto finish = [&]() {
        const double xnorm = x.norm();
        const double residual = xnorm > 0 ? (l * x).norm() / xnorm : 1.0;
        if (report) {
            report->residual = residual;
            report->iterations = iterations;
        }
        return residual;
    };

    while (true) {
        if (r.norm() <= target * bnorm) {
            // Converged on the augmented system; verify against the
            // original generator and tighten if needed.
            if (finish() <= tol * 1.0) break;
            if (target < 1e-14)
                throw std::runtime_error(
                    "bicgstab: augmented system converged but generator "
                    "residual stays above tolerance");
            target *= 0.1;
        }
        if (iterations++ >= max_iter)
            throw std::runtime_error("bicgstab: no convergence after " +
                                     std::to_string(max_iter) +
                                     " iterations, residual " +
                                     std::to_string(r.norm() / bnorm));
        const Complex rho_new = rhat.dot(r);
        if (std::abs(rho_new) < 1e-30 * r.norm() * rhat.norm() || r.norm() == 0.0 ||
            std::abs(omega) < 1e-300) {
            restart();
            continue;
        }
        const Complex beta = (rho_new / rho_old) * (alpha / omega);
        p = r + beta * (p - omega * v);
        v = apply(p);
        const Complex denom = rhat.dot(v);
        if (std::abs(denom) < 1e-300) {
            restart();
            continue;
        }
        alpha = rho_new / denom;
        const Eigen::VectorXcd sres = r - alpha * v;
        if (sres.norm() <= target * bnorm) {
            x += alpha * p;
            r = sres;
            rho_old = rho_new;
            continue;
        }
        const Eigen::VectorXcd t = apply(sres);
        const double tnorm2 = t.squaredNorm();
        if (tnorm2 == 0.0) throw std::runtime_error("bicgstab: stagnation");
        omega = t.dot(sres) / tnorm2;
        x += alpha * p + omega * sres;
        r = sres - omega * t;
        rho_old = rho_new;
    }
    return finalize(DensityMatrixDense::devectorize(x).rho, report);
}

double expectation_exact(const std::vector<LocalTerm>& observable,
                         const DensityMatrixDense& rho) {
    const Eigen::MatrixXcd op = dense_operator(observable, rho.sites());
    const Complex value = (op * rho.rho).trace() / rho.rho.trace();
    if (std::abs(value.imag()) > 1e-9)
        throw std::runtime_error("expectation of Hermitian observable has "
                                 "imaginary part above 1e-9");
    return value.real();
}

double purity_exact(const DensityMatrixDense& rho) {
    const Complex trace = rho.rho.trace();
    return ((rho.rho * rho.rho).trace() / (trace * trace)).real();
}

Eigen::Matrix2cd single_qubit_steady(double g) {
    const double denom = 1.0 + 2.0 * g * g;
    Eigen::Matrix2cd rho;
    rho << g * g / denom, Complex{0.0, -g / denom}, Complex{0.0, g / denom},
        (1.0 + g * g) / denom;
    return rho;
}

}  // namespace dss
