#pragma once

#include <Eigen/Dense>
#include <optional>

#include "dss/operators.hpp"

namespace dss {

struct DensityMatrixDense {
    Eigen::MatrixXcd rho;  // 2^N x 2^N, Hermitized and trace-normalized

    int sites() const;
    Eigen::VectorXcd vectorize() const;  // row-major, joint_to_index layout
    static DensityMatrixDense devectorize(const Eigen::VectorXcd& v);
};

struct SolveReport {
    double residual = 0.0;   // ||L rho|| / ||rho|| of the original generator
    double eigenvalue = 0.0; // smallest eigenvalue of L^dag L (ED path)
    double min_rho_eigenvalue = 0.0;  // positivity diagnostic
    int iterations = 0;
};

// Smallest eigenpair of the Hermitian L^dag L. Dense diagonalization up
// to N=4, sparse shift-invert inverse iteration for N=5,6.
DensityMatrixDense steady_state_ed(const SuperOperator& s,
                                   SolveReport* report = nullptr);

// Trace-augmented linear solve: the row of one reference diagonal
// configuration is replaced by the trace constraint, making the system
// square and nonsingular when the steady state is unique.
DensityMatrixDense steady_state_bicgstab(const SuperOperator& s,
                                         double tol = 1e-7,
                                         const Eigen::VectorXcd* initial = nullptr,
                                         SolveReport* report = nullptr);

// Tr(O rho) / Tr(rho) for a Hermitian observable given as local terms
// on the physical lattice.
double expectation_exact(const std::vector<LocalTerm>& observable,
                         const DensityMatrixDense& rho);

double purity_exact(const DensityMatrixDense& rho);

// Closed-form single-qubit steady state at gamma = 1:
//   rho = [[g^2, -i g], [i g, 1 + g^2]] / (1 + 2 g^2).
Eigen::Matrix2cd single_qubit_steady(double g);

}  // namespace dss
