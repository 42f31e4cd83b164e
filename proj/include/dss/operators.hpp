#pragma once

#include <Eigen/Dense>
#include <array>
#include <complex>
#include <vector>

#include "dss/spinspace.hpp"

namespace dss {

using Complex = std::complex<double>;

// A few-site operator: a dense 2^k x 2^k matrix acting on an ordered
// list of k sites, scaled by a complex coefficient. Site indices refer
// to the doubled lattice when the term lives inside a SuperOperator
// (left copy 0..N-1, right copy N..2N-1).
struct LocalTerm {
    std::vector<int> sites;
    Eigen::MatrixXcd matrix;
    Complex coefficient{1.0, 0.0};
};

// Pauli matrices and friends in the stored spin convention:
// basis index 0 is spin +1, index 1 is spin -1.
Eigen::Matrix2cd pauli_x();
Eigen::Matrix2cd pauli_y();
Eigen::Matrix2cd pauli_z();
Eigen::Matrix2cd sigma_minus();

struct HamiltonianSpec {
    LatticeGeometry geometry;
    std::vector<LocalTerm> terms;  // physical lattice, sites in [0, N)
};

struct JumpOperator {
    int site = 0;
    Eigen::Matrix2cd op;
    double rate = 1.0;
};

// H = (V/4) sum_i sz_i sz_{i+1} + (g/2) sum_i sx_i, periodic chain.
HamiltonianSpec build_tfi_chain(int n_sites, double V, double g);

// Same couplings on an M x N periodic grid; zz terms over unique bonds.
HamiltonianSpec build_tfi_grid(int rows, int cols, double V, double g);

// H = sum_i sum_k (J_k s_i^k s_{i+1}^k + B_k s_i^k), periodic chain.
HamiltonianSpec build_heisenberg_chain(int n_sites,
                                       const std::array<double, 3>& J,
                                       const std::array<double, 3>& B);

// N single-site lowering jumps with a uniform rate.
std::vector<JumpOperator> build_lowering_jumps(int n_sites, double gamma);

struct ConnectedElement {
    JointConfig config;  // column configuration x'
    Complex amplitude;   // <x| L |x'>
};

// Vectorized Lindbladian as a sum of few-site terms on the doubled
// lattice. Immutable after construction; row queries are pure.
class SuperOperator {
  public:
    SuperOperator(int n_sites, std::vector<LocalTerm> terms);

    int sites() const { return n_sites_; }
    int doubled_sites() const { return 2 * n_sites_; }
    const std::vector<LocalTerm>& terms() const { return terms_; }

    // All nonzero matrix elements <x| L |x'> in row x, coincident
    // columns merged.
    std::vector<ConnectedElement> connected_elements(const JointConfig& x) const;

    // Matrix-free application, v indexed by joint_to_index. Length 4^N.
    Eigen::VectorXcd apply_dense(const Eigen::VectorXcd& v) const;

    // Explicit 4^N x 4^N matrix; guarded to small N.
    Eigen::MatrixXcd to_dense(int max_sites = 5) const;

  private:
    int n_sites_;
    std::vector<LocalTerm> terms_;
    // Per term: nonzero (column, value) pairs of each matrix row.
    struct RowEntry {
        int col;
        Complex value;
    };
    std::vector<std::vector<std::vector<RowEntry>>> rows_;
};

// Assembles Eq.-of-motion generator
//   L = -i (H x 1 - 1 x H^T)
//       + sum_i gamma_i [L_i x L_i^* - 1/2 (L_i^dag L_i x 1 + 1 x L_i^T L_i^*)]
// with transposes/conjugates taken in the computational basis.
SuperOperator vectorized_lindbladian(const HamiltonianSpec& h,
                                     const std::vector<JumpOperator>& jumps);

// Dense matrix of a sum of physical-lattice local terms (dimension 2^N).
Eigen::MatrixXcd dense_operator(const std::vector<LocalTerm>& terms, int n_sites);

}  // namespace dss
