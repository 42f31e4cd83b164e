#include "dss/operators.hpp"

#include <unordered_map>

namespace dss {

namespace {

constexpr Complex kI{0.0, 1.0};

Eigen::MatrixXcd kron(const Eigen::MatrixXcd& a, const Eigen::MatrixXcd& b) {
    Eigen::MatrixXcd out(a.rows() * b.rows(), a.cols() * b.cols());
    for (Eigen::Index i = 0; i < a.rows(); ++i)
        for (Eigen::Index j = 0; j < a.cols(); ++j)
            out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    return out;
}

int8_t bit_to_spin(unsigned bit) { return bit ? int8_t{-1} : int8_t{1}; }
unsigned spin_to_bit(int8_t spin) { return spin < 0 ? 1u : 0u; }

// Spin value of doubled-lattice site j in a joint configuration.
int8_t& doubled_site(JointConfig& x, int j) {
    const int n = x.sites();
    return j < n ? x.left[static_cast<std::size_t>(j)]
                 : x.right[static_cast<std::size_t>(j - n)];
}
int8_t doubled_site(const JointConfig& x, int j) {
    const int n = x.sites();
    return j < n ? x.left[static_cast<std::size_t>(j)]
                 : x.right[static_cast<std::size_t>(j - n)];
}

}  // namespace

Eigen::Matrix2cd pauli_x() {
    Eigen::Matrix2cd m;
    m << 0, 1, 1, 0;
    return m;
}

Eigen::Matrix2cd pauli_y() {
    Eigen::Matrix2cd m;
    m << 0, -kI, kI, 0;
    return m;
}

Eigen::Matrix2cd pauli_z() {
    Eigen::Matrix2cd m;
    m << 1, 0, 0, -1;
    return m;
}

Eigen::Matrix2cd sigma_minus() {
    Eigen::Matrix2cd m;
    m << 0, 0, 1, 0;
    return m;
}

HamiltonianSpec build_tfi_chain(int n_sites, double V, double g) {
    HamiltonianSpec spec{LatticeGeometry::chain(n_sites), {}};
    const Eigen::MatrixXcd zz = kron(pauli_z(), pauli_z());
    for (auto [a, b] : spec.geometry.bonds())
        spec.terms.push_back({{a, b}, zz, Complex{V / 4.0, 0.0}});
    for (int i = 0; i < n_sites; ++i)
        spec.terms.push_back({{i}, pauli_x(), Complex{g / 2.0, 0.0}});
    return spec;
}

HamiltonianSpec build_tfi_grid(int rows, int cols, double V, double g) {
    HamiltonianSpec spec{LatticeGeometry::grid(rows, cols), {}};
    const Eigen::MatrixXcd zz = kron(pauli_z(), pauli_z());
    for (auto [a, b] : spec.geometry.bonds())
        spec.terms.push_back({{a, b}, zz, Complex{V / 4.0, 0.0}});
    for (int i = 0; i < rows * cols; ++i)
        spec.terms.push_back({{i}, pauli_x(), Complex{g / 2.0, 0.0}});
    return spec;
}

HamiltonianSpec build_heisenberg_chain(int n_sites,
                                       const std::array<double, 3>& J,
                                       const std::array<double, 3>& B) {
    HamiltonianSpec spec{LatticeGeometry::chain(n_sites), {}};
    const std::array<Eigen::Matrix2cd, 3> paulis{pauli_x(), pauli_y(), pauli_z()};
    for (auto [a, b] : spec.geometry.bonds())
        for (int k = 0; k < 3; ++k)
            spec.terms.push_back({{a, b},
                                  kron(paulis[static_cast<std::size_t>(k)],
                                       paulis[static_cast<std::size_t>(k)]),
                                  Complex{J[static_cast<std::size_t>(k)], 0.0}});
    for (int i = 0; i < n_sites; ++i)
        for (int k = 0; k < 3; ++k)
            spec.terms.push_back({{i},
                                  paulis[static_cast<std::size_t>(k)],
                                  Complex{B[static_cast<std::size_t>(k)], 0.0}});
    return spec;
}

std::vector<JumpOperator> build_lowering_jumps(int n_sites, double gamma) {
    if (gamma < 0) throw std::invalid_argument("negative dissipation rate");
    std::vector<JumpOperator> jumps;
    jumps.reserve(static_cast<std::size_t>(n_sites));
    for (int i = 0; i < n_sites; ++i) jumps.push_back({i, sigma_minus(), gamma});
    return jumps;
}

SuperOperator::SuperOperator(int n_sites, std::vector<LocalTerm> terms)
    : n_sites_(n_sites), terms_(std::move(terms)) {
    rows_.reserve(terms_.size());
    for (const auto& term : terms_) {
        const auto k = term.sites.size();
        if (k == 0 || k > 4)
            throw std::invalid_argument("local term must touch 1..4 sites");
        const Eigen::Index dim = Eigen::Index{1} << k;
        if (term.matrix.rows() != dim || term.matrix.cols() != dim)
            throw std::invalid_argument("local term matrix dimension mismatch");
        bool left = true, right = true;
        for (int s : term.sites) {
            if (s < 0 || s >= 2 * n_sites_)
                throw std::invalid_argument("local term site out of range");
            left = left && s < n_sites_;
            right = right && s >= n_sites_;
        }
        if (!left && !right) {
            // Mixed terms must be a matched (i, i+N) pair.
            if (k != 2 || term.sites[1] != term.sites[0] + n_sites_)
                throw std::invalid_argument(
                    "cross term must act on a matched (i, i+N) pair");
        }
        std::vector<std::vector<RowEntry>> rows(static_cast<std::size_t>(dim));
        for (Eigen::Index r = 0; r < dim; ++r)
            for (Eigen::Index c = 0; c < dim; ++c) {
                const Complex v = term.coefficient * term.matrix(r, c);
                if (std::abs(v) > 1e-15)
                    rows[static_cast<std::size_t>(r)].push_back(
                        {static_cast<int>(c), v});
            }
        rows_.push_back(std::move(rows));
    }
}

std::vector<ConnectedElement> SuperOperator::connected_elements(
    const JointConfig& x) const {
    std::unordered_map<std::uint64_t, std::size_t> seen;
    std::vector<ConnectedElement> out;
    for (std::size_t t = 0; t < terms_.size(); ++t) {
        const auto& sites = terms_[t].sites;
        const int k = static_cast<int>(sites.size());
        unsigned row = 0;
        for (int s : sites) row = (row << 1) | spin_to_bit(doubled_site(x, s));
        for (const auto& entry : rows_[t][row]) {
            JointConfig xp = x;
            for (int b = 0; b < k; ++b) {
                const unsigned bit =
                    (static_cast<unsigned>(entry.col) >> (k - 1 - b)) & 1u;
                doubled_site(xp, sites[static_cast<std::size_t>(b)]) =
                    bit_to_spin(bit);
            }
            const std::uint64_t key = joint_to_index(xp);
            auto [it, inserted] = seen.emplace(key, out.size());
            if (inserted)
                out.push_back({std::move(xp), entry.value});
            else
                out[it->second].amplitude += entry.value;
        }
    }
    return out;
}

Eigen::VectorXcd SuperOperator::apply_dense(const Eigen::VectorXcd& v) const {
    const std::uint64_t dim = std::uint64_t{1} << (2 * n_sites_);
    if (static_cast<std::uint64_t>(v.size()) != dim)
        throw std::invalid_argument("apply_dense: vector length must be 4^N");
    Eigen::VectorXcd out = Eigen::VectorXcd::Zero(v.size());
    for (std::uint64_t r = 0; r < dim; ++r) {
        const JointConfig x = index_to_joint(r, n_sites_);
        for (const auto& el : connected_elements(x))
            out[static_cast<Eigen::Index>(r)] +=
                el.amplitude * v[static_cast<Eigen::Index>(joint_to_index(el.config))];
    }
    return out;
}

Eigen::MatrixXcd SuperOperator::to_dense(int max_sites) const {
    if (n_sites_ > max_sites)
        throw std::invalid_argument("dense superoperator requested above size guard");
    const Eigen::Index dim = Eigen::Index{1} << (2 * n_sites_);
    Eigen::MatrixXcd out = Eigen::MatrixXcd::Zero(dim, dim);
    for (Eigen::Index r = 0; r < dim; ++r) {
        const JointConfig x = index_to_joint(static_cast<std::uint64_t>(r), n_sites_);
        for (const auto& el : connected_elements(x))
            out(r, static_cast<Eigen::Index>(joint_to_index(el.config))) +=
                el.amplitude;
    }
    return out;
}

SuperOperator vectorized_lindbladian(const HamiltonianSpec& h,
                                     const std::vector<JumpOperator>& jumps) {
    const int n = h.geometry.site_count();
    for (const auto& j : jumps)
        if (j.site < 0 || j.site >= n)
            throw std::invalid_argument("jump operator site outside geometry");
    std::vector<LocalTerm> terms;
    for (const auto& term : h.terms) {
        terms.push_back({term.sites, term.matrix, -kI * term.coefficient});
        std::vector<int> right_sites;
        for (int s : term.sites) right_sites.push_back(s + n);
        terms.push_back(
            {std::move(right_sites), term.matrix.transpose(), kI * term.coefficient});
    }
    for (const auto& j : jumps) {
        const Eigen::Matrix2cd l = j.op;
        const Eigen::Matrix2cd ldl = l.adjoint() * l;
        terms.push_back({{j.site, j.site + n},
                         kron(l, l.conjugate()),
                         Complex{j.rate, 0.0}});
        terms.push_back({{j.site}, ldl, Complex{-j.rate / 2.0, 0.0}});
        terms.push_back(
            {{j.site + n}, ldl.transpose(), Complex{-j.rate / 2.0, 0.0}});
    }
    return SuperOperator(n, std::move(terms));
}

Eigen::MatrixXcd dense_operator(const std::vector<LocalTerm>& terms, int n_sites) {
    const Eigen::Index dim = Eigen::Index{1} << n_sites;
    Eigen::MatrixXcd out = Eigen::MatrixXcd::Zero(dim, dim);
    for (const auto& term : terms) {
        const int k = static_cast<int>(term.sites.size());
        for (Eigen::Index col = 0; col < dim; ++col) {
            unsigned lcol = 0;
            for (int s : term.sites)
                lcol = (lcol << 1) |
                       ((static_cast<std::uint64_t>(col) >> (n_sites - 1 - s)) & 1u);
            for (Eigen::Index lrow = 0; lrow < term.matrix.rows(); ++lrow) {
                const Complex v = term.coefficient * term.matrix(lrow, lcol);
                if (std::abs(v) <= 1e-15) continue;
                std::uint64_t row = static_cast<std::uint64_t>(col);
                for (int b = 0; b < k; ++b) {
                    const int site = term.sites[static_cast<std::size_t>(b)];
                    const std::uint64_t mask = std::uint64_t{1}
                                               << (n_sites - 1 - site);
                    if ((static_cast<std::uint64_t>(lrow) >> (k - 1 - b)) & 1u)
                        row |= mask;
                    else
                        row &= ~mask;
                }
                out(static_cast<Eigen::Index>(row), col) += v;
            }
        }
    }
    return out;
}

}  // namespace dss
