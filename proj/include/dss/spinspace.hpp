#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace dss {

// Spin-1/2 configuration in the sigma-z eigenbasis. Entry +1 is basis
// label 0, entry -1 is basis label 1 (the state annihilated by the
// lowering operator).
using SpinConfig = std::vector<int8_t>;

// Ordered pair (alpha, beta) indexing one element of a vectorized
// density operator on the doubled lattice.
struct JointConfig {
    SpinConfig left;
    SpinConfig right;

    int sites() const { return static_cast<int>(left.size()); }
    bool operator==(const JointConfig& o) const {
        return left == o.left && right == o.right;
    }
};

// Big-endian binary encoding: site 0 is the most significant bit,
// spin -1 maps to bit 1. Bijective on [0, 2^N) for N <= 30.
std::uint64_t config_to_index(const SpinConfig& c);
SpinConfig index_to_config(std::uint64_t index, int n_sites);

// Packed index of a joint configuration: idx(left) * 2^N + idx(right).
std::uint64_t joint_to_index(const JointConfig& x);
JointConfig index_to_joint(std::uint64_t index, int n_sites);

// Cyclic shift: site i of the output equals site (i - k mod N) of the
// input. shift by N is the identity.
SpinConfig shift_cyclic(const SpinConfig& c, int k);

// Row-major per-axis cyclic shift for a rows x cols grid.
SpinConfig shift_cyclic_grid(const SpinConfig& c, int rows, int cols,
                             int shift_row, int shift_col);

struct LatticeGeometry {
    enum class Kind { Chain, Grid };

    Kind kind = Kind::Chain;
    int rows = 1;  // 1 for chains
    int cols = 0;  // N for chains

    static LatticeGeometry chain(int n_sites);
    static LatticeGeometry grid(int rows, int cols);

    int site_count() const { return rows * cols; }

    // Unique undirected nearest-neighbor pairs, periodic boundaries.
    // Chains keep the wrap bond even at N=2 (doubled coupling); grids
    // deduplicate the pairs produced by width-2 periodic axes.
    std::vector<std::pair<int, int>> bonds() const;
};

void validate(const SpinConfig& c);
void validate(const JointConfig& x);

}  // namespace dss
