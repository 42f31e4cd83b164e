#include "dss/spinspace.hpp"

#include <algorithm>
#include <set>

namespace dss {

void validate(const SpinConfig& c) {
    if (c.empty()) throw std::invalid_argument("empty spin configuration");
    if (c.size() > 30)
        throw std::invalid_argument("more than 30 sites per factor is unsupported");
    for (auto s : c)
        if (s != 1 && s != -1)
            throw std::invalid_argument("spin values must be +1 or -1");
}

void validate(const JointConfig& x) {
    validate(x.left);
    validate(x.right);
    if (x.left.size() != x.right.size())
        throw std::invalid_argument("joint configuration halves differ in length");
}

std::uint64_t config_to_index(const SpinConfig& c) {
    std::uint64_t idx = 0;
    for (auto s : c) idx = (idx << 1) | (s < 0 ? 1u : 0u);
    return idx;
}

SpinConfig index_to_config(std::uint64_t index, int n_sites) {
    SpinConfig c(static_cast<std::size_t>(n_sites));
    for (int i = n_sites - 1; i >= 0; --i) {
        c[static_cast<std::size_t>(i)] = (index & 1u) ? int8_t{-1} : int8_t{1};
        index >>= 1;
    }
    return c;
}

std::uint64_t joint_to_index(const JointConfig& x) {
    const int n = x.sites();
    return (config_to_index(x.left) << n) | config_to_index(x.right);
}

JointConfig index_to_joint(std::uint64_t index, int n_sites) {
    JointConfig x;
    x.right = index_to_config(index & ((std::uint64_t{1} << n_sites) - 1), n_sites);
    x.left = index_to_config(index >> n_sites, n_sites);
    return x;
}

SpinConfig shift_cyclic(const SpinConfig& c, int k) {
    const int n = static_cast<int>(c.size());
    SpinConfig out(c.size());
    for (int i = 0; i < n; ++i)
        out[static_cast<std::size_t>(i)] =
            c[static_cast<std::size_t>(((i - k) % n + n) % n)];
    return out;
}

SpinConfig shift_cyclic_grid(const SpinConfig& c, int rows, int cols,
                             int shift_row, int shift_col) {
    if (static_cast<int>(c.size()) != rows * cols)
        throw std::invalid_argument("grid shift: size mismatch");
    SpinConfig out(c.size());
    for (int r = 0; r < rows; ++r)
        for (int col = 0; col < cols; ++col) {
            const int sr = ((r - shift_row) % rows + rows) % rows;
            const int sc = ((col - shift_col) % cols + cols) % cols;
            out[static_cast<std::size_t>(r * cols + col)] =
                c[static_cast<std::size_t>(sr * cols + sc)];
        }
    return out;
}

LatticeGeometry LatticeGeometry::chain(int n_sites) {
    if (n_sites < 1) throw std::invalid_argument("chain needs at least 1 site");
    LatticeGeometry g;
    g.kind = Kind::Chain;
    g.rows = 1;
    g.cols = n_sites;
    return g;
}

LatticeGeometry LatticeGeometry::grid(int rows, int cols) {
    if (rows < 2 || cols < 2)
        throw std::invalid_argument("grid needs at least 2 sites per axis");
    LatticeGeometry g;
    g.kind = Kind::Grid;
    g.rows = rows;
    g.cols = cols;
    return g;
}

std::vector<std::pair<int, int>> LatticeGeometry::bonds() const {
    std::vector<std::pair<int, int>> out;
    if (kind == Kind::Chain) {
        // Literal sum_i (i, i+1): at N=2 this keeps both (0,1) and (1,0).
        // A single site has no bonds.
        if (cols > 1)
            for (int i = 0; i < cols; ++i) out.emplace_back(i, (i + 1) % cols);
        return out;
    }
    std::set<std::pair<int, int>> unique;
    auto add = [&](int a, int b) {
        if (a == b) return;
        unique.emplace(std::min(a, b), std::max(a, b));
    };
    for (int r = 0; r < rows; ++r)
        for (int c = 0; c < cols; ++c) {
            const int site = r * cols + c;
            add(site, r * cols + (c + 1) % cols);
            add(site, ((r + 1) % rows) * cols + c);
        }
    out.assign(unique.begin(), unique.end());
    return out;
}

}  // namespace dss
