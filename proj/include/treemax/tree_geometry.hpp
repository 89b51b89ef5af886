#pragma once

#include <cstdint>
#include <vector>

#include "treemax/errors.hpp"
#include "treemax/numerics.hpp"

namespace treemax {

// The (k+1)-regular tree rooted at o: the root has k+1 children, every other
// vertex has one parent and k children. Distances do not depend on the
// rooting; the root is an addressing device.
struct TreeParams {
    int k;

    explicit TreeParams(int k_) : k(k_) {
        if (k < 2) throw parameter_error("TreeParams: k must be >= 2");
    }
};

// Root-to-vertex child path. First step has k+1 choices, later steps k.
class VertexAddress {
public:
    explicit VertexAddress(const TreeParams& tp) : k_(tp.k) {}

    VertexAddress(const TreeParams& tp, std::vector<int> path) : k_(tp.k), path_(std::move(path)) {
        for (std::size_t i = 0; i < path_.size(); ++i) {
            int limit = (i == 0) ? k_ + 1 : k_;
            if (path_[i] < 0 || path_[i] >= limit)
                throw parameter_error("VertexAddress: branch index out of range");
        }
    }

    int  k() const { return k_; }
    int  norm() const { return static_cast<int>(path_.size()); }
    bool is_root() const { return path_.empty(); }

    const std::vector<int>& path() const { return path_; }

    // number of children below this vertex
    int branch_count() const { return is_root() ? k_ + 1 : k_; }

    VertexAddress parent() const {
        if (is_root()) throw domain_error("parent of root");
        VertexAddress p(*this);
        p.path_.pop_back();
        return p;
    }

    VertexAddress child(int i) const {
        if (i < 0 || i >= branch_count())
            throw parameter_error("child: branch index out of range");
        VertexAddress c(*this);
        c.path_.push_back(i);
        return c;
    }

    friend bool operator==(const VertexAddress& a, const VertexAddress& b) {
        return a.k_ == b.k_ && a.path_ == b.path_;
    }

    // nondecreasing norm, lexicographic within a norm: the enumeration order
    friend bool operator<(const VertexAddress& a, const VertexAddress& b) {
        if (a.path_.size() != b.path_.size()) return a.path_.size() < b.path_.size();
        return a.path_ < b.path_;
    }

private:
    int              k_;
    std::vector<int> path_;
};

inline int distance(const VertexAddress& a, const VertexAddress& b) {
    if (a.k() != b.k()) throw parameter_error("distance: mixed branching parameters");
    const auto& pa = a.path();
    const auto& pb = b.path();
    std::size_t c  = 0;
    while (c < pa.size() && c < pb.size() && pa[c] == pb[c]) ++c;
    return static_cast<int>(pa.size() - c) + static_cast<int>(pb.size() - c);
}

inline Integer int_pow(int base, long e) {
    if (e < 0) throw parameter_error("int_pow: negative exponent");
    Integer r(1), b(base);
    while (e > 0) {
        if (e & 1) r *= b;
        b *= b;
        e >>= 1;
    }
    return r;
}

// |S_n(x)| = (k+1) k^(n-1) for n >= 1, independent of x
inline Integer sphere_size(const TreeParams& tp, long n) {
    if (n < 0) throw parameter_error("sphere_size: negative radius");
    if (n == 0) return 1;
    return Integer(tp.k + 1) * int_pow(tp.k, n - 1);
}

// |B_r(x)| = 1 + (k+1)(k^r - 1)/(k - 1)
inline Integer ball_size(const TreeParams& tp, long r) {
    if (r < 0) throw parameter_error("ball_size: negative radius");
    if (r == 0) return 1;
    return 1 + Integer(tp.k + 1) * (int_pow(tp.k, r) - 1) / (tp.k - 1);
}

// Partition of S_n(x), ||x|| = m, by distance from the root. The entry with
// ascent j (j steps toward the root before descending) sits at norm m+n-2j.
// Counts, exact:
//   j = 0            -> k^n           (|S_n(o)| when m = 0)
//   0 < j < min(m,n) -> (k-1) k^(n-j-1)   (first descent must avoid the
//                                          child just climbed out of)
//   j = n <= m       -> 1             (pure ascent, the ancestor)
//   j = m < n        -> k^(n-m)       (through the root, which has k+1
//                                      neighbours, one of them used up)
struct SphereDecomposition {
    struct Entry {
        int     norm;
        Integer count;
    };

    int                center_norm = 0;
    int                radius      = 0;
    std::vector<Entry> entries; // ascending ascent j, i.e. descending norm
};

inline SphereDecomposition sphere_decomposition(const TreeParams& tp, int m, int n) {
    if (m < 0 || n < 0) throw parameter_error("sphere_decomposition: negative argument");
    SphereDecomposition d;
    d.center_norm = m;
    d.radius      = n;
    if (n == 0) {
        d.entries.push_back({m, Integer(1)});
        return d;
    }
    if (m == 0) {
        d.entries.push_back({n, sphere_size(tp, n)});
        return d;
    }
    const int k    = tp.k;
    const int jmax = std::min(m, n);
    for (int j = 0; j <= jmax; ++j) {
        Integer c;
        if (j == 0)
            c = int_pow(k, n);
        else if (j == n) // n <= m: the ancestor at norm m-n
            c = 1;
        else if (j == m) // m < n: paths through the root
            c = int_pow(k, n - m);
        else
            c = Integer(k - 1) * int_pow(k, n - j - 1);
        d.entries.push_back({m + n - 2 * j, std::move(c)});
    }
    return d;
}

// All vertices of B_R(o) in nondecreasing norm, lexicographic within a norm.
inline std::vector<VertexAddress> enumerate_ball(const TreeParams& tp, int R,
                                                 std::uint64_t budget = (1u << 20)) {
    if (R < 0) throw parameter_error("enumerate_ball: negative radius");
    Integer total = ball_size(tp, R);
    if (total > budget)
        throw resource_error("enumerate_ball: |B_" + std::to_string(R) + "| = " +
                             total.str() + " exceeds budget " + std::to_string(budget));
    std::vector<VertexAddress> out;
    out.reserve(static_cast<std::size_t>(total));
    out.emplace_back(tp);
    // BFS by appending children in branch order keeps the order canonical
    for (std::size_t head = 0; head < out.size(); ++head) {
        if (out[head].norm() == R) break; // all later entries have norm >= R
        const VertexAddress v = out[head];
        for (int i = 0; i < v.branch_count(); ++i) out.push_back(v.child(i));
    }
    return out;
}

} // namespace treemax
