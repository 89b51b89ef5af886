#pragma once

#include <utility>
#include <vector>

#include "treemax/errors.hpp"
#include "treemax/lorentz.hpp"
#include "treemax/maximal.hpp"
#include "treemax/numerics.hpp"
#include "treemax/tree_geometry.hpp"

namespace treemax {

// || M^gamma f ||_{q, infinity} over the WHOLE tree, f finitely supported.
//
// Both overloads share the same skeleton: M^gamma f is constant on exactly
// computable vertex classes once ||x|| clears the support, its per-class
// values decay strictly faster than k^(-gamma) per unit depth, and the weak
// functional sup_lambda lambda #{M^gamma f >= lambda}^(1/q) is attained at a
// value breakpoint. Candidates are enumerated to a depth where the breakpoint
// sequence has converged to its limit cycle far below working precision
// (deviations scale like k^(-depth)), so the reported sup is exact for every
// practical tolerance. q < 1/gamma makes the breakpoint sequence diverge and
// is reported as such.

namespace detail {

struct WeakCandidate {
    Real    value; // M^gamma f on the class
    Integer count; // class size
};

// depth margin past the support after which limit-cycle deviations are < k^-160
constexpr int weak_norm_extra_depth = 200;

inline NormResult weak_norm_from_candidates(int k, std::vector<WeakCandidate> cands,
                                            const Real& q) {
    std::sort(cands.begin(), cands.end(),
              [](const WeakCandidate& a, const WeakCandidate& b) { return b.value < a.value; });
    Integer total = 0;
    for (const auto& c : cands) total += c.count;
    const Real  inv_q = Real(1) / q;
    const Real  total_pow = pow(Real(total), inv_q);
    Real        best(0);
    Integer     cum = 0;
    std::size_t j   = 0;
    while (j < cands.size()) {
        Real v = cands[j].value;
        if (v == 0) break;
        // all remaining breakpoints obey t <= v * total^(1/q)
        if (v * total_pow <= best) break;
        do {
            cum += cands[j].count;
            ++j;
        } while (j < cands.size() && cands[j].value == v);
        Real t = v * pow(Real(cum), inv_q);
        if (t > best) best = t;
    }
    return NormResult::finite(LogScalar::from_real(k, best));
}

} // namespace detail

inline NormResult operator_weak_norm(const RadialFunction& f, const Real& gamma, const Real& q) {
    detail::touch_precision();
    if (!(gamma > 0)) throw parameter_error("operator_weak_norm: gamma must be > 0");
    if (!(q >= 1) || is_inf(q)) throw parameter_error("operator_weak_norm: q must be in [1, inf)");
    if (f.has_tail())
        throw unsupported_tail_error("operator_weak_norm: tail descriptor present");
    const int k = f.k();
    const int N = f.support_bound();
    if (N < 0) return NormResult::finite(LogScalar::zero(k));
    if (Real(1) / q > gamma + Real("1e-18"))
        return NormResult::diverged("operator_weak_norm: q < 1/gamma, weak norm infinite");

    const TreeParams& tp     = f.tree();
    const int         m0     = N + 1;
    const int         m_deep = m0 + detail::weak_norm_extra_depth;

    std::vector<detail::WeakCandidate> cands;
    cands.reserve(static_cast<std::size_t>(m_deep) + 1);

    // near the support: direct evaluation, one candidate per sphere
    MaximalParams mp(gamma);
    for (int m = 0; m < m0; ++m)
        cands.push_back({maximal_radial(f, mp, m).to_real(), sphere_size(tp, m)});

    // past the support the sphere sums around x depend only on r - ||x||:
    // G(i) = sum over B_{||x||+i}(x) of f, i in [-N, N], independent of ||x||
    auto              fv   = detail::radial_value_table(f, N);
    auto              kpow = detail::k_power_table(k, static_cast<long>(m0) + N);
    std::vector<Real> G;
    G.reserve(2 * static_cast<std::size_t>(N) + 1);
    Real acc(0);
    for (int i = -N; i <= N; ++i) {
        acc += detail::radial_sphere_sum(k, fv, kpow, m0, m0 + i);
        G.push_back(acc);
    }
    auto bpow = detail::ball_power_table(tp, m_deep + N, gamma);
    for (int m = m0; m <= m_deep; ++m) {
        Real v(0);
        for (int i = -N; i <= N; ++i) {
            Real cand = G[static_cast<std::size_t>(i + N)] * bpow[static_cast<std::size_t>(m + i)];
            if (cand > v) v = cand;
        }
        cands.push_back({std::move(v), sphere_size(tp, m)});
    }
    return detail::weak_norm_from_candidates(k, std::move(cands), q);
}

inline NormResult operator_weak_norm(const FiniteFunction& f, const Real& gamma, const Real& q) {
    detail::touch_precision();
    if (!(gamma > 0)) throw parameter_error("operator_weak_norm: gamma must be > 0");
    if (!(q >= 1) || is_inf(q)) throw parameter_error("operator_weak_norm: q must be in [1, inf)");
    const int k = f.k();
    if (f.empty()) return NormResult::finite(LogScalar::zero(k));
    const int M0 = f.max_norm();
    if (M0 == 0) { // supported at the root only: radial with a one-entry table
        RadialFunction rf(f.tree(), {f.value_at(VertexAddress(f.tree()))});
        return operator_weak_norm(rf, gamma, q);
    }
    if (Real(1) / q > gamma + Real("1e-18"))
        return NormResult::diverged("operator_weak_norm: q < 1/gamma, weak norm infinite");

    const TreeParams& tp     = f.tree();
    const int         m_deep = M0 + detail::weak_norm_extra_depth;
    auto              atoms  = detail::support_atoms(f);

    std::vector<detail::WeakCandidate> cands;

    // ||x|| < M0: individual vertices
    MaximalParams mp(gamma);
    for (const auto& x : enumerate_ball(tp, M0 - 1))
        cands.push_back({maximal_at(f, x, mp).to_real(), Integer(1)});

    // ||x|| >= M0: every x below w in S_{M0} at depth m satisfies
    // d(x, y) = (m - M0) + d(w, y) for all support points y, so the class
    // (w, m) shares one value with multiplicity k^(m - M0)
    auto bpow = detail::ball_power_table(tp, m_deep + 2 * M0, gamma);
    for (const auto& w : enumerate_ball(tp, M0)) {
        if (w.norm() != M0) continue;
        auto    cums = detail::cumulative_ball_sums(atoms, w, 2 * M0);
        Integer mult = 1;
        for (int m = M0; m <= m_deep; ++m) {
            Real v(0);
            for (int rho = 0; rho <= 2 * M0; ++rho) {
                Real cand = cums[static_cast<std::size_t>(rho)] *
                            bpow[static_cast<std::size_t>(m - M0 + rho)];
                if (cand > v) v = cand;
            }
            cands.push_back({std::move(v), mult});
            mult *= k;
        }
    }
    return detail::weak_norm_from_candidates(k, std::move(cands), q);
}

} // namespace treemax
