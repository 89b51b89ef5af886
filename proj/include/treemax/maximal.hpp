#pragma once

#include <optional>
#include <tuple>
#include <vector>

#include "treemax/errors.hpp"
#include "treemax/lorentz.hpp"
#include "treemax/numerics.hpp"
#include "treemax/tree_geometry.hpp"

namespace treemax {

struct MaximalParams {
    Real               gamma;
    std::optional<int> r_cap; // nullopt: sup over all radii (support closure)

    explicit MaximalParams(Real g, std::optional<int> cap = std::nullopt)
        : gamma(std::move(g)), r_cap(cap) {
        if (!(gamma > 0)) throw parameter_error("MaximalParams: gamma must be > 0");
        if (r_cap && *r_cap < 0) throw parameter_error("MaximalParams: negative radius cap");
    }
};

// a_gamma(n) = k^(-gamma n)  (full), or a_{r,gamma}(n) = |B_r|^(-gamma) [n <= r]
struct RadialKernel {
    enum class Form { Full, Truncated };

    Form form;
    Real gamma;
    int  r = 0;

    static RadialKernel full(Real gamma) {
        if (!(gamma > 0)) throw parameter_error("RadialKernel: gamma must be > 0");
        return {Form::Full, std::move(gamma), 0};
    }

    static RadialKernel truncated(int r, Real gamma) {
        if (!(gamma > 0)) throw parameter_error("RadialKernel: gamma must be > 0");
        if (r < 0) throw parameter_error("RadialKernel: negative truncation radius");
        return {Form::Truncated, std::move(gamma), r};
    }
};

namespace detail {

// support flattened once per operator call; values converted to Real up front
struct SupportAtom {
    VertexAddress addr;
    int           norm;
    Real          value;
};

inline std::vector<SupportAtom> support_atoms(const FiniteFunction& f) {
    std::vector<SupportAtom> out;
    out.reserve(f.support_size());
    for (const auto& [y, v] : f.values()) out.push_back({y, y.norm(), v.to_real()});
    return out;
}

// Cumulative ball sums around z: out[r] = sum over d(z,y) <= r, r = 0..rmax.
// Terms are accumulated in (distance, norm) order; for radial inputs the value
// sequence is then identical for all centers on a common sphere, which makes
// the output bit-identical there.
inline std::vector<Real> cumulative_ball_sums(const std::vector<SupportAtom>& atoms,
                                              const VertexAddress& z, int rmax) {
    std::vector<std::tuple<int, int, const Real*>> hits;
    hits.reserve(atoms.size());
    for (const auto& a : atoms) {
        int d = distance(z, a.addr);
        if (d <= rmax) hits.emplace_back(d, a.norm, &a.value);
    }
    std::sort(hits.begin(), hits.end(), [](const auto& a, const auto& b) {
        if (std::get<0>(a) != std::get<0>(b)) return std::get<0>(a) < std::get<0>(b);
        return std::get<1>(a) < std::get<1>(b);
    });
    std::vector<Real> out(static_cast<std::size_t>(rmax) + 1, Real(0));
    Real              running(0);
    std::size_t       i = 0;
    for (int r = 0; r <= rmax; ++r) {
        while (i < hits.size() && std::get<0>(hits[i]) == r) running += *std::get<2>(hits[i++]);
        out[static_cast<std::size_t>(r)] = running;
    }
    return out;
}

// |B_r|^(-gamma) for r = 0..rmax
inline std::vector<Real> ball_power_table(const TreeParams& tp, int rmax, const Real& gamma) {
    std::vector<Real> out;
    out.reserve(static_cast<std::size_t>(rmax) + 1);
    for (int r = 0; r <= rmax; ++r) out.push_back(pow(Real(ball_size(tp, r)), -gamma));
    return out;
}

} // namespace detail

// |B_r|^(-gamma) * sum_{B_r(x)} f, a single term of the maximal sup
inline LogScalar ball_average(const FiniteFunction& f, const VertexAddress& x, int r,
                              const Real& gamma) {
    detail::touch_precision();
    if (r < 0) throw parameter_error("ball_average: negative radius");
    if (!(gamma > 0)) throw parameter_error("ball_average: gamma must be > 0");
    auto atoms = detail::support_atoms(f);
    auto cums  = detail::cumulative_ball_sums(atoms, x, r);
    Real v     = cums.back() * pow(Real(ball_size(f.tree(), r)), -gamma);
    return LogScalar::from_real(f.k(), v);
}

// True M^gamma f(x) for finitely supported f: the sup over r <= cap, where the
// default cap ||x|| + max ||supp f|| already contains the global argmax (once
// the ball swallows the support the numerator freezes while |B_r|^(-gamma)
// strictly decreases).
inline LogScalar maximal_at(const FiniteFunction& f, const VertexAddress& x,
                            const MaximalParams& mp) {
    detail::touch_precision();
    if (f.empty()) return LogScalar::zero(f.k());
    int closure = x.norm() + f.max_norm();
    int rcap    = mp.r_cap ? std::min(*mp.r_cap, closure) : closure;
    auto atoms  = detail::support_atoms(f);
    auto cums   = detail::cumulative_ball_sums(atoms, x, rcap);
    auto bpow   = detail::ball_power_table(f.tree(), rcap, mp.gamma);
    Real best(0);
    for (int r = 0; r <= rcap; ++r) {
        Real cand = cums[static_cast<std::size_t>(r)] * bpow[static_cast<std::size_t>(r)];
        if (cand > best) best = cand;
    }
    return LogScalar::from_real(f.k(), best);
}

// M^gamma f on the truncated tree B_R(o), sup restricted to interior-safe
// radii r <= R - ||x|| so that every ball counted is complete.
inline FiniteFunction maximal_bruteforce(const FiniteFunction& f, const Real& gamma, int R,
                                         std::uint64_t budget = (1u << 20)) {
    detail::touch_precision();
    if (!(gamma > 0)) throw parameter_error("maximal_bruteforce: gamma must be > 0");
    if (R < 0) throw parameter_error("maximal_bruteforce: negative radius");
    auto           vertices = enumerate_ball(f.tree(), R, budget);
    auto           atoms    = detail::support_atoms(f);
    auto           bpow     = detail::ball_power_table(f.tree(), R, gamma);
    FiniteFunction out(f.tree());
    for (const auto& x : vertices) {
        int  rmax = R - x.norm();
        auto cums = detail::cumulative_ball_sums(atoms, x, rmax);
        Real best(0);
        for (int r = 0; r <= rmax; ++r) {
            Real cand = cums[static_cast<std::size_t>(r)] * bpow[static_cast<std::size_t>(r)];
            if (cand > best) best = cand;
        }
        out.set(x, LogScalar::from_real(f.k(), best));
    }
    return out;
}

// Uncentered variant on B_R(o): at x, sup over every complete ball B_r(z)
// containing x (d(x,z) <= r <= R - ||z||).
inline FiniteFunction uncentered_bruteforce(const FiniteFunction& f, const Real& gamma, int R,
                                            std::uint64_t budget = (1u << 20)) {
    detail::touch_precision();
    if (!(gamma > 0)) throw parameter_error("uncentered_bruteforce: gamma must be > 0");
    if (R < 0) throw parameter_error("uncentered_bruteforce: negative radius");
    auto vertices = enumerate_ball(f.tree(), R, budget);
    auto atoms    = detail::support_atoms(f);
    auto bpow     = detail::ball_power_table(f.tree(), R, gamma);

    // per center z: M_z[d] = max over r in [d, R-||z||] of |B_r|^(-gamma) S(z,r)
    std::vector<std::vector<Real>> suffix;
    suffix.reserve(vertices.size());
    for (const auto& z : vertices) {
        int  rmax = R - z.norm();
        auto cums = detail::cumulative_ball_sums(atoms, z, rmax);
        std::vector<Real> mz(static_cast<std::size_t>(rmax) + 1);
        Real              best(0);
        for (int r = rmax; r >= 0; --r) {
            Real cand = cums[static_cast<std::size_t>(r)] * bpow[static_cast<std::size_t>(r)];
            if (cand > best) best = cand;
            mz[static_cast<std::size_t>(r)] = best;
        }
        suffix.push_back(std::move(mz));
    }

    FiniteFunction out(f.tree());
    for (const auto& x : vertices) {
        Real best(0);
        for (std::size_t zi = 0; zi < vertices.size(); ++zi) {
            int d = distance(x, vertices[zi]);
            if (d >= static_cast<int>(suffix[zi].size())) continue; // no complete ball reaches x
            const Real& cand = suffix[zi][static_cast<std::size_t>(d)];
            if (cand > best) best = cand;
        }
        out.set(x, LogScalar::from_real(f.k(), best));
    }
    return out;
}

namespace detail {

// f-values as Reals for norms 0..limit (zeros beyond the table when no tail)
inline std::vector<Real> radial_value_table(const RadialFunction& f, long limit) {
    std::vector<Real> out;
    out.reserve(static_cast<std::size_t>(limit) + 1);
    for (long n = 0; n <= limit; ++n) out.push_back(f.value_at(n).to_real());
    return out;
}

// k^0 .. k^max_e, exact (mpfr, correctly rounded once past the mantissa)
inline std::vector<Real> k_power_table(int k, long max_e) {
    std::vector<Real> out;
    out.reserve(static_cast<std::size_t>(max_e) + 1);
    out.emplace_back(1);
    for (long i = 1; i <= max_e; ++i) out.push_back(out.back() * k);
    return out;
}

// Sum of f over S_n(x), ||x|| = m, with the decomposition counts inlined
// against a value table (zero beyond fv). Allocation-free: this is the inner
// loop of every radial operator.
inline Real radial_sphere_sum(int k, const std::vector<Real>& fv, const std::vector<Real>& kpow,
                              int m, int n) {
    const long Nv = static_cast<long>(fv.size()) - 1;
    if (n == 0) return (m <= Nv) ? fv[static_cast<std::size_t>(m)] : Real(0);
    Real acc(0);
    const long jmax = std::min<long>(m, n);
    long       jlo  = m + n - Nv;
    jlo             = jlo <= 0 ? 0 : (jlo + 1) / 2;
    for (long j = jlo; j <= jmax; ++j) {
        const Real& fval = fv[static_cast<std::size_t>(m + n - 2 * j)];
        if (fval == 0) continue;
        if (j == n) // pure ascent, the ancestor
            acc += fval;
        else if (j == 0)
            acc += (m == 0 ? Real(k + 1) * kpow[static_cast<std::size_t>(n - 1)]
                           : kpow[static_cast<std::size_t>(n)]) *
                   fval;
        else if (j == m) // through the root
            acc += kpow[static_cast<std::size_t>(n - m)] * fval;
        else
            acc += Real(k - 1) * kpow[static_cast<std::size_t>(n - j - 1)] * fval;
    }
    return acc;
}

} // namespace detail

// sum of f over the sphere S_n(x) for any ||x|| = m (tail values included)
inline LogScalar radial_sphere_sum(const RadialFunction& f, int m, int n) {
    detail::touch_precision();
    if (m < 0 || n < 0) throw parameter_error("radial_sphere_sum: negative argument");
    auto fv   = detail::radial_value_table(f, m + n);
    auto kpow = detail::k_power_table(f.k(), n);
    return LogScalar::from_real(f.k(), detail::radial_sphere_sum(f.k(), fv, kpow, m, n));
}

// Radial fast path for M^gamma f at any vertex of norm m. Exact (untruncated)
// by default; a radius cap reproduces the truncated-tree oracle.
inline LogScalar maximal_radial(const RadialFunction& f, const MaximalParams& mp, int m) {
    detail::touch_precision();
    if (m < 0) throw parameter_error("maximal_radial: negative norm");
    if (f.has_tail())
        throw unsupported_tail_error("maximal_radial: tail descriptor present; truncate first");
    const int N = f.support_bound();
    if (N < 0) return LogScalar::zero(f.k());
    int closure = m + N;
    int rcap    = mp.r_cap ? std::min(*mp.r_cap, closure) : closure;
    auto fv     = detail::radial_value_table(f, std::min<long>(N, m + rcap));
    auto kpow   = detail::k_power_table(f.k(), rcap);
    auto bpow   = detail::ball_power_table(f.tree(), rcap, mp.gamma);
    Real running(0), best(0);
    for (int r = 0; r <= rcap; ++r) {
        running += detail::radial_sphere_sum(f.k(), fv, kpow, m, r);
        Real cand = running * bpow[static_cast<std::size_t>(r)];
        if (cand > best) best = cand;
    }
    return LogScalar::from_real(f.k(), best);
}

inline LogScalar maximal_radial(const RadialFunction& f, const Real& gamma, int m) {
    return maximal_radial(f, MaximalParams(gamma), m);
}

// (f * kern)(x) for ||x|| = m: sum_n kern(n) * (sum of f over S_n(x)).
// Truncated kernels and finitely supported f give exact finite sums; a full
// kernel against a tail is certified shell-family by shell-family (each
// decomposition entry scales by exactly k per unit radius once every norm it
// touches is in the tail regime).
inline NormResult convolve_radial(const RadialFunction& f, const RadialKernel& kern, int m) {
    detail::touch_precision();
    if (m < 0) throw parameter_error("convolve_radial: negative norm");
    const int   k   = f.k();
    const Real& lnk = LogScalar::ln_base(k);

    if (kern.form == RadialKernel::Form::Truncated) {
        auto fv   = detail::radial_value_table(f, m + kern.r);
        auto kpow = detail::k_power_table(k, kern.r);
        Real acc(0);
        for (int n = 0; n <= kern.r; ++n) acc += detail::radial_sphere_sum(k, fv, kpow, m, n);
        acc *= pow(Real(ball_size(f.tree(), kern.r)), -kern.gamma);
        return NormResult::finite(LogScalar::from_real(k, acc));
    }

    // full kernel a_gamma(n) = k^(-gamma n)
    if (!f.has_tail()) {
        const int N = f.support_bound();
        if (N < 0) return NormResult::finite(LogScalar::zero(k));
        auto fv   = detail::radial_value_table(f, N);
        auto kpow = detail::k_power_table(k, m + N);
        Real acc(0);
        for (int n = 0; n <= m + N; ++n) {
            Real s = detail::radial_sphere_sum(k, fv, kpow, m, n);
            if (s != 0) acc += exp(Real(-n) * kern.gamma * lnk) * s;
        }
        return NormResult::finite(LogScalar::from_real(k, acc));
    }

    // head: exhaustive up to n0 = m + N + 2, beyond which every shell family
    // the decomposition produces lives entirely on tail norms
    const int  N    = f.max_table_norm();
    const long n0   = m + N + 2;
    auto       fv   = detail::radial_value_table(f, m + n0);
    auto       kpow = detail::k_power_table(k, n0);
    Real       acc(0);
    for (long n = 0; n <= n0; ++n) {
        Real s = detail::radial_sphere_sum(k, fv, kpow, m, static_cast<int>(n));
        if (s != 0) acc += exp(Real(-n) * kern.gamma * lnk) * s;
    }
    const Real q_exp = Real(1) - kern.gamma + f.tail().log_ratio;
    double     rem   = 0.0;
    auto       dec   = sphere_decomposition(f.tree(), m, static_cast<int>(n0 + 1));
    std::vector<LogScalar> tail_terms;
    for (const auto& e : dec.entries) {
        LogScalar t0 = LogScalar::from_integer(k, e.count) * f.value_at(e.norm);
        t0           = LogScalar::from_exponent(k, t0.exponent() - kern.gamma * Real(n0 + 1));
        TailSum ts   = certified_power_sum(k, t0, e.norm, q_exp, f.tail().degree);
        if (ts.divergent)
            return NormResult::diverged("convolve_radial: " + ts.reason);
        tail_terms.push_back(ts.value);
        rem = std::max(rem, ts.remainder);
    }
    LogScalar total = LogScalar::from_real(k, acc) + LogScalar::sum(tail_terms);
    return NormResult::finite(total, rem);
}

} // namespace treemax
