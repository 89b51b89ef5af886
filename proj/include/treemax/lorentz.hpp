#pragma once

#include <map>
#include <optional>
#include <vector>

#include "treemax/errors.hpp"
#include "treemax/numerics.hpp"
#include "treemax/tree_geometry.hpp"

namespace treemax {

// p in [1, inf], s in [1, inf]; p = inf only together with s = inf.
struct LorentzIndex {
    Real p;
    Real s;

    LorentzIndex(Real p_, Real s_) : p(std::move(p_)), s(std::move(s_)) {
        if (!(p >= 1) || !(s >= 1)) throw parameter_error("LorentzIndex: p, s must be >= 1");
        if (is_inf(p) && !is_inf(s))
            throw parameter_error("LorentzIndex: p = inf requires s = inf");
    }
};

inline Real conjugate_exponent(const Real& p) {
    if (!(p >= 1)) throw parameter_error("conjugate_exponent: p must be >= 1");
    if (p == 1) return real_infinity();
    if (is_inf(p)) return Real(1);
    return p / (p - 1);
}

// Extends a radial table f(0..N) beyond N as
//   f(n) = f(N) * k^(log_ratio*(n-N)) * ((1+n)/(1+N))^degree.
struct TailDescriptor {
    Real log_ratio; // base-k exponent of the per-step value ratio
    Real degree;    // polynomial factor degree
};

// Nonnegative radial function: a value table indexed by the norm, optionally
// extended to all of the tree by a tail descriptor anchored at the last entry.
class RadialFunction {
public:
    RadialFunction(const TreeParams& tp, std::vector<LogScalar> values,
                   std::optional<TailDescriptor> tail = std::nullopt)
        : tree_(tp), values_(std::move(values)), tail_(std::move(tail)) {
        if (values_.empty()) values_.push_back(LogScalar::zero(tree_.k));
        for (const auto& v : values_)
            if (!v.is_zero() && v.base() != tree_.k)
                throw parameter_error("RadialFunction: value base does not match k");
        if (tail_ && values_.back().is_zero())
            throw parameter_error("RadialFunction: tail must anchor at a nonzero table entry");
    }

    const TreeParams& tree() const { return tree_; }
    int               k() const { return tree_.k; }
    bool              has_tail() const { return tail_.has_value(); }

    const TailDescriptor& tail() const {
        if (!tail_) throw domain_error("RadialFunction: no tail descriptor");
        return *tail_;
    }

    // largest table norm, i.e. N
    int max_table_norm() const { return static_cast<int>(values_.size()) - 1; }

    // largest norm carrying a nonzero value; -1 for the zero function
    int support_bound() const {
        if (tail_) throw unsupported_tail_error("support_bound: function has a tail");
        for (int n = max_table_norm(); n >= 0; --n)
            if (!values_[n].is_zero()) return n;
        return -1;
    }

    bool is_zero() const { return !tail_ && support_bound() < 0; }

    LogScalar value_at(long n) const {
        if (n < 0) throw parameter_error("value_at: negative norm");
        if (n <= max_table_norm()) return values_[static_cast<std::size_t>(n)];
        if (!tail_) return LogScalar::zero(tree_.k);
        const long  N   = max_table_norm();
        const Real& lnk = LogScalar::ln_base(tree_.k);
        Real        e   = values_.back().exponent();
        e += tail_->log_ratio * (n - N);
        e += tail_->degree * (log(Real(1 + n)) - log(Real(1 + N))) / lnk;
        return LogScalar::from_exponent(tree_.k, std::move(e));
    }

    const std::vector<LogScalar>& table() const { return values_; }

private:
    TreeParams                    tree_;
    std::vector<LogScalar>        values_;
    std::optional<TailDescriptor> tail_;
};

// Nonnegative finitely supported function, sparse over vertex addresses.
class FiniteFunction {
public:
    explicit FiniteFunction(const TreeParams& tp) : tree_(tp) {}

    const TreeParams& tree() const { return tree_; }
    int               k() const { return tree_.k; }

    void set(const VertexAddress& x, const LogScalar& v) {
        if (x.k() != tree_.k) throw parameter_error("FiniteFunction: vertex from a different tree");
        if (v.is_zero()) {
            vals_.erase(x);
            return;
        }
        if (v.base() != tree_.k) throw parameter_error("FiniteFunction: value base does not match k");
        vals_.insert_or_assign(x, v);
    }

    LogScalar value_at(const VertexAddress& x) const {
        auto it = vals_.find(x);
        return it == vals_.end() ? LogScalar::zero(tree_.k) : it->second;
    }

    bool        empty() const { return vals_.empty(); }
    std::size_t support_size() const { return vals_.size(); }

    // keys ascend in (norm, lexicographic) order, so the last key is deepest
    int max_norm() const { return vals_.empty() ? 0 : vals_.rbegin()->first.norm(); }

    const std::map<VertexAddress, LogScalar>& values() const { return vals_; }

private:
    TreeParams                         tree_;
    std::map<VertexAddress, LogScalar> vals_;
};

// Step description of lambda -> #{ |f| > lambda }: thresholds strictly
// decreasing, counts[j] = #{ |f| >= thresholds[j] } strictly increasing.
struct DistributionFunction {
    std::vector<LogScalar> thresholds;
    std::vector<Integer>   counts;
};

namespace detail {

// (value, multiplicity) pairs -> grouped distribution, largest value first
inline DistributionFunction build_distribution(std::vector<std::pair<LogScalar, Integer>> items) {
    std::sort(items.begin(), items.end(),
              [](const auto& a, const auto& b) { return b.first < a.first; });
    DistributionFunction d;
    Integer              cum = 0;
    for (auto& [v, c] : items) {
        if (v.is_zero()) continue;
        cum += c;
        if (!d.thresholds.empty() && d.thresholds.back() == v)
            d.counts.back() = cum;
        else {
            d.thresholds.push_back(v);
            d.counts.push_back(cum);
        }
    }
    return d;
}

} // namespace detail

inline DistributionFunction distribution(const FiniteFunction& f) {
    std::vector<std::pair<LogScalar, Integer>> items;
    items.reserve(f.support_size());
    for (const auto& [x, v] : f.values()) items.emplace_back(v, Integer(1));
    return detail::build_distribution(std::move(items));
}

inline DistributionFunction distribution(const RadialFunction& f) {
    if (f.has_tail())
        throw unsupported_tail_error("distribution: radial function has a tail descriptor");
    std::vector<std::pair<LogScalar, Integer>> items;
    for (int n = 0; n <= f.max_table_norm(); ++n)
        items.emplace_back(f.value_at(n), sphere_size(f.tree(), n));
    return detail::build_distribution(std::move(items));
}

// || f ||_{p,s}^s = (p/s) * sum_j c_j^(s/p) (v_j^s - v_{j+1}^s), v_{M+1} = 0
inline LogScalar lorentz_norm(const DistributionFunction& d, const LorentzIndex& idx, int k) {
    if (is_inf(idx.p) || is_inf(idx.s))
        throw parameter_error("lorentz_norm: requires p < inf and s < inf (use weak_norm or lebesgue_norm)");
    if (d.thresholds.empty()) return LogScalar::zero(k);
    const Real             sp = idx.s / idx.p;
    std::vector<LogScalar> terms;
    terms.reserve(d.thresholds.size());
    for (std::size_t j = 0; j < d.thresholds.size(); ++j) {
        LogScalar vs   = pow(d.thresholds[j], idx.s);
        LogScalar next = (j + 1 < d.thresholds.size()) ? pow(d.thresholds[j + 1], idx.s)
                                                       : LogScalar::zero(k);
        terms.push_back(pow(LogScalar::from_integer(k, d.counts[j]), sp) * diff(vs, next));
    }
    LogScalar total = LogScalar::from_real(k, idx.p / idx.s) * LogScalar::sum(terms);
    return pow(total, Real(1) / idx.s);
}

inline LogScalar lorentz_norm(const FiniteFunction& f, const LorentzIndex& idx) {
    return lorentz_norm(distribution(f), idx, f.k());
}

inline LogScalar lorentz_norm(const RadialFunction& f, const LorentzIndex& idx) {
    return lorentz_norm(distribution(f), idx, f.k());
}

// sup_lambda lambda * #{|f| > lambda}^(1/p), attained at a breakpoint
inline LogScalar weak_norm(const DistributionFunction& d, const Real& p, int k) {
    if (!(p >= 1) || is_inf(p)) throw parameter_error("weak_norm: p must be in [1, inf)");
    LogScalar best = LogScalar::zero(k);
    for (std::size_t j = 0; j < d.thresholds.size(); ++j) {
        LogScalar t = d.thresholds[j] * pow(LogScalar::from_integer(k, d.counts[j]), Real(1) / p);
        if (t > best) best = t;
    }
    return best;
}

inline LogScalar weak_norm(const FiniteFunction& f, const Real& p) {
    return weak_norm(distribution(f), p, f.k());
}

inline LogScalar weak_norm(const RadialFunction& f, const Real& p) {
    return weak_norm(distribution(f), p, f.k());
}

inline LogScalar lebesgue_norm(const FiniteFunction& f, const Real& p) {
    if (!(p >= 1)) throw parameter_error("lebesgue_norm: p must be >= 1");
    if (f.empty()) return LogScalar::zero(f.k());
    if (is_inf(p)) {
        LogScalar best = LogScalar::zero(f.k());
        for (const auto& [x, v] : f.values())
            if (v > best) best = v;
        return best;
    }
    std::vector<LogScalar> terms;
    terms.reserve(f.support_size());
    for (const auto& [x, v] : f.values()) terms.push_back(pow(v, p));
    return pow(LogScalar::sum(terms), Real(1) / p);
}

inline LogScalar lebesgue_norm(const RadialFunction& f, const Real& p) {
    if (!(p >= 1)) throw parameter_error("lebesgue_norm: p must be >= 1");
    if (f.has_tail())
        throw unsupported_tail_error("lebesgue_norm: radial function has a tail descriptor");
    if (is_inf(p)) {
        LogScalar best = LogScalar::zero(f.k());
        for (int n = 0; n <= f.max_table_norm(); ++n)
            if (f.value_at(n) > best) best = f.value_at(n);
        return best;
    }
    std::vector<LogScalar> terms;
    for (int n = 0; n <= f.max_table_norm(); ++n) {
        const LogScalar& v = f.value_at(n);
        if (v.is_zero()) continue;
        terms.push_back(pow(v, p) * LogScalar::from_integer(f.k(), sphere_size(f.tree(), n)));
    }
    return pow(LogScalar::sum(terms), Real(1) / p);
}

// ---------------------------------------------------------------------------
// Certified handling of sums/sups of t(n) = t_start * k^(q(n-start)) *
// ((1+n)/(1+start))^D over n >= start. Everything with a tail reduces to this
// shape (geometric ratio times polynomial factor).

struct TailSum {
    bool      divergent = false;
    LogScalar value;
    double    remainder = 0.0; // certified relative bound on the dropped part
    std::string reason;
};

namespace detail {

constexpr double tail_exponent_tiny = 1e-20;

// Euler-Maclaurin value of sum_{n >= a} (1+n)^D for D < -1, with the error
// bound |D(D-1)(D-2)| (1+a)^(D-3) / 720 (first omitted correction, valid
// because all derivatives of (1+x)^D have constant sign).
inline Real em_poly_tail(long a, const Real& D, Real& abs_error) {
    Real base = Real(1 + a);
    Real v    = pow(base, D + 1) / (-D - 1) + pow(base, D) / 2 - D * pow(base, D - 1) / 12;
    abs_error = abs(D * (D - 1) * (D - 2)) * pow(base, D - 3) / 720;
    return v;
}

} // namespace detail

// Sum of t(n) over n >= start. Branches:
//   q > 0, or q = 0 with D >= -1          -> divergent
//   q = 0, D < -1                          -> explicit head + Euler-Maclaurin
//   q < 0                                  -> explicit sum extended until the
//        geometric remainder bound k^q ((2+n)/(1+n))^max(D,0) / (1 - ...) is
//        certified below rel_target, then dropped
inline TailSum certified_power_sum(int k, const LogScalar& t_start, long start, const Real& q,
                                   const Real& D, double rel_target = 1e-12) {
    detail::touch_precision();
    TailSum out;
    if (t_start.is_zero()) {
        out.value = LogScalar::zero(k);
        return out;
    }
    const double tiny = detail::tail_exponent_tiny;
    if (q > tiny) {
        out.divergent = true;
        out.reason    = "geometric exponent positive";
        return out;
    }
    const Real& lnk = LogScalar::ln_base(k);
    if (abs(q) <= tiny) {
        if (D >= Real(-1) - Real(1e-12)) {
            out.divergent = true;
            out.reason    = "polynomial tail with degree >= -1";
            return out;
        }
        // terms relative to t_start: ((1+n)/(1+start))^D
        const long n0 = std::max(start, 10000L);
        Real       ds = pow(Real(1 + start), -D); // 1/(1+start)^D
        Real       acc(0);
        for (long n = start; n <= n0; ++n) acc += pow(Real(1 + n), D) * ds;
        Real abs_err(0);
        Real tail = detail::em_poly_tail(n0 + 1, D, abs_err) * ds;
        acc += tail;
        out.value     = t_start * LogScalar::from_real(k, acc);
        out.remainder = static_cast<double>(abs_err * ds / acc);
        return out;
    }
    // q < 0: extend explicitly, then certify a geometric remainder
    const Real kq = exp(q * lnk); // in (0,1)
    Real       acc(0);
    Real       term(1); // t(start)/t_start
    long       n = start;
    const long cap = start + 2000000;
    while (true) {
        acc += term;
        // per-step ratio bound from here on: kq * ((2+n)/(1+n))^max(D,0)
        Real rho = kq;
        if (D > 0) rho *= pow(Real(n + 2) / Real(n + 1), D);
        if (rho < 1) {
            Real bound = term * rho / (1 - rho);
            if (bound <= rel_target * acc) {
                out.value     = t_start * LogScalar::from_real(k, acc);
                out.remainder = static_cast<double>(bound / acc);
                return out;
            }
        }
        if (++n > cap)
            throw resource_error("certified_power_sum: remainder failed to certify within budget");
        term = term * kq * pow(Real(n + 1) / Real(n), D);
    }
}

// Sup of the same family: finite iff the terms are eventually nonincreasing.
inline TailSum certified_power_sup(int k, const LogScalar& t_start, long start, const Real& q,
                                   const Real& D) {
    detail::touch_precision();
    TailSum out;
    if (t_start.is_zero()) {
        out.value = LogScalar::zero(k);
        return out;
    }
    const double tiny = detail::tail_exponent_tiny;
    if (q > tiny || (abs(q) <= tiny && D > tiny)) {
        out.divergent = true;
        out.reason    = "tail terms unbounded";
        return out;
    }
    if (abs(q) <= tiny || D <= 0) { // nonincreasing from the start
        out.value = t_start;
        return out;
    }
    // q < 0, D > 0: terms rise until k^q ((2+n)/(1+n))^D < 1, then fall
    const Real& lnk = LogScalar::ln_base(k);
    const Real  kq  = exp(q * lnk);
    Real        term(1), best(1);
    long        n   = start;
    const long  cap = start + 10000000;
    while (true) {
        Real ratio = kq * pow(Real(n + 2) / Real(n + 1), D);
        if (ratio <= 1) break;
        term *= ratio;
        if (term > best) best = term;
        if (++n > cap) throw resource_error("certified_power_sup: peak not reached within budget");
    }
    out.value = t_start * LogScalar::from_real(k, best);
    return out;
}

// || g ||_{l^s(N)} for g(n) = f(n) k^(n/p): the sequence-space surrogate whose
// value is equivalent to the Lorentz norm of a radial f.
inline NormResult pytlik_surrogate(const RadialFunction& f, const LorentzIndex& idx) {
    const int k = f.k();
    if (is_inf(idx.p) && !is_inf(idx.s))
        throw parameter_error("pytlik_surrogate: p = inf requires s = inf");
    const Real inv_p = is_inf(idx.p) ? Real(0) : Real(1) / idx.p;
    const int  N     = f.max_table_norm();

    std::vector<LogScalar> gvals; // g(n) over the table
    gvals.reserve(N + 1);
    for (int n = 0; n <= N; ++n) {
        LogScalar v = f.value_at(n);
        if (v.is_zero())
            gvals.push_back(v);
        else
            gvals.push_back(LogScalar::from_exponent(k, v.exponent() + n * inv_p));
    }

    if (is_inf(idx.s)) {
        LogScalar head = LogScalar::zero(k);
        for (const auto& g : gvals)
            if (g > head) head = g;
        if (!f.has_tail()) return NormResult::finite(head);
        LogScalar g1 = f.value_at(N + 1);
        g1           = LogScalar::from_exponent(k, g1.exponent() + (N + 1) * inv_p);
        TailSum sup  = certified_power_sup(k, g1, N + 1, f.tail().log_ratio + inv_p, f.tail().degree);
        if (sup.divergent) return NormResult::diverged("pytlik surrogate sup: " + sup.reason);
        return NormResult::finite(head > sup.value ? head : sup.value);
    }

    std::vector<LogScalar> terms;
    for (const auto& g : gvals)
        if (!g.is_zero()) terms.push_back(pow(g, idx.s));
    LogScalar head = LogScalar::sum(terms);
    if (!f.has_tail()) {
        if (head.is_zero()) return NormResult::finite(LogScalar::zero(k));
        return NormResult::finite(pow(head, Real(1) / idx.s));
    }
    LogScalar g1 = f.value_at(N + 1);
    g1           = LogScalar::from_exponent(k, (g1.exponent() + (N + 1) * inv_p) * idx.s);
    TailSum ts   = certified_power_sum(k, g1, N + 1, idx.s * (f.tail().log_ratio + inv_p),
                                       idx.s * f.tail().degree);
    if (ts.divergent) return NormResult::diverged("pytlik surrogate sum: " + ts.reason);
    return NormResult::finite(pow(head + ts.value, Real(1) / idx.s), ts.remainder);
}

} // namespace treemax
