#pragma once

#include <boost/multiprecision/gmp.hpp>
#include <boost/multiprecision/mpfr.hpp>

#include <algorithm>
#include <cstdint>
#include <cstdlib>
#include <limits>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "treemax/errors.hpp"

namespace treemax {

using Integer  = boost::multiprecision::mpz_int;
using Rational = boost::multiprecision::mpq_rational;
using Real     = boost::multiprecision::mpfr_float; // variable precision

// ---------------------------------------------------------------------------
// Working precision.
//
// MPFR's default precision is thread-local. The process-wide digit count is
// fixed once (env TREEMAX_PRECISION_DIGITS, or set_precision_digits before any
// arithmetic); worker threads must call ensure_thread_precision() on entry.

namespace detail {

inline int parse_precision_env() {
    int d = 40;
    if (const char* env = std::getenv("TREEMAX_PRECISION_DIGITS")) {
        char* end = nullptr;
        long v = std::strtol(env, &end, 10);
        if (end && *end == '\0' && v >= 10 && v <= 10000) d = static_cast<int>(v);
    }
    return d;
}

inline int& precision_slot() {
    static int d = [] {
        int v = parse_precision_env();
        Real::default_precision(v);
        return v;
    }();
    return d;
}

// Cheap idempotent guard; every public entry point that builds Reals calls it.
inline void touch_precision() { (void)precision_slot(); }

} // namespace detail

inline int precision_digits() { return detail::precision_slot(); }

inline void set_precision_digits(int d) {
    if (d < 10 || d > 10000)
        throw parameter_error("precision digits must be in [10, 10000]");
    detail::precision_slot() = d;
    Real::default_precision(d);
}

// Call at the top of any worker thread that touches Real arithmetic.
inline void ensure_thread_precision() {
    Real::default_precision(detail::precision_slot());
}

inline bool is_inf(const Real& x) { return boost::multiprecision::isinf(x); }

inline Real real_infinity() {
    detail::touch_precision();
    return std::numeric_limits<Real>::infinity();
}

// ---------------------------------------------------------------------------
// LogScalar: a nonnegative quantity stored as sign + base-k exponent, so that
// values like k^(-40000) survive arithmetic with their exponents exact where
// the inputs are exact powers of the base.

class LogScalar {
public:
    LogScalar() : base_(0), positive_(false) {}

    static LogScalar zero(int base = 0) {
        if (base != 0) check_base(base);
        LogScalar r;
        r.base_ = base;
        return r;
    }

    static LogScalar one(int base) { return from_exponent(base, Real(0)); }

    static LogScalar from_exponent(int base, Real e) {
        detail::touch_precision();
        check_base(base);
        LogScalar r;
        r.base_     = base;
        r.positive_ = true;
        r.exp_      = std::move(e);
        return r;
    }

    // Exact when v is a power of the base times a small cofactor: factors of
    // the base are stripped in integer arithmetic first, so from_integer(2, 32)
    // has exponent exactly 5.
    static LogScalar from_integer(int base, Integer v) {
        detail::touch_precision();
        check_base(base);
        if (v < 0) throw domain_error("from_integer: negative value");
        if (v == 0) return zero(base);
        long a = 0;
        while (v % base == 0) {
            v /= base;
            ++a;
        }
        Real e(a);
        if (v != 1) e += log(Real(v)) / ln_base(base);
        return from_exponent(base, std::move(e));
    }

    static LogScalar from_real(int base, const Real& v) {
        detail::touch_precision();
        check_base(base);
        if (v < 0) throw domain_error("from_real: negative value");
        if (v == 0) return zero(base);
        return from_exponent(base, log(v) / ln_base(base));
    }

    bool is_zero() const { return !positive_; }
    int  base() const { return base_; }

    const Real& exponent() const {
        if (is_zero()) throw domain_error("exponent of zero");
        return exp_;
    }

    Real to_real() const {
        if (is_zero()) return Real(0);
        return exp(exp_ * ln_base(base_));
    }

    friend LogScalar operator*(const LogScalar& a, const LogScalar& b) {
        if (a.is_zero() || b.is_zero()) return zero(merge_base(a, b));
        return from_exponent(merge_base(a, b), a.exp_ + b.exp_);
    }

    friend LogScalar operator/(const LogScalar& a, const LogScalar& b) {
        if (b.is_zero()) throw domain_error("division by zero");
        if (a.is_zero()) return zero(merge_base(a, b));
        return from_exponent(merge_base(a, b), a.exp_ - b.exp_);
    }

    friend LogScalar pow(const LogScalar& x, const Real& alpha) {
        if (x.is_zero()) {
            if (alpha > 0) return zero(x.base_);
            throw domain_error("pow: zero base with nonpositive exponent");
        }
        return from_exponent(x.base_, x.exp_ * alpha);
    }

    // Sum with a canonical evaluation order (exponents sorted ascending, then
    // log-sum-exp against the largest). Permutation of the inputs cannot
    // change the result bits, which is what makes radially symmetric outputs
    // bit-identical across vertices of a common sphere.
    static LogScalar sum(const std::vector<LogScalar>& terms) {
        detail::touch_precision();
        int base = 0;
        std::vector<Real> es;
        es.reserve(terms.size());
        for (const auto& t : terms) {
            if (t.is_zero()) {
                if (t.base_ != 0) base = merged(base, t.base_);
                continue;
            }
            base = merged(base, t.base_);
            es.push_back(t.exp_);
        }
        if (es.empty()) return zero(base);
        std::sort(es.begin(), es.end());
        const Real& emax = es.back();
        const Real& lnk  = ln_base(base);
        Real acc(0);
        for (const Real& e : es) acc += exp((e - emax) * lnk);
        return from_exponent(base, emax + log(acc) / lnk);
    }

    friend LogScalar operator+(const LogScalar& a, const LogScalar& b) {
        return sum({a, b});
    }

    // a - b for a >= b; exact zero when equal.
    friend LogScalar diff(const LogScalar& a, const LogScalar& b) {
        if (b.is_zero()) return a;
        if (a.is_zero()) throw domain_error("diff: subtracting from zero");
        int base = merge_base(a, b);
        if (a.exp_ < b.exp_) throw domain_error("diff: negative result");
        if (a.exp_ == b.exp_) return zero(base);
        const Real& lnk = ln_base(base);
        Real inner      = -boost::multiprecision::expm1((b.exp_ - a.exp_) * lnk);
        return from_exponent(base, a.exp_ + log(inner) / lnk);
    }

    friend bool operator==(const LogScalar& a, const LogScalar& b) {
        if (a.is_zero() || b.is_zero()) return a.is_zero() && b.is_zero();
        merge_base(a, b);
        return a.exp_ == b.exp_;
    }

    friend bool operator<(const LogScalar& a, const LogScalar& b) {
        if (a.is_zero()) return !b.is_zero();
        if (b.is_zero()) return false;
        merge_base(a, b);
        return a.exp_ < b.exp_;
    }

    friend bool operator>(const LogScalar& a, const LogScalar& b) { return b < a; }
    friend bool operator<=(const LogScalar& a, const LogScalar& b) { return !(b < a); }
    friend bool operator>=(const LogScalar& a, const LogScalar& b) { return !(a < b); }
    friend bool operator!=(const LogScalar& a, const LogScalar& b) { return !(a == b); }

    // log of the base, cached per thread and recomputed on precision change
    static const Real& ln_base(int base) {
        check_base(base);
        thread_local std::map<int, std::pair<int, Real>> cache;
        int   d    = precision_digits();
        auto& slot = cache[base];
        if (slot.first != d) slot = {d, log(Real(base))};
        return slot.second;
    }

private:
    static void check_base(int base) {
        if (base < 2) throw parameter_error("LogScalar base must be >= 2");
    }

    static int merged(int a, int b) {
        if (a == 0) return b;
        if (b == 0) return a;
        if (a != b) throw parameter_error("LogScalar base mismatch");
        return a;
    }

    static int merge_base(const LogScalar& a, const LogScalar& b) {
        return merged(a.base_, b.base_);
    }

    int  base_;
    bool positive_;
    Real exp_;
};

// ---------------------------------------------------------------------------
// Outcome of a possibly infinite sum or norm. Divergence is a value, not an
// exception: callers decide how to report it.

struct NormResult {
    bool        divergent = false;
    LogScalar   value;                  // meaningful iff !divergent
    double      remainder_bound = 0.0;  // certified relative bound on any dropped tail
    std::string reason;                 // set iff divergent

    static NormResult finite(LogScalar v, double rb = 0.0) {
        NormResult r;
        r.value           = std::move(v);
        r.remainder_bound = rb;
        return r;
    }

    static NormResult diverged(std::string why) {
        NormResult r;
        r.divergent = true;
        r.reason    = std::move(why);
        return r;
    }
};

// ---------------------------------------------------------------------------
// Deterministic RNG. Seeded runs must reproduce byte-identically across
// platforms and thread counts, so no std::uniform_int_distribution here.

struct SplitMix64 {
    std::uint64_t state;

    explicit SplitMix64(std::uint64_t seed) : state(seed) {}

    std::uint64_t next() {
        std::uint64_t z = (state += 0x9e3779b97f4a7c15ull);
        z               = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z               = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return z ^ (z >> 31);
    }

    // uniform in [0, n) by rejection, n >= 1
    std::uint64_t bounded(std::uint64_t n) {
        if (n == 0) throw parameter_error("bounded: n must be positive");
        std::uint64_t limit = ~std::uint64_t(0) - (~std::uint64_t(0) % n);
        std::uint64_t v;
        do {
            v = next();
        } while (v >= limit);
        return v % n;
    }

    // fork an independent stream for work item i (stable under resharding)
    SplitMix64 fork(std::uint64_t i) const {
        SplitMix64 g(state + 0x632be59bd9b4e019ull * (i + 1));
        g.next();
        return g;
    }
};

} // namespace treemax
