#pragma once

#include <stdexcept>
#include <string>

#include "treemax/errors.hpp"
#include "treemax/lorentz.hpp"
#include "treemax/numerics.hpp"
#include "treemax/tree_geometry.hpp"

namespace treemax {

// An exponent in [1, inf], held exactly so region boundaries are decided by
// rational comparison, never by floating-point luck.
struct Exponent {
    bool     infinite = false;
    Rational value    = 0; // meaningful iff !infinite

    static Exponent inf() {
        Exponent e;
        e.infinite = true;
        return e;
    }

    static Exponent of(Rational v) {
        Exponent e;
        e.value = std::move(v);
        return e;
    }

    Rational reciprocal() const { return infinite ? Rational(0) : Rational(1) / value; }
};

// "inf", "7", "4/3", or a decimal like "0.75" (exact: 75/100 reduced)
inline Rational parse_rational(const std::string& text) {
    if (text.empty()) throw parameter_error("parse_rational: empty string");
    std::string s    = text;
    bool        neg  = false;
    if (s[0] == '+' || s[0] == '-') {
        neg = (s[0] == '-');
        s   = s.substr(1);
    }
    auto all_digits = [](const std::string& t) {
        if (t.empty()) return false;
        for (char c : t)
            if (c < '0' || c > '9') return false;
        return true;
    };
    Rational r;
    if (auto slash = s.find('/'); slash != std::string::npos) {
        std::string num = s.substr(0, slash), den = s.substr(slash + 1);
        if (!all_digits(num) || !all_digits(den) || Integer(den) == 0)
            throw parameter_error("parse_rational: bad fraction '" + text + "'");
        r = Rational(Integer(num), Integer(den));
    } else if (auto dot = s.find('.'); dot != std::string::npos) {
        std::string ip = s.substr(0, dot), fp = s.substr(dot + 1);
        if (ip.empty()) ip = "0";
        if (fp.empty()) fp = "0";
        if (!all_digits(ip) || !all_digits(fp))
            throw parameter_error("parse_rational: bad decimal '" + text + "'");
        Integer den = 1;
        for (std::size_t i = 0; i < fp.size(); ++i) den *= 10;
        r = Rational(Integer(ip) * den + Integer(fp), den);
    } else {
        if (!all_digits(s)) throw parameter_error("parse_rational: bad number '" + text + "'");
        r = Rational(Integer(s));
    }
    return neg ? -r : r;
}

inline Exponent parse_exponent(const std::string& text) {
    if (text == "inf" || text == "Inf" || text == "INF" || text == "infinity")
        return Exponent::inf();
    Rational v = parse_rational(text);
    if (v < 1) throw parameter_error("parse_exponent: exponent must be >= 1, got '" + text + "'");
    return Exponent::of(std::move(v));
}

struct Verdict {
    enum class Status { Bounded, Unbounded, Unknown };
    enum class Kind { Strong, RestrictedWeak };

    Status      status;
    Kind        kind;
    std::string citation;
};

inline const char* to_string(Verdict::Status s) {
    switch (s) {
    case Verdict::Status::Bounded: return "Bounded";
    case Verdict::Status::Unbounded: return "Unbounded";
    case Verdict::Status::Unknown: return "Unknown";
    }
    return "?";
}

namespace detail {

inline void check_classifier_args(const Rational& gamma, const Exponent& p, const Exponent& q) {
    if (!(gamma > 0)) throw parameter_error("verdict: gamma must be > 0");
    if (!p.infinite && p.value < 1) throw parameter_error("verdict: p must be >= 1");
    if (!q.infinite && q.value < 1) throw parameter_error("verdict: q must be >= 1");
}

} // namespace detail

// Strong type (p, q) classification. Cases, with u = 1/p, v = 1/q:
//   gamma > 1:   Bounded iff p <= q
//   gamma = 1:   Bounded iff p <= q and q != 1
//   gamma < 1:   Bounded  iff (p <= q, q > 1/gamma, p < 1/(1-gamma))
//                          or (p = 1/(1-gamma), q = inf)
//                Unknown  iff p = 1/(1-gamma), 0 < 1/q < min{gamma, 1-gamma}
//                Unbounded otherwise (q < p, q <= 1/gamma, p > 1/(1-gamma),
//                          or p = q = 1/(1-gamma))
// The three cases partition the parameter square; this is asserted.
inline Verdict strong_verdict(const Rational& gamma, const Exponent& p, const Exponent& q) {
    detail::check_classifier_args(gamma, p, q);
    const Rational u = p.reciprocal();
    const Rational v = q.reciprocal();

    if (gamma > 1) {
        if (v <= u) return {Verdict::Status::Bounded, Verdict::Kind::Strong,
                            "Young inequality (gamma > 1)"};
        return {Verdict::Status::Unbounded, Verdict::Kind::Strong, "identity domination"};
    }
    if (gamma == 1) {
        if (v > u)
            return {Verdict::Status::Unbounded, Verdict::Kind::Strong, "identity domination"};
        if (v == 1) // forces p = q = 1
            return {Verdict::Status::Unbounded, Verdict::Kind::Strong,
                    "L^1 failure at gamma = 1"};
        return {Verdict::Status::Bounded, Verdict::Kind::Strong,
                "weak (1,1) + interpolation (gamma = 1)"};
    }

    const Rational one_minus = Rational(1) - gamma;
    const Rational cut       = std::min(gamma, one_minus);

    const bool bounded = (u >= v && v < gamma && u > one_minus) || (u == one_minus && v == 0);
    const bool unknown = (u == one_minus && v > 0 && v < cut);
    const bool unbounded =
        (v > u) || (v >= gamma) || (u < one_minus) || (u == one_minus && v == one_minus);

    if (int(bounded) + int(unknown) + int(unbounded) != 1)
        throw std::logic_error("strong_verdict: classification is not a partition");

    if (unknown)
        return {Verdict::Status::Unknown, Verdict::Kind::Strong, "Remark: critical segment"};
    if (bounded) {
        if (u == one_minus && v == 0)
            return {Verdict::Status::Bounded, Verdict::Kind::Strong, "Thm strong large gamma (ii)"};
        return {Verdict::Status::Bounded, Verdict::Kind::Strong, "Thm strong large gamma (i)"};
    }
    return {Verdict::Status::Unbounded, Verdict::Kind::Strong, "Prop optaxis"};
}

// Restricted weak type (p, q): for gamma in (0,1) the exact region is
// p <= q, q >= 1/gamma, p <= 1/(1-gamma); never Unknown. q = inf delegates to
// the strong statement; gamma >= 1 matches the strong/weak picture (with
// restricted (1,1) holding at gamma = 1).
inline Verdict restricted_verdict(const Rational& gamma, const Exponent& p, const Exponent& q) {
    detail::check_classifier_args(gamma, p, q);
    const Rational u = p.reciprocal();
    const Rational v = q.reciprocal();

    if (gamma > 1) {
        if (v <= u) return {Verdict::Status::Bounded, Verdict::Kind::RestrictedWeak,
                            "Young inequality (gamma > 1)"};
        return {Verdict::Status::Unbounded, Verdict::Kind::RestrictedWeak, "identity domination"};
    }
    if (gamma == 1) {
        if (v <= u) return {Verdict::Status::Bounded, Verdict::Kind::RestrictedWeak,
                            "weak (1,1) + interpolation (gamma = 1)"};
        return {Verdict::Status::Unbounded, Verdict::Kind::RestrictedWeak, "identity domination"};
    }

    if (q.infinite) {
        Verdict s = strong_verdict(gamma, p, q);
        s.kind    = Verdict::Kind::RestrictedWeak;
        return s;
    }
    const Rational one_minus = Rational(1) - gamma;
    if (v <= u && v <= gamma && u >= one_minus) {
        if (u == gamma && v == gamma)
            return {Verdict::Status::Bounded, Verdict::Kind::RestrictedWeak, "Thm p: homtree"};
        if (u == one_minus && v == gamma)
            return {Verdict::Status::Bounded, Verdict::Kind::RestrictedWeak,
                    "Thm complex interpolation"};
        return {Verdict::Status::Bounded, Verdict::Kind::RestrictedWeak, "Corollary"};
    }
    return {Verdict::Status::Unbounded, Verdict::Kind::RestrictedWeak, "Corollary"};
}

// ---------------------------------------------------------------------------
// Named test functions.

struct VecaParams {
    Real s;
    Real beta;

    VecaParams(Real s_, Real beta_) : s(std::move(s_)), beta(std::move(beta_)) {
        if (!(s > 1)) throw parameter_error("VecaParams: s must be > 1");
        if (!(beta > Real(1) / s) || !(beta < 1))
            throw parameter_error("VecaParams: beta must satisfy 1/s < beta < 1");
    }
};

inline RadialFunction make_dirac(const TreeParams& tp) {
    return RadialFunction(tp, {LogScalar::one(tp.k)});
}

inline RadialFunction make_ball_indicator(const TreeParams& tp, int n) {
    if (n < 0) throw parameter_error("make_ball_indicator: negative radius");
    return RadialFunction(tp,
                          std::vector<LogScalar>(static_cast<std::size_t>(n) + 1,
                                                 LogScalar::one(tp.k)));
}

inline RadialFunction make_sphere_indicator(const TreeParams& tp, int n) {
    if (n < 0) throw parameter_error("make_sphere_indicator: negative radius");
    std::vector<LogScalar> vals(static_cast<std::size_t>(n) + 1, LogScalar::zero(tp.k));
    vals.back() = LogScalar::one(tp.k);
    return RadialFunction(tp, std::move(vals));
}

// phi_n(m) = k^((n - m)(1 - gamma)) on m <= n: the exact pointwise lower
// bound for M^gamma applied to the radius-n ball indicator
inline RadialFunction make_lower_profile(const TreeParams& tp, int n, const Real& gamma) {
    if (n < 0) throw parameter_error("make_lower_profile: negative radius");
    std::vector<LogScalar> vals;
    vals.reserve(static_cast<std::size_t>(n) + 1);
    for (int m = 0; m <= n; ++m)
        vals.push_back(LogScalar::from_exponent(tp.k, Real(n - m) * (Real(1) - gamma)));
    return RadialFunction(tp, std::move(vals));
}

// g(n) = k^(-n/2) (1+n)^(-beta), tabulated to N and carried on by its tail
inline RadialFunction make_veca_g(const TreeParams& tp, const VecaParams& vp, int N) {
    if (N < 0) throw parameter_error("make_veca_g: negative table bound");
    const Real&            lnk = LogScalar::ln_base(tp.k);
    std::vector<LogScalar> vals;
    vals.reserve(static_cast<std::size_t>(N) + 1);
    for (int n = 0; n <= N; ++n)
        vals.push_back(LogScalar::from_exponent(
            tp.k, Real(-n) / 2 - vp.beta * log(Real(1 + n)) / lnk));
    TailDescriptor tail{Real(-1) / 2, -vp.beta};
    return RadialFunction(tp, std::move(vals), tail);
}

// m(n) = k^(-n/2) (1+n)^(1-beta): the pointwise minorant in the same theorem
inline RadialFunction make_veca_m(const TreeParams& tp, const VecaParams& vp, int N) {
    if (N < 0) throw parameter_error("make_veca_m: negative table bound");
    const Real&            lnk = LogScalar::ln_base(tp.k);
    std::vector<LogScalar> vals;
    vals.reserve(static_cast<std::size_t>(N) + 1);
    for (int n = 0; n <= N; ++n)
        vals.push_back(LogScalar::from_exponent(
            tp.k, Real(-n) / 2 + (Real(1) - vp.beta) * log(Real(1 + n)) / lnk));
    return RadialFunction(tp, std::move(vals));
}

// k^(-alpha n) truncated at N
inline RadialFunction make_geometric_profile(const TreeParams& tp, const Real& alpha, int N) {
    if (N < 0) throw parameter_error("make_geometric_profile: negative table bound");
    std::vector<LogScalar> vals;
    vals.reserve(static_cast<std::size_t>(N) + 1);
    for (int n = 0; n <= N; ++n)
        vals.push_back(LogScalar::from_exponent(tp.k, Real(-n) * alpha));
    return RadialFunction(tp, std::move(vals));
}

} // namespace treemax
