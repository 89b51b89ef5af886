#include <catch2/catch_amalgamated.hpp>

#include "treemax/theory.hpp"

using namespace treemax;

namespace {

Verdict::Status strong_at(const Rational& gamma, const Rational& p, const Rational& q) {
    return strong_verdict(gamma, Exponent::of(p), Exponent::of(q)).status;
}

Verdict::Status restricted_at(const Rational& gamma, const Rational& p, const Rational& q) {
    return restricted_verdict(gamma, Exponent::of(p), Exponent::of(q)).status;
}

} // namespace

TEST_CASE("rational parsing is exact") {
    REQUIRE(parse_rational("7") == 7);
    REQUIRE(parse_rational("4/3") == Rational(4, 3));
    REQUIRE(parse_rational("0.75") == Rational(3, 4));
    REQUIRE(parse_rational("-0.5") == Rational(-1, 2));
    REQUIRE(parse_rational("2.") == 2);
    REQUIRE(parse_rational(".25") == Rational(1, 4));
    REQUIRE_THROWS_AS(parse_rational(""), parameter_error);
    REQUIRE_THROWS_AS(parse_rational("x"), parameter_error);
    REQUIRE_THROWS_AS(parse_rational("1/0"), parameter_error);
    REQUIRE_THROWS_AS(parse_rational("1.5.2"), parameter_error);
}

TEST_CASE("exponent parsing") {
    REQUIRE(parse_exponent("inf").infinite);
    REQUIRE(parse_exponent("INF").infinite);
    REQUIRE(parse_exponent("3/2").value == Rational(3, 2));
    REQUIRE(parse_exponent("1").value == 1);
    REQUIRE_THROWS_AS(parse_exponent("1/2"), parameter_error);
    REQUIRE(Exponent::inf().reciprocal() == 0);
    REQUIRE(Exponent::of(Rational(4, 3)).reciprocal() == Rational(3, 4));
}

TEST_CASE("strong verdicts at gamma = 1/2") {
    const Rational g(1, 2);
    // interior of the bounded region
    REQUIRE(strong_at(g, Rational(3, 2), Rational(3)) == Verdict::Status::Bounded);
    REQUIRE(strong_at(g, Rational(3, 2), Rational(5, 2)) == Verdict::Status::Bounded);
    // q at or below 1/gamma fails
    REQUIRE(strong_at(g, Rational(3, 2), Rational(2)) == Verdict::Status::Unbounded);
    REQUIRE(strong_at(g, Rational(2), Rational(2)) == Verdict::Status::Unbounded);
    // p beyond 1/(1-gamma) fails
    REQUIRE(strong_at(g, Rational(3), Rational(4)) == Verdict::Status::Unbounded);
    // q < p fails
    REQUIRE(strong_at(g, Rational(3, 2), Rational(4, 3)) == Verdict::Status::Unbounded);
    // the endpoint line p = 2: open between q = 2 and infinity
    REQUIRE(strong_verdict(g, Exponent::of(Rational(2)), Exponent::inf()).status ==
            Verdict::Status::Bounded);
    REQUIRE(strong_at(g, Rational(2), Rational(3)) == Verdict::Status::Unknown);
    REQUIRE(strong_at(g, Rational(2), Rational(100)) == Verdict::Status::Unknown);
}

TEST_CASE("strong verdicts at gamma = 3/4 pin the citation strings") {
    const Rational g(3, 4);
    auto           b = strong_verdict(g, Exponent::of(Rational(2)), Exponent::of(Rational(2)));
    REQUIRE(b.status == Verdict::Status::Bounded);
    REQUIRE(b.citation == "Thm strong large gamma (i)");

    auto e = strong_verdict(g, Exponent::of(Rational(4)), Exponent::inf());
    REQUIRE(e.status == Verdict::Status::Bounded);
    REQUIRE(e.citation == "Thm strong large gamma (ii)");

    auto u = strong_verdict(g, Exponent::of(Rational(4)), Exponent::of(Rational(8)));
    REQUIRE(u.status == Verdict::Status::Unknown);
    REQUIRE(u.citation == "Remark: critical segment");

    auto x = strong_verdict(g, Exponent::of(Rational(4)), Exponent::of(Rational(4)));
    REQUIRE(x.status == Verdict::Status::Unbounded);
    REQUIRE(x.citation == "Prop optaxis");

    // 1/q must stay under min(gamma, 1-gamma) = 1/4 for the unknown segment
    REQUIRE(strong_at(g, Rational(4), Rational(3)) == Verdict::Status::Unbounded);
}

TEST_CASE("strong verdicts at and above gamma = 1") {
    REQUIRE(strong_at(Rational(1), Rational(2), Rational(2)) == Verdict::Status::Bounded);
    REQUIRE(strong_at(Rational(1), Rational(2), Rational(3)) == Verdict::Status::Bounded);
    auto l1 = strong_verdict(Rational(1), Exponent::of(Rational(1)), Exponent::of(Rational(1)));
    REQUIRE(l1.status == Verdict::Status::Unbounded);
    REQUIRE(l1.citation == "L^1 failure at gamma = 1");
    REQUIRE(strong_at(Rational(1), Rational(3), Rational(2)) == Verdict::Status::Unbounded);

    auto y = strong_verdict(Rational(3, 2), Exponent::of(Rational(1)), Exponent::of(Rational(1)));
    REQUIRE(y.status == Verdict::Status::Bounded);
    REQUIRE(y.citation == "Young inequality (gamma > 1)");
    REQUIRE(strong_at(Rational(3, 2), Rational(3), Rational(2)) == Verdict::Status::Unbounded);
    REQUIRE(strong_verdict(Rational(2), Exponent::inf(), Exponent::inf()).status ==
            Verdict::Status::Bounded);
}

TEST_CASE("restricted verdicts recover the closed region") {
    const Rational g(1, 2);
    // the corner points now hold
    auto c = restricted_verdict(g, Exponent::of(Rational(2)), Exponent::of(Rational(2)));
    REQUIRE(c.status == Verdict::Status::Bounded);
    REQUIRE(c.citation == "Thm p: homtree");
    REQUIRE(restricted_at(g, Rational(3, 2), Rational(2)) == Verdict::Status::Bounded);
    REQUIRE(restricted_at(g, Rational(3, 2), Rational(3)) == Verdict::Status::Bounded);
    REQUIRE(restricted_at(g, Rational(3), Rational(3)) == Verdict::Status::Unbounded);
    REQUIRE(restricted_at(g, Rational(2), Rational(3, 2)) == Verdict::Status::Unbounded);

    // gamma above 1/2 admits diagonal points; the widest one is p = 1/gamma
    auto h = restricted_verdict(Rational(3, 5), Exponent::of(Rational(5, 3)),
                                Exponent::of(Rational(5, 3)));
    REQUIRE(h.status == Verdict::Status::Bounded);
    REQUIRE(h.citation == "Thm p: homtree");

    // gamma < 1/2 keeps only the off-diagonal corner and what it dominates
    const Rational g4(1, 4);
    REQUIRE(restricted_at(g4, Rational(4), Rational(4)) == Verdict::Status::Unbounded);
    auto ci = restricted_verdict(g4, Exponent::of(Rational(4, 3)), Exponent::of(Rational(4)));
    REQUIRE(ci.status == Verdict::Status::Bounded);
    REQUIRE(ci.citation == "Thm complex interpolation");
    REQUIRE(restricted_at(g4, Rational(4, 3), Rational(5)) == Verdict::Status::Bounded);
    REQUIRE(restricted_at(g4, Rational(6, 5), Rational(4)) == Verdict::Status::Bounded);
    REQUIRE(restricted_at(g4, Rational(4, 3), Rational(3)) == Verdict::Status::Unbounded);
    REQUIRE(restricted_at(g4, Rational(3, 2), Rational(4)) == Verdict::Status::Unbounded);

    // q = inf falls back to the strong classification
    auto qi = restricted_verdict(g, Exponent::of(Rational(2)), Exponent::inf());
    REQUIRE(qi.status == Verdict::Status::Bounded);
    REQUIRE(qi.kind == Verdict::Kind::RestrictedWeak);

    // restricted (1,1) holds at gamma = 1 even though strong (1,1) fails
    REQUIRE(restricted_at(Rational(1), Rational(1), Rational(1)) == Verdict::Status::Bounded);
    REQUIRE(strong_at(Rational(1), Rational(1), Rational(1)) == Verdict::Status::Unbounded);
}

TEST_CASE("every grid point lands in exactly one strong class") {
    // the partition assert inside strong_verdict fires on any overlap or gap
    const int G = 24;
    for (const Rational& gamma : {Rational(1, 4), Rational(1, 2), Rational(3, 5),
                                  Rational(3, 4), Rational(1), Rational(3, 2)}) {
        for (int i = 0; i <= G; ++i) {
            for (int j = 0; j <= G; ++j) {
                Exponent p = i == 0 ? Exponent::inf() : Exponent::of(Rational(G, i));
                Exponent q = j == 0 ? Exponent::inf() : Exponent::of(Rational(G, j));
                REQUIRE_NOTHROW(strong_verdict(gamma, p, q));
                REQUIRE_NOTHROW(restricted_verdict(gamma, p, q));
            }
        }
    }
}

TEST_CASE("restricted boundedness contains strong boundedness") {
    const int G = 16;
    for (const Rational& gamma : {Rational(1, 4), Rational(1, 2), Rational(2, 3), Rational(1)}) {
        for (int i = 0; i <= G; ++i) {
            for (int j = 0; j <= G; ++j) {
                Exponent p = i == 0 ? Exponent::inf() : Exponent::of(Rational(G, i));
                Exponent q = j == 0 ? Exponent::inf() : Exponent::of(Rational(G, j));
                auto     s = strong_verdict(gamma, p, q);
                auto     r = restricted_verdict(gamma, p, q);
                if (s.status == Verdict::Status::Bounded)
                    REQUIRE(r.status == Verdict::Status::Bounded);
                if (r.status == Verdict::Status::Unbounded)
                    REQUIRE(s.status == Verdict::Status::Unbounded);
            }
        }
    }
}

TEST_CASE("classifier argument validation") {
    REQUIRE_THROWS_AS(strong_verdict(Rational(0), Exponent::of(2), Exponent::of(2)),
                      parameter_error);
    REQUIRE_THROWS_AS(strong_verdict(Rational(1, 2), Exponent::of(Rational(1, 2)),
                                     Exponent::of(2)),
                      parameter_error);
}

TEST_CASE("named profiles evaluate to their formulas") {
    TreeParams tp(2);

    auto dirac = make_dirac(tp);
    REQUIRE(dirac.support_bound() == 0);
    REQUIRE(dirac.value_at(0) == LogScalar::one(2));

    auto ball = make_ball_indicator(tp, 3);
    REQUIRE(ball.support_bound() == 3);
    for (int n = 0; n <= 3; ++n) REQUIRE(ball.value_at(n) == LogScalar::one(2));
    REQUIRE(ball.value_at(4).is_zero());

    auto sph = make_sphere_indicator(tp, 3);
    REQUIRE(sph.value_at(3) == LogScalar::one(2));
    REQUIRE(sph.value_at(2).is_zero());
    REQUIRE(sph.value_at(0).is_zero());

    // phi_n(m) = k^((n-m)(1-gamma)): at gamma = 1/2, n = 4 this is k^((4-m)/2)
    auto low = make_lower_profile(tp, 4, Real(1) / 2);
    REQUIRE(abs(low.value_at(0).exponent() - 2) < Real("1e-36"));
    REQUIRE(abs(low.value_at(3).exponent() - Real(1) / 2) < Real("1e-36"));
    REQUIRE(low.value_at(4) == LogScalar::one(2));

    auto geo = make_geometric_profile(tp, Real(1) / 4, 8);
    REQUIRE(geo.support_bound() == 8);
    REQUIRE(abs(geo.value_at(6).exponent() + Real(3) / 2) < Real("1e-36"));
}

TEST_CASE("slowly varying profile carries its tail") {
    TreeParams tp(2);
    VecaParams vp(Real(2), Real(3) / 4);
    REQUIRE_THROWS_AS(VecaParams(Real(1), Real(3) / 4), parameter_error);
    REQUIRE_THROWS_AS(VecaParams(Real(2), Real(1) / 4), parameter_error);
    REQUIRE_THROWS_AS(VecaParams(Real(2), Real(1)), parameter_error);

    auto g = make_veca_g(tp, vp, 16);
    REQUIRE(g.has_tail());
    REQUIRE(g.tail().log_ratio == Real(-1) / 2);
    REQUIRE(g.tail().degree == Real(-3) / 4);
    // g(n) = 2^(-n/2) (1+n)^(-3/4); check n = 3 against direct arithmetic
    Real want = pow(Real(2), Real(-3) / 2) * pow(Real(4), Real(-3) / 4);
    REQUIRE(abs(g.value_at(3).to_real() - want) / want < Real("1e-35"));
    // table and tail join seamlessly
    Real at17      = g.value_at(17).to_real();
    Real expected  = pow(Real(2), Real(-17) / 2) * pow(Real(18), Real(-3) / 4);
    REQUIRE(abs(at17 - expected) / expected < Real("1e-35"));

    auto mm = make_veca_m(tp, vp, 16);
    REQUIRE(!mm.has_tail());
    Real m5 = pow(Real(2), Real(-5) / 2) * pow(Real(6), Real(1) / 4);
    REQUIRE(abs(mm.value_at(5).to_real() - m5) / m5 < Real("1e-35"));
}
