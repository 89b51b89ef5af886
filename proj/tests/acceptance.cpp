// Acceptance battery: one self-contained check per shipped guarantee, one
// [PASS]/[FAIL] line each, nonzero exit when anything fails. Tolerances are
// pinned here on purpose; loosening one is a visible diff, not a flag.

#include "treemax/experiments.hpp"

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

using namespace treemax;
namespace fs = std::filesystem;

namespace {

Real rel_gap(const Real& a, const Real& b) {
    if (b == 0) return abs(a);
    return abs(a - b) / abs(b);
}

Real verdict_real(const ExperimentReport& rep, const std::string& key) {
    return Real(rep.verdicts.at(key).get<std::string>());
}

bool verdict_flag(const ExperimentReport& rep, const std::string& key) {
    return rep.verdicts.at(key).get<bool>();
}

// seeded radial table with holes, nonzero at the outer sphere
RadialFunction random_radial(const TreeParams& tp, int N, std::uint64_t seed) {
    SplitMix64             rng{seed};
    std::vector<LogScalar> vals;
    for (int n = 0; n <= N; ++n) {
        if (rng.bounded(4) == 0)
            vals.push_back(LogScalar::zero(tp.k));
        else
            vals.push_back(LogScalar::from_integer(tp.k, Integer(1 + rng.bounded(99))) *
                           LogScalar::from_exponent(tp.k, -Real(rng.bounded(6))));
    }
    if (vals.back().is_zero()) vals.back() = LogScalar::one(tp.k);
    return RadialFunction(tp, std::move(vals));
}

// 1. The radial fast path must reproduce the truncated-tree oracle at every
//    vertex, with the radius cap matched so both sides see complete balls.
bool radial_matches_oracle(std::string& detail) {
    long comparisons = 0;
    Real worst(0);
    for (int k : {2, 3}) {
        TreeParams tp(k);
        const int  R    = k == 2 ? 7 : 5;
        auto       ball = enumerate_ball(tp, R);
        for (std::uint64_t seed = 0; seed < 25; ++seed) {
            auto           rad = random_radial(tp, R, 1000 * k + seed);
            FiniteFunction fin(tp);
            for (const auto& v : ball) fin.set(v, rad.value_at(v.norm()));
            for (const Real& gamma : {Real(1) / 4, Real(1) / 2, Real(3) / 4, Real(1)}) {
                auto brute = maximal_bruteforce(fin, gamma, R);
                for (const auto& x : ball) {
                    Real got =
                        maximal_radial(rad, MaximalParams(gamma, R - x.norm()), x.norm()).to_real();
                    Real gap = rel_gap(got, brute.value_at(x).to_real());
                    if (gap > worst) worst = gap;
                    ++comparisons;
                }
            }
        }
    }
    std::ostringstream os;
    os << comparisons << " comparisons, worst rel gap " << format_scientific(worst)
       << ", tolerance 1e-10";
    detail = os.str();
    return worst < Real("1e-10");
}

// 2. Sphere decompositions are exact: entry counts add up to the sphere size,
//    each ascent class sits inside its two-sided power bracket (centers off
//    the root), and ball sizes obey the doubling inequality.
bool counting_is_exact(std::string& detail) {
    long checked = 0;
    for (int k : {2, 3, 4}) {
        TreeParams tp(k);
        for (int m = 0; m <= 40; ++m)
            for (int n = 0; n <= 40; ++n) {
                auto    dec   = sphere_decomposition(tp, m, n);
                Integer total = 0;
                for (const auto& e : dec.entries) total += e.count;
                if (total != sphere_size(tp, n)) {
                    detail = "count mismatch at k=" + std::to_string(k) +
                             " m=" + std::to_string(m) + " n=" + std::to_string(n);
                    return false;
                }
                if (m >= 1 && n >= 1) {
                    for (std::size_t j = 0; j < dec.entries.size(); ++j) {
                        Integer hi = int_pow(k, n - static_cast<long>(j));
                        const Integer& c = dec.entries[j].count;
                        if (c > hi || c * k < (k - 1) * hi) {
                            detail = "bracket violated at k=" + std::to_string(k) +
                                     " m=" + std::to_string(m) + " n=" + std::to_string(n) +
                                     " j=" + std::to_string(j);
                            return false;
                        }
                    }
                }
                ++checked;
            }
        for (int r = 0; r <= 30; ++r)
            if (ball_size(tp, 2 * r) > ball_size(tp, r) * ball_size(tp, r)) {
                detail = "doubling violated at k=" + std::to_string(k) + " r=" + std::to_string(r);
                return false;
            }
    }
    detail = std::to_string(checked) + " decompositions exact, doubling holds to r=30";
    return true;
}

// 3. Closed forms: the maximal function of a point mass, the Lorentz norm of
//    a ball indicator, and the weak norm of a ball indicator (checked in the
//    exponent, where the value is exact).
bool closed_forms_hold(std::string& detail) {
    Real worst(0), worst_exp(0);
    for (int k : {2, 3}) {
        TreeParams tp(k);
        auto       dirac = make_dirac(tp);
        for (const Real& gamma : {Real(1) / 4, Real(1) / 2, Real(3) / 4, Real(1)})
            for (int m = 0; m <= 25; ++m) {
                Real got  = maximal_radial(dirac, gamma, m).to_real();
                Real want = pow(Real(ball_size(tp, m)), -gamma);
                worst     = std::max(worst, rel_gap(got, want));
            }
        const Real& lnk = LogScalar::ln_base(k);
        for (int n = 0; n <= 12; ++n) {
            auto       chi = make_ball_indicator(tp, n);
            const Real bs  = Real(ball_size(tp, n));
            for (auto [p, s] : std::vector<std::pair<Real, Real>>{
                     {Real(2), Real(1)}, {Real(2), Real(2)}, {Real(4), Real(2)}, {Real(3), Real(3)}}) {
                Real got  = lorentz_norm(chi, LorentzIndex(p, s)).to_real();
                Real want = pow(p / s, 1 / s) * pow(bs, 1 / p);
                worst     = std::max(worst, rel_gap(got, want));
            }
            for (const Real& p : {Real(3) / 2, Real(2), Real(4)}) {
                Real got_exp  = weak_norm(chi, p).exponent();
                Real want_exp = log(bs) / lnk / p;
                worst_exp     = std::max(worst_exp, Real(abs(got_exp - want_exp)));
            }
        }
    }
    std::ostringstream os;
    os << "worst rel gap " << format_scientific(worst) << " (tol 1e-12), worst exponent gap "
       << format_scientific(worst_exp) << " (tol 1e-30)";
    detail = os.str();
    return worst < Real("1e-12") && worst_exp < Real("1e-30");
}

// 4. The randomized invariant battery (domination chains, translation
//    consistency, cap monotonicity) reports zero violations at full depth.
bool invariants_pass(std::string& detail) {
    TreeParams      tp(2);
    InvariantsParams ip;
    ip.gamma  = Rational(1, 2);
    ip.R      = 7;
    ip.trials = 100;
    ip.seed   = 1;
    auto rep  = run_invariants(tp, ip);
    long violations = 0;
    for (const auto& row : rep.rows) violations += std::stol(row.at(3));
    detail = std::to_string(rep.rows.size()) + " checks x " + std::to_string(ip.trials) +
             " trials, " + std::to_string(violations) + " violations";
    return verdict_flag(rep, "all_pass") && violations == 0;
}

// 5. Norm growth on ball indicators: the ratio grows like n^(1/t), pinned by
//    the fitted slope, the quarter-to-end growth factor, and a positive
//    uniform lower constant.
bool growth_rate_measured(std::string& detail) {
    TreeParams tp(2);
    std::ostringstream os;
    bool ok = true;
    for (int t : {1, 2}) {
        GrowthParams gp;
        gp.gamma = Rational(1, 2);
        gp.s     = 1;
        gp.t     = Real(t);
        gp.n_max = 48;
        auto rep = run_growth(tp, gp);
        Real slope    = verdict_real(rep, "slope");
        Real quarter  = verdict_real(rep, "quarter_growth");
        Real min_slope   = t == 1 ? Real("0.85") : Real("0.35");
        Real min_quarter = Real("0.8") * pow(Real(4), Real(1) / t);
        bool here = verdict_flag(rep, "lower_constant_positive") && slope >= min_slope &&
                    quarter >= min_quarter;
        ok = ok && here;
        os << "t=" << t << ": slope " << format_scientific(slope) << " (min "
           << format_scientific(min_slope) << "), quarter growth " << format_scientific(quarter)
           << " (min " << format_scientific(min_quarter) << ")";
        if (t == 1) os << "; ";
    }
    detail = os.str();
    return ok;
}

// 6. Point-mass surrogate partial sums grow affinely: the per-term limit has
//    its closed form, the final term has converged to it, the linear fit is
//    tight, and the sup variant stays below one.
bool partial_sums_affine(std::string& detail) {
    TreeParams            tp(2);
    DeltaDivergenceParams dp;
    dp.gamma = Rational(1, 2);
    dp.t     = 1;
    dp.N     = 60;
    auto rep = run_delta_divergence(tp, dp);

    Real limit      = verdict_real(rep, "per_term_limit");
    Real final_term = verdict_real(rep, "final_term");
    Real r2         = verdict_real(rep, "linear_fit_r2");
    Real closed     = pow(Real(1) / 3, Real(1) / 2);

    DeltaDivergenceParams ds = dp;
    ds.t                     = Real("inf");
    auto sup_rep             = run_delta_divergence(tp, ds);

    std::ostringstream os;
    os << "limit " << format_scientific(limit) << " (closed form gap "
       << format_scientific(rel_gap(limit, closed)) << "), fit r2 " << format_scientific(r2)
       << " (min 0.99)";
    detail = os.str();
    return rel_gap(limit, closed) < Real("1e-12") && rel_gap(final_term, limit) < Real("1e-6") &&
           r2 >= Real("0.99") && verdict_flag(rep, "affine_constant_positive") &&
           verdict_flag(sup_rep, "sup_at_most_one");
}

// 7. The half-exponent optimality profile: certified surrogate tail, weight
//    sup exact in the exponent, positive pointwise minorization constant, and
//    the maximal function dominating its own sphere lower bound.
bool optimality_profile_certified(std::string& detail) {
    TreeParams tp(2);
    bool       ok = true;
    Real       c075(0);
    for (const char* beta : {"0.6", "0.75", "0.9"}) {
        VecaParamsExt vx;
        vx.beta  = Real(beta);
        vx.s     = 2;
        vx.N     = 255;
        vx.m_max = 40;
        auto rep = run_veca(tp, vx);
        bool here = verdict_flag(rep, "surrogate_certified") &&
                    verdict_flag(rep, "weight_sup_exact_in_exponent") &&
                    verdict_flag(rep, "pointwise_constant_positive") &&
                    verdict_flag(rep, "maximal_dominates_sphere_bound");
        if (std::string(beta) == "0.75") c075 = verdict_real(rep, "pointwise_constant");
        ok = ok && here;
    }
    detail = "beta in {0.6, 0.75, 0.9}, N=255; pointwise constant at 0.75: " +
             format_scientific(c075);
    return ok;
}

// 8. Restricted-type probes settle: inside the classified bounded region the
//    running sup over four set families moves less than 1% across the last
//    window, with every member finite.
bool restricted_probe_stable(std::string& detail) {
    TreeParams tp(2);
    struct Cfg {
        Rational gamma, p, q;
    };
    std::vector<Cfg> cfgs{{Rational(1, 2), Rational(2), Rational(2)},
                          {Rational(3, 4), Rational(4), Rational(4)},
                          {Rational(3, 4), Rational(4, 3), Rational(4, 3)},
                          {Rational(1, 4), Rational(4, 3), Rational(4)}};
    int  runs = 0;
    bool ok   = true;
    std::string bad;
    for (const auto& cfg : cfgs)
        for (const char* family : {"balls", "spheres", "ballfar", "random"}) {
            RwtProbeParams rw;
            rw.gamma  = cfg.gamma;
            rw.p      = Exponent::of(cfg.p);
            rw.q      = Exponent::of(cfg.q);
            rw.family = family;
            rw.n_max  = 40;
            rw.seed   = 1;
            auto rep  = run_rwt_probe(tp, rw);
            bool here = verdict_flag(rep, "stable") && verdict_flag(rep, "all_finite") &&
                        rep.verdicts.at("region_status") == "Bounded";
            if (!here && bad.empty())
                bad = std::string(" first failure: gamma=") +
                      rep.params.at("gamma").get<std::string>() + " family=" + family;
            ok = ok && here;
            ++runs;
        }
    detail = std::to_string(runs) + " probe runs, all stable within 1%" + bad;
    return ok;
}

// 9. The strong-type classifier agrees with an independent transcription of
//    the boundedness region on a 200 x 200 reciprocal-exponent grid, for six
//    homogeneity exponents spanning all regimes.
bool region_grid_matches(std::string& detail) {
    enum class St { Bounded, Unbounded, Unknown };
    auto expected = [](const Rational& g, const Rational& u, const Rational& v) {
        if (g < 1) {
            Rational om = Rational(1) - g;
            Rational mn = g < om ? g : om;
            if (u == om && v == 0) return St::Bounded;
            if (v < g && u > om && v <= u) return St::Bounded;
            if (u == om && v > 0 && v < mn) return St::Unknown;
            return St::Unbounded;
        }
        if (g == 1) return (v <= u && v != 1) ? St::Bounded : St::Unbounded;
        return v <= u ? St::Bounded : St::Unbounded;
    };

    const int G = 200;
    long mismatches = 0, cells = 0;
    for (const Rational& g : {Rational(1, 4), Rational(1, 2), Rational(3, 5), Rational(3, 4),
                              Rational(1), Rational(3, 2)}) {
        for (int i = 0; i < G; ++i) {
            Exponent p = i == 0 ? Exponent::inf() : Exponent::of(Rational(G, i));
            for (int j = 0; j < G; ++j) {
                Exponent q    = j == 0 ? Exponent::inf() : Exponent::of(Rational(G, j));
                auto     got  = strong_verdict(g, p, q).status;
                St       want = expected(g, Rational(i, G), Rational(j, G));
                bool same = (got == Verdict::Status::Bounded && want == St::Bounded) ||
                            (got == Verdict::Status::Unbounded && want == St::Unbounded) ||
                            (got == Verdict::Status::Unknown && want == St::Unknown);
                if (!same) ++mismatches;
                ++cells;
            }
        }
    }
    detail = std::to_string(cells) + " cells across 6 exponents, " + std::to_string(mismatches) +
             " mismatches";
    return mismatches == 0;
}

// 10. The weighted overlap constant grows at its predicted log-slope for
//     three (gamma, epsilon) pairs, with p pinned to the critical exponent.
bool overlap_slope_matches(std::string& detail) {
    TreeParams tp(2);
    struct Cfg {
        Rational gamma, epsilon, p;
        Real     theory;
    };
    std::vector<Cfg> cfgs{{Rational(1, 2), Rational(1, 2), Rational(2), Real("0.25")},
                          {Rational(3, 4), Rational(1, 2), Rational(4), Real("0.375")},
                          {Rational(1, 4), Rational(1, 5), Rational(4, 3), Real("0.2")}};
    bool ok = true;
    std::ostringstream os;
    for (const auto& cfg : cfgs) {
        ZClassParams zp;
        zp.gamma   = cfg.gamma;
        zp.epsilon = cfg.epsilon;
        zp.p       = Exponent::of(cfg.p);
        zp.q       = Exponent::of(Rational(2));
        zp.n_max   = 20;
        auto rep   = run_zclass(tp, zp);
        Real rel   = verdict_real(rep, "slope_rel_error");
        bool here  = verdict_flag(rep, "at_critical_p") &&
                    verdict_flag(rep, "constant_at_zero_is_one") &&
                    rel_gap(verdict_real(rep, "slope_theory"), cfg.theory) < Real("1e-12") &&
                    rel <= Real("0.05");
        ok = ok && here;
        os << format_scientific(cfg.theory) << " rel err " << format_scientific(rel) << "; ";
    }
    detail = os.str() + "tolerance 5%";
    return ok;
}

// 11. The shipped binary is deterministic under threading: the same seeded
//     experiment, run with one and with two workers, emits byte-identical
//     output files.
bool cli_output_deterministic(std::string& detail) {
    fs::path dir = fs::temp_directory_path() / "treemax_acceptance";
    fs::create_directories(dir);
    fs::path        p1 = dir / "det_t1.csv", p2 = dir / "det_t2.csv";
    std::error_code ec;
    fs::remove(p1, ec);
    fs::remove(p2, ec);

    auto run = [&](const fs::path& out, int threads) {
        std::string cmd = std::string("\"") + TREEMAX_CLI_PATH + "\" --seed 11 --threads " +
                          std::to_string(threads) + " --out \"" + out.string() +
                          "\" experiment radial-bounded --gamma 3/4 --count 8 >/dev/null 2>&1";
        return std::system(cmd.c_str());
    };
    int rc1 = run(p1, 1);
    int rc2 = run(p2, 2);
    if (rc1 != 0 || rc2 != 0) {
        detail = "cli exited with " + std::to_string(rc1) + " / " + std::to_string(rc2);
        return false;
    }

    auto slurp = [](const fs::path& p) {
        std::ifstream     in(p, std::ios::binary);
        std::ostringstream ss;
        ss << in.rdbuf();
        return ss.str();
    };
    std::string a = slurp(p1), b = slurp(p2);
    detail = std::to_string(a.size()) + " bytes, threads 1 vs 2 " +
             (a == b ? "identical" : "differ");
    return !a.empty() && a == b && a.rfind("function,exponents", 0) == 0;
}

struct Criterion {
    const char* name;
    bool (*check)(std::string&);
};

} // namespace

int main() {
    const Criterion criteria[] = {
        {"radial fast path matches the truncated-tree oracle", radial_matches_oracle},
        {"sphere decomposition and ball counting are exact", counting_is_exact},
        {"point-mass and indicator closed forms hold", closed_forms_hold},
        {"randomized invariant battery reports no violations", invariants_pass},
        {"ball-indicator norm ratios grow at the predicted rate", growth_rate_measured},
        {"point-mass surrogate sums grow affinely", partial_sums_affine},
        {"optimality profile certificates all hold", optimality_profile_certified},
        {"restricted-type probes are stable in the bounded region", restricted_probe_stable},
        {"strong-type classifier matches an independent region transcription", region_grid_matches},
        {"weighted overlap constant has the predicted slope", overlap_slope_matches},
        {"seeded cli output is byte-identical across thread counts", cli_output_deterministic},
    };

    int  index  = 0;
    int  failed = 0;
    for (const auto& c : criteria) {
        ++index;
        std::string detail;
        bool        ok = false;
        auto        t0 = std::chrono::steady_clock::now();
        try {
            ok = c.check(detail);
        } catch (const std::exception& e) {
            detail = std::string("exception: ") + e.what();
        }
        auto secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        std::ostringstream line;
        line << (ok ? "[PASS] " : "[FAIL] ") << index << ". " << c.name << " -- " << detail
             << " [" << std::fixed << std::setprecision(1) << secs << "s]";
        std::cout << line.str() << std::endl;
        if (!ok) ++failed;
    }
    if (failed) {
        std::cout << failed << " of 11 criteria failed" << std::endl;
        return 1;
    }
    std::cout << "all 11 criteria passed" << std::endl;
    return 0;
}
