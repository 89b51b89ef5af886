#pragma once

#include <cstdint>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "treemax/experiments.hpp"
#include "treemax/io.hpp"
#include "treemax/maximal.hpp"
#include "treemax/operator_norms.hpp"
#include "treemax/theory.hpp"

namespace treemax {

namespace detail {

// Config file support: a JSON object whose keys mirror the long flag names.
// Explicit command-line flags win; config values only change the defaults.
class FlagDefaults {
public:
    void load(const std::string& path) {
        auto j = ordered_json::parse(read_text_file(path), nullptr, true, true);
        if (!j.is_object()) throw parameter_error("config must be a JSON object: " + path);
        cfg_ = std::move(j);
    }

    std::string str(const std::string& key, const std::string& fallback) const {
        auto it = cfg_.find(key);
        if (it == cfg_.end()) return fallback;
        if (it->is_string()) return it->get<std::string>();
        return it->dump();
    }

    template <class T>
    T num(const std::string& key, T fallback) const {
        auto it = cfg_.find(key);
        if (it == cfg_.end()) return fallback;
        if (it->is_number()) return it->get<T>();
        if (it->is_string()) return static_cast<T>(std::stoll(it->get<std::string>()));
        throw parameter_error("config value for '" + key + "' is not a number");
    }

    bool flag(const std::string& key, bool fallback) const {
        auto it = cfg_.find(key);
        if (it == cfg_.end()) return fallback;
        if (it->is_boolean()) return it->get<bool>();
        throw parameter_error("config value for '" + key + "' is not a boolean");
    }

private:
    ordered_json cfg_ = ordered_json::object();
};

inline std::string sibling_with_extension(const std::string& path, const std::string& ext) {
    auto slash = path.find_last_of('/');
    auto dot   = path.find_last_of('.');
    if (dot == std::string::npos || (slash != std::string::npos && dot < slash))
        return path + ext;
    return path.substr(0, dot) + ext;
}

inline Real parse_real_flag(const std::string& text, const char* what) {
    if (text == "inf") return real_infinity();
    try {
        return Real(text);
    } catch (const std::exception&) {
        throw parameter_error(std::string(what) + ": cannot parse number '" + text + "'");
    }
}

struct LoadedFunction {
    std::optional<RadialFunction> radial;
    std::optional<FiniteFunction> finite;
};

// --function accepts the built-in profiles: dirac, ball:N, sphere:N,
// geometric:ALPHA:N, lower:N:GAMMA
inline RadialFunction builtin_function(const TreeParams& tp, const std::string& spec) {
    std::vector<std::string> parts;
    std::size_t              pos = 0;
    while (true) {
        auto next = spec.find(':', pos);
        parts.push_back(spec.substr(pos, next == std::string::npos ? std::string::npos : next - pos));
        if (next == std::string::npos) break;
        pos = next + 1;
    }
    const std::string& name = parts[0];
    auto arg_int = [&](std::size_t i) {
        if (parts.size() <= i) throw parameter_error("--function " + name + ": missing argument");
        return std::stoi(parts[i]);
    };
    if (name == "dirac") return make_dirac(tp);
    if (name == "ball") return make_ball_indicator(tp, arg_int(1));
    if (name == "sphere") return make_sphere_indicator(tp, arg_int(1));
    if (name == "geometric") {
        if (parts.size() < 3) throw parameter_error("--function geometric:ALPHA:N");
        return make_geometric_profile(tp, parse_real_flag(parts[1], "--function"), std::stoi(parts[2]));
    }
    if (name == "lower") {
        if (parts.size() < 3) throw parameter_error("--function lower:N:GAMMA");
        return make_lower_profile(tp, std::stoi(parts[1]), parse_real_flag(parts[2], "--function"));
    }
    throw parameter_error("--function: unknown profile '" + name + "'");
}

inline LoadedFunction load_function(const TreeParams& tp, const std::string& radial_path,
                                    const std::string& finite_path, const std::string& fn_spec) {
    int given = int(!radial_path.empty()) + int(!finite_path.empty()) + int(!fn_spec.empty());
    if (given != 1)
        throw parameter_error("exactly one of --radial, --finite, --function is required");
    LoadedFunction out;
    if (!radial_path.empty())
        out.radial = read_radial_csv(tp, radial_path);
    else if (!fn_spec.empty())
        out.radial = builtin_function(tp, fn_spec);
    else
        out.finite = read_finite_csv(tp, finite_path);
    return out;
}

} // namespace detail

inline int cli_dispatch(int argc, const char* const* argv) {
    // config values act as defaults, so the file must be read before the
    // parser is built
    detail::FlagDefaults cfg;
    for (int i = 1; i < argc; ++i) {
        std::string a = argv[i];
        try {
            if (a == "--config" && i + 1 < argc) {
                cfg.load(argv[i + 1]);
                break;
            }
            if (a.rfind("--config=", 0) == 0) {
                cfg.load(a.substr(9));
                break;
            }
        } catch (const std::exception& e) {
            std::cerr << "treemax: " << e.what() << "\n";
            return 2;
        }
    }

    CLI::App app{"exact fractional maximal operators and Lorentz norms on homogeneous trees"};
    app.require_subcommand(0, 1);

    int           k          = cfg.num("k", 2);
    int           digits     = cfg.num("precision-digits", 0);
    std::uint64_t seed       = cfg.num<std::uint64_t>("seed", 1);
    int           threads    = cfg.num("threads", 1);
    bool          expect_div = cfg.flag("expect-divergence", false);
    std::string   out_path   = cfg.str("out", "");
    std::string   config_path;

    app.add_option("--k", k, "branching factor of the tree (each vertex has k+1 neighbors)")
        ->check(CLI::Range(2, 64));
    app.add_option("--precision-digits", digits,
                   "working precision in decimal digits (0 = library default)");
    app.add_option("--seed", seed, "seed for all randomized families");
    app.add_option("--threads", threads, "worker threads for family/grid loops")
        ->check(CLI::Range(1, 256));
    app.add_flag("--expect-divergence", expect_div,
                 "exit 0 even when a computed quantity is divergent");
    app.add_option("--out", out_path, "output file (stdout when omitted)");
    app.add_option("--config", config_path, "JSON file whose keys mirror the long flags");

    bool divergence_seen = false;

    // subcommand callbacks run inside app.parse(), after flags are bound, so
    // this is the single point where precision takes effect
    auto apply_precision = [&] {
        if (digits > 0) set_precision_digits(digits);
        ensure_thread_precision();
    };

    // ---- norm ------------------------------------------------------------
    auto* norm_cmd = app.add_subcommand("norm", "Lorentz norm of a function");
    norm_cmd->fallthrough();
    std::string n_radial, n_finite, n_fn;
    std::string n_p = cfg.str("p", "2"), n_s = cfg.str("s", "1");
    norm_cmd->add_option("--radial", n_radial, "radial table CSV (norm,value)");
    norm_cmd->add_option("--finite", n_finite, "finite function CSV (vertex,value)");
    norm_cmd->add_option("--function", n_fn, "built-in profile, e.g. ball:8 or geometric:0.5:30");
    norm_cmd->add_option("--p", n_p, "primary exponent (number or inf)");
    norm_cmd->add_option("--s", n_s, "secondary exponent (number or inf)");
    norm_cmd->callback([&] {
        apply_precision();
        TreeParams tp(k);
        auto       lf = detail::load_function(tp, n_radial, n_finite, n_fn);
        Real       p  = detail::parse_real_flag(n_p, "--p");
        Real       s  = detail::parse_real_flag(n_s, "--s");
        LogScalar  value = LogScalar::zero(tp.k);
        if (is_inf(p))
            value = lf.radial ? lebesgue_norm(*lf.radial, p) : lebesgue_norm(*lf.finite, p);
        else if (is_inf(s))
            value = lf.radial ? weak_norm(*lf.radial, p) : weak_norm(*lf.finite, p);
        else {
            LorentzIndex idx(p, s);
            value = lf.radial ? lorentz_norm(*lf.radial, idx) : lorentz_norm(*lf.finite, idx);
        }
        std::string text = format_value(value);
        if (!out_path.empty())
            write_text_file(out_path, csv_line({"p", "s", "value"}) + csv_line({n_p, n_s, text}));
        std::cout << text << "\n";
    });

    // ---- maximal ---------------------------------------------------------
    auto* max_cmd = app.add_subcommand("maximal", "fractional maximal operator values and norms");
    max_cmd->fallthrough();
    std::string m_radial, m_finite, m_fn;
    std::string m_gamma = cfg.str("gamma", "1/2");
    std::string m_vertex, m_q;
    int         m_norm = cfg.num("m", -1);
    int         m_rcap = cfg.num("r-cap", -1);
    bool        m_global = cfg.flag("global-weak", false);
    max_cmd->add_option("--radial", m_radial, "radial table CSV (norm,value)");
    max_cmd->add_option("--finite", m_finite, "finite function CSV (vertex,value)");
    max_cmd->add_option("--function", m_fn, "built-in profile");
    max_cmd->add_option("--gamma", m_gamma, "fractional exponent");
    max_cmd->add_option("--m", m_norm, "evaluate at radial distance m (radial input)");
    max_cmd->add_option("--vertex", m_vertex, "evaluate at this vertex (finite input)");
    max_cmd->add_option("--r-cap", m_rcap, "restrict the supremum to radii <= this");
    max_cmd->add_flag("--global-weak", m_global, "compute the weak operator norm instead");
    max_cmd->add_option("--q", m_q, "target exponent for --global-weak");
    max_cmd->callback([&] {
        apply_precision();
        TreeParams tp(k);
        auto       lf    = detail::load_function(tp, m_radial, m_finite, m_fn);
        Rational   grat  = parse_rational(m_gamma);
        Real       gamma = detail::to_real(grat);
        std::string text;
        if (m_global) {
            if (m_q.empty()) throw parameter_error("--global-weak requires --q");
            Real       q  = detail::parse_real_flag(m_q, "--q");
            NormResult nr = lf.radial ? operator_weak_norm(*lf.radial, gamma, q)
                                      : operator_weak_norm(*lf.finite, gamma, q);
            if (nr.divergent) divergence_seen = true;
            text = format_norm_value(nr);
        } else {
            MaximalParams mp(gamma, m_rcap >= 0 ? std::optional<int>(m_rcap) : std::nullopt);
            if (lf.radial) {
                if (m_norm < 0) throw parameter_error("radial input needs --m");
                text = format_value(maximal_radial(*lf.radial, mp, m_norm));
            } else {
                if (m_vertex.empty()) throw parameter_error("finite input needs --vertex");
                text = format_value(maximal_at(*lf.finite, parse_vertex(tp, m_vertex), mp));
            }
        }
        if (!out_path.empty()) write_text_file(out_path, text + "\n");
        std::cout << text << "\n";
    });

    // ---- region ----------------------------------------------------------
    auto* region_cmd = app.add_subcommand("region", "boundedness region figure (SVG + CSV)");
    region_cmd->fallthrough();
    std::vector<std::string> r_gammas;
    int                      r_grid = cfg.num("grid", 200);
    region_cmd->add_option("--gamma", r_gammas, "gamma value(s), one panel each");
    region_cmd->add_option("--grid", r_grid, "cells per axis")->check(CLI::Range(2, 512));
    region_cmd->callback([&] {
        apply_precision();
        std::vector<Rational> gs;
        if (r_gammas.empty()) r_gammas = {"1/4", "1/2", "3/5", "3/4", "1", "3/2"};
        for (const auto& g : r_gammas) gs.push_back(parse_rational(g));
        auto        fig  = build_region_figure(gs, r_grid, threads);
        std::string svgp = out_path.empty() ? "region.svg" : out_path;
        std::string csvp = detail::sibling_with_extension(svgp, ".csv");
        write_text_file(svgp, fig.svg);
        write_text_file(csvp, fig.csv);
        std::cout << "wrote " << svgp << " and " << csvp << "\n";
    });

    // ---- experiment ------------------------------------------------------
    auto* exp_cmd = app.add_subcommand("experiment", "run a named experiment, emit CSV + checks");
    exp_cmd->fallthrough();
    std::string e_name;
    std::string e_gamma  = cfg.str("gamma", "1/2");
    std::string e_s      = cfg.str("s", ""); // empty: each experiment's own default
    std::string e_t      = cfg.str("t", "1");
    std::string e_p      = cfg.str("p", "2");
    std::string e_q      = cfg.str("q", "2");
    std::string e_eps    = cfg.str("epsilon", "1/2");
    std::string e_beta   = cfg.str("beta", "0.75");
    std::string e_family = cfg.str("family", "balls");
    std::string e_json   = cfg.str("json", "");
    std::string e_tflag; // rwt witness mode only when given
    int         e_nmax = cfg.num("n-max", -1);
    int         e_R    = cfg.num("R", 5);
    int         e_N    = cfg.num("N", 255);
    int         e_mmax = cfg.num("m-max", 40);
    int         e_count = cfg.num("count", 20);
    int         e_grid  = cfg.num("grid", 200);
    std::vector<std::string> e_gammas;
    exp_cmd->add_option("name", e_name,
                        "growth | delta-divergence | veca | radial-bounded | rwt-probe | "
                        "zclass | region-figure | invariants")
        ->required();
    exp_cmd->add_option("--gamma", e_gamma, "fractional exponent");
    exp_cmd->add_option("--gammas", e_gammas, "gamma list for region-figure");
    exp_cmd->add_option("--s", e_s, "source secondary exponent");
    exp_cmd->add_option("--t", e_t, "target secondary exponent");
    exp_cmd->add_option("--witness-t", e_tflag, "rwt-probe: probe the (q,t) target instead");
    exp_cmd->add_option("--p", e_p, "source exponent");
    exp_cmd->add_option("--q", e_q, "target exponent");
    exp_cmd->add_option("--epsilon", e_eps, "zclass epsilon");
    exp_cmd->add_option("--beta", e_beta, "veca profile decay");
    exp_cmd->add_option("--family", e_family, "rwt-probe set family");
    exp_cmd->add_option("--n-max", e_nmax, "largest family index");
    exp_cmd->add_option("--R", e_R, "truncation radius");
    exp_cmd->add_option("--N", e_N, "veca table bound");
    exp_cmd->add_option("--m-max", e_mmax, "veca pointwise check bound");
    exp_cmd->add_option("--count", e_count, "random family size");
    exp_cmd->add_option("--grid", e_grid, "region-figure grid");
    exp_cmd->add_option("--json", e_json, "also write the JSON report here");
    exp_cmd->callback([&] {
        apply_precision();
        TreeParams       tp(k);
        ExperimentReport rep;
        if (e_name == "growth") {
            GrowthParams gp;
            gp.gamma   = parse_rational(e_gamma);
            if (!e_s.empty()) gp.s = detail::parse_real_flag(e_s, "--s");
            gp.t       = detail::parse_real_flag(e_t, "--t");
            gp.n_max   = e_nmax < 0 ? 48 : e_nmax;
            gp.threads = threads;
            rep        = run_growth(tp, gp);
        } else if (e_name == "delta-divergence") {
            DeltaDivergenceParams dp;
            dp.gamma = parse_rational(e_gamma);
            dp.t     = detail::parse_real_flag(e_t, "--t");
            dp.N     = e_nmax < 0 ? 60 : e_nmax;
            rep      = run_delta_divergence(tp, dp);
        } else if (e_name == "veca") {
            VecaParamsExt vx;
            vx.beta    = detail::parse_real_flag(e_beta, "--beta");
            if (!e_s.empty()) vx.s = detail::parse_real_flag(e_s, "--s");
            vx.N       = e_N;
            vx.m_max   = e_mmax;
            vx.threads = threads;
            rep        = run_veca(tp, vx);
        } else if (e_name == "radial-bounded") {
            RadialBoundedParams rp;
            rp.gamma        = parse_rational(e_gamma);
            if (!e_s.empty()) rp.s = detail::parse_real_flag(e_s, "--s");
            rp.random_count = e_count;
            rp.seed         = seed;
            rp.threads      = threads;
            rep             = run_radial_bounded(tp, rp);
        } else if (e_name == "rwt-probe") {
            RwtProbeParams rw;
            rw.gamma  = parse_rational(e_gamma);
            rw.p      = parse_exponent(e_p);
            rw.q      = parse_exponent(e_q);
            rw.family = e_family;
            rw.n_max  = e_nmax < 0 ? 40 : e_nmax;
            if (!e_tflag.empty()) rw.t = detail::parse_real_flag(e_tflag, "--witness-t");
            rw.seed    = seed;
            rw.threads = threads;
            rep        = run_rwt_probe(tp, rw);
        } else if (e_name == "zclass") {
            ZClassParams zp;
            zp.epsilon = parse_rational(e_eps);
            zp.gamma   = parse_rational(e_gamma);
            zp.p       = parse_exponent(e_p);
            zp.q       = parse_exponent(e_q);
            zp.n_max   = e_nmax < 0 ? 20 : e_nmax;
            rep        = run_zclass(tp, zp);
        } else if (e_name == "region-figure") {
            std::vector<Rational> gs;
            if (e_gammas.empty()) e_gammas = {"1/4", "1/2", "3/5", "3/4", "1", "3/2"};
            for (const auto& g : e_gammas) gs.push_back(parse_rational(g));
            rep = run_region_figure(gs, e_grid, threads);
            if (!out_path.empty()) {
                auto fig = build_region_figure(gs, e_grid, threads);
                write_text_file(detail::sibling_with_extension(out_path, ".svg"), fig.svg);
            }
        } else if (e_name == "invariants") {
            InvariantsParams ip;
            ip.gamma   = parse_rational(e_gamma);
            ip.R       = e_R;
            ip.trials  = e_count;
            ip.seed    = seed;
            ip.threads = threads;
            rep        = run_invariants(tp, ip);
        } else {
            throw parameter_error("unknown experiment '" + e_name + "'");
        }

        for (auto& row : rep.rows)
            for (auto& cell : row)
                if (cell == "inf") divergence_seen = true;

        std::string csv = to_csv(rep);
        if (!out_path.empty()) {
            write_text_file(out_path, csv);
            std::cout << "wrote " << out_path << "\n";
        } else {
            std::cout << csv;
        }
        if (!e_json.empty()) write_text_file(e_json, to_json_string(rep));
    });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_name() == "CallForHelp" || e.get_name() == "CallForAllHelp" ||
            e.get_name() == "CallForVersion")
            return app.exit(e);
        app.exit(e); // prints usage
        return 2;
    } catch (const std::invalid_argument& e) {
        std::cerr << "treemax: " << e.what() << "\n";
        return 2;
    } catch (const resource_error& e) {
        std::cerr << "treemax: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "treemax: " << e.what() << "\n";
        return 3;
    }

    if (app.get_subcommands().empty()) {
        std::cout << app.help();
        return 2;
    }

    return divergence_seen && !expect_div ? 4 : 0;
}

} // namespace treemax
