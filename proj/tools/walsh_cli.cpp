// Command-line front end: validate measure specs, export barriers, run the
// embeddings over simulated paths, compare their local-time costs, and audit
// the dual certificate.
//
// Exit codes: 0 ok, 2 config error, 3 validation failure, 4 numerical
// tolerance failure.

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "walsh/dual.hpp"
#include "walsh/dubins.hpp"
#include "walsh/measure.hpp"
#include "walsh/simulate.hpp"
#include "walsh/spec_io.hpp"
#include "walsh/stats.hpp"
#include "walsh/vallois.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitValidation = 3;
constexpr int kExitTolerance = 4;

using nlohmann::ordered_json;

struct Options {
    std::string spec;
    std::string method = "vallois";
    int depth = 4;
    double dt = 1e-4;
    double t_max = 100.0;
    std::size_t paths = 100000;
    std::uint64_t seed = 1;
    std::string psi = "exp";
    std::string out = "out";
    std::string bridge = "on";
    unsigned threads = 0;
    double gap_bound = 0.02;
    std::size_t dual_paths = 1000;
};

unsigned env_threads() {
    if (const char* v = std::getenv("WALSH_THREADS")) {
        const long n = std::atol(v);
        if (n > 0) return static_cast<unsigned>(n);
    }
    return 0;
}

walsh::SimParams sim_params(const Options& opt) {
    walsh::SimParams p;
    p.dt = opt.dt;
    p.t_max = opt.t_max;
    p.n_paths = opt.paths;
    p.seed = opt.seed;
    p.bridge_refinement = opt.bridge != "off";
    p.threads = opt.threads ? opt.threads : env_threads();
    try {
        p.validate();
    } catch (const std::invalid_argument& e) {
        throw CLI::ValidationError(e.what());  // bad parameters are config errors
    }
    return p;
}

walsh::ConvexCost cost_of(const Options& opt) {
    if (opt.psi == "exp") return walsh::ConvexCost::exp_decay();
    if (opt.psi == "sqrt") return walsh::ConvexCost::sqrt_quad();
    throw CLI::ValidationError("--psi must be exp or sqrt");
}

struct LoadedSpec {
    walsh::TargetMeasure target;
    walsh::SpinningMeasure kappa;
    bool kappa_overridden = false;
};

LoadedSpec load(const Options& opt) {
    const auto j = walsh::io::load_json(opt.spec);
    const auto raw = walsh::io::parse_measure_spec(j);
    walsh::TargetMeasure target = walsh::polar_decompose(raw);
    auto over = walsh::io::parse_kappa_override(j);
    if (over) return {target, *over, true};
    return {target, walsh::centered_spinning(target), false};
}

void emit_report(const Options& opt, ordered_json& rep) {
    std::filesystem::create_directories(opt.out);
    rep["schema_version"] = walsh::io::kSchemaVersion;
    walsh::io::write_file(opt.out + "/report.json", rep.dump(2) + "\n");
}

ordered_json base_report(const char* command, const Options& opt) {
    ordered_json rep;
    rep["command"] = command;
    rep["spec"] = opt.spec;
    rep["seed"] = opt.seed;
    rep["dt"] = opt.dt;
    rep["paths"] = opt.paths;
    rep["bridge"] = opt.bridge;
    return rep;
}

// Law comparison block shared by embed/compare: ray chi-square, per-ray
// Wasserstein-1 against reference radial laws, and moment intervals.
// Thresholds: chi-square at the Wilson-Hilferty 99.9% point, W1 <= 0.05,
// means within 3 sigma.
ordered_json law_report(const walsh::EmpiricalLaw& law, const std::vector<std::string>& ids,
                        const std::vector<double>& ray_pmf, const std::vector<const walsh::RadialMeasure*>& radials,
                        double expected_tau, bool& pass) {
    ordered_json out;
    out["samples"] = law.size();
    out["censored"] = law.censored();
    const auto chi = walsh::chi2_rays(law.ray_counts(), ray_pmf);
    const double crit = walsh::chi2_critical(chi.dof);
    out["ray_chi2"] = {{"stat", chi.stat}, {"dof", chi.dof}, {"critical", crit}, {"pass", chi.stat <= crit}};
    pass = pass && chi.stat <= crit;
    ordered_json w1s = ordered_json::array();
    for (std::size_t g = 0; g < ids.size(); ++g) {
        if (law.ray_counts()[g] == 0) continue;
        const double w1 = walsh::wasserstein1(law.radii(g), *radials[g]);
        w1s.push_back({{"ray", ids[g]}, {"w1", w1}, {"bound", 0.05}, {"pass", w1 <= 0.05}});
        pass = pass && w1 <= 0.05;
    }
    out["wasserstein1"] = w1s;
    const auto tau = walsh::mean_ci(law.taus());
    const bool tau_ok = std::abs(tau.mean - expected_tau) <= tau.halfwidth + 0.02 * expected_tau;
    out["tau"] = {{"mean", tau.mean}, {"ci3", tau.halfwidth}, {"expected", expected_tau}, {"pass", tau_ok}};
    pass = pass && tau_ok;
    return out;
}

int cmd_validate(const Options& opt) {
    ordered_json rep = base_report("validate", opt);
    const auto spec = load(opt);
    const auto& t = spec.target;
    rep["origin_mass"] = t.origin_mass();
    rep["first_moment"] = walsh::first_moment(t);
    rep["second_moment"] = walsh::second_moment(t);
    ordered_json rays = ordered_json::array();
    const auto centered = walsh::centered_spinning(t);
    for (std::size_t g = 0; g < t.ray_count(); ++g)
        rays.push_back({{"id", t.ray(g).id},
                        {"weight", t.ray(g).weight},
                        {"barycenter", t.ray_mean(g)},
                        {"kappa", centered.prob(t.ray(g).id)}});
    rep["rays"] = rays;
    bool ok = true;
    if (spec.kappa_overridden) {
        const bool cent = walsh::is_centered(t, spec.kappa);
        const bool adm = walsh::is_admissible(t, spec.kappa);
        rep["kappa_override"] = {{"centered", cent}, {"admissible", adm}};
        if (!cent) rep["findings"].push_back("kappa override is not centered; integrable embeddings are impossible");
        if (!adm) rep["findings"].push_back("kappa override leaves a charged ray unreachable");
        ok = cent && adm;
    }
    rep["pass"] = ok;
    emit_report(opt, rep);
    return ok ? kExitOk : kExitValidation;
}

int cmd_barrier(const Options& opt) {
    ordered_json rep = base_report("barrier", opt);
    const auto spec = load(opt);
    const walsh::Barrier barrier(spec.target);
    std::filesystem::create_directories(opt.out);
    walsh::io::write_file(opt.out + "/barrier.csv", walsh::io::barrier_csv(barrier));
    rep["first_moment"] = barrier.mean();
    rep["l_cap"] = barrier.l_cap();
    rep["truncated_mass"] = barrier.truncated_mass();
    const double lbar = barrier.origin_local_time();
    if (std::isfinite(lbar)) rep["origin_local_time"] = lbar;
    rep["files"] = {opt.out + "/barrier.csv"};
    rep["pass"] = true;
    emit_report(opt, rep);
    return kExitOk;
}

int cmd_embed(const Options& opt) {
    ordered_json rep = base_report("embed", opt);
    rep["method"] = opt.method;
    const auto spec = load(opt);
    const auto& t = spec.target;
    if (!walsh::is_centered(t, spec.kappa))
        throw std::domain_error("spinning measure is not centered; both embeddings require the centered choice");
    const auto sp = sim_params(opt);
    const auto spin = walsh::compile_spin(spec.kappa, t.ray_ids());

    walsh::StoppingRule rule = walsh::FixedTimeRule{0.0};
    double expected_tau = walsh::second_moment(t);
    std::vector<double> ray_pmf;
    std::vector<const walsh::RadialMeasure*> radials;
    std::vector<walsh::RadialMeasure> dubins_radials;
    if (opt.method == "dubins") {
        rule = walsh::dubins_rule(t, spec.kappa, opt.depth);
        const auto law = walsh::analytic_law(t, opt.depth);
        expected_tau = law.expected_tau;
        std::filesystem::create_directories(opt.out);
        walsh::io::write_file(opt.out + "/law.csv", walsh::io::law_csv(law, t.ray_ids()));
        rep["depth"] = opt.depth;
        rep["analytic_expected_tau"] = law.expected_tau;
        for (std::size_t g = 0; g < t.ray_count(); ++g) {
            ray_pmf.push_back(law.ray_pmf[g]);
            std::vector<walsh::RadialAtom> atoms;
            for (std::size_t i = 0; i < law.rays[g].radius.size(); ++i)
                atoms.push_back({law.rays[g].radius[i], law.rays[g].prob[i]});
            dubins_radials.emplace_back(std::move(atoms), std::vector<walsh::DensityPiece>{});
        }
        for (const auto& r : dubins_radials) radials.push_back(&r);
    } else if (opt.method == "vallois") {
        const walsh::Barrier barrier(t);
        rule = walsh::vallois_rule(barrier);
        for (std::size_t g = 0; g < t.ray_count(); ++g) {
            ray_pmf.push_back(t.ray(g).weight);
            radials.push_back(&t.ray(g).radial);
        }
    } else {
        throw CLI::ValidationError("--method must be dubins or vallois");
    }

    const auto samples = walsh::run_until(rule, spin, sp);
    std::filesystem::create_directories(opt.out);
    walsh::io::write_file(opt.out + "/samples.csv", walsh::io::samples_csv(samples, t.ray_ids()));
    const walsh::EmpiricalLaw law(t.ray_count(), samples);
    bool pass = true;
    rep["law"] = law_report(law, t.ray_ids(), ray_pmf, radials, expected_tau, pass);
    rep["files"] = {opt.out + "/samples.csv"};
    rep["pass"] = pass;
    emit_report(opt, rep);
    return pass ? kExitOk : kExitTolerance;
}

int cmd_compare(const Options& opt) {
    ordered_json rep = base_report("compare", opt);
    rep["psi"] = opt.psi;
    rep["depth"] = opt.depth;
    const auto spec = load(opt);
    const auto& t = spec.target;
    if (!walsh::is_centered(t, spec.kappa)) throw std::domain_error("spinning measure is not centered");
    const auto cost = cost_of(opt);
    const auto sp = sim_params(opt);
    const auto spin = walsh::compile_spin(spec.kappa, t.ray_ids());

    const walsh::Barrier barrier(t);
    const auto v_samples = walsh::run_until(walsh::vallois_rule(barrier), spin, sp);
    const auto d_samples = walsh::run_until(walsh::dubins_rule(t, spec.kappa, opt.depth), spin, sp);
    const walsh::EmpiricalLaw vl(t.ray_count(), v_samples), dl(t.ray_count(), d_samples);
    const auto cmp = walsh::compare_cost(vl.local_times(), dl.local_times(), cost.psi);
    rep["cost"] = {{"vallois_mean", walsh::mean_ci([&] {
                        std::vector<double> xs;
                        for (double l : vl.local_times()) xs.push_back(cost.psi(l));
                        return xs;
                    }()).mean},
                   {"dubins_mean", walsh::mean_ci([&] {
                        std::vector<double> xs;
                        for (double l : dl.local_times()) xs.push_back(cost.psi(l));
                        return xs;
                    }()).mean},
                   {"delta", cmp.delta_mean},
                   {"ci3", cmp.halfwidth}};
    const bool ordered = cmp.delta_mean <= cmp.halfwidth;
    rep["cost"]["pass"] = ordered;

    if (t.ray_count() >= 2) {
        std::vector<bool> in_A(t.ray_count(), false);
        in_A[0] = true;
        double x_hi = 0.0;
        const double ka = spin.prob[0];
        for (std::size_t g = 1; g < t.ray_count(); ++g) x_hi = std::max(x_hi, ka * t.ray(g).radial.max_support());
        std::vector<double> grid;
        for (double f : {0.4, 0.6, 0.8, 1.0, 1.2, 1.5}) grid.push_back(f * x_hi);
        const auto rows = walsh::ui_diagnostic(v_samples, spin, in_A, grid);
        ordered_json jrows = ordered_json::array();
        for (const auto& r : rows) jrows.push_back({{"x", r.x}, {"x_p", r.estimate}, {"sigma", r.sigma}});
        rep["ui_diagnostic"] = {{"A", t.ray(0).id}, {"rows", jrows}};
        rep["ui_diagnostic"]["tail_near_zero"] = rows.back().estimate <= 3.0 * rows.back().sigma;
    }
    rep["pass"] = ordered;
    emit_report(opt, rep);
    return ordered ? kExitOk : kExitTolerance;
}

int cmd_dual_check(const Options& opt) {
    ordered_json rep = base_report("dual-check", opt);
    rep["psi"] = opt.psi;
    rep["gap_bound"] = opt.gap_bound;
    const auto spec = load(opt);
    const auto& t = spec.target;
    const auto cost = cost_of(opt);
    const walsh::Barrier barrier(t);
    const walsh::DualCertificate cert(barrier, cost);
    auto sp = sim_params(opt);
    sp.n_paths = opt.dual_paths;
    const auto spin = walsh::compile_spin(spec.kappa, t.ray_ids());
    const walsh::StoppingRule rule = walsh::vallois_rule(barrier);

    double max_gap = -1e300, max_stop = 0.0, mean_skel = 0.0;
    std::vector<double> m_at;
    std::size_t n_stopped = 0;
    for (std::size_t i = 0; i < sp.n_paths; ++i) {
        const auto pr = walsh::run_one_path(rule, spin, sp, i);
        const auto gap = walsh::pathwise_gap(pr.path, pr.sample, cert);
        max_gap = std::max(max_gap, gap.max_gap);
        if (gap.stopped) {
            ++n_stopped;
            max_stop = std::max(max_stop, std::abs(gap.gap_at_stop));
            mean_skel += std::abs(gap.skeleton_stop_gap);
        }
        const std::size_t at = std::min<std::size_t>(pr.path.r.size() - 1, static_cast<std::size_t>(std::llround(1.0 / sp.dt)));
        m_at.push_back(cert.M_value(pr.path.ray[at], pr.path.r[at], pr.path.m[at]));
    }
    if (n_stopped) mean_skel /= static_cast<double>(n_stopped);
    const auto mci = walsh::mean_ci(m_at);
    rep["paths"] = sp.n_paths;
    rep["stopped"] = n_stopped;
    rep["max_gap"] = max_gap;
    rep["max_equality_gap"] = max_stop;
    rep["mean_skeleton_stop_gap"] = mean_skel;
    rep["martingale_at_1"] = {{"mean", mci.mean}, {"ci3", mci.halfwidth}, {"pass", std::abs(mci.mean) <= mci.halfwidth}};
    rep["truncation_error"] = cert.truncation_error();

    // certificate tables
    std::filesystem::create_directories(opt.out);
    {
        std::ostringstream os;
        os << "l,Delta";
        for (const auto& id : barrier.ray_ids()) os << ",A_" << id;
        os << '\n';
        const double end = cert.grid_end();
        for (int i = 0; i <= 256; ++i) {
            const double l = end * i / 256.0;
            os << walsh::io::fmt(l) << ',' << walsh::io::fmt(cert.delta(l));
            for (std::size_t g = 0; g < barrier.ray_count(); ++g) os << ',' << walsh::io::fmt(cert.A(g, l));
            os << '\n';
        }
        walsh::io::write_file(opt.out + "/certificate.csv", os.str());
    }
    {
        std::ostringstream os;
        os << "r";
        for (const auto& id : barrier.ray_ids()) os << ",G_" << id;
        os << '\n';
        double r_hi = 0.0;
        for (std::size_t g = 0; g < t.ray_count(); ++g) r_hi = std::max(r_hi, t.ray(g).radial.max_support());
        for (int i = 0; i <= 256; ++i) {
            const double r = 1.25 * r_hi * i / 256.0;
            os << walsh::io::fmt(r);
            for (std::size_t g = 0; g < barrier.ray_count(); ++g) os << ',' << walsh::io::fmt(cert.G(static_cast<int>(g), r));
            os << '\n';
        }
        walsh::io::write_file(opt.out + "/dual_g.csv", os.str());
    }
    rep["files"] = {opt.out + "/certificate.csv", opt.out + "/dual_g.csv"};
    const bool ok = max_gap <= opt.gap_bound && max_stop <= opt.gap_bound &&
                    std::abs(mci.mean) <= std::max(mci.halfwidth, 1e-12);
    rep["pass"] = ok;
    emit_report(opt, rep);
    return ok ? kExitOk : kExitTolerance;
}

}  // namespace

int main(int argc, char** argv) {
    Options opt;
    CLI::App app{"Skorokhod embeddings for Walsh Brownian motion"};
    app.require_subcommand(1);

    auto add_common = [&](CLI::App* cmd, bool with_sim) {
        cmd->add_option("--spec", opt.spec, "measure spec file (JSON)")->required();
        cmd->add_option("--out", opt.out, "output directory");
        if (with_sim) {
            cmd->add_option("--dt", opt.dt, "time step");
            cmd->add_option("--t-max", opt.t_max, "horizon");
            cmd->add_option("--paths", opt.paths, "number of paths");
            cmd->add_option("--seed", opt.seed, "RNG seed");
            cmd->add_option("--bridge", opt.bridge, "within-step bridge refinement: on|off")
                ->check(CLI::IsMember({"on", "off"}));
            cmd->add_option("--threads", opt.threads, "worker threads (default: WALSH_THREADS or hardware)");
        }
    };

    auto* validate = app.add_subcommand("validate", "check a measure spec and report moments and the centered spinning measure");
    add_common(validate, false);
    auto* barrier = app.add_subcommand("barrier", "export the barrier tables");
    add_common(barrier, false);
    auto* embed = app.add_subcommand("embed", "run an embedding and test the stopped law");
    add_common(embed, true);
    embed->add_option("--method", opt.method, "dubins|vallois")->check(CLI::IsMember({"dubins", "vallois"}));
    embed->add_option("--depth", opt.depth, "refinement depth (dubins)")->check(CLI::PositiveNumber);
    auto* compare = app.add_subcommand("compare", "run both embeddings and compare local-time costs");
    add_common(compare, true);
    compare->add_option("--depth", opt.depth, "refinement depth (dubins)")->check(CLI::PositiveNumber);
    compare->add_option("--psi", opt.psi, "convex cost: exp|sqrt")->check(CLI::IsMember({"exp", "sqrt"}));
    auto* dual = app.add_subcommand("dual-check", "audit the pathwise inequality of the dual certificate");
    add_common(dual, true);
    dual->add_option("--psi", opt.psi, "convex cost: exp|sqrt")->check(CLI::IsMember({"exp", "sqrt"}));
    dual->add_option("--gap-bound", opt.gap_bound, "tolerated pathwise gap");
    dual->add_option("--dual-paths", opt.dual_paths, "paths for the audit");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitConfig;
    }

    try {
        if (app.got_subcommand(validate)) return cmd_validate(opt);
        if (app.got_subcommand(barrier)) return cmd_barrier(opt);
        if (app.got_subcommand(embed)) return cmd_embed(opt);
        if (app.got_subcommand(compare)) return cmd_compare(opt);
        if (app.got_subcommand(dual)) return cmd_dual_check(opt);
    } catch (const walsh::io::ParseError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const CLI::ValidationError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const std::invalid_argument& e) {
        std::cerr << "validation error: " << e.what() << '\n';
        return kExitValidation;
    } catch (const std::domain_error& e) {
        std::cerr << "validation error: " << e.what() << '\n';
        return kExitValidation;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitValidation;
    }
    return kExitConfig;
}
