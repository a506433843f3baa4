// Acceptance run: every criterion is a list of checks at the stated tolerances. A check
// listed as a known failure is one whose failure has been analysed and is a property of
// the method rather than a bug; it is reported as "FAIL (known)" and does not change the
// exit status. Any other failing check does.
//
//   acceptance [--cli PATH --configs DIR] [--only 1,5,11]

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "qrelax/cosmology.hpp"
#include "qrelax/experiment.hpp"
#include "qrelax/hfunction.hpp"
#include "qrelax/signaling.hpp"

using namespace qrelax;

namespace {

struct Check {
    std::string label;
    bool pass = false;
    std::string detail;
    bool known_failure = false;
};

struct Criterion {
    int id;
    std::string title;
    std::function<std::vector<Check>()> run;
};

std::string fmt(const char* f, double a) {
    char buf[128];
    std::snprintf(buf, sizeof buf, f, a);
    return buf;
}

std::string fmt(const char* f, double a, double b) {
    char buf[160];
    std::snprintf(buf, sizeof buf, f, a, b);
    return buf;
}

std::string fmt(const char* f, double a, double b, double c) {
    char buf[200];
    std::snprintf(buf, sizeof buf, f, a, b, c);
    return buf;
}

bool within_factor(double a, double b, double factor) {
    return a > 0.0 && b > 0.0 && std::max(a / b, b / a) <= factor;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// M = 10 random phases, L = 100, cell width 1, uniform rho0
TrialConfig reference_trial(std::uint64_t seed = 1) {
    TrialConfig c;
    c.box_length = 100.0;
    c.modes = 10;
    c.cell_width = 1.0;
    c.seed = seed;
    c.t_end = 300.0;
    c.t_step = 5.0;
    return c;
}

// ---------------------------------------------------------------------------

std::vector<Check> h_theorem() {
    double worst_rise = -1.0, worst_drift = 0.0, slowest = 0.0;
    std::size_t decreased = 0;
    const std::size_t trials = 10;
    for (std::uint64_t seed = 1; seed <= trials; ++seed) {
        auto cfg = reference_trial(seed);
        cfg.fine_h_stride = 60;  // t = 0 and t = 300
        const auto t0 = std::chrono::steady_clock::now();
        const auto r = run_trial(cfg);
        const double elapsed = seconds_since(t0);
        slowest = std::max(slowest, elapsed);
        const auto& s = r.series;
        double rise = -1.0;
        for (double h : s.hbar) rise = std::max(rise, h - s.initial());
        worst_rise = std::max(worst_rise, rise);
        for (std::size_t i = 0; i < s.times.size(); ++i)
            if (s.times[i] <= 20.0 + 1e-9 && i > 0 && s.hbar[i] < s.initial()) {
                ++decreased;
                break;
            }
        std::optional<double> first;
        for (const auto& f : s.fine_h) {
            if (!f) continue;
            if (!first) first = *f;
            worst_drift = std::max(worst_drift, std::abs(*f - *first));
        }
        std::printf("    trial seed %2llu: H0 = %.5f, H(300) = %.5f, max rise %.2e, %.0f s\n",
                    static_cast<unsigned long long>(seed), s.initial(), s.hbar.back(), rise, elapsed);
        std::fflush(stdout);
    }
    return {
        {"H-bar(t) <= H-bar0 + 1e-3 on [0, 300], all trials", worst_rise <= 1e-3,
         fmt("worst rise above H-bar0: %.3e", worst_rise)},
        {"strict decrease by t = 20, all trials", decreased == trials,
         fmt("%.0f of %.0f trials below H-bar0 by t = 20", static_cast<double>(decreased),
             static_cast<double>(trials))},
        {"fine-grained H drift < 5e-3", worst_drift < 5e-3, fmt("worst drift %.3e", worst_drift)},
        {"runtime < 5 min per trial", slowest < 300.0, fmt("slowest trial %.0f s", slowest)},
    };
}

std::vector<Check> identity() {
    const auto cfg = reference_trial();
    const auto state = cfg.state();
    const auto id = h_identity_check(state, cfg.ensemble(state), 120.0, cfg.cell_width);
    return {{"|(H-bar0 - H-bar(120)) - integral| < 1e-3", std::abs(id.discrepancy) < 1e-3,
             fmt("H-bar0 - H-bar(120) = %.5f, integral = %.5f, discrepancy = %.4f", id.coarse_h0 - id.coarse_h,
                 id.integral, id.discrepancy),
             true}};
}

std::vector<Check> curvature() {
    const auto cfg = reference_trial();
    const auto state = cfg.state();
    const auto ens = cfg.ensemble(state);
    const auto fit = fit_small_time(state, ens, cfg.cell_width);
    const auto integral = h_curvature_at_zero(state, ens, cfg.cell_width);
    const double rel = std::abs(fit.curvature - integral.value) / std::abs(integral.value);
    return {
        {"fitted curvature matches the integral within 20%", rel <= 0.2,
         fmt("fit %.3e +- %.1e, integral %.4g", fit.curvature, fit.curvature_error, integral.value), true},
        {"fitted curvature <= 0", fit.curvature <= 0.0, fmt("fit %.3e", fit.curvature)},
        {"fitted slope consistent with 0 (within 2 sigma)", std::abs(fit.slope) <= 2.0 * fit.slope_error,
         fmt("slope %.3e +- %.1e", fit.slope, fit.slope_error), true},
    };
}

std::vector<Check> timescale() {
    auto cfg = reference_trial();
    cfg.t_step = 0.05;
    cfg.stop_at_t5 = true;
    const auto r = run_trial(cfg);
    const double t5 = measure_t5(r.series);
    const auto state = cfg.state();
    const auto tau = timescale_tau(state, cfg.ensemble(state), cfg.cell_width);
    std::printf("    t5%% = %.3f; tau: curvature %.4g, small-cell %.4g, dimensional %.4g\n", t5, tau.tau,
                tau.tau_small_cell, tau.tau_dimensional);
    auto factor = [](double a, double b) { return std::max(a / b, b / a); };
    std::vector<Check> out{
        {"t5% within 3x of the quoted tau ~ 200", within_factor(t5, 200.0, 3.0),
         fmt("t5%% = %.2f (factor %.2f)", t5, factor(t5, 200.0)), true},
        {"t5% within 3x of the quoted initial-decrease scale ~ 100", within_factor(t5, 100.0, 3.0),
         fmt("t5%% = %.2f (factor %.2f)", t5, factor(t5, 100.0)), true},
        {"curvature tau within 3x of t5%", within_factor(tau.tau, t5, 3.0),
         fmt("tau = %.4g (factor %.3g)", tau.tau, factor(tau.tau, t5)), true},
        {"small-cell tau within 3x of t5%", within_factor(tau.tau_small_cell, t5, 3.0),
         fmt("tau = %.4g (factor %.3g)", tau.tau_small_cell, factor(tau.tau_small_cell, t5)), true},
        {"dimensional tau within 3x of t5%", within_factor(tau.tau_dimensional, t5, 3.0),
         fmt("tau = %.4g (factor %.3g)", tau.tau_dimensional, factor(tau.tau_dimensional, t5)), true},
        {"dimensional tau within 3x of the quoted tau ~ 200", within_factor(tau.tau_dimensional, 200.0, 3.0),
         fmt("tau = %.4g (factor %.3g)", tau.tau_dimensional, factor(tau.tau_dimensional, 200.0))},
    };
    return out;
}

TrialConfig scaling_base(int modes) {
    auto b = reference_trial();
    b.modes = modes;
    b.t_step = 0.05;
    b.stop_at_t5 = true;
    return b;
}

void print_points(const ScalingResult& r) {
    for (const auto& p : r.points)
        std::printf("    x = %-5g mean t5%% = %8.4f +- %.4f (%zu reached)\n", p.abscissa, p.mean, p.standard_error,
                    p.t5.size());
}

std::vector<Check> mode_scaling() {
    const std::vector<int> ci{10, 20, 40};
    const auto r = scaling_in_modes(ci, 3, scaling_base(10));
    print_points(r);
    const std::vector<int> all{10, 15, 20, 25, 30, 35, 40};
    const auto f = scaling_in_modes(all, 10, scaling_base(10));
    print_points(f);
    return {
        {"full run (M = 10..40 step 5; 10 trials): slope in [-3.2, -2.2]", f.slope >= -3.2 && f.slope <= -2.2,
         fmt("slope %.3f +- %.3f", f.slope, f.slope_error)},
        {"reduced run (M = 10, 20, 40; 3 trials): slope in [-3.5, -1.9]", r.slope >= -3.5 && r.slope <= -1.9,
         fmt("slope %.3f +- %.3f", r.slope, r.slope_error)},
    };
}

std::vector<Check> cell_scaling() {
    const std::vector<double> widths{0.2, 0.3, 0.4, 0.5, 1.0, 2.0};
    const auto r = scaling_in_cells(widths, 3, scaling_base(20), 0.5);
    print_points(r.fit);
    std::string dep;
    for (std::size_t i = 0; i < widths.size(); ++i)
        if (widths[i] > 0.5) dep += fmt("dx = %g: t5*dx / mean = %.2f; ", widths[i], r.departure[i]);
    std::printf("    departure at larger cells: %s\n", dep.c_str());
    return {{"t5% * dx constant within 25% for dx in {0.2, ..., 0.5} at M = 20", r.max_relative_spread <= 0.25,
             fmt("product mean %.4f, max relative spread %.3f", r.product_mean, r.max_relative_spread)}};
}

std::vector<Check> recurrence() {
    auto cfg = reference_trial();
    const auto r = recurrence_check(cfg);
    return {
        {"T_P = 2 pi / E1 ~ 12,732", std::abs(r.period - 12732.0) < 1.0, fmt("T_P = %.3f", r.period)},
        {"|H-bar(T_P) - H-bar(0)| < 1e-2", r.hbar_error < 1e-2, fmt("%.3e", r.hbar_error)},
        {"max trajectory round-trip error < 1e-3", r.max_return_error < 1e-3,
         fmt("%.3e (halved tolerances: %.2e -> %.2e)", r.max_return_error, r.return_error_default,
             r.return_error_halved)},
    };
}

std::vector<Check> signaling() {
    const double L = kPi, c = 0.98;
    const auto state = EntangledState::schmidt_pair(L, c, std::sqrt(1.0 - c * c));
    const auto tilt = SuddenQuench::linear_tilt(0.01);
    const std::vector<double> eps{1e-3, 3e-3, 1e-2, 3e-2, 1e-1};

    const auto eq = delta_rho_A(state, PairEnsemble::equilibrium, tilt, 0.1);
    double trivial = 0.0, trivial_quench = 0.0;
    for (double e : {0.05, 0.1}) {
        const auto p = delta_rho_A(state, PairEnsemble::uniform, SuddenQuench::none(), e);
        trivial = std::max(trivial, p.max_abs);
        trivial_quench = std::max(trivial_quench, p.max_abs_quench);
    }
    const auto sc = signal_scaling(state, PairEnsemble::uniform, tilt, eps);
    for (const auto& p : sc.profiles)
        std::printf("    eps = %-6g max|drho_A| = %.4e, quench part %.2e, integral %.2e\n", p.eps, p.max_abs,
                    p.max_abs_quench, p.integral);
    return {
        {"equilibrium null: max|drho_A| < 1e-4", eq.max_abs < 1e-4, fmt("%.3e at eps = 0.1", eq.max_abs)},
        {"trivial-quench null (H_B unchanged): max|drho_A| < 1e-4", trivial < 1e-4,
         fmt("%.3e over eps = 0.05, 0.1 (quench-attributable part %.1e)", trivial, trivial_quench), true},
        {"integral of drho_A = 0 within 1e-3", sc.max_abs_integral < 1e-3, fmt("max |integral| %.3e", sc.max_abs_integral)},
        {"eps^2 scaling: slope 2.0 +- 0.1 over [1e-3, 1e-1]", std::abs(sc.slope - 2.0) <= 0.1,
         fmt("slope %.4f +- %.4f", sc.slope, sc.slope_error)},
    };
}

std::vector<Check> typicality() {
    const auto state = reference_trial().state();
    const auto quartic = typicality_demo(state, 100000, SamplingMeasure::fourth_power, 11);
    const auto square = typicality_demo(state, 100000, SamplingMeasure::squared, 12);
    auto p = [](const GoodnessOfFit& g) { return fmt("chi2 = %.1f, dof %.0f, p = %.3g", g.chi_square, g.dof, g.p_value); };
    return {
        {"|psi|^4 samples rejected as |psi|^2 at 99%", !quartic.vs_squared.accepted, p(quartic.vs_squared)},
        {"|psi|^4 samples accepted as normalised |psi|^4 at 99%", quartic.vs_fourth.accepted, p(quartic.vs_fourth)},
        {"|psi|^2 samples accepted as |psi|^2 at 99%", square.vs_squared.accepted, p(square.vs_squared)},
        {"|psi|^2 samples rejected as normalised |psi|^4 at 99%", !square.vs_fourth.accepted, p(square.vs_fourth)},
    };
}

std::vector<Check> cosmology() {
    using namespace cosmo;
    const auto table = suppression_report({1e-3}, {1e20}, 47);
    const double lp = Constants::planck_length_cm().value;
    const double cross = table.crossover_gev.value_or(0.0);
    const double graviton = stretch_lengthscale({lp}, 1e32).value;
    const double cmb = stretch_lengthscale({1e-5}, 1e33).value;
    std::printf("    suppression for every kT once dx < %.2f Planck lengths\n", suppression_length().value / lp);
    return {
        {"suppression crossover in [1e17, 1e19] GeV", cross >= 1e17 && cross <= 1e19, fmt("%.4g GeV", cross)},
        {"graviton stretch (l_P x 1e32) within 3x of mm order (0.1 cm)", within_factor(graviton, 0.1, 3.0),
         fmt("%.4g cm", graviton)},
        {"CMB photon width (1e-5 cm x 1e33) within 3x of 1e28 cm", within_factor(cmb, 1e28, 3.0), fmt("%.4g cm", cmb)},
    };
}

std::string slurp(const std::filesystem::path& p) {
    std::ifstream f(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()};
}

std::vector<Check> determinism(const std::string& cli, const std::string& configs) {
    std::vector<Check> out;
    if (cli.empty() || configs.empty()) {
        out.push_back({"command-line tool available", false, "run with --cli and --configs"});
        return out;
    }
    const auto root = std::filesystem::temp_directory_path() / "qrelax_acceptance";
    std::filesystem::remove_all(root);
    for (const std::string cmd :
         {"simulate", "hseries", "scaling-m", "scaling-dx", "recurrence", "typicality", "signal", "cosmo"}) {
        const auto cfg = std::filesystem::path(configs) / (cmd + ".json");
        std::vector<std::string> csv;
        bool ran = true;
        for (const char* run : {"a", "b"}) {
            const auto dir = root / run;
            const std::string line = "\"" + cli + "\" " + cmd + " -c \"" + cfg.string() + "\" -o \"" + dir.string() +
                                     "\" > \"" + (root / (cmd + "_" + run + ".log")).string() + "\" 2>&1";
            std::filesystem::create_directories(dir);
            ran = ran && std::system(line.c_str()) == 0;
            csv.push_back(slurp(dir / (cmd + ".csv")));
        }
        const bool same = ran && !csv[0].empty() && csv[0] == csv[1];
        out.push_back({cmd + ": byte-identical CSV on rerun", same,
                       ran ? fmt("%.0f bytes", static_cast<double>(csv[0].size())) : "command failed"});
    }
    std::filesystem::remove_all(root);
    return out;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"acceptance criteria"};
    std::string cli_path, configs;
    std::vector<int> only;
    app.add_option("--cli", cli_path, "path to the qrelax executable (determinism criterion)");
    app.add_option("--configs", configs, "directory with one <subcommand>.json per subcommand");
    app.add_option("--only", only, "criteria to run")->delimiter(',');
    CLI11_PARSE(app, argc, argv);

    const std::vector<Criterion> criteria{
        {1, "H-theorem suite", h_theorem},
        {2, "coarse-graining identity at t = 120", identity},
        {3, "initial curvature of H-bar", curvature},
        {4, "relaxation timescale", timescale},
        {5, "t5% scaling with the number of modes", mode_scaling},
        {6, "t5% scaling with the cell width", cell_scaling},
        {7, "recurrence", recurrence},
        {8, "signaling suite", signaling},
        {9, "typicality demo", typicality},
        {10, "cosmology", cosmology},
        {11, "determinism", [&] { return determinism(cli_path, configs); }},
    };

    const std::set<int> selected(only.begin(), only.end());
    int passed = 0, failed = 0, unexpected = 0, known = 0;
    std::vector<std::string> summary;
    for (const auto& c : criteria) {
        if (!selected.empty() && !selected.count(c.id)) continue;
        std::printf("criterion %d: %s\n", c.id, c.title.c_str());
        std::fflush(stdout);
        const auto t0 = std::chrono::steady_clock::now();
        std::vector<Check> checks;
        try {
            checks = c.run();
        } catch (const std::exception& e) {
            checks.push_back({"ran without error", false, e.what()});
        }
        bool all = true, only_known = true;
        for (const auto& k : checks) {
            const char* tag = k.pass ? (k.known_failure ? "PASS (listed as known failure)" : "PASS")
                                     : (k.known_failure ? "FAIL (known)" : "FAIL");
            std::printf("  [%s] %s: %s\n", tag, k.label.c_str(), k.detail.c_str());
            if (!k.pass) {
                all = false;
                if (!k.known_failure) only_known = false;
            }
        }
        const char* verdict = all ? "PASS" : (only_known ? "FAIL (known)" : "FAIL");
        std::printf("  => criterion %d %s (%.0f s)\n\n", c.id, verdict, seconds_since(t0));
        std::fflush(stdout);
        summary.push_back(fmt("criterion %2.0f: ", c.id) + verdict + " - " + c.title);
        if (all) {
            ++passed;
        } else {
            ++failed;
            (only_known ? known : unexpected) += 1;
        }
    }
    std::printf("summary\n");
    for (const auto& s : summary) std::printf("  %s\n", s.c_str());
    std::printf("%d passed, %d failed (%d known, %d unexpected)\n", passed, failed, known, unexpected);
    return unexpected == 0 ? 0 : 1;
}
