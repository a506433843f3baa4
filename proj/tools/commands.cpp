#include "commands.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <optional>

#include "qrelax/cosmology.hpp"
#include "qrelax/experiment.hpp"
#include "qrelax/hfunction.hpp"
#include "qrelax/integrator.hpp"
#include "qrelax/signaling.hpp"
#include "qrelax/stats.hpp"

namespace qrelax::cli {

std::string Output::path(const std::string& suffix) const {
    return (std::filesystem::path(dir) / (prefix + suffix)).string();
}

namespace {

// Round-trip precision; the same bytes on every run.
std::string num(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

json nullable(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

json finite_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

void write_file(const std::string& path, const std::string& text) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write '" + path + "'");
    f << text;
}

void write_summary(const Output& out, const std::string& command, json config, json results) {
    json s;
    s["command"] = command;
    s["config"] = std::move(config);
    s["results"] = std::move(results);
    write_file(out.path("_summary.json"), s.dump(2) + "\n");
}

IntegratorConfig read_integrator(Section sec, IntegratorConfig c = {}) {
    c.rel_tol = sec.get("rel_tol", c.rel_tol);
    c.abs_tol = sec.get("abs_tol", c.abs_tol);
    c.max_step = sec.get("max_step", c.max_step);
    c.min_step = sec.get("min_step", c.min_step);
    c.initial_step = sec.get("initial_step", c.initial_step);
    c.node_retreat_factor = sec.get("node_retreat_factor", c.node_retreat_factor);
    c.step_doubling = sec.get("step_doubling", c.step_doubling);
    sec.finish();
    c.validate();
    return c;
}

json echo(const IntegratorConfig& c) {
    return {{"rel_tol", c.rel_tol},           {"abs_tol", c.abs_tol},
            {"max_step", c.max_step},         {"min_step", c.min_step},
            {"initial_step", c.initial_step}, {"node_retreat_factor", c.node_retreat_factor},
            {"step_doubling", c.step_doubling}};
}

TrialConfig read_trial(Section& sec, TrialConfig c = {}) {
    c.box_length = sec.get("box_length", c.box_length);
    c.modes = sec.get("modes", c.modes);
    c.cell_width = sec.get("cell_width", c.cell_width);
    c.seed = sec.get("seed", c.seed);
    c.t_end = sec.get("t_end", c.t_end);
    c.t_step = sec.get("t_step", c.t_step);
    c.fine_h_stride = sec.get("fine_h_stride", c.fine_h_stride);
    c.fine_h_tolerance = sec.get("fine_h_tolerance", c.fine_h_tolerance);
    c.snapshot_points = sec.get("snapshot_points", c.snapshot_points);
    c.snapshot_times = sec.get("snapshot_times", c.snapshot_times);
    c.density = parse_initial_density(sec.get<std::string>("density", to_string(c.density)));
    c.stop_at_t5 = sec.get("stop_at_t5", c.stop_at_t5);
    c.integrator = read_integrator(sec.child("integrator"), c.integrator);
    c.validate();
    return c;
}

json echo(const TrialConfig& c) {
    return {{"box_length", c.box_length},
            {"modes", c.modes},
            {"cell_width", c.cell_width},
            {"seed", c.seed},
            {"t_end", c.t_end},
            {"t_step", c.t_step},
            {"fine_h_stride", c.fine_h_stride},
            {"fine_h_tolerance", c.fine_h_tolerance},
            {"snapshot_points", c.snapshot_points},
            {"snapshot_times", c.snapshot_times},
            {"density", to_string(c.density)},
            {"stop_at_t5", c.stop_at_t5},
            {"integrator", echo(c.integrator)}};
}

json phases_of(const SuperpositionState& s) {
    return std::vector<double>(s.phases().begin(), s.phases().end());
}

}  // namespace

// ---------------------------------------------------------------------------
// simulate: an ensemble of trajectories sampled from rho0.
// CSV: t,particle,x,completed

void run_simulate(const json& config, const Output& out) {
    Section sec(config, "simulate");
    TrialConfig trial;
    trial.t_end = 50.0;
    trial.t_step = 5.0;
    trial.box_length = sec.get("box_length", trial.box_length);
    trial.modes = sec.get("modes", trial.modes);
    trial.seed = sec.get("seed", trial.seed);
    trial.t_end = sec.get("t_end", trial.t_end);
    trial.t_step = sec.get("t_step", trial.t_step);
    trial.density = parse_initial_density(sec.get<std::string>("density", "uniform"));
    trial.integrator = read_integrator(sec.child("integrator"));
    const auto particles = sec.get<std::size_t>("particles", 1000);
    const auto sample_seed = sec.get<std::uint64_t>("sample_seed", trial.seed + 1);
    const double max_stall = sec.get("max_stall_fraction", 0.01);
    sec.finish();
    trial.validate();
    if (particles == 0) throw ConfigError("simulate.particles must be positive");

    const auto state = trial.state();
    const auto ens = trial.ensemble(state);
    auto xs = sample_ensemble(ens, particles, sample_seed);
    const auto x0 = xs;
    std::vector<char> alive(particles, 1);
    const auto times = trial.time_grid();

    std::string csv = "t,particle,x,completed\n";
    auto dump = [&](double t) {
        for (std::size_t i = 0; i < particles; ++i)
            csv += num(t) + "," + std::to_string(i) + "," + num(xs[i]) + "," + (alive[i] ? "1" : "0") + "\n";
    };
    dump(times.front());
    for (std::size_t k = 1; k < times.size(); ++k) {
        // stalled particles stay where they stopped
        std::vector<std::size_t> live;
        std::vector<double> pos;
        for (std::size_t i = 0; i < particles; ++i)
            if (alive[i]) {
                live.push_back(i);
                pos.push_back(xs[i]);
            }
        const auto moved = evolve_ensemble(state, pos, times[k - 1], times[k], trial.integrator, 1.0);
        for (std::size_t j = 0; j < live.size(); ++j) {
            xs[live[j]] = moved.positions[j];
            if (moved.status[j] != TrajectoryStatus::completed) alive[live[j]] = 0;
        }
        dump(times[k]);
    }
    write_file(out.path(".csv"), csv);

    const auto stalled = static_cast<std::size_t>(std::count(alive.begin(), alive.end(), 0));
    double mean_shift = 0.0;
    for (std::size_t i = 0; i < particles; ++i) mean_shift += std::abs(xs[i] - x0[i]);
    json cfg = {{"box_length", trial.box_length}, {"modes", trial.modes},         {"seed", trial.seed},
                {"sample_seed", sample_seed},       {"particles", particles},       {"t_end", trial.t_end},
                {"t_step", trial.t_step},           {"density", to_string(trial.density)},
                {"max_stall_fraction", max_stall},  {"integrator", echo(trial.integrator)}};
    json res = {{"phases", phases_of(state)},
                {"samples", times.size()},
                {"stalled", stalled},
                {"stalled_fraction", static_cast<double>(stalled) / static_cast<double>(particles)},
                {"mean_abs_displacement", mean_shift / static_cast<double>(particles)}};
    write_summary(out, "simulate", cfg, res);
    if (static_cast<double>(stalled) > max_stall * static_cast<double>(particles))
        throw EnsembleFailure("simulate: too many trajectories stalled", stalled, particles);
}

// ---------------------------------------------------------------------------
// hseries: coarse (and optionally fine) H for one trial.
// CSV: t,hbar,fine_h,stalled_fraction; <prefix>_snapshots.csv: t,x,rho,sigma,f,reliable

void run_hseries(const json& config, const Output& out) {
    Section sec(config, "hseries");
    TrialConfig trial = read_trial(sec);
    const bool timescales = sec.get("timescales", false);
    const auto identity_times = sec.get("identity_times", std::vector<double>{});
    const double drop = sec.get("drop", 0.05);
    sec.finish();

    const auto result = run_trial(trial);
    const auto& s = result.series;
    write_file(out.path(".csv"), to_csv(s));
    if (!result.snapshots.empty()) {
        std::string csv = "t,x,rho,sigma,f,reliable\n";
        for (const auto& f : result.snapshots)
            for (std::size_t i = 0; i < f.x.size(); ++i)
                csv += num(f.time) + "," + num(f.x[i]) + "," + num(f.rho[i]) + "," + num(f.sigma[i]) + "," +
                       num(f.ratio[i]) + "," + (f.reliable[i] ? "1" : "0") + "\n";
        write_file(out.path("_snapshots.csv"), csv);
    }

    json res;
    const auto state = trial.state();
    const auto ens = trial.ensemble(state);
    res["phases"] = phases_of(state);
    res["hbar0"] = s.initial();
    res["hbar_final"] = s.hbar.back();
    double rise = -std::numeric_limits<double>::infinity(), max_stall = 0.0;
    for (std::size_t i = 0; i < s.hbar.size(); ++i) {
        rise = std::max(rise, s.hbar[i] - s.initial());
        max_stall = std::max(max_stall, s.stalled_fraction[i]);
    }
    res["max_rise_above_hbar0"] = rise;
    res["max_stalled_fraction"] = max_stall;
    std::optional<double> fine0, drift;
    for (const auto& f : s.fine_h) {
        if (!f) continue;
        if (!fine0) fine0 = *f;
        drift = std::max(drift.value_or(0.0), std::abs(*f - *fine0));
    }
    res["fine_h0"] = nullable(fine0);
    res["fine_h_max_drift"] = nullable(drift);
    try {
        res["t_drop"] = measure_t5(s, drop);
    } catch (const ThresholdNotReached&) {
        res["t_drop"] = nullptr;
    } catch (const std::domain_error&) {
        res["t_drop"] = nullptr;
    }
    if (timescales) {
        const auto curv = h_curvature_at_zero(state, ens, trial.cell_width);
        const auto fit = fit_small_time(state, ens, trial.cell_width);
        json t = {{"curvature_integral", curv.value},
                  {"excluded_cells", curv.excluded_cells},
                  {"fit_slope", fit.slope},
                  {"fit_slope_error", fit.slope_error},
                  {"fit_curvature", fit.curvature},
                  {"fit_curvature_error", fit.curvature_error}};
        try {
            const auto tau = timescale_tau(state, ens, trial.cell_width);
            t["tau"] = tau.tau;
            t["tau_small_cell"] = tau.tau_small_cell;
            t["tau_dimensional"] = tau.tau_dimensional;
        } catch (const std::domain_error& e) {
            t["tau_error"] = e.what();
        }
        res["timescales"] = t;
    }
    json ids = json::array();
    for (double t : identity_times) {
        const auto id = h_identity_check(state, ens, t, trial.cell_width);
        ids.push_back({{"t", t},
                       {"hbar0", id.coarse_h0},
                       {"hbar", id.coarse_h},
                       {"integral", id.integral},
                       {"discrepancy", id.discrepancy},
                       {"min_integrand", id.min_integrand}});
    }
    res["identity"] = ids;

    json cfg = echo(trial);
    cfg["timescales"] = timescales;
    cfg["identity_times"] = identity_times;
    cfg["drop"] = drop;
    write_summary(out, "hseries", cfg, res);
}

// ---------------------------------------------------------------------------
// scaling-m / scaling-dx: t5% per trial. CSV: <abscissa>,seed,t5

namespace {

TrialConfig scaling_base(Section& sec, double cell_width, int modes) {
    TrialConfig base;
    base.cell_width = cell_width;
    base.modes = modes;
    base.t_step = 0.05;
    base.t_end = 300.0;
    auto b = sec.child("base");
    base = read_trial(b, base);
    b.finish();
    return base;
}

std::string scaling_csv(const char* column, const std::vector<ScalingPoint>& points) {
    std::string csv = std::string(column) + ",seed,t5\n";
    for (const auto& p : points)
        for (std::size_t k = 0; k < p.t5.size(); ++k)
            csv += num(p.abscissa) + "," + std::to_string(p.t5_seeds[k]) + "," + num(p.t5[k]) + "\n";
    return csv;
}

json echo(const ScalingResult& r) {
    json pts = json::array();
    for (std::size_t i = 0; i < r.points.size(); ++i) {
        const auto& p = r.points[i];
        pts.push_back({{"abscissa", p.abscissa},
                       {"seeds", p.seeds},
                       {"reached", p.t5.size()},
                       {"not_reached", p.not_reached},
                       {"mean_t5", p.mean},
                       {"standard_error", p.standard_error},
                       {"residual", r.residuals[i]}});
    }
    return {{"points", pts},
            {"slope", r.slope},
            {"slope_error", r.slope_error},
            {"intercept", r.intercept},
            {"fitted_points", r.fitted_points}};
}

}  // namespace

void run_scaling_modes(const json& config, const Output& out) {
    Section sec(config, "scaling-m");
    const auto modes = sec.get("modes", std::vector<int>{10, 20, 40});
    const auto trials = sec.get<std::size_t>("trials", 3);
    TrialConfig base = scaling_base(sec, 1.0, 10);
    sec.finish();

    const auto r = scaling_in_modes(modes, trials, base);
    write_file(out.path(".csv"), scaling_csv("modes", r.points));
    json cfg = {{"modes", modes}, {"trials", trials}, {"base", echo(base)}};
    write_summary(out, "scaling-m", cfg, echo(r));
}

void run_scaling_cells(const json& config, const Output& out) {
    Section sec(config, "scaling-dx");
    const auto widths = sec.get("widths", std::vector<double>{0.2, 0.3, 0.4, 0.5, 1.0, 2.0});
    const auto trials = sec.get<std::size_t>("trials", 3);
    const double limit = sec.get("small_cell_limit", 0.5);
    TrialConfig base = scaling_base(sec, 1.0, 20);
    sec.finish();

    const auto r = scaling_in_cells(widths, trials, base, limit);
    write_file(out.path(".csv"), scaling_csv("cell_width", r.fit.points));
    json res = echo(r.fit);
    res["products"] = r.products;
    res["product_mean"] = r.product_mean;
    res["max_relative_spread"] = r.max_relative_spread;
    res["departure"] = r.departure;
    json cfg = {{"widths", widths}, {"trials", trials}, {"small_cell_limit", limit}, {"base", echo(base)}};
    write_summary(out, "scaling-dx", cfg, res);
}

// ---------------------------------------------------------------------------
// recurrence: H-bar approaching the recurrence period. CSV: t,hbar

void run_recurrence(const json& config, const Output& out) {
    Section sec(config, "recurrence");
    TrialConfig trial = read_trial(sec);
    RecurrenceOptions opts;
    opts.probe_points = sec.get("probe_points", opts.probe_points);
    opts.approach_offsets = sec.get("approach_offsets", opts.approach_offsets);
    opts.compare_tolerances = sec.get("compare_tolerances", opts.compare_tolerances);
    opts.tolerance_probe_points = sec.get("tolerance_probe_points", opts.tolerance_probe_points);
    sec.finish();

    const auto r = recurrence_check(trial, opts);
    std::string csv = "t,hbar\n" + num(0.0) + "," + num(r.hbar0) + "\n";
    for (std::size_t i = 0; i < r.approach_times.size(); ++i)
        csv += num(r.approach_times[i]) + "," + num(r.approach_hbar[i]) + "\n";
    write_file(out.path(".csv"), csv);

    json cfg = echo(trial);
    cfg["probe_points"] = opts.probe_points;
    cfg["approach_offsets"] = opts.approach_offsets;
    cfg["compare_tolerances"] = opts.compare_tolerances;
    cfg["tolerance_probe_points"] = opts.tolerance_probe_points;
    json res = {{"phases", phases_of(trial.state())},
                {"period", r.period},
                {"hbar0", r.hbar0},
                {"hbar_period", r.hbar_period},
                {"hbar_error", r.hbar_error},
                {"max_return_error", r.max_return_error},
                {"stalled", r.stalled},
                {"rising", r.rising}};
    if (opts.compare_tolerances) {
        res["return_error_default"] = r.return_error_default;
        res["return_error_halved"] = r.return_error_halved;
        res["error_ratio"] = finite_or_null(r.error_ratio);
    }
    write_summary(out, "recurrence", cfg, res);
}

// ---------------------------------------------------------------------------
// typicality: histogram of rejection samples.
// CSV: bin_left,bin_right,count,expected_squared,expected_fourth

void run_typicality(const json& config, const Output& out) {
    Section sec(config, "typicality");
    TrialConfig trial;
    trial.box_length = sec.get("box_length", trial.box_length);
    trial.modes = sec.get("modes", trial.modes);
    trial.seed = sec.get("seed", trial.seed);
    const auto samples = sec.get<std::size_t>("samples", 100000);
    const auto measure = parse_sampling_measure(sec.get<std::string>("measure", "fourth_power"));
    const auto sample_seed = sec.get<std::uint64_t>("sample_seed", trial.seed + 1);
    const auto bins = sec.get<std::size_t>("bins", 100);
    const double confidence = sec.get("confidence", 0.99);
    sec.finish();
    trial.validate();

    const auto state = trial.state();
    const auto r = typicality_demo(state, samples, measure, sample_seed, bins, confidence);
    std::string csv = "bin_left,bin_right,count,expected_squared,expected_fourth\n";
    for (std::size_t i = 0; i < r.counts.size(); ++i)
        csv += num(r.bin_edges[i]) + "," + num(r.bin_edges[i + 1]) + "," + std::to_string(r.counts[i]) + "," +
               num(r.expected_squared[i]) + "," + num(r.expected_fourth[i]) + "\n";
    write_file(out.path(".csv"), csv);

    auto gof = [](const GoodnessOfFit& g) {
        return json{{"chi_square", g.chi_square}, {"dof", g.dof}, {"p_value", g.p_value}, {"accepted", g.accepted}};
    };
    json cfg = {{"box_length", trial.box_length}, {"modes", trial.modes}, {"seed", trial.seed},
                {"samples", samples},             {"measure", to_string(measure)},
                {"sample_seed", sample_seed},     {"bins", bins},       {"confidence", confidence}};
    json res = {{"phases", phases_of(state)},       {"proposals", r.proposals},
                {"proposal_bound", r.proposal_bound}, {"fourth_power_normalizer", r.normalizer},
                {"vs_squared", gof(r.vs_squared)},    {"vs_fourth_power", gof(r.vs_fourth)}};
    write_summary(out, "typicality", cfg, res);
}

// ---------------------------------------------------------------------------
// signal: Delta rho_A for each eps.
// CSV: eps,x_a,rho_initial,rho_final,delta,delta_quench

namespace {

Eigen::MatrixXcd read_coefficients(const json& j) {
    if (!j.is_array() || j.empty() || !j.front().is_array())
        throw ConfigError("signal.coefficients: expected a matrix (array of rows)");
    const auto rows = static_cast<Eigen::Index>(j.size());
    const auto cols = static_cast<Eigen::Index>(j.front().size());
    Eigen::MatrixXcd m(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r) {
        const auto& row = j.at(static_cast<std::size_t>(r));
        if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols)
            throw ConfigError("signal.coefficients: rows must have equal length");
        for (Eigen::Index c = 0; c < cols; ++c) {
            const auto& v = row.at(static_cast<std::size_t>(c));
            // a number, or [re, im]
            if (v.is_number()) {
                m(r, c) = v.get<double>();
            } else if (v.is_array() && v.size() == 2) {
                m(r, c) = Complex(v.at(0).get<double>(), v.at(1).get<double>());
            } else {
                throw ConfigError("signal.coefficients: entries must be numbers or [re, im] pairs");
            }
        }
    }
    return m;
}

json write_coefficients(const Eigen::MatrixXcd& m) {
    json rows = json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        json row = json::array();
        for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back({m(r, c).real(), m(r, c).imag()});
        rows.push_back(row);
    }
    return rows;
}

}  // namespace

void run_signal(const json& config, const Output& out) {
    Section sec(config, "signal");
    const double L = sec.get("box_length", kPi);
    std::optional<EntangledState> state;
    if (sec.has("coefficients")) {
        if (sec.has("c") || sec.has("d")) throw ConfigError("signal: give either coefficients or c and d");
        state.emplace(L, read_coefficients(sec.raw("coefficients")));
    } else {
        const double c = sec.get("c", 0.98);
        const double d = sec.get("d", std::sqrt(1.0 - c * c));
        state.emplace(EntangledState::schmidt_pair(L, c, d));
    }
    const auto quench_kind = parse_quench_kind(sec.get<std::string>("quench", "linear_tilt"));
    const double lambda = sec.get("lambda", 0.01);
    const SuddenQuench quench{quench_kind, lambda};
    const auto eps = sec.get("eps", std::vector<double>{1e-3, 3e-3, 1e-2, 3e-2, 1e-1});
    const auto ens = parse_pair_ensemble(sec.get<std::string>("ensemble", "uniform"));
    const int basis_b = sec.get("basis_b", 24);
    MarginalOptions opts;
    opts.points_a = sec.get("points_a", opts.points_a);
    opts.points_b = sec.get("points_b", opts.points_b);
    opts.max_unreliable_fraction = sec.get("max_unreliable_fraction", opts.max_unreliable_fraction);
    opts.integrator = read_integrator(sec.child("integrator"), opts.integrator);
    sec.finish();
    if (eps.empty()) throw ConfigError("signal.eps must not be empty");

    std::vector<SignalProfile> profiles;
    for (double e : eps) profiles.push_back(delta_rho_A(*state, ens, quench, e, basis_b, opts));
    std::string csv = "eps,x_a,rho_initial,rho_final,delta,delta_quench\n";
    json rows = json::array();
    for (const auto& p : profiles) {
        for (std::size_t i = 0; i < p.x.size(); ++i)
            csv += num(p.eps) + "," + num(p.x[i]) + "," + num(p.rho_initial[i]) + "," + num(p.rho_final[i]) + "," +
                   num(p.delta[i]) + "," + num(p.delta_quench[i]) + "\n";
        const auto evo = evolve_quenched(*state, quench, p.eps, basis_b);
        rows.push_back({{"eps", p.eps},
                        {"max_abs_delta", p.max_abs},
                        {"max_abs_delta_quench", p.max_abs_quench},
                        {"integral", p.integral},
                        {"stalled", p.stalled},
                        {"norm_error", evo.norm_error},
                        {"truncation_difference", evo.truncation_difference}});
    }
    write_file(out.path(".csv"), csv);

    json res = {{"schmidt_rank", state->schmidt_rank()}, {"per_eps", rows}};
    // log-log slopes over the eps whose maxima are nonzero
    auto slope_of = [&](auto pick) -> json {
        std::vector<double> lx, ly;
        for (const auto& p : profiles)
            if (p.eps > 0.0 && pick(p) > 0.0) {
                lx.push_back(std::log(p.eps));
                ly.push_back(std::log(pick(p)));
            }
        if (lx.size() < 2) return nullptr;
        const auto fit = stats::linear_fit(lx, ly);
        return {{"slope", fit.slope}, {"slope_error", fit.slope_error}, {"points", lx.size()}};
    };
    res["scaling"] = slope_of([](const SignalProfile& p) { return p.max_abs; });
    res["quench_scaling"] = slope_of([](const SignalProfile& p) { return p.max_abs_quench; });
    json cfg = {{"box_length", L},
                {"coefficients", write_coefficients(state->coefficients())},
                {"quench", to_string(quench_kind)},
                {"lambda", lambda},
                {"eps", eps},
                {"ensemble", to_string(ens)},
                {"basis_b", basis_b},
                {"points_a", opts.points_a},
                {"points_b", opts.points_b},
                {"max_unreliable_fraction", opts.max_unreliable_fraction},
                {"integrator", echo(opts.integrator)}};
    write_summary(out, "signal", cfg, res);
}

// ---------------------------------------------------------------------------
// cosmo: suppression table. CSV: kt_gev,tau_s,t_exp_s,ratio,suppressed

void run_cosmo(const json& config, const Output& out) {
    using namespace cosmo;
    Section sec(config, "cosmo");
    const double lp = Constants::planck_length_cm().value;
    const double kt_min = sec.get("kt_min", 1e-3);
    const double kt_max = sec.get("kt_max", 1e20);
    const auto points = sec.get<std::size_t>("points", 47);
    const auto kts = sec.get("kt", std::vector<double>{1e-3, 1.0, 1e18});
    const auto dx = sec.get("dx_cm", std::vector<double>{10.0 * lp});
    json stretch_in = sec.get("stretch", json::array({{{"delta0_cm", lp}, {"factor", 1e32}},
                                                      {{"delta0_cm", 1e-5}, {"factor", 1e33}}}));
    sec.finish();

    const auto table = suppression_report({kt_min}, {kt_max}, points);
    std::string csv = "kt_gev,tau_s,t_exp_s,ratio,suppressed\n";
    for (const auto& r : table.rows)
        csv += num(r.kt_gev) + "," + num(r.tau) + "," + num(r.t_exp) + "," + num(r.ratio) + "," +
               (r.suppressed ? "1" : "0") + "\n";
    write_file(out.path(".csv"), csv);

    json at = json::array();
    for (double e : kts) {
        json row = {{"kt_gev", e},
                    {"t_exp_s", expansion_timescale({e}).value},
                    {"tau_thermal_s", relaxation_timescale({e}).value},
                    {"thermal_length_cm", length_from_energy({e}).value}};
        json with_dx = json::array();
        for (double w : dx) {
            const double tau = relaxation_timescale({e}, Centimetres{w}).value;
            with_dx.push_back({{"dx_cm", w},
                               {"dx_planck_lengths", w / lp},
                               {"tau_s", tau},
                               {"ratio", tau / expansion_timescale({e}).value}});
        }
        row["explicit_dx"] = with_dx;
        at.push_back(row);
    }
    json stretched = json::array();
    for (const auto& s : stretch_in) {
        Section item(s, "cosmo.stretch[]");
        const double d0 = item.require<double>("delta0_cm");
        const double factor = item.require<double>("factor");
        item.finish();
        stretched.push_back({{"delta0_cm", d0}, {"factor", factor}, {"length_cm", stretch_lengthscale({d0}, factor).value}});
    }
    json res = {{"crossover_gev", nullable(table.crossover_gev)},
                {"crossover_closed_form_gev", thermal_crossover().gev},
                {"crossover_over_planck_energy", thermal_crossover().gev / Constants::planck_energy().gev},
                {"suppression_length_cm", suppression_length().value},
                {"suppression_length_planck_lengths", suppression_length().value / lp},
                {"at_temperatures", at},
                {"stretch", stretched},
                {"planck_length_consistency", Constants::planck_length_consistency()}};
    json cfg = {{"kt_min", kt_min}, {"kt_max", kt_max}, {"points", points},
                {"kt", kts},        {"dx_cm", dx},      {"stretch", stretch_in}};
    write_summary(out, "cosmo", cfg, res);
}

}  // namespace qrelax::cli
