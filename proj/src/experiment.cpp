#include "qrelax/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "qrelax/parallel.hpp"
#include "qrelax/stats.hpp"

namespace qrelax {

const char* to_string(InitialDensity d) {
    return d == InitialDensity::uniform ? "uniform" : "equilibrium";
}

InitialDensity parse_initial_density(const std::string& name) {
    if (name == "uniform") return InitialDensity::uniform;
    if (name == "equilibrium") return InitialDensity::equilibrium;
    throw std::invalid_argument("unknown initial density '" + name + "'");
}

void TrialConfig::validate() const {
    if (!(box_length > 0.0)) throw std::invalid_argument("TrialConfig: box_length must be positive");
    if (modes < 1) throw std::invalid_argument("TrialConfig: modes must be >= 1");
    if (!(cell_width > 0.0) || cell_width > box_length)
        throw std::invalid_argument("TrialConfig: cell_width must be in (0, L]");
    if (!(t_step > 0.0)) throw std::invalid_argument("TrialConfig: t_step must be positive");
    if (t_end < 0.0) throw std::invalid_argument("TrialConfig: t_end must be >= 0");
    if (!(fine_h_tolerance > 0.0)) throw std::invalid_argument("TrialConfig: fine_h_tolerance must be positive");
    if (snapshot_points == 0 && !snapshot_times.empty())
        throw std::invalid_argument("TrialConfig: snapshots need at least one point");
    for (double t : snapshot_times)
        if (t < 0.0) throw std::invalid_argument("TrialConfig: snapshot times must be >= 0");
    integrator.validate();
}

SuperpositionState TrialConfig::state() const {
    std::mt19937_64 rng(seed);
    return SuperpositionState::random_phases(box_length, modes, rng);
}

EnsembleSpec TrialConfig::ensemble(const SuperpositionState& s) const {
    return density == InitialDensity::uniform ? EnsembleSpec::uniform(box_length) : EnsembleSpec::equilibrium(s);
}

std::vector<double> TrialConfig::time_grid() const {
    const auto n = static_cast<std::size_t>(std::floor(t_end / t_step + 1e-9));
    std::vector<double> ts(n + 1);
    for (std::size_t k = 0; k <= n; ++k) ts[k] = static_cast<double>(k) * t_step;
    return ts;
}

TrialResult run_trial(const TrialConfig& cfg) {
    cfg.validate();
    const auto state = cfg.state();
    const auto ens = cfg.ensemble(state);
    CoarseOptions copts;
    copts.reconstruction.integrator = cfg.integrator;
    ReconstructionOptions ropts = copts.reconstruction;

    TrialResult out;
    auto& s = out.series;
    s.seed = cfg.seed;
    s.modes = cfg.modes;
    s.box_length = cfg.box_length;
    s.cell_width = cfg.cell_width;
    s.ensemble = ens.name();

    const auto times = cfg.time_grid();
    for (std::size_t k = 0; k < times.size(); ++k) {
        const double t = times[k];
        const auto grid = coarse_grid(state, ens, t, cfg.cell_width, copts);
        const double h = coarse_h(grid).value;
        s.times.push_back(t);
        s.hbar.push_back(h);
        s.stalled_fraction.push_back(static_cast<double>(grid.unreliable) /
                                     static_cast<double>(grid.cells.size() + 1));
        const bool reached = cfg.stop_at_t5 && k > 0 && h <= 0.95 * s.hbar.front();
        const bool last = k + 1 == times.size() || reached;
        if (cfg.fine_h_stride > 0 && (k % cfg.fine_h_stride == 0 || last))
            s.fine_h.emplace_back(fine_h_adaptive(state, ens, t, cfg.fine_h_tolerance, ropts).value);
        else
            s.fine_h.emplace_back(std::nullopt);
        if (reached) break;
    }

    const auto points = midpoint_grid(cfg.box_length, std::max<std::size_t>(cfg.snapshot_points, 1));
    for (double t : cfg.snapshot_times) out.snapshots.push_back(reconstruct_density(state, ens, t, points, ropts));
    return out;
}

double measure_t5(const HSeries& series, double drop) {
    if (series.hbar.empty()) throw std::invalid_argument("measure_t5: empty series");
    if (series.times.size() != series.hbar.size()) throw std::invalid_argument("measure_t5: size mismatch");
    const double h0 = series.hbar.front();
    if (!(h0 > 0.0)) throw std::domain_error("measure_t5: initial H-bar must be positive");
    const double target = (1.0 - drop) * h0;
    for (std::size_t i = 1; i < series.hbar.size(); ++i) {
        if (series.hbar[i] <= target) {
            const double t0 = series.times[i - 1], t1 = series.times[i];
            const double h_prev = series.hbar[i - 1], h = series.hbar[i];
            return t0 + (t1 - t0) * (h_prev - target) / (h_prev - h);
        }
    }
    throw ThresholdNotReached("measure_t5: H-bar never falls by the requested fraction");
}

namespace {

ScalingPoint measure_point(double abscissa, std::size_t trials, const TrialConfig& cfg) {
    if (trials < 3) throw InsufficientTrials("scaling: need at least 3 trials per point");
    ScalingPoint p;
    p.abscissa = abscissa;
    for (std::size_t k = 0; k < trials; ++k) {
        TrialConfig c = cfg;
        c.seed = cfg.seed + k;
        c.stop_at_t5 = true;
        c.fine_h_stride = 0;
        c.snapshot_times.clear();
        p.seeds.push_back(c.seed);
        try {
            p.t5.push_back(measure_t5(run_trial(c).series));
            p.t5_seeds.push_back(c.seed);
        } catch (const ThresholdNotReached&) {
            ++p.not_reached;
        }
    }
    if (p.t5.size() < 3)
        throw InsufficientTrials("scaling: fewer than 3 trials reached the 5% drop at abscissa " +
                                 std::to_string(abscissa));
    p.mean = stats::mean(p.t5);
    p.standard_error = stats::standard_error(p.t5);
    return p;
}

void fit_log_log(ScalingResult& r, const std::vector<std::size_t>& use) {
    if (use.size() < 2) throw SlopeUndefined("scaling: need at least two distinct abscissae");
    std::vector<double> x, y, sigma;
    bool weighted = true;
    for (std::size_t i : use) {
        const auto& p = r.points[i];
        x.push_back(std::log(p.abscissa));
        y.push_back(std::log(p.mean));
        const double rel = p.standard_error / p.mean;
        if (!(rel > 0.0)) weighted = false;
        sigma.push_back(rel);
    }
    if (std::all_of(x.begin(), x.end(), [&](double v) { return v == x.front(); }))
        throw SlopeUndefined("scaling: abscissae are not distinct");
    const auto fit = weighted ? stats::linear_fit(x, y, sigma) : stats::linear_fit(x, y);
    r.slope = fit.slope;
    r.slope_error = fit.slope_error;
    r.intercept = fit.intercept;
    r.fitted_points = use.size();
    r.residuals.clear();
    for (const auto& p : r.points)
        r.residuals.push_back(std::log(p.mean) - (r.intercept + r.slope * std::log(p.abscissa)));
}

}  // namespace

ScalingResult scaling_in_modes(std::span<const int> modes, std::size_t trials, const TrialConfig& base) {
    if (modes.size() < 2) throw SlopeUndefined("scaling_in_modes: need at least two mode counts");
    if (trials < 3) throw InsufficientTrials("scaling_in_modes: need at least 3 trials per point");
    ScalingResult r;
    std::vector<std::size_t> use;
    for (int m : modes) {
        TrialConfig c = base;
        c.modes = m;
        use.push_back(r.points.size());
        r.points.push_back(measure_point(m, trials, c));
    }
    fit_log_log(r, use);
    return r;
}

CellScalingResult scaling_in_cells(std::span<const double> widths, std::size_t trials, const TrialConfig& base,
                                   double small_cell_limit) {
    if (widths.size() < 2) throw SlopeUndefined("scaling_in_cells: need at least two cell widths");
    if (trials < 3) throw InsufficientTrials("scaling_in_cells: need at least 3 trials per point");
    CellScalingResult out;
    out.small_cell_limit = small_cell_limit;
    auto& r = out.fit;
    std::vector<std::size_t> small;
    for (double w : widths) {
        TrialConfig c = base;
        c.cell_width = w;
        if (w <= small_cell_limit + 1e-12) small.push_back(r.points.size());
        r.points.push_back(measure_point(w, trials, c));
    }
    fit_log_log(r, small);
    double sum = 0.0;
    for (const auto& p : r.points) out.products.push_back(p.mean * p.abscissa);
    for (std::size_t i : small) sum += out.products[i];
    out.product_mean = sum / static_cast<double>(small.size());
    for (std::size_t i : small)
        out.max_relative_spread =
            std::max(out.max_relative_spread, std::abs(out.products[i] / out.product_mean - 1.0));
    for (double p : out.products) out.departure.push_back(p / out.product_mean);
    return out;
}

namespace {

double max_return_error(const SuperpositionState& state, std::size_t n, double period, const IntegratorConfig& cfg,
                        std::size_t& stalled) {
    const double L = state.box_length();
    std::vector<double> err(n, 0.0);
    std::vector<char> bad(n, 0);
    parallel_for(n, [&](std::size_t i) {
        const double x0 = L * (static_cast<double>(i) + 1.0) / (static_cast<double>(n) + 1.0);
        const auto r = propagate(state, x0, 0.0, period, cfg);
        bad[i] = r.status != TrajectoryStatus::completed;
        err[i] = std::abs(r.end[0] - x0);
    });
    stalled = static_cast<std::size_t>(std::count(bad.begin(), bad.end(), 1));
    return *std::max_element(err.begin(), err.end());
}

}  // namespace

RecurrenceReport recurrence_check(const TrialConfig& cfg, const RecurrenceOptions& opts) {
    cfg.validate();
    if (opts.probe_points == 0) throw std::invalid_argument("recurrence_check: need probe points");
    const auto state = cfg.state();
    const auto ens = cfg.ensemble(state);
    CoarseOptions copts;
    copts.reconstruction.integrator = cfg.integrator;

    RecurrenceReport rep;
    rep.period = state.recurrence_period();
    rep.hbar0 = coarse_h(coarse_grid(state, ens, 0.0, cfg.cell_width, copts)).value;

    auto offsets = opts.approach_offsets;
    std::sort(offsets.begin(), offsets.end(), std::greater<>());
    if (offsets.empty() || offsets.back() != 0.0) offsets.push_back(0.0);
    for (double off : offsets) {
        const double t = rep.period - off;
        if (t < 0.0) continue;
        rep.approach_times.push_back(t);
        rep.approach_hbar.push_back(coarse_h(coarse_grid(state, ens, t, cfg.cell_width, copts)).value);
    }
    rep.hbar_period = rep.approach_hbar.back();
    rep.hbar_error = std::abs(rep.hbar_period - rep.hbar0);
    rep.rising = true;
    for (std::size_t i = 0; i + 1 < rep.approach_hbar.size(); ++i)
        if (!(rep.approach_hbar[i] < rep.hbar_period)) rep.rising = false;

    rep.max_return_error = max_return_error(state, opts.probe_points, rep.period, cfg.integrator, rep.stalled);
    if (opts.compare_tolerances) {
        std::size_t unused = 0;
        IntegratorConfig halved = cfg.integrator;
        halved.rel_tol /= 2.0;
        halved.abs_tol /= 2.0;
        rep.return_error_default =
            max_return_error(state, opts.tolerance_probe_points, rep.period, cfg.integrator, unused);
        rep.return_error_halved = max_return_error(state, opts.tolerance_probe_points, rep.period, halved, unused);
        rep.error_ratio = rep.return_error_halved > 0.0 ? rep.return_error_default / rep.return_error_halved
                                                        : std::numeric_limits<double>::infinity();
    }
    return rep;
}

const char* to_string(SamplingMeasure m) { return m == SamplingMeasure::squared ? "squared" : "fourth_power"; }

SamplingMeasure parse_sampling_measure(const std::string& name) {
    if (name == "squared") return SamplingMeasure::squared;
    if (name == "fourth_power") return SamplingMeasure::fourth_power;
    throw std::invalid_argument("unknown sampling measure '" + name + "'");
}

namespace {

using Kronrod = boost::math::quadrature::gauss_kronrod<double, 15>;

double fourth_power_integral(const SuperpositionState& state, double a, double b) {
    const auto g = [&](double x) {
        const double r = state.density(x, 0.0);
        return r * r;
    };
    return Kronrod::integrate(g, a, b, 15, 1e-12);
}

// Chi-square of counts against expected, merging neighbouring bins until each merged
// expectation reaches 5.
GoodnessOfFit chi_square_test(const std::vector<std::size_t>& counts, const std::vector<double>& expected,
                              double confidence) {
    GoodnessOfFit g;
    double obs = 0.0, exp = 0.0;
    std::size_t groups = 0;
    std::vector<std::pair<double, double>> merged;
    for (std::size_t i = 0; i < counts.size(); ++i) {
        obs += static_cast<double>(counts[i]);
        exp += expected[i];
        if (exp >= 5.0) {
            merged.emplace_back(obs, exp);
            obs = exp = 0.0;
        }
    }
    if (exp > 0.0 || obs > 0.0) {
        if (merged.empty())
            merged.emplace_back(obs, exp);
        else {
            merged.back().first += obs;
            merged.back().second += exp;
        }
    }
    for (const auto& [o, e] : merged) {
        g.chi_square += (o - e) * (o - e) / e;
        ++groups;
    }
    g.dof = static_cast<double>(groups) - 1.0;
    if (g.dof < 1.0) throw std::invalid_argument("chi_square_test: too few populated bins");
    g.p_value = stats::chi_square_sf(g.chi_square, g.dof);
    g.accepted = g.p_value >= 1.0 - confidence;
    return g;
}

}  // namespace

double fourth_power_normalizer(const SuperpositionState& state) {
    const auto edges = cell_edges(state.box_length(), state.box_length() / 64.0);
    double s = 0.0;
    for (std::size_t i = 0; i + 1 < edges.size(); ++i) s += fourth_power_integral(state, edges[i], edges[i + 1]);
    return s;
}

TypicalityReport typicality_demo(const SuperpositionState& state, std::size_t samples, SamplingMeasure measure,
                                 std::uint64_t seed, std::size_t bins, double confidence) {
    if (samples < 1000) throw std::invalid_argument("typicality_demo: need at least 1000 samples");
    if (bins < 2) throw std::invalid_argument("typicality_demo: need at least two bins");
    if (!(confidence > 0.0 && confidence < 1.0))
        throw std::invalid_argument("typicality_demo: confidence must be in (0, 1)");

    TypicalityReport rep;
    rep.measure = measure;
    rep.samples = samples;
    const double L = state.box_length();
    rep.normalizer = fourth_power_normalizer(state);
    const auto target = [&](double x) {
        const double r = state.density(x, 0.0);
        return measure == SamplingMeasure::squared ? r : r * r / rep.normalizer;
    };

    // the densities are smooth on the scale L / 20000 for any mode count we use; 10% margin
    double peak = 0.0;
    constexpr int scan = 20000;
    for (int i = 0; i <= scan; ++i) peak = std::max(peak, target(L * i / scan));
    rep.proposal_bound = 1.1 * peak;

    rep.bin_edges.resize(bins + 1);
    for (std::size_t i = 0; i <= bins; ++i) rep.bin_edges[i] = L * static_cast<double>(i) / static_cast<double>(bins);
    rep.counts.assign(bins, 0);

    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> where(0.0, L);
    std::uniform_real_distribution<double> height(0.0, rep.proposal_bound);
    std::size_t accepted = 0;
    while (accepted < samples) {
        const double x = where(rng);
        const double y = height(rng);
        ++rep.proposals;
        const double p = target(x);
        if (p > rep.proposal_bound) throw RejectionBoundViolated("typicality_demo: density exceeds proposal bound");
        if (y < p) {
            auto b = static_cast<std::size_t>(x / L * static_cast<double>(bins));
            ++rep.counts[std::min(b, bins - 1)];
            ++accepted;
        }
    }

    const double n = static_cast<double>(samples);
    for (std::size_t i = 0; i < bins; ++i) {
        const double a = rep.bin_edges[i], b = rep.bin_edges[i + 1];
        rep.expected_squared.push_back(n * state.interval_probability(a, b, 0.0));
        rep.expected_fourth.push_back(n * fourth_power_integral(state, a, b) / rep.normalizer);
    }
    rep.vs_squared = chi_square_test(rep.counts, rep.expected_squared, confidence);
    rep.vs_fourth = chi_square_test(rep.counts, rep.expected_fourth, confidence);
    return rep;
}

std::vector<double> sample_ensemble(const EnsembleSpec& ens, std::size_t n, std::uint64_t seed) {
    const double L = ens.box_length();
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::vector<double> xs(n);
    for (auto& x : xs) {
        const double u = unit(rng);
        double lo = 0.0, hi = L;
        for (int it = 0; it < 60; ++it) {
            const double mid = 0.5 * (lo + hi);
            (ens.cumulative(mid) < u ? lo : hi) = mid;
        }
        x = std::clamp(0.5 * (lo + hi), 1e-12 * L, L * (1.0 - 1e-12));
    }
    std::sort(xs.begin(), xs.end());
    return xs;
}

MonteCarloCheck monte_carlo_cross_check(const SuperpositionState& state, const EnsembleSpec& ens,
                                        std::size_t particles, double t, double cell_width, std::uint64_t seed,
                                        const IntegratorConfig& cfg) {
    ens.check_compatible(state);
    if (particles == 0) throw std::invalid_argument("monte_carlo_cross_check: need particles");

    const auto xs = sample_ensemble(ens, particles, seed);
    const auto moved = evolve_ensemble(state, xs, 0.0, t, cfg);

    MonteCarloCheck out;
    out.stalled = moved.stalled;
    CoarseOptions copts;
    copts.reconstruction.integrator = cfg;
    const auto grid = coarse_grid(state, ens, t, cell_width, copts);
    for (const auto& c : grid.cells) out.edges.push_back(c.left);
    out.edges.push_back(grid.cells.back().right);
    out.counts.assign(grid.cells.size(), 0);
    for (std::size_t i = 0; i < moved.positions.size(); ++i) {
        if (moved.status[i] != TrajectoryStatus::completed) continue;
        const auto it = std::upper_bound(out.edges.begin(), out.edges.end(), moved.positions[i]);
        auto c = static_cast<std::size_t>(std::max<std::ptrdiff_t>(it - out.edges.begin() - 1, 0));
        ++out.counts[std::min(c, out.counts.size() - 1)];
    }
    const double n = static_cast<double>(particles - moved.stalled);
    std::size_t dof = 0;
    for (std::size_t c = 0; c < grid.cells.size(); ++c) {
        const double e = n * grid.cells[c].rho_bar * grid.cells[c].width();
        out.expected.push_back(e);
        if (e <= 0.0) continue;
        const double z = (static_cast<double>(out.counts[c]) - e) / std::sqrt(e);
        out.max_abs_z = std::max(out.max_abs_z, std::abs(z));
        if (std::abs(z) > 3.0) ++out.cells_beyond_3sigma;
        out.chi_square += z * z;
        ++dof;
    }
    out.p_value = dof > 1 ? stats::chi_square_sf(out.chi_square, static_cast<double>(dof - 1)) : 1.0;
    return out;
}

PeakAlignment peak_alignment(const DensityField& field, std::size_t count) {
    const std::size_t n = field.x.size();
    if (n < 3) throw std::invalid_argument("peak_alignment: need at least three points");
    PeakAlignment out;
    out.grid_spacing = field.x[1] - field.x[0];
    std::vector<std::size_t> rho_max, sigma_max;
    for (std::size_t i = 1; i + 1 < n; ++i) {
        if (field.rho[i] > field.rho[i - 1] && field.rho[i] >= field.rho[i + 1]) rho_max.push_back(i);
        if (field.sigma[i] > field.sigma[i - 1] && field.sigma[i] >= field.sigma[i + 1]) sigma_max.push_back(i);
    }
    if (sigma_max.empty()) throw std::invalid_argument("peak_alignment: |psi|^2 has no interior maximum");
    std::stable_sort(rho_max.begin(), rho_max.end(),
                     [&](std::size_t a, std::size_t b) { return field.rho[a] > field.rho[b]; });
    rho_max.resize(std::min(count, rho_max.size()));
    for (std::size_t i : rho_max) {
        double best = std::numeric_limits<double>::infinity();
        for (std::size_t j : sigma_max) best = std::min(best, std::abs(field.x[i] - field.x[j]));
        out.rho_peaks.push_back(field.x[i]);
        out.distances.push_back(best);
    }
    return out;
}

}  // namespace qrelax
