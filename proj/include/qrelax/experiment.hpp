#ifndef QRELAX_EXPERIMENT_HPP
#define QRELAX_EXPERIMENT_HPP

// Box relaxation experiments: single trials, t5% scaling in the number of modes and in
// the cell width, recurrence, and the typicality sampling demo.

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "qrelax/hfunction.hpp"
#include "qrelax/integrator.hpp"
#include "qrelax/spectral.hpp"

namespace qrelax {

enum class InitialDensity { uniform, equilibrium };

const char* to_string(InitialDensity d);
InitialDensity parse_initial_density(const std::string& name);

struct TrialConfig {
    double box_length = 100.0;
    int modes = 10;
    double cell_width = 1.0;
    std::uint64_t seed = 1;
    double t_end = 300.0;
    double t_step = 5.0;
    // fine-grained H every `fine_h_stride` samples and at the last one; 0 disables it
    std::size_t fine_h_stride = 0;
    double fine_h_tolerance = 1e-6;
    std::size_t snapshot_points = 2000;
    std::vector<double> snapshot_times;
    InitialDensity density = InitialDensity::uniform;
    // stop at the first sample at or below 95% of H-bar(0)
    bool stop_at_t5 = false;
    IntegratorConfig integrator{};

    void validate() const;
    /// Random phases drawn from a generator seeded with `seed`.
    SuperpositionState state() const;
    EnsembleSpec ensemble(const SuperpositionState& state) const;
    /// k * t_step for k = 0, 1, ... up to t_end.
    std::vector<double> time_grid() const;
};

struct TrialResult {
    HSeries series;
    std::vector<DensityField> snapshots;
};

TrialResult run_trial(const TrialConfig& cfg);

/// The series never falls to the requested fraction of its initial value.
class ThresholdNotReached : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// First time at which H-bar falls to (1 - drop) H-bar(0), by linear interpolation between
/// the bracketing samples. Throws std::domain_error when H-bar(0) <= 0 and
/// ThresholdNotReached when the series never gets there.
double measure_t5(const HSeries& series, double drop = 0.05);

class InsufficientTrials : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

class SlopeUndefined : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

struct ScalingPoint {
    double abscissa = 0.0;
    std::vector<std::uint64_t> seeds;
    std::vector<double> t5;    // trials that reached the threshold
    std::vector<std::uint64_t> t5_seeds;  // their seeds, aligned with t5
    std::size_t not_reached = 0;
    double mean = 0.0;
    double standard_error = 0.0;
};

struct ScalingResult {
    std::vector<ScalingPoint> points;
    // ln(mean t5) = intercept + slope ln(abscissa), weighted by the relative standard errors
    double slope = 0.0;
    double slope_error = 0.0;
    double intercept = 0.0;
    std::size_t fitted_points = 0;
    std::vector<double> residuals;  // in ln t5, for every point
};

/// t5% against the number of modes; trial k of every point uses seed base.seed + k.
ScalingResult scaling_in_modes(std::span<const int> modes, std::size_t trials, const TrialConfig& base);

struct CellScalingResult {
    ScalingResult fit;           // log-log fit over widths <= small_cell_limit only
    double small_cell_limit = 0.5;
    std::vector<double> products;  // mean t5 * cell width, every point
    double product_mean = 0.0;     // over widths <= small_cell_limit
    double max_relative_spread = 0.0;
    // products / product_mean: the departure from t5 ~ 1 / width at larger cells
    std::vector<double> departure;
};

CellScalingResult scaling_in_cells(std::span<const double> widths, std::size_t trials, const TrialConfig& base,
                                   double small_cell_limit = 0.5);

struct RecurrenceOptions {
    std::size_t probe_points = 99;
    // H-bar is sampled at period - offset for each offset
    std::vector<double> approach_offsets{500.0, 400.0, 300.0, 200.0, 100.0, 0.0};
    // repeat the trajectory round trip with both tolerances halved
    bool compare_tolerances = true;
    std::size_t tolerance_probe_points = 9;
};

struct RecurrenceReport {
    double period = 0.0;
    double hbar0 = 0.0;
    double hbar_period = 0.0;
    double hbar_error = 0.0;          // |H-bar(period) - H-bar(0)|
    double max_return_error = 0.0;    // max |x(period) - x0| over the probe points
    std::size_t stalled = 0;
    std::vector<double> approach_times;
    std::vector<double> approach_hbar;
    bool rising = false;              // H-bar(period) above every earlier approach sample
    double return_error_default = 0.0;  // tolerance comparison, on the smaller probe set
    double return_error_halved = 0.0;
    double error_ratio = 0.0;
};

RecurrenceReport recurrence_check(const TrialConfig& cfg, const RecurrenceOptions& opts = {});

enum class SamplingMeasure { squared, fourth_power };

const char* to_string(SamplingMeasure m);
SamplingMeasure parse_sampling_measure(const std::string& name);

/// Integral of |psi(x, 0)|^4 over the box.
double fourth_power_normalizer(const SuperpositionState& state);

struct GoodnessOfFit {
    double chi_square = 0.0;
    double dof = 0.0;
    double p_value = 0.0;
    bool accepted = false;
};

struct TypicalityReport {
    SamplingMeasure measure = SamplingMeasure::squared;
    std::size_t samples = 0;
    std::size_t proposals = 0;
    double proposal_bound = 0.0;
    double normalizer = 0.0;  // integral of |psi0|^4
    std::vector<double> bin_edges;
    std::vector<std::size_t> counts;
    std::vector<double> expected_squared;  // expected counts under |psi0|^2
    std::vector<double> expected_fourth;   // under |psi0|^4 / normalizer
    GoodnessOfFit vs_squared;
    GoodnessOfFit vs_fourth;
};

/// Rejection sampling bound was exceeded by a proposal.
class RejectionBoundViolated : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Draws `samples` positions from |psi0|^2 or |psi0|^4 / normalizer by rejection from a
/// uniform proposal and tests the histogram against both densities (chi-square, bins
/// merged until every expected count is at least 5).
TypicalityReport typicality_demo(const SuperpositionState& state, std::size_t samples, SamplingMeasure measure,
                                 std::uint64_t seed, std::size_t bins = 100, double confidence = 0.99);

/// `n` sorted positions drawn from rho0 by inverse-CDF sampling with mt19937_64(seed).
std::vector<double> sample_ensemble(const EnsembleSpec& ens, std::size_t n, std::uint64_t seed);

/// Forward Monte Carlo against backtracked cell averages.
struct MonteCarloCheck {
    std::vector<double> edges;
    std::vector<std::size_t> counts;
    std::vector<double> expected;
    double max_abs_z = 0.0;            // over cells with expected count > 0
    std::size_t cells_beyond_3sigma = 0;
    double chi_square = 0.0;
    double p_value = 0.0;
    std::size_t stalled = 0;
};

MonteCarloCheck monte_carlo_cross_check(const SuperpositionState& state, const EnsembleSpec& ens,
                                        std::size_t particles, double t, double cell_width, std::uint64_t seed,
                                        const IntegratorConfig& cfg = {});

/// Sharp peaks of rho against the smooth maxima of |psi|^2 in a density snapshot: for each
/// of the `count` highest local maxima of rho, the distance to the nearest local maximum of
/// |psi|^2.
struct PeakAlignment {
    std::vector<double> rho_peaks;
    std::vector<double> distances;
    double grid_spacing = 0.0;
};

PeakAlignment peak_alignment(const DensityField& field, std::size_t count);

}  // namespace qrelax

#endif  // QRELAX_EXPERIMENT_HPP
