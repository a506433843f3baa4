#ifndef QRELAX_HFUNCTION_HPP
#define QRELAX_HFUNCTION_HPP

// Fine-grained and coarse-grained subquantum H-functions of a 1D box ensemble.
//
// The density at time t is reconstructed by backtracking: f = rho / |psi|^2 is constant
// along trajectories, so rho(x, t) = |psi(x, t)|^2 f0(x0(x, t)).

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "qrelax/integrator.hpp"
#include "qrelax/spectral.hpp"

namespace qrelax {

/// Initial particle density rho0 on [0, L].
class EnsembleSpec {
public:
    enum class Kind { uniform, equilibrium, tabulated, modulated };

    /// rho0 = 1 / L.
    static EnsembleSpec uniform(double box_length);
    /// rho0 = |psi(x, 0)|^2; f0 is identically 1.
    static EnsembleSpec equilibrium(const SuperpositionState& state);
    /// Piecewise-linear rho0 through (xs, values). xs must start at 0, end at L and
    /// increase; values must be nonnegative and integrate to 1 within 1e-8.
    static EnsembleSpec tabulated(std::vector<double> xs, std::vector<double> values);
    /// rho0 = |psi0|^2 (1 + a sin(2 pi k x / L)) / Z: a smooth f0 with no microstructure
    /// on scales much shorter than L / k. Needs |a| < 1 and k >= 1.
    static EnsembleSpec modulated(const SuperpositionState& state, double amplitude, int wavenumber = 1);

    Kind kind() const { return kind_; }
    const char* name() const;
    double box_length() const { return box_length_; }
    bool is_equilibrium() const { return kind_ == Kind::equilibrium; }

    double density(double x) const;
    /// Integral of rho0 over [0, x].
    double cumulative(double x) const;
    /// f0 = rho0 / |psi0|^2. Exactly 1 for the equilibrium ensemble and analytic for the
    /// modulated one.
    double ratio(const SuperpositionState& state, double x) const;

    /// Throws std::invalid_argument if the ensemble does not live on the state's box.
    void check_compatible(const SuperpositionState& state) const;

private:
    EnsembleSpec() = default;
    double modulation(double x) const;
    double cumulative_unnormalised(double x) const;

    Kind kind_ = Kind::uniform;
    double box_length_ = 1.0;
    std::optional<SuperpositionState> state_;
    std::vector<double> xs_;
    std::vector<double> values_;
    std::vector<double> cumulative_;
    double amplitude_ = 0.0;
    int wavenumber_ = 1;
    double norm_ = 1.0;
};

/// Pointwise reconstruction of rho at time t.
struct DensityField {
    double time = 0.0;
    std::vector<double> x;
    std::vector<double> rho;
    std::vector<double> sigma;  // |psi|^2
    std::vector<double> ratio;  // f = rho / |psi|^2
    std::vector<bool> reliable;
    std::size_t unreliable = 0;

    double unreliable_fraction() const {
        return x.empty() ? 0.0 : static_cast<double>(unreliable) / static_cast<double>(x.size());
    }
};

struct ReconstructionOptions {
    IntegratorConfig integrator{};
    // reconstruction throws EnsembleFailure above this fraction of stalled backtracks
    double max_unreliable_fraction = 0.01;
};

DensityField reconstruct_density(const SuperpositionState& state, const EnsembleSpec& ens, double t,
                                 std::span<const double> points, const ReconstructionOptions& opts = {});

/// `n` midpoints of a uniform partition of [0, L].
std::vector<double> midpoint_grid(double box_length, std::size_t n);

struct FineH {
    double value = 0.0;
    // result on the 2x refined grid, when requested
    std::optional<double> refined;
    bool resolution_warning = false;
    double unreliable_fraction = 0.0;
    // adaptive rule only: summed error estimate and number of backtracked points
    double error_estimate = 0.0;
    std::size_t evaluations = 0;
};

/// H = int |psi|^2 f ln f dx by the midpoint rule on `points` cells.
FineH fine_h(const SuperpositionState& state, const EnsembleSpec& ens, double t, std::size_t points,
             bool check_refinement = true, const ReconstructionOptions& opts = {});

/// Same integral by adaptive 15-point Gauss-Kronrod on each unit-width interval of the
/// box. rho develops sharp peaks and ln f0 is singular at the walls, so a uniform rule
/// converges slowly; this is the accurate variant. The error estimate is the difference
/// from a pass at 1000x the tolerance, and the resolution warning is set when it exceeds
/// 1e-3. Peaks narrower than the quadrature nodes can be missed by both passes, so very
/// late times in a small box still need an independent check.
FineH fine_h_adaptive(const SuperpositionState& state, const EnsembleSpec& ens, double t,
                      double rel_tol = 1e-8, const ReconstructionOptions& opts = {});

/// How cell averages of rho are formed.
enum class CellAveraging {
    // exact cell mass from the initial CDF at the backtracked cell edges
    edge_flux,
    // uniform midpoint sub-quadrature of the reconstructed rho inside each cell
    subquadrature,
};

struct CoarseCell {
    double left = 0.0;
    double right = 0.0;
    double rho_bar = 0.0;
    double sigma_bar = 0.0;

    double width() const { return right - left; }
};

struct CoarseGrid {
    double time = 0.0;
    double cell_width = 0.0;  // nominal; the last cell absorbs any remainder
    std::vector<CoarseCell> cells;
    std::size_t unreliable = 0;
};

struct CoarseOptions {
    CellAveraging averaging = CellAveraging::edge_flux;
    int subpoints = 16;
    ReconstructionOptions reconstruction{};
};

/// Cell edges aligned to x = 0; a trailing partial cell is merged into its neighbour.
std::vector<double> cell_edges(double box_length, double cell_width);

CoarseGrid coarse_grid(const SuperpositionState& state, const EnsembleSpec& ens, double t,
                       double cell_width, const CoarseOptions& opts = {});

struct CoarseH {
    double value = 0.0;
    // cells with rho_bar > 0 but sigma_bar below 1e-14
    std::vector<std::size_t> floor_cells;
};

/// H-bar = sum_cells rho_bar ln(rho_bar / sigma_bar) width, with 0 ln 0 = 0.
CoarseH coarse_h(const CoarseGrid& grid);

/// Per-cell check of the no-microstructure condition at t = 0: how far rho0 and |psi0|^2
/// depart from their cell averages, and the gap between coarse and fine H at t = 0.
struct MicrostructureReport {
    double max_rho_deviation = 0.0;    // max over cells of max |rho0 - rho0_bar| / rho0_bar
    double max_sigma_deviation = 0.0;  // same for |psi0|^2
    double coarse_h0 = 0.0;
    double fine_h0 = 0.0;
    bool satisfied(double tolerance) const {
        return max_rho_deviation <= tolerance && max_sigma_deviation <= tolerance;
    }
};

MicrostructureReport microstructure_check(const SuperpositionState& state, const EnsembleSpec& ens,
                                          double cell_width, int subpoints = 64,
                                          std::size_t fine_points = 20000);

struct IdentityCheck {
    double coarse_h0 = 0.0;
    double coarse_h = 0.0;
    // int |psi|^2 (f ln(f / f~) + f~ - f) dx
    double integral = 0.0;
    // (H-bar_0 - H-bar(t)) - integral
    double discrepancy = 0.0;
    // smallest sampled f ln(f / f~) + f~ - f; the Gibbs inequality makes it >= 0
    double min_integrand = 0.0;
};

/// Evaluates both sides of the coarse-graining identity at time t. The integral is
/// computed per cell by adaptive Gauss-Kronrod.
IdentityCheck h_identity_check(const SuperpositionState& state, const EnsembleSpec& ens, double t,
                               double cell_width, const ReconstructionOptions& opts = {});

struct CurvatureIntegral {
    double value = 0.0;  // (d^2 H-bar / dt^2) at t = 0
    std::vector<std::size_t> excluded_cells;
};

/// -int (|psi0|^2 / f0) var_cell(v0 * f0') dx. Gradients by central differences at
/// spacing cell_width / 32; `subpoints` per cell for the cell statistics. Cells where f0
/// vanishes are excluded and listed.
CurvatureIntegral h_curvature_at_zero(const SuperpositionState& state, const EnsembleSpec& ens,
                                      double cell_width, int subpoints = 64);

/// Quadratic least-squares fit of H-bar(t) on [0, t_max].
struct SmallTimeFit {
    double h0 = 0.0;
    double slope = 0.0;
    double slope_error = 0.0;
    double curvature = 0.0;  // 2 * quadratic coefficient
    double curvature_error = 0.0;
    std::vector<double> times;
    std::vector<double> values;
};

SmallTimeFit fit_small_time(const SuperpositionState& state, const EnsembleSpec& ens, double cell_width,
                            double t_max = 5.0, int samples = 21, const CoarseOptions& opts = {});

struct TimescaleEstimate {
    double coarse_h0 = 0.0;
    double curvature = 0.0;
    double tau = 0.0;                 // sqrt(-H-bar_0 / curvature)
    double gradient_integral = 0.0;   // I = int (|psi0|^2 / f0) |(v0 f0')'|^2 dx
    double tau_small_cell = 0.0;      // (1 / dx) sqrt(12 H-bar_0 / I)
    double tau_dimensional = 0.0;     // (1 / dx) / dP0^3 with dP0 = (pi / sqrt 3) M / L
};

/// Relaxation timescale estimates from the initial state. Throws std::domain_error when
/// the curvature is not negative (for instance, an equilibrium ensemble).
TimescaleEstimate timescale_tau(const SuperpositionState& state, const EnsembleSpec& ens,
                                double cell_width, int subpoints = 64);

/// Time series of H-bar for one trial.
struct HSeries {
    std::vector<double> times;
    std::vector<double> hbar;
    std::vector<std::optional<double>> fine_h;
    std::vector<double> stalled_fraction;
    std::uint64_t seed = 0;
    int modes = 0;
    double box_length = 0.0;
    double cell_width = 0.0;
    std::string ensemble;

    double initial() const { return hbar.front(); }
};

/// CSV with header `t,hbar,fine_h,stalled_fraction`; an empty fine_h field means it was
/// not evaluated at that time.
std::string to_csv(const HSeries& series);

/// Gibbs inequality term x ln(x / y) + y - x (nonnegative for x, y >= 0).
double gibbs_term(double x, double y);

}  // namespace qrelax

#endif  // QRELAX_HFUNCTION_HPP
