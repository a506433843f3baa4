#ifndef QRELAX_SIGNALING_HPP
#define QRELAX_SIGNALING_HPP

// Two particles A and B in identical boxes [0, L], entangled over a truncated product
// basis phi_n(x_A) phi_m(x_B). At t = 0 the Hamiltonian at B changes suddenly; the
// marginal at A is built from backtracked 2D trajectories, which is where nonequilibrium
// ensembles pick up a dependence on the operation at B.

#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "qrelax/integrator.hpp"
#include "qrelax/spectral.hpp"

namespace qrelax {

class EntangledState {
public:
    /// coefficients(n, m) multiplies phi_{n+1}(x_A) phi_{m+1}(x_B); the squared moduli must
    /// sum to 1 within 1e-12.
    EntangledState(double box_length, Eigen::MatrixXcd coefficients);

    /// c phi_1 phi_1 + d phi_2 phi_2 with real c, d.
    static EntangledState schmidt_pair(double box_length, double c, double d);

    double box_length() const { return box_length_; }
    const Eigen::MatrixXcd& coefficients() const { return coefficients_; }
    int modes_a() const { return static_cast<int>(coefficients_.rows()); }
    int modes_b() const { return static_cast<int>(coefficients_.cols()); }

    /// Number of singular values above tol. Rank 1 means a product state.
    int schmidt_rank(double tol = 1e-10) const;

    /// Same state on a larger basis (new coefficients zero).
    EntangledState padded(int modes_a, int modes_b) const;

    Complex psi(double xa, double xb) const;
    double density(double xa, double xb) const { return std::norm(psi(xa, xb)); }

private:
    double box_length_;
    Eigen::MatrixXcd coefficients_;
};

/// psi and its two partial derivatives for a coefficient matrix on the box basis.
void psi_and_gradient(const Eigen::MatrixXcd& coefficients, double box_length, double xa, double xb, Complex& psi,
                      Complex& dpsi_a, Complex& dpsi_b);

/// The change of potential at B applied at t = 0.
struct SuddenQuench {
    enum class Kind { none, linear_tilt };
    Kind kind = Kind::none;
    double strength = 0.0;  // lambda in V(x_B) = lambda x_B

    static SuddenQuench none() { return {}; }
    static SuddenQuench linear_tilt(double lambda) { return {Kind::linear_tilt, lambda}; }

    double potential(double xb) const { return kind == Kind::linear_tilt ? strength * xb : 0.0; }
    /// <phi_m | V | phi_n> on the first `modes` box states, in closed form. Throws
    /// std::logic_error if the result is not symmetric within 1e-12.
    Eigen::MatrixXd matrix(int modes, double box_length) const;
    /// Largest |V| on [0, L].
    double bound(double box_length) const { return std::abs(potential(box_length)); }
};

const char* to_string(SuddenQuench::Kind kind);
SuddenQuench::Kind parse_quench_kind(const std::string& name);

class TruncationUnconverged : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Exact evolution on the truncated basis under H_A + H_B + V: H_B + V is diagonalised
/// once, after which the coefficients at any t cost two small matrix products.
class QuenchedEvolution {
public:
    /// `basis_b` >= state.modes_b() modes are kept for particle B.
    QuenchedEvolution(const EntangledState& state, const SuddenQuench& quench, int basis_b);

    double box_length() const { return box_length_; }
    int basis_b() const { return static_cast<int>(eigenvectors_.rows()); }
    const Eigen::MatrixXcd& initial() const { return initial_; }
    Eigen::MatrixXcd coefficients(double t) const;

    double node_guard() const { return 1e-12 * std::pow(2.0 / box_length_, 2); }

    /// Bohmian velocity at (x_A, x_B, t); false within the node guard.
    bool velocity(double t, const Point<2>& x, Point<2>& v) const;

private:
    double box_length_;
    Eigen::MatrixXcd initial_;
    Eigen::VectorXd energies_a_;
    Eigen::MatrixXd eigenvectors_;  // of H_B + V
    Eigen::VectorXd eigenvalues_;
    Eigen::MatrixXcd rotated_;      // initial * eigenvectors
};

struct QuenchReport {
    Eigen::MatrixXcd coefficients;  // on the first basis_b modes of B
    double norm_error = 0.0;        // |1 - sum |c|^2|
    double truncation_difference = 0.0;  // max coefficient change from basis_b to 2 basis_b
};

/// Coefficients after time eps. Throws std::domain_error for eps < 0,
/// TruncationUnconverged when |V| eps is not small against the gap between the last two
/// kept modes or when the doubled basis moves any coefficient by more than `tolerance`.
QuenchReport evolve_quenched(const EntangledState& state, const SuddenQuench& quench, double eps, int basis_b = 24,
                             double tolerance = 1e-6);

/// Initial distribution of the pair.
enum class PairEnsemble { uniform, equilibrium };

const char* to_string(PairEnsemble e);
PairEnsemble parse_pair_ensemble(const std::string& name);

struct MarginalOptions {
    std::size_t points_a = 80;   // midpoint grid in x_A
    std::size_t points_b = 160;  // midpoint rule in x_B
    IntegratorConfig integrator = tight_integrator();
    double max_unreliable_fraction = 0.01;

    static IntegratorConfig tight_integrator() {
        IntegratorConfig c;
        c.rel_tol = 1e-12;
        c.abs_tol = 1e-12;
        c.max_step = 0.01;
        return c;
    }
};

struct Marginal {
    std::vector<double> x;
    std::vector<double> rho;
    std::size_t stalled = 0;
    std::size_t total = 0;
};

/// rho_A(x_A, t) = int rho(x_A, x_B, t) dx_B with rho = |psi(t)|^2 rho0(X0) / |psi0(X0)|^2
/// and X0 the backtracked start of the 2D trajectory. Throws EnsembleFailure when more
/// than max_unreliable_fraction of the backtracks stall.
Marginal marginal_at_A(const QuenchedEvolution& evolution, PairEnsemble ens, double t,
                       const MarginalOptions& opts = {});

struct SignalProfile {
    double eps = 0.0;
    std::vector<double> x;
    std::vector<double> rho_initial;  // rho_A(x_A, 0)
    std::vector<double> rho_final;    // rho_A(x_A, eps) after the quench
    std::vector<double> delta;        // rho_final - rho_initial
    // rho_final minus rho_A(x_A, eps) without the quench: the part due to the operation at B
    std::vector<double> delta_quench;
    double integral = 0.0;             // int delta dx_A
    double max_abs = 0.0;              // max |delta|
    double max_abs_quench = 0.0;
    std::size_t stalled = 0;
};

SignalProfile delta_rho_A(const EntangledState& state, PairEnsemble ens, const SuddenQuench& quench, double eps,
                          int basis_b = 24, const MarginalOptions& opts = {});

struct SignalScaling {
    std::vector<SignalProfile> profiles;
    double slope = 0.0;  // ln max|delta| against ln eps
    double slope_error = 0.0;
    double quench_slope = 0.0;  // same for delta_quench
    double max_abs_integral = 0.0;
};

/// Profiles for every eps and the log-log slopes. Needs at least two positive eps.
SignalScaling signal_scaling(const EntangledState& state, PairEnsemble ens, const SuddenQuench& quench,
                             std::span<const double> eps, int basis_b = 24, const MarginalOptions& opts = {});

}  // namespace qrelax

#endif  // QRELAX_SIGNALING_HPP
