#ifndef QRELAX_SPECTRAL_HPP
#define QRELAX_SPECTRAL_HPP

#include <complex>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

namespace qrelax {

using Complex = std::complex<double>;

inline constexpr double kPi = 3.14159265358979323846;

/// Energy of the n-th infinite-well eigenstate, E_n = (n pi / L)^2 / 2 in units m = hbar = 1.
double mode_energy(int n, double box_length);

/// Wavefunction sample with its analytic derivative and the guidance velocity.
struct WavePoint {
    double x = 0.0;
    double t = 0.0;
    Complex psi;
    Complex dpsi;
    double density = 0.0;
    double velocity = 0.0;
    // false when density is below the node guard; velocity is then meaningless
    bool velocity_reliable = true;
};

/// Superposition of the first M eigenfunctions of a 1D box [0, L].
///
/// psi(x,t) = sum_n a_n phi_n(x) exp(i(theta_n - E_n t)),  phi_n = sqrt(2/L) sin(n pi x / L).
///
/// Immutable after construction; all evaluation methods are const and thread-safe.
class SuperpositionState {
public:
    /// Amplitudes default to 1/sqrt(M). Explicit amplitudes must be nonnegative and
    /// square-sum to 1 within 1e-12.
    SuperpositionState(double box_length, std::vector<double> phases,
                       std::vector<double> amplitudes = {});

    /// Equal amplitudes, phases uniform on [0, 2pi) drawn from `rng`.
    static SuperpositionState random_phases(double box_length, int modes, std::mt19937_64& rng);

    double box_length() const { return box_length_; }
    int modes() const { return static_cast<int>(phases_.size()); }
    std::span<const double> phases() const { return phases_; }
    std::span<const double> amplitudes() const { return amplitudes_; }
    double energy(int n) const { return energies_[static_cast<std::size_t>(n - 1)]; }

    /// |psi|^2 threshold below which the velocity is flagged unreliable.
    double node_guard() const { return 1e-12 * (2.0 / box_length_); }

    /// 2 pi / E_1. An exact period of psi whenever all E_n / E_1 are integers (always, here).
    double recurrence_period() const;

    WavePoint evaluate(double x, double t) const;

    Complex psi(double x, double t) const;
    double density(double x, double t) const { return std::norm(psi(x, t)); }

    /// Fills psi and d psi/dx. Hot path for the integrators.
    void psi_and_derivative(double x, double t, Complex& psi, Complex& dpsi) const;

    /// Probability in [a, b] at time t, from the closed-form mode-overlap integrals.
    double interval_probability(double a, double b, double t) const;

private:
    void time_factors(double t, std::vector<Complex>& out) const;

    double box_length_;
    double wavenumber_;  // pi / L
    std::vector<double> phases_;
    std::vector<double> amplitudes_;
    std::vector<double> energies_;
    std::vector<Complex> coefficients_;  // a_n exp(i theta_n) sqrt(2/L)
};

/// 1 / Delta E, with Delta E the amplitude-weighted standard deviation of the mode energies.
/// Throws std::domain_error for a single mode or a degenerate spread.
double quantum_timescale(const SuperpositionState& state);

/// Quantum momentum spread sqrt(<p^2> - <p>^2) of psi at t = 0.
double momentum_spread(const SuperpositionState& state);

}  // namespace qrelax

#endif  // QRELAX_SPECTRAL_HPP
