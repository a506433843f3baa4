#ifndef QRELAX_COSMOLOGY_HPP
#define QRELAX_COSMOLOGY_HPP

// Order-of-magnitude timescales for relaxation in the early universe. Quantities carry
// their unit in the type; energy becomes time only through hbar and length only through
// hbar c.

#include <cstddef>
#include <optional>
#include <vector>

namespace qrelax::cosmo {

struct Energy {
    double gev = 0.0;
};
struct Seconds {
    double value = 0.0;
};
struct Centimetres {
    double value = 0.0;
};

/// CODATA 2018, SI.
struct Constants {
    static constexpr double hbar = 1.054571817e-34;       // J s
    static constexpr double c = 299792458.0;              // m / s
    static constexpr double boltzmann = 1.380649e-23;     // J / K
    static constexpr double newton_g = 6.67430e-11;       // m^3 / (kg s^2)
    static constexpr double joule_per_gev = 1.602176634e-10;
    static constexpr double planck_length = 1.616255e-35;       // m
    static constexpr double planck_time = 5.391247e-44;         // s
    static constexpr double planck_temperature = 1.416784e32;   // K

    /// hbar in GeV s and hbar c in GeV cm.
    static double hbar_gev_s() { return hbar / joule_per_gev; }
    static double hbar_c_gev_cm() { return hbar * c * 100.0 / joule_per_gev; }
    static Centimetres planck_length_cm() { return {planck_length * 100.0}; }
    static Energy planck_energy() { return {boltzmann * planck_temperature / joule_per_gev}; }
    /// |sqrt(hbar G / c^3) / l_P - 1|: consistency of the stored Planck length.
    static double planck_length_consistency();
};

/// hbar / E
Seconds time_from_energy(Energy e);
/// hbar c / E
Centimetres length_from_energy(Energy e);

/// t_exp ~ (1 s) (1 MeV / kT)^2. Throws std::domain_error unless kT > 0.
Seconds expansion_timescale(Energy kt);

/// hbar^2 c / (dx (kT)^2); without dx the thermal wavelength hbar c / kT is used and the
/// result is hbar / kT.
Seconds relaxation_timescale(Energy kt, std::optional<Centimetres> dx = std::nullopt);

struct SuppressionRow {
    double kt_gev = 0.0;
    double tau = 0.0;    // s, thermal default
    double t_exp = 0.0;  // s
    double ratio = 0.0;  // tau / t_exp
    bool suppressed = false;  // tau >= t_exp
};

struct SuppressionReport {
    std::vector<SuppressionRow> rows;
    // kT where tau / t_exp crosses 1, interpolated in log kT between bracketing rows
    std::optional<double> crossover_gev;
};

/// Rows for `points` temperatures spaced evenly in log kT from lo to hi. points == 0 gives
/// an empty table; points == 1 gives the row at lo.
SuppressionReport suppression_report(Energy lo, Energy hi, std::size_t points);

/// kT at which hbar / kT equals the expansion time, in closed form.
Energy thermal_crossover();

/// Coarse-graining length below which tau exceeds t_exp at every temperature (the ratio is
/// temperature independent for a fixed dx).
Centimetres suppression_length();

/// delta0 * (Delta(t) / Delta0).
Centimetres stretch_lengthscale(Centimetres delta0, double expansion_factor);

}  // namespace qrelax::cosmo

#endif  // QRELAX_COSMOLOGY_HPP
