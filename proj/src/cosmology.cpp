#include "qrelax/cosmology.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace qrelax::cosmo {

namespace {

// t_exp = kExpansionPrefactor / (kT in GeV)^2 seconds
constexpr double kExpansionPrefactor = 1e-6;

void require_positive(double v, const char* what) {
    if (!(v > 0.0) || !std::isfinite(v)) throw std::domain_error(std::string(what) + " must be positive and finite");
}

}  // namespace

double Constants::planck_length_consistency() {
    return std::abs(std::sqrt(hbar * newton_g / (c * c * c)) / planck_length - 1.0);
}

Seconds time_from_energy(Energy e) {
    require_positive(e.gev, "energy");
    return {Constants::hbar_gev_s() / e.gev};
}

Centimetres length_from_energy(Energy e) {
    require_positive(e.gev, "energy");
    return {Constants::hbar_c_gev_cm() / e.gev};
}

Seconds expansion_timescale(Energy kt) {
    require_positive(kt.gev, "kT");
    return {kExpansionPrefactor / (kt.gev * kt.gev)};
}

Seconds relaxation_timescale(Energy kt, std::optional<Centimetres> dx) {
    require_positive(kt.gev, "kT");
    const Centimetres thermal = length_from_energy(kt);
    const Centimetres width = dx.value_or(thermal);
    require_positive(width.value, "dx");
    // (hbar / kT) (hbar c / kT) / dx
    return {time_from_energy(kt).value * thermal.value / width.value};
}

SuppressionReport suppression_report(Energy lo, Energy hi, std::size_t points) {
    SuppressionReport out;
    if (points == 0) return out;
    require_positive(lo.gev, "kT range start");
    require_positive(hi.gev, "kT range end");
    const double a = std::log10(lo.gev), b = std::log10(hi.gev);
    for (std::size_t i = 0; i < points; ++i) {
        const double u = points == 1 ? 0.0 : static_cast<double>(i) / static_cast<double>(points - 1);
        const Energy kt{std::pow(10.0, a + (b - a) * u)};
        SuppressionRow r;
        r.kt_gev = kt.gev;
        r.tau = relaxation_timescale(kt).value;
        r.t_exp = expansion_timescale(kt).value;
        r.ratio = r.tau / r.t_exp;
        r.suppressed = r.ratio >= 1.0;
        out.rows.push_back(r);
    }
    for (std::size_t i = 1; i < out.rows.size(); ++i) {
        const auto& p = out.rows[i - 1];
        const auto& q = out.rows[i];
        if (p.suppressed != q.suppressed) {
            const double lp = std::log(p.ratio), lq = std::log(q.ratio);
            const double w = lp / (lp - lq);
            out.crossover_gev = std::exp(std::log(p.kt_gev) + w * (std::log(q.kt_gev) - std::log(p.kt_gev)));
            break;
        }
    }
    return out;
}

Energy thermal_crossover() { return {kExpansionPrefactor / Constants::hbar_gev_s()}; }

Centimetres suppression_length() {
    // tau / t_exp = hbar (hbar c) / (dx * prefactor), whatever kT is
    return {Constants::hbar_gev_s() * Constants::hbar_c_gev_cm() / kExpansionPrefactor};
}

Centimetres stretch_lengthscale(Centimetres delta0, double expansion_factor) {
    require_positive(delta0.value, "delta0");
    require_positive(expansion_factor, "expansion factor");
    return {delta0.value * expansion_factor};
}

}  // namespace qrelax::cosmo
