#include "qrelax/spectral.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

namespace qrelax {

double mode_energy(int n, double box_length) {
    if (n < 1) throw std::domain_error("mode_energy: n must be >= 1, got " + std::to_string(n));
    if (!(box_length > 0.0)) throw std::domain_error("mode_energy: box length must be positive");
    const double k = n * kPi / box_length;
    return 0.5 * k * k;
}

SuperpositionState::SuperpositionState(double box_length, std::vector<double> phases,
                                       std::vector<double> amplitudes)
    : box_length_(box_length), wavenumber_(kPi / box_length), phases_(std::move(phases)),
      amplitudes_(std::move(amplitudes)) {
    if (!(box_length_ > 0.0)) throw std::domain_error("SuperpositionState: L must be positive");
    if (phases_.empty()) throw std::domain_error("SuperpositionState: need at least one mode");
    const auto m = phases_.size();
    if (amplitudes_.empty()) {
        amplitudes_.assign(m, 1.0 / std::sqrt(static_cast<double>(m)));
    } else {
        if (amplitudes_.size() != m)
            throw std::invalid_argument("SuperpositionState: amplitude count != phase count");
        double norm = 0.0;
        for (double a : amplitudes_) {
            if (!(a >= 0.0)) throw std::domain_error("SuperpositionState: amplitudes must be >= 0");
            norm += a * a;
        }
        if (std::abs(norm - 1.0) > 1e-12)
            throw std::domain_error("SuperpositionState: squared amplitudes must sum to 1");
    }
    const double root = std::sqrt(2.0 / box_length_);
    energies_.resize(m);
    coefficients_.resize(m);
    for (std::size_t i = 0; i < m; ++i) {
        energies_[i] = mode_energy(static_cast<int>(i + 1), box_length_);
        coefficients_[i] = std::polar(amplitudes_[i] * root, phases_[i]);
    }
}

SuperpositionState SuperpositionState::random_phases(double box_length, int modes,
                                                     std::mt19937_64& rng) {
    if (modes < 1) throw std::domain_error("random_phases: modes must be >= 1");
    std::uniform_real_distribution<double> angle(0.0, 2.0 * kPi);
    std::vector<double> phases(static_cast<std::size_t>(modes));
    for (auto& p : phases) p = angle(rng);
    return SuperpositionState(box_length, std::move(phases));
}

double SuperpositionState::recurrence_period() const { return 2.0 * kPi / energies_.front(); }

// exp(-i E_n t) for all n. E_n = n^2 E_1, so build u^(n^2) from u = exp(-i E_1 t) with
// odd-power increments; one polar() per call keeps the hot path cheap.
void SuperpositionState::time_factors(double t, std::vector<Complex>& out) const {
    const auto m = energies_.size();
    out.resize(m);
    const Complex u = std::polar(1.0, -energies_.front() * t);
    const Complex u2 = u * u;
    Complex step = u;  // u^(2n-1)
    Complex z = u;
    out[0] = z;
    for (std::size_t i = 1; i < m; ++i) {
        step *= u2;
        z *= step;
        out[i] = z;
    }
}

void SuperpositionState::psi_and_derivative(double x, double t, Complex& psi,
                                            Complex& dpsi) const {
    const std::size_t m = coefficients_.size();
    const Complex base = std::polar(1.0, wavenumber_ * x);  // cos + i sin of pi x / L
    const Complex u = std::polar(1.0, -energies_.front() * t);
    const Complex u2 = u * u;
    Complex step = u;
    Complex z = u;
    Complex trig = base;
    psi = Complex{};
    dpsi = Complex{};
    for (std::size_t i = 0; i < m; ++i) {
        if (i > 0) {
            step *= u2;
            z *= step;
            trig *= base;
        }
        const Complex c = coefficients_[i] * z;
        const double k = static_cast<double>(i + 1) * wavenumber_;
        psi += c * trig.imag();
        dpsi += c * (k * trig.real());
    }
}

Complex SuperpositionState::psi(double x, double t) const {
    Complex p, d;
    psi_and_derivative(x, t, p, d);
    return p;
}

WavePoint SuperpositionState::evaluate(double x, double t) const {
    if (x < 0.0 || x > box_length_)
        throw std::domain_error("evaluate: x outside [0, L]");
    WavePoint w;
    w.x = x;
    w.t = t;
    psi_and_derivative(x, t, w.psi, w.dpsi);
    // sin(n pi) is not exactly zero in floating point; the walls are exact nodes
    if (x == 0.0 || x == box_length_) w.psi = Complex{};
    w.density = std::norm(w.psi);
    if (w.density < node_guard()) {
        w.velocity_reliable = false;
        w.velocity = 0.0;
    } else {
        w.velocity = (w.dpsi * std::conj(w.psi)).imag() / w.density;
    }
    return w;
}

double SuperpositionState::interval_probability(double a, double b, double t) const {
    const std::size_t m = coefficients_.size();
    std::vector<Complex> phase;
    time_factors(t, phase);
    std::vector<Complex> c(m);
    for (std::size_t i = 0; i < m; ++i) c[i] = coefficients_[i] * phase[i];

    // sin(j k x) for j = 0..2m at both ends
    const std::size_t jmax = 2 * m;
    std::vector<double> sa(jmax + 1), sb(jmax + 1);
    const Complex ba = std::polar(1.0, wavenumber_ * a);
    const Complex bb = std::polar(1.0, wavenumber_ * b);
    Complex pa{1.0, 0.0}, pb{1.0, 0.0};
    for (std::size_t j = 0; j <= jmax; ++j) {
        sa[j] = pa.imag();
        sb[j] = pb.imag();
        pa *= ba;
        pb *= bb;
    }
    // integral of cos(j k x) over [a, b]
    auto cos_integral = [&](std::size_t j) {
        if (j == 0) return b - a;
        return (sb[j] - sa[j]) / (static_cast<double>(j) * wavenumber_);
    };
    // sin(n kx) sin(m kx) = (cos((n-m)kx) - cos((n+m)kx)) / 2
    double total = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        total += std::norm(c[i]) * 0.5 * (cos_integral(0) - cos_integral(2 * (i + 1)));
        for (std::size_t j = i + 1; j < m; ++j) {
            const double w = 2.0 * (c[i] * std::conj(c[j])).real();
            total += w * 0.5 * (cos_integral(j - i) - cos_integral(i + j + 2));
        }
    }
    return total;
}

double quantum_timescale(const SuperpositionState& state) {
    if (state.modes() < 2) throw std::domain_error("quantum_timescale: needs at least two modes");
    double mean = 0.0, second = 0.0;
    for (int n = 1; n <= state.modes(); ++n) {
        const double w = state.amplitudes()[static_cast<std::size_t>(n - 1)];
        const double e = state.energy(n);
        mean += w * w * e;
        second += w * w * e * e;
    }
    const double var = second - mean * mean;
    if (!(var > 0.0)) throw std::domain_error("quantum_timescale: degenerate energy spread");
    return 1.0 / std::sqrt(var);
}

double momentum_spread(const SuperpositionState& state) {
    const double L = state.box_length();
    const int m = state.modes();
    std::vector<Complex> c(static_cast<std::size_t>(m));
    for (int n = 0; n < m; ++n)
        c[static_cast<std::size_t>(n)] =
            std::polar(state.amplitudes()[static_cast<std::size_t>(n)],
                       state.phases()[static_cast<std::size_t>(n)]);
    double p2 = 0.0;
    for (int n = 1; n <= m; ++n) {
        const double k = n * kPi / L;
        p2 += std::norm(c[static_cast<std::size_t>(n - 1)]) * k * k;
    }
    // <p> = sum c_n* c_m (-i) k_m (2/L) int sin(k_n x) cos(k_m x) dx
    //     with (2/L) int_0^L sin(n u) cos(m u) = (2/pi) n (1 - (-1)^(n+m)) / (n^2 - m^2)
    Complex p1{};
    for (int n = 1; n <= m; ++n) {
        for (int j = 1; j <= m; ++j) {
            if (n == j || (n + j) % 2 == 0) continue;
            const double overlap = (2.0 / kPi) * 2.0 * n / static_cast<double>(n * n - j * j);
            const double k = j * kPi / L;
            p1 += std::conj(c[static_cast<std::size_t>(n - 1)]) * c[static_cast<std::size_t>(j - 1)] *
                  Complex(0.0, -k * overlap);
        }
    }
    const double var = p2 - p1.real() * p1.real();
    return std::sqrt(std::max(var, 0.0));
}

}  // namespace qrelax
