#include <cmath>
#include <random>
#include <stdexcept>

#include "doctest.h"
#include "qrelax/spectral.hpp"

using namespace qrelax;

namespace {

// Composite Simpson on [a, b] with n (even) intervals.
template <class F>
double simpson(F&& f, double a, double b, int n) {
    const double h = (b - a) / n;
    double s = f(a) + f(b);
    for (int i = 1; i < n; ++i) s += (i % 2 ? 4.0 : 2.0) * f(a + i * h);
    return s * h / 3.0;
}

SuperpositionState reference_state(int modes = 10, std::uint64_t seed = 7) {
    std::mt19937_64 rng(seed);
    return SuperpositionState::random_phases(100.0, modes, rng);
}

}  // namespace

TEST_CASE("mode_energy matches closed form and the quoted recurrence period") {
    CHECK(mode_energy(1, 100.0) == doctest::Approx(kPi * kPi / 20000.0).epsilon(1e-14));
    CHECK(mode_energy(1, 100.0) == doctest::Approx(4.9348e-4).epsilon(1e-4));
    // 2 pi / E_1 ~ 12,732, quoted as "about 12,700"
    const double period = 2.0 * kPi / mode_energy(1, 100.0);
    CHECK(period == doctest::Approx(12732.4).epsilon(1e-4));
    CHECK(std::abs(period - 12700.0) / 12700.0 < 0.01);
    CHECK(mode_energy(1, kPi) == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(mode_energy(3, 100.0) == doctest::Approx(9.0 * mode_energy(1, 100.0)).epsilon(1e-14));
    CHECK_THROWS_AS(mode_energy(0, 1.0), std::domain_error);
    CHECK_THROWS_AS(mode_energy(1, 0.0), std::domain_error);
    CHECK_THROWS_AS(mode_energy(1, -3.0), std::domain_error);
}

TEST_CASE("state construction validates amplitudes") {
    CHECK_THROWS_AS(SuperpositionState(0.0, {0.0}), std::domain_error);
    CHECK_THROWS_AS(SuperpositionState(1.0, {}), std::domain_error);
    CHECK_THROWS_AS(SuperpositionState(1.0, {0.0, 0.0}, {0.5, 0.5}), std::domain_error);
    CHECK_THROWS_AS(SuperpositionState(1.0, {0.0, 0.0}, {1.0, -0.0, 0.0}), std::invalid_argument);
    CHECK_NOTHROW(SuperpositionState(1.0, {0.0, 1.0}, {0.6, 0.8}));
    const SuperpositionState s(2.0, {0.1, 0.2, 0.3, 0.4});
    double norm = 0.0;
    for (double a : s.amplitudes()) norm += a * a;
    CHECK(std::abs(norm - 1.0) < 1e-12);
}

TEST_CASE("single eigenstate has zero velocity everywhere") {
    const SuperpositionState s(100.0, {1.234});
    for (double x : {0.5, 13.0, 50.0, 99.0})
        for (double t : {0.0, 7.5, 1000.0}) {
            const auto w = s.evaluate(x, t);
            CHECK(w.velocity_reliable);
            CHECK(std::abs(w.velocity) < 1e-15);
        }
}

TEST_CASE("real wavefunction at t = 0 has zero velocity") {
    const SuperpositionState s(1.0, {0.0, 0.0});
    const auto w = s.evaluate(0.3, 0.0);
    CHECK(w.velocity == 0.0);
    CHECK(w.density == doctest::Approx(std::norm(w.psi)).epsilon(1e-12));
}

TEST_CASE("analytic velocity agrees with finite-difference phase gradient") {
    const SuperpositionState s(1.0, {0.0, kPi / 2.0});
    const double x = 0.3, h = 1e-6;
    const double fd = (std::arg(s.psi(x + h, 0.0) / s.psi(x - h, 0.0))) / (2.0 * h);
    const auto w = s.evaluate(x, 0.0);
    CHECK(std::abs(w.velocity - fd) <= 1e-6 * std::abs(fd));

    // random-phase M = 10 box: everywhere away from near-nodes
    const auto ref = reference_state();
    for (double t : {0.0, 33.0, 120.0}) {
        for (int i = 1; i < 200; ++i) {
            const double xx = i * 0.5;
            const auto p = ref.evaluate(xx, t);
            if (p.density <= 1e-6) continue;
            const double g = std::arg(ref.psi(xx + h, t) / ref.psi(xx - h, t)) / (2.0 * h);
            CHECK(std::abs(p.velocity - g) <= 1e-6 * std::max(std::abs(g), 1e-3));
        }
    }
}

TEST_CASE("normalization, periodicity and walls") {
    const auto s = reference_state();
    const double L = s.box_length();
    const double period = s.recurrence_period();
    for (double t : {0.0, 50.0, 120.0, period}) {
        const double norm = simpson([&](double x) { return s.density(x, t); }, 0.0, L, 20000);
        CHECK(std::abs(norm - 1.0) < 1e-8);
        CHECK(std::abs(s.interval_probability(0.0, L, t) - 1.0) < 1e-12);
        const auto a = s.evaluate(0.0, t);
        const auto b = s.evaluate(L, t);
        CHECK(a.psi == Complex{});
        CHECK(b.psi == Complex{});
        CHECK_FALSE(a.velocity_reliable);
    }
    for (double x : {0.7, 21.0, 64.2, 99.9})
        for (double t : {0.0, 17.0, 300.0}) {
            const Complex d = s.psi(x, t + period) - s.psi(x, t);
            CHECK(std::abs(d) < 1e-9);
        }
    CHECK_THROWS_AS(s.evaluate(-0.1, 0.0), std::domain_error);
    CHECK_THROWS_AS(s.evaluate(L + 0.1, 0.0), std::domain_error);
}

TEST_CASE("interval probability agrees with quadrature") {
    const auto s = reference_state(20, 3);
    for (auto [a, b] : {std::pair{0.0, 1.0}, {3.5, 7.25}, {40.0, 41.0}, {99.0, 100.0}}) {
        const double q = simpson([&](double x) { return s.density(x, 42.0); }, a, b, 2000);
        CHECK(s.interval_probability(a, b, 42.0) == doctest::Approx(q).epsilon(1e-10));
    }
}

TEST_CASE("quantum timescale") {
    const auto s10 = reference_state(10);
    // close to the quoted "~70"
    CHECK(quantum_timescale(s10) == doctest::Approx(62.5).epsilon(2e-3));

    const auto s2 = reference_state(2);
    CHECK(quantum_timescale(s2) ==
          doctest::Approx(2.0 / (mode_energy(2, 100.0) - mode_energy(1, 100.0))).epsilon(1e-12));

    // two-pass weighted variance over {E_n}
    const auto s20 = reference_state(20);
    double mean = 0.0;
    for (int n = 1; n <= 20; ++n) mean += mode_energy(n, 100.0) / 20.0;
    double var = 0.0;
    for (int n = 1; n <= 20; ++n) var += std::pow(mode_energy(n, 100.0) - mean, 2) / 20.0;
    CHECK(quantum_timescale(s20) == doctest::Approx(1.0 / std::sqrt(var)).epsilon(1e-12));

    CHECK_THROWS_AS(quantum_timescale(SuperpositionState(100.0, {0.0})), std::domain_error);
}

TEST_CASE("momentum spread against quadrature") {
    const auto s = reference_state(10);
    const double L = s.box_length();
    // <p^2> = int |psi'|^2, <p> = Im int conj(psi) psi'
    const double p2 = simpson(
        [&](double x) {
            Complex p, d;
            s.psi_and_derivative(x, 0.0, p, d);
            return std::norm(d);
        },
        0.0, L, 20000);
    const double p1 = simpson(
        [&](double x) {
            Complex p, d;
            s.psi_and_derivative(x, 0.0, p, d);
            return (std::conj(p) * d).imag();
        },
        0.0, L, 20000);
    CHECK(momentum_spread(s) == doctest::Approx(std::sqrt(p2 - p1 * p1)).epsilon(1e-8));
    // large-M estimate (pi / sqrt 3) M / L is within a few percent for M = 10
    CHECK(momentum_spread(s) == doctest::Approx(kPi / std::sqrt(3.0) * 10.0 / L).epsilon(0.1));
}
