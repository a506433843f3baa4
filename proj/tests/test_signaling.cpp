#include <cmath>
#include <complex>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "doctest.h"
#include "qrelax/signaling.hpp"

using namespace qrelax;

namespace {

const double L = kPi;

EntangledState reference() { return EntangledState::schmidt_pair(L, 0.98, std::sqrt(1.0 - 0.98 * 0.98)); }

MarginalOptions coarse() {
    MarginalOptions o;
    o.points_a = 24;
    o.points_b = 48;
    return o;
}

// Interaction picture of H_B: dc/dt = -i V(t) c with V(t)_{mk} = V_{mk} e^{i (E_m - E_k) t},
// stepped by classical RK4. Independent of the eigendecomposition used by the library.
Eigen::MatrixXcd interaction_picture(const EntangledState& s, const SuddenQuench& q, double eps, int basis,
                                     int steps) {
    const Eigen::MatrixXd v = q.matrix(basis, L);
    std::vector<double> e(basis);
    for (int m = 0; m < basis; ++m) e[m] = 0.5 * std::pow((m + 1) * kPi / L, 2);
    auto vi = [&](double t) {
        Eigen::MatrixXcd out(basis, basis);
        for (int m = 0; m < basis; ++m)
            for (int k = 0; k < basis; ++k) out(m, k) = v(m, k) * std::polar(1.0, (e[m] - e[k]) * t);
        return out;
    };
    const Complex i(0.0, 1.0);
    Eigen::MatrixXcd c = s.padded(s.modes_a(), basis).coefficients().transpose();  // basis x modes_a
    const double h = eps / steps;
    for (int k = 0; k < steps; ++k) {
        const double t = k * h;
        const Eigen::MatrixXcd v0 = vi(t), v1 = vi(t + h / 2), v2 = vi(t + h);
        const Eigen::MatrixXcd k1 = -i * v0 * c;
        const Eigen::MatrixXcd k2 = -i * v1 * (c + h / 2 * k1);
        const Eigen::MatrixXcd k3 = -i * v1 * (c + h / 2 * k2);
        const Eigen::MatrixXcd k4 = -i * v2 * (c + h * k3);
        c += h / 6 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
    Eigen::MatrixXcd out = c.transpose();
    for (int n = 0; n < out.rows(); ++n)
        for (int m = 0; m < basis; ++m)
            out(n, m) *= std::polar(1.0, -(0.5 * std::pow((n + 1) * kPi / L, 2) + e[m]) * eps);
    return out;
}

}  // namespace

TEST_CASE("entangled states") {
    const auto s = reference();
    CHECK(s.schmidt_rank() == 2);
    Eigen::MatrixXcd product(2, 2);
    product << 0.6, 0.0, 0.8, 0.0;  // (0.6 phi_1 + 0.8 phi_2) phi_1
    CHECK(EntangledState(L, product).schmidt_rank() == 1);
    Eigen::MatrixXcd bad = Eigen::MatrixXcd::Identity(2, 2);
    CHECK_THROWS_AS(EntangledState(L, bad), std::invalid_argument);

    const double xa = 0.7, xb = 2.1;
    const double expect = 0.98 * (2.0 / L) * std::sin(xa) * std::sin(xb) +
                          std::sqrt(1.0 - 0.98 * 0.98) * (2.0 / L) * std::sin(2 * xa) * std::sin(2 * xb);
    CHECK(s.psi(xa, xb).real() == doctest::Approx(expect).epsilon(1e-14));
    CHECK(s.padded(3, 5).psi(xa, xb).real() == doctest::Approx(expect).epsilon(1e-14));

    Complex p, da, db;
    psi_and_gradient(s.coefficients(), L, xa, xb, p, da, db);
    const double h = 1e-6;
    CHECK(da.real() == doctest::Approx((s.psi(xa + h, xb) - s.psi(xa - h, xb)).real() / (2 * h)).epsilon(1e-7));
    CHECK(db.real() == doctest::Approx((s.psi(xa, xb + h) - s.psi(xa, xb - h)).real() / (2 * h)).epsilon(1e-7));
}

TEST_CASE("tilt matrix elements against quadrature") {
    const double lambda = 0.3, len = 2.5;
    const auto v = SuddenQuench::linear_tilt(lambda).matrix(6, len);
    for (int m = 1; m <= 6; ++m) {
        for (int n = 1; n <= 6; ++n) {
            auto g = [&](double x) {
                return lambda * x * (2.0 / len) * std::sin(m * kPi * x / len) * std::sin(n * kPi * x / len);
            };
            const double q = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(g, 0.0, len, 10, 1e-14);
            CHECK(v(m - 1, n - 1) == doctest::Approx(q).epsilon(1e-12).scale(1.0));
        }
    }
    CHECK(SuddenQuench::none().matrix(4, len).isZero());
    CHECK(parse_quench_kind("linear_tilt") == SuddenQuench::Kind::linear_tilt);
    CHECK_THROWS_AS(parse_quench_kind("quadratic"), std::invalid_argument);
}

TEST_CASE("quenched evolution") {
    const auto s = reference();
    const Complex c0 = s.coefficients()(0, 0), c1 = s.coefficients()(1, 1);

    SUBCASE("free evolution is a phase per product mode") {
        const auto r = evolve_quenched(s, SuddenQuench::none(), 0.4);
        const double e1 = 0.5, e2 = 2.0;  // box energies for L = pi
        CHECK(std::abs(r.coefficients(0, 0) - c0 * std::polar(1.0, -2 * e1 * 0.4)) < 1e-13);
        CHECK(std::abs(r.coefficients(1, 1) - c1 * std::polar(1.0, -2 * e2 * 0.4)) < 1e-13);
        CHECK(std::abs(r.coefficients(0, 1)) < 1e-14);
    }
    SUBCASE("eps = 0 is the identity") {
        const auto r = evolve_quenched(s, SuddenQuench::linear_tilt(0.5), 0.0);
        CHECK((r.coefficients - s.padded(2, 24).coefficients()).cwiseAbs().maxCoeff() < 1e-13);
    }
    SUBCASE("tilt against an interaction-picture oracle") {
        const auto q = SuddenQuench::linear_tilt(0.01);
        const auto r = evolve_quenched(s, q, 0.1);
        CHECK(r.norm_error < 1e-10);
        CHECK(r.truncation_difference < 1e-6);
        const auto oracle = interaction_picture(s, q, 0.1, 24, 4000);
        CHECK((r.coefficients - oracle).cwiseAbs().maxCoeff() < 1e-8);
    }
    SUBCASE("errors") {
        CHECK_THROWS_AS(evolve_quenched(s, SuddenQuench::none(), -1.0), std::domain_error);
        CHECK_THROWS_AS(evolve_quenched(s, SuddenQuench::linear_tilt(1.0), 1.0, 2), TruncationUnconverged);
    }
}

TEST_CASE("marginal at A") {
    const auto s = reference();
    const QuenchedEvolution evo(s, SuddenQuench::linear_tilt(0.01), 24);
    auto o = coarse();

    // t = 0 with a uniform pair: the marginal is 1 / L
    for (double r : marginal_at_A(evo, PairEnsemble::uniform, 0.0, o).rho) CHECK(r == doctest::Approx(1.0 / L));

    // equilibrium: the reduced density c^2 phi_1^2 + d^2 phi_2^2 is stationary
    const auto eq = marginal_at_A(evo, PairEnsemble::equilibrium, 0.3, o);
    for (std::size_t i = 0; i < eq.x.size(); ++i) {
        const double x = eq.x[i];
        const double expect = (2.0 / L) * (0.98 * 0.98 * std::pow(std::sin(x), 2) +
                                           (1.0 - 0.98 * 0.98) * std::pow(std::sin(2 * x), 2));
        CHECK(eq.rho[i] == doctest::Approx(expect).epsilon(1e-10));
    }

    const auto later = marginal_at_A(evo, PairEnsemble::uniform, 0.05, o);
    double mass = 0.0;
    for (double r : later.rho) mass += r * L / static_cast<double>(o.points_a);
    CHECK(mass == doctest::Approx(1.0).epsilon(1e-3));
    CHECK(later.stalled == 0);
    CHECK(parse_pair_ensemble("equilibrium") == PairEnsemble::equilibrium);
}

TEST_CASE("product states carry no signal") {
    Eigen::MatrixXcd c = Eigen::MatrixXcd::Zero(2, 2);
    // (0.6 phi_1 + 0.8 phi_2)(0.96 phi_1 + 0.28 phi_2); the B factor has no interior node, so
    // the x_B midpoint rule stays accurate
    c(0, 0) = 0.6 * 0.96;
    c(0, 1) = 0.6 * 0.28;
    c(1, 0) = 0.8 * 0.96;
    c(1, 1) = 0.8 * 0.28;
    const EntangledState s(L, c);
    REQUIRE(s.schmidt_rank() == 1);
    const auto p = delta_rho_A(s, PairEnsemble::uniform, SuddenQuench::linear_tilt(0.5), 0.1, 24, coarse());
    CHECK(p.max_abs > 1e-4);  // A still relaxes on its own
    // but does not see the tilt. What remains comes from projecting V onto the truncated
    // basis, which makes the B dynamics slightly non-local, and falls as the basis grows.
    CHECK(p.max_abs_quench < 1e-5);
    const auto wide = delta_rho_A(s, PairEnsemble::uniform, SuddenQuench::linear_tilt(0.5), 0.1, 48, coarse());
    CHECK(wide.max_abs_quench < p.max_abs_quench / 4.0);
}

TEST_CASE("signal properties for the reference state") {
    const auto s = reference();
    const auto tilt = SuddenQuench::linear_tilt(0.01);

    const auto eq = delta_rho_A(s, PairEnsemble::equilibrium, tilt, 0.05, 24, coarse());
    CHECK(eq.max_abs < 1e-12);

    const auto p = delta_rho_A(s, PairEnsemble::uniform, tilt, 0.05, 24, coarse());
    CHECK(std::abs(p.integral) < 1e-8);
    CHECK(p.max_abs > 1e-4);

    // without a quench the difference to the unquenched run vanishes identically, but the
    // nonequilibrium marginal still moves under free evolution
    const auto none = delta_rho_A(s, PairEnsemble::uniform, SuddenQuench::linear_tilt(0.0), 0.05, 24, coarse());
    CHECK(none.max_abs_quench == 0.0);
    CHECK(none.max_abs == doctest::Approx(p.max_abs).epsilon(1e-3));

    const std::vector<double> eps{1e-3, 1e-2};
    const auto sc = signal_scaling(s, PairEnsemble::uniform, tilt, eps, 24, coarse());
    CHECK(sc.slope == doctest::Approx(2.0).epsilon(0.05));
    CHECK_THROWS_AS(signal_scaling(s, PairEnsemble::uniform, tilt, std::vector<double>{0.1}), std::invalid_argument);
}
