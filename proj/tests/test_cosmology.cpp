#include <cmath>
#include <stdexcept>

#include "doctest.h"
#include "qrelax/cosmology.hpp"

using namespace qrelax::cosmo;

TEST_CASE("constants are consistent") {
    CHECK(Constants::planck_length_consistency() < 1e-3);
    CHECK(Constants::hbar_gev_s() == doctest::Approx(6.582119569e-25).epsilon(1e-9));
    CHECK(Constants::hbar_c_gev_cm() == doctest::Approx(1.973269804e-14).epsilon(1e-9));
    // k T_P ~ 1.22e19 GeV
    CHECK(Constants::planck_energy().gev == doctest::Approx(1.2209e19).epsilon(1e-3));
}

TEST_CASE("expansion timescale") {
    CHECK(expansion_timescale({1e-3}).value == doctest::Approx(1.0));
    CHECK(expansion_timescale({1.0}).value == doctest::Approx(1e-6));
    CHECK(expansion_timescale({1e18}).value == doctest::Approx(1e-42));
    CHECK_THROWS_AS(expansion_timescale({0.0}), std::domain_error);
    CHECK_THROWS_AS(expansion_timescale({-1.0}), std::domain_error);
}

TEST_CASE("relaxation timescale") {
    const Energy kt{1e18};
    // thermal default: hbar / kT
    CHECK(relaxation_timescale(kt).value == doctest::Approx(6.582e-43).epsilon(1e-3));
    CHECK(relaxation_timescale(kt, length_from_energy(kt)).value ==
          doctest::Approx(relaxation_timescale(kt).value).epsilon(1e-14));
    const Centimetres dx{1e-30};
    CHECK(relaxation_timescale(kt, Centimetres{2e-30}).value ==
          doctest::Approx(relaxation_timescale(kt, dx).value / 2.0).epsilon(1e-14));
    CHECK_THROWS_AS(relaxation_timescale(kt, Centimetres{0.0}), std::domain_error);

    // both fall with kT, their ratio rises
    double prev_tau = INFINITY, prev_exp = INFINITY, prev_ratio = 0.0;
    for (double e = 1e-3; e < 1e20; e *= 10.0) {
        const double tau = relaxation_timescale({e}).value, te = expansion_timescale({e}).value;
        CHECK(tau < prev_tau);
        CHECK(te < prev_exp);
        CHECK(tau / te > prev_ratio);
        prev_tau = tau;
        prev_exp = te;
        prev_ratio = tau / te;
    }
}

TEST_CASE("suppression crossover") {
    const auto r = suppression_report({1e-3}, {1e20}, 47);
    REQUIRE(r.rows.size() == 47);
    CHECK(r.rows.front().kt_gev == doctest::Approx(1e-3));
    CHECK(r.rows.back().kt_gev == doctest::Approx(1e20));
    CHECK_FALSE(r.rows.front().suppressed);  // 1 MeV: tau << t_exp
    CHECK(r.rows.back().suppressed);
    REQUIRE(r.crossover_gev.has_value());
    CHECK(*r.crossover_gev > 1e17);
    CHECK(*r.crossover_gev < 1e19);
    // the ratio is exactly linear in kT, so log interpolation recovers the closed form
    CHECK(*r.crossover_gev == doctest::Approx(thermal_crossover().gev).epsilon(1e-12));
    CHECK(thermal_crossover().gev == doctest::Approx(1.519e18).epsilon(1e-3));
    // about a tenth of the Planck energy
    CHECK(thermal_crossover().gev / Constants::planck_energy().gev == doctest::Approx(0.124).epsilon(0.01));

    CHECK(suppression_report({1.0}, {10.0}, 0).rows.empty());
    CHECK_FALSE(suppression_report({1.0}, {10.0}, 0).crossover_gev.has_value());
    CHECK(suppression_report({5.0}, {10.0}, 1).rows.size() == 1);
}

TEST_CASE("suppression length") {
    const double lp = Constants::planck_length_cm().value;
    // tau / t_exp does not depend on kT once dx is fixed; it equals one at ~8 Planck lengths
    CHECK(suppression_length().value / lp == doctest::Approx(8.04).epsilon(1e-3));
    const Centimetres ten{10.0 * lp};
    for (double e : {1.0, 1e10, 1e18})
        CHECK(relaxation_timescale({e}, ten).value / expansion_timescale({e}).value == doctest::Approx(0.804).epsilon(1e-3));
}

TEST_CASE("stretched lengthscales") {
    const double lp = Constants::planck_length_cm().value;
    CHECK(stretch_lengthscale({lp}, 1e32).value == doctest::Approx(0.1616).epsilon(1e-3));
    CHECK(stretch_lengthscale({1e-5}, 1e33).value == doctest::Approx(1e28));
    CHECK(stretch_lengthscale({3.0}, 1.0).value == 3.0);
    CHECK_THROWS_AS(stretch_lengthscale({1.0}, 0.0), std::domain_error);
}
