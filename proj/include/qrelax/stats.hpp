#ifndef QRELAX_STATS_HPP
#define QRELAX_STATS_HPP

#include <span>
#include <vector>

namespace qrelax::stats {

double mean(std::span<const double> xs);

/// Sample standard deviation (n - 1 denominator); 0 for fewer than two values.
double stddev(std::span<const double> xs);

/// Standard error of the mean.
double standard_error(std::span<const double> xs);

struct LinearFit {
    double slope = 0.0;
    double intercept = 0.0;
    double slope_error = 0.0;
    double intercept_error = 0.0;
    std::vector<double> residuals;
};

/// Least-squares line y = intercept + slope x. With `sigma` (per-point standard
/// deviations) the fit is weighted and errors come from the weights; without it the
/// errors come from the residual scatter. Needs at least two distinct x values.
LinearFit linear_fit(std::span<const double> x, std::span<const double> y,
                     std::span<const double> sigma = {});

struct PolyFit {
    std::vector<double> coefficients;  // c0 + c1 x + c2 x^2 + ...
    std::vector<double> errors;        // from residual variance
};

/// Unweighted least-squares polynomial of the given degree.
PolyFit polyfit(std::span<const double> x, std::span<const double> y, int degree);

/// Upper-tail probability of the chi-square distribution with `dof` degrees of freedom.
double chi_square_sf(double statistic, double dof);

}  // namespace qrelax::stats

#endif  // QRELAX_STATS_HPP
