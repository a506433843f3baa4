#include "qrelax/stats.hpp"

#include <Eigen/Dense>
#include <boost/math/special_functions/gamma.hpp>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace qrelax::stats {

double mean(std::span<const double> xs) {
    if (xs.empty()) throw std::invalid_argument("mean: empty sample");
    return std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
}

double stddev(std::span<const double> xs) {
    if (xs.size() < 2) return 0.0;
    const double m = mean(xs);
    double s = 0.0;
    for (double x : xs) s += (x - m) * (x - m);
    return std::sqrt(s / static_cast<double>(xs.size() - 1));
}

double standard_error(std::span<const double> xs) {
    if (xs.empty()) throw std::invalid_argument("standard_error: empty sample");
    return stddev(xs) / std::sqrt(static_cast<double>(xs.size()));
}

LinearFit linear_fit(std::span<const double> x, std::span<const double> y,
                     std::span<const double> sigma) {
    if (x.size() != y.size()) throw std::invalid_argument("linear_fit: size mismatch");
    if (!sigma.empty() && sigma.size() != x.size())
        throw std::invalid_argument("linear_fit: sigma size mismatch");
    const std::size_t n = x.size();
    if (n < 2) throw std::invalid_argument("linear_fit: need at least two points");

    double sw = 0.0, sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double w = sigma.empty() ? 1.0 : 1.0 / (sigma[i] * sigma[i]);
        sw += w;
        sx += w * x[i];
        sy += w * y[i];
        sxx += w * x[i] * x[i];
        sxy += w * x[i] * y[i];
    }
    const double det = sw * sxx - sx * sx;
    if (!(std::abs(det) > 1e-300 * std::max(1.0, sw * sxx)))
        throw std::invalid_argument("linear_fit: x values are not distinct");

    LinearFit fit;
    fit.slope = (sw * sxy - sx * sy) / det;
    fit.intercept = (sxx * sy - sx * sxy) / det;
    fit.residuals.resize(n);
    double ss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        fit.residuals[i] = y[i] - (fit.intercept + fit.slope * x[i]);
        ss += fit.residuals[i] * fit.residuals[i];
    }
    if (sigma.empty()) {
        const double s2 = n > 2 ? ss / static_cast<double>(n - 2) : 0.0;
        fit.slope_error = std::sqrt(s2 * sw / det);
        fit.intercept_error = std::sqrt(s2 * sxx / det);
    } else {
        fit.slope_error = std::sqrt(sw / det);
        fit.intercept_error = std::sqrt(sxx / det);
    }
    return fit;
}

PolyFit polyfit(std::span<const double> x, std::span<const double> y, int degree) {
    if (x.size() != y.size()) throw std::invalid_argument("polyfit: size mismatch");
    const auto n = static_cast<Eigen::Index>(x.size());
    const Eigen::Index p = degree + 1;
    if (degree < 0 || n < p) throw std::invalid_argument("polyfit: not enough points");

    Eigen::MatrixXd a(n, p);
    Eigen::VectorXd b(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        double v = 1.0;
        for (Eigen::Index j = 0; j < p; ++j) {
            a(i, j) = v;
            v *= x[static_cast<std::size_t>(i)];
        }
        b(i) = y[static_cast<std::size_t>(i)];
    }
    const Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(a);
    const Eigen::VectorXd c = qr.solve(b);
    const Eigen::VectorXd r = b - a * c;
    const double s2 = n > p ? r.squaredNorm() / static_cast<double>(n - p) : 0.0;
    const Eigen::MatrixXd cov = s2 * (a.transpose() * a).inverse();

    PolyFit fit;
    for (Eigen::Index j = 0; j < p; ++j) {
        fit.coefficients.push_back(c(j));
        fit.errors.push_back(std::sqrt(std::max(cov(j, j), 0.0)));
    }
    return fit;
}

double chi_square_sf(double statistic, double dof) {
    if (!(dof > 0.0)) throw std::invalid_argument("chi_square_sf: dof must be positive");
    if (statistic <= 0.0) return 1.0;
    return boost::math::gamma_q(dof / 2.0, statistic / 2.0);
}

}  // namespace qrelax::stats
