#include "qrelax/signaling.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "qrelax/parallel.hpp"
#include "qrelax/stats.hpp"

namespace qrelax {

namespace {

double box_energy(int n, double L) { return 0.5 * std::pow(n * kPi / L, 2); }

double frobenius_norm_squared(const Eigen::MatrixXcd& c) { return c.cwiseAbs2().sum(); }

}  // namespace

EntangledState::EntangledState(double box_length, Eigen::MatrixXcd coefficients)
    : box_length_(box_length), coefficients_(std::move(coefficients)) {
    if (!(box_length_ > 0.0)) throw std::invalid_argument("EntangledState: box length must be positive");
    if (coefficients_.size() == 0) throw std::invalid_argument("EntangledState: empty coefficient matrix");
    if (std::abs(frobenius_norm_squared(coefficients_) - 1.0) > 1e-12)
        throw std::invalid_argument("EntangledState: coefficients must square-sum to 1");
}

EntangledState EntangledState::schmidt_pair(double box_length, double c, double d) {
    Eigen::MatrixXcd m = Eigen::MatrixXcd::Zero(2, 2);
    m(0, 0) = c;
    m(1, 1) = d;
    return EntangledState(box_length, m);
}

int EntangledState::schmidt_rank(double tol) const {
    Eigen::JacobiSVD<Eigen::MatrixXcd> svd(coefficients_);
    const auto& s = svd.singularValues();
    return static_cast<int>((s.array() > tol).count());
}

EntangledState EntangledState::padded(int na, int nb) const {
    if (na < modes_a() || nb < modes_b()) throw std::invalid_argument("EntangledState::padded: cannot shrink");
    Eigen::MatrixXcd m = Eigen::MatrixXcd::Zero(na, nb);
    m.topLeftCorner(modes_a(), modes_b()) = coefficients_;
    return EntangledState(box_length_, m);
}

void psi_and_gradient(const Eigen::MatrixXcd& c, double L, double xa, double xb, Complex& psi, Complex& dpsi_a,
                      Complex& dpsi_b) {
    const double norm = std::sqrt(2.0 / L);
    const Eigen::Index na = c.rows(), nb = c.cols();
    Eigen::VectorXd sa(na), da(na), sb(nb), db(nb);
    for (Eigen::Index n = 0; n < na; ++n) {
        const double k = static_cast<double>(n + 1) * kPi / L;
        sa[n] = norm * std::sin(k * xa);
        da[n] = norm * k * std::cos(k * xa);
    }
    for (Eigen::Index m = 0; m < nb; ++m) {
        const double k = static_cast<double>(m + 1) * kPi / L;
        sb[m] = norm * std::sin(k * xb);
        db[m] = norm * k * std::cos(k * xb);
    }
    const Eigen::VectorXcd along_b = c * sb.cast<Complex>();
    const Eigen::VectorXcd along_db = c * db.cast<Complex>();
    psi = sa.cast<Complex>().dot(along_b);
    dpsi_a = da.cast<Complex>().dot(along_b);
    dpsi_b = sa.cast<Complex>().dot(along_db);
}

Complex EntangledState::psi(double xa, double xb) const {
    Complex p, a, b;
    psi_and_gradient(coefficients_, box_length_, xa, xb, p, a, b);
    return p;
}

// ---------------------------------------------------------------------------

Eigen::MatrixXd SuddenQuench::matrix(int modes, double L) const {
    Eigen::MatrixXd v = Eigen::MatrixXd::Zero(modes, modes);
    if (kind == Kind::linear_tilt) {
        for (int m = 1; m <= modes; ++m) {
            for (int n = 1; n <= modes; ++n) {
                if (m == n) {
                    v(m - 1, n - 1) = strength * L / 2.0;
                } else if ((m + n) % 2 == 1) {
                    const double dm = m, dn = n;
                    v(m - 1, n - 1) = -8.0 * L * dm * dn * strength / (kPi * kPi * std::pow(dm * dm - dn * dn, 2));
                }
            }
        }
    }
    if ((v - v.transpose()).cwiseAbs().maxCoeff() > 1e-12)
        throw std::logic_error("SuddenQuench: potential matrix is not symmetric");
    return v;
}

const char* to_string(SuddenQuench::Kind kind) {
    return kind == SuddenQuench::Kind::linear_tilt ? "linear_tilt" : "none";
}

SuddenQuench::Kind parse_quench_kind(const std::string& name) {
    if (name == "none") return SuddenQuench::Kind::none;
    if (name == "linear_tilt") return SuddenQuench::Kind::linear_tilt;
    throw std::invalid_argument("unknown quench '" + name + "'");
}

// ---------------------------------------------------------------------------

QuenchedEvolution::QuenchedEvolution(const EntangledState& state, const SuddenQuench& quench, int basis_b)
    : box_length_(state.box_length()) {
    if (basis_b < state.modes_b()) throw std::invalid_argument("QuenchedEvolution: basis smaller than the state");
    initial_ = state.padded(state.modes_a(), basis_b).coefficients();
    energies_a_.resize(state.modes_a());
    for (int n = 0; n < state.modes_a(); ++n) energies_a_[n] = box_energy(n + 1, box_length_);
    Eigen::MatrixXd h = quench.matrix(basis_b, box_length_);
    for (int m = 0; m < basis_b; ++m) h(m, m) += box_energy(m + 1, box_length_);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(h);
    eigenvectors_ = eig.eigenvectors();
    eigenvalues_ = eig.eigenvalues();
    rotated_ = initial_ * eigenvectors_.cast<Complex>();
}

Eigen::MatrixXcd QuenchedEvolution::coefficients(double t) const {
    // C(t) = e^{-i H_A t} C0 Q e^{-i Lambda t} Q^T
    Eigen::MatrixXcd c = rotated_;
    for (Eigen::Index m = 0; m < c.cols(); ++m) c.col(m) *= std::polar(1.0, -eigenvalues_[m] * t);
    for (Eigen::Index n = 0; n < c.rows(); ++n) c.row(n) *= std::polar(1.0, -energies_a_[n] * t);
    return c * eigenvectors_.transpose().cast<Complex>();
}

bool QuenchedEvolution::velocity(double t, const Point<2>& x, Point<2>& v) const {
    Complex psi, da, db;
    psi_and_gradient(coefficients(t), box_length_, x[0], x[1], psi, da, db);
    const double rho = std::norm(psi);
    if (rho < node_guard()) return false;
    v[0] = (da * std::conj(psi)).imag() / rho;
    v[1] = (db * std::conj(psi)).imag() / rho;
    return true;
}

QuenchReport evolve_quenched(const EntangledState& state, const SuddenQuench& quench, double eps, int basis_b,
                             double tolerance) {
    if (eps < 0.0) throw std::domain_error("evolve_quenched: eps must be >= 0");
    if (basis_b < 2) throw std::invalid_argument("evolve_quenched: need at least two modes for B");
    const double L = state.box_length();
    const double gap = box_energy(basis_b, L) - box_energy(basis_b - 1, L);
    if (quench.bound(L) * eps > 0.1 * gap)
        throw TruncationUnconverged("evolve_quenched: |V| eps is not small against the last mode gap");
    QuenchReport out;
    out.coefficients = QuenchedEvolution(state, quench, basis_b).coefficients(eps);
    out.norm_error = std::abs(1.0 - frobenius_norm_squared(out.coefficients));
    const Eigen::MatrixXcd fine = QuenchedEvolution(state, quench, 2 * basis_b).coefficients(eps);
    out.truncation_difference = (fine.leftCols(basis_b) - out.coefficients).cwiseAbs().maxCoeff();
    if (out.truncation_difference > tolerance)
        throw TruncationUnconverged("evolve_quenched: coefficients change by " +
                                    std::to_string(out.truncation_difference) + " when the basis is doubled");
    return out;
}

// ---------------------------------------------------------------------------

const char* to_string(PairEnsemble e) { return e == PairEnsemble::uniform ? "uniform" : "equilibrium"; }

PairEnsemble parse_pair_ensemble(const std::string& name) {
    if (name == "uniform") return PairEnsemble::uniform;
    if (name == "equilibrium") return PairEnsemble::equilibrium;
    throw std::invalid_argument("unknown pair ensemble '" + name + "'");
}

Marginal marginal_at_A(const QuenchedEvolution& evolution, PairEnsemble ens, double t, const MarginalOptions& opts) {
    if (t < 0.0) throw std::domain_error("marginal_at_A: t must be >= 0");
    if (opts.points_a == 0 || opts.points_b == 0) throw std::invalid_argument("marginal_at_A: empty grid");
    const double L = evolution.box_length();
    const std::size_t na = opts.points_a, nb = opts.points_b;
    const double ha = L / static_cast<double>(na), hb = L / static_cast<double>(nb);
    const Eigen::MatrixXcd now = evolution.coefficients(t);
    const Eigen::MatrixXcd& start = evolution.initial();
    const double rho0 = 1.0 / (L * L);

    std::vector<double> cell(na * nb);
    std::vector<char> stalled(na * nb, 0);
    const auto field = [&](double s, const Point<2>& x, Point<2>& v) { return evolution.velocity(s, x, v); };
    parallel_for(na * nb, [&](std::size_t k) {
        const Point<2> x{(static_cast<double>(k / nb) + 0.5) * ha, (static_cast<double>(k % nb) + 0.5) * hb};
        Complex psi, da, db;
        psi_and_gradient(now, L, x[0], x[1], psi, da, db);
        const double sigma = std::norm(psi);
        if (ens == PairEnsemble::equilibrium) {
            cell[k] = sigma;
            return;
        }
        Point<2> x0 = x;
        if (t > 0.0) {
            const auto r = integrate_field<2>(field, x, t, 0.0, 0.0, L, opts.integrator, [](double, const Point<2>&) {});
            if (r.status != TrajectoryStatus::completed) stalled[k] = 1;
            x0 = r.end;
        }
        psi_and_gradient(start, L, x0[0], x0[1], psi, da, db);
        const double sigma0 = std::norm(psi);
        cell[k] = sigma0 > 0.0 ? sigma * rho0 / sigma0 : 0.0;
    });

    Marginal out;
    out.total = na * nb;
    out.x.resize(na);
    out.rho.assign(na, 0.0);
    for (std::size_t i = 0; i < na; ++i) {
        out.x[i] = (static_cast<double>(i) + 0.5) * ha;
        for (std::size_t j = 0; j < nb; ++j) out.rho[i] += cell[i * nb + j] * hb;
    }
    out.stalled = static_cast<std::size_t>(std::count(stalled.begin(), stalled.end(), 1));
    if (static_cast<double>(out.stalled) > opts.max_unreliable_fraction * static_cast<double>(out.total))
        throw EnsembleFailure("marginal_at_A: too many 2D backtracks stalled", out.stalled, out.total);
    return out;
}

SignalProfile delta_rho_A(const EntangledState& state, PairEnsemble ens, const SuddenQuench& quench, double eps,
                          int basis_b, const MarginalOptions& opts) {
    evolve_quenched(state, quench, eps, basis_b);  // truncation check
    const QuenchedEvolution quenched(state, quench, basis_b);
    const QuenchedEvolution free(state, SuddenQuench::none(), basis_b);
    const auto before = marginal_at_A(quenched, ens, 0.0, opts);
    const auto after = marginal_at_A(quenched, ens, eps, opts);
    const auto unquenched = marginal_at_A(free, ens, eps, opts);

    SignalProfile p;
    p.eps = eps;
    p.x = before.x;
    p.rho_initial = before.rho;
    p.rho_final = after.rho;
    p.stalled = after.stalled + unquenched.stalled;
    const double h = state.box_length() / static_cast<double>(p.x.size());
    for (std::size_t i = 0; i < p.x.size(); ++i) {
        p.delta.push_back(after.rho[i] - before.rho[i]);
        p.delta_quench.push_back(after.rho[i] - unquenched.rho[i]);
        p.integral += p.delta.back() * h;
        p.max_abs = std::max(p.max_abs, std::abs(p.delta.back()));
        p.max_abs_quench = std::max(p.max_abs_quench, std::abs(p.delta_quench.back()));
    }
    return p;
}

SignalScaling signal_scaling(const EntangledState& state, PairEnsemble ens, const SuddenQuench& quench,
                             std::span<const double> eps, int basis_b, const MarginalOptions& opts) {
    if (eps.size() < 2) throw std::invalid_argument("signal_scaling: need at least two eps values");
    SignalScaling out;
    std::vector<double> lx, ly, lq;
    for (double e : eps) {
        if (!(e > 0.0)) throw std::invalid_argument("signal_scaling: eps must be positive");
        out.profiles.push_back(delta_rho_A(state, ens, quench, e, basis_b, opts));
        const auto& p = out.profiles.back();
        out.max_abs_integral = std::max(out.max_abs_integral, std::abs(p.integral));
        lx.push_back(std::log(e));
        ly.push_back(std::log(p.max_abs));
        lq.push_back(std::log(p.max_abs_quench));
    }
    const auto fit = stats::linear_fit(lx, ly);
    out.slope = fit.slope;
    out.slope_error = fit.slope_error;
    out.quench_slope = stats::linear_fit(lx, lq).slope;
    return out;
}

}  // namespace qrelax
