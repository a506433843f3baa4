#include "qrelax/hfunction.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <limits>
#include <stdexcept>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/tools/minima.hpp>

#include "qrelax/parallel.hpp"
#include "qrelax/stats.hpp"

namespace qrelax {

// ---------------------------------------------------------------------------
// EnsembleSpec

EnsembleSpec EnsembleSpec::uniform(double box_length) {
    if (!(box_length > 0.0)) throw std::domain_error("EnsembleSpec::uniform: L must be positive");
    EnsembleSpec e;
    e.kind_ = Kind::uniform;
    e.box_length_ = box_length;
    return e;
}

EnsembleSpec EnsembleSpec::equilibrium(const SuperpositionState& state) {
    EnsembleSpec e;
    e.kind_ = Kind::equilibrium;
    e.box_length_ = state.box_length();
    e.state_ = state;
    return e;
}

EnsembleSpec EnsembleSpec::tabulated(std::vector<double> xs, std::vector<double> values) {
    if (xs.size() != values.size() || xs.size() < 2)
        throw std::invalid_argument("EnsembleSpec::tabulated: need matching xs/values, at least two");
    if (xs.front() != 0.0) throw std::invalid_argument("EnsembleSpec::tabulated: xs must start at 0");
    for (std::size_t i = 1; i < xs.size(); ++i)
        if (!(xs[i] > xs[i - 1]))
            throw std::invalid_argument("EnsembleSpec::tabulated: xs must increase");
    for (double v : values)
        if (!(v >= 0.0)) throw std::domain_error("EnsembleSpec::tabulated: density must be >= 0");
    EnsembleSpec e;
    e.kind_ = Kind::tabulated;
    e.box_length_ = xs.back();
    e.cumulative_.assign(xs.size(), 0.0);
    for (std::size_t i = 1; i < xs.size(); ++i)
        e.cumulative_[i] = e.cumulative_[i - 1] + 0.5 * (values[i] + values[i - 1]) * (xs[i] - xs[i - 1]);
    if (std::abs(e.cumulative_.back() - 1.0) > 1e-8)
        throw std::domain_error("EnsembleSpec::tabulated: density must integrate to 1");
    e.xs_ = std::move(xs);
    e.values_ = std::move(values);
    return e;
}

EnsembleSpec EnsembleSpec::modulated(const SuperpositionState& state, double amplitude, int wavenumber) {
    if (!(std::abs(amplitude) < 1.0)) throw std::domain_error("EnsembleSpec::modulated: need |amplitude| < 1");
    if (wavenumber < 1) throw std::domain_error("EnsembleSpec::modulated: wavenumber must be >= 1");
    EnsembleSpec e;
    e.kind_ = Kind::modulated;
    e.box_length_ = state.box_length();
    e.state_ = state;
    e.amplitude_ = amplitude;
    e.wavenumber_ = wavenumber;
    e.norm_ = 1.0;
    e.norm_ = e.cumulative_unnormalised(e.box_length_);
    return e;
}

double EnsembleSpec::modulation(double x) const {
    return (1.0 + amplitude_ * std::sin(2.0 * kPi * wavenumber_ * x / box_length_)) / norm_;
}

double EnsembleSpec::cumulative_unnormalised(double x) const {
    const auto g = [&](double y) {
        return state_->density(y, 0.0) * std::sin(2.0 * kPi * wavenumber_ * y / box_length_);
    };
    const double wave =
        boost::math::quadrature::gauss_kronrod<double, 31>::integrate(g, 0.0, x, 15, 1e-14);
    return state_->interval_probability(0.0, x, 0.0) + amplitude_ * wave;
}

const char* EnsembleSpec::name() const {
    switch (kind_) {
        case Kind::uniform: return "uniform";
        case Kind::equilibrium: return "equilibrium";
        case Kind::tabulated: return "tabulated";
        case Kind::modulated: return "modulated";
    }
    return "unknown";
}

double EnsembleSpec::density(double x) const {
    if (x < 0.0 || x > box_length_) return 0.0;
    switch (kind_) {
        case Kind::uniform: return 1.0 / box_length_;
        case Kind::equilibrium: return state_->density(x, 0.0);
        case Kind::modulated: return state_->density(x, 0.0) * modulation(x);
        case Kind::tabulated: {
            const auto it = std::upper_bound(xs_.begin(), xs_.end(), x);
            if (it == xs_.end()) return values_.back();
            const auto i = static_cast<std::size_t>(it - xs_.begin()) - 1;
            const double s = (x - xs_[i]) / (xs_[i + 1] - xs_[i]);
            return values_[i] + s * (values_[i + 1] - values_[i]);
        }
    }
    return 0.0;
}

double EnsembleSpec::cumulative(double x) const {
    if (x <= 0.0) return 0.0;
    if (x >= box_length_) return 1.0;
    switch (kind_) {
        case Kind::uniform: return x / box_length_;
        case Kind::equilibrium: return state_->interval_probability(0.0, x, 0.0);
        case Kind::modulated: return cumulative_unnormalised(x) / norm_;
        case Kind::tabulated: {
            const auto it = std::upper_bound(xs_.begin(), xs_.end(), x);
            const auto i = static_cast<std::size_t>(it - xs_.begin()) - 1;
            const double h = x - xs_[i];
            const double slope = (values_[i + 1] - values_[i]) / (xs_[i + 1] - xs_[i]);
            return cumulative_[i] + values_[i] * h + 0.5 * slope * h * h;
        }
    }
    return 0.0;
}

double EnsembleSpec::ratio(const SuperpositionState& state, double x) const {
    if (kind_ == Kind::equilibrium) return 1.0;
    if (kind_ == Kind::modulated) return modulation(x);
    const double rho = density(x);
    const double sigma = state.density(x, 0.0);
    if (rho == 0.0) return 0.0;
    if (sigma == 0.0) return std::numeric_limits<double>::infinity();
    return rho / sigma;
}

void EnsembleSpec::check_compatible(const SuperpositionState& state) const {
    if (std::abs(box_length_ - state.box_length()) > 1e-12 * state.box_length())
        throw std::invalid_argument("EnsembleSpec: box length differs from the state's");
}

// ---------------------------------------------------------------------------
// Reconstruction

std::vector<double> midpoint_grid(double box_length, std::size_t n) {
    if (n == 0) throw std::invalid_argument("midpoint_grid: need at least one point");
    std::vector<double> xs(n);
    const double h = box_length / static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) xs[i] = (static_cast<double>(i) + 0.5) * h;
    return xs;
}

DensityField reconstruct_density(const SuperpositionState& state, const EnsembleSpec& ens, double t,
                                 std::span<const double> points, const ReconstructionOptions& opts) {
    ens.check_compatible(state);
    if (t < 0.0) throw std::domain_error("reconstruct_density: t must be >= 0");
    DensityField out;
    out.time = t;
    const std::size_t n = points.size();
    out.x.assign(points.begin(), points.end());
    out.rho.resize(n);
    out.sigma.resize(n);
    out.ratio.resize(n);
    std::vector<char> ok(n, 1);

    parallel_for(n, [&](std::size_t i) {
        const double x = points[i];
        const double sigma = state.density(x, t);
        out.sigma[i] = sigma;
        if (t == 0.0) {
            out.rho[i] = ens.density(x);
            out.ratio[i] = ens.ratio(state, x);
            return;
        }
        if (ens.is_equilibrium()) {
            out.rho[i] = sigma;
            out.ratio[i] = 1.0;
            return;
        }
        double x0 = x;
        if (x > 0.0 && x < state.box_length()) {
            const auto back = backtrack(state, x, t, opts.integrator);
            x0 = back.position;
            ok[i] = back.status == TrajectoryStatus::completed;
        }
        const double f = ens.ratio(state, x0);
        out.ratio[i] = f;
        out.rho[i] = sigma * f;
    });

    out.reliable.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        out.reliable[i] = ok[i] != 0;
        if (!ok[i]) ++out.unreliable;
    }
    if (out.unreliable_fraction() > opts.max_unreliable_fraction)
        throw EnsembleFailure("reconstruct_density: " + std::to_string(out.unreliable) + " of " +
                                  std::to_string(n) + " backtracks stalled",
                              out.unreliable, n);
    return out;
}

namespace {

double entropy_density(double sigma, double f) {
    if (f == 0.0 || sigma == 0.0) return 0.0;
    return sigma * f * std::log(f);
}

double midpoint_h(const SuperpositionState& state, const EnsembleSpec& ens, double t, std::size_t n,
                  const ReconstructionOptions& opts, double& unreliable) {
    const auto xs = midpoint_grid(state.box_length(), n);
    const auto field = reconstruct_density(state, ens, t, xs, opts);
    unreliable = field.unreliable_fraction();
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += entropy_density(field.sigma[i], field.ratio[i]);
    return s * state.box_length() / static_cast<double>(n);
}

// Pointwise |psi|^2 and f at (x, t), counting evaluations and stalled backtracks.
class PointSampler {
public:
    PointSampler(const SuperpositionState& s, const EnsembleSpec& e, double t, const ReconstructionOptions& o)
        : state_(s), ens_(e), t_(t), opts_(o) {}

    void operator()(double x, double& sigma, double& f) { start_point(x, sigma, f); }

    // Same, also returning the backtracked position at t = 0.
    double start_point(double x, double& sigma, double& f) {
        sigma = state_.density(x, t_);
        ++count_;
        double x0 = x;
        if (t_ > 0.0 && !ens_.is_equilibrium() && x > 0.0 && x < state_.box_length()) {
            const auto back = backtrack(state_, x, t_, opts_.integrator);
            if (back.status != TrajectoryStatus::completed) ++stalled_;
            x0 = back.position;
        }
        f = ens_.is_equilibrium() ? 1.0 : ens_.ratio(state_, x0);
        return x0;
    }

    std::size_t count() const { return count_; }
    std::size_t stalled() const { return stalled_; }

    void check(const char* who) const {
        const double frac = count_ ? static_cast<double>(stalled_) / static_cast<double>(count_) : 0.0;
        if (frac > opts_.max_unreliable_fraction)
            throw EnsembleFailure(std::string(who) + ": too many backtracks stalled", stalled_, count_);
    }

private:
    const SuperpositionState& state_;
    const EnsembleSpec& ens_;
    double t_;
    const ReconstructionOptions& opts_;
    std::atomic<std::size_t> count_{0};
    std::atomic<std::size_t> stalled_{0};
};

constexpr unsigned kQuadratureDepth = 12;

// Interior local minima of |psi(x, t)|^2, located on a scan of ~50 points per half
// wavelength of the highest mode and refined with Brent's method.
std::vector<double> density_minima(const SuperpositionState& s, double t) {
    const double L = s.box_length();
    const auto n = static_cast<std::size_t>(50 * s.modes() + 2);
    const double h = L / static_cast<double>(n);
    std::vector<double> out;
    double prev = s.density(0.0, t), here = s.density(h, t);
    for (std::size_t i = 1; i < n; ++i) {
        const double next = s.density(static_cast<double>(i + 1) * h, t);
        if (here < prev && here <= next) {
            const auto r = boost::math::tools::brent_find_minima(
                [&](double x) { return s.density(x, t); }, static_cast<double>(i - 1) * h,
                static_cast<double>(i + 1) * h, std::numeric_limits<double>::digits / 2);
            out.push_back(r.first);
        }
        prev = here;
        here = next;
    }
    return out;
}

using Kronrod = boost::math::quadrature::gauss_kronrod<double, 15>;

// Integrals of rho a(f) + sigma b over the box, where a depends on the cell. The wall
// layers [0, d] and [L - d, L] are done in initial coordinates: trajectories cannot cross
// or leave, so rho dx = rho0 dx0 and f = f0 there. That avoids both the logarithmic
// singularity of ln f0 at a wall and backtracking through the node guard next to it.
class BoxIntegrator {
public:
    BoxIntegrator(const SuperpositionState& s, const EnsembleSpec& e, double t, const ReconstructionOptions& o,
                  double rel_tol)
        : state_(s), ens_(e), t_(t), tol_(rel_tol), layer_(1e-5 * s.box_length()), sample_(s, e, t, o) {
        // rho and f vary fastest next to near-nodes of psi, now and (carried along by the
        // flow) at t = 0. A narrow spike strictly inside a Kronrod panel can go unseen by
        // both rules, so panels are split there.
        breaks_ = density_minima(s, t);
        if (t > 0.0 && !e.is_equilibrium()) {
            for (double x0 : density_minima(s, 0.0)) {
                const auto r = propagate(s, x0, 0.0, t, o.integrator);
                if (r.status == TrajectoryStatus::completed) breaks_.push_back(r.end[0]);
            }
        }
        std::sort(breaks_.begin(), breaks_.end());
    }

    // a: f -> weight per unit rho; b: weight per unit sigma
    template <class A>
    double cell(double lo, double hi, A a, double b, double* error = nullptr) {
        const double L = state_.box_length();
        double total = 0.0, err = 0.0;
        const double x0 = std::max(lo, layer_), x1 = std::min(hi, L - layer_);
        if (x1 > x0) {
            auto g = [&](double x) {
                double sigma = 0.0, f = 0.0;
                sample_(x, sigma, f);
                return sigma == 0.0 ? 0.0 : sigma * (f == 0.0 ? 0.0 : f * a(f)) + sigma * b;
            };
            double a = x0;
            auto it = std::upper_bound(breaks_.begin(), breaks_.end(), x0);
            for (;; ++it) {
                const double b = (it != breaks_.end() && *it < x1) ? *it : x1;
                double e = 0.0;
                total += Kronrod::integrate(g, a, b, kQuadratureDepth, tol_, &e);
                err += e;
                if (b == x1) break;
                a = b;
            }
        }
        if (lo < layer_) total += wall_layer(true, a, b);
        if (hi > L - layer_) total += wall_layer(false, a, b);
        if (error) *error = err;
        return total;
    }

    PointSampler& sampler() { return sample_; }

private:
    template <class A>
    double wall_layer(bool left, A a, double b) {
        const double L = state_.box_length();
        const double edge = left ? layer_ : L - layer_;
        double start = edge;
        if (t_ > 0.0) {
            double sigma = 0.0, f = 0.0;
            start = sample_.start_point(edge, sigma, f);
        }
        const double width = left ? start : L - start;
        // x0 = wall +- width u^2 removes the logarithmic singularity of ln f0
        auto g = [&](double u) {
            const double y = left ? width * u * u : L - width * u * u;
            const double rho0 = ens_.density(y);
            if (rho0 == 0.0) return 0.0;
            return 2.0 * width * u * rho0 * a(ens_.ratio(state_, y));
        };
        double mass = Kronrod::integrate(g, 0.0, 1.0, kQuadratureDepth, tol_);
        if (b != 0.0)
            mass += b * (left ? state_.interval_probability(0.0, layer_, t_)
                              : state_.interval_probability(L - layer_, L, t_));
        return mass;
    }

    const SuperpositionState& state_;
    const EnsembleSpec& ens_;
    double t_;
    double tol_;
    double layer_;
    PointSampler sample_;
    std::vector<double> breaks_;
};

}  // namespace

FineH fine_h(const SuperpositionState& state, const EnsembleSpec& ens, double t, std::size_t points,
             bool check_refinement, const ReconstructionOptions& opts) {
    FineH out;
    if (ens.is_equilibrium()) return out;
    out.value = midpoint_h(state, ens, t, points, opts, out.unreliable_fraction);
    if (check_refinement) {
        double unused = 0.0;
        out.refined = midpoint_h(state, ens, t, 2 * points, opts, unused);
        out.resolution_warning = std::abs(*out.refined - out.value) > 1e-3;
    }
    return out;
}

FineH fine_h_adaptive(const SuperpositionState& state, const EnsembleSpec& ens, double t, double rel_tol,
                      const ReconstructionOptions& opts) {
    ens.check_compatible(state);
    if (t < 0.0) throw std::domain_error("fine_h_adaptive: t must be >= 0");
    FineH out;
    if (ens.is_equilibrium()) return out;
    const auto edges = cell_edges(state.box_length(), 1.0);
    const std::size_t n = edges.size() - 1;
    BoxIntegrator box(state, ens, t, opts, rel_tol);
    // Boost's own estimate is not rescaled to subinterval width, so the error is taken from
    // a second pass at a looser tolerance instead.
    BoxIntegrator loose(state, ens, t, opts, std::min(1e3 * rel_tol, 1e-3));
    std::vector<double> part(n), err(n);
    const auto log_f = [](double f) { return std::log(f); };
    parallel_for(n, [&](std::size_t i) {
        part[i] = box.cell(edges[i], edges[i + 1], log_f, 0.0);
        err[i] = std::abs(part[i] - loose.cell(edges[i], edges[i + 1], log_f, 0.0));
    });
    for (std::size_t i = 0; i < n; ++i) {
        out.value += part[i];
        out.error_estimate += err[i];
    }
    loose.sampler().check("fine_h_adaptive");
    auto& sample = box.sampler();
    sample.check("fine_h_adaptive");
    out.evaluations = sample.count();
    out.unreliable_fraction = static_cast<double>(sample.stalled()) / static_cast<double>(sample.count());
    out.resolution_warning = out.error_estimate > 1e-3;
    return out;
}

// ---------------------------------------------------------------------------
// Coarse graining

std::vector<double> cell_edges(double box_length, double cell_width) {
    if (!(cell_width > 0.0) || !(box_length > 0.0))
        throw std::domain_error("cell_edges: widths must be positive");
    const double ratio = box_length / cell_width;
    auto whole = static_cast<std::size_t>(std::floor(ratio + 1e-9));
    if (whole == 0) whole = 1;
    std::vector<double> edges(whole + 1);
    for (std::size_t i = 0; i <= whole; ++i) edges[i] = static_cast<double>(i) * cell_width;
    edges.back() = box_length;  // merges any partial remainder into the last cell
    return edges;
}

CoarseGrid coarse_grid(const SuperpositionState& state, const EnsembleSpec& ens, double t,
                       double cell_width, const CoarseOptions& opts) {
    ens.check_compatible(state);
    if (t < 0.0) throw std::domain_error("coarse_grid: t must be >= 0");
    const auto edges = cell_edges(state.box_length(), cell_width);
    const std::size_t ncell = edges.size() - 1;
    CoarseGrid grid;
    grid.time = t;
    grid.cell_width = cell_width;
    grid.cells.resize(ncell);
    for (std::size_t c = 0; c < ncell; ++c) {
        grid.cells[c].left = edges[c];
        grid.cells[c].right = edges[c + 1];
    }

    if (opts.averaging == CellAveraging::edge_flux) {
        std::vector<double> mass(edges.size());
        std::vector<char> ok(edges.size(), 1);
        mass.front() = 0.0;
        mass.back() = 1.0;
        parallel_for(edges.size() - 2, [&](std::size_t k) {
            const std::size_t i = k + 1;
            double x0 = edges[i];
            if (t > 0.0) {
                const auto back = backtrack(state, edges[i], t, opts.reconstruction.integrator);
                x0 = back.position;
                ok[i] = back.status == TrajectoryStatus::completed;
            }
            mass[i] = ens.cumulative(x0);
        });
        for (char v : ok)
            if (!v) ++grid.unreliable;
        const double frac = static_cast<double>(grid.unreliable) / static_cast<double>(edges.size());
        if (frac > opts.reconstruction.max_unreliable_fraction)
            throw EnsembleFailure("coarse_grid: too many cell edges stalled", grid.unreliable, edges.size());
        for (std::size_t c = 0; c < ncell; ++c) {
            auto& cell = grid.cells[c];
            // trajectories cannot cross, so the mass between two edges is conserved
            cell.rho_bar = std::max(mass[c + 1] - mass[c], 0.0) / cell.width();
            cell.sigma_bar = state.interval_probability(cell.left, cell.right, t) / cell.width();
        }
    } else {
        if (opts.subpoints < 1) throw std::invalid_argument("coarse_grid: subpoints must be >= 1");
        const auto sub = static_cast<std::size_t>(opts.subpoints);
        std::vector<double> xs;
        xs.reserve(ncell * sub);
        for (const auto& cell : grid.cells)
            for (std::size_t j = 0; j < sub; ++j)
                xs.push_back(cell.left + (static_cast<double>(j) + 0.5) * cell.width() / static_cast<double>(sub));
        const auto field = reconstruct_density(state, ens, t, xs, opts.reconstruction);
        grid.unreliable = field.unreliable;
        for (std::size_t c = 0; c < ncell; ++c) {
            double r = 0.0, s = 0.0;
            for (std::size_t j = 0; j < sub; ++j) {
                r += field.rho[c * sub + j];
                s += field.sigma[c * sub + j];
            }
            grid.cells[c].rho_bar = r / static_cast<double>(sub);
            grid.cells[c].sigma_bar = s / static_cast<double>(sub);
        }
    }
    return grid;
}

CoarseH coarse_h(const CoarseGrid& grid) {
    CoarseH out;
    for (std::size_t c = 0; c < grid.cells.size(); ++c) {
        const auto& cell = grid.cells[c];
        if (cell.rho_bar < 0.0 || cell.sigma_bar < 0.0)
            throw std::domain_error("coarse_h: negative cell average");
        if (cell.rho_bar == 0.0) continue;
        if (cell.sigma_bar < 1e-14) out.floor_cells.push_back(c);
        out.value += cell.rho_bar * std::log(cell.rho_bar / cell.sigma_bar) * cell.width();
    }
    return out;
}

double gibbs_term(double x, double y) {
    if (x == 0.0) return y;
    if (y == 0.0) return std::numeric_limits<double>::infinity();
    return x * std::log(x / y) + y - x;
}

MicrostructureReport microstructure_check(const SuperpositionState& state, const EnsembleSpec& ens,
                                          double cell_width, int subpoints, std::size_t fine_points) {
    MicrostructureReport rep;
    const auto edges = cell_edges(state.box_length(), cell_width);
    for (std::size_t c = 0; c + 1 < edges.size(); ++c) {
        const double a = edges[c], b = edges[c + 1], w = b - a;
        const double rho_bar = (ens.cumulative(b) - ens.cumulative(a)) / w;
        const double sigma_bar = state.interval_probability(a, b, 0.0) / w;
        for (int j = 0; j < subpoints; ++j) {
            const double x = a + (j + 0.5) * w / subpoints;
            if (rho_bar > 0.0)
                rep.max_rho_deviation = std::max(rep.max_rho_deviation, std::abs(ens.density(x) - rho_bar) / rho_bar);
            if (sigma_bar > 0.0)
                rep.max_sigma_deviation =
                    std::max(rep.max_sigma_deviation, std::abs(state.density(x, 0.0) - sigma_bar) / sigma_bar);
        }
    }
    rep.coarse_h0 = coarse_h(coarse_grid(state, ens, 0.0, cell_width)).value;
    rep.fine_h0 = fine_h(state, ens, 0.0, fine_points, false).value;
    return rep;
}

IdentityCheck h_identity_check(const SuperpositionState& state, const EnsembleSpec& ens, double t,
                               double cell_width, const ReconstructionOptions& opts) {
    IdentityCheck out;
    CoarseOptions copts;
    copts.reconstruction = opts;
    const auto grid0 = coarse_grid(state, ens, 0.0, cell_width, copts);
    const auto grid = coarse_grid(state, ens, t, cell_width, copts);
    out.coarse_h0 = coarse_h(grid0).value;
    out.coarse_h = coarse_h(grid).value;

    const std::size_t ncell = grid.cells.size();
    BoxIntegrator box(state, ens, t, opts, 1e-8);
    std::vector<double> part(ncell);
    std::vector<double> cell_min(ncell, std::numeric_limits<double>::infinity());
    parallel_for(ncell, [&](std::size_t c) {
        const auto& cell = grid.cells[c];
        const double ftilde = cell.sigma_bar > 0.0 ? cell.rho_bar / cell.sigma_bar : 0.0;
        // sigma (f ln(f / f~) + f~ - f) = rho (ln(f / f~) - 1) + sigma f~
        const auto weight = [&](double f) {
            const double g = gibbs_term(f, ftilde);
            cell_min[c] = std::min(cell_min[c], g);
            return ftilde > 0.0 ? std::log(f / ftilde) - 1.0 : std::numeric_limits<double>::infinity();
        };
        part[c] = box.cell(cell.left, cell.right, weight, ftilde);
    });
    auto& sample = box.sampler();
    sample.check("h_identity_check");
    for (std::size_t c = 0; c < ncell; ++c) out.integral += part[c];
    out.min_integrand = *std::min_element(cell_min.begin(), cell_min.end());
    out.discrepancy = (out.coarse_h0 - out.coarse_h) - out.integral;
    return out;
}

// ---------------------------------------------------------------------------
// Curvature and timescales

namespace {

// Central-difference spacing, shrunk near the walls so both stencil points stay inside.
double stencil(double x, double spacing, double box_length) {
    return std::min({spacing, 0.5 * x, 0.5 * (box_length - x)});
}

double ratio_gradient(const SuperpositionState& s, const EnsembleSpec& e, double x, double spacing) {
    const double d = stencil(x, spacing, s.box_length());
    return (e.ratio(s, x + d) - e.ratio(s, x - d)) / (2.0 * d);
}

// v0 * f0' at t = 0
double drift_term(const SuperpositionState& s, const EnsembleSpec& e, double x, double spacing) {
    const auto w = s.evaluate(x, 0.0);
    if (!w.velocity_reliable) return 0.0;
    return w.velocity * ratio_gradient(s, e, x, spacing);
}

}  // namespace

CurvatureIntegral h_curvature_at_zero(const SuperpositionState& state, const EnsembleSpec& ens,
                                      double cell_width, int subpoints) {
    ens.check_compatible(state);
    CurvatureIntegral out;
    if (ens.is_equilibrium()) return out;
    const double spacing = cell_width / 32.0;
    const auto edges = cell_edges(state.box_length(), cell_width);
    for (std::size_t c = 0; c + 1 < edges.size(); ++c) {
        const double a = edges[c], w = edges[c + 1] - a;
        const double dx = w / subpoints;
        double g1 = 0.0, g2 = 0.0, weight = 0.0;
        bool excluded = false;
        for (int j = 0; j < subpoints; ++j) {
            const double x = a + (j + 0.5) * dx;
            const double f = ens.ratio(state, x);
            if (!(f > 0.0)) {
                excluded = true;
                break;
            }
            const double g = drift_term(state, ens, x, spacing);
            g1 += g;
            g2 += g * g;
            weight += state.density(x, 0.0) / f * dx;
        }
        if (excluded) {
            out.excluded_cells.push_back(c);
            continue;
        }
        g1 /= subpoints;
        g2 /= subpoints;
        out.value -= weight * std::max(g2 - g1 * g1, 0.0);
    }
    return out;
}

SmallTimeFit fit_small_time(const SuperpositionState& state, const EnsembleSpec& ens, double cell_width,
                            double t_max, int samples, const CoarseOptions& opts) {
    if (samples < 4) throw std::invalid_argument("fit_small_time: need at least four samples");
    SmallTimeFit fit;
    for (int i = 0; i < samples; ++i) {
        const double t = t_max * i / (samples - 1);
        fit.times.push_back(t);
        fit.values.push_back(coarse_h(coarse_grid(state, ens, t, cell_width, opts)).value);
    }
    const auto p = stats::polyfit(fit.times, fit.values, 2);
    fit.h0 = p.coefficients[0];
    fit.slope = p.coefficients[1];
    fit.slope_error = p.errors[1];
    fit.curvature = 2.0 * p.coefficients[2];
    fit.curvature_error = 2.0 * p.errors[2];
    return fit;
}

TimescaleEstimate timescale_tau(const SuperpositionState& state, const EnsembleSpec& ens,
                                double cell_width, int subpoints) {
    TimescaleEstimate est;
    est.coarse_h0 = coarse_h(coarse_grid(state, ens, 0.0, cell_width)).value;
    est.curvature = h_curvature_at_zero(state, ens, cell_width, subpoints).value;
    if (!(est.curvature < 0.0))
        throw std::domain_error("timescale_tau: curvature at t = 0 is not negative; no relaxation");
    est.tau = std::sqrt(-est.coarse_h0 / est.curvature);

    // I = int (|psi0|^2 / f0) |d/dx (v0 f0')|^2 dx
    const double spacing = cell_width / 32.0;
    const double L = state.box_length();
    const auto n = static_cast<std::size_t>(std::ceil(L / cell_width)) * static_cast<std::size_t>(subpoints);
    const auto xs = midpoint_grid(L, n);
    double integral = 0.0;
    for (double x : xs) {
        const double f = ens.ratio(state, x);
        if (!(f > 0.0)) continue;
        const double d = stencil(x, spacing, L);
        const double dg = (drift_term(state, ens, x + d, spacing) - drift_term(state, ens, x - d, spacing)) / (2.0 * d);
        integral += state.density(x, 0.0) / f * dg * dg;
    }
    est.gradient_integral = integral * L / static_cast<double>(n);
    est.tau_small_cell = std::sqrt(12.0 * est.coarse_h0 / est.gradient_integral) / cell_width;

    const double spread = kPi / std::sqrt(3.0) * state.modes() / L;
    est.tau_dimensional = 1.0 / (cell_width * spread * spread * spread);
    return est;
}

// ---------------------------------------------------------------------------

std::string to_csv(const HSeries& series) {
    std::string out = "t,hbar,fine_h,stalled_fraction\n";
    char buf[128];
    for (std::size_t i = 0; i < series.times.size(); ++i) {
        std::snprintf(buf, sizeof buf, "%.17g,%.17g,", series.times[i], series.hbar[i]);
        out += buf;
        if (i < series.fine_h.size() && series.fine_h[i]) {
            std::snprintf(buf, sizeof buf, "%.17g", *series.fine_h[i]);
            out += buf;
        }
        std::snprintf(buf, sizeof buf, ",%.17g\n", i < series.stalled_fraction.size() ? series.stalled_fraction[i] : 0.0);
        out += buf;
    }
    return out;
}

}  // namespace qrelax
