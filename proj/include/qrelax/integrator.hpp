#ifndef QRELAX_INTEGRATOR_HPP
#define QRELAX_INTEGRATOR_HPP

// Adaptive Dormand-Prince 5(4) integration of guidance-equation trajectories.
//
// The core is a template over the configuration dimension so the 1D box and the
// two-particle signaling model share one stepper. The velocity field reports whether
// it is reliable at a point; near nodes of psi it is not, and the stepper retreats.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <functional>
#include <span>
#include <stdexcept>
#include <vector>

#include "qrelax/spectral.hpp"

namespace qrelax {

struct IntegratorConfig {
    double rel_tol = 1e-8;
    double abs_tol = 1e-8;
    double max_step = 0.1;
    double min_step = 1e-10;
    double initial_step = 1e-3;
    // step multiplier applied when a stage lands below the node guard
    double node_retreat_factor = 0.25;
    // re-check each accepted step against two half steps
    bool step_doubling = false;

    void validate() const;
};

enum class TrajectoryStatus { completed, node_stalled, left_domain };

const char* to_string(TrajectoryStatus status);

template <std::size_t D>
using Point = std::array<double, D>;

template <std::size_t D>
struct IntegrationResult {
    Point<D> end{};
    double end_time = 0.0;
    TrajectoryStatus status = TrajectoryStatus::completed;
    std::size_t accepted = 0;
    std::size_t rejected = 0;
    // sum of per-step error magnitudes (embedded or step-doubling, whichever is larger)
    double error_estimate = 0.0;
};

/// One trajectory of the 1D box with its accepted-step samples.
struct Trajectory {
    double x0 = 0.0;
    std::vector<double> times;
    std::vector<double> positions;
    TrajectoryStatus status = TrajectoryStatus::completed;
    double error_estimate = 0.0;
    std::size_t accepted_steps = 0;
    std::size_t rejected_steps = 0;

    double final_position() const { return positions.back(); }
    double final_time() const { return times.back(); }
};

namespace detail {

// Dormand-Prince 5(4) tableau.
inline constexpr double a21 = 1.0 / 5.0;
inline constexpr double a31 = 3.0 / 40.0, a32 = 9.0 / 40.0;
inline constexpr double a41 = 44.0 / 45.0, a42 = -56.0 / 15.0, a43 = 32.0 / 9.0;
inline constexpr double a51 = 19372.0 / 6561.0, a52 = -25360.0 / 2187.0, a53 = 64448.0 / 6561.0,
                        a54 = -212.0 / 729.0;
inline constexpr double a61 = 9017.0 / 3168.0, a62 = -355.0 / 33.0, a63 = 46732.0 / 5247.0,
                        a64 = 49.0 / 176.0, a65 = -5103.0 / 18656.0;
inline constexpr double b1 = 35.0 / 384.0, b3 = 500.0 / 1113.0, b4 = 125.0 / 192.0,
                        b5 = -2187.0 / 6784.0, b6 = 11.0 / 84.0;
inline constexpr double e1 = 71.0 / 57600.0, e3 = -71.0 / 16695.0, e4 = 71.0 / 1920.0,
                        e5 = -17253.0 / 339200.0, e6 = 22.0 / 525.0, e7 = -1.0 / 40.0;

template <std::size_t D>
Point<D> axpy(const Point<D>& x, double h, std::initializer_list<std::pair<double, const Point<D>*>> terms) {
    Point<D> out = x;
    for (const auto& [c, k] : terms)
        for (std::size_t i = 0; i < D; ++i) out[i] += h * c * (*k)[i];
    return out;
}

template <std::size_t D>
bool inside(const Point<D>& x, double lo, double hi) {
    for (double v : x)
        if (!(v >= lo && v <= hi)) return false;
    return true;
}

// One DP5 step from (t, x) with derivative k1 already known. Returns false if a stage
// hit an unreliable field value or left the domain.
template <std::size_t D, class Field>
bool dp_step(Field& field, double t, const Point<D>& x, const Point<D>& k1, double h, double lo,
             double hi, Point<D>& x_new, Point<D>& k7, Point<D>& err) {
    Point<D> k2, k3, k4, k5, k6;
    auto stage = [&](const Point<D>& y, double ts, Point<D>& k) {
        if (!inside(y, lo, hi)) return false;
        return field(ts, y, k);
    };
    if (!stage(axpy<D>(x, h, {{a21, &k1}}), t + h / 5.0, k2)) return false;
    if (!stage(axpy<D>(x, h, {{a31, &k1}, {a32, &k2}}), t + 3.0 * h / 10.0, k3)) return false;
    if (!stage(axpy<D>(x, h, {{a41, &k1}, {a42, &k2}, {a43, &k3}}), t + 4.0 * h / 5.0, k4))
        return false;
    if (!stage(axpy<D>(x, h, {{a51, &k1}, {a52, &k2}, {a53, &k3}, {a54, &k4}}), t + 8.0 * h / 9.0, k5))
        return false;
    if (!stage(axpy<D>(x, h, {{a61, &k1}, {a62, &k2}, {a63, &k3}, {a64, &k4}, {a65, &k5}}), t + h, k6))
        return false;
    x_new = axpy<D>(x, h, {{b1, &k1}, {b3, &k3}, {b4, &k4}, {b5, &k5}, {b6, &k6}});
    if (!stage(x_new, t + h, k7)) return false;
    for (std::size_t i = 0; i < D; ++i)
        err[i] = h * (e1 * k1[i] + e3 * k3[i] + e4 * k4[i] + e5 * k5[i] + e6 * k6[i] + e7 * k7[i]);
    return true;
}

}  // namespace detail

/// Integrates dx/dt = field(t, x) from t0 to t1 (either direction) inside the box [lo, hi]^D.
///
/// `field(t, x, v)` writes the velocity into v and returns false if the point is too close
/// to a node for the velocity to be trusted. `observe(t, x)` is called for the initial
/// point and after every accepted step.
template <std::size_t D, class Field, class Observer>
IntegrationResult<D> integrate_field(Field&& field, Point<D> x, double t0, double t1, double lo,
                                     double hi, const IntegratorConfig& cfg, Observer&& observe) {
    cfg.validate();
    IntegrationResult<D> out;
    out.end = x;
    out.end_time = t0;
    observe(t0, x);
    if (t1 == t0) return out;

    const double dir = t1 > t0 ? 1.0 : -1.0;
    const double span = std::abs(t1 - t0);
    double h = std::min({cfg.initial_step, cfg.max_step, span});
    double t = t0;
    Point<D> k1;
    if (!field(t, x, k1)) {
        out.status = TrajectoryStatus::node_stalled;
        return out;
    }

    while (dir * (t1 - t) > 0.0) {
        const double remaining = std::abs(t1 - t);
        const bool last = h >= remaining * (1.0 - 1e-12);
        const double step = last ? remaining : h;
        Point<D> x_new, k7, err;
        const bool ok = detail::dp_step<D>(field, t, x, k1, dir * step, lo, hi, x_new, k7, err);
        if (!ok) {
            ++out.rejected;
            h = step * cfg.node_retreat_factor;
            if (h < cfg.min_step) {
                out.status = detail::inside(x, lo, hi) ? TrajectoryStatus::node_stalled
                                                       : TrajectoryStatus::left_domain;
                break;
            }
            continue;
        }
        double norm = 0.0;
        for (std::size_t i = 0; i < D; ++i) {
            const double scale =
                cfg.abs_tol + cfg.rel_tol * std::max(std::abs(x[i]), std::abs(x_new[i]));
            norm = std::max(norm, std::abs(err[i]) / scale);
        }
        double local_error = 0.0;
        for (double e : err) local_error = std::max(local_error, std::abs(e));

        if (norm <= 1.0 && cfg.step_doubling) {
            // two half steps; the two routes must agree to tolerance
            Point<D> mid, k_mid, end2, k_end2, err_a, err_b;
            bool ok2 = detail::dp_step<D>(field, t, x, k1, dir * step / 2.0, lo, hi, mid, k_mid, err_a) &&
                       detail::dp_step<D>(field, t + dir * step / 2.0, mid, k_mid, dir * step / 2.0, lo,
                                          hi, end2, k_end2, err_b);
            if (ok2) {
                double dnorm = 0.0, diff = 0.0;
                for (std::size_t i = 0; i < D; ++i) {
                    const double scale =
                        cfg.abs_tol + cfg.rel_tol * std::max(std::abs(x[i]), std::abs(end2[i]));
                    dnorm = std::max(dnorm, std::abs(end2[i] - x_new[i]) / scale);
                    diff = std::max(diff, std::abs(end2[i] - x_new[i]));
                }
                norm = std::max(norm, dnorm);
                local_error = std::max(local_error, diff);
            }
        }

        if (norm <= 1.0) {
            t = last ? t1 : t + dir * step;
            x = x_new;
            k1 = k7;
            ++out.accepted;
            out.error_estimate += local_error;
            observe(t, x);
            const double grow = norm > 0.0 ? 0.9 * std::pow(norm, -0.2) : 5.0;
            h = std::min(cfg.max_step, step * std::clamp(grow, 0.2, 5.0));
        } else {
            ++out.rejected;
            h = step * std::clamp(0.9 * std::pow(norm, -0.2), 0.1, 0.9);
            if (h < cfg.min_step) {
                out.status = TrajectoryStatus::node_stalled;
                break;
            }
        }
    }
    out.end = x;
    out.end_time = t;
    return out;
}

/// Velocity field of a 1D superposition, wrapped for integrate_field.
class BoxField {
public:
    explicit BoxField(const SuperpositionState& state) : state_(&state) {}
    bool operator()(double t, const Point<1>& x, Point<1>& v) const {
        Complex psi, dpsi;
        state_->psi_and_derivative(x[0], t, psi, dpsi);
        const double rho = std::norm(psi);
        if (rho < state_->node_guard()) return false;
        v[0] = (dpsi * std::conj(psi)).imag() / rho;
        return true;
    }

private:
    const SuperpositionState* state_;
};

/// Integrates one trajectory from (x0, t0) to t1, recording every accepted step.
Trajectory integrate(const SuperpositionState& state, double x0, double t0, double t1,
                     const IntegratorConfig& cfg = {});

/// Endpoint of the trajectory through (x0, t0) at time t1; no sample recording.
IntegrationResult<1> propagate(const SuperpositionState& state, double x0, double t0, double t1,
                               const IntegratorConfig& cfg = {});

struct BacktrackResult {
    double position = 0.0;
    TrajectoryStatus status = TrajectoryStatus::completed;
};

/// Position at t = 0 of the trajectory that passes through x at time t.
BacktrackResult backtrack(const SuperpositionState& state, double x, double t,
                          const IntegratorConfig& cfg = {});

struct EnsembleResult {
    std::vector<double> positions;
    std::vector<TrajectoryStatus> status;
    std::size_t stalled = 0;

    double stalled_fraction() const {
        return positions.empty() ? 0.0 : static_cast<double>(stalled) / static_cast<double>(positions.size());
    }
};

/// Thrown when too many trajectories of an ensemble fail to complete.
class EnsembleFailure : public std::runtime_error {
public:
    EnsembleFailure(const std::string& what, std::size_t stalled, std::size_t total)
        : std::runtime_error(what), stalled_(stalled), total_(total) {}
    std::size_t stalled() const { return stalled_; }
    std::size_t total() const { return total_; }

private:
    std::size_t stalled_;
    std::size_t total_;
};

/// Moves every sample from t0 to t1. Throws EnsembleFailure when the stalled fraction
/// exceeds `max_stall_fraction`.
EnsembleResult evolve_ensemble(const SuperpositionState& state, std::span<const double> samples,
                               double t0, double t1, const IntegratorConfig& cfg = {},
                               double max_stall_fraction = 0.01);

}  // namespace qrelax

#endif  // QRELAX_INTEGRATOR_HPP
