#include "qrelax/integrator.hpp"

#include <string>

#include "qrelax/parallel.hpp"

namespace qrelax {

void IntegratorConfig::validate() const {
    if (!(rel_tol > 0.0) || !(abs_tol > 0.0))
        throw std::invalid_argument("IntegratorConfig: tolerances must be positive");
    if (!(min_step > 0.0) || !(min_step < max_step))
        throw std::invalid_argument("IntegratorConfig: need 0 < min_step < max_step");
    if (!(initial_step > 0.0)) throw std::invalid_argument("IntegratorConfig: initial_step must be positive");
    if (!(node_retreat_factor > 0.0 && node_retreat_factor < 1.0))
        throw std::invalid_argument("IntegratorConfig: node_retreat_factor must lie in (0, 1)");
}

const char* to_string(TrajectoryStatus status) {
    switch (status) {
        case TrajectoryStatus::completed: return "completed";
        case TrajectoryStatus::node_stalled: return "node-stalled";
        case TrajectoryStatus::left_domain: return "left-domain-numerically";
    }
    return "unknown";
}

namespace {

void check_interior(const SuperpositionState& state, double x, const char* who) {
    if (!(x > 0.0 && x < state.box_length()))
        throw std::domain_error(std::string(who) + ": position must lie strictly inside (0, L)");
}

}  // namespace

Trajectory integrate(const SuperpositionState& state, double x0, double t0, double t1,
                     const IntegratorConfig& cfg) {
    check_interior(state, x0, "integrate");
    Trajectory traj;
    traj.x0 = x0;
    auto record = [&](double t, const Point<1>& x) {
        traj.times.push_back(t);
        traj.positions.push_back(x[0]);
    };
    const auto res = integrate_field<1>(BoxField(state), Point<1>{x0}, t0, t1, 0.0,
                                        state.box_length(), cfg, record);
    traj.status = res.status;
    traj.error_estimate = res.error_estimate;
    traj.accepted_steps = res.accepted;
    traj.rejected_steps = res.rejected;
    return traj;
}

IntegrationResult<1> propagate(const SuperpositionState& state, double x0, double t0, double t1,
                               const IntegratorConfig& cfg) {
    check_interior(state, x0, "propagate");
    return integrate_field<1>(BoxField(state), Point<1>{x0}, t0, t1, 0.0, state.box_length(), cfg,
                              [](double, const Point<1>&) {});
}

BacktrackResult backtrack(const SuperpositionState& state, double x, double t,
                          const IntegratorConfig& cfg) {
    check_interior(state, x, "backtrack");
    if (t < 0.0) throw std::domain_error("backtrack: t must be >= 0");
    const auto res = propagate(state, x, t, 0.0, cfg);
    return {res.end[0], res.status};
}

EnsembleResult evolve_ensemble(const SuperpositionState& state, std::span<const double> samples,
                               double t0, double t1, const IntegratorConfig& cfg,
                               double max_stall_fraction) {
    for (double x : samples) check_interior(state, x, "evolve_ensemble");
    EnsembleResult out;
    out.positions.resize(samples.size());
    out.status.resize(samples.size());
    parallel_for(samples.size(), [&](std::size_t i) {
        const auto res = propagate(state, samples[i], t0, t1, cfg);
        out.positions[i] = res.end[0];
        out.status[i] = res.status;
    });
    for (auto s : out.status)
        if (s != TrajectoryStatus::completed) ++out.stalled;
    if (out.stalled_fraction() > max_stall_fraction)
        throw EnsembleFailure("evolve_ensemble: " + std::to_string(out.stalled) + " of " +
                                  std::to_string(samples.size()) + " trajectories stalled",
                              out.stalled, samples.size());
    return out;
}

}  // namespace qrelax
