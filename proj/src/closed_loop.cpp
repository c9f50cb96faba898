#include "dsim/closed_loop.hpp"

#include <cmath>
#include <random>

namespace dsim {

void TrajectoryLog::reserve(std::size_t n) {
    for (auto* col : {&t, &x_e, &y_e, &z_e, &phi, &theta, &psi, &p, &q, &r, &u, &v, &w,
                      &u_phi, &u_theta, &u_psi, &u_thrust, &ref_phi, &ref_theta, &ref_psi,
                      &ref_alt, &safe_distance})
        col->reserve(n);
}

void TrajectoryLog::append(double time, const RigidBodyState& state, const ControlVector& control,
                           const ControllerCommand& refs, double horizontal_distance) {
    t.push_back(time);
    x_e.push_back(state.position.x());
    y_e.push_back(state.position.y());
    z_e.push_back(state.position.z());
    phi.push_back(state.euler.x());
    theta.push_back(state.euler.y());
    psi.push_back(state.euler.z());
    p.push_back(state.body_rates.x());
    q.push_back(state.body_rates.y());
    r.push_back(state.body_rates.z());
    u.push_back(state.body_velocity.x());
    v.push_back(state.body_velocity.y());
    w.push_back(state.body_velocity.z());
    u_phi.push_back(control.u_phi);
    u_theta.push_back(control.u_theta);
    u_psi.push_back(control.u_psi);
    u_thrust.push_back(control.u_thrust);
    ref_phi.push_back(refs.roll);
    ref_theta.push_back(refs.pitch);
    ref_psi.push_back(refs.yaw);
    ref_alt.push_back(refs.altitude);
    safe_distance.push_back(horizontal_distance);
}

std::vector<double> TrajectoryLog::altitude() const {
    std::vector<double> alt(z_e.size());
    for (std::size_t i = 0; i < z_e.size(); ++i) alt[i] = -z_e[i];
    return alt;
}

const std::vector<double>& TrajectoryLog::channel_series(Channel c) const {
    switch (c) {
        case Channel::kRoll: return phi;
        case Channel::kPitch: return theta;
        case Channel::kYaw: return psi;
        case Channel::kAltitude: break;
    }
    throw DomainError("altitude series is derived; use TrajectoryLog::altitude()");
}

TrajectoryLog run_step_simulation(const QuadParams& params,
                                  const std::array<PidaGains, 4>& gains,
                                  const StepCommands& commands,
                                  const NoiseSettings& noise,
                                  const ClosedLoopConfig& config,
                                  const RigidBodyState& initial) {
    params.validate();
    if (!(config.dt > 0.0)) throw NonPositiveDt(config.dt);

    std::mt19937_64 meas_rng(config.seed * 0x9e3779b97f4a7c15ULL + 1);
    std::mt19937_64 dist_rng(config.seed * 0x9e3779b97f4a7c15ULL + 2);
    std::normal_distribution<double> gauss(0.0, 1.0);

    MimoPida controller(gains, params);
    RigidBodyState state = initial;
    const auto nsteps = static_cast<std::size_t>(std::llround(config.duration / config.dt));

    TrajectoryLog log;
    log.reserve(nsteps + 1);
    ControlVector applied;  // zero until the first update
    log.append(0.0, state, applied, commands.initial, 0.0);

    for (std::size_t k = 0; k < nsteps; ++k) {
        const double tk = static_cast<double>(k) * config.dt;
        const ControllerCommand& refs =
            tk >= commands.step_time ? commands.stepped : commands.initial;

        std::array<double, 4> measured = {state.euler.x(), state.euler.y(), state.euler.z(),
                                          state.altitude()};
        if (noise.measurement_sigma_angle > 0.0) {
            measured[0] += noise.measurement_sigma_angle * gauss(meas_rng);
            measured[1] += noise.measurement_sigma_angle * gauss(meas_rng);
            measured[2] += noise.measurement_sigma_angle * gauss(meas_rng);
        }
        if (noise.measurement_sigma_altitude > 0.0)
            measured[3] += noise.measurement_sigma_altitude * gauss(meas_rng);

        const ControlVector commanded = controller.update(refs, measured, config.dt);
        const ControlVector realized =
            mix_forces_to_controls(controls_to_forces(commanded, params).forces, params);

        Disturbance d = gyroscopic_disturbance(state.body_rates,
                                               params.rotor_residual_speed, params);
        if (noise.roll_disturbance_enabled && tk >= noise.roll_disturbance_start_s)
            d.d_phi += noise.roll_disturbance_sigma * gauss(dist_rng);

        try {
            state = step(state, realized, d, params, config.dt);
        } catch (const Diverged&) {
            throw Diverged(tk, state.to_vector().cwiseAbs().maxCoeff());
        }
        log.append(tk + config.dt, state, realized, refs, 0.0);
    }
    return log;
}

}  // namespace dsim
