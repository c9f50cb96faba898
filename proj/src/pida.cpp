#include "dsim/pida.hpp"

#include <algorithm>
#include <cmath>

namespace dsim {

const char* channel_name(Channel c) {
    switch (c) {
        case Channel::kRoll: return "roll";
        case Channel::kPitch: return "pitch";
        case Channel::kYaw: return "yaw";
        case Channel::kAltitude: return "altitude";
    }
    return "?";
}

void PidaGains::validate() const {
    if (!(tf > 0.0)) throw ConfigError("filter time constant Tf must be positive");
    if (ki < 0.0) throw ConfigError("integral gain ki must be non-negative");
    for (double v : {kp, ki, kd, ka, tf})
        if (!std::isfinite(v)) throw ConfigError("PIDA gains must be finite");
}

double pida_update(const PidaGains& gains, ChannelState& state, double reference,
                   double measurement, double dt) {
    if (!(dt > 0.0)) throw NonPositiveDt(dt);
    if (!(dt < gains.tf))
        throw DomainError("dt must be smaller than the filter time constant Tf");

    const double e = reference - measurement;
    // Tustin integrator and filtered-differentiator coefficients.
    const double a = (2.0 * gains.tf - dt) / (2.0 * gains.tf + dt);
    const double b = 2.0 / (2.0 * gains.tf + dt);

    const double integ = state.integrator + 0.5 * dt * (e + state.prev_error);
    const double f1 = a * state.filt_deriv + b * (e - state.prev_error);
    const double f2 = a * state.filt_accel + b * (f1 - state.filt_deriv);

    state.integrator = integ;
    state.prev_error = e;
    state.filt_deriv = f1;
    state.filt_accel = f2;

    return gains.kp * e + gains.ki * integ + gains.kd * f1 + gains.ka * f2;
}

MimoPida::MimoPida(const std::array<PidaGains, 4>& gains, const QuadParams& params)
    : gains_(gains),
      hover_thrust_(params.weight()),
      max_thrust_(4.0 * params.max_rotor_force) {
    for (const auto& g : gains_) g.validate();
}

ControlVector MimoPida::update(const ControllerCommand& command,
                               const std::array<double, 4>& measured, double dt) {
    const std::array<double, 4> refs = {command.roll, command.pitch, command.yaw,
                                        command.altitude};
    std::array<double, 4> out{};
    ChannelState alt_before = states_[3];
    for (int i = 0; i < 4; ++i) out[i] = pida_update(gains_[i], states_[i], refs[i], measured[i], dt);

    ControlVector u;
    u.u_phi = out[0];
    u.u_theta = out[1];
    u.u_psi = out[2];
    u.u_thrust = hover_thrust_ + out[3];
    // Conditional integration: no accumulation while the thrust demand is
    // outside what the rotors can realize.
    if (u.u_thrust < 0.0 || u.u_thrust > max_thrust_)
        states_[3].integrator = alt_before.integrator;
    if (u.u_thrust < 0.0) u.u_thrust = 0.0;
    return u;
}

void MimoPida::reset() {
    for (auto& s : states_) s.reset();
}

StepMetrics step_response_metrics(std::span<const double> time,
                                  std::span<const double> value, double reference,
                                  double step_time) {
    if (time.size() != value.size() || time.size() < 2)
        throw DomainError("trajectory must have matching time/value samples");

    // Baseline: last sample strictly before the step.
    std::size_t start = 0;
    for (std::size_t i = 0; i < time.size(); ++i) {
        if (time[i] < step_time) start = i;
        else break;
    }
    const double y0 = value[start];
    const double step_size = reference - y0;
    const double band = kSettlingBandFraction * std::max(std::abs(step_size), 1e-9);

    double peak_excursion = 0.0;
    std::size_t last_outside = start;  // sentinel: nothing outside yet
    bool any_outside = false;
    const double sign = step_size >= 0.0 ? 1.0 : -1.0;
    for (std::size_t i = start; i < value.size(); ++i) {
        if (time[i] < step_time) continue;
        peak_excursion = std::max(peak_excursion, (value[i] - reference) * sign);
        if (std::abs(value[i] - reference) > band) {
            last_outside = i;
            any_outside = true;
        }
    }
    if (any_outside && last_outside == value.size() - 1) throw NotSettled();

    StepMetrics m;
    m.overshoot_pct = std::abs(step_size) > 1e-12
                          ? 100.0 * std::max(0.0, peak_excursion) / std::abs(step_size)
                          : 0.0;
    m.settling_time_s = any_outside ? time[last_outside] - step_time : 0.0;

    // Steady-state error: mean of the trailing 5% of the record.
    const std::size_t tail = std::max<std::size_t>(1, value.size() / 20);
    double acc = 0.0;
    for (std::size_t i = value.size() - tail; i < value.size(); ++i) acc += value[i];
    m.steady_state_error = std::abs(acc / static_cast<double>(tail) - reference);
    return m;
}

}  // namespace dsim
