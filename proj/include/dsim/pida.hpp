#ifndef DSIM_PIDA_HPP
#define DSIM_PIDA_HPP

#include <array>
#include <span>

#include "dsim/dynamics.hpp"
#include "dsim/errors.hpp"

namespace dsim {

enum class Channel { kRoll = 0, kPitch = 1, kYaw = 2, kAltitude = 3 };

const char* channel_name(Channel c);

/// Gains of one PIDA channel plus the derivative-filter time constant.
/// The filtered derivative is sL(s) with L(s) = 1/(1 + Tf s); the accelerated
/// term is the same stage cascaded twice.
struct PidaGains {
    double kp = 0.0;
    double ki = 0.0;
    double kd = 0.0;
    double ka = 0.0;
    double tf = 0.04;  // s
    Channel channel = Channel::kRoll;

    void validate() const;
};

/// Dynamic states of one channel. Both Tustin filter stages keep their last
/// output; the integrator and previous error complete the discretization.
struct ChannelState {
    double integrator = 0.0;
    double prev_error = 0.0;
    double filt_deriv = 0.0;  // last output of the first sL(s) stage
    double filt_accel = 0.0;  // last output of the second stage

    void reset() { *this = ChannelState{}; }
};

/// Reference inputs for the four channels.
struct ControllerCommand {
    double roll = 0.0;      // rad
    double pitch = 0.0;     // rad
    double yaw = 0.0;       // rad
    double altitude = 0.0;  // m, positive up
};

/// One Tustin-discretized PIDA update. Returns the channel output and
/// advances `state`. Pure in (gains, state, inputs): identical inputs give
/// bit-identical outputs.
double pida_update(const PidaGains& gains, ChannelState& state, double reference,
                   double measurement, double dt);

/// Four-channel MIMO controller. Channel outputs map directly onto
/// (u_phi, u_theta, u_psi, u_T); the altitude output rides on top of the mg
/// hover feed-forward and the total thrust is clamped at zero with
/// conditional integration as anti-windup.
class MimoPida {
public:
    MimoPida(const std::array<PidaGains, 4>& gains, const QuadParams& params);

    /// measured: [phi, theta, psi, altitude] as seen by the sensors.
    ControlVector update(const ControllerCommand& command,
                         const std::array<double, 4>& measured, double dt);
    void reset();

    const std::array<PidaGains, 4>& gains() const { return gains_; }
    const std::array<ChannelState, 4>& states() const { return states_; }

private:
    std::array<PidaGains, 4> gains_;
    std::array<ChannelState, 4> states_;
    double hover_thrust_;
    double max_thrust_;
};

/// Step-response quality measures. Overshoot is the peak excursion past the
/// reference in units of the step size; settling time is the last instant the
/// signal is outside the +/-2% band, measured from the step instant.
struct StepMetrics {
    double overshoot_pct = 0.0;
    double settling_time_s = 0.0;
    double steady_state_error = 0.0;
};

inline constexpr double kSettlingBandFraction = 0.02;

/// Throws NotSettled when the final sample is still outside the band.
StepMetrics step_response_metrics(std::span<const double> time,
                                  std::span<const double> value, double reference,
                                  double step_time);

}  // namespace dsim

#endif  // DSIM_PIDA_HPP
