#ifndef DSIM_CLOSED_LOOP_HPP
#define DSIM_CLOSED_LOOP_HPP

#include <cstdint>
#include <vector>

#include "dsim/dynamics.hpp"
#include "dsim/pida.hpp"

namespace dsim {

struct NoiseSettings {
    double measurement_sigma_angle = 0.0;     // rad, added to phi/theta/psi measurements
    double measurement_sigma_altitude = 0.0;  // m, added to the altitude measurement
    bool roll_disturbance_enabled = false;
    double roll_disturbance_sigma = 1.0;      // N m, white torque on the roll channel
    double roll_disturbance_start_s = 1.0;
    double pixel_sigma = 0.0;                 // px, stereo observation noise
    double dropout_probability = 0.0;         // chance a perception frame is dropped
};

/// Reference schedule: `initial` until step_time, `stepped` afterwards.
struct StepCommands {
    ControllerCommand initial;
    ControllerCommand stepped;
    double step_time = 2.0;
};

struct ClosedLoopConfig {
    double dt = 1e-3;
    double duration = 12.0;
    std::uint64_t seed = 0;
};

/// Column-oriented record of one run, one row per physics step.
struct TrajectoryLog {
    std::vector<double> t, x_e, y_e, z_e, phi, theta, psi, p, q, r, u, v, w,
        u_phi, u_theta, u_psi, u_thrust, ref_phi, ref_theta, ref_psi, ref_alt,
        safe_distance;

    void reserve(std::size_t n);
    void append(double time, const RigidBodyState& state, const ControlVector& control,
                const ControllerCommand& refs, double horizontal_distance);
    std::size_t size() const { return t.size(); }
    /// Altitude series (-z_E), built on demand for metric computations.
    std::vector<double> altitude() const;
    const std::vector<double>& channel_series(Channel c) const;
};

/// Runs the step-response loop: measure (with noise) -> PIDA -> rotor
/// allocation -> RK4, logging every step. Throws Diverged with the failure
/// time attached.
TrajectoryLog run_step_simulation(const QuadParams& params,
                                  const std::array<PidaGains, 4>& gains,
                                  const StepCommands& commands,
                                  const NoiseSettings& noise,
                                  const ClosedLoopConfig& config,
                                  const RigidBodyState& initial);

}  // namespace dsim

#endif  // DSIM_CLOSED_LOOP_HPP
