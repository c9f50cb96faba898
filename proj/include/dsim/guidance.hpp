#ifndef DSIM_GUIDANCE_HPP
#define DSIM_GUIDANCE_HPP

#include <Eigen/Core>

#include "dsim/dynamics.hpp"
#include "dsim/pida.hpp"

namespace dsim {

/// Relative target geometry in the earth frame. R points from the pursuer to
/// the target.
struct RelativeKinematics {
    Eigen::Vector3d relative_position = Eigen::Vector3d::Zero();  // R (m)
    Eigen::Vector3d pursuer_velocity = Eigen::Vector3d::Zero();   // V_M (m/s)
    Eigen::Vector3d target_velocity = Eigen::Vector3d::Zero();    // V_T (m/s)
};

struct GuidanceConfig {
    double navigation_constant = 1.0;  // N
    double safe_distance = 2.0;        // m, horizontal hold radius
    double hold_hysteresis = 0.2;      // m, release band above safe_distance
    double range_min = 0.1;            // m, LOS-rate singularity guard
    // Approach-speed regulator: closing speed commanded toward
    // approach_speed_gain * (distance - stop distance), capped.
    double approach_speed_gain = 1.2;   // 1/s
    double max_approach_speed = 3.0;    // m/s
    double closing_accel_gain = 2.0;    // 1/s, accel per unit speed error
    double stop_offset = 0.15;          // m, aim point this far inside safe_distance
    // Position-hold loop once the safe distance is reached.
    double hold_position_kp = 4.0;   // 1/s^2
    double hold_position_kd = 3.5;   // 1/s
    double max_tilt = 30.0 * M_PI / 180.0;  // rad, clamp on roll/pitch references
};

/// Mode memory of the guidance loop across updates.
struct GuidanceState {
    bool hold_engaged = false;
    Eigen::Vector2d hold_point = Eigen::Vector2d::Zero();  // earth x, y
    double hold_yaw = 0.0;
};

struct GuidanceCommand {
    Eigen::Vector3d commanded_acceleration = Eigen::Vector3d::Zero();
    ControllerCommand references;
    bool hold = false;
};

/// LOS angular velocity: ((V_M - V_T) x R) / |R|^2. Throws TargetReached
/// inside the guard radius.
Eigen::Vector3d los_rate(const RelativeKinematics& rel, double range_min = 0.1);

/// Pure proportional navigation: a_c = N * Omega_LOS x (V_M - V_T).
Eigen::Vector3d ppn_acceleration(const RelativeKinematics& rel, double navigation_constant,
                                 double range_min = 0.1);

/// Maps a desired acceleration plus relative geometry onto attitude/altitude
/// references: yaw points along the horizontal LOS, the horizontal
/// acceleration (PPN plus an along-LOS approach-speed regulator) is inverted
/// to roll/pitch through the hover relations, altitude tracks the target
/// height. Inside the safe distance the references switch to holding the
/// capture position, with hysteresis on release.
GuidanceCommand acceleration_to_references(const Eigen::Vector3d& ppn_accel,
                                           const RelativeKinematics& rel,
                                           const RigidBodyState& state, double target_height,
                                           const GuidanceConfig& config, GuidanceState& mode);

}  // namespace dsim

#endif  // DSIM_GUIDANCE_HPP
