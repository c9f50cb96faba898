#include "dsim/guidance.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Geometry>

namespace dsim {

Eigen::Vector3d los_rate(const RelativeKinematics& rel, double range_min) {
    const double range = rel.relative_position.norm();
    if (range < range_min) throw TargetReached(range);
    const Eigen::Vector3d v_rel = rel.pursuer_velocity - rel.target_velocity;
    return v_rel.cross(rel.relative_position) / (range * range);
}

Eigen::Vector3d ppn_acceleration(const RelativeKinematics& rel, double navigation_constant,
                                 double range_min) {
    const Eigen::Vector3d omega = los_rate(rel, range_min);
    return navigation_constant * omega.cross(rel.pursuer_velocity - rel.target_velocity);
}

GuidanceCommand acceleration_to_references(const Eigen::Vector3d& ppn_accel,
                                           const RelativeKinematics& rel,
                                           const RigidBodyState& state, double target_height,
                                           const GuidanceConfig& config, GuidanceState& mode) {
    const double g = 9.81;
    const Eigen::Vector2d r_h(rel.relative_position.x(), rel.relative_position.y());
    const double dist = r_h.norm();

    // Hold-mode hysteresis.
    if (!mode.hold_engaged && dist <= config.safe_distance) {
        mode.hold_engaged = true;
        mode.hold_point = Eigen::Vector2d(state.position.x(), state.position.y());
        mode.hold_yaw = dist > 1e-9 ? std::atan2(r_h.y(), r_h.x()) : state.euler.z();
    } else if (mode.hold_engaged && dist > config.safe_distance + config.hold_hysteresis) {
        mode.hold_engaged = false;
    }

    const Eigen::Vector3d v_earth = body_to_earth_rotation(state.euler) * state.body_velocity;
    const Eigen::Vector2d v_h(v_earth.x(), v_earth.y());

    Eigen::Vector2d accel_h;
    double yaw_ref;
    if (mode.hold_engaged) {
        const Eigen::Vector2d pos(state.position.x(), state.position.y());
        accel_h = config.hold_position_kp * (mode.hold_point - pos) -
                  config.hold_position_kd * v_h;
        yaw_ref = mode.hold_yaw;
    } else {
        accel_h = Eigen::Vector2d(ppn_accel.x(), ppn_accel.y());
        // Along-LOS approach-speed regulator; PPN alone only rotates the
        // velocity vector and cannot open a closing speed from hover.
        if (dist > 1e-9) {
            const Eigen::Vector2d r_hat = r_h / dist;
            const double stop_radius = config.safe_distance - config.stop_offset;
            const double desired_closing = std::min(
                config.max_approach_speed,
                std::max(0.0, config.approach_speed_gain * (dist - stop_radius)));
            const double closing = v_h.dot(r_hat);
            accel_h += config.closing_accel_gain * (desired_closing - closing) * r_hat;
        }
        yaw_ref = dist > 1e-9 ? std::atan2(r_h.y(), r_h.x()) : state.euler.z();
    }

    // Hover inversion in the yaw-aligned frame: a_x' = -g tan(theta),
    // a_y' = g tan(phi).
    const double cpsi = std::cos(state.euler.z()), spsi = std::sin(state.euler.z());
    const double ax = cpsi * accel_h.x() + spsi * accel_h.y();
    const double ay = -spsi * accel_h.x() + cpsi * accel_h.y();

    GuidanceCommand cmd;
    cmd.commanded_acceleration = ppn_accel;
    cmd.hold = mode.hold_engaged;
    cmd.references.pitch = std::clamp(-std::atan(ax / g), -config.max_tilt, config.max_tilt);
    cmd.references.roll = std::clamp(std::atan(ay / g), -config.max_tilt, config.max_tilt);
    cmd.references.yaw = yaw_ref;
    cmd.references.altitude = target_height;
    return cmd;
}

}  // namespace dsim
