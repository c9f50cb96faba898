#ifndef DSIM_DYNAMICS_HPP
#define DSIM_DYNAMICS_HPP

#include <array>
#include <cstdint>

#include <Eigen/Core>

#include "dsim/errors.hpp"

namespace dsim {

// Guard band around |theta| = pi/2 where the Euler-rate map loses rank.
inline constexpr double kSingularityMargin = 1e-6;
// Any state component beyond this magnitude aborts the integration.
inline constexpr double kDivergenceLimit = 1e6;
inline constexpr double kMaxStepDt = 0.05;

/// Physical parameters of the quadcopter (defaults: the 0.8 kg test vehicle).
struct QuadParams {
    double mass = 0.8;                 // kg
    double arm_length = 0.2;           // m, motor center to center of mass
    double gravity = 9.81;             // m/s^2
    double force_to_torque = 3e-5;     // kg m^2, rotor drag torque per unit thrust
    double inertia_xx = 2.28e-2;       // kg m^2
    double inertia_yy = 3.10e-2;       // kg m^2
    double inertia_zz = 4.40e-2;       // kg m^2
    double rotor_inertia = 8.3e-5;     // kg m^2, about the spin axis
    double max_rotor_force = 25.0;     // N, per-rotor thrust ceiling
    // Residual propeller speed Omega_r = sum_i (-1)^i Omega_i used for the
    // gyroscopic coupling term. Zero disables the effect.
    double rotor_residual_speed = 0.0;  // rad/s

    double weight() const { return mass * gravity; }
    void validate() const;
};

/// Full rigid-body state. Earth frame is NED: z positive down, so altitude = -z.
struct RigidBodyState {
    Eigen::Vector3d euler = Eigen::Vector3d::Zero();          // roll, pitch, yaw (rad)
    Eigen::Vector3d body_rates = Eigen::Vector3d::Zero();     // p, q, r (rad/s)
    Eigen::Vector3d body_velocity = Eigen::Vector3d::Zero();  // u, v, w (m/s)
    Eigen::Vector3d position = Eigen::Vector3d::Zero();       // x_E, y_E, z_E (m)

    double altitude() const { return -position.z(); }

    using Vec12 = Eigen::Matrix<double, 12, 1>;
    // Packing order: [euler, body_rates, body_velocity, position].
    Vec12 to_vector() const;
    static RigidBodyState from_vector(const Vec12& v);
    bool all_finite() const;
};

/// The four control channels: three body torques plus total thrust.
struct ControlVector {
    double u_phi = 0.0;     // N m
    double u_theta = 0.0;   // N m
    double u_psi = 0.0;     // N m
    double u_thrust = 0.0;  // N, must be >= 0
};

struct RotorForces {
    double f1 = 0.0, f2 = 0.0, f3 = 0.0, f4 = 0.0;  // N
};

/// Angular acceleration disturbance (torque-like, N m) plus the residual
/// propeller speed that produced it. d_psi is structurally zero for the
/// propeller-gyroscopic model.
struct Disturbance {
    double d_phi = 0.0;
    double d_theta = 0.0;
    double d_psi = 0.0;
    double residual_speed = 0.0;  // rad/s
};

/// Result of inverting the mixing matrix; negative rotor forces are clamped
/// to zero and flagged.
struct ForceAllocation {
    RotorForces forces;
    bool saturated = false;
};

/// Body-to-earth direction cosine matrix, ZYX (yaw-pitch-roll) convention.
Eigen::Matrix3d body_to_earth_rotation(const Eigen::Vector3d& euler);

/// omega = W(Theta) * Theta_dot. Throws SingularAttitude inside the pitch guard band.
Eigen::Vector3d euler_rates_to_body_rates(const Eigen::Vector3d& euler,
                                          const Eigen::Vector3d& euler_rates);

/// Theta_dot = W(Theta)^-1 * omega. Throws SingularAttitude inside the guard band.
Eigen::Vector3d body_rates_to_euler_rates(const Eigen::Vector3d& euler,
                                          const Eigen::Vector3d& body_rates);

/// Rotor thrusts to control channels:
///   u_phi = l (F2 - F4), u_theta = l (F3 - F1),
///   u_psi = c (-F1 + F2 - F3 + F4), u_T = F1 + F2 + F3 + F4.
ControlVector mix_forces_to_controls(const RotorForces& forces, const QuadParams& params);

/// Inverse of the mixing matrix. Forces outside [0, max_rotor_force] are
/// clamped and the allocation is marked saturated.
ForceAllocation controls_to_forces(const ControlVector& u, const QuadParams& params);

/// Propeller gyroscopic coupling: d = (+q Im Omega_r, -p Im Omega_r, 0).
Disturbance gyroscopic_disturbance(const Eigen::Vector3d& body_rates,
                                   const std::array<double, 4>& rotor_speeds,
                                   const QuadParams& params);
Disturbance gyroscopic_disturbance(const Eigen::Vector3d& body_rates,
                                   double residual_speed, const QuadParams& params);

/// Nonlinear 6-DOF state derivative. Returned in RigidBodyState layout where
/// each field holds the time derivative of the corresponding state.
RigidBodyState state_derivative(const RigidBodyState& state, const ControlVector& u,
                                const Disturbance& d, const QuadParams& params);

/// One fixed-step RK4 integration step with u and d held constant.
/// Throws Diverged when a state component exceeds kDivergenceLimit.
RigidBodyState step(const RigidBodyState& state, const ControlVector& u,
                    const Disturbance& d, const QuadParams& params, double dt);

}  // namespace dsim

#endif  // DSIM_DYNAMICS_HPP
