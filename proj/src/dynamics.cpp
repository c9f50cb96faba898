#include "dsim/dynamics.hpp"

#include <cmath>

namespace dsim {

void QuadParams::validate() const {
    auto positive = [](double v, const char* name) {
        if (!(v > 0.0) || !std::isfinite(v))
            throw ConfigError(std::string("quad parameter ") + name + " must be strictly positive");
    };
    positive(mass, "mass");
    positive(arm_length, "arm_length");
    positive(gravity, "gravity");
    positive(force_to_torque, "force_to_torque");
    positive(inertia_xx, "inertia_xx");
    positive(inertia_yy, "inertia_yy");
    positive(inertia_zz, "inertia_zz");
    positive(rotor_inertia, "rotor_inertia");
    positive(max_rotor_force, "max_rotor_force");
    if (inertia_xx + inertia_yy < inertia_zz || inertia_yy + inertia_zz < inertia_xx ||
        inertia_zz + inertia_xx < inertia_yy)
        throw ConfigError("inertia tensor violates the triangle inequalities");
    if (!std::isfinite(rotor_residual_speed))
        throw ConfigError("rotor_residual_speed must be finite");
}

RigidBodyState::Vec12 RigidBodyState::to_vector() const {
    Vec12 v;
    v << euler, body_rates, body_velocity, position;
    return v;
}

RigidBodyState RigidBodyState::from_vector(const Vec12& v) {
    RigidBodyState s;
    s.euler = v.segment<3>(0);
    s.body_rates = v.segment<3>(3);
    s.body_velocity = v.segment<3>(6);
    s.position = v.segment<3>(9);
    return s;
}

bool RigidBodyState::all_finite() const {
    return to_vector().allFinite();
}

namespace {

void check_pitch(double theta) {
    if (std::abs(theta) >= M_PI_2 - kSingularityMargin) throw SingularAttitude(theta);
}

}  // namespace

Eigen::Matrix3d body_to_earth_rotation(const Eigen::Vector3d& euler) {
    const double cphi = std::cos(euler.x()), sphi = std::sin(euler.x());
    const double cth = std::cos(euler.y()), sth = std::sin(euler.y());
    const double cpsi = std::cos(euler.z()), spsi = std::sin(euler.z());
    Eigen::Matrix3d r;
    r << cpsi * cth, cpsi * sth * sphi - spsi * cphi, cpsi * sth * cphi + spsi * sphi,
         spsi * cth, spsi * sth * sphi + cpsi * cphi, spsi * sth * cphi - cpsi * sphi,
         -sth,       cth * sphi,                      cth * cphi;
    return r;
}

Eigen::Vector3d euler_rates_to_body_rates(const Eigen::Vector3d& euler,
                                          const Eigen::Vector3d& euler_rates) {
    check_pitch(euler.y());
    const double cphi = std::cos(euler.x()), sphi = std::sin(euler.x());
    const double cth = std::cos(euler.y()), sth = std::sin(euler.y());
    Eigen::Matrix3d w;
    w << 1.0, 0.0, -sth,
         0.0, cphi, cth * sphi,
         0.0, -sphi, cth * cphi;
    return w * euler_rates;
}

Eigen::Vector3d body_rates_to_euler_rates(const Eigen::Vector3d& euler,
                                          const Eigen::Vector3d& body_rates) {
    check_pitch(euler.y());
    const double cphi = std::cos(euler.x()), sphi = std::sin(euler.x());
    const double cth = std::cos(euler.y()), tth = std::tan(euler.y());
    const double p = body_rates.x(), q = body_rates.y(), r = body_rates.z();
    return {p + q * sphi * tth + r * cphi * tth,
            q * cphi - r * sphi,
            (q * sphi + r * cphi) / cth};
}

ControlVector mix_forces_to_controls(const RotorForces& f, const QuadParams& params) {
    const double l = params.arm_length, c = params.force_to_torque;
    ControlVector u;
    u.u_phi = l * (f.f2 - f.f4);
    u.u_theta = l * (f.f3 - f.f1);
    u.u_psi = c * (-f.f1 + f.f2 - f.f3 + f.f4);
    u.u_thrust = f.f1 + f.f2 + f.f3 + f.f4;
    return u;
}

ForceAllocation controls_to_forces(const ControlVector& u, const QuadParams& params) {
    const double l = params.arm_length, c = params.force_to_torque;
    // Split into the opposing-pair sums, then the in-pair differences.
    const double pair13 = 0.5 * (u.u_thrust - u.u_psi / c);
    const double pair24 = 0.5 * (u.u_thrust + u.u_psi / c);
    ForceAllocation out;
    out.forces.f1 = 0.5 * (pair13 - u.u_theta / l);
    out.forces.f2 = 0.5 * (pair24 + u.u_phi / l);
    out.forces.f3 = 0.5 * (pair13 + u.u_theta / l);
    out.forces.f4 = 0.5 * (pair24 - u.u_phi / l);
    for (double* f : {&out.forces.f1, &out.forces.f2, &out.forces.f3, &out.forces.f4}) {
        if (*f < 0.0) {
            *f = 0.0;
            out.saturated = true;
        } else if (*f > params.max_rotor_force) {
            *f = params.max_rotor_force;
            out.saturated = true;
        }
    }
    return out;
}

Disturbance gyroscopic_disturbance(const Eigen::Vector3d& body_rates,
                                   const std::array<double, 4>& rotor_speeds,
                                   const QuadParams& params) {
    double residual = 0.0;
    for (int i = 0; i < 4; ++i)
        residual += ((i + 1) % 2 == 0 ? rotor_speeds[i] : -rotor_speeds[i]);
    return gyroscopic_disturbance(body_rates, residual, params);
}

Disturbance gyroscopic_disturbance(const Eigen::Vector3d& body_rates,
                                   double residual_speed, const QuadParams& params) {
    Disturbance d;
    d.residual_speed = residual_speed;
    d.d_phi = body_rates.y() * params.rotor_inertia * residual_speed;
    d.d_theta = -body_rates.x() * params.rotor_inertia * residual_speed;
    d.d_psi = 0.0;
    return d;
}

RigidBodyState state_derivative(const RigidBodyState& state, const ControlVector& u,
                                const Disturbance& d, const QuadParams& params) {
    const double p = state.body_rates.x(), q = state.body_rates.y(), r = state.body_rates.z();
    const double ub = state.body_velocity.x(), vb = state.body_velocity.y(),
                 wb = state.body_velocity.z();
    const double g = params.gravity, m = params.mass;
    const double cphi = std::cos(state.euler.x()), sphi = std::sin(state.euler.x());
    const double cth = std::cos(state.euler.y()), sth = std::sin(state.euler.y());

    RigidBodyState dot;
    dot.body_velocity.x() = r * vb - q * wb - g * sth;
    dot.body_velocity.y() = p * wb - r * ub + g * sphi * cth;
    // Written over a common denominator so thrust exactly equal to the local
    // weight component cancels without rounding residue.
    dot.body_velocity.z() = q * ub - p * vb + (m * g * cth * cphi - u.u_thrust) / m;

    dot.body_rates.x() =
        ((params.inertia_yy - params.inertia_zz) * q * r + u.u_phi + d.d_phi) / params.inertia_xx;
    dot.body_rates.y() =
        ((params.inertia_zz - params.inertia_xx) * p * r + u.u_theta + d.d_theta) / params.inertia_yy;
    dot.body_rates.z() =
        ((params.inertia_xx - params.inertia_yy) * p * q + u.u_psi + d.d_psi) / params.inertia_zz;

    dot.euler = body_rates_to_euler_rates(state.euler, state.body_rates);
    dot.position = body_to_earth_rotation(state.euler) * state.body_velocity;
    return dot;
}

RigidBodyState step(const RigidBodyState& state, const ControlVector& u,
                    const Disturbance& d, const QuadParams& params, double dt) {
    if (!(dt > 0.0)) throw NonPositiveDt(dt);
    if (dt > kMaxStepDt) throw DomainError("dt exceeds the maximum step of 0.05 s");

    using Vec12 = RigidBodyState::Vec12;
    const Vec12 x0 = state.to_vector();
    auto deriv = [&](const Vec12& x) {
        return state_derivative(RigidBodyState::from_vector(x), u, d, params).to_vector();
    };
    const Vec12 k1 = deriv(x0);
    const Vec12 k2 = deriv(x0 + 0.5 * dt * k1);
    const Vec12 k3 = deriv(x0 + 0.5 * dt * k2);
    const Vec12 k4 = deriv(x0 + dt * k3);
    const Vec12 x1 = x0 + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);

    if (!x1.allFinite() || x1.cwiseAbs().maxCoeff() > kDivergenceLimit)
        throw Diverged(0.0, x1.cwiseAbs().maxCoeff());
    return RigidBodyState::from_vector(x1);
}

}  // namespace dsim
