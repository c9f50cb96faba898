#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "dsim/dynamics.hpp"

using namespace dsim;
using Eigen::Vector3d;

namespace {

// Eqs of motion transcribed independently of the implementation; the oracle
// for state_derivative equivalence checks.
Eigen::Matrix<double, 6, 1> motion_equations_oracle(const RigidBodyState& s,
                                                    const ControlVector& u, const Disturbance& d,
                                                    const QuadParams& prm) {
    const double phi = s.euler.x(), th = s.euler.y();
    const double p = s.body_rates.x(), q = s.body_rates.y(), r = s.body_rates.z();
    const double ub = s.body_velocity.x(), vb = s.body_velocity.y(), wb = s.body_velocity.z();
    Eigen::Matrix<double, 6, 1> out;
    out(0) = r * vb - q * wb - prm.gravity * std::sin(th);
    out(1) = p * wb - r * ub + prm.gravity * std::sin(phi) * std::cos(th);
    out(2) = q * ub - p * vb + prm.gravity * std::cos(th) * std::cos(phi) - u.u_thrust / prm.mass;
    out(3) = ((prm.inertia_yy - prm.inertia_zz) * q * r + u.u_phi + d.d_phi) / prm.inertia_xx;
    out(4) = ((prm.inertia_zz - prm.inertia_xx) * p * r + u.u_theta + d.d_theta) / prm.inertia_yy;
    out(5) = ((prm.inertia_xx - prm.inertia_yy) * p * q + u.u_psi + d.d_psi) / prm.inertia_zz;
    return out;
}

RigidBodyState random_state(std::mt19937_64& rng, double pitch_limit = 1.3) {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    RigidBodyState s;
    s.euler = Vector3d(3.0 * u(rng), pitch_limit * u(rng), 3.0 * u(rng));
    s.body_rates = Vector3d(2.0 * u(rng), 2.0 * u(rng), 2.0 * u(rng));
    s.body_velocity = Vector3d(5.0 * u(rng), 5.0 * u(rng), 5.0 * u(rng));
    s.position = Vector3d(20.0 * u(rng), 20.0 * u(rng), 20.0 * u(rng));
    return s;
}

}  // namespace

TEST_CASE("quad params validate") {
    QuadParams p;
    CHECK_NOTHROW(p.validate());
    p.mass = 0.0;
    CHECK_THROWS_AS(p.validate(), ConfigError);
    p = QuadParams{};
    p.inertia_zz = 1.0;  // breaks Ixx + Iyy >= Izz
    CHECK_THROWS_AS(p.validate(), ConfigError);
}

TEST_CASE("euler-rate map is identity at zero attitude") {
    const Vector3d rates(0.4, -0.7, 1.1);
    const Vector3d omega = euler_rates_to_body_rates(Vector3d::Zero(), rates);
    CHECK(omega.isApprox(rates, 1e-15));
    const Vector3d back = body_rates_to_euler_rates(Vector3d::Zero(), rates);
    CHECK(back.isApprox(rates, 1e-15));
}

TEST_CASE("euler-rate map matches hand evaluation") {
    const Vector3d omega =
        euler_rates_to_body_rates(Vector3d(0.1, 0.2, 0.3), Vector3d(0.5, -0.2, 0.1));
    CHECK(omega.x() == doctest::Approx(0.48013307).epsilon(1e-7));
    CHECK(omega.y() == doctest::Approx(-0.18921649).epsilon(1e-7));
    CHECK(omega.z() == doctest::Approx(0.11748372).epsilon(1e-7));

    const Vector3d rates =
        body_rates_to_euler_rates(Vector3d(0.3, 0.5, -1.0), Vector3d(0.1, 0.1, 0.1));
    CHECK(rates.x() == doctest::Approx(0.16833461).epsilon(1e-7));
    CHECK(rates.y() == doctest::Approx(0.06598163).epsilon(1e-7));
    CHECK(rates.z() == doctest::Approx(0.14253436).epsilon(1e-7));
}

TEST_CASE("euler-rate map throws near the pitch singularity") {
    const Vector3d near_singular(0.0, M_PI_2 - 1e-9, 0.0);
    CHECK_THROWS_AS(euler_rates_to_body_rates(near_singular, Vector3d(1, 1, 1)),
                    SingularAttitude);
    CHECK_THROWS_AS(body_rates_to_euler_rates(near_singular, Vector3d(1, 1, 1)),
                    SingularAttitude);
}

TEST_CASE("euler-rate round trip over random attitudes") {
    std::mt19937_64 rng(7);
    double worst = 0.0;
    for (int i = 0; i < 1000; ++i) {
        RigidBodyState s = random_state(rng, 1.4 - 1e-3);
        const Vector3d rates = body_rates_to_euler_rates(s.euler, s.body_rates);
        const Vector3d omega = euler_rates_to_body_rates(s.euler, rates);
        worst = std::max(worst, (omega - s.body_rates).norm());
    }
    CHECK(worst < 1e-10);
}

TEST_CASE("mixing matches the published rows") {
    QuadParams prm;
    SUBCASE("hover split") {
        const double f = prm.weight() / 4.0;
        const ControlVector u = mix_forces_to_controls(RotorForces{f, f, f, f}, prm);
        CHECK(u.u_phi == 0.0);
        CHECK(u.u_theta == 0.0);
        CHECK(u.u_psi == 0.0);
        CHECK(u.u_thrust == doctest::Approx(7.848).epsilon(1e-12));
    }
    SUBCASE("single rotor") {
        const ControlVector u = mix_forces_to_controls(RotorForces{0, 1, 0, 0}, prm);
        CHECK(u.u_phi == doctest::Approx(0.2));
        CHECK(u.u_theta == 0.0);
        CHECK(u.u_psi == doctest::Approx(3e-5));
        CHECK(u.u_thrust == 1.0);
    }
    SUBCASE("linearity in the forces") {
        std::mt19937_64 rng(3);
        std::uniform_real_distribution<double> fr(0.0, 5.0);
        const RotorForces f{fr(rng), fr(rng), fr(rng), fr(rng)};
        const double k = 3.25;
        const ControlVector u1 = mix_forces_to_controls(f, prm);
        const ControlVector u2 =
            mix_forces_to_controls(RotorForces{k * f.f1, k * f.f2, k * f.f3, k * f.f4}, prm);
        CHECK(u2.u_phi == doctest::Approx(k * u1.u_phi));
        CHECK(u2.u_theta == doctest::Approx(k * u1.u_theta));
        CHECK(u2.u_psi == doctest::Approx(k * u1.u_psi));
        CHECK(u2.u_thrust == doctest::Approx(k * u1.u_thrust));
    }
}

TEST_CASE("force allocation inverts the mixing") {
    QuadParams prm;
    SUBCASE("hover") {
        ControlVector u;
        u.u_thrust = prm.weight();
        const ForceAllocation alloc = controls_to_forces(u, prm);
        CHECK_FALSE(alloc.saturated);
        for (double f : {alloc.forces.f1, alloc.forces.f2, alloc.forces.f3, alloc.forces.f4})
            CHECK(f == doctest::Approx(prm.weight() / 4.0).epsilon(1e-12));
    }
    SUBCASE("round trip on admissible controls") {
        std::mt19937_64 rng(11);
        std::uniform_real_distribution<double> fr(0.1, 4.0);
        for (int i = 0; i < 200; ++i) {
            const RotorForces f{fr(rng), fr(rng), fr(rng), fr(rng)};
            const ControlVector u = mix_forces_to_controls(f, prm);
            const ForceAllocation alloc = controls_to_forces(u, prm);
            CHECK_FALSE(alloc.saturated);
            const ControlVector u2 = mix_forces_to_controls(alloc.forces, prm);
            CHECK(std::abs(u2.u_phi - u.u_phi) < 1e-10);
            CHECK(std::abs(u2.u_theta - u.u_theta) < 1e-10);
            CHECK(std::abs(u2.u_psi - u.u_psi) < 1e-10);
            CHECK(std::abs(u2.u_thrust - u.u_thrust) < 1e-10);
        }
    }
    SUBCASE("pure torque at zero thrust saturates") {
        ControlVector u;
        u.u_phi = 1.0;
        const ForceAllocation alloc = controls_to_forces(u, prm);
        CHECK(alloc.saturated);
        CHECK(alloc.forces.f4 == 0.0);
    }
}

TEST_CASE("gyroscopic disturbance") {
    QuadParams prm;
    SUBCASE("equal rotor speeds cancel") {
        const Disturbance d =
            gyroscopic_disturbance(Vector3d(1.0, 2.0, 0.5), {400.0, 400.0, 400.0, 400.0}, prm);
        CHECK(d.residual_speed == 0.0);
        CHECK(d.d_phi == 0.0);
        CHECK(d.d_theta == 0.0);
    }
    SUBCASE("zero rates give zero disturbance") {
        const Disturbance d =
            gyroscopic_disturbance(Vector3d::Zero(), {100.0, 300.0, 200.0, 50.0}, prm);
        CHECK(d.d_phi == 0.0);
        CHECK(d.d_theta == 0.0);
    }
    SUBCASE("direct evaluation") {
        const Disturbance d =
            gyroscopic_disturbance(Vector3d(1.0, 2.0, 0.0), {100.0, 200.0, 100.0, 200.0}, prm);
        CHECK(d.residual_speed == doctest::Approx(200.0));
        CHECK(d.d_phi == doctest::Approx(0.0332).epsilon(1e-10));
        CHECK(d.d_theta == doctest::Approx(-0.0166).epsilon(1e-10));
        CHECK(d.d_psi == 0.0);
    }
}

TEST_CASE("hover is an exact fixed point") {
    QuadParams prm;
    RigidBodyState hover;
    ControlVector u;
    u.u_thrust = prm.weight();
    const RigidBodyState dot = state_derivative(hover, u, Disturbance{}, prm);
    CHECK(dot.to_vector().norm() == 0.0);
}

TEST_CASE("free fall accelerates at g") {
    QuadParams prm;
    RigidBodyState s;
    const RigidBodyState dot = state_derivative(s, ControlVector{}, Disturbance{}, prm);
    CHECK(dot.body_velocity.z() == doctest::Approx(9.81).epsilon(1e-12));

    for (int i = 0; i < 100; ++i) s = step(s, ControlVector{}, Disturbance{}, prm, 0.01);
    CHECK(s.body_velocity.z() == doctest::Approx(9.81).epsilon(1e-6));
    CHECK(s.position.z() == doctest::Approx(0.5 * 9.81).epsilon(1e-6));
}

TEST_CASE("state derivative matches the transcription oracle") {
    QuadParams prm;
    std::mt19937_64 rng(99);
    std::uniform_real_distribution<double> uc(-3.0, 3.0);
    double worst = 0.0;
    for (int i = 0; i < 10000; ++i) {
        const RigidBodyState s = random_state(rng);
        ControlVector u{uc(rng), uc(rng), uc(rng), std::abs(uc(rng)) * 5.0};
        Disturbance d;
        d.d_phi = uc(rng) * 0.1;
        d.d_theta = uc(rng) * 0.1;
        const RigidBodyState dot = state_derivative(s, u, d, prm);
        Eigen::Matrix<double, 6, 1> got;
        got << dot.body_velocity, dot.body_rates;
        const Eigen::Matrix<double, 6, 1> want = motion_equations_oracle(s, u, d, prm);
        worst = std::max(worst, (got - want).cwiseAbs().maxCoeff());
    }
    CHECK(worst < 1e-12);
}

TEST_CASE("yaw reduction: r' = u_psi / Izz when p = q = 0") {
    QuadParams prm;
    RigidBodyState s;
    s.body_rates = Vector3d(0.0, 0.0, 0.7);
    ControlVector u;
    u.u_psi = 0.31;
    u.u_thrust = prm.weight();
    const RigidBodyState dot = state_derivative(s, u, Disturbance{}, prm);
    CHECK(dot.body_rates.z() == doctest::Approx(0.31 / prm.inertia_zz).epsilon(1e-14));
}

TEST_CASE("hover step is a fixed point of RK4") {
    QuadParams prm;
    RigidBodyState hover;
    ControlVector u;
    u.u_thrust = prm.weight();
    RigidBodyState s = hover;
    for (int i = 0; i < 1000; ++i) s = step(s, u, Disturbance{}, prm, 0.01);
    CHECK((s.to_vector() - hover.to_vector()).norm() < 1e-12);
}

TEST_CASE("RK4 exhibits fourth-order convergence") {
    QuadParams prm;
    RigidBodyState s0;
    s0.body_rates = Vector3d(0.3, -0.2, 0.4);
    s0.body_velocity = Vector3d(1.0, -0.5, 0.2);
    ControlVector u{0.02, -0.015, 0.01, 0.9 * prm.weight()};

    auto integrate = [&](double dt) {
        RigidBodyState s = s0;
        const int n = static_cast<int>(std::lround(1.0 / dt));
        for (int i = 0; i < n; ++i) s = step(s, u, Disturbance{}, prm, dt);
        return s.to_vector();
    };
    const auto x1 = integrate(0.004);
    const auto x2 = integrate(0.002);
    const auto x3 = integrate(0.001);
    const double e1 = (x1 - x2).norm();
    const double e2 = (x2 - x3).norm();
    const double order = std::log2(e1 / e2);
    CHECK(order > 3.8);
    CHECK(order < 4.5);
}

TEST_CASE("step guards") {
    QuadParams prm;
    RigidBodyState s;
    CHECK_THROWS_AS(step(s, ControlVector{}, Disturbance{}, prm, 0.0), NonPositiveDt);
    CHECK_THROWS_AS(step(s, ControlVector{}, Disturbance{}, prm, 0.06), DomainError);

    s.body_velocity.x() = 9.9e5;
    ControlVector u{50.0, 0.0, 0.0, 1e4};
    s.euler.y() = 1.2;
    bool threw = false;
    try {
        for (int i = 0; i < 2000; ++i) s = step(s, u, Disturbance{}, prm, 0.05);
    } catch (const Diverged&) {
        threw = true;
    } catch (const SingularAttitude&) {
        threw = true;  // tumbling into the pitch guard also aborts the run
    }
    CHECK(threw);
}

TEST_CASE("free-fall energy is conserved") {
    QuadParams prm;
    RigidBodyState s;
    s.body_velocity = Vector3d(2.0, -1.0, 0.5);
    s.body_rates = Vector3d(0.4, 0.3, -0.2);
    auto energy = [&](const RigidBodyState& st) {
        const Vector3d v = body_to_earth_rotation(st.euler) * st.body_velocity;
        return 0.5 * prm.mass * v.squaredNorm() - prm.mass * prm.gravity * st.position.z();
    };
    const double e0 = energy(s);
    for (int i = 0; i < 5000; ++i) s = step(s, ControlVector{}, Disturbance{}, prm, 0.001);
    CHECK(std::abs(energy(s) - e0) / std::abs(e0) < 1e-6);
}
