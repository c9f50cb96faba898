#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numeric>
#include <random>
#include <vector>

#include "dsim/closed_loop.hpp"
#include "dsim/pida.hpp"
#include "dsim/scenario.hpp"

using namespace dsim;

TEST_CASE("gains validation") {
    PidaGains g;
    CHECK_NOTHROW(g.validate());
    g.tf = 0.0;
    CHECK_THROWS_AS(g.validate(), ConfigError);
    g = PidaGains{};
    g.ki = -1.0;
    CHECK_THROWS_AS(g.validate(), ConfigError);
}

TEST_CASE("pure proportional when other gains vanish") {
    PidaGains g;
    g.kp = 3.5;
    ChannelState s;
    for (int i = 0; i < 50; ++i) {
        const double u = pida_update(g, s, 1.2, 0.4, 0.001);
        CHECK(u == doctest::Approx(3.5 * 0.8).epsilon(1e-12));
    }
}

TEST_CASE("constant error: derivative terms decay, integral ramps") {
    PidaGains g{2.0, 1.0, 4.0, 1.5, 0.05, Channel::kRoll};
    ChannelState s;
    const double dt = 0.001, e = 0.3;
    double u = 0.0;
    const int n = static_cast<int>(20.0 * g.tf / dt);
    for (int i = 0; i < n; ++i) u = pida_update(g, s, e, 0.0, dt);
    CHECK(std::abs(s.filt_deriv) < 1e-9);
    CHECK(std::abs(s.filt_accel) < 1e-9);
    const double t = n * dt;
    CHECK(u == doctest::Approx(g.kp * e + g.ki * e * t).epsilon(1e-3));
}

TEST_CASE("filtered derivative tracks the analytic step response") {
    PidaGains g{0.0, 0.0, 1.0, 0.0, 0.1, Channel::kRoll};
    ChannelState s;
    const double dt = 0.001;
    double f1_at_tf = 0.0;
    const int n = static_cast<int>(g.tf / dt);
    for (int i = 0; i < n; ++i) f1_at_tf = pida_update(g, s, 1.0, 0.0, dt);
    // Unit-step error through sL(s): f1(t) = (1/Tf) exp(-t/Tf).
    const double expected = (1.0 / g.tf) * std::exp(-1.0);
    CHECK(std::abs(f1_at_tf - expected) / expected < 0.01);
}

TEST_CASE("per-channel linearity") {
    PidaGains g{2.0, 0.7, 3.0, 0.9, 0.04, Channel::kPitch};
    std::mt19937_64 rng(5);
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::vector<double> errors(400);
    for (auto& e : errors) e = gauss(rng);

    const double k = -2.7;
    ChannelState s1, s2;
    for (double e : errors) {
        const double u1 = pida_update(g, s1, e, 0.0, 0.001);
        const double u2 = pida_update(g, s2, k * e, 0.0, 0.001);
        CHECK(u2 == doctest::Approx(k * u1).epsilon(1e-9));
    }
    CHECK(s2.integrator == doctest::Approx(k * s1.integrator).epsilon(1e-9));
    CHECK(s2.filt_deriv == doctest::Approx(k * s1.filt_deriv).epsilon(1e-9));
}

TEST_CASE("dt guards") {
    PidaGains g;
    g.tf = 0.01;
    ChannelState s;
    CHECK_THROWS_AS(pida_update(g, s, 1.0, 0.0, 0.0), NonPositiveDt);
    CHECK_THROWS_AS(pida_update(g, s, 1.0, 0.0, -0.1), NonPositiveDt);
    CHECK_THROWS_AS(pida_update(g, s, 1.0, 0.0, 0.02), DomainError);
}

TEST_CASE("filter attenuates measurement noise versus a raw difference") {
    PidaGains g{0.0, 0.0, 1.0, 0.0, 0.04, Channel::kRoll};
    const double dt = 0.001;
    std::mt19937_64 rng(17);
    std::normal_distribution<double> gauss(0.0, 1.0);

    ChannelState s;
    double prev = 0.0;
    std::vector<double> filtered, raw;
    for (int i = 0; i < 20000; ++i) {
        const double e = gauss(rng);
        filtered.push_back(pida_update(g, s, e, 0.0, dt));
        raw.push_back((e - prev) / dt);
        prev = e;
    }
    auto variance = [](const std::vector<double>& xs) {
        const double mean = std::accumulate(xs.begin(), xs.end(), 0.0) / xs.size();
        double acc = 0.0;
        for (double x : xs) acc += (x - mean) * (x - mean);
        return acc / xs.size();
    };
    CHECK(variance(raw) / variance(filtered) >= 5.0);
}

TEST_CASE("halving dt changes the closed-loop trajectory marginally") {
    QuadParams prm;
    const std::array<PidaGains, 4> gains = default_gains();
    StepCommands commands;
    commands.initial = ControllerCommand{0.0, 0.0, 0.0, 0.0};
    commands.stepped = ControllerCommand{-5.0 * M_PI / 180.0, 10.0 * M_PI / 180.0,
                                         30.0 * M_PI / 180.0, 0.0};
    commands.step_time = 0.2;

    RigidBodyState start;
    auto run = [&](double dt) {
        ClosedLoopConfig config{dt, 2.0, 0};
        return run_step_simulation(prm, gains, commands, NoiseSettings{}, config, start);
    };
    const TrajectoryLog coarse = run(0.002);
    const TrajectoryLog fine = run(0.001);

    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < coarse.size(); ++i) {
        const double a = coarse.phi[i];
        const double b = fine.phi[2 * i];
        num += (a - b) * (a - b);
        den += b * b;
    }
    CHECK(std::sqrt(num / den) < 0.005);
}

TEST_CASE("determinism of the closed-loop run") {
    QuadParams prm;
    const std::array<PidaGains, 4> gains = default_gains();
    StepCommands commands;
    commands.initial = ControllerCommand{};
    commands.stepped = ControllerCommand{0.05, -0.05, 0.3, 1.0};
    commands.step_time = 0.1;
    NoiseSettings noise;
    noise.measurement_sigma_angle = 0.002;
    noise.measurement_sigma_altitude = 0.01;
    ClosedLoopConfig config{0.001, 1.5, 1234};

    const TrajectoryLog a = run_step_simulation(prm, gains, commands, noise, config,
                                                RigidBodyState{});
    const TrajectoryLog b = run_step_simulation(prm, gains, commands, noise, config,
                                                RigidBodyState{});
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a.phi[i] == b.phi[i]);
        CHECK(a.u_thrust[i] == b.u_thrust[i]);
    }
}

TEST_CASE("mimo wiring") {
    QuadParams prm;
    const std::array<PidaGains, 4> gains = default_gains();

    SUBCASE("zero error at hover gives pure feed-forward") {
        MimoPida controller(gains, prm);
        ControllerCommand cmd{0.0, 0.0, 0.0, 0.0};
        const ControlVector u = controller.update(cmd, {0.0, 0.0, 0.0, 0.0}, 0.001);
        CHECK(u.u_phi == 0.0);
        CHECK(u.u_theta == 0.0);
        CHECK(u.u_psi == 0.0);
        CHECK(u.u_thrust == doctest::Approx(prm.weight()).epsilon(1e-12));
    }
    SUBCASE("drone below the reference pushes thrust above the weight") {
        MimoPida controller(gains, prm);
        ControllerCommand cmd{0.0, 0.0, 0.0, 10.0};
        const ControlVector u = controller.update(cmd, {0.0, 0.0, 0.0, 9.0}, 0.001);
        CHECK(u.u_thrust > prm.weight());
    }
    SUBCASE("thrust clamps at zero and freezes the integrator") {
        MimoPida controller(gains, prm);
        ControllerCommand cmd{0.0, 0.0, 0.0, -100.0};
        const ControlVector u1 = controller.update(cmd, {0.0, 0.0, 0.0, 0.0}, 0.001);
        CHECK(u1.u_thrust == 0.0);
        const double integ_after_first = controller.states()[3].integrator;
        controller.update(cmd, {0.0, 0.0, 0.0, 0.0}, 0.001);
        CHECK(controller.states()[3].integrator == integ_after_first);
    }
    SUBCASE("yaw step converges and the torque washes out") {
        StepCommands commands;
        commands.initial = ControllerCommand{};
        commands.stepped = ControllerCommand{0.0, 0.0, 30.0 * M_PI / 180.0, 0.0};
        commands.step_time = 0.1;
        ClosedLoopConfig config{0.001, 6.0, 0};
        const TrajectoryLog log = run_step_simulation(prm, gains, commands, NoiseSettings{},
                                                      config, RigidBodyState{});
        CHECK(log.psi.back() == doctest::Approx(30.0 * M_PI / 180.0).epsilon(0.01));
        double tail_torque = 0.0;
        for (std::size_t i = log.size() - 500; i < log.size(); ++i)
            tail_torque = std::max(tail_torque, std::abs(log.u_psi[i]));
        CHECK(tail_torque < 0.01);
        double peak_torque = 0.0;
        for (double v : log.u_psi) peak_torque = std::max(peak_torque, std::abs(v));
        CHECK(peak_torque > 0.05);
    }
}

TEST_CASE("step metrics") {
    SUBCASE("first-order response settles at about 3.9 tau") {
        const double tau = 0.5, r = 2.0, dt = 0.001;
        std::vector<double> t, y;
        for (int i = 0; i <= 6000; ++i) {
            const double ti = i * dt;
            t.push_back(ti);
            y.push_back(ti < 1.0 ? 0.0 : r * (1.0 - std::exp(-(ti - 1.0) / tau)));
        }
        const StepMetrics m = step_response_metrics(t, y, r, 1.0);
        CHECK(m.overshoot_pct == 0.0);
        CHECK(m.settling_time_s == doctest::Approx(-std::log(0.02) * tau).epsilon(0.01));
        CHECK(m.steady_state_error < 0.01);
    }
    SUBCASE("pure step has zero overshoot and zero settling") {
        std::vector<double> t, y;
        for (int i = 0; i <= 1000; ++i) {
            t.push_back(i * 0.01);
            y.push_back(i * 0.01 < 5.0 ? 0.0 : 1.0);
        }
        const StepMetrics m = step_response_metrics(t, y, 1.0, 5.0);
        CHECK(m.overshoot_pct == 0.0);
        CHECK(m.settling_time_s == 0.0);
    }
    SUBCASE("a sinusoid that never converges throws") {
        std::vector<double> t, y;
        for (int i = 0; i <= 8000; ++i) {
            const double ti = i * 0.001;
            t.push_back(ti);
            y.push_back(1.0 + 0.5 * std::sin(8.0 * ti));
        }
        CHECK_THROWS_AS(step_response_metrics(t, y, 1.0, 0.5), NotSettled);
    }
    SUBCASE("overshoot measured against the step size") {
        std::vector<double> t, y;
        for (int i = 0; i <= 4000; ++i) {
            const double ti = i * 0.001;
            t.push_back(ti);
            const double s = ti < 0.5 ? 0.0 : 1.0 - std::exp(-4.0 * (ti - 0.5)) *
                                                   (std::cos(8.0 * (ti - 0.5)));
            y.push_back(2.0 * s);
        }
        const StepMetrics m = step_response_metrics(t, y, 2.0, 0.5);
        CHECK(m.overshoot_pct > 5.0);
        CHECK(m.settling_time_s > 0.1);
    }
}
