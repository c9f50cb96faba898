// dronesim: step/mission/tune/analyze/plot front end over the simulator.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>

#include <CLI11.hpp>

#include "dsim/harness.hpp"
#include "dsim/svg_plot.hpp"

namespace {

namespace fs = std::filesystem;
using namespace dsim;

constexpr int kExitOk = 0;
constexpr int kExitDiverged = 2;
constexpr int kExitConfig = 3;

struct CommonArgs {
    std::string scenario_path;
    std::optional<std::uint64_t> seed;
    std::string out_dir = "out";
};

Scenario load_with_overrides(const CommonArgs& args) {
    Scenario s = load_scenario(args.scenario_path);
    if (args.seed) {
        s.seed = *args.seed;
        s.sdsa.seed = *args.seed;
    }
    return s;
}

void print_step_report(const RunReport& report) {
    for (int i = 0; i < 4; ++i) {
        const char* name = channel_name(static_cast<Channel>(i));
        if (report.step_metrics[i]) {
            const auto& m = *report.step_metrics[i];
            std::printf("  %-8s overshoot %6.2f %%  settling %6.3f s  ss-error %.4g\n", name,
                        m.overshoot_pct, m.settling_time_s, m.steady_state_error);
        } else if (!report.channel_settled[i]) {
            std::printf("  %-8s did not settle\n", name);
        }
    }
    std::printf("  closed loop %s (max Re(eig) = %.4f)\n",
                report.stability.is_stable ? "stable" : "NOT stable",
                report.stability.max_real_part);
}

int cmd_step(const CommonArgs& args) {
    Scenario scenario = load_with_overrides(args);
    fs::create_directories(args.out_dir);
    StepRunResult result = run_step_response(scenario);
    const std::string traj = (fs::path(args.out_dir) / "trajectory.csv").string();
    export_trajectory(result.log, traj);
    result.report.trajectory_path = traj;
    save_report(result.report, (fs::path(args.out_dir) / "run_report.json").string());
    std::printf("step response '%s' (seed %llu)\n", scenario.name.c_str(),
                static_cast<unsigned long long>(scenario.seed));
    print_step_report(result.report);
    std::printf("  trajectory -> %s\n", traj.c_str());
    return kExitOk;
}

int cmd_mission(const CommonArgs& args) {
    Scenario scenario = load_with_overrides(args);
    fs::create_directories(args.out_dir);
    MissionRunResult result = run_mission(scenario);
    const std::string traj = (fs::path(args.out_dir) / "trajectory.csv").string();
    export_trajectory(result.log, traj);
    export_observations(result.observations,
                        (fs::path(args.out_dir) / "observations.csv").string());
    result.report.trajectory_path = traj;
    save_report(result.report, (fs::path(args.out_dir) / "run_report.json").string());

    const auto& m = *result.report.mission;
    std::printf("mission '%s' (seed %llu)\n", scenario.name.c_str(),
                static_cast<unsigned long long>(scenario.seed));
    if (m.reached_safe_distance)
        std::printf("  reached safe distance at t = %.3f s\n", m.time_to_safe_s);
    else
        std::printf("  never reached the safe distance\n");
    std::printf("  hold window distance [%.3f, %.3f] m, final %.3f m at height %.3f m\n",
                m.hold_min_distance, m.hold_max_distance, m.final_distance, m.final_height);
    std::printf("  final-quarter attitude: |roll| %.2f deg, |pitch| %.2f deg, |yaw err| %.2f deg\n",
                m.hold_max_roll * 180.0 / M_PI, m.hold_max_pitch * 180.0 / M_PI,
                m.hold_max_yaw_error * 180.0 / M_PI);
    std::printf("  trajectory -> %s\n", traj.c_str());
    return kExitOk;
}

int cmd_tune(const CommonArgs& args) {
    Scenario scenario = load_with_overrides(args);
    fs::create_directories(args.out_dir);
    TuneResult result = tune(scenario);
    for (const auto& [channel, mr] : result.channel_results) {
        const auto& g = result.gains[static_cast<int>(channel)];
        std::printf("%-8s cost %.4f after %d iterations (%ld evals)\n", channel_name(channel),
                    mr.best_value, mr.iterations, mr.evaluations);
        std::printf("  kp=%.4f ki=%.4f kd=%.4f ka=%.4f tf=%.4f\n", g.kp, g.ki, g.kd, g.ka, g.tf);
        export_history(mr, (fs::path(args.out_dir) /
                            (std::string("history_") + channel_name(channel) + ".csv"))
                               .string());
    }
    Scenario tuned = scenario;
    tuned.gains = result.gains;
    const std::string out = (fs::path(args.out_dir) / "tuned_scenario.json").string();
    save_scenario(tuned, out);
    std::printf("tuned scenario -> %s\n", out.c_str());
    return kExitOk;
}

int cmd_analyze(const CommonArgs& args) {
    Scenario scenario = load_with_overrides(args);
    fs::create_directories(args.out_dir);
    RigidBodyState eq = hover_state();
    eq.position = scenario.initial_state.position;
    const LinearModel model = linearize(scenario.quad, eq, hover_control(scenario.quad));
    const StabilityReport report = certify_closed_loop(tracking_submodel(model), scenario.gains);

    std::printf("closed-loop spectrum (%ld states):\n", static_cast<long>(report.eigenvalues.size()));
    for (int i = 0; i < report.eigenvalues.size(); ++i)
        std::printf("  % .6f %+.6fi\n", report.eigenvalues(i).real(),
                    report.eigenvalues(i).imag());
    std::printf("max real part %.6f -> %s", report.max_real_part,
                report.is_stable ? "stable" : "NOT stable");
    if (report.has_lyapunov) std::printf(" (Lyapunov certificate found)");
    std::printf("\n");

    RunReport run;
    run.scenario_name = scenario.name;
    run.seed = scenario.seed;
    run.stability = report;
    save_report(run, (fs::path(args.out_dir) / "analysis_report.json").string());
    return report.is_stable ? kExitOk : 1;
}

int cmd_plot(const std::string& csv_path, const std::string& out_dir) {
    const TrajectoryLog log = load_trajectory(csv_path);
    fs::create_directories(out_dir);
    const double rad2deg = 180.0 / M_PI;
    std::vector<double> phi_deg(log.size()), theta_deg(log.size()), psi_deg(log.size()),
        rphi(log.size()), rtheta(log.size()), rpsi(log.size()), alt(log.size()),
        ralt(log.size());
    for (std::size_t i = 0; i < log.size(); ++i) {
        phi_deg[i] = log.phi[i] * rad2deg;
        theta_deg[i] = log.theta[i] * rad2deg;
        psi_deg[i] = log.psi[i] * rad2deg;
        rphi[i] = log.ref_phi[i] * rad2deg;
        rtheta[i] = log.ref_theta[i] * rad2deg;
        rpsi[i] = log.ref_psi[i] * rad2deg;
        alt[i] = -log.z_e[i];
        ralt[i] = log.ref_alt[i];
    }

    write_svg_plot((fs::path(out_dir) / "angles.svg").string(), "Euler angles vs references",
                   "t (s)", "angle (deg)",
                   {{"roll", &log.t, &phi_deg, "#d62728"},
                    {"roll ref", &log.t, &rphi, "#ff9896"},
                    {"pitch", &log.t, &theta_deg, "#2ca02c"},
                    {"pitch ref", &log.t, &rtheta, "#98df8a"},
                    {"yaw", &log.t, &psi_deg, "#1f77b4"},
                    {"yaw ref", &log.t, &rpsi, "#aec7e8"}});
    write_svg_plot((fs::path(out_dir) / "altitude.svg").string(), "Altitude", "t (s)",
                   "altitude (m)",
                   {{"altitude", &log.t, &alt, "#1f77b4"}, {"reference", &log.t, &ralt, "#aec7e8"}});
    write_svg_plot((fs::path(out_dir) / "rates.svg").string(), "Body rates", "t (s)",
                   "rate (rad/s)",
                   {{"p", &log.t, &log.p, "#d62728"},
                    {"q", &log.t, &log.q, "#2ca02c"},
                    {"r", &log.t, &log.r, "#1f77b4"}});
    write_svg_plot((fs::path(out_dir) / "controls.svg").string(), "Control channels", "t (s)",
                   "torque (N m) / thrust (N)",
                   {{"u_phi", &log.t, &log.u_phi, "#d62728"},
                    {"u_theta", &log.t, &log.u_theta, "#2ca02c"},
                    {"u_psi", &log.t, &log.u_psi, "#1f77b4"},
                    {"u_T", &log.t, &log.u_thrust, "#9467bd"}});
    write_svg_plot((fs::path(out_dir) / "position.svg").string(), "Horizontal trajectory",
                   "x_E (m)", "y_E (m)", {{"path", &log.x_e, &log.y_e, "#1f77b4"}});
    write_svg_plot((fs::path(out_dir) / "safe_distance.svg").string(),
                   "Horizontal distance to target", "t (s)", "distance (m)",
                   {{"distance", &log.t, &log.safe_distance, "#1f77b4"}});
    std::printf("plots -> %s\n", out_dir.c_str());
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Quadcopter PIDA flight simulator"};
    app.require_subcommand(1);

    CommonArgs args;
    std::string plot_csv;

    auto add_common = [&](CLI::App* cmd, bool needs_scenario = true) {
        if (needs_scenario)
            cmd->add_option("--scenario", args.scenario_path, "scenario JSON file")->required();
        cmd->add_option("--seed", args.seed, "override the scenario seed");
        cmd->add_option("--out", args.out_dir, "output directory");
    };

    auto* step = app.add_subcommand("step", "run the four-channel step-response scenario");
    add_common(step);
    auto* mission = app.add_subcommand("mission", "run the target-approach mission");
    add_common(mission);
    auto* tune_cmd = app.add_subcommand("tune", "SDSA-tune controller channels");
    add_common(tune_cmd);
    auto* analyze = app.add_subcommand("analyze", "linearize and certify the closed loop");
    add_common(analyze);
    auto* plot = app.add_subcommand("plot", "render a trajectory CSV to SVG charts");
    plot->add_option("--csv", plot_csv, "trajectory CSV file")->required();
    plot->add_option("--out", args.out_dir, "output directory");

    CLI11_PARSE(app, argc, argv);

    try {
        if (step->parsed()) return cmd_step(args);
        if (mission->parsed()) return cmd_mission(args);
        if (tune_cmd->parsed()) return cmd_tune(args);
        if (analyze->parsed()) return cmd_analyze(args);
        if (plot->parsed()) return cmd_plot(plot_csv, args.out_dir);
    } catch (const Diverged& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitDiverged;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return kExitOk;
}
