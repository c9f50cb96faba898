#include "dsim/harness.hpp"

#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>
#include <sstream>

#include <json.hpp>

namespace dsim {

namespace {

StabilityReport certify_scenario(const Scenario& scenario) {
    RigidBodyState eq = hover_state();
    eq.position = scenario.initial_state.position;
    const LinearModel model = linearize(scenario.quad, eq, hover_control(scenario.quad));
    return certify_closed_loop(tracking_submodel(model), scenario.gains);
}

}  // namespace

std::array<std::optional<StepMetrics>, 4> metrics_from_log(const TrajectoryLog& log,
                                                           const StepCommands& commands) {
    std::array<std::optional<StepMetrics>, 4> out;
    const std::array<double, 4> before = {commands.initial.roll, commands.initial.pitch,
                                          commands.initial.yaw, commands.initial.altitude};
    const std::array<double, 4> after = {commands.stepped.roll, commands.stepped.pitch,
                                         commands.stepped.yaw, commands.stepped.altitude};
    const std::vector<double> altitude = log.altitude();
    for (int i = 0; i < 4; ++i) {
        if (before[i] == after[i]) continue;
        const Channel channel = static_cast<Channel>(i);
        const std::vector<double>& series =
            channel == Channel::kAltitude ? altitude : log.channel_series(channel);
        out[i] = step_response_metrics(log.t, series, after[i], commands.step_time);
    }
    return out;
}

StepRunResult run_step_response(const Scenario& scenario) {
    scenario.validate();
    const StepCommands commands = scenario.step_commands();
    ClosedLoopConfig config{scenario.dt, scenario.duration, scenario.seed};

    StepRunResult result;
    result.log = run_step_simulation(scenario.quad, scenario.gains, commands, scenario.noise,
                                     config, scenario.initial_state);
    result.report.scenario_name = scenario.name;
    result.report.seed = scenario.seed;
    const std::vector<double> altitude = result.log.altitude();
    const std::array<double, 4> before = {commands.initial.roll, commands.initial.pitch,
                                          commands.initial.yaw, commands.initial.altitude};
    const std::array<double, 4> after = {commands.stepped.roll, commands.stepped.pitch,
                                         commands.stepped.yaw, commands.stepped.altitude};
    for (int i = 0; i < 4; ++i) {
        if (before[i] == after[i]) continue;
        const Channel channel = static_cast<Channel>(i);
        const std::vector<double>& series =
            channel == Channel::kAltitude ? altitude : result.log.channel_series(channel);
        try {
            result.report.step_metrics[i] =
                step_response_metrics(result.log.t, series, after[i], commands.step_time);
        } catch (const NotSettled&) {
            result.report.channel_settled[i] = false;
        }
    }
    result.report.stability = certify_scenario(scenario);
    return result;
}

MissionRunResult run_mission(const Scenario& scenario) {
    scenario.validate();
    if (!scenario.target) throw ConfigError("mission requires a 'target' section");
    const TargetSettings& target = *scenario.target;
    const Eigen::Vector3d head =
        target.position + Eigen::Vector3d(0.0, 0.0, -target.height);

    std::mt19937_64 meas_rng(scenario.seed * 0x9e3779b97f4a7c15ULL + 1);
    std::mt19937_64 dist_rng(scenario.seed * 0x9e3779b97f4a7c15ULL + 2);
    std::mt19937_64 pixel_rng(scenario.seed * 0x9e3779b97f4a7c15ULL + 3);
    std::normal_distribution<double> gauss(0.0, 1.0);

    MimoPida controller(scenario.gains, scenario.quad);
    GuidanceState guidance_mode;
    RigidBodyState state = scenario.initial_state;
    const auto nsteps =
        static_cast<std::size_t>(std::llround(scenario.duration / scenario.dt));

    MissionRunResult result;
    result.log.reserve(nsteps + 1);
    result.report.scenario_name = scenario.name;
    result.report.seed = scenario.seed;

    ControllerCommand refs{0.0, 0.0, 0.0, state.altitude()};
    auto horizontal_distance = [&](const RigidBodyState& s) {
        const double dx = target.position.x() - s.position.x();
        const double dy = target.position.y() - s.position.y();
        return std::hypot(dx, dy);
    };
    result.log.append(0.0, state, ControlVector{}, refs, horizontal_distance(state));

    MissionMetrics mission;
    mission.hold_min_distance = std::numeric_limits<double>::infinity();
    double invalid_streak = 0.0;
    bool have_fix = false;
    Eigen::Vector3d perceived_head = head;  // replaced on first valid frame

    for (std::size_t k = 0; k < nsteps; ++k) {
        const double tk = static_cast<double>(k) * scenario.dt;

        if (k % static_cast<std::size_t>(scenario.perception_every_n_steps) == 0) {
            bool valid = false;
            try {
                const StereoObservation obs =
                    observe(head, state, scenario.camera, scenario.noise.pixel_sigma, pixel_rng,
                            scenario.noise.dropout_probability);
                if (obs.valid) {
                    const Eigen::Vector3d cam = reconstruct(obs, scenario.camera);
                    perceived_head = state.position +
                                     body_to_earth_rotation(state.euler) * camera_to_body(cam);
                    valid = true;
                    result.observations.t.push_back(tk);
                    result.observations.u.push_back(obs.u);
                    result.observations.v.push_back(obs.v);
                    result.observations.disparity.push_back(obs.disparity);
                    result.observations.x.push_back(cam.x());
                    result.observations.y.push_back(cam.y());
                    result.observations.z.push_back(cam.z());
                }
            } catch (const BehindCamera&) {
            } catch (const DegenerateDisparity&) {
            }

            if (valid) {
                have_fix = true;
                invalid_streak = 0.0;
                RelativeKinematics rel;
                rel.relative_position = perceived_head - state.position;
                rel.pursuer_velocity = body_to_earth_rotation(state.euler) * state.body_velocity;
                rel.target_velocity = Eigen::Vector3d::Zero();
                Eigen::Vector3d accel = Eigen::Vector3d::Zero();
                try {
                    accel = ppn_acceleration(rel, scenario.guidance.navigation_constant,
                                             scenario.guidance.range_min);
                } catch (const TargetReached&) {
                    // Inside the guard radius; hold logic takes over with zero
                    // feed-forward.
                }
                const GuidanceCommand cmd = acceleration_to_references(
                    accel, rel, state, target.height, scenario.guidance, guidance_mode);
                refs = cmd.references;
            } else {
                invalid_streak += scenario.dt * scenario.perception_every_n_steps;
                if (invalid_streak > 1.0 || (!have_fix && tk > 1.0))
                    throw TargetNeverAcquired(tk);
            }
        }

        std::array<double, 4> measured = {state.euler.x(), state.euler.y(), state.euler.z(),
                                          state.altitude()};
        if (scenario.noise.measurement_sigma_angle > 0.0) {
            measured[0] += scenario.noise.measurement_sigma_angle * gauss(meas_rng);
            measured[1] += scenario.noise.measurement_sigma_angle * gauss(meas_rng);
            measured[2] += scenario.noise.measurement_sigma_angle * gauss(meas_rng);
        }
        if (scenario.noise.measurement_sigma_altitude > 0.0)
            measured[3] += scenario.noise.measurement_sigma_altitude * gauss(meas_rng);

        const ControlVector commanded = controller.update(refs, measured, scenario.dt);
        const ControlVector realized =
            mix_forces_to_controls(controls_to_forces(commanded, scenario.quad).forces,
                                   scenario.quad);

        Disturbance d = gyroscopic_disturbance(state.body_rates,
                                               scenario.quad.rotor_residual_speed, scenario.quad);
        if (scenario.noise.roll_disturbance_enabled &&
            tk >= scenario.noise.roll_disturbance_start_s)
            d.d_phi += scenario.noise.roll_disturbance_sigma * gauss(dist_rng);

        try {
            state = step(state, realized, d, scenario.quad, scenario.dt);
        } catch (const Diverged&) {
            throw Diverged(tk, state.to_vector().cwiseAbs().maxCoeff());
        }

        const double t_next = tk + scenario.dt;
        const double dist = horizontal_distance(state);
        result.log.append(t_next, state, realized, refs, dist);

        if (!mission.reached_safe_distance && dist <= scenario.guidance.safe_distance) {
            mission.reached_safe_distance = true;
            mission.time_to_safe_s = t_next;
        }
        if (guidance_mode.hold_engaged) {
            mission.hold_engaged = true;
            mission.hold_min_distance = std::min(mission.hold_min_distance, dist);
            mission.hold_max_distance = std::max(mission.hold_max_distance, dist);
        }
    }

    // Attitude convergence over the final quarter of the run.
    const std::size_t tail_start = result.log.size() - result.log.size() / 4;
    for (std::size_t i = tail_start; i < result.log.size(); ++i) {
        mission.hold_max_roll = std::max(mission.hold_max_roll, std::abs(result.log.phi[i]));
        mission.hold_max_pitch = std::max(mission.hold_max_pitch, std::abs(result.log.theta[i]));
        mission.hold_max_yaw_error = std::max(
            mission.hold_max_yaw_error, std::abs(result.log.psi[i] - result.log.ref_psi[i]));
    }
    mission.final_height = -result.log.z_e.back();
    mission.final_distance = result.log.safe_distance.back();
    if (!mission.hold_engaged) mission.hold_min_distance = 0.0;

    result.report.mission = mission;
    result.report.stability = certify_scenario(scenario);
    return result;
}

TuneResult tune(const Scenario& scenario) {
    scenario.validate();
    std::vector<Channel> channels = scenario.tune.channels;
    if (channels.empty())
        channels = {Channel::kRoll, Channel::kPitch, Channel::kYaw, Channel::kAltitude};

    const StepCommands commands = scenario.step_commands();
    TuneResult result;
    result.gains = scenario.gains;

    for (Channel channel : channels) {
        TuningObjective objective;
        objective.channel = channel;
        objective.quad = scenario.quad;
        objective.base_gains = scenario.gains;
        objective.initial_state = scenario.initial_state;
        objective.step_time = scenario.tune.step_time;
        objective.noise = scenario.noise;
        objective.dt = scenario.dt;
        objective.duration = scenario.tune.duration;
        objective.seed = scenario.seed;
        switch (channel) {
            case Channel::kRoll: objective.target_value = commands.stepped.roll; break;
            case Channel::kPitch: objective.target_value = commands.stepped.pitch; break;
            case Channel::kYaw: objective.target_value = commands.stepped.yaw; break;
            case Channel::kAltitude: objective.target_value = commands.stepped.altitude; break;
        }

        SdsaConfig config = scenario.sdsa;
        config.max_iterations = scenario.tune.max_iterations;
        config.seed = scenario.seed + static_cast<std::uint64_t>(channel) + 1;

        auto cost = [&objective](const Eigen::VectorXd& x) { return tuning_cost(x, objective); };
        MinimizeResult best = minimize(cost, tuning_bounds(), config);
        result.gains[static_cast<int>(channel)] = gains_from_vector(best.best_point, channel);
        result.channel_results.emplace(channel, std::move(best));
    }
    return result;
}

namespace {

void write_row(std::FILE* f, const TrajectoryLog& log, std::size_t i) {
    const std::vector<double>* cols[] = {
        &log.t, &log.x_e, &log.y_e, &log.z_e, &log.phi, &log.theta, &log.psi,
        &log.p, &log.q, &log.r, &log.u, &log.v, &log.w, &log.u_phi, &log.u_theta,
        &log.u_psi, &log.u_thrust, &log.ref_phi, &log.ref_theta, &log.ref_psi,
        &log.ref_alt, &log.safe_distance};
    bool first = true;
    for (const auto* col : cols) {
        std::fprintf(f, first ? "%.17g" : ",%.17g", (*col)[i]);
        first = false;
    }
    std::fputc('\n', f);
}

constexpr const char* kTrajectoryHeader =
    "t,x_E,y_E,z_E,phi,theta,psi,p,q,r,u,v,w,u_phi,u_theta,u_psi,u_T,"
    "ref_phi,ref_theta,ref_psi,ref_alt,safe_distance";

}  // namespace

void export_trajectory(const TrajectoryLog& log, const std::string& path) {
    std::FILE* f = std::fopen(path.c_str(), "w");
    if (!f) throw SimError("cannot write trajectory file: " + path);
    std::fprintf(f, "%s\n", kTrajectoryHeader);
    for (std::size_t i = 0; i < log.size(); ++i) write_row(f, log, i);
    std::fclose(f);
}

TrajectoryLog load_trajectory(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw SimError("cannot open trajectory file: " + path);
    std::string line;
    if (!std::getline(in, line) || line != kTrajectoryHeader)
        throw SimError("unexpected trajectory header in " + path);

    TrajectoryLog log;
    std::vector<double>* cols[] = {
        &log.t, &log.x_e, &log.y_e, &log.z_e, &log.phi, &log.theta, &log.psi,
        &log.p, &log.q, &log.r, &log.u, &log.v, &log.w, &log.u_phi, &log.u_theta,
        &log.u_psi, &log.u_thrust, &log.ref_phi, &log.ref_theta, &log.ref_psi,
        &log.ref_alt, &log.safe_distance};
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string cell;
        for (auto* col : cols) {
            if (!std::getline(ss, cell, ',')) throw SimError("short row in " + path);
            col->push_back(std::strtod(cell.c_str(), nullptr));
        }
    }
    return log;
}

void export_observations(const ObservationTrace& trace, const std::string& path) {
    std::FILE* f = std::fopen(path.c_str(), "w");
    if (!f) throw SimError("cannot write observation file: " + path);
    std::fprintf(f, "t,u,v,Y,x,y,z\n");
    for (std::size_t i = 0; i < trace.t.size(); ++i)
        std::fprintf(f, "%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n", trace.t[i], trace.u[i],
                     trace.v[i], trace.disparity[i], trace.x[i], trace.y[i], trace.z[i]);
    std::fclose(f);
}

void export_history(const MinimizeResult& result, const std::string& path) {
    std::FILE* f = std::fopen(path.c_str(), "w");
    if (!f) throw SimError("cannot write history file: " + path);
    std::fprintf(f, "iteration,best_value\n");
    for (const auto& [iter, value] : result.history)
        std::fprintf(f, "%d,%.17g\n", iter, value);
    std::fclose(f);
}

void save_report(const RunReport& report, const std::string& path) {
    nlohmann::json root;
    root["scenario"] = report.scenario_name;
    root["seed"] = report.seed;
    for (int i = 0; i < 4; ++i) {
        const char* name = channel_name(static_cast<Channel>(i));
        if (report.step_metrics[i]) {
            const auto& m = *report.step_metrics[i];
            root["step_metrics"][name] = {{"overshoot_pct", m.overshoot_pct},
                                          {"settling_time_s", m.settling_time_s},
                                          {"steady_state_error", m.steady_state_error}};
        } else if (!report.channel_settled[i]) {
            root["step_metrics"][name] = "not settled";
        }
    }
    if (report.mission) {
        const auto& m = *report.mission;
        root["mission"] = {{"reached_safe_distance", m.reached_safe_distance},
                           {"time_to_safe_s", m.time_to_safe_s},
                           {"hold_engaged", m.hold_engaged},
                           {"hold_min_distance", m.hold_min_distance},
                           {"hold_max_distance", m.hold_max_distance},
                           {"final_height", m.final_height},
                           {"final_distance", m.final_distance},
                           {"hold_max_roll_deg", m.hold_max_roll * 180.0 / M_PI},
                           {"hold_max_pitch_deg", m.hold_max_pitch * 180.0 / M_PI},
                           {"hold_max_yaw_error_deg", m.hold_max_yaw_error * 180.0 / M_PI}};
    }
    root["stability"] = {{"is_stable", report.stability.is_stable},
                         {"max_real_part", report.stability.max_real_part},
                         {"has_lyapunov", report.stability.has_lyapunov}};
    nlohmann::json eigs = nlohmann::json::array();
    for (int i = 0; i < report.stability.eigenvalues.size(); ++i)
        eigs.push_back({{"re", report.stability.eigenvalues(i).real()},
                        {"im", report.stability.eigenvalues(i).imag()}});
    root["stability"]["eigenvalues"] = eigs;
    if (!report.trajectory_path.empty()) root["trajectory"] = report.trajectory_path;

    std::ofstream out(path);
    if (!out) throw SimError("cannot write report file: " + path);
    out << root.dump(2) << "\n";
}

}  // namespace dsim
