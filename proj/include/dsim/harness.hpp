#ifndef DSIM_HARNESS_HPP
#define DSIM_HARNESS_HPP

#include <map>
#include <optional>
#include <string>

#include "dsim/closed_loop.hpp"
#include "dsim/linear_analysis.hpp"
#include "dsim/scenario.hpp"
#include "dsim/sdsa.hpp"

namespace dsim {

struct MissionMetrics {
    bool reached_safe_distance = false;
    double time_to_safe_s = 0.0;
    bool hold_engaged = false;
    double hold_min_distance = 0.0;
    double hold_max_distance = 0.0;
    double final_height = 0.0;
    double final_distance = 0.0;
    // Largest attitude magnitudes over the final quarter of the run; yaw is
    // measured against its reference.
    double hold_max_roll = 0.0;
    double hold_max_pitch = 0.0;
    double hold_max_yaw_error = 0.0;
};

struct RunReport {
    std::string scenario_name;
    std::uint64_t seed = 0;
    std::array<std::optional<StepMetrics>, 4> step_metrics;  // indexed by Channel
    std::array<bool, 4> channel_settled = {true, true, true, true};
    std::optional<MissionMetrics> mission;
    StabilityReport stability;
    std::string trajectory_path;
};

struct StepRunResult {
    RunReport report;
    TrajectoryLog log;
};

/// Per-frame perception record of a mission run.
struct ObservationTrace {
    std::vector<double> t, u, v, disparity, x, y, z;  // camera-frame reconstruction
};

struct MissionRunResult {
    RunReport report;
    TrajectoryLog log;
    ObservationTrace observations;
};

/// Four-channel step-response experiment with measurement noise; computes
/// per-channel metrics from the true trajectory and certifies the closed
/// loop about hover.
StepRunResult run_step_response(const Scenario& scenario);

/// Perception -> guidance -> control -> dynamics loop against the scenario
/// target. Throws TargetNeverAcquired when the target stays invalid in frame
/// for more than a second.
MissionRunResult run_mission(const Scenario& scenario);

struct TuneResult {
    std::array<PidaGains, 4> gains;                      // scenario gains with tuned channels
    std::map<Channel, MinimizeResult> channel_results;
};

/// SDSA-tunes the channels listed in scenario.tune (all four when empty).
TuneResult tune(const Scenario& scenario);

/// Writes the bit-exact trajectory CSV (17 significant digits, one row per step).
void export_trajectory(const TrajectoryLog& log, const std::string& path);
TrajectoryLog load_trajectory(const std::string& path);

void export_observations(const ObservationTrace& trace, const std::string& path);
void export_history(const MinimizeResult& result, const std::string& path);

/// Step metrics recomputed from a trajectory for the scenario's references.
std::array<std::optional<StepMetrics>, 4> metrics_from_log(const TrajectoryLog& log,
                                                           const StepCommands& commands);

void save_report(const RunReport& report, const std::string& path);

}  // namespace dsim

#endif  // DSIM_HARNESS_HPP
