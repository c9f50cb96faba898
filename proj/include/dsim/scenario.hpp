#ifndef DSIM_SCENARIO_HPP
#define DSIM_SCENARIO_HPP

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "dsim/closed_loop.hpp"
#include "dsim/dynamics.hpp"
#include "dsim/guidance.hpp"
#include "dsim/perception.hpp"
#include "dsim/pida.hpp"
#include "dsim/sdsa.hpp"

namespace dsim {

/// Step references of the four-channel scenario, stored in the units the
/// config file uses (degrees for angles, meters of altitude).
struct StepSettings {
    double step_time = 2.0;
    double roll_deg = 0.0;
    double pitch_deg = 0.0;
    double yaw_deg = 0.0;
    std::optional<double> altitude;  // absent: hold the initial altitude
};

struct TargetSettings {
    Eigen::Vector3d position = Eigen::Vector3d::Zero();  // base, earth frame
    double height = 1.8;                                 // m, observed head point
};

struct TuneSettings {
    std::vector<Channel> channels;
    int max_iterations = 120;
    double duration = 12.0;
    double step_time = 0.5;
};

/// One fully-specified experiment, loaded from a JSON file. Unknown keys are
/// rejected so typos fail fast.
struct Scenario {
    std::string name;
    std::uint64_t seed = 0;
    double dt = 1e-3;
    double duration = 12.0;
    QuadParams quad;
    RigidBodyState initial_state;
    std::array<PidaGains, 4> gains;
    NoiseSettings noise;
    StepSettings steps;
    std::optional<TargetSettings> target;
    CameraRig camera;
    GuidanceConfig guidance;
    int perception_every_n_steps = 10;
    SdsaConfig sdsa;
    TuneSettings tune;

    StepCommands step_commands() const;
    void validate() const;
};

/// Shipped defaults: the published channel gains plus the tuned proportional
/// terms (see default_gains()).
std::array<PidaGains, 4> default_gains();

Scenario load_scenario(const std::string& path);
void save_scenario(const Scenario& scenario, const std::string& path);

}  // namespace dsim

#endif  // DSIM_SCENARIO_HPP
