#include "dsim/scenario.hpp"

#include <cmath>
#include <fstream>
#include <set>

#include <json.hpp>

namespace dsim {

namespace {

using nlohmann::json;

constexpr double kDegToRad = M_PI / 180.0;

void require_keys(const json& obj, const std::string& where,
                  const std::set<std::string>& allowed) {
    if (!obj.is_object()) throw ConfigError(where + " must be a JSON object");
    for (const auto& item : obj.items())
        if (!allowed.count(item.key()))
            throw ConfigError("unknown key '" + item.key() + "' in " + where);
}

double get_number(const json& obj, const std::string& key, double fallback) {
    if (!obj.contains(key)) return fallback;
    if (!obj[key].is_number()) throw ConfigError("'" + key + "' must be a number");
    return obj[key].get<double>();
}

Eigen::Vector3d get_vec3(const json& obj, const std::string& key,
                         const Eigen::Vector3d& fallback) {
    if (!obj.contains(key)) return fallback;
    const auto& arr = obj[key];
    if (!arr.is_array() || arr.size() != 3)
        throw ConfigError("'" + key + "' must be an array of three numbers");
    return {arr[0].get<double>(), arr[1].get<double>(), arr[2].get<double>()};
}

QuadParams parse_quad(const json& obj) {
    require_keys(obj, "quad",
                 {"mass", "arm_length", "gravity", "force_to_torque", "inertia_xx",
                  "inertia_yy", "inertia_zz", "rotor_inertia", "max_rotor_force",
                  "rotor_residual_speed"});
    QuadParams q;
    q.mass = get_number(obj, "mass", q.mass);
    q.arm_length = get_number(obj, "arm_length", q.arm_length);
    q.gravity = get_number(obj, "gravity", q.gravity);
    q.force_to_torque = get_number(obj, "force_to_torque", q.force_to_torque);
    q.inertia_xx = get_number(obj, "inertia_xx", q.inertia_xx);
    q.inertia_yy = get_number(obj, "inertia_yy", q.inertia_yy);
    q.inertia_zz = get_number(obj, "inertia_zz", q.inertia_zz);
    q.rotor_inertia = get_number(obj, "rotor_inertia", q.rotor_inertia);
    q.max_rotor_force = get_number(obj, "max_rotor_force", q.max_rotor_force);
    q.rotor_residual_speed = get_number(obj, "rotor_residual_speed", q.rotor_residual_speed);
    return q;
}

RigidBodyState parse_initial_state(const json& obj) {
    require_keys(obj, "initial_state", {"euler_deg", "body_rates", "velocity", "position"});
    RigidBodyState s;
    s.euler = get_vec3(obj, "euler_deg", Eigen::Vector3d::Zero()) * kDegToRad;
    s.body_rates = get_vec3(obj, "body_rates", Eigen::Vector3d::Zero());
    s.body_velocity = get_vec3(obj, "velocity", Eigen::Vector3d::Zero());
    s.position = get_vec3(obj, "position", Eigen::Vector3d::Zero());
    return s;
}

PidaGains parse_gains(const json& obj, Channel channel, const PidaGains& fallback) {
    require_keys(obj, std::string("gains.") + channel_name(channel),
                 {"kp", "ki", "kd", "ka", "tf"});
    PidaGains g = fallback;
    g.channel = channel;
    g.kp = get_number(obj, "kp", g.kp);
    g.ki = get_number(obj, "ki", g.ki);
    g.kd = get_number(obj, "kd", g.kd);
    g.ka = get_number(obj, "ka", g.ka);
    g.tf = get_number(obj, "tf", g.tf);
    return g;
}

NoiseSettings parse_noise(const json& obj) {
    require_keys(obj, "noise",
                 {"measurement_sigma_angle", "measurement_sigma_altitude",
                  "roll_disturbance_enabled", "roll_disturbance_sigma",
                  "roll_disturbance_start_s", "pixel_sigma", "dropout_probability"});
    NoiseSettings n;
    n.measurement_sigma_angle = get_number(obj, "measurement_sigma_angle", 0.0);
    n.measurement_sigma_altitude = get_number(obj, "measurement_sigma_altitude", 0.0);
    if (obj.contains("roll_disturbance_enabled")) {
        if (!obj["roll_disturbance_enabled"].is_boolean())
            throw ConfigError("'roll_disturbance_enabled' must be a boolean");
        n.roll_disturbance_enabled = obj["roll_disturbance_enabled"].get<bool>();
    }
    n.roll_disturbance_sigma = get_number(obj, "roll_disturbance_sigma", 1.0);
    n.roll_disturbance_start_s = get_number(obj, "roll_disturbance_start_s", 1.0);
    n.pixel_sigma = get_number(obj, "pixel_sigma", 0.0);
    n.dropout_probability = get_number(obj, "dropout_probability", 0.0);
    return n;
}

CameraRig parse_camera(const json& obj) {
    require_keys(obj, "camera", {"fu", "fv", "cu", "cv", "baseline", "width", "height"});
    CameraRig rig;
    rig.fu = get_number(obj, "fu", rig.fu);
    rig.fv = get_number(obj, "fv", rig.fv);
    rig.cu = get_number(obj, "cu", rig.cu);
    rig.cv = get_number(obj, "cv", rig.cv);
    rig.baseline = get_number(obj, "baseline", rig.baseline);
    rig.image_width = static_cast<int>(get_number(obj, "width", rig.image_width));
    rig.image_height = static_cast<int>(get_number(obj, "height", rig.image_height));
    return rig;
}

GuidanceConfig parse_guidance(const json& obj) {
    require_keys(obj, "guidance",
                 {"navigation_constant", "safe_distance", "hold_hysteresis",
                  "approach_speed_gain", "max_approach_speed", "closing_accel_gain",
                  "stop_offset", "hold_position_kp", "hold_position_kd", "max_tilt_deg"});
    GuidanceConfig g;
    g.navigation_constant = get_number(obj, "navigation_constant", g.navigation_constant);
    g.safe_distance = get_number(obj, "safe_distance", g.safe_distance);
    g.hold_hysteresis = get_number(obj, "hold_hysteresis", g.hold_hysteresis);
    g.approach_speed_gain = get_number(obj, "approach_speed_gain", g.approach_speed_gain);
    g.max_approach_speed = get_number(obj, "max_approach_speed", g.max_approach_speed);
    g.closing_accel_gain = get_number(obj, "closing_accel_gain", g.closing_accel_gain);
    g.stop_offset = get_number(obj, "stop_offset", g.stop_offset);
    g.hold_position_kp = get_number(obj, "hold_position_kp", g.hold_position_kp);
    g.hold_position_kd = get_number(obj, "hold_position_kd", g.hold_position_kd);
    g.max_tilt = get_number(obj, "max_tilt_deg", g.max_tilt / kDegToRad) * kDegToRad;
    return g;
}

SdsaConfig parse_sdsa(const json& obj) {
    require_keys(obj, "sdsa",
                 {"initial_scale", "alpha_max", "gamma_max", "beta_max", "max_iterations"});
    SdsaConfig c;
    c.initial_scale = get_number(obj, "initial_scale", c.initial_scale);
    c.alpha_max = get_number(obj, "alpha_max", c.alpha_max);
    c.gamma_max = get_number(obj, "gamma_max", c.gamma_max);
    c.beta_max = get_number(obj, "beta_max", c.beta_max);
    c.max_iterations = static_cast<int>(get_number(obj, "max_iterations", c.max_iterations));
    return c;
}

Channel channel_from_name(const std::string& name) {
    if (name == "roll") return Channel::kRoll;
    if (name == "pitch") return Channel::kPitch;
    if (name == "yaw") return Channel::kYaw;
    if (name == "altitude") return Channel::kAltitude;
    throw ConfigError("unknown channel '" + name + "'");
}

TuneSettings parse_tune(const json& obj) {
    require_keys(obj, "tune", {"channels", "max_iterations", "duration", "step_time"});
    TuneSettings t;
    if (obj.contains("channels")) {
        if (!obj["channels"].is_array()) throw ConfigError("'tune.channels' must be an array");
        for (const auto& c : obj["channels"]) t.channels.push_back(channel_from_name(c));
    }
    t.max_iterations = static_cast<int>(get_number(obj, "max_iterations", t.max_iterations));
    t.duration = get_number(obj, "duration", t.duration);
    t.step_time = get_number(obj, "step_time", t.step_time);
    return t;
}

}  // namespace

std::array<PidaGains, 4> default_gains() {
    // ki/kd/ka/tf per channel from the reference vehicle's tuned set; kp from
    // this project's SDSA runs.
    std::array<PidaGains, 4> g;
    g[0] = PidaGains{2.0, 0.1436, 6.5097, 0.5772, 0.0437, Channel::kRoll};
    g[1] = PidaGains{10.0, 3.6869, 21.2743, 0.3429, 0.0331, Channel::kPitch};
    g[2] = PidaGains{5.0, 0.0437, 29.9872, 23.5238, 0.0117, Channel::kYaw};
    g[3] = PidaGains{5.0, 1.00, 11.4676, 7.5114, 0.3752, Channel::kAltitude};
    return g;
}

StepCommands Scenario::step_commands() const {
    StepCommands c;
    c.step_time = steps.step_time;
    c.initial = ControllerCommand{0.0, 0.0, 0.0, initial_state.altitude()};
    c.stepped.roll = steps.roll_deg * kDegToRad;
    c.stepped.pitch = steps.pitch_deg * kDegToRad;
    c.stepped.yaw = steps.yaw_deg * kDegToRad;
    c.stepped.altitude = steps.altitude.value_or(initial_state.altitude());
    return c;
}

void Scenario::validate() const {
    quad.validate();
    for (const auto& g : gains) g.validate();
    camera.validate();
    if (!(dt > 0.0)) throw ConfigError("dt must be positive");
    if (!(duration > 0.0)) throw ConfigError("duration must be positive");
    if (perception_every_n_steps < 1)
        throw ConfigError("perception_every_n_steps must be at least 1");
}

Scenario load_scenario(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open scenario file: " + path);
    json root;
    try {
        in >> root;
    } catch (const json::exception& e) {
        throw ConfigError("scenario parse error in " + path + ": " + e.what());
    }

    require_keys(root, "scenario",
                 {"name", "seed", "dt", "duration", "quad", "initial_state", "gains", "noise",
                  "steps", "target", "camera", "guidance", "perception_every_n_steps", "sdsa",
                  "tune"});

    Scenario s;
    if (root.contains("name")) s.name = root["name"].get<std::string>();
    if (!root.contains("seed")) throw ConfigError("scenario requires an explicit 'seed'");
    s.seed = root["seed"].get<std::uint64_t>();
    s.dt = get_number(root, "dt", s.dt);
    s.duration = get_number(root, "duration", s.duration);
    if (root.contains("quad")) s.quad = parse_quad(root["quad"]);
    if (root.contains("initial_state")) s.initial_state = parse_initial_state(root["initial_state"]);

    s.gains = default_gains();
    if (root.contains("gains")) {
        require_keys(root["gains"], "gains", {"roll", "pitch", "yaw", "altitude"});
        const std::array<std::pair<const char*, Channel>, 4> channels = {
            std::pair{"roll", Channel::kRoll}, std::pair{"pitch", Channel::kPitch},
            std::pair{"yaw", Channel::kYaw}, std::pair{"altitude", Channel::kAltitude}};
        for (const auto& [key, ch] : channels)
            if (root["gains"].contains(key)) {
                const int i = static_cast<int>(ch);
                s.gains[i] = parse_gains(root["gains"][key], ch, s.gains[i]);
            }
    }

    if (root.contains("noise")) s.noise = parse_noise(root["noise"]);
    if (root.contains("steps")) {
        require_keys(root["steps"], "steps",
                     {"step_time", "roll_deg", "pitch_deg", "yaw_deg", "altitude"});
        s.steps.step_time = get_number(root["steps"], "step_time", s.steps.step_time);
        s.steps.roll_deg = get_number(root["steps"], "roll_deg", 0.0);
        s.steps.pitch_deg = get_number(root["steps"], "pitch_deg", 0.0);
        s.steps.yaw_deg = get_number(root["steps"], "yaw_deg", 0.0);
        if (root["steps"].contains("altitude"))
            s.steps.altitude = root["steps"]["altitude"].get<double>();
    }
    if (root.contains("target")) {
        require_keys(root["target"], "target", {"position", "height"});
        TargetSettings t;
        t.position = get_vec3(root["target"], "position", Eigen::Vector3d::Zero());
        t.height = get_number(root["target"], "height", t.height);
        s.target = t;
    }
    if (root.contains("camera")) s.camera = parse_camera(root["camera"]);
    if (root.contains("guidance")) s.guidance = parse_guidance(root["guidance"]);
    s.perception_every_n_steps =
        static_cast<int>(get_number(root, "perception_every_n_steps", s.perception_every_n_steps));
    if (root.contains("sdsa")) s.sdsa = parse_sdsa(root["sdsa"]);
    s.sdsa.seed = s.seed;
    if (root.contains("tune")) s.tune = parse_tune(root["tune"]);

    s.validate();
    return s;
}

void save_scenario(const Scenario& s, const std::string& path) {
    json root;
    root["name"] = s.name;
    root["seed"] = s.seed;
    root["dt"] = s.dt;
    root["duration"] = s.duration;
    root["quad"] = {{"mass", s.quad.mass},
                    {"arm_length", s.quad.arm_length},
                    {"gravity", s.quad.gravity},
                    {"force_to_torque", s.quad.force_to_torque},
                    {"inertia_xx", s.quad.inertia_xx},
                    {"inertia_yy", s.quad.inertia_yy},
                    {"inertia_zz", s.quad.inertia_zz},
                    {"rotor_inertia", s.quad.rotor_inertia},
                    {"max_rotor_force", s.quad.max_rotor_force},
                    {"rotor_residual_speed", s.quad.rotor_residual_speed}};
    root["initial_state"] = {
        {"euler_deg", {s.initial_state.euler.x() / kDegToRad, s.initial_state.euler.y() / kDegToRad,
                       s.initial_state.euler.z() / kDegToRad}},
        {"body_rates",
         {s.initial_state.body_rates.x(), s.initial_state.body_rates.y(),
          s.initial_state.body_rates.z()}},
        {"velocity",
         {s.initial_state.body_velocity.x(), s.initial_state.body_velocity.y(),
          s.initial_state.body_velocity.z()}},
        {"position",
         {s.initial_state.position.x(), s.initial_state.position.y(),
          s.initial_state.position.z()}}};
    for (int i = 0; i < 4; ++i) {
        const auto& g = s.gains[i];
        root["gains"][channel_name(static_cast<Channel>(i))] = {
            {"kp", g.kp}, {"ki", g.ki}, {"kd", g.kd}, {"ka", g.ka}, {"tf", g.tf}};
    }
    root["noise"] = {{"measurement_sigma_angle", s.noise.measurement_sigma_angle},
                     {"measurement_sigma_altitude", s.noise.measurement_sigma_altitude},
                     {"roll_disturbance_enabled", s.noise.roll_disturbance_enabled},
                     {"roll_disturbance_sigma", s.noise.roll_disturbance_sigma},
                     {"roll_disturbance_start_s", s.noise.roll_disturbance_start_s},
                     {"pixel_sigma", s.noise.pixel_sigma},
                     {"dropout_probability", s.noise.dropout_probability}};
    root["steps"] = {{"step_time", s.steps.step_time},
                     {"roll_deg", s.steps.roll_deg},
                     {"pitch_deg", s.steps.pitch_deg},
                     {"yaw_deg", s.steps.yaw_deg}};
    if (s.steps.altitude) root["steps"]["altitude"] = *s.steps.altitude;
    if (s.target) {
        root["target"] = {
            {"position", {s.target->position.x(), s.target->position.y(), s.target->position.z()}},
            {"height", s.target->height}};
    }
    root["camera"] = {{"fu", s.camera.fu},     {"fv", s.camera.fv},
                      {"cu", s.camera.cu},     {"cv", s.camera.cv},
                      {"baseline", s.camera.baseline}, {"width", s.camera.image_width},
                      {"height", s.camera.image_height}};
    root["guidance"] = {{"navigation_constant", s.guidance.navigation_constant},
                        {"safe_distance", s.guidance.safe_distance},
                        {"hold_hysteresis", s.guidance.hold_hysteresis},
                        {"approach_speed_gain", s.guidance.approach_speed_gain},
                        {"max_approach_speed", s.guidance.max_approach_speed},
                        {"closing_accel_gain", s.guidance.closing_accel_gain},
                        {"stop_offset", s.guidance.stop_offset},
                        {"hold_position_kp", s.guidance.hold_position_kp},
                        {"hold_position_kd", s.guidance.hold_position_kd},
                        {"max_tilt_deg", s.guidance.max_tilt / kDegToRad}};
    root["perception_every_n_steps"] = s.perception_every_n_steps;
    root["sdsa"] = {{"initial_scale", s.sdsa.initial_scale},
                    {"alpha_max", s.sdsa.alpha_max},
                    {"gamma_max", s.sdsa.gamma_max},
                    {"beta_max", s.sdsa.beta_max},
                    {"max_iterations", s.sdsa.max_iterations}};
    if (!s.tune.channels.empty()) {
        json channels = json::array();
        for (Channel c : s.tune.channels) channels.push_back(channel_name(c));
        root["tune"] = {{"channels", channels},
                        {"max_iterations", s.tune.max_iterations},
                        {"duration", s.tune.duration},
                        {"step_time", s.tune.step_time}};
    }

    std::ofstream out(path);
    if (!out) throw ConfigError("cannot write scenario file: " + path);
    out << root.dump(2) << "\n";
}

}  // namespace dsim
