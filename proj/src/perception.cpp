#include "dsim/perception.hpp"

#include <algorithm>
#include <cmath>

namespace dsim {

void CameraRig::validate() const {
    if (!(fu > 0.0 && fv > 0.0)) throw ConfigError("focal lengths must be positive");
    if (!(baseline > 0.0)) throw ConfigError("stereo baseline must be positive");
    if (image_width <= 0 || image_height <= 0) throw ConfigError("image size must be positive");
    if (!(min_disparity > 0.0)) throw ConfigError("disparity floor must be positive");
}

Eigen::Vector3d body_to_camera(const Eigen::Vector3d& body) {
    return {body.y(), body.z(), body.x()};
}

Eigen::Vector3d camera_to_body(const Eigen::Vector3d& camera) {
    return {camera.z(), camera.x(), camera.y()};
}

StereoObservation observe(const Eigen::Vector3d& target_earth, const RigidBodyState& drone,
                          const CameraRig& rig, double pixel_sigma, std::mt19937_64& rng,
                          double dropout_probability) {
    const Eigen::Vector3d body =
        body_to_earth_rotation(drone.euler).transpose() * (target_earth - drone.position);
    const Eigen::Vector3d cam = body_to_camera(body);
    if (cam.z() <= rig.min_depth) throw BehindCamera(cam.z());

    StereoObservation obs;
    obs.u = rig.cu + rig.fu * cam.x() / cam.z();
    obs.v = rig.cv + rig.fv * cam.y() / cam.z();
    obs.disparity = rig.fu * rig.baseline / cam.z();

    std::normal_distribution<double> gauss(0.0, 1.0);
    if (pixel_sigma > 0.0) {
        obs.u += pixel_sigma * gauss(rng);
        obs.v += pixel_sigma * gauss(rng);
        obs.disparity += pixel_sigma * gauss(rng);
    }
    obs.valid = obs.u >= 0.0 && obs.u <= rig.image_width && obs.v >= 0.0 &&
                obs.v <= rig.image_height && obs.disparity > 0.0;
    if (dropout_probability > 0.0) {
        std::uniform_real_distribution<double> unit(0.0, 1.0);
        if (unit(rng) < dropout_probability) obs.valid = false;
    }
    return obs;
}

Eigen::Vector3d reconstruct(const StereoObservation& obs, const CameraRig& rig) {
    if (obs.disparity <= rig.min_disparity) throw DegenerateDisparity(obs.disparity);
    const double z = rig.fu * rig.baseline / obs.disparity;
    const double x = (obs.u - rig.cu) * z / rig.fu;
    const double y = (obs.v - rig.cv) * z / rig.fv;
    return {x, y, z};
}

double focal_loss(double p, int label, double balance, double focusing) {
    if (!(p > 0.0 && p < 1.0))
        throw DomainError("focal loss probability must lie strictly in (0, 1)");
    if (focusing < 0.0) throw DomainError("focusing parameter must be non-negative");
    if (!(balance > 0.0)) throw DomainError("balance parameter must be positive");
    const double pt = label == 1 ? p : 1.0 - p;
    return -balance * std::pow(1.0 - pt, focusing) * std::log(pt);
}

void BoundingBox::validate() const {
    if (!(x1 < x2 && y1 < y2)) throw DomainError("bounding box must have x1 < x2 and y1 < y2");
}

double intersection_area(const BoundingBox& a, const BoundingBox& b) {
    const double w = std::min(a.x2, b.x2) - std::max(a.x1, b.x1);
    const double h = std::min(a.y2, b.y2) - std::max(a.y1, b.y1);
    return w > 0.0 && h > 0.0 ? w * h : 0.0;
}

double iou(const BoundingBox& a, const BoundingBox& b) {
    a.validate();
    b.validate();
    const double inter = intersection_area(a, b);
    return inter / (a.area() + b.area() - inter);
}

double iou_loss(const BoundingBox& predicted, const BoundingBox& ground_truth) {
    predicted.validate();
    ground_truth.validate();
    const double inter = intersection_area(predicted, ground_truth);
    if (inter <= 0.0) throw DisjointBoxes();
    return -std::log(inter / (predicted.area() + ground_truth.area() - inter));
}

namespace {

int positive_count(std::span<const ClassificationSample> samples) {
    int n = 0;
    for (const auto& s : samples) n += s.label == 1 ? 1 : 0;
    return n;
}

}  // namespace

double stc_loss(std::span<const ClassificationSample> first_step,
                std::span<const ClassificationSample> second_step, double balance,
                double focusing) {
    const int n1 = positive_count(first_step);
    const int n2 = positive_count(second_step);
    if (first_step.empty() || second_step.empty() || n1 == 0 || n2 == 0)
        throw EmptyAnchorSet();

    double sum1 = 0.0, sum2 = 0.0;
    for (const auto& s : first_step) sum1 += focal_loss(s.p, s.label, balance, focusing);
    for (const auto& s : second_step) sum2 += focal_loss(s.p, s.label, balance, focusing);
    return sum1 / n1 + sum2 / n2;
}

double str_loss(std::span<const RegressionSample> first_step,
                std::span<const RegressionSample> second_step) {
    double sum1 = 0.0, sum2 = 0.0;
    int n1 = 0, n2 = 0;
    for (const auto& s : first_step) {
        if (s.label == 1) {
            sum1 += iou_loss(s.predicted, s.ground_truth);
            ++n1;
        }
    }
    for (const auto& s : second_step) {
        if (s.label == 1) {
            sum2 += iou_loss(s.predicted, s.ground_truth);
            ++n2;
        }
    }
    if (n1 == 0 || n2 == 0) throw NoPositiveAnchors();
    return sum1 / n1 + sum2 / n2;
}

}  // namespace dsim
