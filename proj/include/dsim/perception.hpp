#ifndef DSIM_PERCEPTION_HPP
#define DSIM_PERCEPTION_HPP

#include <random>
#include <span>

#include <Eigen/Core>

#include "dsim/dynamics.hpp"

namespace dsim {

/// Calibrated stereo pair. The rig sits at the body origin with the optical
/// axis along body +x; image u runs along body +y, v along body +z.
struct CameraRig {
    double fu = 400.0;  // px
    double fv = 400.0;  // px
    double cu = 640.0;  // px
    double cv = 480.0;  // px
    double baseline = 0.15;  // m
    int image_width = 1280;
    int image_height = 960;
    double min_depth = 0.05;      // m, forward guard for projection
    double min_disparity = 0.5;   // px, reconstruction floor

    void validate() const;
};

/// Left-image detection with disparity. `valid` is false when the projection
/// (after noise) leaves the image or the frame was dropped.
struct StereoObservation {
    double u = 0.0;
    double v = 0.0;
    double disparity = 0.0;
    bool valid = false;
};

/// Camera-frame coordinates of a body-frame point and back. Camera z is the
/// optical axis (body x), camera x is image-right (body y), camera y is
/// image-down (body z).
Eigen::Vector3d body_to_camera(const Eigen::Vector3d& body);
Eigen::Vector3d camera_to_body(const Eigen::Vector3d& camera);

/// Projects an earth-frame target through the rig mounted on the drone and
/// adds independent Gaussian pixel noise to u, v and the disparity. Throws
/// BehindCamera when the target is at or behind the minimum depth.
StereoObservation observe(const Eigen::Vector3d& target_earth, const RigidBodyState& drone,
                          const CameraRig& rig, double pixel_sigma, std::mt19937_64& rng,
                          double dropout_probability = 0.0);

/// Inverts the projection: z = fu b / Y, x = (u - cu) z / fu, y = (v - cv) z / fv.
/// Throws DegenerateDisparity at or below the disparity floor.
Eigen::Vector3d reconstruct(const StereoObservation& obs, const CameraRig& rig);

/// Focal loss -nu (1 - p_t)^tau log(p_t) with p_t = p for label +1 and 1 - p
/// otherwise. Throws DomainError for p outside (0, 1).
double focal_loss(double p, int label, double balance, double focusing);

struct BoundingBox {
    double x1 = 0.0, y1 = 0.0, x2 = 0.0, y2 = 0.0;

    double area() const { return (x2 - x1) * (y2 - y1); }
    void validate() const;
};

double intersection_area(const BoundingBox& a, const BoundingBox& b);
double iou(const BoundingBox& a, const BoundingBox& b);

/// -ln(IoU); zero iff the boxes coincide. Throws DisjointBoxes when the
/// intersection is empty.
double iou_loss(const BoundingBox& predicted, const BoundingBox& ground_truth);

struct ClassificationSample {
    double p = 0.5;  // predicted probability of the positive class
    int label = 1;   // +1 or -1
};

struct RegressionSample {
    BoundingBox predicted;
    int label = 1;  // only positives contribute
    BoundingBox ground_truth;
};

/// Two-step classification loss: focal losses averaged over each step's
/// anchor collection, normalized by its positive count.
double stc_loss(std::span<const ClassificationSample> first_step,
                std::span<const ClassificationSample> second_step, double balance,
                double focusing);

/// Selective two-step regression loss: IoU losses over positive anchors only.
double str_loss(std::span<const RegressionSample> first_step,
                std::span<const RegressionSample> second_step);

}  // namespace dsim

#endif  // DSIM_PERCEPTION_HPP
