#ifndef DSIM_LINEAR_ANALYSIS_HPP
#define DSIM_LINEAR_ANALYSIS_HPP

#include <string>
#include <vector>

#include <Eigen/Core>

#include "dsim/dynamics.hpp"
#include "dsim/pida.hpp"

namespace dsim {

/// Linear state-space model x' = A x + B u, y = C x about (x_eq, u_eq).
/// Outputs are ordered [roll, pitch, yaw, altitude].
struct LinearModel {
    Eigen::MatrixXd A;
    Eigen::MatrixXd B;
    Eigen::MatrixXd C;
    RigidBodyState x_eq;
    ControlVector u_eq;
    std::vector<std::string> state_names;
};

/// Tracking augmentation with integral states x_N' = r - C x:
///   A_aug = [[A, 0], [-C, 0]], B_aug = [[B], [0]], reference enters via [[0], [I]].
struct AugmentedModel {
    Eigen::MatrixXd A_aug;
    Eigen::MatrixXd B_aug;
    Eigen::MatrixXd C_aug;
    Eigen::MatrixXd reference_input;
};

enum class LyapunovStatus { kSolved, kUnstable, kSingularPencil };

struct LyapunovResult {
    LyapunovStatus status = LyapunovStatus::kUnstable;
    Eigen::MatrixXd P;  // valid only when status == kSolved
};

struct StabilityReport {
    Eigen::VectorXcd eigenvalues;
    double max_real_part = 0.0;
    bool is_stable = false;
    bool has_lyapunov = false;
    Eigen::MatrixXd lyapunov_p;
};

/// Central finite-difference Jacobians of the nonlinear dynamics about an
/// equilibrium. State order matches RigidBodyState::to_vector():
/// [phi, theta, psi, p, q, r, u, v, w, x_E, y_E, z_E]; inputs are
/// [u_phi, u_theta, u_psi, u_T]. Throws NotEquilibrium when the point is not
/// one (residual >= 1e-6).
LinearModel linearize(const QuadParams& params, const RigidBodyState& x_eq,
                      const ControlVector& u_eq, double relative_step = 1e-6);

/// Hover equilibrium: all states zero, thrust equal to weight.
RigidBodyState hover_state();
ControlVector hover_control(const QuadParams& params);

/// Restriction of the full model to the states the four control channels act
/// on: [phi, theta, psi, p, q, r, w, z_E]. At hover this subsystem is closed
/// under the linearized dynamics.
LinearModel tracking_submodel(const LinearModel& full);

AugmentedModel augment_for_tracking(const LinearModel& model);

/// Solves A^T P + P A = -Q through the Kronecker-product linear system.
/// Returns kUnstable when A has an eigenvalue with non-negative real part
/// (kSingularPencil when a pair lambda_i + lambda_j vanishes, which makes the
/// equation singular).
LyapunovResult solve_lyapunov(const Eigen::MatrixXd& A, const Eigen::MatrixXd& Q);

/// Closed-loop state matrix of the tracking plant with the four PIDA
/// channels realized as explicit integrator + two filter states each.
Eigen::MatrixXd closed_loop_matrix(const LinearModel& tracking_model,
                                   const std::array<PidaGains, 4>& gains);

/// Spectrum plus Lyapunov certificate (Q = I) of the closed loop.
StabilityReport certify_closed_loop(const LinearModel& tracking_model,
                                    const std::array<PidaGains, 4>& gains);

/// Spectrum-only report for an arbitrary square matrix.
StabilityReport stability_report(const Eigen::MatrixXd& A);

}  // namespace dsim

#endif  // DSIM_LINEAR_ANALYSIS_HPP
