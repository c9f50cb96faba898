#include "dsim/linear_analysis.hpp"

#include <cmath>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <Eigen/LU>

namespace dsim {

namespace {

constexpr int kStateDim = 12;
constexpr int kInputDim = 4;
constexpr int kOutputDim = 4;

// phi, theta, psi, p, q, r, w, z_E
constexpr int kTrackingStates[] = {0, 1, 2, 3, 4, 5, 8, 11};

Eigen::Matrix<double, kStateDim, 1> derivative_vector(const QuadParams& params,
                                                      const Eigen::Matrix<double, kStateDim, 1>& x,
                                                      const Eigen::Vector4d& u) {
    ControlVector cv{u(0), u(1), u(2), u(3)};
    return state_derivative(RigidBodyState::from_vector(x), cv, Disturbance{}, params).to_vector();
}

}  // namespace

RigidBodyState hover_state() { return RigidBodyState{}; }

ControlVector hover_control(const QuadParams& params) {
    ControlVector u;
    u.u_thrust = params.weight();
    return u;
}

LinearModel linearize(const QuadParams& params, const RigidBodyState& x_eq,
                      const ControlVector& u_eq, double relative_step) {
    const Eigen::Matrix<double, kStateDim, 1> x0 = x_eq.to_vector();
    const Eigen::Vector4d u0(u_eq.u_phi, u_eq.u_theta, u_eq.u_psi, u_eq.u_thrust);

    const double residual = derivative_vector(params, x0, u0).norm();
    if (residual >= 1e-6) throw NotEquilibrium(residual);

    LinearModel model;
    model.A.resize(kStateDim, kStateDim);
    model.B.resize(kStateDim, kInputDim);
    for (int j = 0; j < kStateDim; ++j) {
        const double h = relative_step * std::max(1.0, std::abs(x0(j)));
        auto xp = x0, xm = x0;
        xp(j) += h;
        xm(j) -= h;
        model.A.col(j) = (derivative_vector(params, xp, u0) - derivative_vector(params, xm, u0)) /
                         (2.0 * h);
    }
    for (int j = 0; j < kInputDim; ++j) {
        const double h = relative_step * std::max(1.0, std::abs(u0(j)));
        auto up = u0, um = u0;
        up(j) += h;
        um(j) -= h;
        model.B.col(j) = (derivative_vector(params, x0, up) - derivative_vector(params, x0, um)) /
                         (2.0 * h);
    }
    model.C = Eigen::MatrixXd::Zero(kOutputDim, kStateDim);
    model.C(0, 0) = 1.0;   // roll
    model.C(1, 1) = 1.0;   // pitch
    model.C(2, 2) = 1.0;   // yaw
    model.C(3, 11) = -1.0; // altitude = -z_E
    model.x_eq = x_eq;
    model.u_eq = u_eq;
    model.state_names = {"phi", "theta", "psi", "p", "q", "r", "u", "v", "w", "x_E", "y_E", "z_E"};
    return model;
}

LinearModel tracking_submodel(const LinearModel& full) {
    const int n = static_cast<int>(std::size(kTrackingStates));
    LinearModel sub;
    sub.A.resize(n, n);
    sub.B.resize(n, full.B.cols());
    sub.C.resize(full.C.rows(), n);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) sub.A(i, j) = full.A(kTrackingStates[i], kTrackingStates[j]);
        sub.B.row(i) = full.B.row(kTrackingStates[i]);
        sub.C.col(i) = full.C.col(kTrackingStates[i]);
        sub.state_names.push_back(full.state_names[kTrackingStates[i]]);
    }
    sub.x_eq = full.x_eq;
    sub.u_eq = full.u_eq;
    return sub;
}

AugmentedModel augment_for_tracking(const LinearModel& model) {
    const int n = static_cast<int>(model.A.rows());
    const int m = static_cast<int>(model.B.cols());
    const int p = static_cast<int>(model.C.rows());
    if (model.A.cols() != n || model.B.rows() != n || model.C.cols() != n)
        throw DomainError("inconsistent state-space dimensions");

    AugmentedModel aug;
    aug.A_aug = Eigen::MatrixXd::Zero(n + p, n + p);
    aug.A_aug.topLeftCorner(n, n) = model.A;
    aug.A_aug.bottomLeftCorner(p, n) = -model.C;
    aug.B_aug = Eigen::MatrixXd::Zero(n + p, m);
    aug.B_aug.topRows(n) = model.B;
    aug.C_aug = Eigen::MatrixXd::Zero(p, n + p);
    aug.C_aug.leftCols(n) = model.C;
    aug.reference_input = Eigen::MatrixXd::Zero(n + p, p);
    aug.reference_input.bottomRows(p) = Eigen::MatrixXd::Identity(p, p);
    return aug;
}

LyapunovResult solve_lyapunov(const Eigen::MatrixXd& A, const Eigen::MatrixXd& Q) {
    const int n = static_cast<int>(A.rows());
    if (A.cols() != n || Q.rows() != n || Q.cols() != n)
        throw DomainError("Lyapunov operands must be square and of equal size");
    if (!Q.isApprox(Q.transpose(), 1e-10))
        throw DomainError("Q must be symmetric");
    Eigen::LLT<Eigen::MatrixXd> qllt(Q);
    if (qllt.info() != Eigen::Success)
        throw DomainError("Q must be positive definite");

    const Eigen::VectorXcd lambda = Eigen::EigenSolver<Eigen::MatrixXd>(A, false).eigenvalues();
    LyapunovResult result;
    if (lambda.real().maxCoeff() >= 0.0) {
        result.status = LyapunovStatus::kUnstable;
        const double scale = std::max(1.0, lambda.cwiseAbs().maxCoeff());
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j)
                if (std::abs(lambda(i) + lambda(j)) < 1e-12 * scale)
                    result.status = LyapunovStatus::kSingularPencil;
        return result;
    }

    // vec(A^T P + P A) = (I (x) A^T + A^T (x) I) vec(P)
    Eigen::MatrixXd K = Eigen::MatrixXd::Zero(n * n, n * n);
    const Eigen::MatrixXd At = A.transpose();
    for (int i = 0; i < n; ++i) K.block(i * n, i * n, n, n) += At;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            for (int k = 0; k < n; ++k) K(i * n + k, j * n + k) += At(i, j);

    Eigen::VectorXd q(n * n);
    for (int j = 0; j < n; ++j) q.segment(j * n, n) = -Q.col(j);
    const Eigen::VectorXd p = K.partialPivLu().solve(q);

    Eigen::MatrixXd P(n, n);
    for (int j = 0; j < n; ++j) P.col(j) = p.segment(j * n, n);
    P = 0.5 * (P + P.transpose().eval());
    result.status = LyapunovStatus::kSolved;
    result.P = P;
    return result;
}

Eigen::MatrixXd closed_loop_matrix(const LinearModel& model,
                                   const std::array<PidaGains, 4>& gains) {
    const int n = static_cast<int>(model.A.rows());
    const int p = static_cast<int>(model.C.rows());
    if (p != 4) throw DomainError("closed loop expects four output channels");
    for (const auto& g : gains) g.validate();

    // Per-channel effective gains of u = Ke e + ki z + Kw1 w1 + Kw2 w2 where
    // z is the error integral and w1, w2 are the two filter states.
    Eigen::Vector4d ke, kz, kw1, kw2, inv_tf;
    for (int i = 0; i < 4; ++i) {
        const auto& g = gains[i];
        ke(i) = g.kp + g.kd / g.tf + g.ka / (g.tf * g.tf);
        kz(i) = g.ki;
        kw1(i) = -(g.kd / (g.tf * g.tf) + g.ka / (g.tf * g.tf * g.tf));
        kw2(i) = -g.ka / (g.tf * g.tf);
        inv_tf(i) = 1.0 / g.tf;
    }

    const int total = n + 3 * p;
    Eigen::MatrixXd acl = Eigen::MatrixXd::Zero(total, total);
    const auto& A = model.A;
    const auto& B = model.B;
    const auto& C = model.C;

    // Plant rows, with e = -C x (regulation form).
    acl.topLeftCorner(n, n) = A - B * ke.asDiagonal() * C;
    acl.block(0, n, n, p) = B * kz.asDiagonal();
    acl.block(0, n + p, n, p) = B * kw1.asDiagonal();
    acl.block(0, n + 2 * p, n, p) = B * kw2.asDiagonal();
    // Integrators: z' = e.
    acl.block(n, 0, p, n) = -C;
    // First filter stage: w1' = e - w1 / Tf.
    acl.block(n + p, 0, p, n) = -C;
    acl.block(n + p, n + p, p, p) = (-inv_tf).asDiagonal();
    // Second stage: w2' = e/Tf - w1/Tf^2 - w2/Tf.
    acl.block(n + 2 * p, 0, p, n) = -(inv_tf.asDiagonal() * C);
    acl.block(n + 2 * p, n + p, p, p) =
        (-inv_tf.cwiseProduct(inv_tf)).asDiagonal();
    acl.block(n + 2 * p, n + 2 * p, p, p) = (-inv_tf).asDiagonal();
    return acl;
}

StabilityReport stability_report(const Eigen::MatrixXd& A) {
    StabilityReport report;
    report.eigenvalues = Eigen::EigenSolver<Eigen::MatrixXd>(A, false).eigenvalues();
    report.max_real_part = report.eigenvalues.real().maxCoeff();
    report.is_stable = report.max_real_part < 0.0;
    if (report.is_stable) {
        const auto lyap = solve_lyapunov(A, Eigen::MatrixXd::Identity(A.rows(), A.cols()));
        if (lyap.status == LyapunovStatus::kSolved) {
            Eigen::LLT<Eigen::MatrixXd> llt(lyap.P);
            if (llt.info() == Eigen::Success) {
                report.has_lyapunov = true;
                report.lyapunov_p = lyap.P;
            }
        }
        report.is_stable = report.has_lyapunov;
    }
    return report;
}

StabilityReport certify_closed_loop(const LinearModel& tracking_model,
                                    const std::array<PidaGains, 4>& gains) {
    return stability_report(closed_loop_matrix(tracking_model, gains));
}

}  // namespace dsim
