#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <complex>
#include <random>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include "dsim/linear_analysis.hpp"
#include "dsim/scenario.hpp"

using namespace dsim;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

bool is_positive_definite(const MatrixXd& m) {
    Eigen::LLT<MatrixXd> llt(m);
    return llt.info() == Eigen::Success;
}

std::vector<std::complex<double>> sorted_eigs_of(const MatrixXd& a) {
    const Eigen::VectorXcd e = Eigen::EigenSolver<MatrixXd>(a, false).eigenvalues();
    std::vector<std::complex<double>> v(e.data(), e.data() + e.size());
    std::sort(v.begin(), v.end(), [](auto l, auto r) {
        return l.real() != r.real() ? l.real() < r.real() : l.imag() < r.imag();
    });
    return v;
}

}  // namespace

TEST_CASE("hover Jacobian matches the analytic entries") {
    QuadParams prm;
    const LinearModel model = linearize(prm, hover_state(), hover_control(prm));

    // State order: [phi, theta, psi, p, q, r, u, v, w, x, y, z].
    CHECK(model.A(6, 1) == doctest::Approx(-prm.gravity).epsilon(1e-6));  // du'/dtheta
    CHECK(model.A(7, 0) == doctest::Approx(prm.gravity).epsilon(1e-6));   // dv'/dphi
    CHECK(model.A(0, 3) == doctest::Approx(1.0).epsilon(1e-6));           // phi' = p
    CHECK(model.A(1, 4) == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(model.A(2, 5) == doctest::Approx(1.0).epsilon(1e-6));

    CHECK(model.B(8, 3) == doctest::Approx(-1.0 / prm.mass).epsilon(1e-6));       // dw'/du_T
    CHECK(model.B(3, 0) == doctest::Approx(1.0 / prm.inertia_xx).epsilon(1e-6));  // dp'/du_phi
    CHECK(model.B(4, 1) == doctest::Approx(1.0 / prm.inertia_yy).epsilon(1e-6));
    CHECK(model.B(5, 2) == doctest::Approx(1.0 / prm.inertia_zz).epsilon(1e-6));
    CHECK(model.B(8, 3) == doctest::Approx(-1.25).epsilon(1e-6));
    CHECK(model.B(3, 0) == doctest::Approx(43.8596491).epsilon(1e-5));

    // C selects [phi, theta, psi, -z_E].
    CHECK(model.C(0, 0) == 1.0);
    CHECK(model.C(3, 11) == -1.0);
}

TEST_CASE("linearize rejects non-equilibria") {
    QuadParams prm;
    RigidBodyState off = hover_state();
    off.body_velocity.x() = 1.0;
    CHECK_THROWS_AS(linearize(prm, off, hover_control(prm)), NotEquilibrium);
}

TEST_CASE("tracking submodel is closed at hover") {
    QuadParams prm;
    const LinearModel full = linearize(prm, hover_state(), hover_control(prm));
    const LinearModel sub = tracking_submodel(full);
    CHECK(sub.A.rows() == 8);
    CHECK(sub.B.cols() == 4);
    CHECK(sub.C.rows() == 4);
    // w -> z_E coupling and the channel input gains survive the restriction.
    CHECK(sub.A(7, 6) == doctest::Approx(1.0).epsilon(1e-6));  // z' = w
    CHECK(sub.B(6, 3) == doctest::Approx(-1.25).epsilon(1e-6));
}

TEST_CASE("augmented model block structure") {
    SUBCASE("generic 7-state model gets an 11x11 augmentation") {
        LinearModel m;
        m.A = MatrixXd::Random(7, 7);
        m.B = MatrixXd::Random(7, 4);
        m.C = MatrixXd::Random(4, 7);
        const AugmentedModel aug = augment_for_tracking(m);
        CHECK(aug.A_aug.rows() == 11);
        CHECK(aug.A_aug.cols() == 11);
        CHECK(aug.A_aug.topRightCorner(7, 4).isZero(0.0));
        CHECK(aug.A_aug.bottomRightCorner(4, 4).isZero(0.0));
        CHECK(aug.A_aug.bottomLeftCorner(4, 7).isApprox(-m.C));
        CHECK(aug.B_aug.bottomRows(4).isZero(0.0));
        CHECK(aug.reference_input.topRows(7).isZero(0.0));
        CHECK(aug.reference_input.bottomRows(4).isApprox(MatrixXd::Identity(4, 4)));
    }
    SUBCASE("square C gives -I in the lower-left block") {
        LinearModel m;
        m.A = MatrixXd::Random(3, 3);
        m.B = MatrixXd::Random(3, 2);
        m.C = MatrixXd::Identity(3, 3);
        const AugmentedModel aug = augment_for_tracking(m);
        CHECK(aug.A_aug.bottomLeftCorner(3, 3).isApprox(-MatrixXd::Identity(3, 3)));
    }
    SUBCASE("spectrum is eig(A) plus p zeros") {
        QuadParams prm;
        const LinearModel sub =
            tracking_submodel(linearize(prm, hover_state(), hover_control(prm)));
        const AugmentedModel aug = augment_for_tracking(sub);
        auto aug_eigs = sorted_eigs_of(aug.A_aug);
        auto a_eigs = sorted_eigs_of(sub.A);
        for (int i = 0; i < 4; ++i) a_eigs.emplace_back(0.0, 0.0);
        std::sort(a_eigs.begin(), a_eigs.end(), [](auto l, auto r) {
            return l.real() != r.real() ? l.real() < r.real() : l.imag() < r.imag();
        });
        REQUIRE(aug_eigs.size() == a_eigs.size());
        for (std::size_t i = 0; i < aug_eigs.size(); ++i)
            CHECK(std::abs(aug_eigs[i] - a_eigs[i]) < 1e-8);
    }
}

TEST_CASE("lyapunov solver on known cases") {
    SUBCASE("A = -I gives P = Q/2") {
        const MatrixXd a = -MatrixXd::Identity(4, 4);
        const auto res = solve_lyapunov(a, MatrixXd::Identity(4, 4));
        REQUIRE(res.status == LyapunovStatus::kSolved);
        CHECK(res.P.isApprox(0.5 * MatrixXd::Identity(4, 4), 1e-12));
    }
    SUBCASE("pure oscillator is singular") {
        MatrixXd a(2, 2);
        a << 0, 1, -1, 0;
        const auto res = solve_lyapunov(a, MatrixXd::Identity(2, 2));
        CHECK(res.status == LyapunovStatus::kSingularPencil);
    }
    SUBCASE("unstable matrix reports Unstable") {
        MatrixXd a(2, 2);
        a << 1, 0, 0, -2;
        const auto res = solve_lyapunov(a, MatrixXd::Identity(2, 2));
        CHECK(res.status == LyapunovStatus::kUnstable);
    }
    SUBCASE("invalid Q rejected") {
        MatrixXd q(2, 2);
        q << 1, 2, 3, 4;
        CHECK_THROWS_AS(solve_lyapunov(-MatrixXd::Identity(2, 2), q), DomainError);
    }
}

TEST_CASE("lyapunov duality over random matrices") {
    std::mt19937_64 rng(41);
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    int solved = 0, unstable = 0;
    for (int trial = 0; trial < 120; ++trial) {
        MatrixXd a(6, 6);
        for (int i = 0; i < 6; ++i)
            for (int j = 0; j < 6; ++j) a(i, j) = gauss(rng);
        // Shift half the draws so both branches are well represented.
        if (unit(rng) < 0.5) a -= 4.0 * MatrixXd::Identity(6, 6);

        const double max_re =
            Eigen::EigenSolver<MatrixXd>(a, false).eigenvalues().real().maxCoeff();
        const auto res = solve_lyapunov(a, MatrixXd::Identity(6, 6));
        if (max_re < 0.0) {
            REQUIRE(res.status == LyapunovStatus::kSolved);
            ++solved;
            CHECK(is_positive_definite(res.P));
            const MatrixXd residual =
                a.transpose() * res.P + res.P * a + MatrixXd::Identity(6, 6);
            CHECK(residual.norm() < 1e-8 * MatrixXd::Identity(6, 6).norm());
            // Rayleigh bounds on sampled vectors.
            Eigen::SelfAdjointEigenSolver<MatrixXd> es(res.P);
            const double lmin = es.eigenvalues().minCoeff();
            const double lmax = es.eigenvalues().maxCoeff();
            CHECK(lmin > 0.0);
            for (int k = 0; k < 100; ++k) {
                VectorXd x(6);
                for (int i = 0; i < 6; ++i) x(i) = gauss(rng);
                const double value = x.dot(res.P * x);
                CHECK(value >= lmin * x.squaredNorm() * (1.0 - 1e-9));
                CHECK(value <= lmax * x.squaredNorm() * (1.0 + 1e-9));
            }
        } else {
            CHECK(res.status != LyapunovStatus::kSolved);
            ++unstable;
        }
    }
    CHECK(solved > 10);
    CHECK(unstable > 10);
}

TEST_CASE("closed-loop certification") {
    QuadParams prm;
    const LinearModel sub = tracking_submodel(linearize(prm, hover_state(), hover_control(prm)));

    SUBCASE("zero gains leave the open-loop integrators marginal") {
        std::array<PidaGains, 4> zero{};
        for (int i = 0; i < 4; ++i) {
            zero[i].channel = static_cast<Channel>(i);
            zero[i].tf = 0.05;
        }
        const StabilityReport report = certify_closed_loop(sub, zero);
        CHECK_FALSE(report.is_stable);
    }
    SUBCASE("published gains with the shipped kp are certified stable") {
        const StabilityReport report = certify_closed_loop(sub, default_gains());
        CHECK(report.is_stable);
        CHECK(report.max_real_part < 0.0);
        CHECK(report.has_lyapunov);
        CHECK(is_positive_definite(report.lyapunov_p));
        CHECK(report.eigenvalues.size() == 20);
    }
}
