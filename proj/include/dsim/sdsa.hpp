#ifndef DSIM_SDSA_HPP
#define DSIM_SDSA_HPP

#include <cstdint>
#include <functional>
#include <random>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "dsim/closed_loop.hpp"
#include "dsim/errors.hpp"
#include "dsim/pida.hpp"

namespace dsim {

using Objective = std::function<double(const Eigen::VectorXd&)>;

struct Bounds {
    Eigen::VectorXd lower;
    Eigen::VectorXd upper;

    Eigen::VectorXd clamp(const Eigen::VectorXd& x) const;
    int dimension() const { return static_cast<int>(lower.size()); }
    void validate() const;
};

/// Optimizer parameters. The operator caps bound the per-use uniform draws of
/// the reflection/expansion/contraction coefficients; initial_scale is the
/// edge of the starting regular simplexes.
struct SdsaConfig {
    double initial_scale = 10.5907;  // a_max
    double alpha_max = 9.7323;
    double gamma_max = 9.9185;
    double beta_max = 0.4679;
    int max_iterations = 979;  // i_max
    int n_simplexes = 2;
    std::uint64_t seed = 0;
    double diameter_tol = 1e-9;
    bool stochastic_replacement = true;
    // Reflection attempts per simplex per iteration before falling back to
    // contraction.
    int max_reflections = 6;
    // A collapsed simplex (diameter below restart_fraction of its edge scale)
    // is rebuilt around its best vertex with the edge shrunk by
    // restart_shrink, floored at restart_edge_floor.
    double restart_fraction = 1e-3;
    double restart_shrink = 0.1;
    double restart_edge_floor = 1e-8;

    void validate() const;
};

/// n+1 affinely independent candidate points with cached objective values,
/// worst index and worst-excluded centroid. The caches are refreshed on every
/// vertex change.
class Simplex {
public:
    Simplex(Eigen::MatrixXd vertices, Eigen::VectorXd values);

    int dimension() const { return static_cast<int>(vertices_.cols()); }
    int vertex_count() const { return static_cast<int>(vertices_.rows()); }
    Eigen::VectorXd vertex(int i) const { return vertices_.row(i).transpose(); }
    double value(int i) const { return values_(i); }
    int worst_index() const { return worst_; }
    int best_index() const { return best_; }
    double best_value() const { return values_(best_); }
    double worst_value() const { return values_(worst_); }
    double second_worst_value() const;
    const Eigen::VectorXd& centroid_excluding_worst() const { return centroid_; }
    void replace_vertex(int i, const Eigen::VectorXd& x, double value);
    double diameter() const;
    const Eigen::MatrixXd& vertices() const { return vertices_; }

private:
    void refresh();

    Eigen::MatrixXd vertices_;  // (n+1) x n, one vertex per row
    Eigen::VectorXd values_;
    Eigen::VectorXd centroid_;
    int worst_ = 0;
    int best_ = 0;
};

/// x_r = (1 + alpha) centroid - alpha worst, alpha > 0.
Eigen::VectorXd reflect(const Simplex& simplex, double alpha);
/// x_e = gamma x_r + (1 - gamma) centroid, gamma > 1.
Eigen::VectorXd expand(const Eigen::VectorXd& reflected, const Eigen::VectorXd& centroid,
                       double gamma);
/// x_c = beta worst + (1 - beta) centroid, 0 <= beta <= 1.
Eigen::VectorXd contract(const Eigen::VectorXd& worst, const Eigen::VectorXd& centroid,
                         double beta);

/// Regular simplex with n+1 vertices centered on the origin; edge length per
/// dimension given by `edge` (a single scalar edge when all entries equal).
Eigen::MatrixXd regular_simplex_vertices(int dimension, const Eigen::VectorXd& edge);

/// One draw from N(0, Sigma) using the Cholesky factor of the regularized
/// covariance.
Eigen::VectorXd gaussian_perturbation(const Eigen::MatrixXd& sigma, std::mt19937_64& rng);

/// Gaussian worst-point replacement: each simplex's worst vertex is moved by
/// a N(0, Sigma) draw projected on the direction of the summed per-simplex
/// centroids; the move is kept only when it improves the worst value. Sigma
/// is the sample covariance of all vertices across the simplexes plus a
/// 1e-9 I floor.
void stochastic_replace(std::vector<Simplex>& simplexes, const Objective& objective,
                        const Bounds& bounds, std::mt19937_64& rng);

struct MinimizeResult {
    Eigen::VectorXd best_point;
    double best_value = 0.0;
    /// (iteration, best value so far), one entry per iteration.
    std::vector<std::pair<int, double>> history;
    long evaluations = 0;
    int iterations = 0;
    bool converged_by_diameter = false;
};

/// Dual-simplex stochastic minimization over a box. Objective exceptions are
/// wrapped into ObjectiveFailure with the offending point attached.
MinimizeResult minimize(const Objective& objective, const Bounds& bounds,
                        const SdsaConfig& config);

/// Closed-loop tuning problem for a single PIDA channel: the candidate gains
/// replace that channel, a step simulation runs, and the measured overshoot
/// and settling time are scored against the desired targets.
struct TuningObjective {
    double desired_overshoot_pct = 5.0;
    double desired_settling_s = 2.0;
    Channel channel = Channel::kAltitude;
    QuadParams quad;
    std::array<PidaGains, 4> base_gains;
    RigidBodyState initial_state;
    double target_value = 0.0;  // absolute reference after the step
    double step_time = 0.5;
    NoiseSettings noise;
    double dt = 1e-3;
    double duration = 12.0;
    std::uint64_t seed = 0;
};

inline constexpr double kTuningPenalty = 1e6;

/// (desired_overshoot - measured)^2 + (desired_settling - measured)^2.
double tuning_cost_from_metrics(const StepMetrics& metrics, const TuningObjective& objective);

/// Runs the channel step simulation for gains [kp, ki, kd, ka, tf]. Responses
/// that never settle or diverge map to kTuningPenalty plus the final error
/// magnitude; the function never throws.
double tuning_cost(const Eigen::VectorXd& gain_vector, const TuningObjective& objective);

/// Envelope of the accepted gain vectors for tuning_cost.
Bounds tuning_bounds();

/// Converts between the optimizer vector and a gains struct.
PidaGains gains_from_vector(const Eigen::VectorXd& v, Channel channel);
Eigen::VectorXd vector_from_gains(const PidaGains& g);

}  // namespace dsim

#endif  // DSIM_SDSA_HPP
