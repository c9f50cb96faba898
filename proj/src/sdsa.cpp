#include "dsim/sdsa.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Cholesky>
#include <Eigen/SVD>

namespace dsim {

Eigen::VectorXd Bounds::clamp(const Eigen::VectorXd& x) const {
    return x.cwiseMax(lower).cwiseMin(upper);
}

void Bounds::validate() const {
    if (lower.size() != upper.size() || lower.size() == 0)
        throw ConfigError("bounds must be non-empty and of equal dimension");
    if (((upper - lower).array() <= 0.0).any())
        throw ConfigError("upper bounds must exceed lower bounds");
}

void SdsaConfig::validate() const {
    if (!(initial_scale > 0.0)) throw ConfigError("initial_scale must be positive");
    if (!(alpha_max > 0.0)) throw ConfigError("alpha_max must be positive");
    if (!(gamma_max > 1.0)) throw ConfigError("gamma_max must exceed 1");
    if (!(beta_max > 0.0 && beta_max <= 1.0)) throw ConfigError("beta_max must be in (0, 1]");
    if (max_iterations < 1) throw ConfigError("max_iterations must be at least 1");
    if (n_simplexes < 1) throw ConfigError("need at least one simplex");
    if (max_reflections < 1) throw ConfigError("max_reflections must be at least 1");
}

Simplex::Simplex(Eigen::MatrixXd vertices, Eigen::VectorXd values)
    : vertices_(std::move(vertices)), values_(std::move(values)) {
    if (vertices_.rows() != vertices_.cols() + 1 || values_.size() != vertices_.rows())
        throw DomainError("simplex needs n+1 vertices in R^n with one value each");
    refresh();
}

double Simplex::second_worst_value() const {
    double sw = -std::numeric_limits<double>::infinity();
    for (int i = 0; i < vertex_count(); ++i)
        if (i != worst_) sw = std::max(sw, values_(i));
    return sw;
}

void Simplex::replace_vertex(int i, const Eigen::VectorXd& x, double value) {
    vertices_.row(i) = x.transpose();
    values_(i) = value;
    refresh();
}

double Simplex::diameter() const {
    double d = 0.0;
    for (int i = 0; i < vertex_count(); ++i)
        for (int j = i + 1; j < vertex_count(); ++j)
            d = std::max(d, (vertices_.row(i) - vertices_.row(j)).norm());
    return d;
}

void Simplex::refresh() {
    values_.maxCoeff(&worst_);
    values_.minCoeff(&best_);
    centroid_ = (vertices_.colwise().sum() - vertices_.row(worst_)).transpose() /
                static_cast<double>(dimension());
}

Eigen::VectorXd reflect(const Simplex& simplex, double alpha) {
    if (!(alpha > 0.0)) throw DomainError("reflection coefficient must be positive");
    return (1.0 + alpha) * simplex.centroid_excluding_worst() -
           alpha * simplex.vertex(simplex.worst_index());
}

Eigen::VectorXd expand(const Eigen::VectorXd& reflected, const Eigen::VectorXd& centroid,
                       double gamma) {
    if (!(gamma > 1.0)) throw DomainError("expansion coefficient must exceed 1");
    return gamma * reflected + (1.0 - gamma) * centroid;
}

Eigen::VectorXd contract(const Eigen::VectorXd& worst, const Eigen::VectorXd& centroid,
                         double beta) {
    if (!(beta >= 0.0 && beta <= 1.0))
        throw DomainError("contraction coefficient must lie in [0, 1]");
    return beta * worst + (1.0 - beta) * centroid;
}

Eigen::MatrixXd regular_simplex_vertices(int dimension, const Eigen::VectorXd& edge) {
    if (dimension < 1 || edge.size() != dimension)
        throw DomainError("edge vector must match the simplex dimension");
    const int m = dimension + 1;
    // Vertices of the standard simplex in R^m, centered, projected onto its
    // n-dimensional span; pairwise distances are sqrt(2) before scaling.
    Eigen::MatrixXd d = Eigen::MatrixXd::Identity(m, m);
    d.array() -= 1.0 / static_cast<double>(m);
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(d, Eigen::ComputeThinV);
    Eigen::MatrixXd coords = d * svd.matrixV().leftCols(dimension);  // m x n
    coords /= std::sqrt(2.0);
    return coords * edge.asDiagonal();
}

Eigen::VectorXd gaussian_perturbation(const Eigen::MatrixXd& sigma, std::mt19937_64& rng) {
    Eigen::LLT<Eigen::MatrixXd> llt(sigma);
    if (llt.info() != Eigen::Success)
        throw DomainError("covariance must be positive definite after regularization");
    std::normal_distribution<double> gauss(0.0, 1.0);
    Eigen::VectorXd z(sigma.rows());
    for (int i = 0; i < z.size(); ++i) z(i) = gauss(rng);
    return llt.matrixL() * z;
}

namespace {

Eigen::MatrixXd vertex_covariance(const std::vector<Simplex>& simplexes) {
    int total = 0;
    for (const auto& s : simplexes) total += s.vertex_count();
    const int n = simplexes.front().dimension();
    Eigen::MatrixXd pts(total, n);
    int row = 0;
    for (const auto& s : simplexes) {
        pts.middleRows(row, s.vertex_count()) = s.vertices();
        row += s.vertex_count();
    }
    const Eigen::RowVectorXd mean = pts.colwise().mean();
    const Eigen::MatrixXd centered = pts.rowwise() - mean;
    Eigen::MatrixXd cov = centered.transpose() * centered / std::max(1, total - 1);
    cov += 1e-9 * Eigen::MatrixXd::Identity(n, n);
    return cov;
}

}  // namespace

void stochastic_replace(std::vector<Simplex>& simplexes, const Objective& objective,
                        const Bounds& bounds, std::mt19937_64& rng) {
    if (simplexes.empty()) return;
    const int n = simplexes.front().dimension();
    const Eigen::MatrixXd sigma = vertex_covariance(simplexes);

    Eigen::VectorXd global_centroid = Eigen::VectorXd::Zero(n);
    for (const auto& s : simplexes) global_centroid += s.centroid_excluding_worst();

    const double norm2 = global_centroid.squaredNorm();
    for (auto& s : simplexes) {
        const Eigen::VectorXd delta = gaussian_perturbation(sigma, rng);
        Eigen::VectorXd offset = delta;
        if (norm2 > 0.0)
            offset = (delta.dot(global_centroid) / norm2) * global_centroid;
        const int h = s.worst_index();
        const Eigen::VectorXd candidate = bounds.clamp(s.vertex(h) + offset);
        const double value = objective(candidate);
        if (value < s.worst_value()) s.replace_vertex(h, candidate, value);
    }
}

namespace {

struct Evaluator {
    const Objective& objective;
    long count = 0;

    double operator()(const Eigen::VectorXd& x) {
        ++count;
        try {
            const double v = objective(x);
            if (std::isnan(v)) throw ObjectiveFailure("objective returned NaN");
            return v;
        } catch (const ObjectiveFailure&) {
            throw;
        } catch (const std::exception& e) {
            std::string at = " at point [";
            for (int i = 0; i < x.size(); ++i)
                at += (i ? ", " : "") + std::to_string(x(i));
            throw ObjectiveFailure(std::string("objective failed: ") + e.what() + at + "]");
        }
    }
};

// Places a regular simplex centered at `center`, translated (not clamped)
// back into the box so the vertices stay affinely independent.
Eigen::MatrixXd place_simplex(const Eigen::MatrixXd& base, const Eigen::VectorXd& center,
                              const Bounds& bounds) {
    Eigen::MatrixXd v = base;
    v.rowwise() += center.transpose();
    for (int j = 0; j < v.cols(); ++j) {
        const double over = v.col(j).maxCoeff() - bounds.upper(j);
        if (over > 0.0) v.col(j).array() -= over;
        const double under = bounds.lower(j) - v.col(j).minCoeff();
        if (under > 0.0) v.col(j).array() += under;
        v.col(j) = v.col(j).cwiseMax(bounds.lower(j)).cwiseMin(bounds.upper(j));
    }
    return v;
}

Eigen::VectorXd uniform_point(const Bounds& bounds, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    Eigen::VectorXd x(bounds.dimension());
    for (int i = 0; i < x.size(); ++i)
        x(i) = bounds.lower(i) + unit(rng) * (bounds.upper(i) - bounds.lower(i));
    return x;
}

// Uniform draw from (0, cap]: complement of [0, 1) keeps the endpoint.
double draw_coefficient(double cap, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    return cap * (1.0 - unit(rng));
}

}  // namespace

MinimizeResult minimize(const Objective& objective, const Bounds& bounds,
                        const SdsaConfig& config) {
    config.validate();
    bounds.validate();
    const int n = bounds.dimension();

    std::mt19937_64 rng(config.seed);
    Evaluator eval{objective};

    // Edge of the starting simplexes: a_max, capped per dimension so the
    // simplex fits inside the box without degenerating against its faces.
    const Eigen::VectorXd width = bounds.upper - bounds.lower;
    const Eigen::VectorXd initial_edge =
        (0.4 * width).cwiseMin(Eigen::VectorXd::Constant(n, config.initial_scale));

    std::vector<Simplex> simplexes;
    std::vector<Eigen::VectorXd> edges;
    for (int s = 0; s < config.n_simplexes; ++s) {
        const Eigen::MatrixXd base = regular_simplex_vertices(n, initial_edge);
        const Eigen::MatrixXd verts = place_simplex(base, uniform_point(bounds, rng), bounds);
        Eigen::VectorXd values(n + 1);
        for (int i = 0; i <= n; ++i) values(i) = eval(verts.row(i).transpose());
        simplexes.emplace_back(verts, values);
        edges.push_back(initial_edge);
    }

    MinimizeResult result;
    result.best_value = std::numeric_limits<double>::infinity();
    auto track_best = [&]() {
        for (const auto& s : simplexes) {
            if (s.best_value() < result.best_value) {
                result.best_value = s.best_value();
                result.best_point = s.vertex(s.best_index());
            }
        }
    };
    track_best();

    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (int iter = 0; iter < config.max_iterations; ++iter) {
        for (auto& s : simplexes) {
            int accepted = 0;
            for (int attempt = 0; attempt < config.max_reflections; ++attempt) {
                const double alpha = draw_coefficient(config.alpha_max, rng);
                const Eigen::VectorXd xr = bounds.clamp(reflect(s, alpha));
                const double fr = eval(xr);
                if (fr < s.best_value()) {
                    const double gamma = 1.0 + (config.gamma_max - 1.0) * (1.0 - unit(rng));
                    const Eigen::VectorXd xe =
                        bounds.clamp(expand(xr, s.centroid_excluding_worst(), gamma));
                    const double fe = eval(xe);
                    if (fe < fr)
                        s.replace_vertex(s.worst_index(), xe, fe);
                    else
                        s.replace_vertex(s.worst_index(), xr, fr);
                    ++accepted;
                } else if (fr < s.worst_value()) {
                    s.replace_vertex(s.worst_index(), xr, fr);
                    ++accepted;
                } else {
                    break;
                }
            }
            if (accepted == 0) {
                const double beta = draw_coefficient(config.beta_max, rng);
                const int h = s.worst_index();
                const Eigen::VectorXd xc =
                    bounds.clamp(contract(s.vertex(h), s.centroid_excluding_worst(), beta));
                const double fc = eval(xc);
                if (fc < s.worst_value()) s.replace_vertex(h, xc, fc);
            }
        }

        if (config.stochastic_replacement) {
            auto wrapped = [&](const Eigen::VectorXd& x) { return eval(x); };
            stochastic_replace(simplexes, wrapped, bounds, rng);
        }

        track_best();
        result.history.emplace_back(iter, result.best_value);
        result.iterations = iter + 1;

        // Collapsed simplexes restart around their own best vertex on a
        // shrunken edge; the incumbent vertex is kept so the best value
        // stays monotone.
        bool all_collapsed = true;
        for (std::size_t si = 0; si < simplexes.size(); ++si) {
            auto& s = simplexes[si];
            const double d = s.diameter();
            if (d >= config.diameter_tol) all_collapsed = false;
            const double scale = edges[si].maxCoeff();
            if (d < config.restart_fraction * scale && scale > config.restart_edge_floor) {
                edges[si] = (edges[si] * config.restart_shrink)
                                .cwiseMax(Eigen::VectorXd::Constant(n, config.restart_edge_floor));
                const Eigen::VectorXd keep_x = s.vertex(s.best_index());
                const double keep_f = s.best_value();
                const Eigen::MatrixXd base = regular_simplex_vertices(n, edges[si]);
                Eigen::MatrixXd verts = place_simplex(base, keep_x, bounds);
                Eigen::VectorXd values(n + 1);
                for (int i = 0; i <= n; ++i) values(i) = eval(verts.row(i).transpose());
                Simplex fresh(verts, values);
                int w = fresh.worst_index();
                if (keep_f < fresh.value(w)) fresh.replace_vertex(w, keep_x, keep_f);
                s = fresh;
                all_collapsed = false;
            }
        }
        if (all_collapsed) {
            result.converged_by_diameter = true;
            break;
        }
    }

    result.evaluations = eval.count;
    return result;
}

double tuning_cost_from_metrics(const StepMetrics& metrics, const TuningObjective& objective) {
    const double d_os = objective.desired_overshoot_pct - metrics.overshoot_pct;
    const double d_ts = objective.desired_settling_s - metrics.settling_time_s;
    return d_os * d_os + d_ts * d_ts;
}

Bounds tuning_bounds() {
    Bounds b;
    b.lower.resize(5);
    b.upper.resize(5);
    b.lower << 0.0, 0.0, 0.0, 0.0, 0.005;  // kp, ki, kd, ka, tf
    b.upper << 50.0, 30.0, 50.0, 30.0, 0.5;
    return b;
}

PidaGains gains_from_vector(const Eigen::VectorXd& v, Channel channel) {
    if (v.size() != 5) throw DomainError("gain vector must be [kp, ki, kd, ka, tf]");
    PidaGains g;
    g.kp = v(0);
    g.ki = v(1);
    g.kd = v(2);
    g.ka = v(3);
    g.tf = v(4);
    g.channel = channel;
    return g;
}

Eigen::VectorXd vector_from_gains(const PidaGains& g) {
    Eigen::VectorXd v(5);
    v << g.kp, g.ki, g.kd, g.ka, g.tf;
    return v;
}

double tuning_cost(const Eigen::VectorXd& gain_vector, const TuningObjective& objective) {
    std::array<PidaGains, 4> gains = objective.base_gains;
    const int idx = static_cast<int>(objective.channel);
    gains[idx] = gains_from_vector(gain_vector, objective.channel);

    StepCommands commands;
    commands.initial = ControllerCommand{0.0, 0.0, 0.0, objective.initial_state.altitude()};
    commands.stepped = commands.initial;
    switch (objective.channel) {
        case Channel::kRoll: commands.stepped.roll = objective.target_value; break;
        case Channel::kPitch: commands.stepped.pitch = objective.target_value; break;
        case Channel::kYaw: commands.stepped.yaw = objective.target_value; break;
        case Channel::kAltitude: commands.stepped.altitude = objective.target_value; break;
    }
    commands.step_time = objective.step_time;

    ClosedLoopConfig config{objective.dt, objective.duration, objective.seed};
    try {
        const TrajectoryLog log = run_step_simulation(objective.quad, gains, commands,
                                                      objective.noise, config,
                                                      objective.initial_state);
        const std::vector<double> series = objective.channel == Channel::kAltitude
                                               ? log.altitude()
                                               : log.channel_series(objective.channel);
        const double reference = objective.channel == Channel::kAltitude
                                     ? commands.stepped.altitude
                                     : objective.target_value;
        try {
            const StepMetrics metrics =
                step_response_metrics(log.t, series, reference, objective.step_time);
            return tuning_cost_from_metrics(metrics, objective);
        } catch (const NotSettled&) {
            return kTuningPenalty + std::abs(series.back() - reference);
        }
    } catch (const SimError&) {
        return kTuningPenalty + kTuningPenalty;  // diverged or singular attitude
    }
}

}  // namespace dsim
