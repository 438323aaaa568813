#include <mqd/adaptation.hpp>

#include <Eigen/Cholesky>
#include <Eigen/SVD>

#include <algorithm>
#include <numeric>

namespace mqd {

std::string_view to_string(Strategy strategy)
{
    switch (strategy) {
    case Strategy::nearest_neighbor:
        return "nearest_neighbor";
    case Strategy::local_linearization:
        return "local_linearization";
    case Strategy::model_based:
        return "model_based";
    }
    return "unknown";
}

Strategy strategy_from_string(std::string_view name)
{
    if (name == "nearest_neighbor")
        return Strategy::nearest_neighbor;
    if (name == "local_linearization")
        return Strategy::local_linearization;
    if (name == "model_based")
        return Strategy::model_based;
    throw ConfigError("unknown adaptation strategy '" + std::string(name) + "'");
}

void AdaptConfig::validate() const
{
    if (!(step_size >= 0.0))
        throw ConfigError("step_size must be >= 0");
    if (max_steps < 0)
        throw ConfigError("max_steps must be >= 0");
    if (!(t_dist > 0.0))
        throw ConfigError("t_dist must be > 0");
    if (k < 1)
        throw ConfigError("k must be >= 1");
    if (!(ridge_epsilon >= 0.0) || !(sv_cutoff >= 0.0))
        throw ConfigError("ridge_epsilon and sv_cutoff must be >= 0");
    if (!(fd_step > 0.0))
        throw ConfigError("fd_step must be > 0");
}

Mat pseudo_inverse(const Mat& m, double sv_cutoff)
{
    if (m.size() == 0)
        return Mat::Zero(m.cols(), m.rows());
    Eigen::JacobiSVD<Mat> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const Vec& s = svd.singularValues();
    const double limit = sv_cutoff * s.maxCoeff();
    Vec inv = Vec::Zero(s.size());
    for (Eigen::Index i = 0; i < s.size(); ++i)
        if (s[i] > limit && s[i] > 0.0)
            inv[i] = 1.0 / s[i];
    return svd.matrixV() * inv.asDiagonal() * svd.matrixU().transpose();
}

Mat jacobian_local_linearization(const Repertoire& rep, const Action& a_j, const Behavior& b_j, int k, double ridge_epsilon)
{
    if (rep.empty())
        throw EmptyRepertoire();
    const auto n = a_j.size();

    std::vector<std::pair<double, std::size_t>> by_distance(rep.size());
    for (std::size_t i = 0; i < rep.size(); ++i) {
        if (rep[i].action.size() != n)
            throw DimensionMismatch("repertoire action length differs from a_j");
        by_distance[i] = {(rep[i].action - a_j).norm(), i};
    }
    const auto count = std::min<std::size_t>(static_cast<std::size_t>(k), rep.size());
    std::partial_sort(by_distance.begin(), by_distance.begin() + static_cast<std::ptrdiff_t>(count), by_distance.end());

    Mat g(n, static_cast<Eigen::Index>(count));
    Mat b(kBehaviorDims, static_cast<Eigen::Index>(count));
    for (std::size_t c = 0; c < count; ++c) {
        const Skill& s = rep[by_distance[c].second];
        g.col(static_cast<Eigen::Index>(c)) = s.action - a_j;
        b.col(static_cast<Eigen::Index>(c)) = s.behavior - b_j;
    }

    const Mat gram = g * g.transpose() + ridge_epsilon * Mat::Identity(n, n);
    // J = B G^T gram^-1, solved as gram J^T = G B^T (gram is symmetric)
    const Mat jt = gram.ldlt().solve(g * b.transpose());
    return jt.transpose();
}

AdaptResult adapt(const Repertoire& rep, const BehaviorFn& rollout, const SurrogateModel* model, const Behavior& b_star,
    const AdaptConfig& cfg)
{
    cfg.validate();
    if (rep.empty())
        throw EmptyRepertoire();
    if (cfg.strategy == Strategy::model_based && model == nullptr)
        throw ConfigError("model_based adaptation needs a surrogate model");

    const Skill& start = rep[rep.knn(b_star, 1).front().index];
    Action a = start.action;
    Behavior b = start.behavior;

    AdaptResult result;
    result.final_action = a;
    result.final_behavior = b;
    result.behavioral_error = (b - b_star).norm();
    if (cfg.strategy == Strategy::nearest_neighbor)
        return result;

    double error = result.behavioral_error;
    while (error > cfg.t_dist && result.steps_executed < cfg.max_steps) {
        Mat jac;
        if (cfg.strategy == Strategy::local_linearization)
            jac = jacobian_local_linearization(rep, a, b, cfg.k, cfg.ridge_epsilon);
        else if (cfg.finite_difference)
            jac = jacobian_fd(model->net, a, model->norm, cfg.fd_step);
        else
            jac = jacobian_analytic(model->net, a, model->norm);

        a = (a + cfg.step_size * pseudo_inverse(jac, cfg.sv_cutoff) * (b_star - b)).cwiseMax(-1.0).cwiseMin(1.0);
        b = rollout(a);
        ++result.steps_executed;
        result.trajectory.push_back({a, b});

        error = (b - b_star).norm();
        if (error < result.behavioral_error) {
            result.behavioral_error = error;
            result.final_action = a;
            result.final_behavior = b;
        }
    }
    return result;
}

AdaptResult adapt(const Repertoire& rep, const EnvConfig& env, const SurrogateModel* model, const Behavior& b_star,
    const AdaptConfig& cfg)
{
    return adapt(rep, [&env](const Action& a) { return evaluate(a, env).behavior; }, model, b_star, cfg);
}

} // namespace mqd
