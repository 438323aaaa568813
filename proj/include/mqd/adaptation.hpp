#pragma once

#include <mqd/environment.hpp>
#include <mqd/repertoire.hpp>
#include <mqd/surrogate.hpp>

#include <functional>
#include <string_view>
#include <vector>

namespace mqd {

enum class Strategy { nearest_neighbor, local_linearization, model_based };

std::string_view to_string(Strategy strategy);
Strategy strategy_from_string(std::string_view name);

struct AdaptConfig {
    Strategy strategy = Strategy::model_based;
    double step_size = 0.1;
    int max_steps = 10;
    double t_dist = 0.02;
    /// Action-space neighbors for the local linearization.
    int k = 5;
    double ridge_epsilon = 1e-6;
    double sv_cutoff = 1e-8;
    /// model_based only: forward differences instead of the analytic Jacobian.
    bool finite_difference = false;
    double fd_step = 1e-4;

    void validate() const;
};

struct AdaptStep {
    Action action;
    Behavior behavior;
};

struct AdaptResult {
    Action final_action;
    Behavior final_behavior;
    int steps_executed = 0;
    double behavioral_error = 0.0;
    /// One entry per environment evaluation.
    std::vector<AdaptStep> trajectory;
};

using BehaviorFn = std::function<Behavior(const Action&)>;

/// Starts from the stored skill nearest to b_star and takes damped pseudo-inverse
/// steps until within t_dist or out of steps. Returns the best pair seen.
AdaptResult adapt(const Repertoire& rep, const BehaviorFn& rollout, const SurrogateModel* model, const Behavior& b_star,
    const AdaptConfig& cfg);
AdaptResult adapt(const Repertoire& rep, const EnvConfig& env, const SurrogateModel* model, const Behavior& b_star,
    const AdaptConfig& cfg);

/// Ridge least-squares fit of the behavior/action map around (a_j, b_j) from the
/// k stored skills nearest to a_j in action space.
Mat jacobian_local_linearization(const Repertoire& rep, const Action& a_j, const Behavior& b_j, int k, double ridge_epsilon);

/// SVD pseudo-inverse; singular values below sv_cutoff * max are dropped.
Mat pseudo_inverse(const Mat& m, double sv_cutoff);

} // namespace mqd
