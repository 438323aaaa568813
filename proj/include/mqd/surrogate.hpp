#pragma once

#include <mqd/core.hpp>
#include <mqd/environment.hpp>
#include <mqd/repertoire.hpp>
#include <mqd/rng.hpp>

#include <span>

namespace mqd {

struct ModelConfig {
    int hidden_units = 32;
    double learning_rate = 1e-3;
    int batch_size = 16;
    int batches_per_generation = 500;
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    double adam_epsilon = 1e-8;
    /// Forward-difference step for jacobian_fd.
    double fd_step = 1e-4;

    void validate() const;
};

struct NetParams {
    Mat w1; // hidden x n
    Vec b1;
    Mat w2; // (m + 1) x hidden
    Vec b2;

    static NetParams zeros_like(const NetParams& p);
};

struct AdamState;

/// One hidden layer, relu then tanh: action -> (normalized behavior, normalized quality).
class SurrogateNet {
public:
    /// All weights zero.
    SurrogateNet(int inputs, int hidden, int outputs);

    /// Uniform in +-1/sqrt(fan_in) for every weight and bias.
    static SurrogateNet random(int inputs, int hidden, int outputs, Rng& rng);

    int inputs() const { return static_cast<int>(_p.w1.cols()); }
    int hidden() const { return static_cast<int>(_p.w1.rows()); }
    int outputs() const { return static_cast<int>(_p.w2.rows()); }

    const NetParams& params() const { return _p; }
    /// Shapes must match the architecture.
    void set_params(NetParams p);

    Vec forward(const Action& a) const;
    /// One sample per column.
    Mat forward_batch(const Mat& inputs) const;

    friend void adam_step(SurrogateNet&, AdamState&, const NetParams&, const ModelConfig&);

private:
    NetParams _p;
};

struct AdamState {
    NetParams m;
    NetParams v;
    long t = 0;

    explicit AdamState(const SurrogateNet& net);
};

/// Bias-corrected Adam update of every parameter.
void adam_step(SurrogateNet& net, AdamState& adam, const NetParams& grad, const ModelConfig& cfg);

/// Loss is the mean over batch columns and output rows of the squared error.
/// Returns the gradient; writes the loss when asked.
NetParams mse_gradient(const SurrogateNet& net, const Mat& inputs, const Mat& targets, double* loss = nullptr);

/// Maps behaviors into [-1, 1] through fixed task bounds and qualities through
/// the min/max of the last training set.
class Normalizer {
public:
    explicit Normalizer(const Box& behavior_bounds);

    const Box& behavior_bounds() const { return _bounds; }
    double quality_min() const { return _q_min; }
    double quality_max() const { return _q_max; }

    Eigen::Vector2d behavior_to_unit(const Behavior& b) const;
    Behavior behavior_from_unit(const Eigen::Vector2d& u) const;
    /// d behavior / d unit, per axis.
    Eigen::Vector2d behavior_scale() const;

    double quality_to_unit(double q) const;
    double quality_from_unit(double u) const;

    void set_quality_range(double q_min, double q_max);
    void fit_quality(std::span<const Skill> skills);

private:
    Box _bounds;
    double _q_min = 0.0;
    double _q_max = 1.0;
};

struct SurrogateModel {
    SurrogateNet net;
    AdamState adam;
    Normalizer norm;

    SurrogateModel(SurrogateNet n, const Box& behavior_bounds) : net(std::move(n)), adam(net), norm(behavior_bounds) {}
};

struct Prediction {
    Behavior behavior;
    double quality = 0.0;
};

/// Forward pass mapped back to task units.
Prediction predict(const SurrogateNet& net, const Normalizer& norm, const Action& a);

/// Stacks [normalized behavior; normalized quality] per column.
Mat training_targets(std::span<const Skill> skills, const Normalizer& norm);

/// Mean squared error on a fixed set, using the normalizer as is.
double dataset_mse(const SurrogateNet& net, std::span<const Skill> skills, const Normalizer& norm);

/// Refits the quality range, then runs batches_per_generation Adam steps on
/// minibatches drawn uniformly with replacement. Returns the mean batch loss.
double train(SurrogateNet& net, AdamState& adam, std::span<const Skill> skills, Normalizer& norm,
    const ModelConfig& cfg, Rng& rng);
double train(SurrogateNet& net, AdamState& adam, const Repertoire& rep, Normalizer& norm, const ModelConfig& cfg,
    Rng& rng);

/// Mean distance from the predicted behavior to its K nearest stored behaviors.
double predicted_novelty(const Repertoire& rep, const Behavior& predicted_behavior);

/// Mean of (predicted quality - neighbor quality) over the K skills nearest to
/// the predicted behavior.
double predicted_quality_improvement(const Repertoire& rep, double predicted_quality, const Behavior& predicted_behavior);

/// d behavior / d action of the denormalized behavior outputs (2 x n).
Mat jacobian_analytic(const SurrogateNet& net, const Action& a, const Normalizer& norm);

/// Forward differences, one column per gene perturbed by h.
Mat jacobian_fd(const SurrogateNet& net, const Action& a, const Normalizer& norm, double h);

} // namespace mqd
