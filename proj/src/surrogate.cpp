#include <mqd/surrogate.hpp>

#include <algorithm>
#include <cmath>

namespace mqd {

void ModelConfig::validate() const
{
    if (hidden_units < 1)
        throw ConfigError("hidden_units must be >= 1");
    if (!(learning_rate > 0.0))
        throw ConfigError("learning_rate must be > 0");
    if (batch_size < 1)
        throw ConfigError("batch_size must be >= 1");
    if (batches_per_generation < 0)
        throw ConfigError("batches_per_generation must be >= 0");
    if (!(adam_beta1 >= 0.0 && adam_beta1 < 1.0) || !(adam_beta2 >= 0.0 && adam_beta2 < 1.0))
        throw ConfigError("adam betas must lie in [0, 1)");
    if (!(adam_epsilon > 0.0))
        throw ConfigError("adam_epsilon must be > 0");
    if (!(fd_step > 0.0))
        throw ConfigError("fd_step must be > 0");
}

NetParams NetParams::zeros_like(const NetParams& p)
{
    return {Mat::Zero(p.w1.rows(), p.w1.cols()), Vec::Zero(p.b1.size()), Mat::Zero(p.w2.rows(), p.w2.cols()),
        Vec::Zero(p.b2.size())};
}

SurrogateNet::SurrogateNet(int inputs, int hidden, int outputs)
{
    if (inputs < 1 || hidden < 1 || outputs < 1)
        throw ConfigError("network dimensions must be >= 1");
    _p.w1 = Mat::Zero(hidden, inputs);
    _p.b1 = Vec::Zero(hidden);
    _p.w2 = Mat::Zero(outputs, hidden);
    _p.b2 = Vec::Zero(outputs);
}

SurrogateNet SurrogateNet::random(int inputs, int hidden, int outputs, Rng& rng)
{
    SurrogateNet net(inputs, hidden, outputs);
    auto fill = [&rng](auto& m, int fan_in) {
        std::uniform_real_distribution<double> u(-1.0 / std::sqrt(fan_in), 1.0 / std::sqrt(fan_in));
        // column-major walk; fixed order keeps seeds reproducible
        for (Eigen::Index j = 0; j < m.cols(); ++j)
            for (Eigen::Index i = 0; i < m.rows(); ++i)
                m(i, j) = u(rng);
    };
    fill(net._p.w1, inputs);
    fill(net._p.b1, inputs);
    fill(net._p.w2, hidden);
    fill(net._p.b2, hidden);
    return net;
}

void SurrogateNet::set_params(NetParams p)
{
    if (p.w1.rows() != _p.w1.rows() || p.w1.cols() != _p.w1.cols() || p.b1.size() != _p.b1.size()
        || p.w2.rows() != _p.w2.rows() || p.w2.cols() != _p.w2.cols() || p.b2.size() != _p.b2.size())
        throw DimensionMismatch("parameter shapes do not match the network architecture");
    _p = std::move(p);
}

Vec SurrogateNet::forward(const Action& a) const
{
    if (a.size() != inputs())
        throw DimensionMismatch("network expects " + std::to_string(inputs()) + " inputs, got "
            + std::to_string(a.size()));
    const Vec h = (_p.w1 * a + _p.b1).cwiseMax(0.0);
    return (_p.w2 * h + _p.b2).array().tanh().matrix();
}

Mat SurrogateNet::forward_batch(const Mat& inputs) const
{
    if (inputs.rows() != this->inputs())
        throw DimensionMismatch("batch rows do not match network inputs");
    const Mat h = ((_p.w1 * inputs).colwise() + _p.b1).cwiseMax(0.0);
    return ((_p.w2 * h).colwise() + _p.b2).array().tanh().matrix();
}

AdamState::AdamState(const SurrogateNet& net) : m(NetParams::zeros_like(net.params())), v(NetParams::zeros_like(net.params()))
{
}

void adam_step(SurrogateNet& net, AdamState& adam, const NetParams& grad, const ModelConfig& cfg)
{
    adam.t += 1;
    const double b1 = cfg.adam_beta1;
    const double b2 = cfg.adam_beta2;
    const double c1 = 1.0 - std::pow(b1, static_cast<double>(adam.t));
    const double c2 = 1.0 - std::pow(b2, static_cast<double>(adam.t));

    auto update = [&](auto& param, auto& m, auto& v, const auto& g) {
        m = b1 * m + (1.0 - b1) * g;
        v = b2 * v + (1.0 - b2) * g.cwiseProduct(g);
        param.array() -= cfg.learning_rate * (m.array() / c1) / ((v.array() / c2).sqrt() + cfg.adam_epsilon);
    };
    NetParams& p = net._p;
    update(p.w1, adam.m.w1, adam.v.w1, grad.w1);
    update(p.b1, adam.m.b1, adam.v.b1, grad.b1);
    update(p.w2, adam.m.w2, adam.v.w2, grad.w2);
    update(p.b2, adam.m.b2, adam.v.b2, grad.b2);
}

NetParams mse_gradient(const SurrogateNet& net, const Mat& inputs, const Mat& targets, double* loss)
{
    const NetParams& p = net.params();
    const Mat pre1 = (p.w1 * inputs).colwise() + p.b1;
    const Mat h = pre1.cwiseMax(0.0);
    const Mat out = ((p.w2 * h).colwise() + p.b2).array().tanh().matrix();
    const Mat err = out - targets;
    const double denom = static_cast<double>(err.size());
    if (loss)
        *loss = err.squaredNorm() / denom;

    // d loss / d pre-tanh
    const Mat d_out = (2.0 / denom) * err.cwiseProduct((1.0 - out.array().square()).matrix());
    // relu'(0) = 0
    const Mat d_hidden = (p.w2.transpose() * d_out).cwiseProduct((pre1.array() > 0.0).cast<double>().matrix());

    NetParams g;
    g.w2 = d_out * h.transpose();
    g.b2 = d_out.rowwise().sum();
    g.w1 = d_hidden * inputs.transpose();
    g.b1 = d_hidden.rowwise().sum();
    return g;
}

Normalizer::Normalizer(const Box& behavior_bounds) : _bounds(behavior_bounds) {}

Eigen::Vector2d Normalizer::behavior_to_unit(const Behavior& b) const
{
    return (2.0 * (b - _bounds.lo).array() / (_bounds.hi - _bounds.lo).array() - 1.0).matrix();
}

Behavior Normalizer::behavior_from_unit(const Eigen::Vector2d& u) const
{
    return _bounds.lo + ((u.array() + 1.0) * 0.5 * (_bounds.hi - _bounds.lo).array()).matrix();
}

Eigen::Vector2d Normalizer::behavior_scale() const
{
    return 0.5 * (_bounds.hi - _bounds.lo);
}

double Normalizer::quality_to_unit(double q) const
{
    if (_q_max <= _q_min)
        return 0.0;
    return 2.0 * (q - _q_min) / (_q_max - _q_min) - 1.0;
}

double Normalizer::quality_from_unit(double u) const
{
    if (_q_max <= _q_min)
        return _q_min;
    return _q_min + (u + 1.0) * 0.5 * (_q_max - _q_min);
}

void Normalizer::set_quality_range(double q_min, double q_max)
{
    _q_min = q_min;
    _q_max = q_max;
}

void Normalizer::fit_quality(std::span<const Skill> skills)
{
    if (skills.empty())
        return;
    auto [lo, hi] = std::minmax_element(skills.begin(), skills.end(),
        [](const Skill& a, const Skill& b) { return a.quality < b.quality; });
    set_quality_range(lo->quality, hi->quality);
}

Prediction predict(const SurrogateNet& net, const Normalizer& norm, const Action& a)
{
    const Vec out = net.forward(a);
    return {norm.behavior_from_unit(out.head<2>()), norm.quality_from_unit(out[kBehaviorDims])};
}

Mat training_targets(std::span<const Skill> skills, const Normalizer& norm)
{
    Mat y(kBehaviorDims + 1, static_cast<Eigen::Index>(skills.size()));
    for (std::size_t i = 0; i < skills.size(); ++i) {
        const auto col = static_cast<Eigen::Index>(i);
        y.col(col).head<2>() = norm.behavior_to_unit(skills[i].behavior);
        y(kBehaviorDims, col) = norm.quality_to_unit(skills[i].quality);
    }
    return y;
}

namespace {

Mat stack_actions(std::span<const Skill> skills)
{
    Mat x(skills.front().action.size(), static_cast<Eigen::Index>(skills.size()));
    for (std::size_t i = 0; i < skills.size(); ++i)
        x.col(static_cast<Eigen::Index>(i)) = skills[i].action;
    return x;
}

} // namespace

double dataset_mse(const SurrogateNet& net, std::span<const Skill> skills, const Normalizer& norm)
{
    if (skills.empty())
        return 0.0;
    const Mat err = net.forward_batch(stack_actions(skills)) - training_targets(skills, norm);
    return err.squaredNorm() / static_cast<double>(err.size());
}

double train(SurrogateNet& net, AdamState& adam, std::span<const Skill> skills, Normalizer& norm,
    const ModelConfig& cfg, Rng& rng)
{
    if (skills.empty())
        throw EmptyRepertoire();
    norm.fit_quality(skills);

    const Mat all_x = stack_actions(skills);
    const Mat all_y = training_targets(skills, norm);
    std::uniform_int_distribution<std::size_t> pick(0, skills.size() - 1);

    Mat x(all_x.rows(), cfg.batch_size);
    Mat y(all_y.rows(), cfg.batch_size);
    double total = 0.0;
    for (int b = 0; b < cfg.batches_per_generation; ++b) {
        for (int j = 0; j < cfg.batch_size; ++j) {
            const auto i = static_cast<Eigen::Index>(pick(rng));
            x.col(j) = all_x.col(i);
            y.col(j) = all_y.col(i);
        }
        double loss = 0.0;
        const NetParams g = mse_gradient(net, x, y, &loss);
        adam_step(net, adam, g, cfg);
        total += loss;
    }
    return cfg.batches_per_generation > 0 ? total / cfg.batches_per_generation : 0.0;
}

double train(SurrogateNet& net, AdamState& adam, const Repertoire& rep, Normalizer& norm, const ModelConfig& cfg,
    Rng& rng)
{
    return train(net, adam, std::span<const Skill>(rep.skills()), norm, cfg, rng);
}

double predicted_novelty(const Repertoire& rep, const Behavior& predicted_behavior)
{
    return rep.novelty(predicted_behavior);
}

double predicted_quality_improvement(const Repertoire& rep, double predicted_quality, const Behavior& predicted_behavior)
{
    const auto nn = rep.knn(predicted_behavior, rep.k());
    double sum = 0.0;
    for (const auto& n : nn)
        sum += predicted_quality - rep[n.index].quality;
    return sum / static_cast<double>(nn.size());
}

Mat jacobian_analytic(const SurrogateNet& net, const Action& a, const Normalizer& norm)
{
    if (a.size() != net.inputs())
        throw DimensionMismatch("jacobian input has wrong length");
    const NetParams& p = net.params();
    const Vec pre1 = p.w1 * a + p.b1;
    const Vec active = (pre1.array() > 0.0).cast<double>().matrix();
    const Vec h = pre1.cwiseMax(0.0);
    const Vec out = (p.w2 * h + p.b2).array().tanh().matrix();

    // rows: scale * tanh' * W2[behavior rows] * diag(relu') * W1
    const Eigen::Vector2d scale = norm.behavior_scale();
    Mat left = p.w2.topRows(kBehaviorDims);
    for (int r = 0; r < kBehaviorDims; ++r)
        left.row(r) *= scale[r] * (1.0 - out[r] * out[r]);
    return (left * active.asDiagonal()) * p.w1;
}

Mat jacobian_fd(const SurrogateNet& net, const Action& a, const Normalizer& norm, double h)
{
    if (!(h > 0.0))
        throw ConfigError("finite-difference step must be > 0");
    const Behavior base = predict(net, norm, a).behavior;
    Mat j(kBehaviorDims, a.size());
    Action probe = a;
    for (Eigen::Index i = 0; i < a.size(); ++i) {
        probe[i] = a[i] + h;
        j.col(i) = (predict(net, norm, probe).behavior - base) / h;
        probe[i] = a[i];
    }
    return j;
}

} // namespace mqd
