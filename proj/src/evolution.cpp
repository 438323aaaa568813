#include <mqd/evolution.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>

namespace mqd {

std::string_view to_string(Algorithm algorithm)
{
    switch (algorithm) {
    case Algorithm::qd:
        return "qd";
    case Algorithm::mqd:
        return "mqd";
    case Algorithm::random:
        return "random";
    }
    return "unknown";
}

Algorithm algorithm_from_string(std::string_view name)
{
    if (name == "qd")
        return Algorithm::qd;
    if (name == "mqd")
        return Algorithm::mqd;
    if (name == "random")
        return Algorithm::random;
    throw ConfigError("unknown algorithm '" + std::string(name) + "'");
}

void RunConfig::validate() const
{
    if (max_generations < 1)
        throw ConfigError("max_generations must be >= 1");
    if (population_size < 1)
        throw ConfigError("population_size must be >= 1");
    if (k < 1)
        throw ConfigError("k must be >= 1");
    if (!(t_dist > 0.0))
        throw ConfigError("t_dist must be > 0");
    if (std::isnan(t_nov) || std::isnan(t_qua))
        throw ConfigError("screening thresholds must not be NaN");
    if (warmup_samples < 0)
        throw ConfigError("warmup_samples must be >= 0");
    if (!(mutation_sigma >= 0.0))
        throw ConfigError("mutation_sigma must be >= 0");
    for (double rate : {mutation_rate, crossover_rate})
        if (!(rate >= 0.0 && rate <= 1.0))
            throw ConfigError("rates must lie in [0, 1]");
    if (coverage_resolution < 64)
        throw ConfigError("coverage_resolution must be >= 64");
    env.validate();
    model.validate();
}

std::vector<std::string> RunConfig::warnings() const
{
    std::vector<std::string> out;
    if (algorithm == Algorithm::mqd && t_nov < t_dist)
        out.emplace_back("t_nov is below t_dist; screening will pass candidates that cannot be added");
    return out;
}

Action sample_uniform_action(int dim, Rng& rng)
{
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    Action a(dim);
    for (int i = 0; i < dim; ++i)
        a[i] = u(rng);
    return a;
}

std::vector<Action> select_parents(const Repertoire& rep, int count, Rng& rng)
{
    if (rep.empty())
        throw EmptyRepertoire();

    std::vector<double> weights(rep.size());
    for (std::size_t i = 0; i < rep.size(); ++i)
        weights[i] = rep[i].novelty;
    const double total = std::accumulate(weights.begin(), weights.end(), 0.0);

    std::vector<Action> parents;
    parents.reserve(static_cast<std::size_t>(count));
    if (total > 0.0) {
        std::discrete_distribution<std::size_t> pick(weights.begin(), weights.end());
        for (int i = 0; i < count; ++i)
            parents.push_back(rep[pick(rng)].action);
    }
    else {
        std::uniform_int_distribution<std::size_t> pick(0, rep.size() - 1);
        for (int i = 0; i < count; ++i)
            parents.push_back(rep[pick(rng)].action);
    }
    return parents;
}

std::vector<Action> vary(const std::vector<Action>& parents, const RunConfig& config, Rng& rng)
{
    if (parents.empty())
        throw Error("vary needs at least one parent");

    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::uniform_int_distribution<std::size_t> pick(0, parents.size() - 1);
    std::normal_distribution<double> noise(0.0, config.mutation_sigma);

    std::vector<Action> children;
    children.reserve(static_cast<std::size_t>(config.population_size));
    for (int c = 0; c < config.population_size; ++c) {
        Action child;
        if (unit(rng) < config.crossover_rate) {
            const Action& a = parents[pick(rng)];
            const Action& b = parents[pick(rng)];
            child = a;
            for (Eigen::Index i = 0; i < child.size(); ++i)
                if (unit(rng) < 0.5)
                    child[i] = b[i];
        }
        else {
            child = parents[pick(rng)];
        }
        for (Eigen::Index i = 0; i < child.size(); ++i)
            if (unit(rng) < config.mutation_rate)
                child[i] += noise(rng);
        children.push_back(child.cwiseMax(-1.0).cwiseMin(1.0));
    }
    return children;
}

namespace {

Decision to_decision(InsertKind kind)
{
    switch (kind) {
    case InsertKind::added:
        return Decision::added;
    case InsertKind::replaced:
        return Decision::replaced;
    case InsertKind::rejected:
        break;
    }
    return Decision::rejected;
}

RunResult run_loop(const RunConfig& config, Algorithm algorithm)
{
    config.validate();
    const int dim = config.env.action_dim();
    const bool use_model = algorithm == Algorithm::mqd;

    RunStreams streams(config.seed);
    RunResult result{Repertoire(config.k, config.t_dist), Archive{}, {}, {}, std::nullopt};
    Repertoire& rep = result.repertoire;
    CoverageTracker tracker(config.env.bounds, CoverageConfig{config.t_dist, config.coverage_resolution});

    if (use_model)
        result.model.emplace(SurrogateNet::random(dim, config.model.hidden_units, kBehaviorDims + 1, streams.model_init),
            config.env.bounds);
    bool model_ready = false;

    long evaluations = 0;
    long screened = 0;
    result.stats.reserve(static_cast<std::size_t>(config.max_generations));
    result.decisions.reserve(static_cast<std::size_t>(config.max_generations) * static_cast<std::size_t>(config.population_size));

    for (int gen = 0; gen < config.max_generations; ++gen) {
        std::vector<Action> population;
        if (gen == 0 || algorithm == Algorithm::random || rep.empty()) {
            population.reserve(static_cast<std::size_t>(config.population_size));
            for (int i = 0; i < config.population_size; ++i)
                population.push_back(sample_uniform_action(dim, streams.init));
        }
        else {
            population = vary(select_parents(rep, config.population_size, streams.selection), config, streams.variation);
        }

        for (const Action& a : population) {
            if (model_ready) {
                const Prediction p = predict(result.model->net, result.model->norm, a);
                const bool promising = predicted_novelty(rep, p.behavior) > config.t_nov
                    || predicted_quality_improvement(rep, p.quality, p.behavior) > config.t_qua;
                if (!promising) {
                    ++screened;
                    result.decisions.push_back(Decision::screened);
                    continue;
                }
            }

            const Evaluation ev = evaluate(a, config.env);
            ++evaluations;
            const Behavior behavior = ev.behavior;
            const InsertOutcome outcome = rep.try_insert(result.archive, Skill{a, behavior, ev.quality, 0.0});
            if (outcome.kind == InsertKind::added)
                tracker.add(behavior);
            else if (outcome.kind == InsertKind::replaced) {
                tracker.remove(outcome.replaced->behavior);
                tracker.add(behavior);
            }
            result.decisions.push_back(to_decision(outcome.kind));
        }

        rep.refresh_novelties();

        if (use_model && evaluations >= config.warmup_samples && !rep.empty()) {
            train(result.model->net, result.model->adam, rep, result.model->norm, config.model, streams.batch_sampling);
            model_ready = true;
        }

        GenerationStats st;
        st.generation = gen;
        st.evaluations_cumulative = evaluations;
        st.screened_out = screened;
        st.repertoire_size = rep.size();
        st.coverage = tracker.value();
        st.avg_quality = rep.empty() ? 0.0 : avg_quality(rep);
        result.stats.push_back(st);
    }
    return result;
}

} // namespace

RunResult run_qd(const RunConfig& config)
{
    return run_loop(config, Algorithm::qd);
}

RunResult run_mqd(const RunConfig& config)
{
    return run_loop(config, Algorithm::mqd);
}

RunResult run_random(const RunConfig& config)
{
    return run_loop(config, Algorithm::random);
}

RunResult run(const RunConfig& config)
{
    return run_loop(config, config.algorithm);
}

} // namespace mqd
