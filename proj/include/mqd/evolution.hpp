#pragma once

#include <mqd/environment.hpp>
#include <mqd/metrics.hpp>
#include <mqd/repertoire.hpp>
#include <mqd/rng.hpp>
#include <mqd/surrogate.hpp>

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace mqd {

enum class Algorithm { qd, mqd, random };

std::string_view to_string(Algorithm algorithm);
Algorithm algorithm_from_string(std::string_view name);

/// Defaults reproduce the 2D experiment settings.
struct RunConfig {
    Algorithm algorithm = Algorithm::qd;
    int max_generations = 250;
    int population_size = 100;
    int k = 5;
    double t_dist = 0.02;
    double t_nov = 0.04;
    double t_qua = 0.0;
    int warmup_samples = 1000;
    double mutation_sigma = 0.05;
    double mutation_rate = 0.3;
    double crossover_rate = 0.5;
    std::uint64_t seed = 0;
    EnvConfig env = EnvConfig::obstacle2d();
    ModelConfig model;
    int coverage_resolution = 1000;

    void validate() const;
    /// Legal but suspicious settings.
    std::vector<std::string> warnings() const;
};

struct GenerationStats {
    int generation = 0;
    long evaluations_cumulative = 0;
    /// Cumulative count of candidates discarded by the surrogate.
    long screened_out = 0;
    std::size_t repertoire_size = 0;
    double coverage = 0.0;
    /// 0 while the repertoire is empty.
    double avg_quality = 0.0;
};

/// Fate of one candidate, in generation order.
enum class Decision : std::uint8_t { added, replaced, rejected, screened };

struct RunResult {
    Repertoire repertoire;
    Archive archive;
    std::vector<GenerationStats> stats;
    std::vector<Decision> decisions;
    std::optional<SurrogateModel> model;
};

/// Draws count parents with replacement, proportional to cached novelty, uniform
/// when every novelty is 0.
std::vector<Action> select_parents(const Repertoire& rep, int count, Rng& rng);

/// Uniform crossover or cloning, then per-gene gaussian mutation, clipped to [-1, 1].
/// Produces population_size children.
std::vector<Action> vary(const std::vector<Action>& parents, const RunConfig& config, Rng& rng);

Action sample_uniform_action(int dim, Rng& rng);

RunResult run_qd(const RunConfig& config);
RunResult run_mqd(const RunConfig& config);
RunResult run_random(const RunConfig& config);
/// Dispatches on config.algorithm.
RunResult run(const RunConfig& config);

} // namespace mqd
