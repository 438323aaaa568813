#pragma once

#include <mqd/adaptation.hpp>
#include <mqd/evolution.hpp>
#include <mqd/io.hpp>

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace mqd::cli {

struct AdaptSettings {
    AdaptConfig config;
    std::vector<Strategy> strategies{Strategy::nearest_neighbor, Strategy::local_linearization, Strategy::model_based};
    int num_goals = 1000;
    std::uint64_t goal_seed = 0;
};

struct ExperimentSpec {
    Task task = Task::obstacle2d;
    std::vector<Algorithm> algorithms{Algorithm::qd, Algorithm::mqd, Algorithm::random};
    std::vector<std::uint64_t> seeds{0};
    /// env, seed and algorithm inside are overwritten per run.
    RunConfig run;
    std::filesystem::path out_dir = "out";
    AdaptSettings adapt;
    bool emit_svg = false;
    int jobs = 1;

    void validate() const;
};

/// Strict: schema_version is required and unknown keys are errors.
ExperimentSpec spec_from_json(const io::json& j);
ExperimentSpec load_spec(const std::filesystem::path& path);

std::vector<std::uint64_t> parse_seed_list(const std::string& text);
std::vector<Strategy> parse_strategy_list(const std::string& text);

/// generation,evaluations,screened_out,repertoire_size,coverage,avg_quality
std::string stats_csv(const std::vector<GenerationStats>& stats);
/// generation,evaluations_mean,coverage_mean,coverage_std across runs (sample std, 0 for one run).
std::string coverage_aggregate_csv(const std::vector<std::vector<GenerationStats>>& runs);

struct CoverageSeries {
    std::string label;
    std::vector<double> mean;
    std::vector<double> std;
};
std::string coverage_svg(const std::vector<CoverageSeries>& series);

std::string run_stem(Algorithm algorithm, std::uint64_t seed);

/// Runs every (algorithm, seed) pair, writing per-run stats, repertoire and net
/// files plus one coverage aggregate per algorithm.
int cmd_evolve(const ExperimentSpec& spec, std::ostream& out, std::ostream& err);

struct AdaptRequest {
    std::filesystem::path repertoire;
    std::optional<std::filesystem::path> net;
    /// CSV with header goal_x,goal_y; generated uniformly in bounds when absent.
    std::optional<std::filesystem::path> goals;
    std::filesystem::path out_dir = "out";
    AdaptSettings settings;
    /// Defaults to the repertoire's t_dist.
    std::optional<double> t_dist;
};

std::vector<Behavior> read_goals_csv(const std::string& text);
std::vector<Behavior> uniform_goals(const Box& bounds, int count, std::uint64_t seed);

/// Writes adapt_results.csv (goal_x,goal_y,strategy,steps,error) and
/// adapt_summary.csv (strategy,goals,mean_error,mean_steps).
int cmd_adapt(const AdaptRequest& request, std::ostream& out, std::ostream& err);

/// Prints "coverage <x>" and "avg_quality <y>".
int cmd_coverage(const std::filesystem::path& repertoire, int resolution, std::ostream& out, std::ostream& err);

/// Full command-line entry point.
int run_cli(int argc, char** argv, std::ostream& out, std::ostream& err);

} // namespace mqd::cli
