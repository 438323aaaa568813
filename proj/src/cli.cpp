#include <mqd/cli.hpp>

#include <CLI11.hpp>

#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>

namespace mqd::cli {

namespace {

std::string num(double v)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.9g", v);
    return buf;
}

std::vector<std::string> split(const std::string& text, char sep)
{
    std::vector<std::string> parts;
    std::string cur;
    std::istringstream in(text);
    while (std::getline(in, cur, sep)) {
        const auto b = cur.find_first_not_of(" \t\r");
        const auto e = cur.find_last_not_of(" \t\r");
        parts.push_back(b == std::string::npos ? std::string() : cur.substr(b, e - b + 1));
    }
    return parts;
}

AdaptSettings adapt_settings_from_json(const io::json& j, AdaptSettings s)
{
    io::StrictObject o(j, "adapt");
    if (o.has("strategies")) {
        s.strategies.clear();
        for (const auto& name : o.get<std::vector<std::string>>("strategies"))
            s.strategies.push_back(strategy_from_string(name));
    }
    o.read_real("step_size", s.config.step_size);
    o.read("max_steps", s.config.max_steps);
    o.read("k", s.config.k);
    o.read_real("ridge_epsilon", s.config.ridge_epsilon);
    o.read_real("sv_cutoff", s.config.sv_cutoff);
    o.read("finite_difference", s.config.finite_difference);
    o.read_real("fd_step", s.config.fd_step);
    o.read("num_goals", s.num_goals);
    o.read("goal_seed", s.goal_seed);
    o.finish();
    return s;
}

} // namespace

void ExperimentSpec::validate() const
{
    if (algorithms.empty())
        throw ConfigError("at least one algorithm is required");
    if (seeds.empty())
        throw ConfigError("at least one seed is required");
    if (jobs < 1)
        throw ConfigError("jobs must be >= 1");
    if (adapt.num_goals < 0)
        throw ConfigError("num_goals must be >= 0");
    RunConfig probe = run;
    probe.env = EnvConfig::for_task(task);
    if (run.env.task == task)
        probe.env = run.env;
    probe.validate();
    adapt.config.validate();
}

ExperimentSpec spec_from_json(const io::json& j)
{
    ExperimentSpec spec;
    io::StrictObject o(j, "config");
    const int version = o.get<int>("schema_version");
    if (version != io::kSchemaVersion)
        throw ParseError("config: unsupported schema_version " + std::to_string(version));
    if (o.has("task"))
        spec.task = task_from_string(o.get<std::string>("task"));
    if (o.has("algorithms")) {
        spec.algorithms.clear();
        for (const auto& name : o.get<std::vector<std::string>>("algorithms"))
            spec.algorithms.push_back(algorithm_from_string(name));
    }
    o.read("seeds", spec.seeds);
    if (o.has("run"))
        spec.run = io::run_config_from_json(o.at("run"), spec.run);
    spec.run.env = o.has("env") ? io::env_from_json(o.at("env"), spec.task) : EnvConfig::for_task(spec.task);
    if (o.has("adapt"))
        spec.adapt = adapt_settings_from_json(o.at("adapt"), spec.adapt);
    if (o.has("out"))
        spec.out_dir = o.get<std::string>("out");
    o.read("emit_svg", spec.emit_svg);
    o.read("jobs", spec.jobs);
    o.finish();
    spec.validate();
    return spec;
}

ExperimentSpec load_spec(const std::filesystem::path& path)
{
    try {
        return spec_from_json(io::parse_document(io::read_file(path)));
    }
    catch (const Error& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
}

std::vector<std::uint64_t> parse_seed_list(const std::string& text)
{
    std::vector<std::uint64_t> seeds;
    for (const auto& part : split(text, ',')) {
        std::size_t used = 0;
        unsigned long long v = 0;
        try {
            v = std::stoull(part, &used);
        }
        catch (const std::exception&) {
            used = 0;
        }
        if (part.empty() || used != part.size() || part[0] == '-')
            throw ConfigError("bad seed '" + part + "'");
        seeds.push_back(v);
    }
    if (seeds.empty())
        throw ConfigError("empty seed list");
    return seeds;
}

std::vector<Strategy> parse_strategy_list(const std::string& text)
{
    std::vector<Strategy> out;
    for (const auto& part : split(text, ','))
        out.push_back(strategy_from_string(part));
    if (out.empty())
        throw ConfigError("empty strategy list");
    return out;
}

std::string stats_csv(const std::vector<GenerationStats>& stats)
{
    std::string s = "generation,evaluations,screened_out,repertoire_size,coverage,avg_quality\n";
    for (const auto& st : stats)
        s += std::to_string(st.generation) + "," + std::to_string(st.evaluations_cumulative) + ","
            + std::to_string(st.screened_out) + "," + std::to_string(st.repertoire_size) + "," + num(st.coverage) + ","
            + num(st.avg_quality) + "\n";
    return s;
}

namespace {

struct Moments {
    std::vector<double> evals_mean, mean, std;
};

Moments coverage_moments(const std::vector<std::vector<GenerationStats>>& runs)
{
    Moments m;
    if (runs.empty())
        return m;
    std::size_t gens = runs.front().size();
    for (const auto& r : runs)
        gens = std::min(gens, r.size());
    const double n = static_cast<double>(runs.size());
    for (std::size_t g = 0; g < gens; ++g) {
        double sum = 0.0, evals = 0.0;
        for (const auto& r : runs) {
            sum += r[g].coverage;
            evals += static_cast<double>(r[g].evaluations_cumulative);
        }
        const double mean = sum / n;
        double sq = 0.0;
        for (const auto& r : runs)
            sq += (r[g].coverage - mean) * (r[g].coverage - mean);
        m.evals_mean.push_back(evals / n);
        m.mean.push_back(mean);
        m.std.push_back(runs.size() > 1 ? std::sqrt(sq / (n - 1.0)) : 0.0);
    }
    return m;
}

} // namespace

std::string coverage_aggregate_csv(const std::vector<std::vector<GenerationStats>>& runs)
{
    const Moments m = coverage_moments(runs);
    std::string s = "generation,evaluations_mean,coverage_mean,coverage_std\n";
    for (std::size_t g = 0; g < m.mean.size(); ++g)
        s += std::to_string(g) + "," + num(m.evals_mean[g]) + "," + num(m.mean[g]) + "," + num(m.std[g]) + "\n";
    return s;
}

std::string coverage_svg(const std::vector<CoverageSeries>& series)
{
    constexpr double W = 640, H = 400, L = 60, R = 20, T = 20, B = 50;
    static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e"};
    std::size_t gens = 1;
    for (const auto& s : series)
        gens = std::max(gens, s.mean.size());
    auto x = [&](std::size_t g) { return L + (W - L - R) * (gens > 1 ? static_cast<double>(g) / static_cast<double>(gens - 1) : 0.0); };
    auto y = [&](double v) { return H - B - (H - T - B) * std::clamp(v, 0.0, 1.0); };

    std::ostringstream svg;
    svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\">\n";
    svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    svg << "<line x1=\"" << L << "\" y1=\"" << H - B << "\" x2=\"" << W - R << "\" y2=\"" << H - B << "\" stroke=\"black\"/>\n";
    svg << "<line x1=\"" << L << "\" y1=\"" << T << "\" x2=\"" << L << "\" y2=\"" << H - B << "\" stroke=\"black\"/>\n";
    for (int i = 0; i <= 4; ++i) {
        const double v = i / 4.0;
        svg << "<text x=\"" << L - 8 << "\" y=\"" << y(v) + 4 << "\" font-size=\"11\" text-anchor=\"end\">" << num(v) << "</text>\n";
    }
    svg << "<text x=\"" << (L + W - R) / 2 << "\" y=\"" << H - 12 << "\" font-size=\"12\" text-anchor=\"middle\">generation</text>\n";
    svg << "<text x=\"16\" y=\"" << (T + H - B) / 2 << "\" font-size=\"12\" text-anchor=\"middle\" transform=\"rotate(-90 16 "
        << (T + H - B) / 2 << ")\">coverage</text>\n";

    for (std::size_t si = 0; si < series.size(); ++si) {
        const auto& s = series[si];
        const char* color = colors[si % 5];
        if (s.mean.empty())
            continue;
        svg << "<polygon fill=\"" << color << "\" fill-opacity=\"0.2\" stroke=\"none\" points=\"";
        for (std::size_t g = 0; g < s.mean.size(); ++g)
            svg << num(x(g)) << "," << num(y(s.mean[g] + s.std[g])) << " ";
        for (std::size_t g = s.mean.size(); g-- > 0;)
            svg << num(x(g)) << "," << num(y(s.mean[g] - s.std[g])) << " ";
        svg << "\"/>\n<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
        for (std::size_t g = 0; g < s.mean.size(); ++g)
            svg << num(x(g)) << "," << num(y(s.mean[g])) << " ";
        svg << "\"/>\n";
        svg << "<text x=\"" << L + 10 << "\" y=\"" << T + 14 + 16 * static_cast<double>(si) << "\" font-size=\"12\" fill=\""
            << color << "\">" << s.label << "</text>\n";
    }
    svg << "</svg>\n";
    return svg.str();
}

std::string run_stem(Algorithm algorithm, std::uint64_t seed)
{
    return std::string(to_string(algorithm)) + "_seed" + std::to_string(seed);
}

int cmd_evolve(const ExperimentSpec& spec, std::ostream& out, std::ostream& err)
{
    try {
        spec.validate();
        std::filesystem::create_directories(spec.out_dir);
    }
    catch (const std::exception& e) {
        err << "evolve: " << e.what() << "\n";
        return 2;
    }

    struct Job {
        Algorithm algorithm;
        std::uint64_t seed;
    };
    std::vector<Job> jobs;
    for (Algorithm a : spec.algorithms)
        for (std::uint64_t s : spec.seeds)
            jobs.push_back({a, s});

    RunConfig base = spec.run;
    if (base.env.task != spec.task)
        base.env = EnvConfig::for_task(spec.task);
    for (const auto& w : base.warnings())
        err << "warning: " << w << "\n";
    if (std::find(spec.algorithms.begin(), spec.algorithms.end(), Algorithm::mqd) != spec.algorithms.end()
        && base.algorithm != Algorithm::mqd) {
        RunConfig m = base;
        m.algorithm = Algorithm::mqd;
        for (const auto& w : m.warnings())
            err << "warning: " << w << "\n";
    }

    std::vector<std::vector<GenerationStats>> stats(jobs.size());
    std::vector<std::string> failures(jobs.size());
    std::atomic<std::size_t> next{0};
    std::mutex log_mutex;

    auto worker = [&] {
        for (std::size_t i = next++; i < jobs.size(); i = next++) {
            const Job& job = jobs[i];
            try {
                RunConfig cfg = base;
                cfg.algorithm = job.algorithm;
                cfg.seed = job.seed;
                RunResult result = run(cfg);

                const std::string stem = run_stem(job.algorithm, job.seed);
                io::write_file_atomic(spec.out_dir / (stem + "_stats.csv"), stats_csv(result.stats));
                io::write_file_atomic(spec.out_dir / (stem + "_repertoire.json"),
                    io::repertoire_to_string(result.repertoire, cfg.env));
                if (result.model)
                    io::write_file_atomic(spec.out_dir / (stem + "_net.json"), io::model_to_string(*result.model));
                stats[i] = std::move(result.stats);

                std::lock_guard lock(log_mutex);
                const auto& last = stats[i].back();
                out << stem << ": coverage " << num(last.coverage) << ", avg_quality " << num(last.avg_quality)
                    << ", evaluations " << last.evaluations_cumulative << "\n";
            }
            catch (const std::exception& e) {
                failures[i] = e.what();
            }
        }
    };

    const int threads = std::min<int>(spec.jobs, static_cast<int>(jobs.size()));
    if (threads <= 1)
        worker();
    else {
        std::vector<std::thread> pool;
        for (int t = 0; t < threads; ++t)
            pool.emplace_back(worker);
        for (auto& t : pool)
            t.join();
    }

    int status = 0;
    for (std::size_t i = 0; i < jobs.size(); ++i)
        if (!failures[i].empty()) {
            err << run_stem(jobs[i].algorithm, jobs[i].seed) << " failed: " << failures[i] << "\n";
            status = 1;
        }
    if (status != 0)
        return status;

    std::vector<CoverageSeries> series;
    for (Algorithm a : spec.algorithms) {
        std::vector<std::vector<GenerationStats>> runs;
        for (std::size_t i = 0; i < jobs.size(); ++i)
            if (jobs[i].algorithm == a)
                runs.push_back(stats[i]);
        io::write_file_atomic(spec.out_dir / (std::string(to_string(a)) + "_coverage.csv"), coverage_aggregate_csv(runs));
        const Moments m = coverage_moments(runs);
        series.push_back({std::string(to_string(a)), m.mean, m.std});
    }
    if (spec.emit_svg)
        io::write_file_atomic(spec.out_dir / "coverage.svg", coverage_svg(series));
    return 0;
}

std::vector<Behavior> read_goals_csv(const std::string& text)
{
    std::istringstream in(text);
    std::string line;
    std::vector<Behavior> goals;
    int line_no = 0;
    bool header = false;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos)
            continue;
        const auto fields = split(line, ',');
        if (!header) {
            if (fields.size() != 2 || fields[0] != "goal_x" || fields[1] != "goal_y")
                throw ParseError("goals line " + std::to_string(line_no) + ": expected header goal_x,goal_y");
            header = true;
            continue;
        }
        if (fields.size() != 2)
            throw ParseError("goals line " + std::to_string(line_no) + ": expected 2 fields");
        Behavior b;
        for (int i = 0; i < 2; ++i) {
            std::size_t used = 0;
            try {
                b[i] = std::stod(fields[static_cast<std::size_t>(i)], &used);
            }
            catch (const std::exception&) {
                used = 0;
            }
            if (used == 0 || used != fields[static_cast<std::size_t>(i)].size())
                throw ParseError("goals line " + std::to_string(line_no) + ": bad number '"
                    + fields[static_cast<std::size_t>(i)] + "'");
        }
        goals.push_back(b);
    }
    if (!header)
        throw ParseError("goals file is empty");
    return goals;
}

std::vector<Behavior> uniform_goals(const Box& bounds, int count, std::uint64_t seed)
{
    Rng rng = substream(seed, "goals");
    std::uniform_real_distribution<double> ux(bounds.lo.x(), bounds.hi.x());
    std::uniform_real_distribution<double> uy(bounds.lo.y(), bounds.hi.y());
    std::vector<Behavior> goals;
    goals.reserve(static_cast<std::size_t>(count));
    for (int i = 0; i < count; ++i) {
        const double x = ux(rng);
        goals.emplace_back(x, uy(rng));
    }
    return goals;
}

int cmd_adapt(const AdaptRequest& request, std::ostream& out, std::ostream& err)
{
    try {
        const io::RepertoireFile file = io::repertoire_from_string(io::read_file(request.repertoire));
        std::optional<SurrogateModel> model;
        if (request.net)
            model = io::model_from_string(io::read_file(*request.net));

        const auto& strategies = request.settings.strategies;
        if (strategies.empty())
            throw ConfigError("no adaptation strategies requested");
        if (!model && std::find(strategies.begin(), strategies.end(), Strategy::model_based) != strategies.end())
            throw ConfigError("model_based adaptation requires --net");
        if (model && model->net.inputs() != file.env.action_dim())
            throw ConfigError("network input size does not match the repertoire's task");

        const std::vector<Behavior> goals = request.goals
            ? read_goals_csv(io::read_file(*request.goals))
            : uniform_goals(file.env.bounds, request.settings.num_goals, request.settings.goal_seed);

        std::filesystem::create_directories(request.out_dir);
        std::string rows = "goal_x,goal_y,strategy,steps,error\n";
        std::string summary = "strategy,goals,mean_error,mean_steps\n";
        for (Strategy s : strategies) {
            AdaptConfig cfg = request.settings.config;
            cfg.strategy = s;
            cfg.t_dist = request.t_dist.value_or(file.repertoire.t_dist());
            double err_sum = 0.0;
            double steps_sum = 0.0;
            for (const Behavior& g : goals) {
                const AdaptResult r = adapt(file.repertoire, file.env, model ? &*model : nullptr, g, cfg);
                rows += num(g.x()) + "," + num(g.y()) + "," + std::string(to_string(s)) + "," + std::to_string(r.steps_executed)
                    + "," + num(r.behavioral_error) + "\n";
                err_sum += r.behavioral_error;
                steps_sum += r.steps_executed;
            }
            const double n = goals.empty() ? 1.0 : static_cast<double>(goals.size());
            summary += std::string(to_string(s)) + "," + std::to_string(goals.size()) + "," + num(err_sum / n) + ","
                + num(steps_sum / n) + "\n";
            out << to_string(s) << ": mean_error " << num(err_sum / n) << ", mean_steps " << num(steps_sum / n) << "\n";
        }
        io::write_file_atomic(request.out_dir / "adapt_results.csv", rows);
        io::write_file_atomic(request.out_dir / "adapt_summary.csv", summary);
        return 0;
    }
    catch (const std::exception& e) {
        err << "adapt: " << e.what() << "\n";
        return 1;
    }
}

int cmd_coverage(const std::filesystem::path& repertoire, int resolution, std::ostream& out, std::ostream& err)
{
    try {
        const io::RepertoireFile file = io::repertoire_from_string(io::read_file(repertoire));
        const CoverageConfig cfg{file.repertoire.t_dist(), resolution};
        cfg.validate();
        out << "coverage " << num(coverage(file.repertoire, file.env.bounds, cfg)) << "\n";
        if (file.repertoire.empty()) {
            err << "coverage: avg_quality undefined for an empty repertoire\n";
            return 1;
        }
        out << "avg_quality " << num(avg_quality(file.repertoire)) << "\n";
        return 0;
    }
    catch (const std::exception& e) {
        err << "coverage: " << repertoire.string() << ": " << e.what() << "\n";
        return 1;
    }
}

int run_cli(int argc, char** argv, std::ostream& out, std::ostream& err)
{
    CLI::App app{"Quality-diversity skill discovery with a learned surrogate"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_dir;
    std::string seeds;
    std::string task;
    int jobs = 0;
    bool emit_svg = false;
    auto* evolve = app.add_subcommand("evolve", "Build repertoires for every (algorithm, seed) pair");
    evolve->add_option("--config", config_path, "Experiment config (JSON)");
    evolve->add_option("--out", out_dir, "Output directory");
    evolve->add_option("--seeds", seeds, "Comma-separated seeds");
    evolve->add_option("--task", task, "obstacle2d or object2d");
    evolve->add_option("--jobs", jobs, "Parallel runs")->check(CLI::PositiveNumber);
    evolve->add_flag("--emit-svg", emit_svg, "Also write coverage.svg");

    std::string rep_path;
    std::string net_path;
    std::string goals_path;
    std::string strategies;
    std::string adapt_config;
    std::string adapt_out;
    int num_goals = -1;
    long long goal_seed = -1;
    auto* adapt_cmd = app.add_subcommand("adapt", "Adapt repertoire skills toward goal behaviors");
    adapt_cmd->add_option("--repertoire", rep_path, "Repertoire file")->required();
    adapt_cmd->add_option("--net", net_path, "Surrogate network file");
    adapt_cmd->add_option("--goals", goals_path, "Goal CSV (goal_x,goal_y)");
    adapt_cmd->add_option("--strategies", strategies, "Comma-separated strategies");
    adapt_cmd->add_option("--num-goals", num_goals, "Uniform goals to draw when --goals is absent");
    adapt_cmd->add_option("--goal-seed", goal_seed, "Seed for generated goals");
    adapt_cmd->add_option("--config", adapt_config, "Experiment config; its adapt section is used");
    adapt_cmd->add_option("--out", adapt_out, "Output directory");

    std::string cov_path;
    int resolution = 1000;
    auto* cov = app.add_subcommand("coverage", "Print coverage and average quality of a repertoire");
    cov->add_option("repertoire", cov_path, "Repertoire file")->required();
    cov->add_option("--resolution", resolution, "Grid cells per axis");

    try {
        app.parse(argc, argv);
    }
    catch (const CLI::ParseError& e) {
        std::ostringstream o, e2;
        const int code = app.exit(e, o, e2);
        out << o.str();
        err << e2.str();
        return code;
    }

    try {
        if (*evolve) {
            ExperimentSpec spec = config_path.empty() ? ExperimentSpec{} : load_spec(config_path);
            if (!task.empty()) {
                spec.task = task_from_string(task);
                if (spec.run.env.task != spec.task)
                    spec.run.env = EnvConfig::for_task(spec.task);
            }
            if (!seeds.empty())
                spec.seeds = parse_seed_list(seeds);
            if (!out_dir.empty())
                spec.out_dir = out_dir;
            if (jobs > 0)
                spec.jobs = jobs;
            spec.emit_svg = spec.emit_svg || emit_svg;
            return cmd_evolve(spec, out, err);
        }
        if (*adapt_cmd) {
            AdaptRequest req;
            req.repertoire = rep_path;
            if (!adapt_config.empty())
                req.settings = load_spec(adapt_config).adapt;
            if (!net_path.empty())
                req.net = net_path;
            if (!goals_path.empty())
                req.goals = goals_path;
            if (!strategies.empty())
                req.settings.strategies = parse_strategy_list(strategies);
            if (num_goals >= 0)
                req.settings.num_goals = num_goals;
            if (goal_seed >= 0)
                req.settings.goal_seed = static_cast<std::uint64_t>(goal_seed);
            if (!adapt_out.empty())
                req.out_dir = adapt_out;
            return cmd_adapt(req, out, err);
        }
        return cmd_coverage(cov_path, resolution, out, err);
    }
    catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return 2;
    }
}

} // namespace mqd::cli
