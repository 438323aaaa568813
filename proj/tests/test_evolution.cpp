#include <doctest.h>

#include <mqd/evolution.hpp>

#include <cmath>
#include <limits>
#include <map>

using namespace mqd;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Skills whose first gene is their index, for identifying draws.
Repertoire tagged(const std::vector<double>& novelties)
{
    Repertoire rep(5, 0.02);
    for (std::size_t i = 0; i < novelties.size(); ++i) {
        Skill s;
        s.action = Action::Zero(3);
        s.action[0] = static_cast<double>(i);
        s.behavior = {0.1 * static_cast<double>(i), 0.0};
        s.novelty = novelties[i];
        rep.push_back(s);
    }
    return rep;
}

std::map<int, int> tally(const std::vector<Action>& picks)
{
    std::map<int, int> n;
    for (const auto& a : picks)
        ++n[static_cast<int>(a[0])];
    return n;
}

RunConfig small(Algorithm alg, int gens, int pop)
{
    RunConfig cfg;
    cfg.algorithm = alg;
    cfg.max_generations = gens;
    cfg.population_size = pop;
    cfg.model.batches_per_generation = 100;
    return cfg;
}

void check_stat_invariants(const RunResult& r, const RunConfig& cfg)
{
    const double disc = M_PI * cfg.t_dist * cfg.t_dist;
    REQUIRE(r.stats.size() == static_cast<std::size_t>(cfg.max_generations));
    REQUIRE(r.decisions.size() == static_cast<std::size_t>(cfg.max_generations * cfg.population_size));
    for (std::size_t g = 0; g < r.stats.size(); ++g) {
        const auto& s = r.stats[g];
        CHECK(s.generation == static_cast<int>(g));
        CHECK(s.evaluations_cumulative + s.screened_out == static_cast<long>((g + 1) * cfg.population_size));
        if (g > 0) {
            const auto& p = r.stats[g - 1];
            CHECK(s.evaluations_cumulative >= p.evaluations_cumulative);
            CHECK(s.repertoire_size >= p.repertoire_size);
            CHECK(s.coverage >= p.coverage - disc);
        }
    }
    CHECK(r.repertoire.size() + r.archive.size() == static_cast<std::size_t>(r.stats.back().evaluations_cumulative));
    const CoverageConfig cov{cfg.t_dist, cfg.coverage_resolution};
    CHECK(r.stats.back().coverage == coverage(r.repertoire, cfg.env.bounds, cov));
    CHECK(r.stats.back().avg_quality == doctest::Approx(avg_quality(r.repertoire)).epsilon(1e-15));
}

bool same_skills(const Repertoire& a, const Repertoire& b)
{
    if (a.size() != b.size())
        return false;
    for (std::size_t i = 0; i < a.size(); ++i)
        if (a[i].action != b[i].action || a[i].behavior != b[i].behavior || a[i].quality != b[i].quality
            || a[i].novelty != b[i].novelty)
            return false;
    return true;
}

} // namespace

TEST_CASE("config validation")
{
    RunConfig cfg;
    CHECK_NOTHROW(cfg.validate());
    CHECK(cfg.warnings().empty());
    cfg.population_size = 0;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg = RunConfig{};
    cfg.crossover_rate = 1.5;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg = RunConfig{};
    cfg.t_nov = std::nan("");
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg = RunConfig{};
    cfg.algorithm = Algorithm::mqd;
    cfg.t_nov = 0.01;
    CHECK(cfg.warnings().size() == 1);
    CHECK(algorithm_from_string(to_string(Algorithm::mqd)) == Algorithm::mqd);
    CHECK_THROWS_AS(algorithm_from_string("map-elites"), ConfigError);
}

TEST_CASE("select_parents")
{
    constexpr int draws = 100000;
    Rng rng(31);

    SUBCASE("equal novelties select uniformly")
    {
        const auto n = tally(select_parents(tagged(std::vector<double>(8, 0.25)), draws, rng));
        const double p = 1.0 / 8.0;
        const double sigma = std::sqrt(draws * p * (1.0 - p));
        for (int i = 0; i < 8; ++i)
            CHECK(std::abs(n.at(i) - draws * p) < 3.0 * sigma);
    }
    SUBCASE("selection is proportional to novelty")
    {
        const auto n = tally(select_parents(tagged({0.3, 0.1}), draws, rng));
        const double p = 0.75;
        const double sigma = std::sqrt(draws * p * (1.0 - p));
        CHECK(std::abs(n.at(0) - draws * p) < 3.0 * sigma);
        CHECK(n.at(0) + n.at(1) == draws);
    }
    SUBCASE("zero novelty falls back to uniform")
    {
        const auto one = tally(select_parents(tagged({0.0}), 1000, rng));
        CHECK(one.at(0) == 1000);
        const auto n = tally(select_parents(tagged({0.0, 0.0, 0.0, 0.0}), draws, rng));
        const double sigma = std::sqrt(draws * 0.25 * 0.75);
        for (int i = 0; i < 4; ++i)
            CHECK(std::abs(n.at(i) - draws * 0.25) < 3.0 * sigma);
    }
    SUBCASE("empty repertoire")
    {
        CHECK_THROWS_AS(select_parents(Repertoire(5, 0.02), 3, rng), EmptyRepertoire);
    }
}

TEST_CASE("vary")
{
    Rng rng(41);
    RunConfig cfg;

    SUBCASE("identity operators copy parents")
    {
        cfg.mutation_rate = 0.0;
        cfg.crossover_rate = 0.0;
        cfg.population_size = 500;
        std::vector<Action> parents;
        for (int i = 0; i < 7; ++i)
            parents.push_back(Action::Constant(9, -0.9 + 0.3 * i));
        const auto kids = vary(parents, cfg, rng);
        REQUIRE(kids.size() == 500);
        for (const auto& k : kids) {
            bool found = false;
            for (const auto& p : parents)
                found = found || k == p;
            CHECK(found);
        }
    }
    SUBCASE("mutation is clipped to the gene range")
    {
        cfg.mutation_rate = 1.0;
        cfg.mutation_sigma = 0.5;
        cfg.population_size = 2000;
        const auto kids = vary({Action::Constant(9, 1.0), Action::Constant(9, -1.0)}, cfg, rng);
        bool moved = false;
        for (const auto& k : kids) {
            CHECK(k.maxCoeff() <= 1.0);
            CHECK(k.minCoeff() >= -1.0);
            moved = moved || (k.array().abs() < 1.0).any();
        }
        CHECK(moved);
    }
    SUBCASE("uniform crossover of opposite parents")
    {
        cfg.mutation_rate = 0.0;
        cfg.crossover_rate = 1.0;
        cfg.population_size = 11112;
        const auto kids = vary({Action::Constant(9, 1.0), Action::Constant(9, -1.0)}, cfg, rng);
        long plus = 0, genes = 0;
        for (const auto& k : kids)
            for (Eigen::Index i = 0; i < k.size(); ++i) {
                REQUIRE(std::abs(k[i]) == 1.0);
                plus += k[i] > 0.0;
                ++genes;
            }
        // both draws hit the same parent half the time, making the whole child one sign;
        // per-child count variance is 0.5 * 81/4 + 0.5 * 9/4
        const double per_child_var = 0.5 * 81.0 / 4.0 + 0.5 * 9.0 / 4.0;
        const double sigma = std::sqrt(static_cast<double>(kids.size()) * per_child_var) / static_cast<double>(genes);
        CHECK(std::abs(static_cast<double>(plus) / genes - 0.5) < 3.0 * sigma);
    }
}

TEST_CASE("uniform action sampling")
{
    Rng rng(51);
    constexpr int draws = 100000;
    Vec sum = Vec::Zero(9);
    for (int i = 0; i < draws; ++i) {
        const Action a = sample_uniform_action(9, rng);
        REQUIRE(a.cwiseAbs().maxCoeff() <= 1.0);
        sum += a;
    }
    const double sigma = (1.0 / std::sqrt(3.0)) / std::sqrt(static_cast<double>(draws));
    for (int g = 0; g < 9; ++g)
        CHECK(std::abs(sum[g] / draws) < 3.0 * sigma);
}

TEST_CASE("qd run")
{
    SUBCASE("one generation of ten")
    {
        const RunConfig cfg = small(Algorithm::qd, 1, 10);
        const RunResult r = run_qd(cfg);
        REQUIRE(r.stats.size() == 1);
        CHECK(r.stats[0].evaluations_cumulative == 10);
        CHECK(r.stats[0].screened_out == 0);
        CHECK_FALSE(r.model.has_value());
        check_stat_invariants(r, cfg);
    }
    SUBCASE("full default budget")
    {
        RunConfig cfg;
        const RunResult r = run_qd(cfg);
        CHECK(r.stats.back().evaluations_cumulative == 25000);
        check_stat_invariants(r, cfg);
    }
    SUBCASE("fixed seed is reproducible and seeds differ")
    {
        RunConfig cfg = small(Algorithm::qd, 15, 50);
        const RunResult a = run_qd(cfg);
        const RunResult b = run_qd(cfg);
        CHECK(same_skills(a.repertoire, b.repertoire));
        CHECK(a.decisions == b.decisions);
        cfg.seed = 1;
        CHECK_FALSE(same_skills(a.repertoire, run_qd(cfg).repertoire));
    }
    SUBCASE("object task")
    {
        RunConfig cfg = small(Algorithm::qd, 10, 50);
        cfg.env = EnvConfig::object2d();
        check_stat_invariants(run_qd(cfg), cfg);
    }
}

TEST_CASE("random run")
{
    RunConfig cfg = small(Algorithm::random, 12, 50);
    const RunResult a = run_random(cfg);
    check_stat_invariants(a, cfg);
    CHECK(a.stats.back().evaluations_cumulative == 600);
    CHECK(same_skills(a.repertoire, run(cfg).repertoire));
    // generation 0 draws from the same stream for every algorithm
    cfg.max_generations = 1;
    CHECK(same_skills(run_random(cfg).repertoire, run_qd(cfg).repertoire));
}

TEST_CASE("mqd run")
{
    SUBCASE("pass-all thresholds reproduce qd decision for decision")
    {
        RunConfig cfg = small(Algorithm::mqd, 20, 100);
        cfg.warmup_samples = 500;
        cfg.t_nov = -kInf;
        const RunResult m = run_mqd(cfg);
        const RunResult q = run_qd(cfg);
        CHECK(m.decisions == q.decisions);
        CHECK(same_skills(m.repertoire, q.repertoire));
        CHECK(m.stats.back().screened_out == 0);
        REQUIRE(m.model.has_value());
        CHECK(m.model->adam.t > 0);
    }
    SUBCASE("reject-all thresholds freeze the repertoire after warm-up")
    {
        RunConfig cfg = small(Algorithm::mqd, 20, 100);
        cfg.t_nov = kInf;
        cfg.t_qua = kInf;
        const RunResult r = run_mqd(cfg);
        check_stat_invariants(r, cfg);
        // training starts once 1000 evaluations are in, i.e. after generation 9
        for (int g = 9; g < 20; ++g) {
            CHECK(r.stats[static_cast<std::size_t>(g)].evaluations_cumulative == 1000);
            CHECK(r.stats[static_cast<std::size_t>(g)].repertoire_size == r.stats[9].repertoire_size);
        }
        CHECK(r.stats.back().screened_out == 1000);
        for (std::size_t i = 1000; i < r.decisions.size(); ++i)
            CHECK(r.decisions[i] == Decision::screened);
    }
    SUBCASE("default thresholds screen and save evaluations")
    {
        RunConfig cfg = small(Algorithm::mqd, 40, 100);
        cfg.model.batches_per_generation = 500;
        const RunResult m = run_mqd(cfg);
        const RunResult q = run_qd(cfg);
        check_stat_invariants(m, cfg);
        CHECK(m.stats.back().screened_out > 0);
        CHECK(m.stats.back().evaluations_cumulative < q.stats.back().evaluations_cumulative);
        for (std::size_t g = 0; g < m.stats.size(); ++g)
            CHECK(m.stats[g].evaluations_cumulative <= q.stats[g].evaluations_cumulative);
        // warm-up generations are plain qd
        for (std::size_t i = 0; i < 1000; ++i)
            REQUIRE(m.decisions[i] == q.decisions[i]);

        const RunResult again = run_mqd(cfg);
        CHECK(same_skills(m.repertoire, again.repertoire));
        CHECK(m.model->net.params().w1 == again.model->net.params().w1);
        CHECK(m.model->net.params().b2 == again.model->net.params().b2);
    }
}
