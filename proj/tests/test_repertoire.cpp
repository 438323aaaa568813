#include <doctest.h>

#include "oracles.hpp"

#include <mqd/repertoire.hpp>

#include <algorithm>
#include <random>

using namespace mqd;

namespace {

Skill skill_at(double x, double y, double quality = 0.5)
{
    Skill s;
    s.action = Action::Zero(3);
    s.behavior = {x, y};
    s.quality = quality;
    return s;
}

std::vector<Behavior> random_points(std::size_t n, std::mt19937_64& rng, double lo = 0.0, double hi = 1.0)
{
    std::uniform_real_distribution<double> u(lo, hi);
    std::vector<Behavior> pts;
    for (std::size_t i = 0; i < n; ++i)
        pts.emplace_back(u(rng), u(rng));
    return pts;
}

Repertoire filled(const std::vector<Behavior>& pts, int k, double t_dist = 0.02)
{
    Repertoire rep(k, t_dist);
    for (const auto& p : pts)
        rep.push_back(skill_at(p.x(), p.y()));
    return rep;
}

} // namespace

TEST_CASE("construction rejects bad parameters")
{
    CHECK_THROWS_AS(Repertoire(0, 0.02), ConfigError);
    CHECK_THROWS_AS(Repertoire(5, 0.0), ConfigError);
    CHECK_THROWS_AS(Repertoire(5, -1.0), ConfigError);
}

TEST_CASE("knn")
{
    SUBCASE("empty repertoire")
    {
        Repertoire rep(5, 0.02);
        CHECK_THROWS_AS(rep.knn({0.5, 0.5}, 5), EmptyRepertoire);
        CHECK_THROWS_AS(rep.novelty({0.5, 0.5}), EmptyRepertoire);
    }
    SUBCASE("singleton returns its only skill")
    {
        Repertoire rep = filled({{0.2, 0.3}}, 5);
        const auto nn = rep.knn({0.9, 0.9}, 5);
        REQUIRE(nn.size() == 1);
        CHECK(nn[0].index == 0);
    }
    SUBCASE("query on a stored point returns it first at distance 0")
    {
        Repertoire rep = filled({{0.1, 0.1}, {0.4, 0.4}, {0.7, 0.7}}, 5);
        const auto nn = rep.knn({0.4, 0.4}, 2);
        REQUIRE(nn.size() == 2);
        CHECK(nn[0].index == 1);
        CHECK(nn[0].distance == 0.0);
    }
    SUBCASE("ties go to the older skill")
    {
        Repertoire rep = filled({{0.75, 0.5}, {0.25, 0.5}}, 5);
        auto nn = rep.knn({0.5, 0.5}, 2);
        CHECK(nn[0].index == 0);
        CHECK(nn[1].index == 1);

        // a replacement is a new insertion for tie purposes
        Archive archive;
        const auto outcome = rep.try_insert(archive, skill_at(0.75, 0.5, 0.9));
        CHECK(outcome.kind == InsertKind::replaced);
        nn = rep.knn({0.5, 0.5}, 2);
        CHECK(rep[nn[0].index].behavior.x() == 0.25);
        CHECK(rep[nn[1].index].behavior.x() == 0.75);
    }
    SUBCASE("matches exhaustive search")
    {
        std::mt19937_64 rng(11);
        for (int trial = 0; trial < 50; ++trial) {
            const auto pts = random_points(50 + trial * 4, rng);
            Repertoire rep = filled(pts, 5);
            for (const auto& q : random_points(20, rng, -0.2, 1.2)) {
                for (int k : {1, 5, 17}) {
                    const auto got = rep.knn(q, k);
                    const auto want = oracle::knn(pts, q, static_cast<std::size_t>(k));
                    REQUIRE(got.size() == want.size());
                    for (std::size_t i = 0; i < got.size(); ++i) {
                        CHECK(got[i].index == want[i].index);
                        CHECK(got[i].distance == doctest::Approx(want[i].distance).epsilon(1e-15));
                    }
                }
            }
        }
    }
    SUBCASE("clustered points with a sparse outlier")
    {
        std::mt19937_64 rng(3);
        auto pts = random_points(300, rng, 0.40, 0.41);
        pts.push_back({0.95, 0.02});
        Repertoire rep = filled(pts, 5);
        for (const auto& q : std::vector<Behavior>{{0.0, 1.0}, {0.95, 0.0}, {0.405, 0.405}, {3.0, -2.0}}) {
            const auto got = rep.knn(q, 7);
            const auto want = oracle::knn(pts, q, 7);
            for (std::size_t i = 0; i < got.size(); ++i)
                CHECK(got[i].index == want[i].index);
        }
    }
    SUBCASE("result does not depend on storage order")
    {
        std::mt19937_64 rng(5);
        auto pts = random_points(120, rng);
        Repertoire a = filled(pts, 5);
        std::shuffle(pts.begin(), pts.end(), rng);
        Repertoire b = filled(pts, 5);
        for (const auto& q : random_points(30, rng)) {
            const auto na = a.knn(q, 6);
            const auto nb = b.knn(q, 6);
            for (std::size_t i = 0; i < na.size(); ++i) {
                CHECK(a[na[i].index].behavior == b[nb[i].index].behavior);
                CHECK(na[i].distance == nb[i].distance);
            }
        }
    }
}

TEST_CASE("novelty")
{
    SUBCASE("single neighbor")
    {
        Repertoire rep = filled({{0.5, 0.8}, {0.5, 0.1}}, 1);
        CHECK(rep.novelty({0.5, 0.5}) == doctest::Approx(0.3));
    }
    SUBCASE("mean of two neighbors")
    {
        Repertoire rep = filled({{0.6, 0.5}, {0.5, 0.2}}, 2);
        CHECK(rep.novelty({0.5, 0.5}) == doctest::Approx(0.2));
    }
    SUBCASE("fewer skills than k averages over all")
    {
        Repertoire rep = filled({{0.6, 0.5}, {0.5, 0.2}}, 5);
        CHECK(rep.novelty({0.5, 0.5}) == doctest::Approx(0.2));
    }
    SUBCASE("matches exhaustive mean distance")
    {
        std::mt19937_64 rng(21);
        const auto pts = random_points(100, rng);
        Repertoire rep = filled(pts, 5);
        for (const auto& q : random_points(20, rng))
            CHECK(rep.novelty(q) == doctest::Approx(oracle::mean_knn_distance(pts, q, 5)).epsilon(1e-14));
    }
    SUBCASE("translation invariance")
    {
        std::mt19937_64 rng(8);
        const auto pts = random_points(80, rng);
        const Behavior shift{3.25, -1.5};
        std::vector<Behavior> moved;
        for (const auto& p : pts)
            moved.push_back(p + shift);
        Repertoire a = filled(pts, 5);
        Repertoire b = filled(moved, 5);
        for (const auto& q : random_points(20, rng))
            CHECK(a.novelty(q) == doctest::Approx(b.novelty(q + shift)).epsilon(1e-12));
    }
}

TEST_CASE("refresh_novelties")
{
    SUBCASE("singleton has zero novelty")
    {
        Repertoire rep = filled({{0.5, 0.5}}, 5);
        rep.refresh_novelties();
        CHECK(rep[0].novelty == 0.0);
    }
    SUBCASE("a pair sees each other")
    {
        Repertoire rep = filled({{0.1, 0.5}, {0.5, 0.5}}, 3);
        rep.refresh_novelties();
        CHECK(rep[0].novelty == doctest::Approx(0.4));
        CHECK(rep[1].novelty == doctest::Approx(0.4));
    }
    SUBCASE("every cache matches a self-excluding exhaustive recomputation")
    {
        std::mt19937_64 rng(4);
        for (int trial = 0; trial < 5; ++trial) {
            const auto pts = random_points(200, rng);
            Repertoire rep = filled(pts, 5);
            rep.refresh_novelties();
            for (std::size_t i = 0; i < pts.size(); ++i) {
                const double want = oracle::mean_knn_distance(pts, pts[i], 5, static_cast<long>(i));
                CHECK(rep[i].novelty == doctest::Approx(want).epsilon(1e-14));
                CHECK(rep.novelty_of(i) == rep[i].novelty);
            }
        }
    }
}

TEST_CASE("try_insert rule")
{
    Archive archive;
    Repertoire rep(5, 0.02);

    CHECK(rep.try_insert(archive, skill_at(0.5, 0.5, 0.5)).kind == InsertKind::added);
    CHECK(rep.size() == 1);

    SUBCASE("better duplicate within t_dist replaces")
    {
        const auto out = rep.try_insert(archive, skill_at(0.51, 0.5, 0.9));
        CHECK(out.kind == InsertKind::replaced);
        REQUIRE(out.replaced);
        CHECK(out.replaced->quality == 0.5);
        CHECK(rep.size() == 1);
        CHECK(rep[0].quality == 0.9);
        CHECK(archive.size() == 1);
        CHECK(archive.skills()[0].quality == 0.5);
    }
    SUBCASE("worse duplicate is rejected into the archive")
    {
        const auto out = rep.try_insert(archive, skill_at(0.51, 0.5, 0.4));
        CHECK(out.kind == InsertKind::rejected);
        CHECK(rep.size() == 1);
        CHECK(rep[0].quality == 0.5);
        REQUIRE(archive.size() == 1);
        CHECK(archive.skills()[0].quality == 0.4);
    }
    SUBCASE("equal quality is not an improvement")
    {
        CHECK(rep.try_insert(archive, skill_at(0.5, 0.5, 0.5)).kind == InsertKind::rejected);
    }
    SUBCASE("beyond t_dist is added")
    {
        CHECK(rep.try_insert(archive, skill_at(0.53, 0.5, 0.1)).kind == InsertKind::added);
        CHECK(rep.size() == 2);
        CHECK(archive.size() == 0);
    }
}

TEST_CASE("insertion invariants over a random stream")
{
    std::mt19937_64 rng(99);
    std::uniform_real_distribution<double> u(0.3, 0.7);
    std::uniform_real_distribution<double> uq(0.0, 1.0);
    Repertoire rep(5, 0.02);
    Archive archive;
    std::size_t submitted = 0;

    for (int i = 0; i < 3000; ++i) {
        const Skill cand = skill_at(u(rng), u(rng), uq(rng));
        const std::size_t before = rep.size();
        double nearest = 1e300;
        for (const auto& s : rep.skills())
            nearest = std::min(nearest, (s.behavior - cand.behavior).norm());

        const auto out = rep.try_insert(archive, cand);
        ++submitted;
        switch (out.kind) {
        case InsertKind::added:
            CHECK(nearest > rep.t_dist());
            CHECK(rep.size() == before + 1);
            break;
        case InsertKind::replaced:
            CHECK(nearest <= rep.t_dist());
            CHECK(rep.size() == before);
            break;
        case InsertKind::rejected:
            CHECK(nearest <= rep.t_dist());
            CHECK(rep.size() == before);
            break;
        }
        REQUIRE(rep.size() + archive.size() == submitted);
    }

    // knn stays exact after replacements shuffle slots
    std::vector<Behavior> pts;
    for (const auto& s : rep.skills())
        pts.push_back(s.behavior);
    for (std::size_t i = 0; i < pts.size(); ++i)
        for (std::size_t j = i + 1; j < pts.size(); ++j)
            REQUIRE(pts[i] != pts[j]);
    for (const auto& q : random_points(50, rng)) {
        const auto got = rep.knn(q, 5);
        const auto want = oracle::knn(pts, q, 5);
        for (std::size_t i = 0; i < got.size(); ++i)
            CHECK(got[i].distance == doctest::Approx(want[i].distance).epsilon(1e-15));
    }
}
