#include <mqd/repertoire.hpp>

#include <algorithm>
#include <cmath>
#include <tuple>
#include <utility>

namespace mqd {

namespace {

struct Candidate {
    double distance;
    std::uint64_t stamp;
    std::size_t index;

    bool operator<(const Candidate& o) const { return std::tie(distance, stamp) < std::tie(o.distance, o.stamp); }
};

} // namespace

Repertoire::Repertoire(int k, double t_dist) : _k(k), _t_dist(t_dist), _cell(t_dist)
{
    if (k < 1)
        throw ConfigError("repertoire k must be >= 1");
    if (!(t_dist > 0.0))
        throw ConfigError("repertoire t_dist must be > 0");
}

Repertoire::CellKey Repertoire::pack(std::int64_t cx, std::int64_t cy)
{
    return (cx << 32) ^ (cy & 0xffffffff);
}

Repertoire::CellKey Repertoire::key_of(const Behavior& b) const
{
    return pack(static_cast<std::int64_t>(std::floor(b.x() / _cell)), static_cast<std::int64_t>(std::floor(b.y() / _cell)));
}

void Repertoire::index_add(std::size_t i)
{
    const auto cx = static_cast<std::int64_t>(std::floor(_skills[i].behavior.x() / _cell));
    const auto cy = static_cast<std::int64_t>(std::floor(_skills[i].behavior.y() / _cell));
    _grid[pack(cx, cy)].push_back(i);
    if (_max_cx < _min_cx) {
        _min_cx = _max_cx = cx;
        _min_cy = _max_cy = cy;
    }
    else {
        _min_cx = std::min(_min_cx, cx);
        _max_cx = std::max(_max_cx, cx);
        _min_cy = std::min(_min_cy, cy);
        _max_cy = std::max(_max_cy, cy);
    }
}

void Repertoire::index_remove(std::size_t i)
{
    auto it = _grid.find(key_of(_skills[i].behavior));
    auto& cell = it->second;
    cell.erase(std::find(cell.begin(), cell.end(), i));
    if (cell.empty())
        _grid.erase(it);
}

std::vector<Neighbor> Repertoire::knn_impl(const Behavior& point, int k, std::optional<std::size_t> exclude) const
{
    std::vector<Neighbor> result;
    const std::size_t available = _skills.size() - (exclude ? 1 : 0);
    const std::size_t want = std::min<std::size_t>(static_cast<std::size_t>(std::max(k, 0)), available);
    if (want == 0)
        return result;

    const auto qx = static_cast<std::int64_t>(std::floor(point.x() / _cell));
    const auto qy = static_cast<std::int64_t>(std::floor(point.y() / _cell));
    const std::int64_t max_ring = std::max({qx - _min_cx, _max_cx - qx, qy - _min_cy, _max_cy - qy, std::int64_t{0}});

    std::vector<Candidate> found;
    auto visit = [&](std::int64_t cx, std::int64_t cy) {
        if (cx < _min_cx || cx > _max_cx || cy < _min_cy || cy > _max_cy)
            return;
        auto it = _grid.find(pack(cx, cy));
        if (it == _grid.end())
            return;
        for (std::size_t i : it->second) {
            if (exclude && *exclude == i)
                continue;
            found.push_back({(_skills[i].behavior - point).norm(), _stamps[i], i});
        }
    };

    for (std::int64_t ring = 0; ring <= max_ring; ++ring) {
        if (ring == 0)
            visit(qx, qy);
        else {
            for (std::int64_t dx = -ring; dx <= ring; ++dx) {
                visit(qx + dx, qy - ring);
                visit(qx + dx, qy + ring);
            }
            for (std::int64_t dy = -ring + 1; dy <= ring - 1; ++dy) {
                visit(qx - ring, qy + dy);
                visit(qx + ring, qy + dy);
            }
        }
        if (found.size() >= want) {
            std::nth_element(found.begin(), found.begin() + static_cast<std::ptrdiff_t>(want - 1), found.end());
            // anything unvisited is at least ring * cell away
            if (found[want - 1].distance < static_cast<double>(ring) * _cell)
                break;
        }
    }

    std::sort(found.begin(), found.end());
    found.resize(want);
    result.reserve(want);
    for (const auto& c : found)
        result.push_back({c.index, c.distance});
    return result;
}

std::vector<Neighbor> Repertoire::knn(const Behavior& point, int k) const
{
    if (empty())
        throw EmptyRepertoire();
    return knn_impl(point, k, std::nullopt);
}

double mean_neighbor_distance(const Repertoire&, const std::vector<Neighbor>& nn)
{
    if (nn.empty())
        return 0.0;
    double sum = 0.0;
    for (const auto& n : nn)
        sum += n.distance;
    return sum / static_cast<double>(nn.size());
}

double Repertoire::novelty(const Behavior& b) const
{
    return mean_neighbor_distance(*this, knn(b, _k));
}

double Repertoire::novelty_of(std::size_t index) const
{
    return mean_neighbor_distance(*this, knn_impl(_skills.at(index).behavior, _k, index));
}

InsertOutcome Repertoire::try_insert(Archive& archive, Skill candidate)
{
    candidate.novelty = 0.0;
    if (empty()) {
        push_back(std::move(candidate));
        return {InsertKind::added, std::nullopt};
    }

    const Neighbor nn = knn_impl(candidate.behavior, 1, std::nullopt).front();
    if (nn.distance > _t_dist) {
        push_back(std::move(candidate));
        return {InsertKind::added, std::nullopt};
    }
    if (candidate.quality > _skills[nn.index].quality) {
        index_remove(nn.index);
        Skill old = std::exchange(_skills[nn.index], std::move(candidate));
        _stamps[nn.index] = _next_stamp++;
        index_add(nn.index);
        archive.push(old);
        return {InsertKind::replaced, std::move(old)};
    }
    archive.push(std::move(candidate));
    return {InsertKind::rejected, std::nullopt};
}

void Repertoire::refresh_novelties()
{
    std::vector<double> fresh(_skills.size());
    for (std::size_t i = 0; i < _skills.size(); ++i)
        fresh[i] = novelty_of(i);
    for (std::size_t i = 0; i < _skills.size(); ++i)
        _skills[i].novelty = fresh[i];
}

void Repertoire::push_back(Skill skill)
{
    _skills.push_back(std::move(skill));
    _stamps.push_back(_next_stamp++);
    index_add(_skills.size() - 1);
}

} // namespace mqd
