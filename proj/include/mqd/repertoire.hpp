#pragma once

#include <mqd/core.hpp>

#include <cstdint>
#include <optional>
#include <unordered_map>
#include <vector>

namespace mqd {

struct Skill {
    Action action;
    Behavior behavior = Behavior::Zero();
    double quality = 0.0;
    /// Cached; refreshed once per generation.
    double novelty = 0.0;
};

struct Neighbor {
    std::size_t index = 0;
    double distance = 0.0;
};

enum class InsertKind { added, replaced, rejected };

struct InsertOutcome {
    InsertKind kind = InsertKind::added;
    /// Skill evicted to the archive on replacement.
    std::optional<Skill> replaced;
};

/// Append-only store of rejected and replaced skills.
class Archive {
public:
    void push(Skill skill) { _skills.push_back(std::move(skill)); }
    const std::vector<Skill>& skills() const { return _skills; }
    std::size_t size() const { return _skills.size(); }

private:
    std::vector<Skill> _skills;
};

/// Unstructured skill repertoire. Neighbor queries are exact: ordering is by
/// Euclidean behavior distance, ties go to the skill inserted earlier.
class Repertoire {
public:
    Repertoire(int k, double t_dist);

    int k() const { return _k; }
    double t_dist() const { return _t_dist; }
    std::size_t size() const { return _skills.size(); }
    bool empty() const { return _skills.empty(); }

    const Skill& operator[](std::size_t i) const { return _skills[i]; }
    const std::vector<Skill>& skills() const { return _skills; }
    /// Insertion stamp of slot i; a replacement takes a fresh stamp.
    std::uint64_t stamp(std::size_t i) const { return _stamps[i]; }

    std::vector<Neighbor> knn(const Behavior& point, int k) const;

    /// Mean distance from b to its k nearest stored behaviors.
    double novelty(const Behavior& b) const;
    /// Novelty of a stored skill, which is not its own neighbor. 0 when alone.
    double novelty_of(std::size_t index) const;

    InsertOutcome try_insert(Archive& archive, Skill candidate);
    void refresh_novelties();

    /// Unconditional append, used when loading files.
    void push_back(Skill skill);

private:
    using CellKey = std::int64_t;

    CellKey key_of(const Behavior& b) const;
    static CellKey pack(std::int64_t cx, std::int64_t cy);
    std::vector<Neighbor> knn_impl(const Behavior& point, int k, std::optional<std::size_t> exclude) const;
    void index_add(std::size_t i);
    void index_remove(std::size_t i);

    int _k;
    double _t_dist;
    double _cell;
    std::vector<Skill> _skills;
    std::vector<std::uint64_t> _stamps;
    std::uint64_t _next_stamp = 0;
    std::unordered_map<CellKey, std::vector<std::size_t>> _grid;
    std::int64_t _min_cx = 0, _max_cx = -1, _min_cy = 0, _max_cy = -1;
};

double mean_neighbor_distance(const Repertoire& rep, const std::vector<Neighbor>& nn);

} // namespace mqd
