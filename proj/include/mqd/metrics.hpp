#pragma once

#include <mqd/environment.hpp>
#include <mqd/repertoire.hpp>

#include <cstdint>
#include <span>
#include <vector>

namespace mqd {

struct CoverageConfig {
    /// Disc radius around each behavior; the search's t_dist.
    double radius = 0.02;
    int grid_resolution = 1000;

    void validate() const;
};

/// Fraction of grid cells (resolution^2 over bounds) whose center lies within
/// radius of some behavior.
double coverage(std::span<const Behavior> behaviors, const Box& bounds, const CoverageConfig& cfg);
double coverage(const Repertoire& rep, const Box& bounds, const CoverageConfig& cfg);

double avg_quality(const Repertoire& rep);

/// Same rasterization as coverage(), maintained incrementally with per-cell disc counts.
class CoverageTracker {
public:
    CoverageTracker(const Box& bounds, const CoverageConfig& cfg);

    void add(const Behavior& b);
    void remove(const Behavior& b);
    double value() const;

private:
    template <typename F>
    void for_cells(const Behavior& b, F&& f);

    Box _bounds;
    CoverageConfig _cfg;
    std::vector<std::uint16_t> _counts;
    std::size_t _covered = 0;
};

} // namespace mqd
