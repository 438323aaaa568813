#include <mqd/metrics.hpp>

#include <algorithm>
#include <cmath>

namespace mqd {

namespace {

// Visits every cell whose center lies within radius of b.
template <typename F>
void rasterize_disc(const Behavior& b, const Box& bounds, const CoverageConfig& cfg, F&& f)
{
    const int res = cfg.grid_resolution;
    const double cw = bounds.width() / res;
    const double ch = bounds.height() / res;
    const double r2 = cfg.radius * cfg.radius;

    // center of cell i is lo + (i + 0.5) * cw; one cell of slack, the distance test decides
    auto first = [](double lo, double c, double r, double w) { return static_cast<int>(std::ceil((c - r - lo) / w - 0.5)); };
    auto last = [](double lo, double c, double r, double w) { return static_cast<int>(std::floor((c + r - lo) / w - 0.5)); };

    const int iy0 = std::max(0, first(bounds.lo.y(), b.y(), cfg.radius, ch) - 1);
    const int iy1 = std::min(res - 1, last(bounds.lo.y(), b.y(), cfg.radius, ch) + 1);
    const int ix0 = std::max(0, first(bounds.lo.x(), b.x(), cfg.radius, cw) - 1);
    const int ix1 = std::min(res - 1, last(bounds.lo.x(), b.x(), cfg.radius, cw) + 1);
    for (int iy = iy0; iy <= iy1; ++iy) {
        const double dy = bounds.lo.y() + (iy + 0.5) * ch - b.y();
        for (int ix = ix0; ix <= ix1; ++ix) {
            const double dx = bounds.lo.x() + (ix + 0.5) * cw - b.x();
            if (dx * dx + dy * dy <= r2)
                f(static_cast<std::size_t>(iy) * static_cast<std::size_t>(res) + static_cast<std::size_t>(ix));
        }
    }
}

} // namespace

void CoverageConfig::validate() const
{
    if (!(radius > 0.0))
        throw ConfigError("coverage radius must be > 0");
    if (grid_resolution < 64)
        throw ConfigError("coverage grid_resolution must be >= 64");
}

double coverage(std::span<const Behavior> behaviors, const Box& bounds, const CoverageConfig& cfg)
{
    cfg.validate();
    if (!(bounds.width() > 0.0 && bounds.height() > 0.0))
        throw ConfigError("coverage bounds are degenerate");
    const auto cells = static_cast<std::size_t>(cfg.grid_resolution) * static_cast<std::size_t>(cfg.grid_resolution);
    std::vector<std::uint8_t> covered(cells, 0);
    std::size_t count = 0;
    for (const Behavior& b : behaviors)
        rasterize_disc(b, bounds, cfg, [&](std::size_t i) {
            count += covered[i] == 0;
            covered[i] = 1;
        });
    return static_cast<double>(count) / static_cast<double>(cells);
}

double coverage(const Repertoire& rep, const Box& bounds, const CoverageConfig& cfg)
{
    std::vector<Behavior> pts;
    pts.reserve(rep.size());
    for (const auto& s : rep.skills())
        pts.push_back(s.behavior);
    return coverage(pts, bounds, cfg);
}

double avg_quality(const Repertoire& rep)
{
    if (rep.empty())
        throw EmptyRepertoire();
    double sum = 0.0;
    for (const auto& s : rep.skills())
        sum += s.quality;
    return sum / static_cast<double>(rep.size());
}

CoverageTracker::CoverageTracker(const Box& bounds, const CoverageConfig& cfg)
    : _bounds(bounds),
      _cfg((cfg.validate(), cfg)),
      _counts(static_cast<std::size_t>(cfg.grid_resolution) * static_cast<std::size_t>(cfg.grid_resolution), 0)
{
}

template <typename F>
void CoverageTracker::for_cells(const Behavior& b, F&& f)
{
    rasterize_disc(b, _bounds, _cfg, std::forward<F>(f));
}

void CoverageTracker::add(const Behavior& b)
{
    for_cells(b, [this](std::size_t i) { _covered += _counts[i]++ == 0; });
}

void CoverageTracker::remove(const Behavior& b)
{
    for_cells(b, [this](std::size_t i) { _covered -= --_counts[i] == 0; });
}

double CoverageTracker::value() const
{
    return static_cast<double>(_covered) / static_cast<double>(_counts.size());
}

} // namespace mqd
