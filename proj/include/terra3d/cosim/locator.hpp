#pragma once

// Point-to-road lookup used to place vehicles on the 3D surface.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "terra3d/error.hpp"
#include "terra3d/network.hpp"
#include "terra3d/polyline.hpp"

namespace terra3d::cosim {

struct RoadHit {
    std::size_t segment = 0;
    std::size_t leg = 0;  // index of the first sample of the bracketing pair
    double t = 0.0;       // position between the two samples
    double distance = std::numeric_limits<double>::infinity();
    double station = 0.0;
    double z = 0.0;
};

/// Uniform-grid bucket index over the sample-to-sample legs of every segment.
class NetworkLocator {
public:
    explicit NetworkLocator(const RoadNetwork3D& net, double cell = 25.0) : net_(&net), cell_(cell)
    {
        for (std::size_t s = 0; s < net.segments.size(); ++s) {
            const auto& pts = net.segments[s].points;
            for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
                const auto [cx0, cy0] = cell_of(std::min(pts[i].x, pts[i + 1].x),
                                                std::min(pts[i].y, pts[i + 1].y));
                const auto [cx1, cy1] = cell_of(std::max(pts[i].x, pts[i + 1].x),
                                                std::max(pts[i].y, pts[i + 1].y));
                for (auto cx = cx0; cx <= cx1; ++cx)
                    for (auto cy = cy0; cy <= cy1; ++cy)
                        buckets_[key(cx, cy)].push_back({s, i});
            }
        }
    }

    const RoadNetwork3D& network() const { return *net_; }

    /// Nearest leg within `max_distance`; ties go to the lowest (segment, leg).
    std::optional<RoadHit> nearest(double x, double y, double max_distance) const
    {
        const auto [cx0, cy0] = cell_of(x - max_distance, y - max_distance);
        const auto [cx1, cy1] = cell_of(x + max_distance, y + max_distance);
        std::vector<std::pair<std::size_t, std::size_t>> candidates;
        for (auto cx = cx0; cx <= cx1; ++cx)
            for (auto cy = cy0; cy <= cy1; ++cy)
                if (auto it = buckets_.find(key(cx, cy)); it != buckets_.end())
                    candidates.insert(candidates.end(), it->second.begin(), it->second.end());
        std::sort(candidates.begin(), candidates.end());
        candidates.erase(std::unique(candidates.begin(), candidates.end()), candidates.end());

        RoadHit best;
        bool found = false;
        for (const auto& [s, i] : candidates) {
            const auto& seg = net_->segments[s];
            const Point3D& a = seg.points[i];
            const Point3D& b = seg.points[i + 1];
            const PolylineProjection pr = project_onto_leg(a.xy(), b.xy(), {x, y});
            if (pr.distance > max_distance || (found && !(pr.distance < best.distance)))
                continue;
            found = true;
            best.segment = s;
            best.leg = i;
            best.t = pr.t;
            best.distance = pr.distance;
            const auto& st = seg.profile.stations;
            best.station = st[i] + pr.t * (st[i + 1] - st[i]);
            best.z = pr.t == 0.0 ? a.z : (pr.t == 1.0 ? b.z : a.z + pr.t * (b.z - a.z));
        }
        if (!found)
            return std::nullopt;
        return best;
    }

private:
    std::pair<std::int64_t, std::int64_t> cell_of(double x, double y) const
    {
        return {static_cast<std::int64_t>(std::floor(x / cell_)),
                static_cast<std::int64_t>(std::floor(y / cell_))};
    }
    static std::uint64_t key(std::int64_t cx, std::int64_t cy)
    {
        return (static_cast<std::uint64_t>(cx) << 32) ^ (static_cast<std::uint64_t>(cy) & 0xffffffffULL);
    }

    const RoadNetwork3D* net_;
    double cell_;
    std::unordered_map<std::uint64_t, std::vector<std::pair<std::size_t, std::size_t>>> buckets_;
};

/// Road-surface elevation under (x, y): project onto the nearest segment and
/// interpolate linearly between the bracketing profile samples.
inline double vehicle_elevation(const NetworkLocator& locator, double x, double y,
                                double snap_distance = 5.0)
{
    const auto hit = locator.nearest(x, y, snap_distance);
    if (!hit)
        throw Error(Errc::out_of_extent, "position (" + std::to_string(x) + ", "
                                             + std::to_string(y) + ") is off-network (more than "
                                             + std::to_string(snap_distance) + " m from any road)");
    return hit->z;
}

inline double vehicle_elevation(const RoadNetwork3D& net, double x, double y,
                                double snap_distance = 5.0)
{
    return vehicle_elevation(NetworkLocator(net), x, y, snap_distance);
}

} // namespace terra3d::cosim
