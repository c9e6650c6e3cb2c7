#pragma once

// 2D network + DEM -> gradient-constrained 3D network.
//
// Pipeline order: stack -> resample -> enforce_gradients -> reconcile_intersections
// (which re-smooths any segment its endpoint changes push over the limit).

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "terra3d/dem.hpp"
#include "terra3d/error.hpp"
#include "terra3d/network.hpp"
#include "terra3d/polyline.hpp"

namespace terra3d {

/// Signed grade between two points: dz over horizontal distance.
inline double gradient(const Point3D& start, const Point3D& end)
{
    const double run = std::hypot(end.x - start.x, end.y - start.y);
    if (run < 1e-9)
        throw Error(Errc::degenerate_geometry, "gradient over zero horizontal distance");
    return (end.z - start.z) / run;
}

struct GradeExtreme {
    double grade = 0.0; // signed grade with the largest magnitude
    std::size_t index = 0; // first sample of the worst pair
};

inline GradeExtreme steepest_pair(const ElevationProfile& profile)
{
    GradeExtreme worst;
    for (std::size_t i = 0; i + 1 < profile.size(); ++i) {
        const double g =
            (profile.z[i + 1] - profile.z[i]) / (profile.stations[i + 1] - profile.stations[i]);
        if (std::abs(g) > std::abs(worst.grade)) {
            worst.grade = g;
            worst.index = i;
        }
    }
    return worst;
}

inline bool profile_complies(const ElevationProfile& profile, double limit)
{
    return within_grade(steepest_pair(profile).grade, limit);
}

struct SmoothResult {
    ElevationProfile profile;
    int iterations = 0;
    bool converged = true;
    double worst_station = 0.0;
    double worst_grade = 0.0;
};

/// Repeated three-point moving average over interior samples, endpoints
/// pinned, until every consecutive grade is within `limit`. A compliant input
/// comes back untouched with zero iterations.
inline SmoothResult try_smooth_profile(const ElevationProfile& profile, double limit,
                                       int max_iters = 1000)
{
    profile.validate();
    if (!(limit > 0.0))
        throw Error(Errc::invalid_input, "gradient limit must be positive");

    SmoothResult r;
    r.profile = profile;
    GradeExtreme worst = steepest_pair(r.profile);
    const std::size_t n = r.profile.size();
    std::vector<double> next(r.profile.z);

    while (!within_grade(worst.grade, limit)) {
        if (r.iterations >= max_iters || n < 3) {
            r.converged = false;
            break;
        }
        auto& z = r.profile.z;
        for (std::size_t i = 1; i + 1 < n; ++i)
            next[i] = (z[i - 1] + z[i] + z[i + 1]) / 3.0;
        next.front() = z.front();
        next.back() = z.back();
        z.swap(next);
        ++r.iterations;
        worst = steepest_pair(r.profile);
    }
    r.worst_station = r.profile.stations[worst.index];
    r.worst_grade = worst.grade;
    return r;
}

/// Throwing form: non-convergence is reported as Errc::non_convergence naming
/// the worst station.
inline std::pair<ElevationProfile, int> smooth_profile(const ElevationProfile& profile,
                                                       double limit, int max_iters = 1000)
{
    SmoothResult r = try_smooth_profile(profile, limit, max_iters);
    if (!r.converged) {
        std::ostringstream msg;
        msg << "gradient limit " << limit << " not reached after " << r.iterations
            << " iterations; worst grade " << r.worst_grade << " at station " << r.worst_station
            << " m";
        throw Error(Errc::non_convergence, msg.str());
    }
    return {std::move(r.profile), r.iterations};
}

namespace detail {

inline std::string join_limited(const std::vector<std::string>& items, std::size_t limit = 20)
{
    std::string out;
    for (std::size_t i = 0; i < items.size() && i < limit; ++i) {
        if (i)
            out += ", ";
        out += items[i];
    }
    if (items.size() > limit)
        out += ", ... (" + std::to_string(items.size() - limit) + " more)";
    return out;
}

} // namespace detail

/// Appends a DEM elevation to every node and polyline vertex.
inline RoadNetwork3D stack(const RoadNetwork2D& net, const TerrainSampler& terrain)
{
    RoadNetwork3D out;
    out.frame = net.frame;
    out.bbox = net.bbox;
    out.provenance.sampling_mode = terrain.mode;

    std::vector<std::string> bad_nodes, bad_segments;
    Errc failure = Errc::out_of_extent;
    std::size_t bad_points = 0;

    auto lookup = [&](Point2 p, bool& ok) {
        try {
            return terrain(p.x, p.y);
        } catch (const Error& e) {
            if (e.code() != Errc::out_of_extent && e.code() != Errc::nodata)
                throw;
            if (e.code() == Errc::nodata)
                failure = Errc::nodata;
            ok = false;
            ++bad_points;
            return 0.0;
        }
    };

    for (const auto& n : net.nodes) {
        RoadNode3D node;
        static_cast<RoadNode&>(node) = n;
        bool ok = true;
        node.z = lookup(n.pos, ok);
        if (!ok)
            bad_nodes.push_back(n.id);
        out.nodes.push_back(std::move(node));
    }

    for (const auto& s : net.segments) {
        RoadSegment3D seg;
        static_cast<RoadSegment2D&>(seg) = s;
        seg.profile.stations = cumulative_stations(s.polyline);
        bool ok = true;
        for (const Point2& p : s.polyline) {
            const double z = lookup(p, ok);
            seg.profile.z.push_back(z);
            seg.points.push_back({p.x, p.y, z});
        }
        if (!ok)
            bad_segments.push_back(s.id);
        out.segments.push_back(std::move(seg));
    }

    if (bad_points) {
        std::string msg = std::to_string(bad_points) + " road points "
            + (failure == Errc::nodata ? "hit DEM nodata" : "lie outside the DEM extent");
        if (!bad_nodes.empty())
            msg += "; nodes: " + detail::join_limited(bad_nodes);
        if (!bad_segments.empty())
            msg += "; segments: " + detail::join_limited(bad_segments);
        throw Error(failure, msg);
    }
    return out;
}

/// Densifies a segment to roughly one sample per meter: n = floor(L), new
/// samples at k * L / n for k = 1..n-1, original vertices kept.
inline RoadSegment3D resample_segment(const RoadSegment3D& seg, const TerrainSampler& terrain)
{
    const std::vector<double> vertex_stations = cumulative_stations(seg.polyline);
    const double length = vertex_stations.empty() ? 0.0 : vertex_stations.back();
    if (!(length > 0.0))
        throw Error(Errc::degenerate_geometry, "segment " + seg.id + " has zero length");
    if (seg.profile.size() != seg.polyline.size())
        throw Error(Errc::invalid_input,
                    "segment " + seg.id + " must be resampled straight after stacking");

    const auto n = static_cast<long>(std::floor(length / 1.0));
    struct Sample {
        double station;
        double z;
        bool vertex;
    };
    std::vector<Sample> samples;
    samples.reserve(seg.polyline.size() + static_cast<std::size_t>(std::max(0L, n)));
    for (std::size_t i = 0; i < seg.polyline.size(); ++i)
        samples.push_back({vertex_stations[i], seg.profile.z[i], true});

    std::vector<Sample> added;
    for (long k = 1; k <= n - 1; ++k) {
        const double s = static_cast<double>(k) * (length / static_cast<double>(n));
        added.push_back({s, 0.0, false});
    }

    // Merge; a new station within 1e-9 m of a vertex is dropped in favour of the vertex.
    std::vector<Sample> merged;
    merged.reserve(samples.size() + added.size());
    std::size_t a = 0;
    for (const Sample& v : samples) {
        while (a < added.size() && added[a].station < v.station - 1e-9)
            merged.push_back(added[a++]);
        while (a < added.size() && std::abs(added[a].station - v.station) <= 1e-9)
            ++a;
        merged.push_back(v);
    }
    while (a < added.size())
        merged.push_back(added[a++]);

    RoadSegment3D out = seg;
    out.profile.stations.clear();
    out.profile.z.clear();
    out.points.clear();
    std::size_t vertex = 0;
    for (const Sample& s : merged) {
        Point2 p;
        double z = s.z;
        if (s.vertex) {
            p = seg.polyline[vertex++];
        } else {
            p = point_at_station(seg.polyline, vertex_stations, s.station);
            z = terrain(p.x, p.y);
        }
        out.profile.stations.push_back(s.station);
        out.profile.z.push_back(z);
        out.points.push_back({p.x, p.y, z});
    }
    out.profile.validate();
    return out;
}

inline RoadNetwork3D resample(const RoadNetwork3D& net, const TerrainSampler& terrain)
{
    RoadNetwork3D out = net;
    for (auto& seg : out.segments)
        seg = resample_segment(seg, terrain);
    return out;
}

/// Smooths each segment against its class limit. Segments that cannot be
/// brought within the limit keep their input profile and are flagged.
inline RoadNetwork3D enforce_gradients(const RoadNetwork3D& net, int max_iters = 1000)
{
    RoadNetwork3D out = net;
    out.provenance.max_smooth_iters = max_iters;
    for (auto& seg : out.segments) {
        SmoothResult r = try_smooth_profile(seg.profile, seg.cls.max_gradient, max_iters);
        seg.smoothing_iterations = r.iterations;
        seg.flagged = !r.converged;
        if (r.converged) {
            seg.profile = std::move(r.profile);
            seg.sync_points_z();
        }
    }
    return out;
}

/// Sets every intersection node to the mean of its incident endpoint
/// elevations, then re-smooths segments whose new endpoints break the limit.
inline RoadNetwork3D reconcile_intersections(const RoadNetwork3D& net, int max_iters = 1000)
{
    RoadNetwork3D out = net;
    const auto incidence = node_incidence(out);
    std::vector<bool> touched(out.segments.size(), false);

    std::unordered_map<std::string, std::size_t> node_index;
    for (std::size_t i = 0; i < out.nodes.size(); ++i)
        node_index.emplace(out.nodes[i].id, i);

    for (const auto& [node_id, ends] : incidence) {
        auto it = node_index.find(node_id);
        if (it == node_index.end())
            throw Error(Errc::invalid_input, "segment endpoint references unknown node " + node_id);
        RoadNode3D& node = out.nodes[it->second];

        double sum = 0.0;
        for (const auto& [seg, is_end] : ends) {
            const auto& z = out.segments[seg].profile.z;
            sum += is_end ? z.back() : z.front();
        }
        const double mean = sum / static_cast<double>(ends.size());

        node.z = mean;
        for (const auto& [seg, is_end] : ends) {
            auto& z = out.segments[seg].profile.z;
            double& endpoint = is_end ? z.back() : z.front();
            if (endpoint != mean) {
                endpoint = mean;
                touched[seg] = true;
            }
        }
    }

    for (std::size_t i = 0; i < out.segments.size(); ++i) {
        auto& seg = out.segments[i];
        if (!touched[i])
            continue;
        seg.sync_points_z();
        if (profile_complies(seg.profile, seg.cls.max_gradient))
            continue;
        SmoothResult r = try_smooth_profile(seg.profile, seg.cls.max_gradient, max_iters);
        seg.smoothing_iterations += r.iterations;
        seg.flagged = !r.converged;
        if (r.converged) {
            seg.profile = std::move(r.profile);
            seg.sync_points_z();
        }
    }
    return out;
}

struct BuildOptions {
    SamplingMode mode = SamplingMode::idw4;
    int max_smooth_iters = 1000;
    GradeLimits limits;
};

/// Full pipeline over a 2D network whose frame origin is expressed in the
/// DEM's UTM coordinates.
inline RoadNetwork3D build_network(const RoadNetwork2D& net, const DemGrid& grid,
                                   const BuildOptions& options = {})
{
    if (options.max_smooth_iters < 0)
        throw Error(Errc::invalid_input, "max_smooth_iters must be non-negative");
    options.limits.validate();
    const TerrainSampler terrain{&grid, options.mode, net.frame.origin.easting,
                                 net.frame.origin.northing};
    RoadNetwork3D out = stack(net, terrain);
    for (auto& seg : out.segments)
        seg.cls = RoadClass::of(seg.cls.kind, options.limits);
    out = resample(out, terrain);
    out = enforce_gradients(out, options.max_smooth_iters);
    out = reconcile_intersections(out, options.max_smooth_iters);
    out.provenance.sampling_mode = options.mode;
    out.provenance.max_smooth_iters = options.max_smooth_iters;
    out.provenance.limits = options.limits;
    return out;
}

} // namespace terra3d
