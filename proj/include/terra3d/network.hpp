#pragma once

// Road network data model, shared by ingest, builder, validation, export and cosim.

#include <algorithm>
#include <cmath>
#include <map>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "terra3d/dem.hpp"
#include "terra3d/error.hpp"
#include "terra3d/geo.hpp"
#include "terra3d/polyline.hpp"

namespace terra3d {

enum class RoadKind { highway, arterial, residential };

inline const char* to_string(RoadKind kind)
{
    switch (kind) {
    case RoadKind::highway: return "highway";
    case RoadKind::arterial: return "arterial";
    case RoadKind::residential: return "residential";
    }
    return "residential";
}

inline RoadKind parse_road_kind(std::string_view s)
{
    if (s == "highway")
        return RoadKind::highway;
    if (s == "arterial")
        return RoadKind::arterial;
    if (s == "residential")
        return RoadKind::residential;
    throw Error(Errc::invalid_input, "unknown road class '" + std::string(s) + "'");
}

/// Maximum absolute grade per road class.
struct GradeLimits {
    double highway = 0.08;
    double arterial = 0.12;
    double residential = 0.15;

    double for_kind(RoadKind kind) const
    {
        switch (kind) {
        case RoadKind::highway: return highway;
        case RoadKind::arterial: return arterial;
        case RoadKind::residential: return residential;
        }
        return residential;
    }

    void validate() const
    {
        for (double v : {highway, arterial, residential})
            if (!(v > 0.0) || !std::isfinite(v))
                throw Error(Errc::invalid_input, "gradient limits must be positive");
    }

    friend bool operator==(const GradeLimits&, const GradeLimits&) = default;
};

struct RoadClass {
    RoadKind kind = RoadKind::residential;
    double max_gradient = 0.15;

    static RoadClass of(RoadKind kind, const GradeLimits& limits = {})
    {
        return {kind, limits.for_kind(kind)};
    }
    friend bool operator==(const RoadClass&, const RoadClass&) = default;
};

/// Slack on grade comparisons so an exact ramp at the limit is not rejected by rounding.
inline constexpr double kGradeTolerance = 1e-12;

inline bool within_grade(double grade, double limit)
{
    return std::abs(grade) <= limit + kGradeTolerance;
}

struct RoadNode {
    std::string id;
    Point2 pos;
    bool is_intersection = false;
    bool is_signal = false;
};

struct RoadSegment2D {
    std::string id;
    std::string from_node;
    std::string to_node;
    std::vector<Point2> polyline;
    RoadClass cls;
    int lanes = 1; // per direction
    bool oneway = false;
    std::string highway_tag;
    std::string name;

    double length() const { return polyline_length(polyline); }
};

struct LocalExtent {
    double min_x = 0.0;
    double min_y = 0.0;
    double max_x = 0.0;
    double max_y = 0.0;

    bool contains(Point2 p, double tolerance = 0.0) const
    {
        return p.x >= min_x - tolerance && p.x <= max_x + tolerance && p.y >= min_y - tolerance
            && p.y <= max_y + tolerance;
    }
};

struct RoadNetwork2D {
    LocalFrame frame;
    LocalExtent bbox;
    std::vector<RoadNode> nodes;
    std::vector<RoadSegment2D> segments;
    std::vector<std::string> warnings;

    const RoadNode* find_node(std::string_view id) const
    {
        for (const auto& n : nodes)
            if (n.id == id)
                return &n;
        return nullptr;
    }
};

struct ElevationProfile {
    std::vector<double> stations;
    std::vector<double> z;

    std::size_t size() const { return stations.size(); }

    void validate() const
    {
        if (stations.size() != z.size())
            throw Error(Errc::invalid_input, "profile stations and z differ in length");
        if (stations.size() < 2)
            throw Error(Errc::invalid_input, "profile needs at least 2 samples");
        if (stations.front() != 0.0)
            throw Error(Errc::invalid_input, "profile must start at station 0");
        for (std::size_t i = 1; i < stations.size(); ++i)
            if (!(stations[i] > stations[i - 1]))
                throw Error(Errc::invalid_input, "profile stations must be strictly increasing");
        for (double v : z)
            if (!std::isfinite(v))
                throw Error(Errc::invalid_input, "profile elevation is not finite");
    }

    friend bool operator==(const ElevationProfile&, const ElevationProfile&) = default;
};

struct RoadNode3D : RoadNode {
    double z = 0.0;
};

struct RoadSegment3D : RoadSegment2D {
    ElevationProfile profile;
    std::vector<Point3D> points; // aligned with profile.stations
    bool flagged = false;        // gradient limit could not be met
    int smoothing_iterations = 0;

    void sync_points_z()
    {
        for (std::size_t i = 0; i < points.size(); ++i)
            points[i].z = profile.z[i];
    }
};

struct Provenance {
    SamplingMode sampling_mode = SamplingMode::idw4;
    int max_smooth_iters = 1000;
    GradeLimits limits;
    std::string smoothing_stage = "after_resampling";
    std::map<std::string, std::string> input_checksums;
};

struct RoadNetwork3D {
    LocalFrame frame;
    LocalExtent bbox;
    std::vector<RoadNode3D> nodes;
    std::vector<RoadSegment3D> segments;
    Provenance provenance;

    RoadNode3D* find_node(std::string_view id)
    {
        for (auto& n : nodes)
            if (n.id == id)
                return &n;
        return nullptr;
    }
    const RoadNode3D* find_node(std::string_view id) const
    {
        for (const auto& n : nodes)
            if (n.id == id)
                return &n;
        return nullptr;
    }
    const RoadSegment3D* find_segment(std::string_view id) const
    {
        for (const auto& s : segments)
            if (s.id == id)
                return &s;
        return nullptr;
    }
};

/// Segment endpoints that meet at each node: (segment index, is_end).
using Incidence = std::vector<std::pair<std::size_t, bool>>;

template <class Network>
std::map<std::string, Incidence> node_incidence(const Network& net)
{
    std::map<std::string, Incidence> out;
    for (std::size_t i = 0; i < net.segments.size(); ++i) {
        out[net.segments[i].from_node].emplace_back(i, false);
        out[net.segments[i].to_node].emplace_back(i, true);
    }
    return out;
}

} // namespace terra3d
