#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <vector>

#include "terra3d/geo.hpp"

namespace terra3d {

/// Cumulative arc length at each vertex; first entry 0.
inline std::vector<double> cumulative_stations(std::span<const Point2> polyline)
{
    std::vector<double> s(polyline.size(), 0.0);
    for (std::size_t i = 1; i < polyline.size(); ++i)
        s[i] = s[i - 1] + distance(polyline[i - 1], polyline[i]);
    return s;
}

inline double polyline_length(std::span<const Point2> polyline)
{
    double len = 0.0;
    for (std::size_t i = 1; i < polyline.size(); ++i)
        len += distance(polyline[i - 1], polyline[i]);
    return len;
}

/// Point at arc length `station`, clamped to the ends. `stations` comes from
/// cumulative_stations(polyline).
inline Point2 point_at_station(std::span<const Point2> polyline, std::span<const double> stations,
                               double station)
{
    if (polyline.empty())
        return {};
    if (station <= stations.front())
        return polyline.front();
    if (station >= stations.back())
        return polyline.back();
    const auto it = std::upper_bound(stations.begin(), stations.end(), station);
    const std::size_t i = static_cast<std::size_t>(it - stations.begin()) - 1;
    const double leg = stations[i + 1] - stations[i];
    const double t = leg > 0.0 ? (station - stations[i]) / leg : 0.0;
    return {polyline[i].x + t * (polyline[i + 1].x - polyline[i].x),
            polyline[i].y + t * (polyline[i + 1].y - polyline[i].y)};
}

struct PolylineProjection {
    std::size_t leg = 0;  // index of the leg's first vertex
    double t = 0.0;       // parameter along the leg in [0, 1]
    double station = 0.0; // arc length of the foot point
    double distance = std::numeric_limits<double>::infinity();
    Point2 foot;
};

inline PolylineProjection project_onto_leg(Point2 a, Point2 b, Point2 p)
{
    const double dx = b.x - a.x, dy = b.y - a.y;
    const double len2 = dx * dx + dy * dy;
    double t = 0.0;
    if (len2 > 0.0)
        t = std::clamp(((p.x - a.x) * dx + (p.y - a.y) * dy) / len2, 0.0, 1.0);
    PolylineProjection out;
    out.t = t;
    out.foot = {a.x + t * dx, a.y + t * dy};
    out.distance = distance(out.foot, p);
    return out;
}

/// Nearest point of the polyline to `p`.
inline PolylineProjection project_onto_polyline(std::span<const Point2> polyline,
                                                std::span<const double> stations, Point2 p)
{
    PolylineProjection best;
    for (std::size_t i = 0; i + 1 < polyline.size(); ++i) {
        PolylineProjection cand = project_onto_leg(polyline[i], polyline[i + 1], p);
        if (cand.distance < best.distance) {
            cand.leg = i;
            cand.station = stations[i] + cand.t * (stations[i + 1] - stations[i]);
            best = cand;
        }
    }
    return best;
}

/// Heading of the direction vector in [0, 2*pi), counter-clockwise from +x (east).
inline double heading_of(double dx, double dy)
{
    double h = std::atan2(dy, dx);
    if (h < 0.0)
        h += 2.0 * std::numbers::pi;
    if (h >= 2.0 * std::numbers::pi)
        h = 0.0;
    return h;
}

} // namespace terra3d
