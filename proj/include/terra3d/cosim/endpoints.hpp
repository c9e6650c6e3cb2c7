#pragma once

// The two mock simulators. Endpoint A is the 2D traffic authority: it moves
// vehicles along their routes. Endpoint B is the 3D side: it dead-reckons the
// vehicles from A's reported motion, puts them on the road surface and snaps
// back to A whenever the horizontal discrepancy exceeds the threshold.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "json.hpp"

#include "terra3d/cosim/locator.hpp"
#include "terra3d/cosim/protocol.hpp"
#include "terra3d/cosim/types.hpp"
#include "terra3d/error.hpp"
#include "terra3d/network.hpp"
#include "terra3d/polyline.hpp"

namespace terra3d::cosim {

struct Route {
    std::string vehicle_id;
    std::vector<std::string> segment_ids; // "-id" travels the segment backwards
    double speed = 0.0;                   // m/s
};

inline std::vector<Route> routes_from_json(const nlohmann::ordered_json& j)
{
    if (!j.is_array())
        throw Error(Errc::invalid_input, "routes document must be a JSON array");
    std::vector<Route> out;
    std::set<std::string> seen;
    for (const auto& r : j) {
        Route route;
        try {
            route.vehicle_id = r.at("vehicle_id").get<std::string>();
            route.segment_ids = r.at("segment_ids").get<std::vector<std::string>>();
            route.speed = r.at("speed").get<double>();
        } catch (const nlohmann::json::exception& e) {
            throw Error(Errc::invalid_input, std::string("invalid route entry: ") + e.what());
        }
        if (route.vehicle_id.empty())
            throw Error(Errc::invalid_input, "route with empty vehicle_id");
        if (!seen.insert(route.vehicle_id).second)
            throw Error(Errc::invalid_input, "duplicate vehicle_id '" + route.vehicle_id + "'");
        out.push_back(std::move(route));
    }
    return out;
}

inline std::vector<Route> parse_routes(const std::string& text)
{
    try {
        return routes_from_json(nlohmann::ordered_json::parse(text));
    } catch (const nlohmann::json::parse_error& e) {
        throw Error(Errc::invalid_input, std::string("routes are not valid JSON: ") + e.what());
    }
}

inline nlohmann::ordered_json to_json(const Route& r)
{
    return {{"vehicle_id", r.vehicle_id}, {"segment_ids", r.segment_ids}, {"speed", r.speed}};
}

/// Horizontal path of a route through the resampled segment geometry.
struct RoutePath {
    std::vector<Point2> points;
    std::vector<double> stations;
};

inline RoutePath route_path(const RoadNetwork3D& net, const Route& route)
{
    const auto fail = [&](const std::string& why) {
        throw Error(Errc::invalid_input, "invalid route for vehicle '" + route.vehicle_id + "': " + why);
    };
    if (!(route.speed > 0.0) || !std::isfinite(route.speed))
        fail("speed must be positive");
    if (route.segment_ids.empty())
        fail("no segments");

    struct Leg {
        const RoadSegment3D* seg;
        bool explicit_reverse;
    };
    std::vector<Leg> legs;
    for (const auto& raw : route.segment_ids) {
        const bool rev = !raw.empty() && raw.front() == '-';
        const std::string id = rev ? raw.substr(1) : raw;
        const RoadSegment3D* seg = net.find_segment(id);
        if (!seg)
            fail("unknown segment '" + id + "'");
        legs.push_back({seg, rev});
    }

    // Orientation of each leg: explicit "-" wins for the first leg; otherwise
    // the first leg is oriented to meet the second, and the rest follow on.
    std::vector<bool> reversed(legs.size(), false);
    reversed[0] = legs[0].explicit_reverse;
    if (!legs[0].explicit_reverse && legs.size() > 1) {
        const auto& a = *legs[0].seg;
        const auto& b = *legs[1].seg;
        const bool fwd_meets = a.to_node == b.from_node || a.to_node == b.to_node;
        const bool rev_meets = a.from_node == b.from_node || a.from_node == b.to_node;
        if (!fwd_meets && rev_meets)
            reversed[0] = true;
    }
    std::string at = reversed[0] ? legs[0].seg->from_node : legs[0].seg->to_node;
    for (std::size_t i = 1; i < legs.size(); ++i) {
        const auto& s = *legs[i].seg;
        if (s.from_node == at && !legs[i].explicit_reverse)
            reversed[i] = false;
        else if (s.to_node == at)
            reversed[i] = true;
        else
            fail("segment '" + s.id + "' does not continue from node '" + at + "'");
        if (legs[i].explicit_reverse && !reversed[i])
            fail("segment '" + s.id + "' cannot be travelled backwards from node '" + at + "'");
        at = reversed[i] ? s.from_node : s.to_node;
    }

    RoutePath path;
    for (std::size_t i = 0; i < legs.size(); ++i) {
        const auto& s = *legs[i].seg;
        if (reversed[i] && s.oneway)
            fail("segment '" + s.id + "' is one-way");
        std::vector<Point2> pts;
        for (const auto& p : s.points)
            pts.push_back(p.xy());
        if (reversed[i])
            std::reverse(pts.begin(), pts.end());
        for (std::size_t k = 0; k < pts.size(); ++k)
            if (path.points.empty() || k > 0)
                path.points.push_back(pts[k]);
    }
    path.stations = cumulative_stations(path.points);
    return path;
}

/// Traffic authority. Vehicles run at their route speed (optionally jittered
/// per step) and leave the simulation after the step on which they arrive.
class TrafficEndpoint {
public:
    TrafficEndpoint(const NetworkLocator& locator, const std::vector<Route>& routes,
                    const SyncConfig& config)
        : locator_(&locator), config_(config), rng_(config.seed)
    {
        config_.validate();
        clock.dt = config_.dt;
        for (const auto& r : routes)
            vehicles_.push_back({r.vehicle_id, route_path(locator.network(), r), r.speed});
    }

    LockstepClock clock;

    /// States at n = 0.
    std::vector<VehicleState> initial_states() const
    {
        std::vector<VehicleState> out;
        for (const auto& v : vehicles_) {
            const Point2 p = v.path.points.front();
            out.push_back(state_of(v, p, v.speed, tangent_heading(v.path, 0.0)));
        }
        return out;
    }

    /// Advance every active vehicle by one dt and report the new states.
    /// Speed and heading describe the motion over the step just taken.
    std::vector<VehicleState> advance()
    {
        clock.advance();
        std::vector<VehicleState> out;
        for (auto& v : vehicles_) {
            if (v.arrived)
                continue;
            double speed = v.speed;
            if (config_.speed_noise > 0.0) {
                const double u = static_cast<double>(rng_() >> 11) * 0x1.0p-52 - 1.0; // [-1, 1)
                speed *= 1.0 + config_.speed_noise * u;
            }
            const double length = v.path.stations.back();
            const Point2 from = point_at_station(v.path.points, v.path.stations, v.station);
            v.station = std::min(length, v.station + speed * config_.dt);
            const Point2 to = point_at_station(v.path.points, v.path.stations, v.station);
            const double dx = to.x - from.x, dy = to.y - from.y;
            const double moved = std::hypot(dx, dy);
            const double heading = moved > 0.0 ? heading_of(dx, dy) : tangent_heading(v.path, v.station);
            out.push_back(state_of(v, to, moved / config_.dt, heading));
            if (v.station >= length)
                v.arrived = true;
        }
        return out;
    }

    std::size_t vehicle_count() const { return vehicles_.size(); }

private:
    struct Vehicle {
        std::string id;
        RoutePath path;
        double speed = 0.0;
        double station = 0.0;
        bool arrived = false;
    };

    static double tangent_heading(const RoutePath& path, double station)
    {
        const auto& st = path.stations;
        std::size_t i = static_cast<std::size_t>(std::upper_bound(st.begin(), st.end(), station) - st.begin());
        i = i == 0 ? 0 : i - 1;
        i = std::min(i, path.points.size() - 2);
        return heading_of(path.points[i + 1].x - path.points[i].x, path.points[i + 1].y - path.points[i].y);
    }

    VehicleState state_of(const Vehicle& v, Point2 p, double speed, double heading) const
    {
        return {v.id, p.x, p.y, vehicle_elevation(*locator_, p.x, p.y, config_.snap_distance), speed,
                heading};
    }

    const NetworkLocator* locator_;
    SyncConfig config_;
    std::mt19937_64 rng_;
    std::vector<Vehicle> vehicles_;
};

/// 3D endpoint. Consumes protocol messages and returns its replies.
class TerrainEndpoint {
public:
    TerrainEndpoint(const NetworkLocator& locator, const SyncConfig& config)
        : locator_(&locator), config_(config)
    {
        config_.validate();
        clock.dt = config_.dt;
    }

    LockstepClock clock;

    bool closed() const { return closed_; }
    const std::vector<VehicleState>& vehicles() const { return vehicles_; }

    std::vector<Message> handle(const Message& m)
    {
        if (closed_)
            violation(std::string("message ") + message_type(m) + " after BYE");
        return std::visit([&](const auto& msg) { return on(msg); }, m);
    }

private:
    [[noreturn]] static void violation(const std::string& what)
    {
        throw Error(Errc::protocol_violation, what);
    }

    std::vector<Message> on(const Hello& h)
    {
        if (greeted_)
            violation("duplicate HELLO");
        if (h.version != kProtocolVersion)
            violation("unsupported protocol version " + std::to_string(h.version));
        if (h.encoding != kEncoding)
            violation("unsupported encoding '" + h.encoding + "'");
        if (h.dt != config_.dt)
            violation("dt mismatch at handshake");
        greeted_ = true;
        return {Hello{kProtocolVersion, config_.dt, kEncoding}};
    }

    std::vector<Message> on(const Step& s)
    {
        require_greeted();
        if (pending_)
            violation("STEP " + std::to_string(s.n) + " while step " + std::to_string(*pending_)
                      + " is open");
        if (!spawned_)
            violation("STEP before initial STATES");
        if (s.n != clock.n + 1)
            violation("clock mismatch: endpoint B at n = " + std::to_string(clock.n) + ", got STEP "
                      + std::to_string(s.n));
        pending_ = s.n;
        return {};
    }

    std::vector<Message> on(const States& s)
    {
        require_greeted();
        if (s.n == 0) {
            if (spawned_)
                violation("repeated initial STATES");
            spawned_ = true;
            vehicles_.clear();
            for (const auto& a : s.vehicles)
                vehicles_.push_back(on_surface(a.vehicle_id, a.x, a.y, a));
            return {Step{0, clock.t()}};
        }
        if (!pending_ || *pending_ != s.n)
            violation("STATES " + std::to_string(s.n) + " without matching STEP");

        std::map<std::string, const VehicleState*> previous;
        for (const auto& b : vehicles_)
            previous[b.vehicle_id] = &b;

        std::vector<VehicleState> next;
        std::vector<Message> resyncs;
        for (const auto& a : s.vehicles) {
            double x = a.x, y = a.y;
            if (auto it = previous.find(a.vehicle_id); it != previous.end()) {
                const VehicleState& b = *it->second;
                x = b.x + a.speed * config_.dt * std::cos(a.heading);
                y = b.y + a.speed * config_.dt * std::sin(a.heading);
            }
            x += config_.drift_per_step;
            if (config_.fault_at && *config_.fault_at == s.n)
                x += config_.fault_offset;
            next.push_back(on_surface(a.vehicle_id, x, y, a));
            if (action_for(sync_error(a, next.back()), config_.resync_threshold) == SyncAction::resync)
                resyncs.push_back(Resync{s.n, a.vehicle_id, a.x, a.y});
        }

        std::vector<Message> replies;
        replies.push_back(States{s.n, next});
        for (auto& r : resyncs) {
            for (auto& v : next)
                if (v.vehicle_id == std::get<Resync>(r).vehicle_id) {
                    const auto& rs = std::get<Resync>(r);
                    v = on_surface(v.vehicle_id, rs.x, rs.y, v);
                }
            replies.push_back(std::move(r));
        }
        vehicles_ = std::move(next);
        clock.n = s.n;
        pending_.reset();
        replies.push_back(Step{clock.n, clock.t()});
        return replies;
    }

    std::vector<Message> on(const Resync&)
    {
        violation("RESYNC is only sent by the 3D endpoint");
    }

    std::vector<Message> on(const Bye&)
    {
        if (pending_)
            violation("BYE during open step");
        closed_ = true;
        return {Bye{}};
    }

    void require_greeted() const
    {
        if (!greeted_)
            violation("message before HELLO");
    }

    VehicleState on_surface(const std::string& id, double x, double y, const VehicleState& motion) const
    {
        return {id, x, y, vehicle_elevation(*locator_, x, y, config_.snap_distance), motion.speed,
                motion.heading};
    }

    const NetworkLocator* locator_;
    SyncConfig config_;
    std::vector<VehicleState> vehicles_;
    std::optional<std::int64_t> pending_;
    bool greeted_ = false;
    bool spawned_ = false;
    bool closed_ = false;
};

} // namespace terra3d::cosim
