#pragma once

// Lockstep driver. Endpoint A runs here; endpoint B sits behind a Channel.
// The trace is JSON Lines: a header, then per step one clock record followed
// by one record per active vehicle.

#include <cstdint>
#include <algorithm>
#include <exception>
#include <optional>
#include <memory>
#include <string>
#include <thread>
#include <vector>

#include "json.hpp"

#include "terra3d/cosim/endpoints.hpp"
#include "terra3d/cosim/locator.hpp"
#include "terra3d/cosim/protocol.hpp"
#include "terra3d/cosim/transport.hpp"
#include "terra3d/cosim/types.hpp"
#include "terra3d/error.hpp"
#include "terra3d/network.hpp"
#include "terra3d/network_io.hpp"

namespace terra3d::cosim {

inline constexpr const char* kTraceSchema = "terra3d.trace/1";

struct StepRecord {
    std::int64_t n = 0;
    double t_a = 0.0;
    double t_b = 0.0;
    std::vector<VehicleState> a;      // authority states after advancing
    std::vector<VehicleState> b_pre;  // 3D states before any resync
    std::vector<VehicleState> b_post; // 3D states after resync
    std::vector<SyncEvent> events;
};

struct CosimSummary {
    std::int64_t steps = 0;
    std::size_t vehicles = 0;
    std::size_t vehicle_records = 0;
    std::size_t resync_count = 0;
    std::vector<SyncEvent> resync_events;
    double max_sync_error = 0.0;
    double t_a = 0.0;
    double t_b = 0.0;
    std::string trace_checksum;

    nlohmann::ordered_json to_json() const
    {
        nlohmann::ordered_json j;
        j["steps"] = steps;
        j["vehicles"] = vehicles;
        j["vehicle_records"] = vehicle_records;
        j["resync_count"] = resync_count;
        j["resync_events"] = nlohmann::ordered_json::array();
        for (const auto& e : resync_events)
            j["resync_events"].push_back(
                {{"n", e.n}, {"vehicle_id", e.vehicle_id}, {"sync_error", e.sync_error}});
        j["max_sync_error"] = max_sync_error;
        j["t_a"] = t_a;
        j["t_b"] = t_b;
        j["trace_checksum"] = trace_checksum;
        return j;
    }
};

struct ScenarioResult {
    std::string trace;
    CosimSummary summary;
    std::vector<StepRecord> steps;
};

namespace detail {

inline nlohmann::ordered_json kinematics(const VehicleState& v)
{
    return {{"x", v.x}, {"y", v.y}, {"z", v.z}, {"speed", v.speed}, {"heading", v.heading}};
}

inline nlohmann::ordered_json trace_header(const SyncConfig& c, std::size_t vehicles)
{
    nlohmann::ordered_json j;
    j["type"] = "header";
    j["schema"] = kTraceSchema;
    j["protocol_version"] = kProtocolVersion;
    j["dt"] = c.dt;
    j["resync_threshold"] = c.resync_threshold;
    j["max_steps"] = c.max_steps;
    j["snap_distance"] = c.snap_distance;
    j["seed"] = c.seed;
    j["speed_noise"] = c.speed_noise;
    j["drift_per_step"] = c.drift_per_step;
    j["fault_at"] = c.fault_at ? nlohmann::ordered_json(*c.fault_at) : nlohmann::ordered_json();
    j["fault_offset"] = c.fault_offset;
    j["authority"] = "A";
    j["resync_action"] = "snap B horizontally to A, recompute z";
    j["vehicles"] = vehicles;
    return j;
}

template <class T>
T expect(Channel& ch, const char* what)
{
    Message m = ch.receive();
    if (auto* p = std::get_if<T>(&m))
        return std::move(*p);
    throw Error(Errc::protocol_violation,
                std::string("expected ") + what + ", received " + message_type(m));
}

} // namespace detail

/// Drive endpoint A against the peer behind `link` for config.max_steps steps.
inline ScenarioResult run_scenario(const NetworkLocator& locator, const std::vector<Route>& routes,
                                   const SyncConfig& config, Channel& link)
{
    TrafficEndpoint a(locator, routes, config);
    ScenarioResult out;
    std::string& trace = out.trace;
    const auto emit = [&](const nlohmann::ordered_json& j) {
        trace += j.dump();
        trace += '\n';
    };
    emit(detail::trace_header(config, a.vehicle_count()));

    link.send(Hello{kProtocolVersion, config.dt, kEncoding});
    const Hello hello = detail::expect<Hello>(link, "HELLO");
    if (hello.version != kProtocolVersion || hello.dt != config.dt)
        throw Error(Errc::protocol_violation, "handshake mismatch");

    link.send(States{0, a.initial_states()});
    const Step ready = detail::expect<Step>(link, "STEP ack");
    if (ready.n != 0 || !ready.t || *ready.t != a.clock.t())
        throw Error(Errc::protocol_violation, "endpoint clocks differ at n = 0");

    auto& s = out.summary;
    s.vehicles = a.vehicle_count();
    for (std::int64_t k = 0; k < config.max_steps; ++k) {
        StepRecord rec;
        rec.a = a.advance();
        rec.n = a.clock.n;
        link.send(Step{rec.n, std::nullopt});
        link.send(States{rec.n, rec.a});
        rec.b_pre = detail::expect<States>(link, "STATES").vehicles;
        if (rec.b_pre.size() != rec.a.size())
            throw Error(Errc::protocol_violation, "endpoint B reports a different vehicle set");
        for (std::size_t i = 0; i < rec.a.size(); ++i)
            if (rec.b_pre[i].vehicle_id != rec.a[i].vehicle_id)
                throw Error(Errc::protocol_violation, "endpoint B reports vehicles out of order");
        rec.b_post = rec.b_pre;

        // B follows its STATES with any RESYNCs, then the step acknowledgement.
        std::optional<Step> ack;
        while (!ack) {
            Message m = link.receive();
            if (auto* r = std::get_if<Resync>(&m)) {
                bool found = false;
                for (std::size_t i = 0; i < rec.a.size(); ++i) {
                    if (rec.a[i].vehicle_id != r->vehicle_id)
                        continue;
                    if (r->n != rec.n || r->x != rec.a[i].x || r->y != rec.a[i].y)
                        throw Error(Errc::protocol_violation, "RESYNC does not match authority state");
                    // Snapped onto A's position, so A's surface elevation applies.
                    rec.b_post[i].x = r->x;
                    rec.b_post[i].y = r->y;
                    rec.b_post[i].z = rec.a[i].z;
                    found = true;
                }
                if (!found)
                    throw Error(Errc::protocol_violation, "RESYNC for unknown vehicle " + r->vehicle_id);
            } else if (auto* st = std::get_if<Step>(&m)) {
                ack = *st;
            } else {
                throw Error(Errc::protocol_violation,
                            std::string("unexpected ") + message_type(m) + " during step");
            }
        }
        if (ack->n != rec.n || !ack->t)
            throw Error(Errc::protocol_violation, "endpoint clock mismatch: A at n = "
                                                      + std::to_string(rec.n) + ", B acknowledged n = "
                                                      + std::to_string(ack->n));
        rec.t_a = a.clock.t();
        rec.t_b = *ack->t;
        if (rec.t_a != rec.t_b)
            throw Error(Errc::protocol_violation,
                        "endpoint clock mismatch at n = " + std::to_string(rec.n));

        emit({{"type", "clock"}, {"n", rec.n}, {"t_a", rec.t_a}, {"t_b", rec.t_b}});
        for (std::size_t i = 0; i < rec.a.size(); ++i) {
            const double err = sync_error(rec.a[i], rec.b_pre[i]);
            const SyncAction action = action_for(err, config.resync_threshold);
            const bool resynced = rec.b_post[i] != rec.b_pre[i];
            if ((action == SyncAction::resync) != resynced)
                throw Error(Errc::protocol_violation,
                            "endpoint B resync decision disagrees for " + rec.a[i].vehicle_id);
            const double residual = sync_error(rec.a[i], rec.b_post[i]);
            nlohmann::ordered_json v;
            v["type"] = "vehicle";
            v["n"] = rec.n;
            v["t"] = rec.t_a;
            v["vehicle_id"] = rec.a[i].vehicle_id;
            v["a"] = detail::kinematics(rec.a[i]);
            v["b"] = detail::kinematics(rec.b_post[i]);
            v["sync_error"] = err;
            v["action"] = to_string(action);
            v["residual_error"] = residual;
            emit(v);

            SyncEvent ev{rec.n, rec.a[i].vehicle_id, err, action};
            s.max_sync_error = std::max(s.max_sync_error, err);
            ++s.vehicle_records;
            if (action == SyncAction::resync) {
                ++s.resync_count;
                s.resync_events.push_back(ev);
            }
            rec.events.push_back(std::move(ev));
        }
        s.steps = rec.n;
        s.t_a = rec.t_a;
        s.t_b = rec.t_b;
        out.steps.push_back(std::move(rec));
    }

    link.send(Bye{});
    detail::expect<Bye>(link, "BYE");
    s.trace_checksum = fnv1a64_hex(trace);
    return out;
}

/// In-process run: B is driven through a DirectLink.
inline ScenarioResult run_scenario(const RoadNetwork3D& net, const std::vector<Route>& routes,
                                   const SyncConfig& config)
{
    const NetworkLocator locator(net);
    TerrainEndpoint b(locator, config);
    DirectLink link(b);
    return run_scenario(locator, routes, config, link);
}

/// Same scenario with B served on a loopback TCP socket in its own thread.
inline ScenarioResult run_scenario_tcp(const RoadNetwork3D& net, const std::vector<Route>& routes,
                                       const SyncConfig& config)
{
    const NetworkLocator locator(net);
    for (const auto& r : routes)
        route_path(net, r);
    TcpListener listener;
    std::exception_ptr b_error;
    std::thread server([&] {
        try {
            TcpChannel ch = listener.accept();
            TerrainEndpoint b(locator, config);
            serve(b, ch);
        } catch (...) {
            b_error = std::current_exception();
        }
    });
    ScenarioResult result;
    std::exception_ptr a_error;
    try {
        TcpChannel ch = connect_tcp(listener.port());
        result = run_scenario(locator, routes, config, ch);
    } catch (...) {
        a_error = std::current_exception();
        listener.shutdown();
    }
    server.join();
    if (a_error) {
        // A only sees "peer closed" when B failed; B's error is the real cause.
        try {
            std::rethrow_exception(a_error);
        } catch (const Error& e) {
            if (e.code() == Errc::protocol_violation && b_error)
                std::rethrow_exception(b_error);
            throw;
        }
    }
    if (b_error)
        std::rethrow_exception(b_error);
    return result;
}

} // namespace terra3d::cosim
