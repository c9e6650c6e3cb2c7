#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <string>

#include "terra3d/error.hpp"

namespace terra3d::cosim {

struct SyncConfig {
    double dt = 0.05;               // seconds per lockstep step
    double resync_threshold = 0.5;  // meters, strict ">" triggers resync
    std::int64_t max_steps = 1000;
    double snap_distance = 5.0;     // meters, for elevation lookup
    std::uint64_t seed = 0;
    double speed_noise = 0.0;       // relative per-step speed jitter on endpoint A
    double drift_per_step = 0.0;    // meters added to endpoint B's x every step
    std::optional<std::int64_t> fault_at;
    double fault_offset = 0.0;      // meters added to endpoint B's x at fault_at

    void validate() const
    {
        if (!(dt > 0.0) || !std::isfinite(dt))
            throw Error(Errc::invalid_input, "sync dt must be positive");
        if (!(resync_threshold > 0.0))
            throw Error(Errc::invalid_input, "resync threshold must be positive");
        if (max_steps < 0)
            throw Error(Errc::invalid_input, "max_steps must be non-negative");
        if (!(snap_distance > 0.0))
            throw Error(Errc::invalid_input, "snap distance must be positive");
        if (speed_noise < 0.0 || speed_noise >= 1.0)
            throw Error(Errc::invalid_input, "speed noise must be in [0, 1)");
    }
};

struct VehicleState {
    std::string vehicle_id;
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;
    double speed = 0.0;   // m/s
    double heading = 0.0; // radians in [0, 2*pi), counter-clockwise from east

    friend bool operator==(const VehicleState&, const VehicleState&) = default;
};

/// Step counter with derived time; t is always n * dt, never accumulated.
struct LockstepClock {
    std::int64_t n = 0;
    double dt = 0.05;

    double t() const { return static_cast<double>(n) * dt; }
    void advance() { ++n; }
};

enum class SyncAction { none, resync };

inline const char* to_string(SyncAction a) { return a == SyncAction::resync ? "resync" : "none"; }

struct SyncEvent {
    std::int64_t n = 0;
    std::string vehicle_id;
    double sync_error = 0.0;
    SyncAction action = SyncAction::none;
};

/// Horizontal distance between two reports of the same vehicle. Elevation is
/// ignored; the 3D side derives it from the road surface.
inline double sync_error(const VehicleState& a, const VehicleState& b)
{
    if (a.vehicle_id != b.vehicle_id)
        throw Error(Errc::invalid_input,
                    "sync_error between different vehicles '" + a.vehicle_id + "' and '"
                        + b.vehicle_id + "'");
    return std::hypot(a.x - b.x, a.y - b.y);
}

inline SyncAction action_for(double error, double threshold)
{
    return error > threshold ? SyncAction::resync : SyncAction::none;
}

} // namespace terra3d::cosim
