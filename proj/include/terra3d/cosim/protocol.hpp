#pragma once

// Co-simulation wire messages and their framing.
//
// Each frame is a 4-byte unsigned big-endian payload length followed by that
// many bytes of UTF-8 JSON. docs/protocol.md has the byte-level description.

#include <cstdint>
#include <deque>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "json.hpp"

#include "terra3d/cosim/types.hpp"
#include "terra3d/error.hpp"

namespace terra3d::cosim {

inline constexpr int kProtocolVersion = 1;
inline constexpr const char* kEncoding = "json";
inline constexpr std::uint32_t kMaxFrameBytes = 64u << 20;

struct Hello {
    int version = kProtocolVersion;
    double dt = 0.05;
    std::string encoding = kEncoding;
};

/// Sent by A to open step n; echoed by B with `t` once the step is done.
struct Step {
    std::int64_t n = 0;
    std::optional<double> t;
};

struct States {
    std::int64_t n = 0;
    std::vector<VehicleState> vehicles;
};

struct Resync {
    std::int64_t n = 0;
    std::string vehicle_id;
    double x = 0.0;
    double y = 0.0;
};

struct Bye {};

using Message = std::variant<Hello, Step, States, Resync, Bye>;

inline const char* message_type(const Message& m)
{
    static constexpr const char* names[] = {"HELLO", "STEP", "STATES", "RESYNC", "BYE"};
    return names[m.index()];
}

inline nlohmann::ordered_json to_json(const VehicleState& v)
{
    return {{"vehicle_id", v.vehicle_id}, {"x", v.x},         {"y", v.y},
            {"z", v.z},                   {"speed", v.speed}, {"heading", v.heading}};
}

inline VehicleState vehicle_from_json(const nlohmann::ordered_json& j)
{
    VehicleState v;
    v.vehicle_id = j.at("vehicle_id").get<std::string>();
    v.x = j.at("x").get<double>();
    v.y = j.at("y").get<double>();
    v.z = j.at("z").get<double>();
    v.speed = j.at("speed").get<double>();
    v.heading = j.at("heading").get<double>();
    return v;
}

inline nlohmann::ordered_json to_json(const Message& m)
{
    nlohmann::ordered_json j;
    j["type"] = message_type(m);
    std::visit(
        [&](const auto& msg) {
            using T = std::decay_t<decltype(msg)>;
            if constexpr (std::is_same_v<T, Hello>) {
                j["version"] = msg.version;
                j["dt"] = msg.dt;
                j["encoding"] = msg.encoding;
            } else if constexpr (std::is_same_v<T, Step>) {
                j["n"] = msg.n;
                if (msg.t)
                    j["t"] = *msg.t;
            } else if constexpr (std::is_same_v<T, States>) {
                j["n"] = msg.n;
                j["vehicles"] = nlohmann::ordered_json::array();
                for (const auto& v : msg.vehicles)
                    j["vehicles"].push_back(to_json(v));
            } else if constexpr (std::is_same_v<T, Resync>) {
                j["n"] = msg.n;
                j["vehicle_id"] = msg.vehicle_id;
                j["x"] = msg.x;
                j["y"] = msg.y;
            }
        },
        m);
    return j;
}

inline Message message_from_json(const nlohmann::ordered_json& j)
{
    try {
        const auto type = j.at("type").get<std::string>();
        if (type == "HELLO")
            return Hello{j.at("version").get<int>(), j.at("dt").get<double>(),
                         j.value("encoding", std::string(kEncoding))};
        if (type == "STEP") {
            Step s{j.at("n").get<std::int64_t>(), std::nullopt};
            if (j.contains("t"))
                s.t = j.at("t").get<double>();
            return s;
        }
        if (type == "STATES") {
            States s{j.at("n").get<std::int64_t>(), {}};
            for (const auto& v : j.at("vehicles"))
                s.vehicles.push_back(vehicle_from_json(v));
            return s;
        }
        if (type == "RESYNC")
            return Resync{j.at("n").get<std::int64_t>(), j.at("vehicle_id").get<std::string>(),
                          j.at("x").get<double>(), j.at("y").get<double>()};
        if (type == "BYE")
            return Bye{};
        throw Error(Errc::protocol_violation, "unknown message type '" + type + "'");
    } catch (const nlohmann::json::exception& e) {
        throw Error(Errc::protocol_violation, std::string("malformed message: ") + e.what());
    }
}

/// Length prefix plus JSON payload.
inline std::string encode_frame(const Message& m)
{
    const std::string payload = to_json(m).dump();
    if (payload.size() > kMaxFrameBytes)
        throw Error(Errc::protocol_violation, "message exceeds maximum frame size");
    const auto n = static_cast<std::uint32_t>(payload.size());
    std::string out;
    out.reserve(4 + payload.size());
    out.push_back(static_cast<char>((n >> 24) & 0xff));
    out.push_back(static_cast<char>((n >> 16) & 0xff));
    out.push_back(static_cast<char>((n >> 8) & 0xff));
    out.push_back(static_cast<char>(n & 0xff));
    out += payload;
    return out;
}

/// Incremental decoder: feed arbitrary byte chunks, pop complete messages.
class FrameDecoder {
public:
    void feed(std::string_view bytes)
    {
        buffer_.append(bytes);
        for (;;) {
            if (buffer_.size() < 4)
                return;
            const auto* b = reinterpret_cast<const unsigned char*>(buffer_.data());
            const std::uint32_t n = (std::uint32_t{b[0]} << 24) | (std::uint32_t{b[1]} << 16)
                | (std::uint32_t{b[2]} << 8) | std::uint32_t{b[3]};
            if (n > kMaxFrameBytes)
                throw Error(Errc::protocol_violation,
                            "frame length " + std::to_string(n) + " exceeds maximum");
            if (buffer_.size() < 4 + std::size_t{n})
                return;
            nlohmann::ordered_json j;
            try {
                j = nlohmann::ordered_json::parse(buffer_.begin() + 4, buffer_.begin() + 4 + n);
            } catch (const nlohmann::json::parse_error& e) {
                throw Error(Errc::protocol_violation, std::string("frame is not JSON: ") + e.what());
            }
            buffer_.erase(0, 4 + std::size_t{n});
            ready_.push_back(message_from_json(j));
        }
    }

    std::optional<Message> next()
    {
        if (ready_.empty())
            return std::nullopt;
        Message m = std::move(ready_.front());
        ready_.pop_front();
        return m;
    }

    std::size_t buffered_bytes() const { return buffer_.size(); }

private:
    std::string buffer_;
    std::deque<Message> ready_;
};

} // namespace terra3d::cosim
