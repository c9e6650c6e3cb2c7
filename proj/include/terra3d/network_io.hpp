#pragma once

// Versioned JSON artifact for a built network ("terra3d.network/1").
// Doubles are written in shortest round-trip form, so load(save(net)) is exact.

#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>

#include "json.hpp"

#include "terra3d/error.hpp"
#include "terra3d/network.hpp"

namespace terra3d {

inline constexpr const char* kNetworkSchema = "terra3d.network/1";

/// 64-bit FNV-1a, hex encoded. Used for input and output checksums.
inline std::string fnv1a64_hex(std::string_view bytes)
{
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    static const char* digits = "0123456789abcdef";
    for (int i = 15; i >= 0; --i) {
        buf[i] = digits[h & 0xf];
        h >>= 4;
    }
    buf[16] = '\0';
    return std::string("fnv1a64:") + buf;
}

inline std::string read_file(const std::string& path)
{
    std::ifstream f(path, std::ios::binary);
    if (!f)
        throw Error(Errc::io, "cannot open " + path);
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

inline void write_file(const std::string& path, std::string_view content)
{
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f)
        throw Error(Errc::io, "cannot write " + path);
    f.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!f)
        throw Error(Errc::io, "write failed for " + path);
}

inline nlohmann::ordered_json to_json(const RoadNetwork3D& net)
{
    using nlohmann::ordered_json;
    ordered_json j;
    j["schema"] = kNetworkSchema;
    j["frame"] = {
        {"zone", net.frame.origin.zone},
        {"hemisphere", net.frame.origin.hemisphere == Hemisphere::north ? "north" : "south"},
        {"origin_easting", net.frame.origin.easting},
        {"origin_northing", net.frame.origin.northing},
    };
    j["bbox"] = {net.bbox.min_x, net.bbox.min_y, net.bbox.max_x, net.bbox.max_y};

    ordered_json prov;
    prov["sampling_mode"] = to_string(net.provenance.sampling_mode);
    prov["max_smooth_iters"] = net.provenance.max_smooth_iters;
    prov["gradient_limits"] = {{"highway", net.provenance.limits.highway},
                               {"arterial", net.provenance.limits.arterial},
                               {"residential", net.provenance.limits.residential}};
    prov["smoothing_stage"] = net.provenance.smoothing_stage;
    prov["pipeline"] = "stack,resample,enforce_gradients,reconcile_intersections";
    ordered_json sums = ordered_json::object();
    for (const auto& [k, v] : net.provenance.input_checksums)
        sums[k] = v;
    prov["input_checksums"] = sums;
    ordered_json iters = ordered_json::object();
    for (const auto& s : net.segments)
        iters[s.id] = s.smoothing_iterations;
    prov["smoothing_iterations"] = iters;
    j["provenance"] = prov;

    ordered_json nodes = ordered_json::array();
    for (const auto& n : net.nodes) {
        nodes.push_back({{"id", n.id},
                         {"x", n.pos.x},
                         {"y", n.pos.y},
                         {"z", n.z},
                         {"is_intersection", n.is_intersection},
                         {"is_signal", n.is_signal}});
    }
    j["nodes"] = nodes;

    ordered_json segs = ordered_json::array();
    for (const auto& s : net.segments) {
        ordered_json poly = ordered_json::array();
        for (const auto& p : s.polyline)
            poly.push_back({p.x, p.y});
        ordered_json pts = ordered_json::array();
        for (const auto& p : s.points)
            pts.push_back({p.x, p.y, p.z});
        segs.push_back({{"id", s.id},
                        {"from", s.from_node},
                        {"to", s.to_node},
                        {"class", to_string(s.cls.kind)},
                        {"max_gradient", s.cls.max_gradient},
                        {"lanes", s.lanes},
                        {"oneway", s.oneway},
                        {"highway", s.highway_tag},
                        {"name", s.name},
                        {"flagged", s.flagged},
                        {"smoothing_iterations", s.smoothing_iterations},
                        {"polyline", poly},
                        {"stations", s.profile.stations},
                        {"points", pts}});
    }
    j["segments"] = segs;
    return j;
}

inline RoadNetwork3D network_from_json(const nlohmann::ordered_json& j)
{
    try {
        if (j.at("schema").get<std::string>() != kNetworkSchema)
            throw Error(Errc::invalid_input,
                        "unsupported network schema '" + j.at("schema").get<std::string>() + "'");
        RoadNetwork3D net;
        const auto& f = j.at("frame");
        UtmPoint origin;
        origin.zone = f.at("zone").get<int>();
        origin.hemisphere =
            f.at("hemisphere").get<std::string>() == "south" ? Hemisphere::south : Hemisphere::north;
        origin.easting = f.at("origin_easting").get<double>();
        origin.northing = f.at("origin_northing").get<double>();
        net.frame = LocalFrame::at(origin);
        const auto& b = j.at("bbox");
        net.bbox = {b.at(0).get<double>(), b.at(1).get<double>(), b.at(2).get<double>(),
                    b.at(3).get<double>()};

        const auto& prov = j.at("provenance");
        net.provenance.sampling_mode = parse_sampling_mode(prov.at("sampling_mode").get<std::string>());
        net.provenance.max_smooth_iters = prov.at("max_smooth_iters").get<int>();
        const auto& lim = prov.at("gradient_limits");
        net.provenance.limits = {lim.at("highway").get<double>(), lim.at("arterial").get<double>(),
                                 lim.at("residential").get<double>()};
        net.provenance.smoothing_stage = prov.at("smoothing_stage").get<std::string>();
        for (const auto& [k, v] : prov.at("input_checksums").items())
            net.provenance.input_checksums[k] = v.get<std::string>();

        for (const auto& n : j.at("nodes")) {
            RoadNode3D node;
            node.id = n.at("id").get<std::string>();
            node.pos = {n.at("x").get<double>(), n.at("y").get<double>()};
            node.z = n.at("z").get<double>();
            node.is_intersection = n.at("is_intersection").get<bool>();
            node.is_signal = n.at("is_signal").get<bool>();
            net.nodes.push_back(std::move(node));
        }
        for (const auto& s : j.at("segments")) {
            RoadSegment3D seg;
            seg.id = s.at("id").get<std::string>();
            seg.from_node = s.at("from").get<std::string>();
            seg.to_node = s.at("to").get<std::string>();
            seg.cls = {parse_road_kind(s.at("class").get<std::string>()),
                       s.at("max_gradient").get<double>()};
            seg.lanes = s.at("lanes").get<int>();
            seg.oneway = s.at("oneway").get<bool>();
            seg.highway_tag = s.at("highway").get<std::string>();
            seg.name = s.at("name").get<std::string>();
            seg.flagged = s.at("flagged").get<bool>();
            seg.smoothing_iterations = s.at("smoothing_iterations").get<int>();
            for (const auto& p : s.at("polyline"))
                seg.polyline.push_back({p.at(0).get<double>(), p.at(1).get<double>()});
            seg.profile.stations = s.at("stations").get<std::vector<double>>();
            for (const auto& p : s.at("points")) {
                const Point3D q{p.at(0).get<double>(), p.at(1).get<double>(), p.at(2).get<double>()};
                seg.points.push_back(q);
                seg.profile.z.push_back(q.z);
            }
            if (seg.points.size() != seg.profile.stations.size())
                throw Error(Errc::invalid_input, "segment " + seg.id + ": points/stations mismatch");
            seg.profile.validate();
            if (seg.polyline.size() < 2)
                throw Error(Errc::invalid_input, "segment " + seg.id + ": polyline too short");
            net.segments.push_back(std::move(seg));
        }
        for (const auto& s : net.segments)
            if (!net.find_node(s.from_node) || !net.find_node(s.to_node))
                throw Error(Errc::invalid_input, "segment " + s.id + " references unknown node");
        return net;
    } catch (const nlohmann::json::exception& e) {
        throw Error(Errc::invalid_input, std::string("malformed network artifact: ") + e.what());
    }
}

inline std::string serialize_network(const RoadNetwork3D& net) { return to_json(net).dump(1) + "\n"; }

inline RoadNetwork3D parse_network(const std::string& text)
{
    try {
        return network_from_json(nlohmann::ordered_json::parse(text));
    } catch (const nlohmann::json::exception& e) {
        throw Error(Errc::invalid_input, std::string("malformed network artifact: ") + e.what());
    }
}

inline RoadNetwork3D load_network(const std::string& path) { return parse_network(read_file(path)); }

} // namespace terra3d
