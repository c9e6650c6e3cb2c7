#pragma once

// Writers for GeoJSON (inspection), OpenDRIVE 1.4 (3D simulators) and a plain
// SUMO node/edge network. Output is byte-deterministic: fixed ordering and
// fixed-point numbers.

#include <cmath>
#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "terra3d/error.hpp"
#include "terra3d/geo.hpp"
#include "terra3d/network.hpp"
#include "terra3d/network_io.hpp"
#include "terra3d/xml.hpp"

namespace terra3d {

inline constexpr int kMeterDigits = 3;
inline constexpr int kDegreeDigits = 9;
inline constexpr int kLengthDigits = 9;
inline constexpr double kLaneWidth = 3.5;

inline double class_speed(RoadKind kind)
{
    switch (kind) {
    case RoadKind::highway: return 27.8;
    case RoadKind::arterial: return 13.9;
    case RoadKind::residential: return 8.3;
    }
    return 8.3;
}

inline std::string proj_string(const LocalFrame& frame)
{
    std::string s = "+proj=utm +zone=" + std::to_string(frame.origin.zone);
    if (frame.origin.hemisphere == Hemisphere::south)
        s += " +south";
    return s + " +ellps=WGS84 +datum=WGS84 +units=m +no_defs";
}

namespace detail {

inline std::string json_string(std::string_view s) { return nlohmann::json(std::string(s)).dump(); }

inline std::string lonlat_z(const LocalFrame& frame, const Point3D& p)
{
    const GeoPointWgs g = local_to_wgs84(p.xy(), frame);
    return "[" + fixed(g.lon, kDegreeDigits) + "," + fixed(g.lat, kDegreeDigits) + ","
        + fixed(p.z, kMeterDigits) + "]";
}

inline void check_legs(const RoadSegment3D& seg)
{
    for (std::size_t i = 0; i + 1 < seg.polyline.size(); ++i)
        if (distance(seg.polyline[i], seg.polyline[i + 1]) < 1e-9)
            throw Error(Errc::degenerate_geometry,
                        "segment " + seg.id + " has a zero-length geometry primitive");
    if (seg.points.size() < 2)
        throw Error(Errc::degenerate_geometry, "segment " + seg.id + " has fewer than 2 samples");
}

} // namespace detail

/// RFC 7946 FeatureCollection: one LineString per segment, one Point per node,
/// WGS84 longitude/latitude plus elevation in meters.
inline std::string export_geojson(const RoadNetwork3D& net)
{
    std::string out = "{\"type\":\"FeatureCollection\",\"features\":[";
    bool first = true;
    auto open_feature = [&] {
        out += first ? "\n" : ",\n";
        first = false;
    };
    for (const auto& seg : net.segments) {
        open_feature();
        out += "{\"type\":\"Feature\",\"properties\":{\"kind\":\"segment\",\"id\":"
            + detail::json_string(seg.id) + ",\"from\":" + detail::json_string(seg.from_node)
            + ",\"to\":" + detail::json_string(seg.to_node) + ",\"class\":\""
            + to_string(seg.cls.kind) + "\",\"lanes\":" + std::to_string(seg.lanes)
            + ",\"oneway\":" + (seg.oneway ? "true" : "false")
            + ",\"flagged\":" + (seg.flagged ? "true" : "false")
            + "},\"geometry\":{\"type\":\"LineString\",\"coordinates\":[";
        for (std::size_t i = 0; i < seg.points.size(); ++i) {
            if (i)
                out += ",";
            out += detail::lonlat_z(net.frame, seg.points[i]);
        }
        out += "]}}";
    }
    for (const auto& node : net.nodes) {
        open_feature();
        out += "{\"type\":\"Feature\",\"properties\":{\"kind\":\"node\",\"id\":"
            + detail::json_string(node.id)
            + ",\"is_intersection\":" + (node.is_intersection ? "true" : "false")
            + ",\"is_signal\":" + (node.is_signal ? "true" : "false")
            + "},\"geometry\":{\"type\":\"Point\",\"coordinates\":"
            + detail::lonlat_z(net.frame, {node.pos.x, node.pos.y, node.z}) + "}}";
    }
    out += first ? "]}\n" : "\n]}\n";
    return out;
}

/// Piecewise-linear elevation records: (s, a, b) with c = d = 0. Runs of equal
/// grade collapse into one record.
struct ElevationRecord {
    double s = 0.0;
    double a = 0.0;
    double b = 0.0;
};

inline std::vector<ElevationRecord> elevation_records(const ElevationProfile& profile)
{
    std::vector<ElevationRecord> out;
    for (std::size_t i = 0; i + 1 < profile.size(); ++i) {
        const double b =
            (profile.z[i + 1] - profile.z[i]) / (profile.stations[i + 1] - profile.stations[i]);
        if (!out.empty() && std::abs(out.back().b - b) < 1e-9)
            continue;
        out.push_back({profile.stations[i], profile.z[i], b});
    }
    return out;
}

inline std::string export_opendrive(const RoadNetwork3D& net, std::string_view name = "terra3d")
{
    for (const auto& seg : net.segments)
        detail::check_legs(seg);

    std::map<std::string, int> junction_ids;
    for (const auto& node : net.nodes)
        if (node.is_intersection)
            junction_ids.emplace(node.id, static_cast<int>(junction_ids.size()) + 1);

    const auto& b = net.bbox;
    std::string out = "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n<OpenDRIVE>\n";
    out += "  <header revMajor=\"1\" revMinor=\"4\" name=\"" + xml_escape(name)
        + "\" version=\"1.00\" north=\"" + fixed(b.max_y, kMeterDigits) + "\" south=\""
        + fixed(b.min_y, kMeterDigits) + "\" east=\"" + fixed(b.max_x, kMeterDigits)
        + "\" west=\"" + fixed(b.min_x, kMeterDigits) + "\" vendor=\"terra3d\">\n";
    // Local coordinates are UTM minus the frame origin, so shift the false origin.
    const double lon0 = central_meridian(net.frame.origin.zone);
    const double x0 = 500000.0 - net.frame.origin.easting;
    const double y0 = (net.frame.origin.hemisphere == Hemisphere::south ? 10000000.0 : 0.0)
        - net.frame.origin.northing;
    out += "    <geoReference><![CDATA[+proj=tmerc +lat_0=0 +lon_0=" + fixed(lon0, 1)
        + " +k=0.9996 +x_0=" + fixed(x0, kMeterDigits) + " +y_0=" + fixed(y0, kMeterDigits)
        + " +ellps=WGS84 +datum=WGS84 +units=m +no_defs]]></geoReference>\n";
    out += "  </header>\n";

    int road_id = 0;
    for (const auto& seg : net.segments) {
        ++road_id;
        const double length = seg.profile.stations.back();
        out += "  <road name=\"" + xml_escape(seg.id) + "\" length=\"" + fixed(length, kLengthDigits)
            + "\" id=\"" + std::to_string(road_id) + "\" junction=\"-1\">\n";
        out += "    <link>\n";
        if (auto it = junction_ids.find(seg.from_node); it != junction_ids.end())
            out += "      <predecessor elementType=\"junction\" elementId=\""
                + std::to_string(it->second) + "\"/>\n";
        if (auto it = junction_ids.find(seg.to_node); it != junction_ids.end())
            out += "      <successor elementType=\"junction\" elementId=\""
                + std::to_string(it->second) + "\"/>\n";
        out += "    </link>\n";

        out += "    <planView>\n";
        double s = 0.0;
        for (std::size_t i = 0; i + 1 < seg.polyline.size(); ++i) {
            const Point2 p = seg.polyline[i], q = seg.polyline[i + 1];
            const double leg = distance(p, q);
            out += "      <geometry s=\"" + fixed(s, kLengthDigits) + "\" x=\"" + fixed(p.x, kMeterDigits)
                + "\" y=\"" + fixed(p.y, kMeterDigits) + "\" hdg=\""
                + fixed(std::atan2(q.y - p.y, q.x - p.x), 9) + "\" length=\""
                + fixed(leg, kLengthDigits) + "\">\n        <line/>\n      </geometry>\n";
            s += leg;
        }
        out += "    </planView>\n";

        out += "    <elevationProfile>\n";
        for (const auto& r : elevation_records(seg.profile))
            out += "      <elevation s=\"" + fixed(r.s, kLengthDigits) + "\" a=\""
                + fixed(r.a, kMeterDigits) + "\" b=\"" + fixed(r.b, 6)
                + "\" c=\"0\" d=\"0\"/>\n";
        out += "    </elevationProfile>\n";
        out += "    <lateralProfile/>\n";

        auto lane = [&](int id) {
            return "          <lane id=\"" + std::to_string(id)
                + "\" type=\"driving\" level=\"false\">\n            <link/>\n"
                  "            <width sOffset=\"0.000\" a=\""
                + fixed(kLaneWidth, kMeterDigits)
                + "\" b=\"0\" c=\"0\" d=\"0\"/>\n          </lane>\n";
        };
        out += "    <lanes>\n      <laneSection s=\"0.000\">\n";
        if (!seg.oneway) {
            out += "        <left>\n";
            for (int k = seg.lanes; k >= 1; --k)
                out += lane(k);
            out += "        </left>\n";
        }
        out += "        <center>\n          <lane id=\"0\" type=\"none\" level=\"false\"/>\n"
               "        </center>\n";
        out += "        <right>\n";
        for (int k = 1; k <= seg.lanes; ++k)
            out += lane(-k);
        out += "        </right>\n";
        out += "      </laneSection>\n    </lanes>\n";
        out += "  </road>\n";
    }

    for (const auto& [node_id, jid] : junction_ids)
        out += "  <junction id=\"" + std::to_string(jid) + "\" name=\"" + xml_escape(node_id)
            + "\"/>\n";
    out += "</OpenDRIVE>\n";
    return out;
}

/// Plain SUMO network: nodes with z, one edge per travel direction with a 3D shape.
inline std::string export_sumo_net(const RoadNetwork3D& net)
{
    for (const auto& seg : net.segments)
        detail::check_legs(seg);

    const auto incidence = node_incidence(net);
    const auto& b = net.bbox;
    const GeoPointWgs sw = local_to_wgs84({b.min_x, b.min_y}, net.frame);
    const GeoPointWgs ne = local_to_wgs84({b.max_x, b.max_y}, net.frame);

    std::string out = "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
    out += "<net version=\"1.20\">\n";
    out += "  <location netOffset=\"" + fixed(-net.frame.origin.easting, kMeterDigits) + ","
        + fixed(-net.frame.origin.northing, kMeterDigits) + "\" convBoundary=\""
        + fixed(b.min_x, kMeterDigits) + "," + fixed(b.min_y, kMeterDigits) + ","
        + fixed(b.max_x, kMeterDigits) + "," + fixed(b.max_y, kMeterDigits)
        + "\" origBoundary=\"" + fixed(sw.lon, kDegreeDigits) + "," + fixed(sw.lat, kDegreeDigits)
        + "," + fixed(ne.lon, kDegreeDigits) + "," + fixed(ne.lat, kDegreeDigits)
        + "\" projParameter=\"" + proj_string(net.frame) + "\"/>\n";

    for (const auto& node : net.nodes) {
        std::string type = "priority";
        if (node.is_signal)
            type = "traffic_light";
        else if (auto it = incidence.find(node.id); it != incidence.end() && it->second.size() == 1)
            type = "dead_end";
        out += "  <node id=\"" + xml_escape(node.id) + "\" x=\"" + fixed(node.pos.x, kMeterDigits)
            + "\" y=\"" + fixed(node.pos.y, kMeterDigits) + "\" z=\"" + fixed(node.z, kMeterDigits)
            + "\" type=\"" + type + "\"/>\n";
    }

    auto shape = [](const std::vector<Point3D>& pts, bool reverse) {
        std::string s;
        for (std::size_t k = 0; k < pts.size(); ++k) {
            const Point3D& p = pts[reverse ? pts.size() - 1 - k : k];
            if (k)
                s += ' ';
            s += fixed(p.x, kMeterDigits) + "," + fixed(p.y, kMeterDigits) + ","
                + fixed(p.z, kMeterDigits);
        }
        return s;
    };
    auto edge = [&](const RoadSegment3D& seg, bool reverse) {
        const std::string id = reverse ? "-" + seg.id : seg.id;
        const std::string& from = reverse ? seg.to_node : seg.from_node;
        const std::string& to = reverse ? seg.from_node : seg.to_node;
        const int priority = seg.cls.kind == RoadKind::highway ? 3
            : seg.cls.kind == RoadKind::arterial             ? 2
                                                             : 1;
        return "  <edge id=\"" + xml_escape(id) + "\" from=\"" + xml_escape(from) + "\" to=\""
            + xml_escape(to) + "\" priority=\"" + std::to_string(priority) + "\" type=\"highway."
            + xml_escape(seg.highway_tag.empty() ? to_string(seg.cls.kind) : seg.highway_tag)
            + "\" numLanes=\"" + std::to_string(seg.lanes) + "\" speed=\""
            + fixed(class_speed(seg.cls.kind), 2) + "\" shape=\"" + shape(seg.points, reverse)
            + "\"/>\n";
    };
    for (const auto& seg : net.segments) {
        out += edge(seg, false);
        if (!seg.oneway)
            out += edge(seg, true);
    }
    out += "</net>\n";
    return out;
}

enum class ExportFormat { geojson, xodr, netxml };

inline std::vector<ExportFormat> parse_formats(std::string_view list)
{
    std::vector<ExportFormat> out;
    std::set<ExportFormat> seen;
    std::size_t pos = 0;
    while (pos <= list.size()) {
        const std::size_t comma = list.find(',', pos);
        std::string_view tok = list.substr(pos, comma == std::string_view::npos ? std::string_view::npos
                                                                                 : comma - pos);
        while (!tok.empty() && tok.front() == ' ')
            tok.remove_prefix(1);
        while (!tok.empty() && tok.back() == ' ')
            tok.remove_suffix(1);
        ExportFormat f;
        if (tok == "geojson")
            f = ExportFormat::geojson;
        else if (tok == "xodr" || tok == "opendrive")
            f = ExportFormat::xodr;
        else if (tok == "netxml" || tok == "sumo")
            f = ExportFormat::netxml;
        else
            throw Error(Errc::invalid_input, "unknown export format '" + std::string(tok) + "'");
        if (seen.insert(f).second)
            out.push_back(f);
        if (comma == std::string_view::npos)
            break;
        pos = comma + 1;
    }
    return out;
}

inline const char* to_string(ExportFormat f)
{
    switch (f) {
    case ExportFormat::geojson: return "geojson";
    case ExportFormat::xodr: return "xodr";
    case ExportFormat::netxml: return "netxml";
    }
    return "";
}

struct ExportedFile {
    std::string path;
    std::string format;
    std::string checksum;
    std::size_t bytes = 0;
};

struct ExportManifest {
    std::vector<ExportedFile> files;
    std::string network_checksum;

    std::string to_json() const
    {
        nlohmann::ordered_json j;
        j["schema"] = "terra3d.manifest/1";
        j["network_checksum"] = network_checksum;
        nlohmann::ordered_json arr = nlohmann::ordered_json::array();
        for (const auto& f : files)
            arr.push_back({{"path", f.path},
                           {"format", f.format},
                           {"checksum", f.checksum},
                           {"bytes", f.bytes}});
        j["files"] = arr;
        return j.dump(2) + "\n";
    }
};

/// Writes the requested formats into `dir` as network.{geojson,xodr,net.xml}
/// plus manifest.json. Paths in the manifest are relative to `dir`.
inline ExportManifest export_network(const RoadNetwork3D& net,
                                     const std::vector<ExportFormat>& formats,
                                     const std::filesystem::path& dir)
{
    std::filesystem::create_directories(dir);
    ExportManifest manifest;
    manifest.network_checksum = fnv1a64_hex(serialize_network(net));
    for (ExportFormat f : formats) {
        std::string name, body;
        switch (f) {
        case ExportFormat::geojson:
            name = "network.geojson";
            body = export_geojson(net);
            break;
        case ExportFormat::xodr:
            name = "network.xodr";
            body = export_opendrive(net);
            break;
        case ExportFormat::netxml:
            name = "network.net.xml";
            body = export_sumo_net(net);
            break;
        }
        write_file((dir / name).string(), body);
        manifest.files.push_back({name, to_string(f), fnv1a64_hex(body), body.size()});
    }
    write_file((dir / "manifest.json").string(), manifest.to_json());
    return manifest;
}

} // namespace terra3d
