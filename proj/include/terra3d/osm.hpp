#pragma once

// OpenStreetMap XML ingest: drivable ways inside a bounding box become a
// typed 2D road network split at shared nodes.

#include <expat.h>

#include <algorithm>
#include <charconv>
#include <fstream>
#include <map>
#include <memory>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "terra3d/error.hpp"
#include "terra3d/geo.hpp"
#include "terra3d/network.hpp"

namespace terra3d {

inline bool is_excluded_highway(std::string_view tag)
{
    static const std::set<std::string_view> excluded = {
        "footway",  "cycleway",     "path",     "pedestrian", "steps",     "bridleway",
        "track",    "corridor",     "platform", "construction", "proposed", "elevator",
        "bus_stop", "crossing",     "escape",   "raceway",    "abandoned", "disused",
        "via_ferrata", "sidewalk",  "traffic_signals", "street_lamp", "give_way", "stop",
        "turning_circle", "mini_roundabout", "motorway_junction", "rest_area", "services",
    };
    return excluded.count(tag) > 0;
}

/// Maps an OSM highway value to a road class. Unknown values fall back to
/// residential and, when `warnings` is given, a warning is appended.
inline RoadClass classify(std::string_view tag, const GradeLimits& limits = {},
                          std::vector<std::string>* warnings = nullptr)
{
    if (tag.empty())
        throw Error(Errc::invalid_input, "empty highway tag");
    static const std::map<std::string_view, RoadKind> table = {
        {"motorway", RoadKind::highway},        {"trunk", RoadKind::highway},
        {"motorway_link", RoadKind::highway},   {"trunk_link", RoadKind::highway},
        {"primary", RoadKind::arterial},        {"secondary", RoadKind::arterial},
        {"tertiary", RoadKind::arterial},       {"primary_link", RoadKind::arterial},
        {"secondary_link", RoadKind::arterial}, {"tertiary_link", RoadKind::arterial},
        {"residential", RoadKind::residential}, {"unclassified", RoadKind::residential},
        {"living_street", RoadKind::residential}, {"service", RoadKind::residential},
    };
    if (auto it = table.find(tag); it != table.end())
        return RoadClass::of(it->second, limits);
    if (warnings)
        warnings->push_back("unknown highway value '" + std::string(tag)
                            + "' treated as residential");
    return RoadClass::of(RoadKind::residential, limits);
}

inline int default_lanes(RoadKind kind)
{
    return kind == RoadKind::residential ? 1 : 2;
}

namespace detail {

struct OsmNodeRecord {
    double lat = 0.0;
    double lon = 0.0;
    std::map<std::string, std::string> tags;
};

struct OsmWayRecord {
    std::string id;
    std::vector<std::string> refs;
    std::map<std::string, std::string> tags;
};

struct OsmDocument {
    std::unordered_map<std::string, OsmNodeRecord> nodes;
    std::vector<OsmWayRecord> ways;
};

class OsmReader {
public:
    OsmDocument read(std::string_view text)
    {
        std::unique_ptr<XML_ParserStruct, decltype(&XML_ParserFree)> parser(
            XML_ParserCreate("UTF-8"), &XML_ParserFree);
        if (!parser)
            throw Error(Errc::io, "cannot create XML parser");
        XML_SetUserData(parser.get(), this);
        XML_SetElementHandler(parser.get(), &OsmReader::on_start, &OsmReader::on_end);
        if (XML_Parse(parser.get(), text.data(), static_cast<int>(text.size()), XML_TRUE)
            == XML_STATUS_ERROR) {
            throw Error(Errc::invalid_input,
                        std::string("malformed OSM XML at line ")
                            + std::to_string(XML_GetCurrentLineNumber(parser.get())) + ": "
                            + XML_ErrorString(XML_GetErrorCode(parser.get())));
        }
        if (!error_.empty())
            throw Error(Errc::invalid_input, error_);
        return std::move(doc_);
    }

private:
    enum class Ctx { none, node, way };

    static const char* attr(const XML_Char** atts, std::string_view key)
    {
        for (int i = 0; atts[i]; i += 2)
            if (key == atts[i])
                return atts[i + 1];
        return nullptr;
    }

    static double to_double(const char* s, const char* what)
    {
        if (!s)
            throw Error(Errc::invalid_input, std::string("OSM node missing ") + what);
        double v = 0.0;
        std::string_view sv(s);
        auto [p, ec] = std::from_chars(sv.data(), sv.data() + sv.size(), v);
        if (ec != std::errc() || p != sv.data() + sv.size())
            throw Error(Errc::invalid_input, std::string("OSM node has non-numeric ") + what);
        return v;
    }

    static void on_start(void* self_ptr, const XML_Char* name, const XML_Char** atts)
    {
        auto* self = static_cast<OsmReader*>(self_ptr);
        if (!self->error_.empty())
            return;
        try {
            self->start(name, atts);
        } catch (const Error& e) {
            self->error_ = e.what();
        }
    }

    static void on_end(void* self_ptr, const XML_Char* name)
    {
        auto* self = static_cast<OsmReader*>(self_ptr);
        std::string_view n(name);
        if (n == "node" && self->ctx_ == Ctx::node) {
            self->ctx_ = Ctx::none;
        } else if (n == "way" && self->ctx_ == Ctx::way) {
            self->doc_.ways.push_back(std::move(self->way_));
            self->way_ = {};
            self->ctx_ = Ctx::none;
        }
    }

    void start(std::string_view name, const XML_Char** atts)
    {
        if (name == "node") {
            const char* id = attr(atts, "id");
            if (!id)
                throw Error(Errc::invalid_input, "OSM node without id");
            OsmNodeRecord rec;
            rec.lat = to_double(attr(atts, "lat"), "lat");
            rec.lon = to_double(attr(atts, "lon"), "lon");
            node_id_ = id;
            doc_.nodes[node_id_] = std::move(rec);
            ctx_ = Ctx::node;
        } else if (name == "way") {
            const char* id = attr(atts, "id");
            if (!id)
                throw Error(Errc::invalid_input, "OSM way without id");
            way_ = {};
            way_.id = id;
            ctx_ = Ctx::way;
        } else if (name == "nd" && ctx_ == Ctx::way) {
            const char* ref = attr(atts, "ref");
            if (!ref)
                throw Error(Errc::invalid_input, "way " + way_.id + " has <nd> without ref");
            way_.refs.emplace_back(ref);
        } else if (name == "tag") {
            const char* k = attr(atts, "k");
            const char* v = attr(atts, "v");
            if (!k || !v)
                return;
            if (ctx_ == Ctx::node)
                doc_.nodes[node_id_].tags[k] = v;
            else if (ctx_ == Ctx::way)
                way_.tags[k] = v;
        }
    }

    OsmDocument doc_;
    OsmWayRecord way_;
    std::string node_id_;
    Ctx ctx_ = Ctx::none;
    std::string error_;
};

inline std::string tag_or(const std::map<std::string, std::string>& tags, const std::string& key,
                          const std::string& fallback = {})
{
    auto it = tags.find(key);
    return it == tags.end() ? fallback : it->second;
}

// Projected extent of the box: corners plus edge samples, since parallels are
// curved under transverse Mercator.
inline LocalExtent projected_extent(const GeoBBox& box, const LocalFrame& frame)
{
    LocalExtent e{1e300, 1e300, -1e300, -1e300};
    constexpr int steps = 16;
    for (int i = 0; i <= steps; ++i) {
        const double t = static_cast<double>(i) / steps;
        const double lon = box.min_lon + t * (box.max_lon - box.min_lon);
        const double lat = box.min_lat + t * (box.max_lat - box.min_lat);
        const GeoPointWgs pts[] = {{box.min_lat, lon}, {box.max_lat, lon},
                                   {lat, box.min_lon}, {lat, std::min(box.max_lon, 179.9999999)}};
        for (const auto& g : pts) {
            const Point2 p = wgs84_to_local(g, frame);
            e.min_x = std::min(e.min_x, p.x);
            e.min_y = std::min(e.min_y, p.y);
            e.max_x = std::max(e.max_x, p.x);
            e.max_y = std::max(e.max_y, p.y);
        }
    }
    return e;
}

} // namespace detail

/// Parses an OSM XML extract. Ways are clipped to the box at their last
/// in-bounds vertex and split wherever another retained way shares a node.
inline RoadNetwork2D parse_osm(std::string_view xml, const GeoBBox& box,
                               const GradeLimits& limits = {})
{
    detail::OsmDocument doc = detail::OsmReader{}.read(xml);

    RoadNetwork2D net;
    net.frame = frame_for(box);
    net.bbox = detail::projected_extent(box, net.frame);

    struct Piece {
        const detail::OsmWayRecord* way;
        std::vector<std::string> refs;
        RoadClass cls;
        bool oneway;
        int lanes;
    };
    std::vector<Piece> pieces;

    for (const auto& way : doc.ways) {
        const std::string highway = detail::tag_or(way.tags, "highway");
        if (highway.empty() || is_excluded_highway(highway))
            continue;
        for (const auto& ref : way.refs)
            if (!doc.nodes.count(ref))
                throw Error(Errc::invalid_input,
                            "way " + way.id + " references missing node " + ref);

        const RoadClass cls = classify(highway, limits, &net.warnings);

        const std::string ow = detail::tag_or(way.tags, "oneway");
        const bool reversed = ow == "-1" || ow == "reverse";
        bool oneway = ow == "yes" || ow == "true" || ow == "1" || reversed;
        if (ow.empty() && (highway == "motorway" || highway == "motorway_link"
                           || detail::tag_or(way.tags, "junction") == "roundabout"))
            oneway = true;

        int lanes = default_lanes(cls.kind);
        if (const std::string lt = detail::tag_or(way.tags, "lanes"); !lt.empty()) {
            int total = 0;
            auto [p, ec] = std::from_chars(lt.data(), lt.data() + lt.size(), total);
            if (ec == std::errc() && p == lt.data() + lt.size() && total > 0)
                lanes = oneway ? total : std::max(1, total / 2);
            else
                net.warnings.push_back("way " + way.id + ": unparsable lanes tag '" + lt + "'");
        }

        std::vector<std::string> refs;
        for (const auto& r : way.refs)
            if (refs.empty() || refs.back() != r)
                refs.push_back(r);
        if (reversed)
            std::reverse(refs.begin(), refs.end());

        // Runs of consecutive in-box vertices.
        std::vector<std::string> run;
        auto flush = [&] {
            if (run.size() >= 2)
                pieces.push_back({&way, run, cls, oneway, lanes});
            run.clear();
        };
        for (const auto& r : refs) {
            const auto& n = doc.nodes.at(r);
            if (box.contains({n.lat, n.lon}))
                run.push_back(r);
            else
                flush();
        }
        flush();
    }

    // A node is a split point if two pieces use it or one piece visits it twice.
    std::unordered_map<std::string, int> usage;
    for (const auto& piece : pieces) {
        for (std::size_t i = 0; i < piece.refs.size(); ++i) {
            const bool closing = i + 1 == piece.refs.size() && piece.refs.front() == piece.refs.back();
            if (!closing)
                ++usage[piece.refs[i]];
        }
    }

    std::unordered_map<std::string, Point2> local;
    auto position = [&](const std::string& ref) {
        auto it = local.find(ref);
        if (it != local.end())
            return it->second;
        const auto& n = doc.nodes.at(ref);
        const Point2 p = wgs84_to_local(GeoPointWgs::make(n.lat, n.lon), net.frame);
        local.emplace(ref, p);
        return p;
    };

    std::map<std::string, int> part_counter;
    for (const auto& piece : pieces) {
        std::vector<std::string> current{piece.refs.front()};
        auto emit = [&](std::vector<std::string>& refs) {
            std::vector<Point2> poly;
            for (const auto& r : refs) {
                const Point2 p = position(r);
                if (!poly.empty() && distance(poly.back(), p) < 1e-9)
                    continue;
                poly.push_back(p);
            }
            if (poly.size() < 2)
                return;
            const bool loop = refs.front() == refs.back();
            if (loop && poly.size() < 3)
                return;
            RoadSegment2D seg;
            const int part = part_counter[piece.way->id]++;
            seg.id = piece.way->id + "#" + std::to_string(part);
            seg.from_node = refs.front();
            seg.to_node = refs.back();
            seg.polyline = std::move(poly);
            seg.cls = piece.cls;
            seg.lanes = piece.lanes;
            seg.oneway = piece.oneway;
            seg.highway_tag = detail::tag_or(piece.way->tags, "highway");
            seg.name = detail::tag_or(piece.way->tags, "name");
            net.segments.push_back(std::move(seg));
        };
        for (std::size_t i = 1; i < piece.refs.size(); ++i) {
            current.push_back(piece.refs[i]);
            const bool last = i + 1 == piece.refs.size();
            if (!last && usage[piece.refs[i]] >= 2) {
                emit(current);
                current = {piece.refs[i]};
            }
        }
        emit(current);
    }

    if (net.segments.empty())
        throw Error(Errc::invalid_input, "no drivable ways inside the bounding box");

    // Nodes in order of first appearance; intersection iff shared by two
    // distinct segments or tagged as a junction.
    std::map<std::string, std::set<std::size_t>> touching;
    std::vector<std::string> order;
    for (std::size_t i = 0; i < net.segments.size(); ++i) {
        for (const auto* id : {&net.segments[i].from_node, &net.segments[i].to_node}) {
            auto& s = touching[*id];
            if (s.empty())
                order.push_back(*id);
            s.insert(i);
        }
    }
    for (const auto& id : order) {
        const auto& rec = doc.nodes.at(id);
        RoadNode node;
        node.id = id;
        node.pos = position(id);
        node.is_signal = detail::tag_or(rec.tags, "highway") == "traffic_signals"
            || rec.tags.count("traffic_signals") > 0;
        node.is_intersection = touching[id].size() >= 2 || rec.tags.count("junction") > 0;
        net.nodes.push_back(std::move(node));
    }
    return net;
}

inline RoadNetwork2D load_osm(const std::string& path, const GeoBBox& box,
                              const GradeLimits& limits = {})
{
    std::ifstream f(path, std::ios::binary);
    if (!f)
        throw Error(Errc::io, "cannot open OSM file " + path);
    std::ostringstream ss;
    ss << f.rdbuf();
    return parse_osm(ss.str(), box, limits);
}

} // namespace terra3d
