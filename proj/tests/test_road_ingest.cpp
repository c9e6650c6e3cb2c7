#include <gtest/gtest.h>

#include <map>
#include <set>

#include "terra3d/osm.hpp"
#include "terra3d/synthetic.hpp"

using namespace terra3d;

namespace {

void expect_error(Errc code, auto&& fn)
{
    try {
        fn();
        ADD_FAILURE() << "expected " << to_string(code);
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), code) << e.what();
    }
}

const GeoBBox kBox = GeoBBox::make(-122.43, 37.76, -122.41, 37.78);

struct OsmBuilder {
    std::string body;

    OsmBuilder& node(int id, double lat, double lon, std::map<std::string, std::string> tags = {})
    {
        body += "<node id=\"" + std::to_string(id) + "\" lat=\"" + fixed(lat, 7) + "\" lon=\"" + fixed(lon, 7)
            + "\"";
        if (tags.empty()) {
            body += "/>\n";
            return *this;
        }
        body += ">";
        for (const auto& [k, v] : tags)
            body += "<tag k=\"" + k + "\" v=\"" + v + "\"/>";
        body += "</node>\n";
        return *this;
    }

    OsmBuilder& way(int id, std::vector<int> refs, std::map<std::string, std::string> tags)
    {
        body += "<way id=\"" + std::to_string(id) + "\">";
        for (int r : refs)
            body += "<nd ref=\"" + std::to_string(r) + "\"/>";
        for (const auto& [k, v] : tags)
            body += "<tag k=\"" + k + "\" v=\"" + v + "\"/>";
        body += "</way>\n";
        return *this;
    }

    std::string xml() const { return "<?xml version=\"1.0\"?>\n<osm version=\"0.6\">\n" + body + "</osm>\n"; }
};

const RoadSegment2D* find(const RoadNetwork2D& net, const std::string& id)
{
    for (const auto& s : net.segments)
        if (s.id == id)
            return &s;
    return nullptr;
}

} // namespace

TEST(Classify, ClassTable)
{
    EXPECT_EQ(classify("motorway").kind, RoadKind::highway);
    EXPECT_EQ(classify("motorway").max_gradient, 0.08);
    EXPECT_EQ(classify("trunk_link").kind, RoadKind::highway);
    EXPECT_EQ(classify("secondary").kind, RoadKind::arterial);
    EXPECT_EQ(classify("secondary").max_gradient, 0.12);
    EXPECT_EQ(classify("tertiary_link").kind, RoadKind::arterial);
    EXPECT_EQ(classify("living_street").kind, RoadKind::residential);
    EXPECT_EQ(classify("living_street").max_gradient, 0.15);
    EXPECT_EQ(classify("service").kind, RoadKind::residential);
}

TEST(Classify, UnknownTagWarns)
{
    std::vector<std::string> warnings;
    const RoadClass c = classify("busway", {}, &warnings);
    EXPECT_EQ(c.kind, RoadKind::residential);
    ASSERT_EQ(warnings.size(), 1u);
    EXPECT_NE(warnings[0].find("busway"), std::string::npos);
}

TEST(ParseOsm, SingleResidentialWay)
{
    OsmBuilder b;
    b.node(1, 37.765, -122.425).node(2, 37.765, -122.420).way(10, {1, 2}, {{"highway", "residential"}});
    const RoadNetwork2D net = parse_osm(b.xml(), kBox);
    ASSERT_EQ(net.segments.size(), 1u);
    const auto& s = net.segments[0];
    EXPECT_EQ(s.cls.kind, RoadKind::residential);
    EXPECT_EQ(s.cls.max_gradient, 0.15);
    EXPECT_EQ(s.lanes, 1);
    EXPECT_FALSE(s.oneway);
    ASSERT_EQ(net.nodes.size(), 2u);
    EXPECT_FALSE(net.nodes[0].is_intersection);
    // Node positions come from the WGS84 -> UTM -> local chain.
    const Point2 expect = wgs84_to_local(GeoPointWgs::make(37.765, -122.425), net.frame);
    EXPECT_DOUBLE_EQ(s.polyline.front().x, expect.x);
    EXPECT_DOUBLE_EQ(s.polyline.front().y, expect.y);
    EXPECT_NEAR(s.length(), 441.0, 2.0);
}

TEST(ParseOsm, SplitsAtSharedNode)
{
    OsmBuilder b;
    b.node(1, 37.765, -122.425).node(2, 37.765, -122.420).node(3, 37.765, -122.415);
    b.node(4, 37.762, -122.420).node(5, 37.768, -122.420);
    b.way(10, {1, 2, 3}, {{"highway", "residential"}});
    b.way(20, {4, 2, 5}, {{"highway", "secondary"}});
    const RoadNetwork2D net = parse_osm(b.xml(), kBox);
    ASSERT_EQ(net.segments.size(), 4u);
    ASSERT_NE(find(net, "10#0"), nullptr);
    ASSERT_NE(find(net, "10#1"), nullptr);
    ASSERT_NE(find(net, "20#0"), nullptr);
    ASSERT_NE(find(net, "20#1"), nullptr);
    EXPECT_EQ(find(net, "10#0")->to_node, "2");
    EXPECT_EQ(find(net, "20#1")->from_node, "2");
    const RoadNode* shared = net.find_node("2");
    ASSERT_NE(shared, nullptr);
    EXPECT_TRUE(shared->is_intersection);
    EXPECT_FALSE(net.find_node("1")->is_intersection);
    EXPECT_EQ(find(net, "20#0")->cls.kind, RoadKind::arterial);
    EXPECT_EQ(find(net, "20#0")->lanes, 2);
}

TEST(ParseOsm, ExcludesNonDrivable)
{
    OsmBuilder b;
    b.node(1, 37.765, -122.425).node(2, 37.765, -122.420).node(3, 37.766, -122.420);
    b.way(10, {1, 2}, {{"highway", "residential"}});
    b.way(11, {2, 3}, {{"highway", "footway"}});
    b.way(12, {1, 3}, {{"highway", "cycleway"}});
    b.way(13, {1, 3}, {{"building", "yes"}});
    const RoadNetwork2D net = parse_osm(b.xml(), kBox);
    ASSERT_EQ(net.segments.size(), 1u);
    EXPECT_EQ(net.segments[0].id, "10#0");
    EXPECT_EQ(net.nodes.size(), 2u);
}

TEST(ParseOsm, Errors)
{
    expect_error(Errc::invalid_input, [] { parse_osm("<osm><node id=\"1\"", kBox); });
    OsmBuilder missing;
    missing.node(1, 37.765, -122.425).way(10, {1, 99}, {{"highway", "residential"}});
    expect_error(Errc::invalid_input, [&] { parse_osm(missing.xml(), kBox); });
    OsmBuilder empty;
    empty.node(1, 37.765, -122.425).node(2, 37.765, -122.420).way(10, {1, 2}, {{"highway", "footway"}});
    expect_error(Errc::invalid_input, [&] { parse_osm(empty.xml(), kBox); });
}

TEST(ParseOsm, LanesOnewayAndSignals)
{
    OsmBuilder b;
    b.node(1, 37.765, -122.425).node(2, 37.765, -122.420, {{"highway", "traffic_signals"}});
    b.node(3, 37.770, -122.425).node(4, 37.770, -122.420);
    b.way(10, {1, 2}, {{"highway", "primary"}, {"lanes", "4"}});
    b.way(11, {3, 4}, {{"highway", "primary"}, {"lanes", "3"}, {"oneway", "yes"}});
    const RoadNetwork2D net = parse_osm(b.xml(), kBox);
    const auto* two_way = find(net, "10#0");
    const auto* one_way = find(net, "11#0");
    ASSERT_TRUE(two_way && one_way);
    EXPECT_EQ(two_way->lanes, 2); // per direction
    EXPECT_FALSE(two_way->oneway);
    EXPECT_EQ(one_way->lanes, 3);
    EXPECT_TRUE(one_way->oneway);
    EXPECT_TRUE(net.find_node("2")->is_signal);
}

TEST(ParseOsm, ReversedOnewayIsFlipped)
{
    OsmBuilder b;
    b.node(1, 37.765, -122.425).node(2, 37.765, -122.420);
    b.way(10, {1, 2}, {{"highway", "residential"}, {"oneway", "-1"}});
    const RoadNetwork2D net = parse_osm(b.xml(), kBox);
    ASSERT_EQ(net.segments.size(), 1u);
    EXPECT_TRUE(net.segments[0].oneway);
    EXPECT_EQ(net.segments[0].from_node, "2");
    EXPECT_EQ(net.segments[0].to_node, "1");
}

TEST(ParseOsm, ClipsAtBoxBoundary)
{
    OsmBuilder b;
    b.node(1, 37.765, -122.425).node(2, 37.765, -122.415).node(3, 37.765, -122.405);
    b.way(10, {1, 2, 3}, {{"highway", "residential"}});
    const RoadNetwork2D net = parse_osm(b.xml(), kBox);
    ASSERT_EQ(net.segments.size(), 1u);
    EXPECT_EQ(net.segments[0].polyline.size(), 2u);
    EXPECT_EQ(net.segments[0].to_node, "2");
    for (const auto& p : net.segments[0].polyline)
        EXPECT_TRUE(net.bbox.contains(p, 1.0));
}

TEST(ParseOsm, SelfLoopNeedsThreePoints)
{
    OsmBuilder b;
    b.node(1, 37.765, -122.425).node(2, 37.765, -122.420).node(3, 37.768, -122.420);
    b.way(10, {1, 2, 3, 1}, {{"highway", "residential"}});
    b.way(11, {2, 2}, {{"highway", "residential"}});
    const RoadNetwork2D net = parse_osm(b.xml(), kBox);
    ASSERT_EQ(net.segments.size(), 1u);
    EXPECT_EQ(net.segments[0].from_node, net.segments[0].to_node);
    EXPECT_EQ(net.segments[0].polyline.size(), 4u);
}

TEST(ParseOsmProperties, SyntheticGridTopology)
{
    const auto fx = synthetic::manhattan_osm(10, Hemisphere::north, 551000.0, 4180000.0, 6, 5, 80.0);
    const RoadNetwork2D net = parse_osm(fx.xml, fx.bbox);
    EXPECT_EQ(net.segments.size(), std::size_t{5 * 5 + 6 * 4});
    EXPECT_EQ(net.nodes.size(), 30u);

    std::map<std::string, int> endpoint_use;
    std::set<std::string> ids;
    for (const auto& s : net.segments) {
        EXPECT_TRUE(ids.insert(s.id).second);
        ASSERT_GE(s.polyline.size(), 2u);
        ++endpoint_use[s.from_node];
        ++endpoint_use[s.to_node];
        const RoadNode* a = net.find_node(s.from_node);
        const RoadNode* b = net.find_node(s.to_node);
        ASSERT_TRUE(a && b);
        EXPECT_EQ(a->pos, s.polyline.front());
        EXPECT_EQ(b->pos, s.polyline.back());
        EXPECT_NEAR(s.length(), 80.0, 1e-3);
        for (std::size_t i = 1; i < s.polyline.size(); ++i)
            EXPECT_FALSE(s.polyline[i] == s.polyline[i - 1]);
        for (const auto& p : s.polyline)
            EXPECT_TRUE(net.bbox.contains(p, 1.0));
    }
    for (const auto& n : net.nodes)
        EXPECT_EQ(n.is_intersection, endpoint_use[n.id] >= 2) << n.id;

    // Deterministic for identical bytes.
    const RoadNetwork2D again = parse_osm(fx.xml, fx.bbox);
    ASSERT_EQ(again.segments.size(), net.segments.size());
    for (std::size_t i = 0; i < net.segments.size(); ++i) {
        EXPECT_EQ(again.segments[i].id, net.segments[i].id);
        EXPECT_EQ(again.segments[i].polyline, net.segments[i].polyline);
    }
}
