#pragma once

// Synthetic terrain and road fixtures for tests, benchmarks and demos.

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

#include "terra3d/dem.hpp"
#include "terra3d/geo.hpp"
#include "terra3d/network.hpp"
#include "terra3d/network_io.hpp"
#include "terra3d/osm.hpp"
#include "terra3d/xml.hpp"

namespace terra3d::synthetic {

/// Grid whose node (col, row) holds f(x, y) at that node's absolute position.
template <class F>
DemGrid make_dem(double origin_x, double origin_y, double spacing, int ncols, int nrows, F&& f)
{
    std::vector<double> values;
    values.reserve(static_cast<std::size_t>(ncols) * static_cast<std::size_t>(nrows));
    for (int r = 0; r < nrows; ++r)
        for (int c = 0; c < ncols; ++c)
            values.push_back(f(origin_x + c * spacing, origin_y + r * spacing));
    return DemGrid(origin_x, origin_y, spacing, ncols, nrows, std::move(values));
}

/// z = z0 + gx * (x - origin_x) + gy * (y - origin_y).
inline DemGrid plane_dem(double origin_x, double origin_y, double spacing, int ncols, int nrows,
                         double gx, double gy, double z0 = 0.0)
{
    return make_dem(origin_x, origin_y, spacing, ncols, nrows, [&](double x, double y) {
        return z0 + gx * (x - origin_x) + gy * (y - origin_y);
    });
}

/// Rolling terrain: z = base + amplitude * sin(2 pi dx / wavelength) * cos(2 pi dy / wavelength).
inline DemGrid sinusoid_dem(double origin_x, double origin_y, double spacing, int ncols, int nrows,
                            double amplitude, double wavelength, double base = 50.0)
{
    const double k = 2.0 * std::numbers::pi / wavelength;
    return make_dem(origin_x, origin_y, spacing, ncols, nrows, [&](double x, double y) {
        return base + amplitude * std::sin(k * (x - origin_x)) * std::cos(k * (y - origin_y));
    });
}

struct GridLayout {
    int nx = 10;          // intersections along x
    int ny = 10;          // intersections along y
    double block = 100.0; // spacing between intersections, meters
    Point2 offset;        // local position of intersection (0, 0)
    RoadKind kind = RoadKind::residential;
};

inline std::string grid_node_id(int i, int j) { return "n" + std::to_string(i) + "_" + std::to_string(j); }

/// Manhattan grid as a 2D network in `frame`. Horizontal segments are
/// "h<i>_<j>" from (i, j) to (i+1, j); vertical ones "v<i>_<j>" to (i, j+1).
inline RoadNetwork2D manhattan_network(const LocalFrame& frame, const GridLayout& g,
                                       const GradeLimits& limits = {})
{
    RoadNetwork2D net;
    net.frame = frame;
    const auto pos = [&](int i, int j) {
        return Point2{g.offset.x + i * g.block, g.offset.y + j * g.block};
    };
    for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i) {
            const int degree = (i > 0) + (i + 1 < g.nx) + (j > 0) + (j + 1 < g.ny);
            net.nodes.push_back({grid_node_id(i, j), pos(i, j), degree >= 2, false});
        }
    const auto add = [&](const std::string& id, int i0, int j0, int i1, int j1) {
        RoadSegment2D s;
        s.id = id;
        s.from_node = grid_node_id(i0, j0);
        s.to_node = grid_node_id(i1, j1);
        s.polyline = {pos(i0, j0), pos(i1, j1)};
        s.cls = RoadClass::of(g.kind, limits);
        s.lanes = 1;
        s.highway_tag = to_string(g.kind);
        net.segments.push_back(std::move(s));
    };
    for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i + 1 < g.nx; ++i)
            add("h" + std::to_string(i) + "_" + std::to_string(j), i, j, i + 1, j);
    for (int i = 0; i < g.nx; ++i)
        for (int j = 0; j + 1 < g.ny; ++j)
            add("v" + std::to_string(i) + "_" + std::to_string(j), i, j, i, j + 1);
    net.bbox = {g.offset.x, g.offset.y, g.offset.x + (g.nx - 1) * g.block,
                g.offset.y + (g.ny - 1) * g.block};
    return net;
}

/// A single straight two-node road along +x from `start`.
inline RoadNetwork2D straight_road(const LocalFrame& frame, Point2 start, double length,
                                   RoadKind kind = RoadKind::residential, const GradeLimits& limits = {})
{
    RoadNetwork2D net;
    net.frame = frame;
    net.nodes.push_back({"a", start, false, false});
    net.nodes.push_back({"b", {start.x + length, start.y}, false, false});
    RoadSegment2D s;
    s.id = "road";
    s.from_node = "a";
    s.to_node = "b";
    s.polyline = {start, {start.x + length, start.y}};
    s.cls = RoadClass::of(kind, limits);
    s.lanes = 1;
    s.highway_tag = to_string(kind);
    net.segments.push_back(std::move(s));
    net.bbox = {start.x, start.y, start.x + length, start.y};
    return net;
}

/// OSM extract of a Manhattan grid whose southwest intersection sits at UTM
/// (sw_easting, sw_northing). One way per grid line, so intersections are the
/// shared nodes and the ingest splits each way into nx - 1 (or ny - 1) segments.
struct OsmFixture {
    std::string xml;
    GeoBBox bbox;
};

inline OsmFixture manhattan_osm(int zone, Hemisphere hemisphere, double sw_easting, double sw_northing,
                                int nx, int ny, double block, const std::string& highway = "residential",
                                double margin = 20.0)
{
    const auto wgs = [&](double e, double n) {
        return utm_to_wgs84(UtmPoint{e, n, zone, hemisphere});
    };
    std::string out = "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n<osm version=\"0.6\" generator=\"terra3d-synthetic\">\n";
    const auto node_ref = [&](int i, int j) { return std::to_string(1 + j * nx + i); };
    for (int j = 0; j < ny; ++j)
        for (int i = 0; i < nx; ++i) {
            const GeoPointWgs g = wgs(sw_easting + i * block, sw_northing + j * block);
            out += "  <node id=\"" + node_ref(i, j) + "\" lat=\"" + fixed(g.lat, 10) + "\" lon=\""
                + fixed(g.lon, 10) + "\"/>\n";
        }
    int way_id = 1;
    const auto way = [&](const std::vector<std::string>& refs, const std::string& name) {
        out += "  <way id=\"" + std::to_string(way_id++) + "\">\n";
        for (const auto& r : refs)
            out += "    <nd ref=\"" + r + "\"/>\n";
        out += "    <tag k=\"highway\" v=\"" + xml_escape(highway) + "\"/>\n";
        out += "    <tag k=\"name\" v=\"" + xml_escape(name) + "\"/>\n";
        out += "  </way>\n";
    };
    for (int j = 0; j < ny; ++j) {
        std::vector<std::string> refs;
        for (int i = 0; i < nx; ++i)
            refs.push_back(node_ref(i, j));
        way(refs, "Row " + std::to_string(j));
    }
    for (int i = 0; i < nx; ++i) {
        std::vector<std::string> refs;
        for (int j = 0; j < ny; ++j)
            refs.push_back(node_ref(i, j));
        way(refs, "Column " + std::to_string(i));
    }
    out += "</osm>\n";

    // The box is the lat/lon hull of the margin-expanded grid rectangle.
    const double e0 = sw_easting - margin, n0 = sw_northing - margin;
    const double e1 = sw_easting + (nx - 1) * block + margin;
    const double n1 = sw_northing + (ny - 1) * block + margin;
    const GeoPointWgs c[] = {wgs(e0, n0), wgs(e1, n0), wgs(e0, n1), wgs(e1, n1)};
    double min_lon = c[0].lon, max_lon = c[0].lon, min_lat = c[0].lat, max_lat = c[0].lat;
    for (const auto& p : c) {
        min_lon = std::min(min_lon, p.lon);
        max_lon = std::max(max_lon, p.lon);
        min_lat = std::min(min_lat, p.lat);
        max_lat = std::max(max_lat, p.lat);
    }
    return {out, GeoBBox::make(min_lon, min_lat, max_lon, max_lat)};
}

/// A complete on-disk project around a Manhattan grid.
struct ProjectSpec {
    int nx = 10;
    int ny = 10;
    double block = 100.0;
    double spacing = 5.0;          // DEM cell size
    std::string terrain = "sinusoid"; // flat, plane or sinusoid
    double easting = 551000.0;     // southwest intersection
    double northing = 4180000.0;
    int zone = 10;
    int max_smooth_iters = 5000;
    double min_compliance_pct = 100.0;
    std::int64_t max_steps = 1000;
};

inline DemGrid project_dem(const ProjectSpec& s)
{
    const double margin = 200.0;
    const double ox = std::floor((s.easting - margin) / s.spacing) * s.spacing;
    const double oy = std::floor((s.northing - margin) / s.spacing) * s.spacing;
    const int ncols = static_cast<int>(std::ceil(((s.nx - 1) * s.block + 2 * margin) / s.spacing)) + 1;
    const int nrows = static_cast<int>(std::ceil(((s.ny - 1) * s.block + 2 * margin) / s.spacing)) + 1;
    if (s.terrain == "flat")
        return plane_dem(ox, oy, s.spacing, ncols, nrows, 0.0, 0.0, 20.0);
    if (s.terrain == "plane")
        return plane_dem(ox, oy, s.spacing, ncols, nrows, 0.02, 0.01, 20.0);
    if (s.terrain == "sinusoid")
        return sinusoid_dem(ox, oy, s.spacing, ncols, nrows, 10.0, 200.0);
    throw std::invalid_argument("unknown terrain '" + s.terrain + "'");
}

/// Writes grid.osm, terrain.asc, routes.json and project.toml into `dir` and
/// returns the config path. Routes: "east" along the bottom row, "north" up
/// the left column.
inline std::filesystem::path write_project(const std::filesystem::path& dir, const ProjectSpec& s)
{
    std::filesystem::create_directories(dir);
    const auto osm = manhattan_osm(s.zone, Hemisphere::north, s.easting, s.northing, s.nx, s.ny, s.block);
    write_file((dir / "grid.osm").string(), osm.xml);
    write_file((dir / "terrain.asc").string(), write_ascii_grid(project_dem(s)));

    nlohmann::ordered_json routes = nlohmann::ordered_json::array();
    std::vector<std::string> row, col;
    for (int i = 0; i + 1 < s.nx; ++i)
        row.push_back("1#" + std::to_string(i));
    for (int j = 0; j + 1 < s.ny; ++j)
        col.push_back(std::to_string(s.ny + 1) + "#" + std::to_string(j));
    routes.push_back({{"vehicle_id", "east"}, {"segment_ids", row}, {"speed", 8.3}});
    routes.push_back({{"vehicle_id", "north"}, {"segment_ids", col}, {"speed", 8.3}});
    write_file((dir / "routes.json").string(), routes.dump(2) + "\n");

    const auto num = [](double v) { return fixed(v, 9); };
    std::string cfg;
    cfg += "# synthetic " + std::to_string(s.nx) + "x" + std::to_string(s.ny) + " grid, " + s.terrain
        + " terrain\n";
    cfg += "osm_path = \"grid.osm\"\n";
    cfg += "dem_path = \"terrain.asc\"\n";
    cfg += "routes_path = \"routes.json\"\n";
    cfg += "bbox = [" + num(osm.bbox.min_lon) + ", " + num(osm.bbox.min_lat) + ", " + num(osm.bbox.max_lon)
        + ", " + num(osm.bbox.max_lat) + "]\n";
    cfg += "output_dir = \"out\"\n";
    cfg += "sampling_mode = \"idw4\"\n";
    cfg += "max_smooth_iters = " + std::to_string(s.max_smooth_iters) + "\n";
    cfg += "report_timestamp = \"1970-01-01T00:00:00Z\"\n\n";
    cfg += "[limits]\nhighway = 0.08\narterial = 0.12\nresidential = 0.15\n\n";
    cfg += "[sync]\ndt = 0.05\nthreshold = 0.5\nmax_steps = " + std::to_string(s.max_steps) + "\nseed = 7\n\n";
    cfg += "[validate]\nmin_compliance_pct = " + fixed(s.min_compliance_pct, 1) + "\n";
    const auto path = dir / "project.toml";
    write_file(path.string(), cfg);
    return path;
}

} // namespace terra3d::synthetic
