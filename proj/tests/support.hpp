#pragma once

// Fixtures shared by the unit tests.

#include <filesystem>
#include <random>
#include <string>

#include "terra3d/builder.hpp"
#include "terra3d/synthetic.hpp"

namespace t3test {

using namespace terra3d;

/// Frame anchored on an integer UTM position so DEM nodes land on integer
/// local coordinates.
inline LocalFrame test_frame(double easting = 500000.0, double northing = 4180000.0)
{
    return LocalFrame::at(UtmPoint{easting, northing, 10, Hemisphere::north});
}

/// DEM in absolute UTM coordinates covering local [x0, x1] x [y0, y1] of `frame`.
template <class F>
DemGrid local_dem(const LocalFrame& frame, double x0, double y0, double x1, double y1, double spacing,
                  F&& f_local)
{
    const double ox = frame.origin.easting + x0;
    const double oy = frame.origin.northing + y0;
    const int ncols = static_cast<int>(std::llround((x1 - x0) / spacing)) + 1;
    const int nrows = static_cast<int>(std::llround((y1 - y0) / spacing)) + 1;
    return synthetic::make_dem(ox, oy, spacing, ncols, nrows, [&](double x, double y) {
        return f_local(x - frame.origin.easting, y - frame.origin.northing);
    });
}

/// Straight 200 m residential road climbing at exactly 8 %.
struct Ramp {
    LocalFrame frame = test_frame();
    DemGrid dem = local_dem(frame, -10, -10, 220, 20, 1.0, [](double x, double) { return 0.08 * x; });
    RoadNetwork2D net2d = synthetic::straight_road(frame, {0.0, 5.0}, 200.0);
    RoadNetwork3D net = build_network(net2d, dem);
};

/// Flat terrain at z0 under a Manhattan grid.
inline RoadNetwork3D flat_grid(int nx, int ny, double block, double z0 = 12.5)
{
    const LocalFrame frame = test_frame();
    synthetic::GridLayout g{nx, ny, block, {20.0, 20.0}, RoadKind::residential};
    const auto net2d = synthetic::manhattan_network(frame, g);
    const double w = 40.0 + (nx - 1) * block, h = 40.0 + (ny - 1) * block;
    const auto dem = local_dem(frame, 0, 0, w, h, 5.0, [&](double, double) { return z0; });
    return build_network(net2d, dem);
}

inline std::filesystem::path scratch_dir(const std::string& name)
{
    const auto p = std::filesystem::temp_directory_path() / ("terra3d_test_" + name);
    std::filesystem::remove_all(p);
    std::filesystem::create_directories(p);
    return p;
}

} // namespace t3test
