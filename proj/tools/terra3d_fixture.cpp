// Writes a self-contained synthetic project: Manhattan-grid OSM extract, DEM,
// routes and a config file that points at them.

#include <iostream>
#include <string>

#include "CLI11.hpp"

#include "terra3d/synthetic.hpp"

int main(int argc, char** argv)
{
    CLI::App cli{"terra3d_fixture: generate a synthetic Manhattan-grid project"};
    terra3d::synthetic::ProjectSpec spec;
    std::string dir = "fixture";
    cli.add_option("--dir", dir, "output directory");
    cli.add_option("--nx", spec.nx, "intersections along x")->check(CLI::Range(2, 1000));
    cli.add_option("--ny", spec.ny, "intersections along y")->check(CLI::Range(2, 1000));
    cli.add_option("--block", spec.block, "block length in meters")->check(CLI::PositiveNumber);
    cli.add_option("--spacing", spec.spacing, "DEM cell size in meters")->check(CLI::PositiveNumber);
    cli.add_option("--terrain", spec.terrain, "flat, plane or sinusoid")
        ->check(CLI::IsMember({"flat", "plane", "sinusoid"}));
    cli.add_option("--easting", spec.easting, "UTM easting of the southwest intersection");
    cli.add_option("--northing", spec.northing, "UTM northing of the southwest intersection");
    cli.add_option("--zone", spec.zone, "UTM zone (northern hemisphere)")->check(CLI::Range(1, 60));
    cli.add_option("--max-smooth-iters", spec.max_smooth_iters, "smoothing budget written to the config")
        ->check(CLI::NonNegativeNumber);
    cli.add_option("--steps", spec.max_steps, "co-simulation steps written to the config")
        ->check(CLI::NonNegativeNumber);
    CLI11_PARSE(cli, argc, argv);

    try {
        const auto config = terra3d::synthetic::write_project(dir, spec);
        std::cout << "wrote " << config.string() << "\n";
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
