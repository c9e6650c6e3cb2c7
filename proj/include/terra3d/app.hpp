#pragma once

// Pipeline commands shared by the command-line tool and the acceptance suite.
// Each command reads and writes artifacts in an output directory:
//   network.json, report.json, network.{geojson,xodr,net.xml}, manifest.json,
//   trace.jsonl, cosim_summary.json

#include <filesystem>
#include <string>
#include <vector>

#include "terra3d/builder.hpp"
#include "terra3d/config.hpp"
#include "terra3d/cosim/harness.hpp"
#include "terra3d/dem.hpp"
#include "terra3d/export.hpp"
#include "terra3d/network_io.hpp"
#include "terra3d/osm.hpp"
#include "terra3d/validation.hpp"

namespace terra3d::app {

namespace fs = std::filesystem;

inline constexpr const char* kArtifactName = "network.json";
inline constexpr const char* kReportName = "report.json";
inline constexpr const char* kTraceName = "trace.jsonl";
inline constexpr const char* kCosimSummaryName = "cosim_summary.json";

/// Process exit codes.
enum ExitCode : int { ok = 0, internal = 1, invalid = 2, validation_failed = 3 };

inline int exit_code_for(const Error& e)
{
    return e.code() == Errc::protocol_violation ? ExitCode::internal : ExitCode::invalid;
}

struct BuildResult {
    RoadNetwork3D network;
    fs::path artifact;
    std::string checksum;
    std::vector<std::string> warnings;
};

inline BuildResult cmd_build(const ProjectConfig& config, const fs::path& out_dir)
{
    const std::string osm_bytes = read_file(config.osm_path);
    const std::string dem_bytes = read_file(config.dem_path);
    RoadNetwork2D net2d;
    DemGrid grid;
    try {
        net2d = parse_osm(osm_bytes, config.bbox, config.limits);
    } catch (const Error& e) {
        throw Error(e.code(), "road_ingest: " + config.osm_path + ": " + e.what());
    }
    try {
        grid = parse_ascii_grid(dem_bytes);
    } catch (const Error& e) {
        throw Error(e.code(), "dem: " + config.dem_path + ": " + e.what());
    }

    BuildResult r;
    try {
        r.network = build_network(net2d, grid, {config.sampling_mode, config.max_smooth_iters, config.limits});
    } catch (const Error& e) {
        throw Error(e.code(), std::string("builder: ") + e.what());
    }
    r.network.provenance.input_checksums["osm"] = fnv1a64_hex(osm_bytes);
    r.network.provenance.input_checksums["dem"] = fnv1a64_hex(dem_bytes);
    r.warnings = net2d.warnings;

    fs::create_directories(out_dir);
    const std::string text = serialize_network(r.network);
    r.artifact = out_dir / kArtifactName;
    write_file(r.artifact.string(), text);
    r.checksum = fnv1a64_hex(text);
    return r;
}

struct ValidateResult {
    ValidationReport report;
    fs::path report_path;
    std::vector<std::string> failures; // empty means the network passed
};

inline ValidateResult cmd_validate(const fs::path& artifact, const std::string& truth_dem,
                                   const std::string& reference_name, double min_compliance_pct,
                                   const std::string& timestamp, const fs::path& out_dir)
{
    const RoadNetwork3D net = load_network(artifact.string());
    DemGrid truth;
    try {
        truth = load_ascii_grid(truth_dem);
    } catch (const Error& e) {
        throw Error(e.code(), "validation: " + truth_dem + ": " + e.what());
    }
    ValidateResult r;
    try {
        r.report = validate_network(net, truth, reference_name, timestamp);
    } catch (const Error& e) {
        throw Error(e.code(), std::string("validation: ") + e.what());
    }
    if (!r.report.gaps_pass) {
        std::size_t failing = 0;
        for (const auto& g : r.report.intersection_gaps)
            failing += g.pass ? 0 : 1;
        r.failures.push_back(std::to_string(failing) + " intersection gap(s) at or above "
                             + fixed(kIntersectionGapThreshold, 1) + " m");
    }
    if (r.report.compliance_segments_pct < min_compliance_pct)
        r.failures.push_back("segment gradient compliance " + fixed(r.report.compliance_segments_pct, 2)
                             + "% is below the floor of " + fixed(min_compliance_pct, 2) + "%");
    fs::create_directories(out_dir);
    r.report_path = out_dir / kReportName;
    write_file(r.report_path.string(), serialize_report(r.report));
    return r;
}

inline ExportManifest cmd_export(const fs::path& artifact, const std::vector<ExportFormat>& formats,
                                 const fs::path& out_dir)
{
    const RoadNetwork3D net = load_network(artifact.string());
    try {
        return export_network(net, formats, out_dir);
    } catch (const Error& e) {
        throw Error(e.code(), std::string("exporters: ") + e.what());
    }
}

/// Routes used when none are supplied: one vehicle on each of the first
/// `count` drivable segments, forwards, at its class speed.
inline std::vector<cosim::Route> default_routes(const RoadNetwork3D& net, std::size_t count = 10)
{
    std::vector<cosim::Route> out;
    for (const auto& s : net.segments) {
        if (out.size() == count)
            break;
        out.push_back({"veh" + std::to_string(out.size()), {s.id}, class_speed(s.cls.kind)});
    }
    return out;
}

enum class Transport { direct, tcp };

inline Transport parse_transport(std::string_view s)
{
    if (s == "direct")
        return Transport::direct;
    if (s == "tcp")
        return Transport::tcp;
    throw Error(Errc::invalid_input, "unknown transport '" + std::string(s) + "' (direct, tcp)");
}

struct CosimResult {
    cosim::ScenarioResult scenario;
    fs::path trace_path;
    fs::path summary_path;
};

inline CosimResult cmd_cosim(const fs::path& artifact, const std::string& routes_path,
                             const cosim::SyncConfig& sync, Transport transport, const fs::path& out_dir)
{
    const RoadNetwork3D net = load_network(artifact.string());
    const std::vector<cosim::Route> routes =
        routes_path.empty() ? default_routes(net) : cosim::parse_routes(read_file(routes_path));
    CosimResult r;
    try {
        r.scenario = transport == Transport::tcp ? cosim::run_scenario_tcp(net, routes, sync)
                                                 : cosim::run_scenario(net, routes, sync);
    } catch (const Error& e) {
        throw Error(e.code(), std::string("cosim: ") + e.what());
    }
    fs::create_directories(out_dir);
    r.trace_path = out_dir / kTraceName;
    r.summary_path = out_dir / kCosimSummaryName;
    write_file(r.trace_path.string(), r.scenario.trace);
    write_file(r.summary_path.string(), r.scenario.summary.to_json().dump(2) + "\n");
    return r;
}

/// The truth grid and report label used when validating against a config.
inline std::pair<std::string, std::string> truth_for(const ProjectConfig& config)
{
    if (config.truth_dem.empty())
        return {config.dem_path, "input_dem"};
    return {config.truth_dem, "truth_dem:" + fs::path(config.truth_dem).filename().string()};
}

} // namespace terra3d::app
