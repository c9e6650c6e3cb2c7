// Acceptance suite: one PASS/FAIL line per criterion. The terra3d CLI binary
// is passed as the first argument (needed by the end-to-end criteria).

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <numbers>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <sys/wait.h>

#include "json.hpp"

#include "terra3d/app.hpp"
#include "terra3d/builder.hpp"
#include "terra3d/cosim/harness.hpp"
#include "terra3d/export.hpp"
#include "terra3d/synthetic.hpp"
#include "terra3d/validation.hpp"
#include "terra3d/xml.hpp"
#include "terra3d/xodr_check.hpp"

using namespace terra3d;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

class Stopwatch {
public:
    double seconds() const
    {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    }

private:
    std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

std::string num(double v, int digits = 6)
{
    std::ostringstream s;
    s.precision(digits);
    s << v;
    return s.str();
}

LocalFrame frame_at(double easting, double northing)
{
    return LocalFrame::at(UtmPoint{easting, northing, 10, Hemisphere::north});
}

/// DEM covering local [0, w] x [0, h] of `frame` at the given spacing.
template <class F>
DemGrid local_dem(const LocalFrame& frame, double w, double h, double spacing, F&& f)
{
    const int ncols = static_cast<int>(std::llround(w / spacing)) + 1;
    const int nrows = static_cast<int>(std::llround(h / spacing)) + 1;
    return synthetic::make_dem(frame.origin.easting, frame.origin.northing, spacing, ncols, nrows,
                               [&](double x, double y) { return f(x - frame.origin.easting, y - frame.origin.northing); });
}

/// Independent inverse-distance evaluation over the four enclosing nodes.
double idw_oracle(const DemGrid& g, double x, double y)
{
    const double fx = (x - g.origin_x()) / g.spacing(), fy = (y - g.origin_y()) / g.spacing();
    const int c = std::min(static_cast<int>(std::floor(fx)), g.ncols() - 2);
    const int r = std::min(static_cast<int>(std::floor(fy)), g.nrows() - 2);
    double num_sum = 0.0, den = 0.0;
    for (int dc = 0; dc <= 1; ++dc)
        for (int dr = 0; dr <= 1; ++dr) {
            const double d = std::hypot(x - g.node_x(c + dc), y - g.node_y(r + dr));
            const double z = g.at(c + dc, r + dr);
            if (d < 1e-9)
                return z;
            num_sum += z / d;
            den += 1.0 / d;
        }
    return num_sum / den;
}

std::vector<nlohmann::json> trace_lines(const std::string& trace)
{
    std::vector<nlohmann::json> out;
    std::istringstream in(trace);
    for (std::string line; std::getline(in, line);)
        out.push_back(nlohmann::json::parse(line));
    return out;
}

int run(const std::string& cmd)
{
    const int status = std::system((cmd + " >/dev/null 2>&1").c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

fs::path scratch(const std::string& name)
{
    const auto p = fs::temp_directory_path() / ("terra3d_acceptance_" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

cosim::SyncConfig steps(std::int64_t n)
{
    cosim::SyncConfig c;
    c.max_steps = n;
    return c;
}

RoadNetwork3D flat_grid(int n, double block)
{
    const LocalFrame frame = frame_at(500000.0, 4180000.0);
    const synthetic::GridLayout g{n, n, block, {20.0, 20.0}, RoadKind::residential};
    const double w = 40.0 + (n - 1) * block;
    return build_network(synthetic::manhattan_network(frame, g),
                         local_dem(frame, w, w, 5.0, [](double, double) { return 15.0; }));
}

// --- criteria --------------------------------------------------------------

Outcome interpolation_fidelity()
{
    Stopwatch sw;
    const LocalFrame frame = frame_at(500000.0, 4180000.0);
    const auto plane = [](double x, double y) { return 0.02 * x + 0.01 * y; };
    const DemGrid dem = local_dem(frame, 199.0, 199.0, 1.0, plane);
    // Off-lattice grid so samples land inside cells, not on nodes.
    const synthetic::GridLayout g{4, 4, 50.3, {20.37, 20.61}, RoadKind::residential};
    const RoadNetwork3D net = build_network(synthetic::manhattan_network(frame, g), dem);

    PairedSamples pairs;
    double oracle_gap = 0.0;
    for (const auto& s : net.segments)
        for (const auto& p : s.points) {
            pairs.generated.push_back(p.z);
            pairs.actual.push_back(plane(p.x, p.y));
            const double ux = p.x + frame.origin.easting, uy = p.y + frame.origin.northing;
            oracle_gap = std::max(oracle_gap, std::abs(sample(dem, ux, uy) - idw_oracle(dem, ux, uy)));
        }
    const ErrorStats e = elevation_error_stats(pairs);
    const double secs = sw.seconds();
    const bool pass = e.rmse <= 0.05 && e.mae <= e.rmse && e.rmse <= e.max_error && oracle_gap < 1e-12
        && secs < 10.0;
    return {pass, "RMSE " + num(e.rmse) + " m, MAE " + num(e.mae) + ", max " + num(e.max_error) + " over "
                      + std::to_string(pairs.generated.size()) + " samples; oracle gap " + num(oracle_gap)
                      + "; " + num(secs, 3) + " s"};
}

Outcome exact_nodes()
{
    std::mt19937 rng(2024);
    std::uniform_real_distribution<double> z(-100.0, 900.0);
    std::vector<double> v(60 * 50);
    for (auto& x : v)
        x = z(rng);
    const DemGrid g(551234.5, 4180321.25, 2.5, 60, 50, v);
    std::size_t mismatches = 0, checked = 0;
    for (int r = 0; r < g.nrows(); ++r)
        for (int c = 0; c < g.ncols(); ++c)
            for (SamplingMode m : {SamplingMode::idw4, SamplingMode::bilinear}) {
                ++checked;
                mismatches += sample(g, g.node_x(c), g.node_y(r), m) == g.at(c, r) ? 0 : 1;
            }
    return {mismatches == 0, std::to_string(checked) + " node samples, " + std::to_string(mismatches) + " mismatches"};
}

Outcome gradient_compliance_check()
{
    const LocalFrame frame = frame_at(500000.0, 4180000.0);
    // Intersections on the sinusoid's zero lines, so every segment is a hump
    // with equal ends and can be smoothed.
    const synthetic::GridLayout g{5, 5, 100.0, {100.0, 100.0}, RoadKind::residential};
    const DemGrid rolling = local_dem(frame, 600.0, 600.0, 2.0, [](double x, double y) {
        const double k = 2.0 * std::numbers::pi / 200.0;
        return 50.0 + 10.0 * std::sin(k * x) * std::cos(k * y);
    });
    const RoadNetwork3D smooth =
        build_network(synthetic::manhattan_network(frame, g), rolling, {SamplingMode::idw4, 20000, {}});
    const ComplianceResult ok = gradient_compliance(smooth);
    double raw_worst = 0.0;
    for (const auto& s : smooth.segments)
        raw_worst = std::max(raw_worst, static_cast<double>(s.smoothing_iterations));

    // A 30 m cliff across a 40 m road.
    const DemGrid cliff = local_dem(frame, 100.0, 40.0, 1.0, [](double x, double) { return x < 50.0 ? 0.0 : 30.0; });
    const RoadNetwork3D bad = build_network(synthetic::straight_road(frame, {30.0, 20.0}, 40.0), cliff);
    const ComplianceResult c = gradient_compliance(bad);

    const bool pass = ok.segment_pct() == 100.0 && ok.subsegment_pct() == 100.0 && bad.segments[0].flagged
        && c.segment_pct() < 100.0;
    return {pass, "rolling: " + num(ok.segment_pct()) + "% segments, " + num(ok.subsegment_pct())
                      + "% sub-segments (max " + num(raw_worst) + " iterations); cliff flagged="
                      + (bad.segments[0].flagged ? "yes" : "no") + ", " + num(c.segment_pct()) + "% segments"};
}

Outcome intersection_continuity()
{
    const LocalFrame frame = frame_at(500000.0, 4180000.0);
    const synthetic::GridLayout g{10, 10, 100.0, {37.0, 53.0}, RoadKind::residential};
    const DemGrid dem = local_dem(frame, 1000.0, 1000.0, 5.0, [](double x, double y) {
        return 30.0 + 4.0 * std::sin(x / 70.0) * std::cos(y / 90.0) + 0.01 * x;
    });
    const auto net2d = synthetic::manhattan_network(frame, g);
    const TerrainSampler terrain{&dem, SamplingMode::idw4, frame.origin.easting, frame.origin.northing};
    RoadNetwork3D net = enforce_gradients(resample(stack(net2d, terrain), terrain));
    // Disturb every endpoint so reconciliation has real work to do.
    std::mt19937 rng(77);
    std::uniform_real_distribution<double> jitter(-0.3, 0.3);
    for (auto& s : net.segments) {
        s.profile.z.front() += jitter(rng);
        s.profile.z.back() += jitter(rng);
        s.sync_points_z();
    }
    const GapCheck before = intersection_gap_check(net);
    const GapCheck after = intersection_gap_check(reconcile_intersections(net));
    double worst = 0.0;
    for (const auto& n : after.nodes)
        worst = std::max(worst, n.gap);
    const bool pass = after.nodes.size() == 100 && worst == 0.0 && after.pass && !before.pass;
    return {pass, std::to_string(after.nodes.size()) + " intersections, max gap " + num(worst)
                      + " m (before reconcile: " + (before.pass ? "pass" : "fail") + ")"};
}

Outcome lockstep_exactness()
{
    const RoadNetwork3D net = flat_grid(5, 100.0);
    const std::vector<cosim::Route> routes = {{"east", {"h0_0", "h1_0", "h2_0", "h3_0"}, 5.0},
                                              {"north", {"v1_0", "v1_1", "v1_2", "v1_3"}, 7.0}};
    const auto r = cosim::run_scenario(net, routes, steps(1000));
    std::size_t clocks = 0;
    for (const auto& j : trace_lines(r.trace))
        clocks += j["type"] == "clock" ? 1 : 0;
    const bool pass = r.summary.t_a == 50.0 && r.summary.t_b == 50.0 && clocks == 1000;
    return {pass, "t_a = " + num(r.summary.t_a, 17) + ", t_b = " + num(r.summary.t_b, 17) + ", "
                      + std::to_string(clocks) + " clock records"};
}

Outcome resync_semantics()
{
    const RoadNetwork3D net = flat_grid(5, 100.0);
    const std::vector<cosim::Route> routes = {{"car", {"h0_1", "h1_1", "h2_1", "h3_1"}, 6.0}};

    auto drift_cfg = steps(400);
    drift_cfg.drift_per_step = 0.001;
    const auto drift = cosim::run_scenario(net, routes, drift_cfg);
    // Oracle: linear accumulation n * 0.001.
    double oracle_gap = 0.0;
    for (const auto& rec : drift.steps)
        for (const auto& e : rec.events)
            oracle_gap = std::max(oracle_gap, std::abs(e.sync_error - 0.001 * static_cast<double>(rec.n)));

    auto fault_cfg = steps(200);
    fault_cfg.fault_at = 50;
    fault_cfg.fault_offset = 0.6;
    const auto fault = cosim::run_scenario(net, routes, fault_cfg);
    double residual = 0.0;
    for (const auto& j : trace_lines(fault.trace))
        if (j["type"] == "vehicle" && j["n"] == 50)
            residual = j["residual_error"].get<double>();

    const bool pass = drift.summary.resync_count == 0 && oracle_gap < 1e-9 && fault.summary.resync_count == 1
        && fault.summary.resync_events[0].n == 50 && residual == 0.0;
    return {pass, "drift: " + std::to_string(drift.summary.resync_count) + " resyncs, max error "
                      + num(drift.summary.max_sync_error) + " m (oracle gap " + num(oracle_gap) + "); fault: "
                      + std::to_string(fault.summary.resync_count) + " resync at n = "
                      + (fault.summary.resync_events.empty() ? std::string("-")
                                                             : std::to_string(fault.summary.resync_events[0].n))
                      + ", residual " + num(residual)};
}

Outcome elevation_tracking()
{
    const LocalFrame frame = frame_at(500000.0, 4180000.0);
    const DemGrid ramp_dem = local_dem(frame, 240.0, 30.0, 1.0, [](double x, double) { return 0.08 * x; });
    const RoadNetwork3D net = build_network(synthetic::straight_road(frame, {10.0, 15.0}, 200.0), ramp_dem);
    const auto r = cosim::run_scenario(net, {{"car", {"road"}, 3.7}}, steps(1000));
    double worst = 0.0;
    std::size_t compared = 0;
    for (std::size_t i = 1; i < r.steps.size(); ++i) {
        if (r.steps[i].a.empty() || r.steps[i - 1].a.empty())
            continue;
        const auto& p = r.steps[i - 1].a[0];
        const auto& q = r.steps[i].a[0];
        const double d = std::hypot(q.x - p.x, q.y - p.y);
        if (d == 0.0)
            continue;
        worst = std::max(worst, std::abs((q.z - p.z) / d - 0.08));
        ++compared;
    }
    return {compared > 0 && worst <= 1e-6,
            std::to_string(compared) + " steps, max |dz/dd - 0.08| = " + num(worst)};
}

struct EndToEnd {
    bool ran = false;
    int rc = -1;
    double seconds = 0.0;
    fs::path dir;
    fs::path out;
    fs::path config;
};

EndToEnd run_all(const std::string& cli)
{
    EndToEnd e;
    e.dir = scratch("grid10");
    synthetic::ProjectSpec spec; // 10x10, 100 m blocks, sinusoid terrain
    e.config = synthetic::write_project(e.dir, spec);
    e.out = e.dir / "out";
    if (cli.empty())
        return e;
    Stopwatch sw;
    e.rc = run(cli + " all --config " + e.config.string() + " --out " + e.out.string());
    e.seconds = sw.seconds();
    e.ran = true;
    return e;
}

Outcome throughput(const EndToEnd& e)
{
    if (!e.ran)
        return {false, "CLI path not given"};
    std::size_t segments = 0, nodes = 0;
    if (fs::is_regular_file(e.out / app::kArtifactName)) {
        const RoadNetwork3D net = load_network((e.out / app::kArtifactName).string());
        segments = net.segments.size();
        for (const auto& n : net.nodes)
            nodes += n.is_intersection ? 1 : 0;
    }
    const bool pass = e.rc == 0 && segments >= 180 && nodes == 100 && e.seconds < 60.0;
    return {pass, "exit " + std::to_string(e.rc) + ", " + std::to_string(nodes) + " intersections, "
                      + std::to_string(segments) + " segments in " + num(e.seconds, 3) + " s"};
}

Outcome format_integrity(const EndToEnd& e)
{
    if (!e.ran || e.rc != 0)
        return {false, "end-to-end run unavailable"};
    const RoadNetwork3D net = load_network((e.out / app::kArtifactName).string());

    // GeoJSON: exact point counts, lon/lat within 1e-9 degrees, z within 1e-3 m.
    const auto gj = nlohmann::json::parse(read_file((e.out / "network.geojson").string()));
    double deg = 0.0, meters = 0.0;
    bool counts = gj["features"].size() == net.segments.size() + net.nodes.size();
    for (std::size_t i = 0; counts && i < net.segments.size(); ++i) {
        const auto& coords = gj["features"][i]["geometry"]["coordinates"];
        const auto& pts = net.segments[i].points;
        if (coords.size() != pts.size()) {
            counts = false;
            break;
        }
        for (std::size_t k = 0; k < pts.size(); ++k) {
            const GeoPointWgs w = local_to_wgs84(pts[k].xy(), net.frame);
            deg = std::max({deg, std::abs(coords[k][0].get<double>() - w.lon),
                            std::abs(coords[k][1].get<double>() - w.lat)});
            meters = std::max(meters, std::abs(coords[k][2].get<double>() - pts[k].z));
        }
    }

    // SUMO: every edge shape has the segment's point count; coordinates within 1e-3 m.
    const xml::Element sumo = xml::parse(read_file((e.out / "network.net.xml").string()));
    std::size_t edges = 0;
    for (const auto* edge : sumo.children_named("edge")) {
        ++edges;
        const std::string id = *edge->attr("id");
        const bool reverse = id.front() == '-';
        const RoadSegment3D* seg = net.find_segment(reverse ? id.substr(1) : id);
        if (!seg) {
            counts = false;
            continue;
        }
        std::istringstream shape(*edge->attr("shape"));
        std::vector<Point3D> got;
        for (std::string tok; shape >> tok;) {
            Point3D p;
            std::sscanf(tok.c_str(), "%lf,%lf,%lf", &p.x, &p.y, &p.z);
            got.push_back(p);
        }
        if (got.size() != seg->points.size()) {
            counts = false;
            continue;
        }
        for (std::size_t k = 0; k < got.size(); ++k) {
            const Point3D& want = seg->points[reverse ? got.size() - 1 - k : k];
            meters = std::max({meters, std::abs(got[k].x - want.x), std::abs(got[k].y - want.y),
                               std::abs(got[k].z - want.z)});
        }
    }

    const auto issues = check_opendrive(read_file((e.out / "network.xodr").string()));

    // Re-export from the same artifact: byte-identical files.
    const fs::path again = e.dir / "again";
    const auto m = export_network(net, parse_formats("geojson,xodr,netxml"), again);
    bool identical = true;
    for (const auto& f : m.files)
        identical = identical && read_file((again / f.path).string()) == read_file((e.out / f.path).string());

    const bool pass = counts && deg <= 1e-9 && meters <= 1e-3 && issues.empty() && identical;
    return {pass, "point counts " + std::string(counts ? "match" : "differ") + ", max " + num(deg) + " deg / "
                      + num(meters) + " m, " + std::to_string(edges) + " SUMO edges, OpenDRIVE issues "
                      + std::to_string(issues.size()) + ", re-export " + (identical ? "identical" : "differs")};
}

Outcome determinism(const EndToEnd& e, const std::string& cli)
{
    const RoadNetwork3D net = flat_grid(5, 100.0);
    const std::vector<cosim::Route> routes = {{"a", {"h0_2", "h1_2", "h2_2"}, 9.0}, {"b", {"v3_0", "v3_1"}, 4.0}};
    auto c = steps(500);
    c.seed = 1234;
    c.speed_noise = 0.25;
    c.drift_per_step = 0.004;
    const auto first = cosim::run_scenario(net, routes, c);
    const auto second = cosim::run_scenario(net, routes, c);
    bool lib = first.trace == second.trace;

    bool via_cli = false;
    std::string cli_note = "CLI not run";
    if (e.ran && e.rc == 0 && !cli.empty()) {
        const std::string base = cli + " cosim --config " + e.config.string() + " --artifact "
            + (e.out / app::kArtifactName).string() + " --seed 99 --steps 400 --fault-at 100 --fault-offset 0.7";
        const int ra = run(base + " --out " + (e.dir / "trace_a").string());
        const int rb = run(base + " --out " + (e.dir / "trace_b").string());
        const int rc = run(base + " --out " + (e.dir / "trace_c").string() + " --transport tcp");
        const std::string ta = read_file((e.dir / "trace_a" / app::kTraceName).string());
        const std::string tb = read_file((e.dir / "trace_b" / app::kTraceName).string());
        const std::string tc = read_file((e.dir / "trace_c" / app::kTraceName).string());
        via_cli = ra == 0 && rb == 0 && rc == 0 && !ta.empty() && ta == tb && ta == tc;
        cli_note = "CLI reruns and tcp trace " + std::string(via_cli ? "identical" : "differ") + " ("
            + std::to_string(ta.size()) + " bytes)";
    }
    return {lib && via_cli, "library traces " + std::string(lib ? "identical" : "differ") + " ("
                                + first.summary.trace_checksum + "); " + cli_note};
}

} // namespace

int main(int argc, char** argv)
{
    const std::string cli = argc > 1 ? argv[1] : "";
    int failures = 0;
    const auto report = [&](int id, const char* name, const std::function<Outcome()>& fn) {
        Outcome o;
        try {
            o = fn();
        } catch (const std::exception& ex) {
            o = {false, std::string("exception: ") + ex.what()};
        }
        failures += o.pass ? 0 : 1;
        std::cout << "AC" << id << " " << (o.pass ? "PASS" : "FAIL") << " " << name << ": " << o.detail
                  << std::endl;
    };

    report(1, "interpolation fidelity", interpolation_fidelity);
    report(2, "exact-node reproduction", exact_nodes);
    report(3, "gradient compliance", gradient_compliance_check);
    report(4, "intersection continuity", intersection_continuity);
    report(5, "lockstep exactness", lockstep_exactness);
    report(6, "resync semantics", resync_semantics);
    report(7, "elevation tracking", elevation_tracking);
    EndToEnd e2e;
    try {
        e2e = run_all(cli);
    } catch (const std::exception& ex) {
        std::cerr << "fixture generation failed: " << ex.what() << "\n";
    }
    report(8, "throughput", [&] { return throughput(e2e); });
    report(9, "format integrity", [&] { return format_integrity(e2e); });
    report(10, "determinism", [&] { return determinism(e2e, cli); });
    return failures == 0 ? 0 : 1;
}
