#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <fstream>

#include "json.hpp"
#include "support.hpp"
#include "terra3d/app.hpp"

using namespace terra3d;
namespace fs = std::filesystem;

namespace {

void expect_error(Errc code, auto&& fn, const std::string& needle = {})
{
    try {
        fn();
        ADD_FAILURE() << "expected " << to_string(code);
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), code) << e.what();
        if (!needle.empty())
            EXPECT_NE(std::string(e.what()).find(needle), std::string::npos) << e.what();
    }
}

/// Small compliant project: 4x4 grid, 80 m blocks, tilted plane.
fs::path small_project(const std::string& name)
{
    synthetic::ProjectSpec spec;
    spec.nx = 4;
    spec.ny = 4;
    spec.block = 80.0;
    spec.terrain = "plane";
    spec.max_steps = 200;
    return synthetic::write_project(t3test::scratch_dir(name), spec);
}

int run_cli(const std::string& args)
{
    const char* cli = std::getenv("TERRA3D_CLI");
    if (!cli)
        return -1;
    const std::string cmd = std::string(cli) + " " + args + " >/dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

} // namespace

TEST(Toml, ParsesSubset)
{
    const auto doc = toml::parse("# comment\n"
                                 "name = \"a \\\"b\\\" # not a comment\" # trailing\n"
                                 "count = 1_000\n"
                                 "ratio = -2.5e-1\n"
                                 "flag = true\n"
                                 "box = [1, 2.5 , -3]\n"
                                 "\n"
                                 "[sync]\n"
                                 "dt = 0.05\n");
    EXPECT_EQ(std::get<std::string>(doc.at("name").value), "a \"b\" # not a comment");
    EXPECT_EQ(std::get<double>(doc.at("count").value), 1000.0);
    EXPECT_TRUE(doc.at("count").is_integer);
    EXPECT_FALSE(doc.at("ratio").is_integer);
    EXPECT_EQ(std::get<double>(doc.at("ratio").value), -0.25);
    EXPECT_TRUE(std::get<bool>(doc.at("flag").value));
    EXPECT_EQ(std::get<std::vector<double>>(doc.at("box").value), (std::vector<double>{1, 2.5, -3}));
    EXPECT_EQ(std::get<double>(doc.at("sync.dt").value), 0.05);
    EXPECT_EQ(doc.at("sync.dt").line, 9);
}

TEST(Toml, ErrorsNameTheLine)
{
    expect_error(Errc::invalid_input, [] { toml::parse("a = 1\nb\n"); }, "line 2");
    expect_error(Errc::invalid_input, [] { toml::parse("a = 1\na = 2\n"); }, "duplicate");
    expect_error(Errc::invalid_input, [] { toml::parse("a = \"open\n"); }, "line 1");
    expect_error(Errc::invalid_input, [] { toml::parse("[bad\n"); });
    expect_error(Errc::invalid_input, [] { toml::parse("x = 12abc\n"); });
}

TEST(Config, ResolvesPathsAgainstConfigDir)
{
    const auto c = parse_config("osm_path = \"in/a.osm\"\ndem_path = \"/abs/d.asc\"\n"
                                "bbox = [-122.43, 37.76, -122.41, 37.78]\n"
                                "[sync]\nseed = 9\nfault_at = 50\nfault_offset = 0.6\n",
                                "/work/proj");
    EXPECT_EQ(c.osm_path, "/work/proj/in/a.osm");
    EXPECT_EQ(c.dem_path, "/abs/d.asc");
    EXPECT_EQ(c.output_dir, "/work/proj/out");
    EXPECT_EQ(c.sync.seed, 9u);
    EXPECT_EQ(*c.sync.fault_at, 50);
    EXPECT_EQ(c.sync.fault_offset, 0.6);
    EXPECT_EQ(c.sync.dt, 0.05);
    EXPECT_EQ(c.max_smooth_iters, 1000);
}

TEST(Config, RejectsUnknownAndMistypedKeys)
{
    const std::string base = "osm_path = \"a\"\ndem_path = \"b\"\nbbox = [-122.43, 37.76, -122.41, 37.78]\n";
    expect_error(Errc::invalid_input, [&] { parse_config(base + "colour = 1\n"); }, "unknown key 'colour'");
    expect_error(Errc::invalid_input, [&] { parse_config(base + "[sync]\nmax_steps = 1.5\n"); }, "integer");
    expect_error(Errc::invalid_input, [&] { parse_config(base + "sampling_mode = \"cubic\"\n"); });
    expect_error(Errc::invalid_input, [&] { parse_config("osm_path = \"a\"\n"); }, "bbox");
    expect_error(Errc::invalid_input, [&] { parse_config(base + "[sync]\nseed = -1\n"); });
}

TEST(Config, MissingDemIsInvalidInputNamingThePath)
{
    const fs::path cfg = small_project("missing_dem");
    fs::remove(cfg.parent_path() / "terrain.asc");
    try {
        load_config(cfg.string());
        FAIL() << "expected an error";
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), Errc::invalid_input);
        EXPECT_NE(std::string(e.what()).find("terrain.asc"), std::string::npos) << e.what();
        EXPECT_EQ(app::exit_code_for(e), app::invalid);
    }
    EXPECT_EQ(run_cli("build --config " + cfg.string()), app::invalid);
}

TEST(App, ExitCodeMapping)
{
    EXPECT_EQ(app::exit_code_for(Error(Errc::protocol_violation, "x")), app::internal);
    EXPECT_EQ(app::exit_code_for(Error(Errc::out_of_extent, "x")), app::invalid);
    EXPECT_EQ(app::exit_code_for(Error(Errc::non_convergence, "x")), app::invalid);
}

TEST(App, BuildIsByteDeterministic)
{
    const auto c = load_config(small_project("determinism").string());
    const auto dir = fs::path(c.output_dir);
    const auto a = app::cmd_build(c, dir / "a");
    const auto b = app::cmd_build(c, dir / "b");
    EXPECT_EQ(read_file(a.artifact.string()), read_file(b.artifact.string()));
    EXPECT_EQ(a.checksum, b.checksum);
    EXPECT_EQ(a.network.segments.size(), std::size_t{2 * 4 * 3});
    // The artifact round-trips.
    EXPECT_EQ(serialize_network(load_network(a.artifact.string())), read_file(a.artifact.string()));
    EXPECT_EQ(a.network.provenance.input_checksums.size(), 2u);
}

TEST(App, ValidatePassesThenFailsOnPlantedGap)
{
    const auto c = load_config(small_project("gap").string());
    const fs::path out = c.output_dir;
    const auto built = app::cmd_build(c, out);
    const auto ok = app::cmd_validate(built.artifact, c.dem_path, "input_dem", 100.0, "t", out);
    EXPECT_TRUE(ok.failures.empty());
    EXPECT_TRUE(ok.report.gaps_pass);
    EXPECT_EQ(ok.report.compliance_segments_pct, 100.0);

    RoadNetwork3D net = built.network;
    const RoadNode3D* node = nullptr;
    for (const auto& n : net.nodes)
        if (n.is_intersection)
            node = &n;
    ASSERT_NE(node, nullptr);
    for (auto& s : net.segments)
        if (s.to_node == node->id) {
            s.profile.z.back() += 0.15;
            s.sync_points_z();
            break;
        }
    const fs::path planted = out / "planted.json";
    write_file(planted.string(), serialize_network(net));
    const auto bad = app::cmd_validate(planted, c.dem_path, "input_dem", 0.0, "t", out / "planted");
    EXPECT_FALSE(bad.report.gaps_pass);
    ASSERT_EQ(bad.failures.size(), 1u);
    EXPECT_NE(bad.failures[0].find("intersection gap"), std::string::npos);
    bool found = false;
    for (const auto& g : bad.report.intersection_gaps)
        if (g.node_id == node->id) {
            EXPECT_NEAR(g.gap, 0.15, 1e-9);
            EXPECT_FALSE(g.pass);
            found = true;
        }
    EXPECT_TRUE(found);
    EXPECT_EQ(run_cli("validate --artifact " + planted.string() + " --truth " + c.dem_path + " --out "
                      + (out / "cli").string()),
              app::validation_failed);
}

TEST(App, ExportWritesThreeFilesAndManifest)
{
    const auto c = load_config(small_project("export").string());
    const fs::path out = c.output_dir;
    const auto built = app::cmd_build(c, out);
    const auto m = app::cmd_export(built.artifact, parse_formats("geojson,xodr,netxml"), out);
    ASSERT_EQ(m.files.size(), 3u);
    for (const char* name : {"network.geojson", "network.xodr", "network.net.xml", "manifest.json"})
        EXPECT_TRUE(fs::is_regular_file(out / name)) << name;
    const auto manifest = nlohmann::json::parse(read_file((out / "manifest.json").string()));
    EXPECT_EQ(manifest["network_checksum"], built.checksum);
    EXPECT_EQ(manifest["files"].size(), 3u);
}

TEST(App, CosimSummaries)
{
    synthetic::ProjectSpec spec;
    spec.nx = 4;
    spec.ny = 4;
    spec.block = 80.0;
    spec.terrain = "flat";
    const auto c = load_config(synthetic::write_project(t3test::scratch_dir("cosim"), spec).string());
    const fs::path out = c.output_dir;
    const auto built = app::cmd_build(c, out);

    auto sync = c.sync;
    sync.max_steps = 100;
    const auto clean = app::cmd_cosim(built.artifact, c.routes_path, sync, app::Transport::direct, out / "clean");
    const auto summary = nlohmann::json::parse(read_file(clean.summary_path.string()));
    EXPECT_EQ(summary["resync_count"], 0);
    EXPECT_EQ(summary["steps"], 100);
    EXPECT_EQ(summary["t_a"], 5.0);

    sync.fault_at = 50;
    sync.fault_offset = 0.6;
    const auto faulty = app::cmd_cosim(built.artifact, {}, sync, app::Transport::direct, out / "fault");
    const auto& s = faulty.scenario.summary;
    // Default routes: one vehicle per segment, up to ten.
    EXPECT_EQ(s.vehicles, 10u);
    EXPECT_EQ(s.resync_count, 10u);
    for (const auto& e : s.resync_events)
        EXPECT_EQ(e.n, 50);

    const auto one = app::cmd_cosim(built.artifact, c.routes_path, sync, app::Transport::tcp, out / "tcp");
    ASSERT_EQ(one.scenario.summary.resync_count, 2u);
    EXPECT_EQ(one.scenario.summary.resync_events[0].n, 50);
    EXPECT_EQ(read_file(one.trace_path.string()), one.scenario.trace);
}

TEST(App, DefaultRoutesUseClassSpeed)
{
    const auto net = t3test::flat_grid(3, 3, 50.0);
    const auto routes = app::default_routes(net, 4);
    ASSERT_EQ(routes.size(), 4u);
    EXPECT_EQ(routes[0].vehicle_id, "veh0");
    EXPECT_EQ(routes[0].segment_ids, std::vector<std::string>{net.segments[0].id});
    EXPECT_EQ(routes[0].speed, class_speed(RoadKind::residential));
    EXPECT_EQ(app::default_routes(net, 100).size(), net.segments.size());
}

TEST(Cli, EndToEnd)
{
    if (!std::getenv("TERRA3D_CLI"))
        GTEST_SKIP() << "TERRA3D_CLI not set";
    const fs::path cfg = small_project("cli");
    const std::string out = (cfg.parent_path() / "run").string();
    EXPECT_EQ(run_cli("all --config " + cfg.string() + " --out " + out), app::ok);
    for (const char* name : {"network.json", "report.json", "network.geojson", "network.xodr", "network.net.xml"})
        EXPECT_TRUE(fs::is_regular_file(fs::path(out) / name)) << name;
    EXPECT_EQ(run_cli("cosim --config " + cfg.string() + " --out " + out + " --steps 60 --fault-at 20 --fault-offset 0.6"),
              app::ok);
    const auto summary = nlohmann::json::parse(read_file(out + "/cosim_summary.json"));
    EXPECT_EQ(summary["resync_count"], 2);

    EXPECT_EQ(run_cli("frobnicate"), app::invalid);
    EXPECT_EQ(run_cli("build"), app::invalid);
    EXPECT_EQ(run_cli("export --out " + out + " --formats kml"), app::invalid);
    EXPECT_EQ(run_cli("cosim --out " + out + " --transport carrier-pigeon"), app::invalid);
    EXPECT_EQ(run_cli("validate --config " + cfg.string() + " --out " + out + " --min-compliance 101"),
              app::invalid);
}
