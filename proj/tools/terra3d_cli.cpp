// terra3d: build, validate, export and co-simulate 3D road networks.

#include <chrono>
#include <cstdlib>
#include <optional>
#include <string>

#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "CLI11.hpp"

#include "terra3d/app.hpp"

namespace {

using namespace terra3d;
namespace fs = std::filesystem;

struct Options {
    std::string config;
    std::string out;
    std::string artifact;
    std::string truth;
    std::string routes;
    std::string formats = "geojson,xodr,netxml";
    std::string transport = "direct";
    std::optional<std::uint64_t> seed;
    std::optional<std::int64_t> fault_at;
    std::optional<double> fault_offset;
    std::optional<double> drift;
    std::optional<std::int64_t> steps;
    std::optional<double> min_compliance;
};

void setup_logging()
{
    auto logger = spdlog::stderr_color_mt("terra3d");
    logger->set_pattern("%^%l%$: %v");
    spdlog::set_default_logger(logger);
    spdlog::set_level(spdlog::level::info);
    if (const char* lvl = std::getenv("TERRA3D_LOG_LEVEL"))
        spdlog::set_level(spdlog::level::from_str(lvl));
}

class Stopwatch {
public:
    double seconds() const
    {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    }

private:
    std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

std::optional<ProjectConfig> maybe_config(const Options& o)
{
    if (o.config.empty())
        return std::nullopt;
    ProjectConfig c = load_config(o.config);
    if (o.seed)
        c.sync.seed = *o.seed;
    if (o.fault_at)
        c.sync.fault_at = *o.fault_at;
    if (o.fault_offset)
        c.sync.fault_offset = *o.fault_offset;
    if (o.drift)
        c.sync.drift_per_step = *o.drift;
    if (o.steps)
        c.sync.max_steps = *o.steps;
    if (o.min_compliance)
        c.min_compliance_pct = *o.min_compliance;
    c.validate();
    return c;
}

ProjectConfig require_config(const Options& o)
{
    if (o.config.empty())
        throw Error(Errc::invalid_input, "--config is required for this command");
    return *maybe_config(o);
}

fs::path out_dir(const Options& o, const std::optional<ProjectConfig>& c)
{
    if (!o.out.empty())
        return o.out;
    return c ? fs::path(c->output_dir) : fs::path("out");
}

fs::path artifact_path(const Options& o, const fs::path& out)
{
    return o.artifact.empty() ? out / app::kArtifactName : fs::path(o.artifact);
}

void require_artifact(const fs::path& p)
{
    if (!fs::is_regular_file(p))
        throw Error(Errc::invalid_input, "network artifact does not exist: " + p.string());
}

int run_build(const ProjectConfig& c, const fs::path& out)
{
    Stopwatch sw;
    const auto r = app::cmd_build(c, out);
    for (const auto& w : r.warnings)
        spdlog::warn("road_ingest: {}", w);
    std::size_t flagged = 0;
    for (const auto& s : r.network.segments)
        flagged += s.flagged ? 1 : 0;
    if (flagged)
        spdlog::warn("builder: {} segment(s) could not meet their gradient limit and are flagged", flagged);
    spdlog::info("build: {} nodes, {} segments -> {} ({}) in {:.2f} s", r.network.nodes.size(),
                 r.network.segments.size(), r.artifact.string(), r.checksum, sw.seconds());
    return app::ok;
}

int run_validate(const Options& o, const std::optional<ProjectConfig>& c, const fs::path& out)
{
    const fs::path artifact = artifact_path(o, out);
    require_artifact(artifact);
    std::string truth = o.truth, reference = "truth_dem:" + fs::path(o.truth).filename().string();
    if (truth.empty()) {
        if (!c)
            throw Error(Errc::invalid_input, "validate needs --truth or --config");
        std::tie(truth, reference) = app::truth_for(*c);
    }
    if (!fs::is_regular_file(truth))
        throw Error(Errc::invalid_input, "truth DEM does not exist: " + truth);
    const double floor = o.min_compliance ? *o.min_compliance : c ? c->min_compliance_pct : 0.0;
    const std::string stamp = c ? c->report_timestamp : std::string();
    const auto r = app::cmd_validate(artifact, truth, reference, floor, stamp, out);
    const auto& rep = r.report;
    spdlog::info("validate: MAE {:.4f} m, RMSE {:.4f} m, max {:.4f} m over {} samples", rep.mae, rep.rmse,
                 rep.max_error, rep.sample_count);
    spdlog::info("validate: gradient compliance {:.2f}% of segments, {:.2f}% of sub-segments",
                 rep.compliance_segments_pct, rep.compliance_subsegments_pct);
    spdlog::info("validate: report written to {}", r.report_path.string());
    for (const auto& f : r.failures)
        spdlog::error("validate: {}", f);
    return r.failures.empty() ? app::ok : app::validation_failed;
}

int run_export(const Options& o, const fs::path& out)
{
    const fs::path artifact = artifact_path(o, out);
    require_artifact(artifact);
    const auto formats = parse_formats(o.formats);
    const auto m = app::cmd_export(artifact, formats, out);
    for (const auto& f : m.files)
        spdlog::info("export: {} ({} bytes, {})", (out / f.path).string(), f.bytes, f.checksum);
    return app::ok;
}

int run_cosim(const Options& o, const std::optional<ProjectConfig>& c, const fs::path& out)
{
    const fs::path artifact = artifact_path(o, out);
    require_artifact(artifact);
    cosim::SyncConfig sync = c ? c->sync : cosim::SyncConfig{};
    if (!c) {
        if (o.seed)
            sync.seed = *o.seed;
        if (o.fault_at)
            sync.fault_at = *o.fault_at;
        if (o.fault_offset)
            sync.fault_offset = *o.fault_offset;
        if (o.drift)
            sync.drift_per_step = *o.drift;
        if (o.steps)
            sync.max_steps = *o.steps;
        sync.validate();
    }
    std::string routes = o.routes;
    if (routes.empty() && c)
        routes = c->routes_path;
    if (!routes.empty() && !fs::is_regular_file(routes))
        throw Error(Errc::invalid_input, "routes file does not exist: " + routes);
    Stopwatch sw;
    const auto r = app::cmd_cosim(artifact, routes, sync, app::parse_transport(o.transport), out);
    const auto& s = r.scenario.summary;
    spdlog::info("cosim: {} steps, {} vehicles, t_a = t_b = {} s, {} resync event(s), max sync error {:.6f} m",
                 s.steps, s.vehicles, s.t_a, s.resync_count, s.max_sync_error);
    spdlog::info("cosim: trace {} ({}) in {:.2f} s", r.trace_path.string(), s.trace_checksum, sw.seconds());
    return app::ok;
}

} // namespace

int main(int argc, char** argv)
{
    setup_logging();
    CLI::App cli{"terra3d: fuse OSM roads with a DEM into a gradient-constrained 3D network"};
    cli.require_subcommand(1);
    Options o;

    const auto common = [&](CLI::App* sub) {
        sub->add_option("--config", o.config, "project configuration file");
        sub->add_option("--out", o.out, "output directory (overrides output_dir)");
    };
    auto* build = cli.add_subcommand("build", "parse, stack, resample, smooth and reconcile");
    common(build);
    auto* validate = cli.add_subcommand("validate", "write report.json for a network artifact");
    common(validate);
    validate->add_option("--artifact", o.artifact, "network artifact (default <out>/network.json)");
    validate->add_option("--truth", o.truth, "reference DEM (default truth_dem or dem_path)");
    validate->add_option("--min-compliance", o.min_compliance, "segment compliance floor, percent");
    auto* exp = cli.add_subcommand("export", "write GeoJSON, OpenDRIVE and SUMO files");
    common(exp);
    exp->add_option("--artifact", o.artifact, "network artifact (default <out>/network.json)");
    exp->add_option("--formats", o.formats, "comma-separated: geojson, xodr, netxml");
    auto* cos = cli.add_subcommand("cosim", "run the lockstep co-simulation harness");
    common(cos);
    cos->add_option("--artifact", o.artifact, "network artifact (default <out>/network.json)");
    cos->add_option("--routes", o.routes, "routes JSON (default: one vehicle per segment, first 10)");
    cos->add_option("--seed", o.seed, "seed for endpoint A's speed noise");
    cos->add_option("--fault-at", o.fault_at, "step at which endpoint B is displaced");
    cos->add_option("--fault-offset", o.fault_offset, "displacement in meters applied at --fault-at");
    cos->add_option("--drift", o.drift, "per-step drift of endpoint B in meters");
    cos->add_option("--steps", o.steps, "number of lockstep steps");
    cos->add_option("--transport", o.transport, "direct or tcp")->check(CLI::IsMember({"direct", "tcp"}));
    auto* all = cli.add_subcommand("all", "build, validate and export in one go");
    common(all);
    all->add_option("--formats", o.formats, "comma-separated: geojson, xodr, netxml");
    all->add_option("--min-compliance", o.min_compliance, "segment compliance floor, percent");

    try {
        cli.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = cli.exit(e);
        return rc == 0 ? app::ok : app::invalid;
    }

    try {
        if (build->parsed()) {
            const ProjectConfig c = require_config(o);
            return run_build(c, out_dir(o, c));
        }
        if (validate->parsed()) {
            const auto c = maybe_config(o);
            return run_validate(o, c, out_dir(o, c));
        }
        if (exp->parsed()) {
            const auto c = maybe_config(o);
            return run_export(o, out_dir(o, c));
        }
        if (cos->parsed()) {
            const auto c = maybe_config(o);
            return run_cosim(o, c, out_dir(o, c));
        }
        if (all->parsed()) {
            const ProjectConfig c = require_config(o);
            const fs::path out = out_dir(o, c);
            parse_formats(o.formats); // reject bad tokens before doing any work
            Stopwatch sw;
            run_build(c, out);
            const int rc = run_validate(o, c, out);
            run_export(o, out);
            spdlog::info("all: finished in {:.2f} s", sw.seconds());
            return rc;
        }
    } catch (const Error& e) {
        spdlog::error("{} ({})", e.what(), to_string(e.code()));
        return app::exit_code_for(e);
    } catch (const std::exception& e) {
        spdlog::error("internal error: {}", e.what());
        return app::internal;
    }
    return app::internal;
}
