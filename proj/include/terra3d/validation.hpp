#pragma once

// Accuracy and consistency metrics for a finished 3D network.

#include <algorithm>
#include <cmath>
#include <ctime>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "terra3d/builder.hpp"
#include "terra3d/dem.hpp"
#include "terra3d/error.hpp"
#include "terra3d/network.hpp"

namespace terra3d {

struct PairedSamples {
    std::vector<double> generated;
    std::vector<double> actual;
    // Optional full 3D pairs for the Euclidean error.
    std::vector<Point3D> generated_points;
    std::vector<Point3D> actual_points;

    void validate() const
    {
        if (generated.empty())
            throw Error(Errc::invalid_input, "no paired samples");
        if (generated.size() != actual.size())
            throw Error(Errc::invalid_input, "generated and actual differ in length");
        if (generated_points.size() != actual_points.size())
            throw Error(Errc::invalid_input, "generated and actual points differ in length");
    }
};

struct ErrorStats {
    double mae = 0.0;
    double rmse = 0.0;
    double max_error = 0.0;
};

inline ErrorStats elevation_error_stats(const PairedSamples& pairs)
{
    pairs.validate();
    ErrorStats s;
    double abs_sum = 0.0, sq_sum = 0.0;
    for (std::size_t i = 0; i < pairs.generated.size(); ++i) {
        const double d = std::abs(pairs.generated[i] - pairs.actual[i]);
        abs_sum += d;
        sq_sum += d * d;
        s.max_error = std::max(s.max_error, d);
    }
    const double n = static_cast<double>(pairs.generated.size());
    s.mae = abs_sum / n;
    s.rmse = std::sqrt(sq_sum / n);
    // Rounding can push a mean a hair past the maximum when all errors are equal.
    s.mae = std::min(s.mae, s.max_error);
    s.rmse = std::clamp(s.rmse, s.mae, s.max_error);
    return s;
}

struct Error3D {
    std::vector<double> per_pair;
    double max = 0.0;
    double mean = 0.0;
};

inline Error3D error_3d(const std::vector<Point3D>& generated, const std::vector<Point3D>& actual)
{
    if (generated.empty())
        throw Error(Errc::invalid_input, "no paired points");
    if (generated.size() != actual.size())
        throw Error(Errc::invalid_input, "generated and actual points differ in length");
    Error3D out;
    out.per_pair.reserve(generated.size());
    double sum = 0.0;
    for (std::size_t i = 0; i < generated.size(); ++i) {
        const double d = distance(generated[i], actual[i]);
        out.per_pair.push_back(d);
        out.max = std::max(out.max, d);
        sum += d;
    }
    out.mean = std::min(sum / static_cast<double>(generated.size()), out.max);
    return out;
}

struct ComplianceResult {
    std::size_t valid_segments = 0;
    std::size_t total_segments = 0;
    std::size_t valid_subsegments = 0;
    std::size_t total_subsegments = 0;
    std::vector<std::string> invalid_segments;

    double segment_pct() const
    {
        return total_segments ? 100.0 * static_cast<double>(valid_segments) / total_segments : 100.0;
    }
    double subsegment_pct() const
    {
        return total_subsegments
            ? 100.0 * static_cast<double>(valid_subsegments) / total_subsegments
            : 100.0;
    }
};

/// A sub-segment (consecutive sample pair) is valid iff its grade is within
/// the class limit; a segment is valid iff all its sub-segments are.
inline ComplianceResult gradient_compliance(const RoadNetwork3D& net)
{
    ComplianceResult r;
    for (const auto& seg : net.segments) {
        bool all_ok = true;
        for (std::size_t i = 0; i + 1 < seg.points.size(); ++i) {
            const bool ok = within_grade(gradient(seg.points[i], seg.points[i + 1]),
                                         seg.cls.max_gradient);
            ++r.total_subsegments;
            if (ok)
                ++r.valid_subsegments;
            all_ok = all_ok && ok;
        }
        ++r.total_segments;
        if (all_ok)
            ++r.valid_segments;
        else
            r.invalid_segments.push_back(seg.id);
    }
    return r;
}

/// Largest gap allowed between endpoint elevations meeting at a node (strict).
inline constexpr double kIntersectionGapThreshold = 0.1;

struct NodeGap {
    std::string node_id;
    double gap = 0.0;
    bool pass = true;
    friend bool operator==(const NodeGap&, const NodeGap&) = default;
};

struct GapCheck {
    std::vector<NodeGap> nodes;
    bool pass = true;
};

inline GapCheck intersection_gap_check(const RoadNetwork3D& net)
{
    GapCheck out;
    const auto incidence = node_incidence(net);
    for (const auto& node : net.nodes) {
        if (!node.is_intersection)
            continue;
        auto it = incidence.find(node.id);
        if (it == incidence.end())
            continue;
        double lo = 1e300, hi = -1e300;
        for (const auto& [seg, is_end] : it->second) {
            const auto& z = net.segments[seg].profile.z;
            const double v = is_end ? z.back() : z.front();
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
        NodeGap g{node.id, hi - lo, hi - lo < kIntersectionGapThreshold};
        out.pass = out.pass && g.pass;
        out.nodes.push_back(std::move(g));
    }
    return out;
}

struct ValidationReport {
    double mae = 0.0;
    double rmse = 0.0;
    double max_error = 0.0;
    double error3d_max = 0.0;
    double error3d_mean = 0.0;
    std::size_t sample_count = 0;
    double compliance_segments_pct = 100.0;
    double compliance_subsegments_pct = 100.0;
    std::size_t total_segments = 0;
    std::size_t total_subsegments = 0;
    std::vector<NodeGap> intersection_gaps;
    bool gaps_pass = true;
    std::vector<std::string> flagged_segments;
    std::vector<std::string> noncompliant_segments;
    std::string sampling_mode = "idw4";
    std::string reference = "input_dem";
    std::string timestamp;

    friend bool operator==(const ValidationReport&, const ValidationReport&) = default;
};

inline std::string utc_timestamp_now()
{
    const std::time_t now = std::time(nullptr);
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

/// Pairs every profile sample with the reference grid resampled at the same (x, y).
inline PairedSamples pair_with_reference(const RoadNetwork3D& net, const TerrainSampler& truth)
{
    PairedSamples pairs;
    for (const auto& seg : net.segments) {
        for (const auto& p : seg.points) {
            const double actual = truth(p.x, p.y);
            pairs.generated.push_back(p.z);
            pairs.actual.push_back(actual);
            pairs.generated_points.push_back(p);
            pairs.actual_points.push_back({p.x, p.y, actual});
        }
    }
    return pairs;
}

inline ValidationReport validate_network(const RoadNetwork3D& net, const DemGrid& truth,
                                         std::string reference_name = "input_dem",
                                         std::string timestamp = {})
{
    const TerrainSampler sampler{&truth, net.provenance.sampling_mode, net.frame.origin.easting,
                                 net.frame.origin.northing};
    const PairedSamples pairs = pair_with_reference(net, sampler);

    ValidationReport r;
    const ErrorStats stats = elevation_error_stats(pairs);
    r.mae = stats.mae;
    r.rmse = stats.rmse;
    r.max_error = stats.max_error;
    const Error3D e3 = error_3d(pairs.generated_points, pairs.actual_points);
    r.error3d_max = e3.max;
    r.error3d_mean = e3.mean;
    r.sample_count = pairs.generated.size();

    const ComplianceResult c = gradient_compliance(net);
    r.compliance_segments_pct = c.segment_pct();
    r.compliance_subsegments_pct = c.subsegment_pct();
    r.total_segments = c.total_segments;
    r.total_subsegments = c.total_subsegments;
    r.noncompliant_segments = c.invalid_segments;

    GapCheck gaps = intersection_gap_check(net);
    r.intersection_gaps = std::move(gaps.nodes);
    r.gaps_pass = gaps.pass;

    for (const auto& seg : net.segments)
        if (seg.flagged)
            r.flagged_segments.push_back(seg.id);
    r.sampling_mode = to_string(net.provenance.sampling_mode);
    r.reference = std::move(reference_name);
    r.timestamp = timestamp.empty() ? utc_timestamp_now() : std::move(timestamp);
    return r;
}

inline nlohmann::ordered_json to_json(const ValidationReport& r)
{
    nlohmann::ordered_json j;
    j["schema"] = "terra3d.report/1";
    j["mae"] = r.mae;
    j["rmse"] = r.rmse;
    j["max_error"] = r.max_error;
    j["error3d_max"] = r.error3d_max;
    j["error3d_mean"] = r.error3d_mean;
    j["sample_count"] = r.sample_count;
    j["gradient_compliance_pct"] = {
        {"segments", r.compliance_segments_pct},
        {"subsegments", r.compliance_subsegments_pct},
        {"total_segments", r.total_segments},
        {"total_subsegments", r.total_subsegments},
    };
    nlohmann::ordered_json gaps = nlohmann::ordered_json::array();
    for (const auto& g : r.intersection_gaps)
        gaps.push_back({{"node", g.node_id}, {"gap", g.gap}, {"pass", g.pass}});
    j["intersection_gaps"] = {{"threshold", kIntersectionGapThreshold},
                              {"pass", r.gaps_pass},
                              {"nodes", gaps}};
    j["flagged_segments"] = r.flagged_segments;
    j["noncompliant_segments"] = r.noncompliant_segments;
    j["sampling_mode"] = r.sampling_mode;
    j["reference"] = r.reference;
    j["timestamp"] = r.timestamp;
    return j;
}

inline ValidationReport report_from_json(const nlohmann::ordered_json& j)
{
    try {
        if (j.at("schema").get<std::string>() != "terra3d.report/1")
            throw Error(Errc::invalid_input, "unsupported report schema");
        ValidationReport r;
        r.mae = j.at("mae").get<double>();
        r.rmse = j.at("rmse").get<double>();
        r.max_error = j.at("max_error").get<double>();
        r.error3d_max = j.at("error3d_max").get<double>();
        r.error3d_mean = j.at("error3d_mean").get<double>();
        r.sample_count = j.at("sample_count").get<std::size_t>();
        const auto& c = j.at("gradient_compliance_pct");
        r.compliance_segments_pct = c.at("segments").get<double>();
        r.compliance_subsegments_pct = c.at("subsegments").get<double>();
        r.total_segments = c.at("total_segments").get<std::size_t>();
        r.total_subsegments = c.at("total_subsegments").get<std::size_t>();
        const auto& g = j.at("intersection_gaps");
        r.gaps_pass = g.at("pass").get<bool>();
        for (const auto& n : g.at("nodes"))
            r.intersection_gaps.push_back(
                {n.at("node").get<std::string>(), n.at("gap").get<double>(), n.at("pass").get<bool>()});
        r.flagged_segments = j.at("flagged_segments").get<std::vector<std::string>>();
        r.noncompliant_segments = j.at("noncompliant_segments").get<std::vector<std::string>>();
        r.sampling_mode = j.at("sampling_mode").get<std::string>();
        r.reference = j.at("reference").get<std::string>();
        r.timestamp = j.at("timestamp").get<std::string>();
        return r;
    } catch (const nlohmann::json::exception& e) {
        throw Error(Errc::invalid_input, std::string("malformed report: ") + e.what());
    }
}

inline std::string serialize_report(const ValidationReport& r) { return to_json(r).dump(2) + "\n"; }

inline ValidationReport parse_report(const std::string& text)
{
    try {
        return report_from_json(nlohmann::ordered_json::parse(text));
    } catch (const nlohmann::json::exception& e) {
        throw Error(Errc::invalid_input, std::string("malformed report: ") + e.what());
    }
}

} // namespace terra3d
