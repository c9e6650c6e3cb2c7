#pragma once

// Project configuration: a flat TOML subset (tables, string / number / bool
// scalars, single-line number arrays, # comments). Unknown keys are rejected
// so typos do not silently fall back to defaults.

#include <cctype>
#include <charconv>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "terra3d/cosim/types.hpp"
#include "terra3d/dem.hpp"
#include "terra3d/error.hpp"
#include "terra3d/geo.hpp"
#include "terra3d/network.hpp"
#include "terra3d/network_io.hpp"

namespace terra3d {

namespace toml {

using Value = std::variant<std::string, double, bool, std::vector<double>>;

struct Entry {
    Value value;
    int line = 0;
    bool is_integer = false;
};

/// "table.key" -> entry; top-level keys have no prefix.
using Document = std::map<std::string, Entry>;

namespace detail {

inline std::string_view trim(std::string_view s)
{
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t'))
        s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r'))
        s.remove_suffix(1);
    return s;
}

[[noreturn]] inline void fail(int line, const std::string& what)
{
    throw Error(Errc::invalid_input, "config line " + std::to_string(line) + ": " + what);
}

inline bool is_bare_key(std::string_view k)
{
    if (k.empty())
        return false;
    for (char c : k)
        if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-'))
            return false;
    return true;
}

inline double number(std::string_view tok, int line, bool* integer = nullptr)
{
    std::string clean;
    for (char c : tok)
        if (c != '_')
            clean += c;
    if (!clean.empty() && clean.front() == '+')
        clean.erase(0, 1);
    double v = 0.0;
    auto [p, ec] = std::from_chars(clean.data(), clean.data() + clean.size(), v);
    if (clean.empty() || ec != std::errc() || p != clean.data() + clean.size())
        fail(line, "invalid value '" + std::string(tok) + "'");
    if (integer)
        *integer = clean.find_first_of(".eE") == std::string::npos
            && clean.find("inf") == std::string::npos && clean.find("nan") == std::string::npos;
    return v;
}

/// Strip a trailing comment that is not inside a string.
inline std::string_view strip_comment(std::string_view s)
{
    bool in_string = false;
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (s[i] == '\\' && in_string) {
            ++i;
        } else if (s[i] == '"') {
            in_string = !in_string;
        } else if (s[i] == '#' && !in_string) {
            return s.substr(0, i);
        }
    }
    return s;
}

inline std::string unquote(std::string_view v, int line)
{
    if (v.size() < 2 || v.back() != '"')
        fail(line, "unterminated string");
    std::string out;
    for (std::size_t i = 1; i + 1 < v.size(); ++i) {
        char c = v[i];
        if (c == '"')
            fail(line, "unexpected quote in string");
        if (c == '\\') {
            if (i + 2 >= v.size())
                fail(line, "dangling escape");
            switch (v[++i]) {
            case '"': c = '"'; break;
            case '\\': c = '\\'; break;
            case 'n': c = '\n'; break;
            case 't': c = '\t'; break;
            default: fail(line, "unsupported escape");
            }
        }
        out += c;
    }
    return out;
}

} // namespace detail

inline Document parse(std::string_view text)
{
    Document doc;
    std::string table;
    int line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const std::size_t nl = text.find('\n', pos);
        std::string_view line = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos
                                                                               : nl - pos);
        pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
        ++line_no;
        line = detail::trim(detail::strip_comment(line));
        if (line.empty())
            continue;
        if (line.front() == '[') {
            if (line.back() != ']' || line.size() < 3)
                detail::fail(line_no, "malformed table header");
            const auto name = detail::trim(line.substr(1, line.size() - 2));
            if (!detail::is_bare_key(name))
                detail::fail(line_no, "invalid table name");
            table = std::string(name);
            continue;
        }
        const std::size_t eq = line.find('=');
        if (eq == std::string_view::npos)
            detail::fail(line_no, "expected key = value");
        const auto key = detail::trim(line.substr(0, eq));
        const auto raw = detail::trim(line.substr(eq + 1));
        if (!detail::is_bare_key(key))
            detail::fail(line_no, "invalid key '" + std::string(key) + "'");
        if (raw.empty())
            detail::fail(line_no, "missing value");

        Entry e;
        e.line = line_no;
        if (raw.front() == '"') {
            e.value = detail::unquote(raw, line_no);
        } else if (raw == "true" || raw == "false") {
            e.value = raw == "true";
        } else if (raw.front() == '[') {
            if (raw.back() != ']')
                detail::fail(line_no, "unterminated array");
            std::vector<double> arr;
            auto body = raw.substr(1, raw.size() - 2);
            while (!detail::trim(body).empty()) {
                const std::size_t comma = body.find(',');
                const auto tok = detail::trim(body.substr(0, comma));
                if (tok.empty()) {
                    if (comma == std::string_view::npos)
                        break;
                    detail::fail(line_no, "empty array element");
                }
                arr.push_back(detail::number(tok, line_no));
                if (comma == std::string_view::npos)
                    break;
                body.remove_prefix(comma + 1);
            }
            e.value = std::move(arr);
        } else {
            e.value = detail::number(raw, line_no, &e.is_integer);
        }
        const std::string full = table.empty() ? std::string(key) : table + "." + std::string(key);
        if (!doc.emplace(full, std::move(e)).second)
            detail::fail(line_no, "duplicate key '" + full + "'");
    }
    return doc;
}

} // namespace toml

struct ProjectConfig {
    std::string source;          // path of the config file, empty when built in code
    std::string osm_path;
    std::string dem_path;
    GeoBBox bbox;
    std::string output_dir = "out";
    SamplingMode sampling_mode = SamplingMode::idw4;
    int max_smooth_iters = 1000;
    GradeLimits limits;
    cosim::SyncConfig sync;
    std::string routes_path;     // optional
    std::string truth_dem;       // optional; validation falls back to dem_path
    double min_compliance_pct = 0.0;
    std::string report_timestamp; // fixed timestamp for reproducible reports

    void validate() const
    {
        limits.validate();
        sync.validate();
        if (max_smooth_iters < 0)
            throw Error(Errc::invalid_input, "max_smooth_iters must be non-negative");
        if (min_compliance_pct < 0.0 || min_compliance_pct > 100.0)
            throw Error(Errc::invalid_input, "min_compliance_pct must be within [0, 100]");
        const auto must_exist = [](const std::string& key, const std::string& p) {
            if (!p.empty() && !std::filesystem::is_regular_file(p))
                throw Error(Errc::invalid_input, key + " does not exist: " + p);
        };
        if (osm_path.empty())
            throw Error(Errc::invalid_input, "osm_path is required");
        if (dem_path.empty())
            throw Error(Errc::invalid_input, "dem_path is required");
        must_exist("osm_path", osm_path);
        must_exist("dem_path", dem_path);
        must_exist("routes_path", routes_path);
        must_exist("truth_dem", truth_dem);
    }
};

namespace detail {

class ConfigReader {
public:
    explicit ConfigReader(toml::Document doc) : doc_(std::move(doc)) {}

    template <class T>
    std::optional<T> take(const std::string& key)
    {
        auto it = doc_.find(key);
        if (it == doc_.end())
            return std::nullopt;
        const toml::Entry e = std::move(it->second);
        doc_.erase(it);
        if constexpr (std::is_same_v<T, int> || std::is_same_v<T, std::int64_t>
                      || std::is_same_v<T, std::uint64_t>) {
            const double* v = std::get_if<double>(&e.value);
            if (!v || !e.is_integer)
                bad(e, key, "an integer");
            if constexpr (std::is_same_v<T, std::uint64_t>)
                if (*v < 0)
                    bad(e, key, "a non-negative integer");
            return static_cast<T>(*v);
        } else {
            const T* v = std::get_if<T>(&e.value);
            if (!v)
                bad(e, key, std::is_same_v<T, std::string> ? "a string"
                            : std::is_same_v<T, double>     ? "a number"
                            : std::is_same_v<T, bool>       ? "a boolean"
                                                            : "an array of numbers");
            return *v;
        }
    }

    void finish() const
    {
        if (!doc_.empty()) {
            const auto& [key, e] = *doc_.begin();
            throw Error(Errc::invalid_input,
                        "config line " + std::to_string(e.line) + ": unknown key '" + key + "'");
        }
    }

private:
    [[noreturn]] static void bad(const toml::Entry& e, const std::string& key, const char* want)
    {
        throw Error(Errc::invalid_input,
                    "config line " + std::to_string(e.line) + ": '" + key + "' must be " + want);
    }

    toml::Document doc_;
};

} // namespace detail

/// Parse config text. Relative paths are resolved against `base_dir`.
/// Paths are not checked here; ProjectConfig::validate does that.
inline ProjectConfig parse_config(std::string_view text, const std::filesystem::path& base_dir = {})
{
    detail::ConfigReader r(toml::parse(text));
    ProjectConfig c;
    const auto path = [&](const std::string& key) -> std::string {
        auto v = r.take<std::string>(key);
        if (!v || v->empty())
            return {};
        std::filesystem::path p(*v);
        return (p.is_absolute() || base_dir.empty() ? p : base_dir / p).lexically_normal().string();
    };
    c.osm_path = path("osm_path");
    c.dem_path = path("dem_path");
    c.routes_path = path("routes_path");
    if (auto v = r.take<std::vector<double>>("bbox")) {
        if (v->size() != 4)
            throw Error(Errc::invalid_input, "bbox needs 4 numbers: min_lon, min_lat, max_lon, max_lat");
        c.bbox = GeoBBox::make((*v)[0], (*v)[1], (*v)[2], (*v)[3]);
    } else {
        throw Error(Errc::invalid_input, "bbox is required");
    }
    if (auto v = r.take<std::string>("output_dir"))
        c.output_dir = *v;
    if (!std::filesystem::path(c.output_dir).is_absolute() && !base_dir.empty())
        c.output_dir = (base_dir / c.output_dir).lexically_normal().string();
    if (auto v = r.take<std::string>("sampling_mode"))
        c.sampling_mode = parse_sampling_mode(*v);
    if (auto v = r.take<int>("max_smooth_iters"))
        c.max_smooth_iters = *v;
    if (auto v = r.take<std::string>("report_timestamp"))
        c.report_timestamp = *v;

    if (auto v = r.take<double>("limits.highway"))
        c.limits.highway = *v;
    if (auto v = r.take<double>("limits.arterial"))
        c.limits.arterial = *v;
    if (auto v = r.take<double>("limits.residential"))
        c.limits.residential = *v;

    if (auto v = r.take<double>("sync.dt"))
        c.sync.dt = *v;
    if (auto v = r.take<double>("sync.threshold"))
        c.sync.resync_threshold = *v;
    if (auto v = r.take<std::int64_t>("sync.max_steps"))
        c.sync.max_steps = *v;
    if (auto v = r.take<double>("sync.snap_distance"))
        c.sync.snap_distance = *v;
    if (auto v = r.take<std::uint64_t>("sync.seed"))
        c.sync.seed = *v;
    if (auto v = r.take<double>("sync.speed_noise"))
        c.sync.speed_noise = *v;
    if (auto v = r.take<double>("sync.drift_per_step"))
        c.sync.drift_per_step = *v;
    if (auto v = r.take<std::int64_t>("sync.fault_at"))
        c.sync.fault_at = *v;
    if (auto v = r.take<double>("sync.fault_offset"))
        c.sync.fault_offset = *v;

    if (auto v = r.take<double>("validate.min_compliance_pct"))
        c.min_compliance_pct = *v;
    c.truth_dem = path("validate.truth_dem");
    r.finish();
    return c;
}

/// Read, parse and validate a config file.
inline ProjectConfig load_config(const std::string& file)
{
    if (!std::filesystem::is_regular_file(file))
        throw Error(Errc::invalid_input, "config file does not exist: " + file);
    const auto base = std::filesystem::path(file).parent_path();
    ProjectConfig c = parse_config(read_file(file), base);
    c.source = file;
    c.validate();
    return c;
}

} // namespace terra3d
