#pragma once

// Structural check of the OpenDRIVE 1.4 subset this project writes: header,
// road, planView, elevationProfile, lanes and junction. Returns a list of
// violations; an empty list means the document conforms.

#include <charconv>
#include <cmath>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "terra3d/xml.hpp"

namespace terra3d {

namespace detail {

inline std::optional<double> number_attr(const xml::Element& e, std::string_view key)
{
    const std::string* v = e.attr(key);
    if (!v)
        return std::nullopt;
    double out = 0.0;
    auto [p, ec] = std::from_chars(v->data(), v->data() + v->size(), out);
    if (ec != std::errc() || p != v->data() + v->size() || !std::isfinite(out))
        return std::nullopt;
    return out;
}

} // namespace detail

inline std::vector<std::string> check_opendrive(std::string_view document)
{
    std::vector<std::string> issues;
    xml::Element root;
    try {
        root = xml::parse(document);
    } catch (const Error& e) {
        return {e.what()};
    }
    if (root.name != "OpenDRIVE")
        return {"root element is <" + root.name + ">, expected <OpenDRIVE>"};

    const auto headers = root.children_named("header");
    if (headers.size() != 1) {
        issues.push_back("expected exactly one <header>");
    } else {
        const auto* h = headers.front();
        if (!h->attr("revMajor") || *h->attr("revMajor") != "1")
            issues.push_back("header revMajor must be 1");
        if (!h->attr("revMinor") || *h->attr("revMinor") != "4")
            issues.push_back("header revMinor must be 4");
        for (const char* k : {"north", "south", "east", "west"})
            if (!detail::number_attr(*h, k))
                issues.push_back(std::string("header missing numeric ") + k);
    }

    std::set<std::string> junction_ids;
    for (const auto* j : root.children_named("junction")) {
        const std::string* id = j->attr("id");
        if (!id || id->empty())
            issues.push_back("junction without id");
        else if (!junction_ids.insert(*id).second)
            issues.push_back("duplicate junction id " + *id);
    }

    const auto roads = root.children_named("road");
    std::set<std::string> road_ids;
    for (const auto* r : roads)
        if (const std::string* id = r->attr("id"))
            road_ids.insert(*id);

    for (const auto* r : roads) {
        const std::string* id_attr = r->attr("id");
        const std::string rid = id_attr ? *id_attr : "?";
        const std::string where = "road " + rid + ": ";
        if (!id_attr || id_attr->empty())
            issues.push_back("road without id");
        const auto length = detail::number_attr(*r, "length");
        if (!length || *length <= 0.0)
            issues.push_back(where + "length must be positive");
        if (!r->attr("junction"))
            issues.push_back(where + "missing junction attribute");

        if (const auto* link = r->child("link")) {
            for (const auto* kind : {"predecessor", "successor"}) {
                for (const auto* l : link->children_named(kind)) {
                    const std::string* type = l->attr("elementType");
                    const std::string* eid = l->attr("elementId");
                    if (!type || !eid) {
                        issues.push_back(where + kind + " needs elementType and elementId");
                        continue;
                    }
                    const bool ok = *type == "junction" ? junction_ids.count(*eid) > 0
                        : *type == "road"               ? road_ids.count(*eid) > 0
                                                        : false;
                    if (!ok)
                        issues.push_back(where + kind + " references unknown " + *type + " " + *eid);
                }
            }
        }

        const auto* plan = r->child("planView");
        if (!plan) {
            issues.push_back(where + "missing planView");
        } else {
            const auto geoms = plan->children_named("geometry");
            if (geoms.empty())
                issues.push_back(where + "planView has no geometry");
            double expected_s = 0.0;
            double total = 0.0;
            for (const auto* g : geoms) {
                const auto s = detail::number_attr(*g, "s");
                const auto len = detail::number_attr(*g, "length");
                if (!s || !len || !detail::number_attr(*g, "x") || !detail::number_attr(*g, "y")
                    || !detail::number_attr(*g, "hdg")) {
                    issues.push_back(where + "geometry needs numeric s, x, y, hdg, length");
                    continue;
                }
                if (*len <= 0.0)
                    issues.push_back(where + "geometry with non-positive length");
                if (std::abs(*s - expected_s) > 1e-6)
                    issues.push_back(where + "geometry s values are not contiguous");
                if (g->children.size() != 1 || g->children.front().name != "line")
                    issues.push_back(where + "geometry must hold exactly one <line/>");
                expected_s = *s + *len;
                total += *len;
            }
            if (length && std::abs(total - *length) > 1e-6)
                issues.push_back(where + "planView lengths do not sum to road length");
        }

        if (const auto* ep = r->child("elevationProfile")) {
            double prev = -1.0;
            bool first = true;
            for (const auto* e : ep->children_named("elevation")) {
                const auto s = detail::number_attr(*e, "s");
                if (!s || !detail::number_attr(*e, "a") || !detail::number_attr(*e, "b")
                    || !detail::number_attr(*e, "c") || !detail::number_attr(*e, "d")) {
                    issues.push_back(where + "elevation needs numeric s, a, b, c, d");
                    continue;
                }
                if (first && *s != 0.0)
                    issues.push_back(where + "first elevation record must start at s = 0");
                if (!first && !(*s > prev))
                    issues.push_back(where + "elevation s values must increase");
                if (length && *s > *length + 1e-6)
                    issues.push_back(where + "elevation record beyond road length");
                prev = *s;
                first = false;
            }
            if (first)
                issues.push_back(where + "elevationProfile is empty");
        } else {
            issues.push_back(where + "missing elevationProfile");
        }

        const auto* lanes = r->child("lanes");
        const auto sections = lanes ? lanes->children_named("laneSection")
                                    : std::vector<const xml::Element*>{};
        if (sections.empty()) {
            issues.push_back(where + "missing lanes/laneSection");
        }
        for (const auto* sec : sections) {
            const auto* center = sec->child("center");
            bool has_center = false;
            if (center)
                for (const auto* l : center->children_named("lane"))
                    has_center = has_center || (l->attr("id") && *l->attr("id") == "0");
            if (!has_center)
                issues.push_back(where + "laneSection needs a center lane with id 0");
            std::size_t driving = 0;
            for (const auto* side : {"left", "right"}) {
                if (const auto* s = sec->child(side)) {
                    for (const auto* l : s->children_named("lane")) {
                        const auto lid = detail::number_attr(*l, "id");
                        if (!lid || *lid == 0.0 || ((*side == 'l') != (*lid > 0)))
                            issues.push_back(where + "lane id sign does not match its side");
                        const auto* w = l->child("width");
                        if (!w || !detail::number_attr(*w, "a") || *detail::number_attr(*w, "a") <= 0.0)
                            issues.push_back(where + "lane needs a positive width");
                        ++driving;
                    }
                }
            }
            if (driving == 0)
                issues.push_back(where + "laneSection has no driving lanes");
        }
    }
    return issues;
}

} // namespace terra3d
