#pragma once

// Small XML toolkit: escaping and fixed-point formatting for the writers, and
// an expat-backed DOM for reading documents back.

#include <expat.h>

#include <charconv>
#include <cmath>
#include <memory>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "terra3d/error.hpp"

namespace terra3d {

/// Fixed-point decimal with `digits` fractional digits; "-0.000" prints as "0.000".
inline std::string fixed(double value, int digits)
{
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, value, std::chars_format::fixed, digits);
    std::string out(buf, res.ptr);
    if (!out.empty() && out[0] == '-' && out.find_first_not_of("-0.") == std::string::npos)
        out.erase(0, 1);
    return out;
}

inline std::string xml_escape(std::string_view s)
{
    std::string out;
    out.reserve(s.size());
    for (char c : s) {
        switch (c) {
        case '&': out += "&amp;"; break;
        case '<': out += "&lt;"; break;
        case '>': out += "&gt;"; break;
        case '"': out += "&quot;"; break;
        case '\'': out += "&apos;"; break;
        default: out += c;
        }
    }
    return out;
}

namespace xml {

struct Element {
    std::string name;
    std::vector<std::pair<std::string, std::string>> attributes;
    std::vector<Element> children;
    std::string text;

    const std::string* attr(std::string_view key) const
    {
        for (const auto& [k, v] : attributes)
            if (k == key)
                return &v;
        return nullptr;
    }

    std::vector<const Element*> children_named(std::string_view n) const
    {
        std::vector<const Element*> out;
        for (const auto& c : children)
            if (c.name == n)
                out.push_back(&c);
        return out;
    }

    const Element* child(std::string_view n) const
    {
        for (const auto& c : children)
            if (c.name == n)
                return &c;
        return nullptr;
    }
};

namespace detail {

struct DomBuilder {
    Element root;
    std::vector<Element*> stack;
    bool has_root = false;

    static void on_start(void* ud, const XML_Char* name, const XML_Char** atts)
    {
        auto* self = static_cast<DomBuilder*>(ud);
        Element e;
        e.name = name;
        for (int i = 0; atts[i]; i += 2)
            e.attributes.emplace_back(atts[i], atts[i + 1]);
        if (self->stack.empty()) {
            self->root = std::move(e);
            self->has_root = true;
            self->stack.push_back(&self->root);
        } else {
            auto& kids = self->stack.back()->children;
            kids.push_back(std::move(e));
            self->stack.push_back(&kids.back());
        }
    }
    static void on_end(void* ud, const XML_Char*)
    {
        static_cast<DomBuilder*>(ud)->stack.pop_back();
    }
    static void on_text(void* ud, const XML_Char* s, int len)
    {
        auto* self = static_cast<DomBuilder*>(ud);
        if (!self->stack.empty())
            self->stack.back()->text.append(s, static_cast<std::size_t>(len));
    }
};

} // namespace detail

inline Element parse(std::string_view text)
{
    std::unique_ptr<XML_ParserStruct, decltype(&XML_ParserFree)> parser(XML_ParserCreate("UTF-8"),
                                                                         &XML_ParserFree);
    detail::DomBuilder builder;
    XML_SetUserData(parser.get(), &builder);
    XML_SetElementHandler(parser.get(), &detail::DomBuilder::on_start, &detail::DomBuilder::on_end);
    XML_SetCharacterDataHandler(parser.get(), &detail::DomBuilder::on_text);
    if (XML_Parse(parser.get(), text.data(), static_cast<int>(text.size()), XML_TRUE)
        == XML_STATUS_ERROR) {
        throw Error(Errc::invalid_input,
                    std::string("malformed XML at line ")
                        + std::to_string(XML_GetCurrentLineNumber(parser.get())) + ": "
                        + XML_ErrorString(XML_GetErrorCode(parser.get())));
    }
    if (!builder.has_root)
        throw Error(Errc::invalid_input, "XML document has no root element");
    return std::move(builder.root);
}

} // namespace xml
} // namespace terra3d
