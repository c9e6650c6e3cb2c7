#pragma once

#include <stdexcept>
#include <string>

namespace terra3d {

enum class Errc {
    invalid_input,
    out_of_range,
    out_of_extent,
    nodata,
    zone_mismatch,
    degenerate_geometry,
    non_convergence,
    protocol_violation,
    io,
};

inline const char* to_string(Errc code)
{
    switch (code) {
    case Errc::invalid_input: return "invalid_input";
    case Errc::out_of_range: return "out_of_range";
    case Errc::out_of_extent: return "out_of_extent";
    case Errc::nodata: return "nodata";
    case Errc::zone_mismatch: return "zone_mismatch";
    case Errc::degenerate_geometry: return "degenerate_geometry";
    case Errc::non_convergence: return "non_convergence";
    case Errc::protocol_violation: return "protocol_violation";
    case Errc::io: return "io";
    }
    return "unknown";
}

/// Single exception type for the library; `code()` tells callers what went wrong.
class Error : public std::runtime_error {
public:
    Error(Errc code, const std::string& what) : std::runtime_error(what), code_(code) {}

    Errc code() const noexcept { return code_; }

private:
    Errc code_;
};

} // namespace terra3d
