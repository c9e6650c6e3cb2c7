#pragma once

// WGS84 <-> UTM projection and the project-local Cartesian frame.
//
// The transverse Mercator implementation uses the Krueger series to sixth
// order in the third flattening, which is accurate to a few nanometres
// within the UTM band.

#include <array>
#include <cmath>
#include <numbers>
#include <string>

#include "terra3d/error.hpp"

namespace terra3d {

enum class Hemisphere { north, south };

struct GeoPointWgs {
    double lat = 0.0; // degrees
    double lon = 0.0; // degrees

    static GeoPointWgs make(double lat, double lon)
    {
        if (!std::isfinite(lat) || !std::isfinite(lon))
            throw Error(Errc::invalid_input, "non-finite geographic coordinate");
        if (lat < -90.0 || lat > 90.0)
            throw Error(Errc::out_of_range, "latitude out of [-90, 90]: " + std::to_string(lat));
        if (lon < -180.0 || lon >= 180.0)
            throw Error(Errc::out_of_range, "longitude out of [-180, 180): " + std::to_string(lon));
        return {lat, lon};
    }
};

struct UtmPoint {
    double easting = 0.0;
    double northing = 0.0;
    int zone = 0;
    Hemisphere hemisphere = Hemisphere::north;
};

struct Point2 {
    double x = 0.0;
    double y = 0.0;

    friend bool operator==(const Point2&, const Point2&) = default;
};

struct Point3D {
    double x = 0.0; // easting, m
    double y = 0.0; // northing, m
    double z = 0.0; // elevation, m

    Point2 xy() const { return {x, y}; }
    friend bool operator==(const Point3D&, const Point3D&) = default;
};

inline double distance(Point2 a, Point2 b) { return std::hypot(b.x - a.x, b.y - a.y); }

inline double distance(const Point3D& a, const Point3D& b)
{
    const double dx = b.x - a.x, dy = b.y - a.y, dz = b.z - a.z;
    return std::sqrt(dx * dx + dy * dy + dz * dz);
}

/// Standard 6-degree zone number, floor((lon + 180) / 6) + 1.
inline int utm_zone(double lon)
{
    if (!std::isfinite(lon) || lon < -180.0 || lon >= 180.0)
        throw Error(Errc::out_of_range, "longitude out of [-180, 180): " + std::to_string(lon));
    int zone = static_cast<int>(std::floor((lon + 180.0) / 6.0)) + 1;
    // lon + 180 can round up onto the next boundary; zone edges are exact doubles
    if (zone > 1 && lon < zone * 6.0 - 186.0)
        --zone;
    return zone > 60 ? 60 : zone;
}

inline double central_meridian(int zone) { return zone * 6.0 - 183.0; }

namespace detail {

struct TmSeries {
    static constexpr double a = 6378137.0;
    static constexpr double f = 1.0 / 298.257223563;
    static constexpr double k0 = 0.9996;
    static constexpr double false_easting = 500000.0;
    static constexpr double false_northing_south = 10000000.0;

    double e = 0.0;            // first eccentricity
    double rectifying = 0.0;   // k0 * A, meters per radian of xi/eta
    std::array<double, 6> alpha{};
    std::array<double, 6> beta{};

    TmSeries()
    {
        const double n = f / (2.0 - f);
        const double n2 = n * n, n3 = n2 * n, n4 = n3 * n, n5 = n4 * n, n6 = n5 * n;
        e = std::sqrt(f * (2.0 - f));
        rectifying = k0 * a / (1.0 + n) * (1.0 + n2 / 4.0 + n4 / 64.0 + n6 / 256.0);

        alpha = {
            n / 2.0 - 2.0 / 3.0 * n2 + 5.0 / 16.0 * n3 + 41.0 / 180.0 * n4 - 127.0 / 288.0 * n5
                + 7891.0 / 37800.0 * n6,
            13.0 / 48.0 * n2 - 3.0 / 5.0 * n3 + 557.0 / 1440.0 * n4 + 281.0 / 630.0 * n5
                - 1983433.0 / 1935360.0 * n6,
            61.0 / 240.0 * n3 - 103.0 / 140.0 * n4 + 15061.0 / 26880.0 * n5 + 167603.0 / 181440.0 * n6,
            49561.0 / 161280.0 * n4 - 179.0 / 168.0 * n5 + 6601661.0 / 7257600.0 * n6,
            34729.0 / 80640.0 * n5 - 3418889.0 / 1995840.0 * n6,
            212378941.0 / 319334400.0 * n6,
        };
        beta = {
            n / 2.0 - 2.0 / 3.0 * n2 + 37.0 / 96.0 * n3 - 1.0 / 360.0 * n4 - 81.0 / 512.0 * n5
                + 96199.0 / 604800.0 * n6,
            1.0 / 48.0 * n2 + 1.0 / 15.0 * n3 - 437.0 / 1440.0 * n4 + 46.0 / 105.0 * n5
                - 1118711.0 / 3870720.0 * n6,
            17.0 / 480.0 * n3 - 37.0 / 840.0 * n4 - 209.0 / 4480.0 * n5 + 5569.0 / 90720.0 * n6,
            4397.0 / 161280.0 * n4 - 11.0 / 504.0 * n5 - 830251.0 / 7257600.0 * n6,
            4583.0 / 161280.0 * n5 - 108847.0 / 3991680.0 * n6,
            20648693.0 / 638668800.0 * n6,
        };
    }

    // tan(conformal latitude) from tan(geodetic latitude).
    double conformal_tan(double tau) const
    {
        const double sigma = std::sinh(e * std::atanh(e * tau / std::hypot(1.0, tau)));
        return tau * std::hypot(1.0, sigma) - sigma * std::hypot(1.0, tau);
    }

    // Inverse of conformal_tan by Newton iteration.
    double geodetic_tan(double taup) const
    {
        const double e2m = 1.0 - e * e;
        double tau = taup / e2m;
        for (int i = 0; i < 10; ++i) {
            const double taupa = conformal_tan(tau);
            const double dtau = (taup - taupa) * (1.0 + e2m * tau * tau)
                / (e2m * std::hypot(1.0, tau) * std::hypot(1.0, taupa));
            tau += dtau;
            if (std::abs(dtau) < 1e-15 * std::max(1.0, std::abs(tau)))
                break;
        }
        return tau;
    }
};

inline const TmSeries& tm_series()
{
    static const TmSeries series;
    return series;
}

constexpr double deg = std::numbers::pi / 180.0;

} // namespace detail

/// Project into an explicit zone. Used to keep a whole project in one frame.
inline UtmPoint wgs84_to_utm(const GeoPointWgs& p, int zone)
{
    const GeoPointWgs q = GeoPointWgs::make(p.lat, p.lon);
    if (std::abs(q.lat) > 84.0)
        throw Error(Errc::out_of_range,
                    "latitude beyond transverse Mercator validity band: " + std::to_string(q.lat));
    if (zone < 1 || zone > 60)
        throw Error(Errc::out_of_range, "UTM zone out of [1, 60]: " + std::to_string(zone));

    const auto& tm = detail::tm_series();
    double dlon = q.lon - central_meridian(zone);
    if (dlon < -180.0)
        dlon += 360.0;
    else if (dlon >= 180.0)
        dlon -= 360.0;

    const double phi = q.lat * detail::deg;
    const double lam = dlon * detail::deg;
    const double taup = tm.conformal_tan(std::tan(phi));
    const double xip = std::atan2(taup, std::cos(lam));
    const double etap = std::asinh(std::sin(lam) / std::hypot(taup, std::cos(lam)));

    double xi = xip, eta = etap;
    for (int j = 1; j <= 6; ++j) {
        const double a = tm.alpha[j - 1];
        xi += a * std::sin(2.0 * j * xip) * std::cosh(2.0 * j * etap);
        eta += a * std::cos(2.0 * j * xip) * std::sinh(2.0 * j * etap);
    }

    UtmPoint out;
    out.zone = zone;
    out.hemisphere = q.lat < 0.0 ? Hemisphere::south : Hemisphere::north;
    out.easting = tm.false_easting + tm.rectifying * eta;
    out.northing = tm.rectifying * xi;
    if (out.hemisphere == Hemisphere::south)
        out.northing += tm.false_northing_south;
    return out;
}

inline UtmPoint wgs84_to_utm(const GeoPointWgs& p) { return wgs84_to_utm(p, utm_zone(p.lon)); }

inline GeoPointWgs utm_to_wgs84(const UtmPoint& p)
{
    if (p.zone < 1 || p.zone > 60)
        throw Error(Errc::out_of_range, "UTM zone out of [1, 60]: " + std::to_string(p.zone));
    if (!std::isfinite(p.easting) || !std::isfinite(p.northing))
        throw Error(Errc::invalid_input, "non-finite UTM coordinate");

    const auto& tm = detail::tm_series();
    const double northing =
        p.hemisphere == Hemisphere::south ? p.northing - tm.false_northing_south : p.northing;
    const double xi = northing / tm.rectifying;
    const double eta = (p.easting - tm.false_easting) / tm.rectifying;

    double xip = xi, etap = eta;
    for (int j = 1; j <= 6; ++j) {
        const double b = tm.beta[j - 1];
        xip -= b * std::sin(2.0 * j * xi) * std::cosh(2.0 * j * eta);
        etap -= b * std::cos(2.0 * j * xi) * std::sinh(2.0 * j * eta);
    }

    const double taup = std::sin(xip) / std::hypot(std::sinh(etap), std::cos(xip));
    const double lam = std::atan2(std::sinh(etap), std::cos(xip));
    const double phi = std::atan(tm.geodetic_tan(taup));

    double lon = central_meridian(p.zone) + lam / detail::deg;
    if (lon >= 180.0)
        lon -= 360.0;
    else if (lon < -180.0)
        lon += 360.0;
    return {phi / detail::deg, lon};
}

/// A metric frame anchored at a UTM origin. All points of a project share it.
struct LocalFrame {
    UtmPoint origin;

    static LocalFrame at(const UtmPoint& origin)
    {
        if (origin.zone < 1 || origin.zone > 60)
            throw Error(Errc::out_of_range, "frame origin zone out of range");
        if (!(origin.easting > 0.0 && origin.easting < 1e6))
            throw Error(Errc::out_of_range, "frame origin easting out of (0, 1e6)");
        return LocalFrame{origin};
    }
};

inline Point3D to_local(const UtmPoint& p, const LocalFrame& frame)
{
    if (p.zone != frame.origin.zone || p.hemisphere != frame.origin.hemisphere)
        throw Error(Errc::zone_mismatch,
                    "point in zone " + std::to_string(p.zone) + " cannot enter a zone "
                        + std::to_string(frame.origin.zone) + " frame");
    return {p.easting - frame.origin.easting, p.northing - frame.origin.northing, 0.0};
}

inline UtmPoint from_local(Point2 p, const LocalFrame& frame)
{
    return {p.x + frame.origin.easting, p.y + frame.origin.northing, frame.origin.zone,
            frame.origin.hemisphere};
}

inline GeoPointWgs local_to_wgs84(Point2 p, const LocalFrame& frame)
{
    return utm_to_wgs84(from_local(p, frame));
}

inline Point2 wgs84_to_local(const GeoPointWgs& p, const LocalFrame& frame)
{
    const Point3D q = to_local(wgs84_to_utm(p, frame.origin.zone), frame);
    return {q.x, q.y};
}

/// WGS84 rectangle given as (min_lon, min_lat, max_lon, max_lat).
struct GeoBBox {
    double min_lon = 0.0;
    double min_lat = 0.0;
    double max_lon = 0.0;
    double max_lat = 0.0;

    static GeoBBox make(double min_lon, double min_lat, double max_lon, double max_lat)
    {
        GeoPointWgs::make(min_lat, min_lon);
        GeoPointWgs::make(max_lat, max_lon);
        if (!(min_lon < max_lon) || !(min_lat < max_lat))
            throw Error(Errc::invalid_input, "bounding box must have min < max on both axes");
        return {min_lon, min_lat, max_lon, max_lat};
    }

    bool contains(const GeoPointWgs& p) const
    {
        return p.lon >= min_lon && p.lon <= max_lon && p.lat >= min_lat && p.lat <= max_lat;
    }
};

/// Project frame: one UTM zone, origin at the southwest corner of the box.
/// Boxes that straddle a zone boundary are rejected.
inline LocalFrame frame_for(const GeoBBox& box)
{
    const int zone = utm_zone(box.min_lon);
    // max_lon sitting exactly on the next zone's meridian still belongs to this zone
    const double east_edge = std::nextafter(box.max_lon, box.min_lon);
    if (utm_zone(east_edge) != zone)
        throw Error(Errc::zone_mismatch, "bounding box spans a UTM zone boundary");
    return LocalFrame::at(wgs84_to_utm(GeoPointWgs::make(box.min_lat, box.min_lon), zone));
}

} // namespace terra3d
