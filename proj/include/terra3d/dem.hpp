#pragma once

// Regular-grid elevation rasters: ESRI ASCII grid parsing and point sampling.
//
// Node (col, row) sits at (origin_x + col * spacing, origin_y + row * spacing);
// row 0 is the southern edge. Sampling uses the four corners of the enclosing
// cell, weighted by normalized inverse distance, or bilinear weights when
// requested.

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "terra3d/error.hpp"

namespace terra3d {

enum class SamplingMode { idw4, bilinear };

inline const char* to_string(SamplingMode mode)
{
    return mode == SamplingMode::idw4 ? "idw4" : "bilinear";
}

inline SamplingMode parse_sampling_mode(std::string_view text)
{
    if (text == "idw4")
        return SamplingMode::idw4;
    if (text == "bilinear")
        return SamplingMode::bilinear;
    throw Error(Errc::invalid_input, "unknown sampling mode '" + std::string(text) + "'");
}

class DemGrid {
public:
    DemGrid() = default;

    DemGrid(double origin_x, double origin_y, double spacing, int ncols, int nrows,
            std::vector<double> values, std::optional<double> nodata = std::nullopt)
        : origin_x_(origin_x), origin_y_(origin_y), spacing_(spacing), ncols_(ncols),
          nrows_(nrows), values_(std::move(values)), nodata_(nodata)
    {
        if (!(spacing_ > 0.0) || !std::isfinite(spacing_))
            throw Error(Errc::invalid_input, "grid spacing must be positive");
        if (ncols_ < 2 || nrows_ < 2)
            throw Error(Errc::invalid_input, "grid needs at least 2x2 nodes");
        if (values_.size() != static_cast<std::size_t>(ncols_) * static_cast<std::size_t>(nrows_))
            throw Error(Errc::invalid_input, "grid value count does not match ncols * nrows");
        if (!std::isfinite(origin_x_) || !std::isfinite(origin_y_))
            throw Error(Errc::invalid_input, "grid origin must be finite");
    }

    double origin_x() const { return origin_x_; }
    double origin_y() const { return origin_y_; }
    double spacing() const { return spacing_; }
    int ncols() const { return ncols_; }
    int nrows() const { return nrows_; }
    const std::vector<double>& values() const { return values_; }
    std::optional<double> nodata() const { return nodata_; }

    double max_x() const { return origin_x_ + (ncols_ - 1) * spacing_; }
    double max_y() const { return origin_y_ + (nrows_ - 1) * spacing_; }

    double node_x(int col) const { return origin_x_ + col * spacing_; }
    double node_y(int row) const { return origin_y_ + row * spacing_; }

    double at(int col, int row) const
    {
        return values_[static_cast<std::size_t>(row) * ncols_ + col];
    }

    bool is_nodata(double v) const
    {
        if (std::isnan(v))
            return true;
        return nodata_ && v == *nodata_;
    }

    bool contains(double x, double y) const
    {
        constexpr double slack = 1e-9;
        return x >= origin_x_ - slack && x <= max_x() + slack && y >= origin_y_ - slack
            && y <= max_y() + slack;
    }

private:
    double origin_x_ = 0.0;
    double origin_y_ = 0.0;
    double spacing_ = 1.0;
    int ncols_ = 0;
    int nrows_ = 0;
    std::vector<double> values_;
    std::optional<double> nodata_;
};

struct GridNode {
    int col = 0;
    int row = 0;
    friend bool operator==(const GridNode&, const GridNode&) = default;
};

struct InterpolationStencil {
    std::array<GridNode, 4> cells{};
    std::array<double, 4> distances{};
    std::array<double, 4> weights{};
};

namespace detail {

inline double parse_number(std::string_view token, std::string_view context)
{
    double value = 0.0;
    const char* first = token.data();
    const char* last = token.data() + token.size();
    if (!token.empty() && *first == '+')
        ++first;
    auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec != std::errc() || ptr != last)
        throw Error(Errc::invalid_input,
                    "non-numeric token '" + std::string(token) + "' in " + std::string(context));
    return value;
}

inline std::string lowercase(std::string_view s)
{
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

// Lower-left corner cell index in [0, n - 2] for a coordinate offset measured in cells.
inline int cell_index(double f, int n)
{
    int i = static_cast<int>(std::floor(f));
    return std::clamp(i, 0, n - 2);
}

} // namespace detail

/// Parses an ESRI ASCII grid. The first data line is the northernmost row.
inline DemGrid parse_ascii_grid(std::string_view text)
{
    std::istringstream in{std::string(text)};
    std::optional<double> ncols, nrows, xll, yll, cellsize, nodata;
    bool x_corner = false, y_corner = false;

    // Header lines are "key value"; the first token that is not a known key starts the data.
    std::string token;
    std::streampos data_start = in.tellg();
    while (in >> token) {
        const std::string key = detail::lowercase(token);
        const bool known = key == "ncols" || key == "nrows" || key == "xllcorner"
            || key == "xllcenter" || key == "yllcorner" || key == "yllcenter" || key == "cellsize"
            || key == "nodata_value";
        if (!known) {
            in.clear();
            in.seekg(data_start);
            break;
        }
        std::string value;
        if (!(in >> value))
            throw Error(Errc::invalid_input, "header key '" + token + "' has no value");
        const double v = detail::parse_number(value, "header key " + key);
        if (key == "ncols")
            ncols = v;
        else if (key == "nrows")
            nrows = v;
        else if (key == "xllcorner" || key == "xllcenter") {
            xll = v;
            x_corner = key == "xllcorner";
        } else if (key == "yllcorner" || key == "yllcenter") {
            yll = v;
            y_corner = key == "yllcorner";
        } else if (key == "cellsize")
            cellsize = v;
        else
            nodata = v;
        data_start = in.tellg();
    }

    auto require = [](const std::optional<double>& v, const char* key) {
        if (!v)
            throw Error(Errc::invalid_input, std::string("missing header key ") + key);
        return *v;
    };
    const double nc = require(ncols, "ncols");
    const double nr = require(nrows, "nrows");
    const double x0 = require(xll, "xllcorner/xllcenter");
    const double y0 = require(yll, "yllcorner/yllcenter");
    const double cs = require(cellsize, "cellsize");
    if (!(cs > 0.0))
        throw Error(Errc::invalid_input, "cellsize must be positive");
    if (nc != std::floor(nc) || nr != std::floor(nr) || nc < 1 || nr < 1)
        throw Error(Errc::invalid_input, "ncols/nrows must be positive integers");

    const int cols = static_cast<int>(nc);
    const int rows = static_cast<int>(nr);
    std::vector<double> values(static_cast<std::size_t>(cols) * rows);

    std::string line;
    std::getline(in, line); // rest of the last header line, if any
    int file_row = 0;
    auto consume_line = [&](const std::string& l) {
        std::istringstream ls(l);
        std::string t;
        std::vector<double> row_values;
        while (ls >> t)
            row_values.push_back(detail::parse_number(t, "data row " + std::to_string(file_row + 1)));
        if (row_values.empty())
            return;
        if (file_row >= rows)
            throw Error(Errc::invalid_input, "count mismatch: more than nrows data rows");
        if (static_cast<int>(row_values.size()) != cols)
            throw Error(Errc::invalid_input,
                        "count mismatch: data row " + std::to_string(file_row + 1) + " has "
                            + std::to_string(row_values.size()) + " values, expected "
                            + std::to_string(cols));
        const int grid_row = rows - 1 - file_row;
        std::copy(row_values.begin(), row_values.end(),
                  values.begin() + static_cast<std::ptrdiff_t>(grid_row) * cols);
        ++file_row;
    };
    if (!line.empty())
        consume_line(line);
    while (std::getline(in, line))
        consume_line(line);
    if (file_row != rows)
        throw Error(Errc::invalid_input, "count mismatch: expected " + std::to_string(rows)
                                             + " data rows, found " + std::to_string(file_row));

    const double ox = x_corner ? x0 + cs / 2.0 : x0;
    const double oy = y_corner ? y0 + cs / 2.0 : y0;
    return DemGrid(ox, oy, cs, cols, rows, std::move(values), nodata);
}

inline DemGrid load_ascii_grid(const std::string& path)
{
    std::ifstream f(path, std::ios::binary);
    if (!f)
        throw Error(Errc::io, "cannot open DEM file " + path);
    std::ostringstream ss;
    ss << f.rdbuf();
    return parse_ascii_grid(ss.str());
}

/// Writes the grid in xllcenter/yllcenter form, full round-trip precision.
inline std::string write_ascii_grid(const DemGrid& grid)
{
    std::string out;
    auto num = [](double v) {
        char buf[64];
        auto res = std::to_chars(buf, buf + sizeof buf, v);
        return std::string(buf, res.ptr);
    };
    out += "ncols " + std::to_string(grid.ncols()) + "\n";
    out += "nrows " + std::to_string(grid.nrows()) + "\n";
    out += "xllcenter " + num(grid.origin_x()) + "\n";
    out += "yllcenter " + num(grid.origin_y()) + "\n";
    out += "cellsize " + num(grid.spacing()) + "\n";
    if (grid.nodata())
        out += "NODATA_value " + num(*grid.nodata()) + "\n";
    for (int row = grid.nrows() - 1; row >= 0; --row) {
        for (int col = 0; col < grid.ncols(); ++col) {
            if (col)
                out += ' ';
            out += num(grid.at(col, row));
        }
        out += '\n';
    }
    return out;
}

namespace detail {

inline void check_extent(const DemGrid& grid, double x, double y)
{
    if (!std::isfinite(x) || !std::isfinite(y) || !grid.contains(x, y))
        throw Error(Errc::out_of_extent,
                    "query (" + std::to_string(x) + ", " + std::to_string(y)
                        + ") outside DEM extent");
}

inline std::array<GridNode, 4> enclosing_cell(const DemGrid& grid, double x, double y)
{
    const double fx = (x - grid.origin_x()) / grid.spacing();
    const double fy = (y - grid.origin_y()) / grid.spacing();
    const int c = cell_index(fx, grid.ncols());
    const int r = cell_index(fy, grid.nrows());
    // SW, SE, NW, NE
    return {GridNode{c, r}, GridNode{c + 1, r}, GridNode{c, r + 1}, GridNode{c + 1, r + 1}};
}

inline void check_nodata(const DemGrid& grid, const std::array<GridNode, 4>& cells)
{
    for (const auto& n : cells) {
        if (grid.is_nodata(grid.at(n.col, n.row)))
            throw Error(Errc::nodata, "nodata value at grid node (" + std::to_string(n.col) + ", "
                                          + std::to_string(n.row) + ")");
    }
}

} // namespace detail

/// Distance below which a query counts as sitting on a grid node.
inline constexpr double kExactHitDistance = 1e-9;

/// Four-corner inverse-distance stencil: w_j = (1/d_j) / sum_k (1/d_k).
inline InterpolationStencil stencil_for(const DemGrid& grid, double x, double y)
{
    detail::check_extent(grid, x, y);
    InterpolationStencil s;
    s.cells = detail::enclosing_cell(grid, x, y);
    detail::check_nodata(grid, s.cells);

    for (int j = 0; j < 4; ++j) {
        // Offsets from the grid origin keep precision when coordinates are UTM-sized.
        const double dx = (x - grid.origin_x()) - s.cells[j].col * grid.spacing();
        const double dy = (y - grid.origin_y()) - s.cells[j].row * grid.spacing();
        s.distances[j] = std::hypot(dx, dy);
    }

    const auto nearest = std::min_element(s.distances.begin(), s.distances.end());
    if (*nearest < kExactHitDistance) {
        s.weights = {0.0, 0.0, 0.0, 0.0};
        s.weights[static_cast<std::size_t>(nearest - s.distances.begin())] = 1.0;
        return s;
    }

    double inv_sum = 0.0;
    for (double d : s.distances)
        inv_sum += 1.0 / d;
    for (int j = 0; j < 4; ++j)
        s.weights[j] = (1.0 / s.distances[j]) / inv_sum;
    return s;
}

inline double sample_idw(const DemGrid& grid, double x, double y)
{
    const InterpolationStencil s = stencil_for(grid, x, y);
    double z = 0.0;
    for (int j = 0; j < 4; ++j)
        z += s.weights[j] * grid.at(s.cells[j].col, s.cells[j].row);
    return z;
}

inline double sample_bilinear(const DemGrid& grid, double x, double y)
{
    detail::check_extent(grid, x, y);
    const auto cells = detail::enclosing_cell(grid, x, y);
    detail::check_nodata(grid, cells);
    const double u = std::clamp((x - grid.origin_x()) / grid.spacing() - cells[0].col, 0.0, 1.0);
    const double v = std::clamp((y - grid.origin_y()) / grid.spacing() - cells[0].row, 0.0, 1.0);
    const double z00 = grid.at(cells[0].col, cells[0].row);
    const double z10 = grid.at(cells[1].col, cells[1].row);
    const double z01 = grid.at(cells[2].col, cells[2].row);
    const double z11 = grid.at(cells[3].col, cells[3].row);
    return (1.0 - u) * (1.0 - v) * z00 + u * (1.0 - v) * z10 + (1.0 - u) * v * z01 + u * v * z11;
}

inline double sample(const DemGrid& grid, double x, double y,
                     SamplingMode mode = SamplingMode::idw4)
{
    return mode == SamplingMode::idw4 ? sample_idw(grid, x, y) : sample_bilinear(grid, x, y);
}

/// Samples a grid with coordinates given in a local frame offset from the grid's frame.
struct TerrainSampler {
    const DemGrid* grid = nullptr;
    SamplingMode mode = SamplingMode::idw4;
    double offset_x = 0.0;
    double offset_y = 0.0;

    bool contains(double x, double y) const { return grid->contains(x + offset_x, y + offset_y); }
    double operator()(double x, double y) const
    {
        return sample(*grid, x + offset_x, y + offset_y, mode);
    }
};

} // namespace terra3d
