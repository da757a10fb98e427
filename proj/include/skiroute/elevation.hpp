#pragma once

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <cstddef>
#include <fstream>
#include <iomanip>
#include <istream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "skiroute/error.hpp"
#include "skiroute/geo.hpp"

namespace skiroute {

/// Regular lon/lat elevation raster. `origin` is the lower-left corner of the
/// lower-left cell; `values` are row-major with the top row first (ESRI order).
struct ElevationGrid {
  GeoPoint origin;
  double cell_size = 0.0;  // degrees
  std::size_t ncols = 0;
  std::size_t nrows = 0;
  double nodata = -9999.0;
  std::vector<double> values;

  double at(std::size_t col, std::size_t row) const { return values[row * ncols + col]; }
  bool is_nodata(double v) const { return v == nodata || !std::isfinite(v); }

  double min_lon() const { return origin.lon; }
  double min_lat() const { return origin.lat; }
  double max_lon() const { return origin.lon + cell_size * static_cast<double>(ncols); }
  double max_lat() const { return origin.lat + cell_size * static_cast<double>(nrows); }

  bool contains(const GeoPoint& p) const {
    return p.lon >= min_lon() && p.lon <= max_lon() && p.lat >= min_lat() && p.lat <= max_lat();
  }

  // Center of cell (col, row) with row 0 the top row.
  GeoPoint cell_center(std::size_t col, std::size_t row) const {
    return {origin.lon + (static_cast<double>(col) + 0.5) * cell_size,
            origin.lat + (static_cast<double>(nrows - row) - 0.5) * cell_size, std::nullopt};
  }

  void check() const {
    if (!(cell_size > 0.0)) throw Error(ErrorCode::InvalidArgument, "cell_size must be positive");
    if (ncols == 0 || nrows == 0 || ncols * nrows != values.size())
      throw Error(ErrorCode::InvalidArgument, "grid dimensions do not match value count");
  }
};

/// Bilinear interpolation between the four cell centers surrounding `p`.
/// Nodata cells drop out and the remaining weights are renormalized. Points
/// between the outermost cell centers and the grid border clamp to the edge.
inline double sample_elevation(const ElevationGrid& grid, const GeoPoint& p) {
  if (!grid.contains(p)) throw Error(ErrorCode::OutOfBounds, "point outside elevation grid");

  const double fx = std::clamp((p.lon - grid.origin.lon) / grid.cell_size - 0.5, 0.0,
                               static_cast<double>(grid.ncols - 1));
  // y measured in rows from the top
  const double fy = std::clamp((grid.max_lat() - p.lat) / grid.cell_size - 0.5, 0.0,
                               static_cast<double>(grid.nrows - 1));
  const auto c0 = static_cast<std::size_t>(std::floor(fx));
  const auto r0 = static_cast<std::size_t>(std::floor(fy));
  const std::size_t c1 = std::min(c0 + 1, grid.ncols - 1);
  const std::size_t r1 = std::min(r0 + 1, grid.nrows - 1);
  const double tx = fx - static_cast<double>(c0);
  const double ty = fy - static_cast<double>(r0);

  const std::array<double, 4> v{grid.at(c0, r0), grid.at(c1, r0), grid.at(c0, r1), grid.at(c1, r1)};
  const std::array<double, 4> w{(1 - tx) * (1 - ty), tx * (1 - ty), (1 - tx) * ty, tx * ty};

  double sum = 0.0;
  double wsum = 0.0;
  int valid = 0;
  double plain = 0.0;
  for (std::size_t i = 0; i < 4; ++i) {
    if (grid.is_nodata(v[i])) continue;
    sum += w[i] * v[i];
    wsum += w[i];
    plain += v[i];
    ++valid;
  }
  if (valid == 0) throw Error(ErrorCode::AllNoData, "all surrounding cells are nodata");
  // p sits on a nodata cell center: every valid neighbour has zero weight.
  if (wsum <= 1e-12) return plain / valid;
  return sum / wsum;
}

namespace detail {
inline std::string upper(std::string s) {
  for (auto& c : s) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  return s;
}
}  // namespace detail

/// Parses an ESRI ASCII grid. Accepts XLLCORNER/YLLCORNER or XLLCENTER/YLLCENTER.
inline ElevationGrid read_esri_ascii(std::istream& in) {
  std::map<std::string, double> header;
  std::string key;
  while (header.size() < 6 && in >> key) {
    const std::string k = detail::upper(key);
    double value = 0.0;
    if (!(in >> value)) throw Error(ErrorCode::ParseError, "bad header value for " + key);
    header[k] = value;
    if (k == "NODATA_VALUE") break;
  }
  auto require = [&](const char* name) {
    auto it = header.find(name);
    if (it == header.end()) throw Error(ErrorCode::ParseError, std::string("missing header ") + name);
    return it->second;
  };
  ElevationGrid grid;
  grid.ncols = static_cast<std::size_t>(require("NCOLS"));
  grid.nrows = static_cast<std::size_t>(require("NROWS"));
  grid.cell_size = require("CELLSIZE");
  grid.nodata = header.count("NODATA_VALUE") ? header["NODATA_VALUE"] : -9999.0;
  if (header.count("XLLCORNER") && header.count("YLLCORNER")) {
    grid.origin = {header["XLLCORNER"], header["YLLCORNER"], std::nullopt};
  } else if (header.count("XLLCENTER") && header.count("YLLCENTER")) {
    grid.origin = {header["XLLCENTER"] - grid.cell_size / 2, header["YLLCENTER"] - grid.cell_size / 2,
                   std::nullopt};
  } else {
    throw Error(ErrorCode::ParseError, "missing XLLCORNER/YLLCORNER");
  }
  grid.values.reserve(grid.ncols * grid.nrows);
  double v = 0.0;
  while (grid.values.size() < grid.ncols * grid.nrows && in >> v) grid.values.push_back(v);
  if (grid.values.size() != grid.ncols * grid.nrows)
    throw Error(ErrorCode::ParseError, "expected " + std::to_string(grid.ncols * grid.nrows) +
                                           " values, got " + std::to_string(grid.values.size()));
  grid.check();
  return grid;
}

inline ElevationGrid read_esri_ascii_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path);
  return read_esri_ascii(in);
}

inline void write_esri_ascii(std::ostream& out, const ElevationGrid& grid) {
  out << std::setprecision(12);
  out << "NCOLS " << grid.ncols << "\nNROWS " << grid.nrows << "\nXLLCORNER " << grid.origin.lon
      << "\nYLLCORNER " << grid.origin.lat << "\nCELLSIZE " << grid.cell_size << "\nNODATA_VALUE "
      << grid.nodata << "\n";
  for (std::size_t r = 0; r < grid.nrows; ++r) {
    for (std::size_t c = 0; c < grid.ncols; ++c) out << (c ? " " : "") << grid.at(c, r);
    out << "\n";
  }
}

}  // namespace skiroute
