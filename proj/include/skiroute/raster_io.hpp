#pragma once

#include <cmath>
#include <algorithm>
#include <csetjmp>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

#include <png.h>

#include "skiroute/error.hpp"
#include "skiroute/trajectory.hpp"

namespace skiroute {

/// 8-bit grayscale bytes of a normalized raster, top row first.
inline std::vector<unsigned char> raster_bytes(const DensityRaster& r) {
  std::vector<unsigned char> out(r.values.size());
  for (std::size_t i = 0; i < r.values.size(); ++i) {
    const double v = std::clamp(r.values[i], 0.0, 1.0);
    out[i] = static_cast<unsigned char>(std::lround(v * 255.0));
  }
  return out;
}

/// Grayscale PNG of a normalized raster, encoded in memory.
inline std::string encode_png(const DensityRaster& r) {
  if (r.ncols == 0 || r.nrows == 0) throw Error(ErrorCode::EmptyRegion, "raster has no cells");
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!info) {
    png_destroy_write_struct(&png, nullptr);
    throw Error(ErrorCode::Io, "libpng initialisation failed");
  }
  std::string out;
  auto bytes = raster_bytes(r);
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw Error(ErrorCode::Io, "png encoding failed");
  }
  png_set_write_fn(
      png, &out,
      [](png_structp p, png_bytep data, png_size_t n) {
        static_cast<std::string*>(png_get_io_ptr(p))->append(reinterpret_cast<const char*>(data), n);
      },
      nullptr);
  png_set_IHDR(png, info, static_cast<png_uint_32>(r.ncols), static_cast<png_uint_32>(r.nrows), 8,
               PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  for (std::size_t row = 0; row < r.nrows; ++row) png_write_row(png, bytes.data() + row * r.ncols);
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  return out;
}

inline void write_png(const DensityRaster& r, const std::string& path) {
  const auto data = encode_png(r);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + path);
  out.write(data.data(), static_cast<std::streamsize>(data.size()));
  if (!out) throw Error(ErrorCode::Io, "write failed for " + path);
}

/// ESRI world file: pixel size, rotation terms, then the centre of the top-left pixel.
inline std::string world_file_text(const DensityRaster& r) {
  std::ostringstream out;
  out << std::setprecision(12) << r.cell_lon << "\n0\n0\n" << -r.cell_lat << "\n"
      << r.west + r.cell_lon / 2.0 << "\n" << r.north - r.cell_lat / 2.0 << "\n";
  return out.str();
}

inline void write_world_file(const DensityRaster& r, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + path);
  out << world_file_text(r);
}

/// Writes `<stem>.png` and the matching `<stem>.pgw`.
inline void write_georeferenced_png(const DensityRaster& r, const std::string& png_path) {
  write_png(r, png_path);
  auto dot = png_path.rfind('.');
  const std::string stem = dot == std::string::npos ? png_path : png_path.substr(0, dot);
  write_world_file(r, stem + ".pgw");
}

}  // namespace skiroute
