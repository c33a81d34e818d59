#pragma once

// File formats: PNG images and 16-bit depth, float depth rasters (.dmap),
// pose / intrinsics / landmark text files. Writers are atomic (temp + rename).

#include <png.h>

#include <array>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "smap/core.hpp"
#include "smap/sparse_prior.hpp"

namespace smap::io {

namespace fs = std::filesystem;

/// Writes through `fill` into a sibling temp file, then renames over `path`.
inline void atomic_write(const fs::path& path, const std::function<void(std::ostream&)>& fill) {
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(Errc::IoError, "cannot open " + tmp.string() + " for writing");
    fill(out);
    out.flush();
    if (!out) {
      out.close();
      std::error_code ec;
      fs::remove(tmp, ec);
      throw Error(Errc::IoError, "write failed: " + tmp.string());
    }
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp, ec);
    throw Error(Errc::IoError, "cannot rename onto " + path.string());
  }
}

inline void atomic_write_text(const fs::path& path, const std::string& text) {
  atomic_write(path, [&](std::ostream& os) { os << text; });
}

inline std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::IoError, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// ---------------------------------------------------------------------------
// PNG

/// Decoded PNG samples. 16-bit samples are stored as native uint16 pairs.
struct PngData {
  int width = 0;
  int height = 0;
  int channels = 0;
  int bit_depth = 8;
  std::vector<std::uint16_t> samples;  // row-major, interleaved channels

  std::uint16_t at(int x, int y, int c = 0) const {
    return samples[(static_cast<std::size_t>(y) * width + x) * channels + c];
  }
};

namespace detail {
// Keeps libpng quiet; the message ends up in the thrown Error instead.
inline void png_error_to_buffer(png_structp png, png_const_charp msg) {
  auto* buf = static_cast<std::string*>(png_get_error_ptr(png));
  if (buf) *buf = msg;
  png_longjmp(png, 1);
}
inline void png_ignore_warning(png_structp, png_const_charp) {}
}  // namespace detail

inline PngData read_png(const fs::path& path) {
  FILE* fp = std::fopen(path.c_str(), "rb");
  if (!fp) throw Error(Errc::IoError, "cannot open " + path.string());
  std::string png_msg;
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, &png_msg, detail::png_error_to_buffer,
                                           detail::png_ignore_warning);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_read_struct(&png, &info, nullptr);
    std::fclose(fp);
    throw Error(Errc::IoError, "libpng initialisation failed");
  }
  PngData out;
  std::vector<png_byte> raw;
  std::vector<png_bytep> rows;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    std::fclose(fp);
    throw Error(Errc::ParseError, "invalid PNG: " + path.string() + (png_msg.empty() ? "" : " (" + png_msg + ")"));
  }
  png_init_io(png, fp);
  png_read_info(png, info);
  png_set_expand(png);
  png_read_update_info(png, info);
  out.width = static_cast<int>(png_get_image_width(png, info));
  out.height = static_cast<int>(png_get_image_height(png, info));
  out.channels = png_get_channels(png, info);
  out.bit_depth = png_get_bit_depth(png, info);
  const std::size_t rowbytes = png_get_rowbytes(png, info);
  raw.resize(rowbytes * static_cast<std::size_t>(out.height));
  rows.resize(static_cast<std::size_t>(out.height));
  for (int y = 0; y < out.height; ++y) rows[y] = raw.data() + rowbytes * y;
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  std::fclose(fp);

  const std::size_t n = static_cast<std::size_t>(out.width) * out.height * out.channels;
  out.samples.resize(n);
  if (out.bit_depth == 16) {
    for (std::size_t i = 0; i < n; ++i) out.samples[i] = static_cast<std::uint16_t>((raw[2 * i] << 8) | raw[2 * i + 1]);
  } else {
    for (std::size_t i = 0; i < n; ++i) out.samples[i] = raw[i];
  }
  return out;
}

inline void write_png(const fs::path& path, const PngData& data) {
  if (data.bit_depth != 8 && data.bit_depth != 16) throw Error(Errc::InvalidArgument, "PNG bit depth must be 8 or 16");
  if (data.channels != 1 && data.channels != 3) throw Error(Errc::InvalidArgument, "PNG needs 1 or 3 channels");
  const int bytes = data.bit_depth / 8;
  const std::size_t rowbytes = static_cast<std::size_t>(data.width) * data.channels * bytes;
  std::vector<png_byte> raw(rowbytes * data.height);
  for (std::size_t i = 0; i < data.samples.size(); ++i) {
    if (bytes == 2) {
      raw[2 * i] = static_cast<png_byte>(data.samples[i] >> 8);
      raw[2 * i + 1] = static_cast<png_byte>(data.samples[i] & 0xFF);
    } else {
      raw[i] = static_cast<png_byte>(data.samples[i]);
    }
  }
  std::vector<png_bytep> rows(static_cast<std::size_t>(data.height));
  for (int y = 0; y < data.height; ++y) rows[y] = raw.data() + rowbytes * y;

  fs::path tmp = path;
  tmp += ".tmp";
  FILE* fp = std::fopen(tmp.c_str(), "wb");
  if (!fp) throw Error(Errc::IoError, "cannot open " + tmp.string() + " for writing");
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info || setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    std::fclose(fp);
    std::remove(tmp.c_str());
    throw Error(Errc::IoError, "PNG encoding failed: " + path.string());
  }
  png_init_io(png, fp);
  png_set_IHDR(png, info, static_cast<png_uint_32>(data.width), static_cast<png_uint_32>(data.height), data.bit_depth,
               data.channels == 1 ? PNG_COLOR_TYPE_GRAY : PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  png_write_image(png, rows.data());
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  if (std::fclose(fp) != 0) {
    std::remove(tmp.c_str());
    throw Error(Errc::IoError, "write failed: " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) throw Error(Errc::IoError, "cannot rename onto " + path.string());
}

/// Grayscale image from any 8/16-bit gray or colour PNG (Rec. 601 luma).
inline Image read_image(const fs::path& path) {
  const PngData png = read_png(path);
  const double max = png.bit_depth == 16 ? 65535.0 : 255.0;
  Image img(png.width, png.height);
  for (int y = 0; y < png.height; ++y)
    for (int x = 0; x < png.width; ++x) {
      double v;
      if (png.channels >= 3)
        v = 0.299 * png.at(x, y, 0) + 0.587 * png.at(x, y, 1) + 0.114 * png.at(x, y, 2);
      else
        v = png.at(x, y, 0);
      img(x, y) = static_cast<float>(std::clamp(v / max, 0.0, 1.0));
    }
  return img;
}

inline void write_image(const fs::path& path, const Image& img) {
  PngData png{img.width(), img.height(), 1, 8, {}};
  png.samples.reserve(img.size());
  for (float v : img.data())
    png.samples.push_back(static_cast<std::uint16_t>(std::lround(std::clamp(v, 0.0f, 1.0f) * 255.0f)));
  write_png(path, png);
}

/// 16-bit depth PNG; value 0 is invalid, otherwise depth = value * scale.
inline DepthMap read_depth_png(const fs::path& path, double scale) {
  if (!(scale > 0.0)) throw Error(Errc::ConfigError, "depth scale must be > 0");
  const PngData png = read_png(path);
  if (png.channels != 1 || png.bit_depth != 16)
    throw Error(Errc::ParseError, "depth PNG must be 16-bit single channel: " + path.string());
  DepthMap d(png.width, png.height);
  for (int y = 0; y < png.height; ++y)
    for (int x = 0; x < png.width; ++x)
      if (const auto v = png.at(x, y); v != 0) d.set(x, y, v * scale);
  return d;
}

inline void write_depth_png(const fs::path& path, const DepthMap& depth, double scale) {
  if (!(scale > 0.0)) throw Error(Errc::ConfigError, "depth scale must be > 0");
  PngData png{depth.width(), depth.height(), 1, 16, {}};
  png.samples.resize(static_cast<std::size_t>(depth.width()) * depth.height(), 0);
  for (int y = 0; y < depth.height(); ++y)
    for (int x = 0; x < depth.width(); ++x)
      if (depth.valid(x, y))
        png.samples[static_cast<std::size_t>(y) * depth.width() + x] =
            static_cast<std::uint16_t>(std::clamp(std::lround(depth.depth(x, y) / scale), 0L, 65535L));
  write_png(path, png);
}

// ---------------------------------------------------------------------------
// Float depth raster: "SMDM" magic, uint32 width, uint32 height, then
// width*height little-endian float32 values (0 = invalid).

inline constexpr std::array<char, 4> kDmapMagic{'S', 'M', 'D', 'M'};
inline constexpr std::size_t kDmapHeaderBytes = 12;

inline void write_dmap(std::ostream& os, const DepthMap& depth) {
  static_assert(sizeof(float) == 4);
  os.write(kDmapMagic.data(), 4);
  const std::uint32_t dims[2] = {static_cast<std::uint32_t>(depth.width()), static_cast<std::uint32_t>(depth.height())};
  os.write(reinterpret_cast<const char*>(dims), sizeof(dims));
  std::vector<float> values(static_cast<std::size_t>(depth.width()) * depth.height(), 0.0f);
  for (int y = 0; y < depth.height(); ++y)
    for (int x = 0; x < depth.width(); ++x)
      if (depth.valid(x, y)) values[static_cast<std::size_t>(y) * depth.width() + x] = static_cast<float>(depth.depth(x, y));
  os.write(reinterpret_cast<const char*>(values.data()), static_cast<std::streamsize>(values.size() * sizeof(float)));
}

inline DepthMap read_dmap(std::istream& is) {
  std::array<char, 4> magic{};
  std::uint32_t dims[2] = {0, 0};
  is.read(magic.data(), 4);
  is.read(reinterpret_cast<char*>(dims), sizeof(dims));
  if (!is || magic != kDmapMagic) throw Error(Errc::ParseError, "not a depth raster (bad header)");
  if (dims[0] > (1u << 16) || dims[1] > (1u << 16)) throw Error(Errc::ParseError, "depth raster too large");
  std::vector<float> values(static_cast<std::size_t>(dims[0]) * dims[1]);
  is.read(reinterpret_cast<char*>(values.data()), static_cast<std::streamsize>(values.size() * sizeof(float)));
  if (!is) throw Error(Errc::ParseError, "truncated depth raster");
  DepthMap d(static_cast<int>(dims[0]), static_cast<int>(dims[1]));
  for (int y = 0; y < d.height(); ++y)
    for (int x = 0; x < d.width(); ++x) d.set(x, y, values[static_cast<std::size_t>(y) * dims[0] + x]);
  return d;
}

inline void write_dmap(const fs::path& path, const DepthMap& depth) {
  atomic_write(path, [&](std::ostream& os) { write_dmap(os, depth); });
}

inline DepthMap read_dmap(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::IoError, "cannot open " + path.string());
  return read_dmap(in);
}

// ---------------------------------------------------------------------------
// Text formats

namespace detail {

inline std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

inline std::vector<std::string> tokens(const std::string& line) {
  std::istringstream ss(line);
  std::vector<std::string> out;
  for (std::string t; ss >> t;) out.push_back(t);
  return out;
}

inline double parse_double(const std::string& tok, const std::string& where) {
  try {
    std::size_t used = 0;
    const double v = std::stod(tok, &used);
    if (used != tok.size() || !std::isfinite(v)) throw std::invalid_argument(tok);
    return v;
  } catch (const std::exception&) {
    throw Error(Errc::ParseError, where + ": '" + tok + "' is not a finite number");
  }
}

inline long long parse_int(const std::string& tok, const std::string& where) {
  try {
    std::size_t used = 0;
    const long long v = std::stoll(tok, &used);
    if (used != tok.size()) throw std::invalid_argument(tok);
    return v;
  } catch (const std::exception&) {
    throw Error(Errc::ParseError, where + ": '" + tok + "' is not an integer");
  }
}

/// Calls `fn(tokens, where)` for every non-blank, non-comment line.
template <typename Fn>
void for_each_record(std::istream& is, const std::string& name, Fn&& fn) {
  std::string line;
  for (int lineno = 1; std::getline(is, line); ++lineno) {
    const auto toks = tokens(line);
    if (toks.empty() || toks[0][0] == '#') continue;
    fn(toks, name + ":" + std::to_string(lineno));
  }
}

}  // namespace detail

struct StampedPose {
  double timestamp = 0.0;
  std::string token;  // timestamp exactly as written; names the image file
  RigidPose pose;
};

/// `timestamp tx ty tz qx qy qz qw`, world-from-camera.
inline std::vector<StampedPose> read_poses(std::istream& is, const std::string& name = "poses") {
  std::vector<StampedPose> out;
  detail::for_each_record(is, name, [&](const std::vector<std::string>& t, const std::string& where) {
    if (t.size() != 8)
      throw Error(Errc::ParseError, where + ": expected 8 fields, got " + std::to_string(t.size()));
    double v[8];
    for (int i = 0; i < 8; ++i) v[i] = detail::parse_double(t[i], where);
    try {
      out.push_back({v[0], t[0], RigidPose::from_quaternion(v[4], v[5], v[6], v[7], Vec3(v[1], v[2], v[3]))});
    } catch (const Error& e) {
      throw Error(Errc::ParseError, where + ": " + e.what());
    }
  });
  return out;
}

inline std::vector<StampedPose> read_poses(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::IoError, "cannot open " + path.string());
  return read_poses(in, path.string());
}

inline std::string format_timestamp(double t) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6f", t);
  return buf;
}

inline std::string format_pose_line(const std::string& token, const RigidPose& pose) {
  const Eigen::Quaterniond q = pose.quaternion().normalized();
  std::string s = token;
  for (double v : {pose.translation.x(), pose.translation.y(), pose.translation.z(), q.x(), q.y(), q.z(), q.w()})
    s += " " + detail::format_double(v);
  return s + "\n";
}

inline void write_poses(const fs::path& path, const std::vector<StampedPose>& poses) {
  std::string text;
  for (const auto& p : poses) text += format_pose_line(p.token.empty() ? format_timestamp(p.timestamp) : p.token, p.pose);
  atomic_write_text(path, text);
}

/// Single line `fx fy cx cy width height`.
inline CameraIntrinsics read_intrinsics(std::istream& is, const std::string& name = "intrinsics") {
  std::optional<CameraIntrinsics> out;
  detail::for_each_record(is, name, [&](const std::vector<std::string>& t, const std::string& where) {
    if (out) throw Error(Errc::ParseError, where + ": expected a single intrinsics line");
    if (t.size() != 6)
      throw Error(Errc::ParseError, where + ": expected 6 fields, got " + std::to_string(t.size()));
    CameraIntrinsics k{detail::parse_double(t[0], where), detail::parse_double(t[1], where),
                       detail::parse_double(t[2], where), detail::parse_double(t[3], where),
                       static_cast<int>(detail::parse_int(t[4], where)), static_cast<int>(detail::parse_int(t[5], where))};
    try {
      k.validate();
    } catch (const Error& e) {
      throw Error(Errc::ParseError, where + ": " + e.what());
    }
    out = k;
  });
  if (!out) throw Error(Errc::ParseError, name + ": no intrinsics line");
  return *out;
}

inline CameraIntrinsics read_intrinsics(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::IoError, "cannot open " + path.string());
  return read_intrinsics(in, path.string());
}

inline void write_intrinsics(const fs::path& path, const CameraIntrinsics& k) {
  atomic_write_text(path, detail::format_double(k.fx) + " " + detail::format_double(k.fy) + " " +
                              detail::format_double(k.cx) + " " + detail::format_double(k.cy) + " " +
                              std::to_string(k.width) + " " + std::to_string(k.height) + "\n");
}

/// `id x y z` per line (world frame, metres). Observations are not stored.
inline std::vector<Landmark> read_landmarks(std::istream& is, const std::string& name = "landmarks") {
  std::vector<Landmark> out;
  detail::for_each_record(is, name, [&](const std::vector<std::string>& t, const std::string& where) {
    if (t.size() != 4)
      throw Error(Errc::ParseError, where + ": expected 4 fields, got " + std::to_string(t.size()));
    Landmark lm;
    lm.id = detail::parse_int(t[0], where);
    lm.position = Vec3(detail::parse_double(t[1], where), detail::parse_double(t[2], where),
                       detail::parse_double(t[3], where));
    out.push_back(std::move(lm));
  });
  return out;
}

inline std::vector<Landmark> read_landmarks(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::IoError, "cannot open " + path.string());
  return read_landmarks(in, path.string());
}

inline void write_landmarks(const fs::path& path, const std::vector<Landmark>& landmarks) {
  std::string text;
  for (const auto& lm : landmarks)
    text += std::to_string(lm.id) + " " + detail::format_double(lm.position.x()) + " " +
            detail::format_double(lm.position.y()) + " " + detail::format_double(lm.position.z()) + "\n";
  atomic_write_text(path, text);
}

}  // namespace smap::io
