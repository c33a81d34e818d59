#pragma once

// Triangle mesh and its binary little-endian PLY encoding:
//   vertex: float x, y, z
//   face:   list uchar int vertex_indices

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "smap/error.hpp"

namespace smap {

static_assert(std::endian::native == std::endian::little, "PLY and raster codecs assume a little-endian host");

struct TriangleMesh {
  std::vector<Eigen::Vector3f> vertices;
  std::vector<std::array<std::int32_t, 3>> triangles;
  std::vector<Eigen::Vector3f> normals;  // optional, per vertex

  bool empty() const noexcept { return triangles.empty(); }

  /// Indices in range and no NaN vertices.
  bool is_valid() const {
    for (const auto& v : vertices)
      if (!v.allFinite()) return false;
    const auto n = static_cast<std::int64_t>(vertices.size());
    for (const auto& t : triangles)
      for (auto i : t)
        if (i < 0 || i >= n) return false;
    return normals.empty() || normals.size() == vertices.size();
  }

  bool operator==(const TriangleMesh& o) const {
    return vertices == o.vertices && triangles == o.triangles && normals == o.normals;
  }
};

inline void write_ply(std::ostream& os, const TriangleMesh& mesh) {
  os << "ply\n"
     << "format binary_little_endian 1.0\n"
     << "element vertex " << mesh.vertices.size() << "\n"
     << "property float x\n"
     << "property float y\n"
     << "property float z\n"
     << "element face " << mesh.triangles.size() << "\n"
     << "property list uchar int vertex_indices\n"
     << "end_header\n";
  for (const auto& v : mesh.vertices) {
    const float xyz[3] = {v.x(), v.y(), v.z()};
    os.write(reinterpret_cast<const char*>(xyz), sizeof(xyz));
  }
  for (const auto& t : mesh.triangles) {
    const std::uint8_t n = 3;
    os.write(reinterpret_cast<const char*>(&n), 1);
    os.write(reinterpret_cast<const char*>(t.data()), 3 * sizeof(std::int32_t));
  }
  if (!os) throw Error(Errc::IoError, "failed writing PLY stream");
}

/// Reads binary little-endian PLY with float x/y/z vertices (extra float
/// vertex properties are skipped) and an optional uchar/int face list.
inline TriangleMesh read_ply(std::istream& is) {
  std::string line;
  auto next_line = [&]() {
    if (!std::getline(is, line)) throw Error(Errc::ParseError, "PLY: unexpected end of header");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    return line;
  };
  if (next_line() != "ply") throw Error(Errc::ParseError, "PLY: missing magic");
  if (next_line() != "format binary_little_endian 1.0")
    throw Error(Errc::ParseError, "PLY: only binary_little_endian 1.0 is supported");

  std::size_t n_vertices = 0, n_faces = 0;
  std::vector<std::string> vertex_props;
  std::string current;
  bool face_list_ok = true;
  for (;;) {
    std::istringstream ls(next_line());
    std::string kw;
    ls >> kw;
    if (kw == "end_header") break;
    if (kw == "comment" || kw == "obj_info" || kw.empty()) continue;
    if (kw == "element") {
      std::size_t count = 0;
      ls >> current >> count;
      if (current == "vertex") n_vertices = count;
      else if (current == "face") n_faces = count;
      else throw Error(Errc::ParseError, "PLY: unsupported element '" + current + "'");
    } else if (kw == "property") {
      std::string type;
      ls >> type;
      if (current == "vertex") {
        std::string name;
        ls >> name;
        if (type != "float" && type != "float32")
          throw Error(Errc::ParseError, "PLY: vertex property '" + name + "' is not float");
        vertex_props.push_back(name);
      } else if (current == "face") {
        std::string count_t, index_t;
        ls >> count_t >> index_t;
        face_list_ok = type == "list" && (count_t == "uchar" || count_t == "uint8") &&
                       (index_t == "int" || index_t == "int32");
      }
    } else {
      throw Error(Errc::ParseError, "PLY: unexpected header line '" + line + "'");
    }
  }
  if (!face_list_ok) throw Error(Errc::ParseError, "PLY: face list must be 'list uchar int'");
  int ix = -1, iy = -1, iz = -1;
  for (int i = 0; i < static_cast<int>(vertex_props.size()); ++i) {
    if (vertex_props[i] == "x") ix = i;
    if (vertex_props[i] == "y") iy = i;
    if (vertex_props[i] == "z") iz = i;
  }
  if (ix < 0 || iy < 0 || iz < 0) throw Error(Errc::ParseError, "PLY: vertex lacks x/y/z");

  TriangleMesh mesh;
  mesh.vertices.reserve(n_vertices);
  std::vector<float> buf(vertex_props.size());
  for (std::size_t i = 0; i < n_vertices; ++i) {
    if (!is.read(reinterpret_cast<char*>(buf.data()), std::streamsize(buf.size() * sizeof(float))))
      throw Error(Errc::ParseError, "PLY: truncated vertex data");
    mesh.vertices.emplace_back(buf[ix], buf[iy], buf[iz]);
  }
  mesh.triangles.reserve(n_faces);
  for (std::size_t i = 0; i < n_faces; ++i) {
    std::uint8_t n = 0;
    std::array<std::int32_t, 3> tri{};
    if (!is.read(reinterpret_cast<char*>(&n), 1)) throw Error(Errc::ParseError, "PLY: truncated face data");
    if (n != 3) throw Error(Errc::ParseError, "PLY: only triangle faces are supported");
    if (!is.read(reinterpret_cast<char*>(tri.data()), sizeof(tri)))
      throw Error(Errc::ParseError, "PLY: truncated face data");
    mesh.triangles.push_back(tri);
  }
  if (!mesh.is_valid()) throw Error(Errc::ParseError, "PLY: face index out of range or non-finite vertex");
  return mesh;
}

}  // namespace smap
