#pragma once

// 256-case marching-cubes lookup table, derived from the cube topology instead
// of being transcribed. Corner c sits at offset (c & 1, (c >> 1) & 1, (c >> 2) & 1);
// bit c of the case index is set when corner c is inside (value < 0).
//
// On each face the crossing edges are paired so that inside corners are cut
// off individually; ambiguous faces therefore resolve the same way from both
// adjacent cubes and the extracted surface has no cracks. The face segments
// chain into closed loops that are fan-triangulated; triangle normals (right-hand
// rule) point toward positive values.

#include <array>
#include <cstdint>
#include <utility>
#include <vector>

namespace smap::mc {

struct EdgeDef {
  int a;
  int b;
  int axis;
};

/// Edges 0-3 run along x, 4-7 along y, 8-11 along z; `a` is the lower corner.
inline const std::array<EdgeDef, 12>& edges() {
  static const std::array<EdgeDef, 12> table = [] {
    std::array<EdgeDef, 12> e{};
    int n = 0;
    for (int axis = 0; axis < 3; ++axis)
      for (int c = 0; c < 8; ++c)
        if (!(c & (1 << axis))) e[n++] = {c, c | (1 << axis), axis};
    return e;
  }();
  return table;
}

inline int edge_between(int a, int b) {
  if (a > b) std::swap(a, b);
  const auto& e = edges();
  for (int i = 0; i < 12; ++i)
    if (e[i].a == a && e[i].b == b) return i;
  return -1;
}

using TriangleList = std::vector<std::array<int, 3>>;  // edge indices

namespace detail {

/// Corners of each face, counter-clockwise seen from outside the cube.
inline std::array<std::array<int, 4>, 6> faces() {
  std::array<std::array<int, 4>, 6> f{};
  int n = 0;
  for (int axis = 0; axis < 3; ++axis) {
    const int b = (axis + 1) % 3, c = (axis + 2) % 3;
    for (int side = 0; side < 2; ++side) {
      const int uv[4][2] = {{0, 0}, {1, 0}, {1, 1}, {0, 1}};
      std::array<int, 4> quad{};
      for (int i = 0; i < 4; ++i) quad[i] = (side << axis) | (uv[i][0] << b) | (uv[i][1] << c);
      if (side == 0) std::swap(quad[1], quad[3]);
      f[n++] = quad;
    }
  }
  return f;
}

inline TriangleList triangulate_case(int cube) {
  const auto inside = [cube](int corner) { return (cube >> corner) & 1; };
  std::array<int, 12> next{};
  next.fill(-1);
  for (const auto& quad : faces()) {
    // Pair each outside->inside crossing with the following inside->outside one.
    for (int j = 0; j < 4; ++j) {
      const int p = quad[j], q = quad[(j + 1) % 4];
      if (inside(p) || !inside(q)) continue;
      for (int s = 1; s < 4; ++s) {
        const int a = quad[(j + s) % 4], b = quad[(j + s + 1) % 4];
        if (inside(a) && !inside(b)) {
          next[edge_between(p, q)] = edge_between(a, b);
          break;
        }
      }
    }
  }
  TriangleList tris;
  std::array<bool, 12> used{};
  for (int start = 0; start < 12; ++start) {
    if (next[start] < 0 || used[start]) continue;
    std::vector<int> loop;
    for (int e = start; !used[e]; e = next[e]) {
      used[e] = true;
      loop.push_back(e);
    }
    for (std::size_t i = 1; i + 1 < loop.size(); ++i) tris.push_back({loop[0], loop[i], loop[i + 1]});
  }
  return tris;
}

}  // namespace detail

inline const std::array<TriangleList, 256>& triangle_table() {
  static const std::array<TriangleList, 256> table = [] {
    std::array<TriangleList, 256> t;
    for (int c = 0; c < 256; ++c) t[c] = detail::triangulate_case(c);
    return t;
  }();
  return table;
}

/// Bit mask of edges crossed by the surface in each case.
inline std::uint16_t edge_mask(int cube) {
  std::uint16_t mask = 0;
  for (int i = 0; i < 12; ++i) {
    const auto& e = edges()[i];
    if (((cube >> e.a) & 1) != ((cube >> e.b) & 1)) mask |= std::uint16_t(1u << i);
  }
  return mask;
}

}  // namespace smap::mc
