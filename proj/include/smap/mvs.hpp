#pragma once

// Plane-sweep multi-view stereo. Hypothesis surfaces are either uniform
// fronto-parallel planes or per-pixel offsets around a dense depth prior.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "smap/core.hpp"
#include "smap/parallel.hpp"

namespace smap {

enum class HypothesisMode { uniform, prior_guided };

struct HypothesisConfig {
  HypothesisMode mode = HypothesisMode::prior_guided;
  int planes = 64;
  double interval = 0.04;  // spacing around the prior, metres
  int n1 = 31;             // surfaces below the prior
  int n2 = 32;             // surfaces above the prior
  double min_depth = 0.25;
  double max_depth = 5.0;

  void validate() const {
    if (planes < 2) throw Error(Errc::ConfigError, "hypotheses.planes must be >= 2");
    if (!(min_depth > 0.0)) throw Error(Errc::ConfigError, "hypotheses.min_depth must be > 0");
    if (mode == HypothesisMode::prior_guided) {
      if (n1 < 0 || n2 < 0 || n1 + n2 + 1 != planes)
        throw Error(Errc::ConfigError, "hypotheses require n1 + n2 + 1 == planes");
      if (!(interval > 0.0)) throw Error(Errc::ConfigError, "hypotheses.interval must be > 0");
    } else if (!(max_depth > min_depth)) {
      throw Error(Errc::ConfigError, "hypotheses require max_depth > min_depth");
    }
  }

  double uniform_interval() const { return (max_depth - min_depth) / (planes - 1); }
};

/// Hypothesis depths, stored plane-major. A shared field holds one depth per
/// plane for every pixel.
class HypothesisField {
 public:
  HypothesisField() = default;

  static HypothesisField shared(int width, int height, std::vector<double> depths) {
    HypothesisField f;
    f.width_ = width;
    f.height_ = height;
    f.planes_ = static_cast<int>(depths.size());
    f.shared_ = true;
    f.depths_ = std::move(depths);
    return f;
  }

  static HypothesisField per_pixel(int width, int height, int planes) {
    HypothesisField f;
    f.width_ = width;
    f.height_ = height;
    f.planes_ = planes;
    f.shared_ = false;
    f.depths_.assign(static_cast<std::size_t>(width) * height * planes, 0.0);
    return f;
  }

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  int planes() const noexcept { return planes_; }
  bool is_shared() const noexcept { return shared_; }

  double at(int x, int y, int k) const noexcept {
    if (shared_) return depths_[static_cast<std::size_t>(k)];
    return depths_[offset(k) + static_cast<std::size_t>(y) * width_ + x];
  }
  double& at(int x, int y, int k) noexcept {
    if (shared_) return depths_[static_cast<std::size_t>(k)];
    return depths_[offset(k) + static_cast<std::size_t>(y) * width_ + x];
  }

  bool operator==(const HypothesisField&) const = default;

 private:
  std::size_t offset(int k) const noexcept {
    return static_cast<std::size_t>(k) * static_cast<std::size_t>(width_) * height_;
  }

  int width_ = 0;
  int height_ = 0;
  int planes_ = 0;
  bool shared_ = true;
  std::vector<double> depths_;
};

/// Evenly spaced depths over [min_depth, max_depth].
inline std::vector<double> uniform_depths(const HypothesisConfig& cfg) {
  std::vector<double> depths(static_cast<std::size_t>(cfg.planes));
  const double step = cfg.uniform_interval();
  for (int k = 0; k < cfg.planes; ++k) depths[k] = cfg.min_depth + k * step;
  depths.back() = cfg.max_depth;
  return depths;
}

/// Surfaces prior + (k - n1) * interval for k in [0, planes). When the lower end
/// falls to or below min_depth, the clamped prefix is re-spaced evenly from
/// min_depth up to the first surface that stays above it.
inline void guided_depths(double prior, const HypothesisConfig& cfg, std::span<double> out) {
  const int planes = cfg.planes;
  for (int k = 0; k < planes; ++k) out[k] = prior + static_cast<double>(k - cfg.n1) * cfg.interval;
  int first = 0;
  while (first < planes && out[first] <= cfg.min_depth) ++first;
  if (first == 0) return;
  if (first == planes) {
    for (int k = 0; k < planes; ++k) out[k] = cfg.min_depth + k * cfg.interval;
    return;
  }
  const double top = out[first];
  const double step = (top - cfg.min_depth) / first;
  for (int k = 0; k < first; ++k) out[k] = cfg.min_depth + k * step;
}

inline HypothesisField build_hypotheses(const HypothesisConfig& cfg, int width, int height,
                                        const DepthMap* prior = nullptr) {
  cfg.validate();
  if (cfg.mode == HypothesisMode::uniform) return HypothesisField::shared(width, height, uniform_depths(cfg));

  if (prior == nullptr) throw Error(Errc::InvalidPrior, "prior-guided hypotheses need a prior");
  if (prior->width() != width || prior->height() != height)
    throw Error(Errc::InvalidPrior, "prior dimensions differ from the reference image");
  HypothesisField field = HypothesisField::per_pixel(width, height, cfg.planes);
  std::vector<double> column(static_cast<std::size_t>(cfg.planes));
  for (int y = 0; y < height; ++y)
    for (int x = 0; x < width; ++x) {
      const double d = prior->depth(x, y);
      if (!prior->valid(x, y) || !std::isfinite(d))
        throw Error(Errc::InvalidPrior, "prior depth is missing or non-finite at pixel (" +
                                            std::to_string(x) + ", " + std::to_string(y) + ")");
      guided_depths(d, cfg, column);
      for (int k = 0; k < cfg.planes; ++k) field.at(x, y, k) = column[k];
    }
  return field;
}

inline HypothesisField build_hypotheses(const DepthMap& prior, const HypothesisConfig& cfg) {
  return build_hypotheses(cfg, prior.width(), prior.height(), &prior);
}

// ---------------------------------------------------------------------------
// Patch matching

enum class MatchCost { sad, zncc };

struct MatchingConfig {
  int patch_radius = 3;
  MatchCost cost = MatchCost::zncc;
  int min_valid_sources = 1;
  double zncc_epsilon = 1e-5;  // per-pixel variance floor
  int threads = 0;             // sweep workers; 0 uses every hardware thread

  void validate() const {
    if (patch_radius < 1) throw Error(Errc::ConfigError, "matching.patch_radius must be >= 1");
    if (min_valid_sources < 1) throw Error(Errc::ConfigError, "matching.min_valid_sources must be >= 1");
    if (!(zncc_epsilon >= 0.0)) throw Error(Errc::ConfigError, "matching.zncc_epsilon must be >= 0");
    if (threads < 0) throw Error(Errc::ConfigError, "matching.threads must be >= 0");
  }
};

namespace detail {

/// 1 - ZNCC from patch sums; 1.0 when either patch has variance below eps.
inline double zncc_cost_from_sums(double n, double sa, double saa, double sb, double sbb, double sab,
                                  double eps) {
  const double va = saa - sa * sa / n;
  const double vb = sbb - sb * sb / n;
  if (va <= eps * n || vb <= eps * n) return 1.0;
  const double ncc = (sab - sa * sb / n) / std::sqrt(va * vb);
  return std::clamp(1.0 - ncc, 0.0, 2.0);
}

}  // namespace detail

/// SAD: mean absolute difference. ZNCC: 1 - zncc in [0, 2]. Lower is better.
inline double photometric_cost(std::span<const float> ref_patch, std::span<const float> src_patch,
                               const MatchingConfig& cfg) {
  if (ref_patch.size() != src_patch.size() || ref_patch.empty())
    throw Error(Errc::InvalidArgument, "patches must be non-empty and of equal size");
  const double n = static_cast<double>(ref_patch.size());
  if (cfg.cost == MatchCost::sad) {
    double sum = 0.0;
    for (std::size_t i = 0; i < ref_patch.size(); ++i) sum += std::abs(double(ref_patch[i]) - double(src_patch[i]));
    return sum / n;
  }
  double sa = 0, saa = 0, sb = 0, sbb = 0, sab = 0;
  for (std::size_t i = 0; i < ref_patch.size(); ++i) {
    const double a = ref_patch[i], b = src_patch[i];
    sa += a;
    saa += a * a;
    sb += b;
    sbb += b * b;
    sab += a * b;
  }
  return detail::zncc_cost_from_sums(n, sa, saa, sb, sbb, sab, cfg.zncc_epsilon);
}

/// A source view for the sweep: image, transform from the reference camera
/// frame into this camera, and its intrinsics.
struct SourceView {
  const Image* image = nullptr;
  RigidPose ref_to_src;
  CameraIntrinsics intrinsics;
};

/// Matching costs for every (pixel, hypothesis) cell, plane-major. A cell is
/// valid when at least `min_valid_sources` sources saw the whole patch; invalid
/// cells hold +inf.
class CostVolume {
 public:
  CostVolume() = default;
  CostVolume(HypothesisField hypotheses, int min_valid_sources)
      : hyp_(std::move(hypotheses)),
        min_valid_(min_valid_sources),
        costs_(cells(), std::numeric_limits<float>::infinity()),
        sources_(cells(), 0) {}

  int width() const noexcept { return hyp_.width(); }
  int height() const noexcept { return hyp_.height(); }
  int planes() const noexcept { return hyp_.planes(); }
  int min_valid_sources() const noexcept { return min_valid_; }
  const HypothesisField& hypotheses() const noexcept { return hyp_; }

  float cost(int x, int y, int k) const noexcept { return costs_[index(x, y, k)]; }
  int source_count(int x, int y, int k) const noexcept { return sources_[index(x, y, k)]; }
  bool valid(int x, int y, int k) const noexcept { return sources_[index(x, y, k)] >= min_valid_; }

  void set(int x, int y, int k, float cost, int sources) noexcept {
    costs_[index(x, y, k)] = cost;
    sources_[index(x, y, k)] = static_cast<std::uint8_t>(std::min(sources, 255));
  }

  std::span<float> plane_costs(int k) noexcept { return {costs_.data() + plane_offset(k), plane_size()}; }
  std::span<std::uint8_t> plane_sources(int k) noexcept {
    return {sources_.data() + plane_offset(k), plane_size()};
  }

  bool operator==(const CostVolume&) const = default;

 private:
  std::size_t plane_size() const noexcept { return static_cast<std::size_t>(width()) * height(); }
  std::size_t cells() const noexcept { return plane_size() * static_cast<std::size_t>(planes()); }
  std::size_t plane_offset(int k) const noexcept { return static_cast<std::size_t>(k) * plane_size(); }
  std::size_t index(int x, int y, int k) const noexcept {
    return plane_offset(k) + static_cast<std::size_t>(y) * width() + x;
  }

  HypothesisField hyp_;
  int min_valid_ = 1;
  std::vector<float> costs_;
  std::vector<std::uint8_t> sources_;
};

namespace detail {

/// Box sums over the (2r+1)^2 window clipped to the image, streamed row by
/// row. `Quantity(x, y)` yields the per-pixel value; `Sink(y, sums)` receives
/// the window sums for row y.
template <typename Quantity, typename Sink>
void box_sums_rows(int w, int h, int r, Quantity&& q, Sink&& sink, std::vector<double>& vsum,
                   std::vector<double>& prefix, std::vector<double>& row_out) {
  vsum.assign(static_cast<std::size_t>(w), 0.0);
  prefix.assign(static_cast<std::size_t>(w) + 1, 0.0);
  row_out.assign(static_cast<std::size_t>(w), 0.0);
  for (int yy = 0; yy <= std::min(r, h - 1); ++yy)
    for (int x = 0; x < w; ++x) vsum[x] += q(x, yy);
  for (int y = 0; y < h; ++y) {
    if (y > 0) {
      const int add = y + r;
      const int sub = y - r - 1;
      if (add < h)
        for (int x = 0; x < w; ++x) vsum[x] += q(x, add);
      if (sub >= 0)
        for (int x = 0; x < w; ++x) vsum[x] -= q(x, sub);
    }
    for (int x = 0; x < w; ++x) prefix[x + 1] = prefix[x] + vsum[x];
    for (int x = 0; x < w; ++x) {
      const int lo = std::max(0, x - r);
      const int hi = std::min(w - 1, x + r);
      row_out[x] = prefix[hi + 1] - prefix[lo];
    }
    sink(y, row_out);
  }
}

}  // namespace detail

/// Builds the cost volume. For every hypothesis surface and source, the whole
/// source image is warped onto the reference grid (each pixel at its own
/// hypothesis depth), then patch costs come from sliding-window sums. Per-source
/// costs are averaged over the sources that see the full patch.
inline CostVolume sweep(const Image& ref, const CameraIntrinsics& ref_intr, std::span<const SourceView> sources,
                        const HypothesisField& hyp, const MatchingConfig& cfg) {
  cfg.validate();
  if (sources.empty()) throw Error(Errc::NoSources, "sweep needs at least one source view");
  if (hyp.width() != ref.width() || hyp.height() != ref.height())
    throw Error(Errc::InvalidArgument, "hypothesis field dimensions differ from the reference image");
  for (const auto& s : sources) {
    if (s.image == nullptr || s.image->width() < 2 || s.image->height() < 2)
      throw Error(Errc::InvalidArgument, "source image missing or smaller than 2x2");
    s.ref_to_src.validate();
  }

  const int w = ref.width();
  const int h = ref.height();
  const int r = cfg.patch_radius;
  const std::size_t npix = static_cast<std::size_t>(w) * h;

  // Reference patch statistics, shared by every plane.
  std::vector<double> ref_n(npix), ref_sum(npix), ref_sq(npix);
  {
    std::vector<double> vs, pf, ro;
    detail::box_sums_rows(w, h, r, [](int, int) { return 1.0; },
                          [&](int y, const std::vector<double>& s) {
                            std::copy(s.begin(), s.end(), ref_n.begin() + std::ptrdiff_t(y) * w);
                          }, vs, pf, ro);
    detail::box_sums_rows(w, h, r, [&](int x, int y) { return double(ref(x, y)); },
                          [&](int y, const std::vector<double>& s) {
                            std::copy(s.begin(), s.end(), ref_sum.begin() + std::ptrdiff_t(y) * w);
                          }, vs, pf, ro);
    detail::box_sums_rows(w, h, r, [&](int x, int y) { const double a = ref(x, y); return a * a; },
                          [&](int y, const std::vector<double>& s) {
                            std::copy(s.begin(), s.end(), ref_sq.begin() + std::ptrdiff_t(y) * w);
                          }, vs, pf, ro);
  }

  struct Warp {
    Mat3 m;  // K_src * R * K_ref^-1
    Vec3 b;  // K_src * t
    const Image* image;
  };
  std::vector<Warp> warps;
  const Mat3 k_ref_inv = ref_intr.inverse_matrix();
  for (const auto& s : sources) {
    const Mat3 k_src = s.intrinsics.matrix();
    warps.push_back({k_src * s.ref_to_src.rotation * k_ref_inv, k_src * s.ref_to_src.translation, s.image});
  }

  CostVolume vol(hyp, cfg.min_valid_sources);
  const float* ref_data = ref.data().data();

  parallel_for(0, hyp.planes(), [&](int k) {
    std::vector<float> warped(npix);
    std::vector<std::uint8_t> seen(npix);
    std::vector<double> inv_depth(npix);
    std::vector<double> acc(npix, 0.0);
    std::vector<int> count(npix, 0);
    // Column sums over the vertical window: seen count, b, b*b, a*b (or |a-b| for SAD).
    std::vector<int> col_m(static_cast<std::size_t>(w));
    std::vector<double> col_b(static_cast<std::size_t>(w)), col_bb(static_cast<std::size_t>(w)),
        col_ab(static_cast<std::size_t>(w));
    const bool sad = cfg.cost == MatchCost::sad;

    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) inv_depth[std::size_t(y) * w + x] = 1.0 / hyp.at(x, y, k);

    for (const Warp& wp : warps) {
      const Image& src = *wp.image;
      const float* sd = src.data().data();
      const int sw = src.width();
      const double umax = sw - 1, vmax = src.height() - 1;
      // Locals: the uint8 stores below may alias anything, which would
      // otherwise force the coefficients to be reloaded per pixel.
      const double m00 = wp.m(0, 0), m10 = wp.m(1, 0), m20 = wp.m(2, 0);
      const double bx = wp.b.x(), by = wp.b.y(), bz = wp.b.z();
      const int sh = src.height();
      float* warped_data = warped.data();
      std::uint8_t* seen_data = seen.data();
      const double* inv_data = inv_depth.data();
      for (int y = 0; y < h; ++y) {
        const Vec3 base = wp.m.col(2) + wp.m.col(1) * double(y);
        const double base_x = base.x(), base_y = base.y(), base_z = base.z();
        for (int x = 0; x < w; ++x) {
          const std::size_t i = static_cast<std::size_t>(y) * w + x;
          const double inv_d = inv_data[i];
          const double hx = base_x + m00 * x + bx * inv_d;
          const double hy = base_y + m10 * x + by * inv_d;
          const double hz = base_z + m20 * x + bz * inv_d;
          // hz is the source-camera depth divided by the hypothesis depth.
          seen_data[i] = 0;
          warped_data[i] = 0.0f;
          if (!(hz > 1e-6 * inv_d)) continue;
          const double iz = 1.0 / hz;
          const double u = hx * iz, v = hy * iz;
          if (!(u >= 0.0 && v >= 0.0 && u <= umax && v <= vmax)) continue;
          int x0 = static_cast<int>(u), y0 = static_cast<int>(v);
          if (x0 >= sw - 1) x0 = sw - 2;
          if (y0 >= sh - 1) y0 = sh - 2;
          const float ax = static_cast<float>(u - x0), ay = static_cast<float>(v - y0);
          const float* p = sd + static_cast<std::size_t>(y0) * sw + x0;
          const float top = p[0] + ax * (p[1] - p[0]);
          const float bot = p[sw] + ax * (p[sw + 1] - p[sw]);
          warped_data[i] = top + ay * (bot - top);
          seen_data[i] = 1;
        }
      }

      // Unseen pixels carry warped = 0, so only the count and SAD need the mask.
      auto add_row = [&](int yy, double sign) {
        const std::size_t o = std::size_t(yy) * w;
        const int isign = sign > 0 ? 1 : -1;
        const float* a_row = ref_data + o;
        const float* b_row = warped.data() + o;
        const std::uint8_t* m_row = seen.data() + o;
        if (sad) {
          for (int x = 0; x < w; ++x) {
            col_m[x] += isign * m_row[x];
            col_b[x] += m_row[x] ? sign * std::abs(double(a_row[x]) - double(b_row[x])) : 0.0;
          }
          return;
        }
        for (int x = 0; x < w; ++x) {
          const double a = a_row[x], b = b_row[x];
          col_m[x] += isign * m_row[x];
          col_b[x] += sign * b;
          col_bb[x] += sign * (b * b);
          col_ab[x] += sign * (a * b);
        }
      };
      std::fill(col_m.begin(), col_m.end(), 0);
      std::fill(col_b.begin(), col_b.end(), 0.0);
      std::fill(col_bb.begin(), col_bb.end(), 0.0);
      std::fill(col_ab.begin(), col_ab.end(), 0.0);
      for (int yy = 0; yy <= std::min(r, h - 1); ++yy) add_row(yy, 1.0);

      for (int y = 0; y < h; ++y) {
        if (y > 0) {
          if (y + r < h) add_row(y + r, 1.0);
          if (y - r - 1 >= 0) add_row(y - r - 1, -1.0);
        }
        int m = 0;
        double sb = 0.0, sbb = 0.0, sab = 0.0;
        for (int x = 0; x <= std::min(r, w - 1); ++x) {
          m += col_m[x];
          sb += col_b[x];
          sbb += col_bb[x];
          sab += col_ab[x];
        }
        const std::size_t o = std::size_t(y) * w;
        for (int x = 0; x < w; ++x) {
          const std::size_t i = o + x;
          if (m == static_cast<int>(ref_n[i])) {  // whole patch inside the source view
            acc[i] += sad ? sb / ref_n[i]
                          : detail::zncc_cost_from_sums(ref_n[i], ref_sum[i], ref_sq[i], sb, sbb, sab,
                                                        cfg.zncc_epsilon);
            ++count[i];
          }
          if (x + r + 1 < w) {
            const int c = x + r + 1;
            m += col_m[c];
            sb += col_b[c];
            sbb += col_bb[c];
            sab += col_ab[c];
          }
          if (x - r >= 0) {
            const int c = x - r;
            m -= col_m[c];
            sb -= col_b[c];
            sbb -= col_bb[c];
            sab -= col_ab[c];
          }
        }
      }
    }

    auto costs = vol.plane_costs(k);
    auto srcs = vol.plane_sources(k);
    for (std::size_t i = 0; i < npix; ++i) {
      srcs[i] = static_cast<std::uint8_t>(std::min(count[i], 255));
      costs[i] = count[i] >= cfg.min_valid_sources ? static_cast<float>(acc[i] / count[i])
                                                   : std::numeric_limits<float>::infinity();
    }
  }, static_cast<unsigned>(cfg.threads));
  return vol;
}

// ---------------------------------------------------------------------------
// Depth extraction

struct DepthPrediction {
  DepthMap depth;
  Raster<float> confidence;  // in [0, 1]; 0 where depth is invalid
};

/// Winner-take-all with parabolic sub-plane refinement. Confidence is the
/// margin between the best cost and the best rival outside the winner's
/// immediate neighbours, relative to the rival.
inline DepthPrediction extract_depth(const CostVolume& vol) {
  const int w = vol.width(), h = vol.height(), planes = vol.planes();
  DepthPrediction out{DepthMap(w, h), Raster<float>(w, h, 0.0f)};
  const HypothesisField& hyp = vol.hypotheses();
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      int best = -1, valid = 0;
      double best_cost = std::numeric_limits<double>::infinity();
      double worst_cost = -std::numeric_limits<double>::infinity();
      for (int k = 0; k < planes; ++k) {
        if (!vol.valid(x, y, k)) continue;
        const double c = vol.cost(x, y, k);
        ++valid;
        if (c < best_cost) {
          best_cost = c;
          best = k;
        }
        worst_cost = std::max(worst_cost, c);
      }
      if (valid < 2 || worst_cost - best_cost <= 1e-12) continue;

      double rival = std::numeric_limits<double>::infinity();
      for (int k = 0; k < planes; ++k)
        if (std::abs(k - best) >= 2 && vol.valid(x, y, k)) rival = std::min<double>(rival, vol.cost(x, y, k));
      if (!std::isfinite(rival))
        for (int k = 0; k < planes; ++k)
          if (k != best && vol.valid(x, y, k)) rival = std::min<double>(rival, vol.cost(x, y, k));

      double depth = hyp.at(x, y, best);
      if (best > 0 && best < planes - 1 && vol.valid(x, y, best - 1) && vol.valid(x, y, best + 1)) {
        const double cm = vol.cost(x, y, best - 1), cp = vol.cost(x, y, best + 1);
        const double denom = cm - 2.0 * best_cost + cp;
        if (denom > 0.0) {
          const double delta = std::clamp(0.5 * (cm - cp) / denom, -0.5, 0.5);
          const double lower = hyp.at(x, y, best - 1), upper = hyp.at(x, y, best + 1);
          depth += delta >= 0.0 ? delta * (upper - depth) : delta * (depth - lower);
        }
      }
      out.depth.set(x, y, depth);
      const double conf = rival > 0.0 ? (rival - best_cost) / rival : 0.0;
      out.confidence(x, y) = static_cast<float>(std::clamp(conf, 0.0, 1.0));
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Prediction

struct PredictConfig {
  HypothesisConfig hypotheses;
  MatchingConfig matching;
  double min_confidence = 0.05;
};

struct PosedImage {
  const Image* image = nullptr;
  RigidPose pose;  // world-from-camera
};

/// Hypotheses, sweep and extraction for one reference frame; pixels whose
/// confidence falls below `min_confidence` are invalidated.
inline DepthPrediction predict(const PosedImage& ref, std::span<const PosedImage> sources,
                               const CameraIntrinsics& intr, const DepthMap* prior, const PredictConfig& cfg) {
  if (sources.empty()) throw Error(Errc::NoSources, "predict needs at least one source frame");
  if (ref.image == nullptr) throw Error(Errc::InvalidArgument, "reference image missing");
  intr.validate();
  std::vector<SourceView> views;
  views.reserve(sources.size());
  for (const auto& s : sources) views.push_back({s.image, relative_pose(ref.pose, s.pose), intr});

  const HypothesisField hyp = build_hypotheses(cfg.hypotheses, ref.image->width(), ref.image->height(), prior);
  DepthPrediction pred = extract_depth(sweep(*ref.image, intr, views, hyp, cfg.matching));
  for (int y = 0; y < pred.depth.height(); ++y)
    for (int x = 0; x < pred.depth.width(); ++x)
      if (pred.depth.valid(x, y) && pred.confidence(x, y) < cfg.min_confidence) {
        pred.depth.invalidate(x, y);
        pred.confidence(x, y) = 0.0f;
      }
  return pred;
}

}  // namespace smap
