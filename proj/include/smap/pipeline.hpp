#pragma once

// Dataset ingestion and the per-keyframe pipeline:
// keyframe window -> sparse prior -> densified prior -> plane sweep -> TSDF,
// then mesh extraction and evaluation.

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <json.hpp>

#include "smap/config.hpp"
#include "smap/eval.hpp"
#include "smap/fusion.hpp"
#include "smap/io.hpp"
#include "smap/keyframe.hpp"
#include "smap/mesh.hpp"
#include "smap/mvs.hpp"
#include "smap/sparse_prior.hpp"
#include "smap/synth.hpp"

namespace smap {

namespace fs = std::filesystem;

// ---------------------------------------------------------------------------
// Dataset

/// manifest.json: paths are relative to the manifest's directory.
struct DatasetManifest {
  fs::path root;
  std::string intrinsics = "intrinsics.txt";
  std::string poses = "poses.txt";
  std::string images = "images";
  std::optional<std::string> depth;      // 16-bit PNG directory
  std::optional<std::string> landmarks;  // `id x y z` file
  double depth_scale = 1.0 / 5000.0;     // metres per depth unit
};

inline DatasetManifest read_manifest(const fs::path& path) {
  const fs::path file = fs::is_directory(path) ? path / "manifest.json" : path;
  DatasetManifest m;
  m.root = file.parent_path();
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(io::read_text(file));
    m.intrinsics = j.value("intrinsics", m.intrinsics);
    m.poses = j.value("poses", m.poses);
    m.images = j.value("images", m.images);
    if (j.contains("depth") && !j["depth"].is_null()) m.depth = j["depth"].get<std::string>();
    if (j.contains("landmarks") && !j["landmarks"].is_null()) m.landmarks = j["landmarks"].get<std::string>();
    m.depth_scale = j.value("depth_scale", m.depth_scale);
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::ParseError, file.string() + ": " + e.what());
  }
  if (!(m.depth_scale > 0.0)) throw Error(Errc::ParseError, file.string() + ": depth_scale must be > 0");
  return m;
}

inline void write_manifest(const fs::path& dir, const DatasetManifest& m) {
  nlohmann::json j = {{"intrinsics", m.intrinsics}, {"poses", m.poses}, {"images", m.images},
                      {"depth_scale", m.depth_scale}};
  j["depth"] = m.depth ? nlohmann::json(*m.depth) : nlohmann::json(nullptr);
  j["landmarks"] = m.landmarks ? nlohmann::json(*m.landmarks) : nlohmann::json(nullptr);
  io::atomic_write_text(dir / "manifest.json", j.dump(2) + "\n");
}

struct Frame {
  double timestamp = 0.0;
  std::string token;  // timestamp as written in the pose file
  RigidPose pose;     // world-from-camera
  Image image;
  std::optional<DepthMap> gt_depth;
};

struct Dataset {
  CameraIntrinsics intrinsics;
  std::vector<Frame> frames;  // timestamp order; a frame's id is its index
  std::optional<std::vector<Landmark>> landmarks;
};

/// Loads every frame named by the pose file. Image (and depth) files are
/// `<timestamp token>.png`.
inline Dataset load_dataset(const DatasetManifest& m) {
  Dataset ds;
  ds.intrinsics = io::read_intrinsics(m.root / m.intrinsics);
  auto poses = io::read_poses(m.root / m.poses);
  std::stable_sort(poses.begin(), poses.end(),
                   [](const io::StampedPose& a, const io::StampedPose& b) { return a.timestamp < b.timestamp; });
  for (std::size_t i = 1; i < poses.size(); ++i)
    if (poses[i].timestamp == poses[i - 1].timestamp)
      throw Error(Errc::ParseError, (m.root / m.poses).string() + ": duplicate timestamp " + poses[i].token);
  for (const auto& p : poses) {
    Frame f;
    f.timestamp = p.timestamp;
    f.token = p.token;
    f.pose = p.pose;
    const fs::path img = m.root / m.images / (p.token + ".png");
    if (!fs::exists(img)) throw Error(Errc::MissingFrame, "no image for timestamp " + p.token + " (" + img.string() + ")");
    f.image = io::read_image(img);
    if (f.image.width() != ds.intrinsics.width || f.image.height() != ds.intrinsics.height)
      throw Error(Errc::ParseError, img.string() + ": size differs from the intrinsics");
    if (m.depth) {
      const fs::path dp = m.root / *m.depth / (p.token + ".png");
      if (!fs::exists(dp)) throw Error(Errc::MissingFrame, "no depth for timestamp " + p.token + " (" + dp.string() + ")");
      f.gt_depth = io::read_depth_png(dp, m.depth_scale);
      if (!f.gt_depth->same_shape(f.image)) throw Error(Errc::ParseError, dp.string() + ": size differs from the image");
    }
    ds.frames.push_back(std::move(f));
  }
  if (m.landmarks) ds.landmarks = io::read_landmarks(m.root / *m.landmarks);
  return ds;
}

// ---------------------------------------------------------------------------
// Keyframe records

/// Landmarks seen by each frame: in front of the camera within d_th, inside
/// the image and, when ground-truth depth exists, not occluded (within 5% of
/// the depth at its pixel). Observations are filled in on `landmarks`.
///
/// Without landmarks, co-visibility is approximated by 10 cm voxels of
/// ground-truth surface sampled on an 8-pixel grid.
inline std::vector<KeyframeRecord> build_keyframe_records(const Dataset& ds, const LandmarkFilterConfig& lf,
                                                          std::vector<Landmark>* landmarks) {
  std::vector<KeyframeRecord> records(ds.frames.size());
  const auto& intr = ds.intrinsics;
  for (std::size_t f = 0; f < ds.frames.size(); ++f) {
    const Frame& fr = ds.frames[f];
    KeyframeRecord& rec = records[f];
    rec.id = static_cast<std::int64_t>(f);
    rec.pose = fr.pose;
    rec.timestamp = fr.timestamp;
    const RigidPose cam_from_world = fr.pose.inverse();
    if (landmarks) {
      for (auto& lm : *landmarks) {
        const Vec3 pc = cam_from_world.apply(lm.position);
        const double z = pc.z();
        if (!(z > 1e-6) || z > lf.d_th) continue;
        const Vec2 px = project(pc, intr).pixel;
        if (!intr.in_bounds(px)) continue;
        if (fr.gt_depth) {
          const int x = round_pixel(px.x()), y = round_pixel(px.y());
          if (!fr.gt_depth->valid(x, y) || std::abs(fr.gt_depth->depth(x, y) - z) > 0.05 * z) continue;
        }
        rec.landmark_ids.insert(lm.id);
        lm.observations.push_back({rec.id, px});
      }
    } else if (fr.gt_depth) {
      constexpr double kCell = 0.10;
      for (int y = 0; y < intr.height; y += 8)
        for (int x = 0; x < intr.width; x += 8) {
          if (!fr.gt_depth->valid(x, y)) continue;
          const Vec3 pw = fr.pose.apply(unproject(Vec2(x, y), fr.gt_depth->depth(x, y), intr));
          const Index3 cell((pw / kCell).array().floor().cast<int>());
          if (block_coord_in_range(cell)) rec.landmark_ids.insert(static_cast<std::int64_t>(block_key(cell)));
        }
    }
  }
  return records;
}

// ---------------------------------------------------------------------------
// Run

struct KeyframeResult {
  std::size_t frame = 0;
  std::string token;
  std::vector<std::int64_t> window;  // reference first
  std::size_t sparse_points = 0;
  std::size_t valid_pixels = 0;
  std::optional<DepthMetrics> prior_metrics;
  std::optional<DepthMetrics> depth_metrics;
  std::optional<DepthMetrics> fused_metrics;
  DepthMap depth;
};

struct SkippedFrame {
  std::size_t frame = 0;
  std::string token;
  std::string reason;
};

struct StageTimings {
  double select = 0, prior = 0, predict = 0, integrate = 0, mesh = 0, evaluate = 0, total = 0;
};

struct RunResult {
  PriorSource prior_source = PriorSource::automatic;  // the resolved source
  std::vector<KeyframeResult> keyframes;
  std::vector<SkippedFrame> skipped;
  TriangleMesh mesh;
  std::optional<MeshMetrics> mesh_metrics;
  StageTimings timings;
};

inline PriorSource resolve_prior_source(const Dataset& ds, PriorSource requested) {
  const bool has_gt = !ds.frames.empty() && std::all_of(ds.frames.begin(), ds.frames.end(),
                                                        [](const Frame& f) { return f.gt_depth.has_value(); });
  switch (requested) {
    case PriorSource::landmarks:
      if (!ds.landmarks) throw Error(Errc::ConfigError, "prior source 'landmarks' needs a landmark file");
      return requested;
    case PriorSource::simulate:
      if (!has_gt) throw Error(Errc::ConfigError, "prior source 'simulate' needs ground-truth depth for every frame");
      return requested;
    case PriorSource::automatic:
      break;
  }
  if (ds.landmarks) return PriorSource::landmarks;
  if (has_gt) return PriorSource::simulate;
  throw Error(Errc::ConfigError, "no prior source: the dataset has neither landmarks nor ground-truth depth");
}

namespace detail {

class Stopwatch {
 public:
  double lap() {
    const auto now = std::chrono::steady_clock::now();
    const double s = std::chrono::duration<double>(now - last_).count();
    last_ = now;
    return s;
  }

 private:
  std::chrono::steady_clock::time_point last_ = std::chrono::steady_clock::now();
};

inline std::optional<DepthMetrics> try_depth_metrics(const DepthMap& pred, const DepthMap& gt,
                                                     std::optional<double> max_depth) {
  try {
    return depth_metrics(pred, gt, max_depth);
  } catch (const Error& e) {
    if (e.code() != Errc::NoOverlap) throw;
    return std::nullopt;
  }
}

/// Ground-truth surface samples: processed keyframes' depth unprojected on a
/// pixel grid, then subsampled to at most `count` points.
inline std::vector<Vec3> ground_truth_points(const Dataset& ds, const std::vector<KeyframeResult>& kfs,
                                             const EvalConfig& ec) {
  std::vector<Vec3> pts;
  for (const auto& kf : kfs) {
    const Frame& fr = ds.frames[kf.frame];
    if (!fr.gt_depth) continue;
    for (int y = 0; y < fr.gt_depth->height(); y += ec.gt_pixel_stride)
      for (int x = 0; x < fr.gt_depth->width(); x += ec.gt_pixel_stride) {
        if (!fr.gt_depth->valid(x, y)) continue;
        const double d = fr.gt_depth->depth(x, y);
        if (ec.max_depth && d > *ec.max_depth) continue;
        pts.push_back(fr.pose.apply(unproject(Vec2(x, y), d, ds.intrinsics)));
      }
  }
  if (pts.size() <= ec.mesh_samples) return pts;
  std::vector<Vec3> out;
  out.reserve(ec.mesh_samples);
  std::mt19937_64 rng(ec.seed);
  std::sample(pts.begin(), pts.end(), std::back_inserter(out), ec.mesh_samples, rng);
  return out;
}

}  // namespace detail

/// Runs the pipeline over an in-memory dataset.
inline RunResult run(const Dataset& ds, const PipelineConfig& cfg) {
  cfg.validate();
  ds.intrinsics.validate();
  RunResult res;
  res.prior_source = resolve_prior_source(ds, cfg.run.prior_source);
  detail::Stopwatch total, sw;
  const auto& intr = ds.intrinsics;

  std::optional<std::vector<Landmark>> landmarks = ds.landmarks;
  const auto records = build_keyframe_records(ds, cfg.landmark_filter, landmarks ? &*landmarks : nullptr);
  std::map<std::int64_t, RigidPose> keyframe_poses;
  for (const auto& r : records) keyframe_poses.emplace(r.id, r.pose);
  res.timings.select += sw.lap();

  TsdfVolume volume(cfg.fusion.tsdf);
  const bool guided = cfg.predict.hypotheses.mode == HypothesisMode::prior_guided;

  for (std::size_t i = 0; i < ds.frames.size(); i += static_cast<std::size_t>(cfg.run.stride)) {
    const Frame& fr = ds.frames[i];
    try {
      sw.lap();
      std::vector<KeyframeRecord> window;
      try {
        window = select_window(records[i], std::span<const KeyframeRecord>(records.data(), i), cfg.selection);
      } catch (const Error& e) {
        if (e.code() != Errc::InsufficientKeyframes) throw;
        res.skipped.push_back({i, fr.token, e.message()});
        res.timings.select += sw.lap();
        continue;
      }
      res.timings.select += sw.lap();

      KeyframeResult kf;
      kf.frame = i;
      kf.token = fr.token;
      for (const auto& w : window) kf.window.push_back(w.id);

      SparseDepthMap sparse;
      if (res.prior_source == PriorSource::landmarks) {
        sparse = project_landmarks(*landmarks, fr.pose, intr, cfg.landmark_filter, keyframe_poses);
      } else {
        NoiseConfig nc = cfg.noise;
        nc.seed = cfg.noise.seed + i;
        sparse = filter_sparse_depth(simulate_noisy_sparse(*fr.gt_depth, fr.image, nc, intr, fr.pose),
                                     cfg.landmark_filter.d_th);
      }
      kf.sparse_points = sparse.valid_count();
      const DepthMap prior = densify(sparse, fr.image, cfg.densifier);
      res.timings.prior += sw.lap();

      std::vector<PosedImage> sources;
      for (std::size_t s = 1; s < window.size(); ++s) {
        const Frame& src = ds.frames[static_cast<std::size_t>(window[s].id)];
        sources.push_back({&src.image, src.pose});
      }
      DepthPrediction pred = predict({&fr.image, fr.pose}, sources, intr, guided ? &prior : nullptr, cfg.predict);
      kf.valid_pixels = pred.depth.valid_count();
      res.timings.predict += sw.lap();

      if (cfg.fusion.enabled) integrate(volume, pred.depth, &pred.confidence, fr.pose, intr);
      res.timings.integrate += sw.lap();

      if (fr.gt_depth) {
        kf.prior_metrics = detail::try_depth_metrics(prior, *fr.gt_depth, cfg.eval.max_depth);
        kf.depth_metrics = detail::try_depth_metrics(pred.depth, *fr.gt_depth, cfg.eval.max_depth);
      }
      kf.depth = std::move(pred.depth);
      res.timings.evaluate += sw.lap();
      res.keyframes.push_back(std::move(kf));
    } catch (const Error& e) {
      throw Error(e.code(), "keyframe " + fr.token + ": " + e.message());
    }
  }

  sw.lap();
  if (cfg.fusion.enabled) res.mesh = extract_mesh(volume);
  res.timings.mesh += sw.lap();

  if (cfg.fusion.enabled && cfg.eval.render_fused)
    for (auto& kf : res.keyframes) {
      const Frame& fr = ds.frames[kf.frame];
      if (fr.gt_depth)
        kf.fused_metrics = detail::try_depth_metrics(render_depth(volume, fr.pose, intr), *fr.gt_depth, cfg.eval.max_depth);
    }
  if (!res.mesh.empty()) {
    const auto gt = detail::ground_truth_points(ds, res.keyframes, cfg.eval);
    if (!gt.empty()) {
      const auto pred_pts = sample_mesh(res.mesh, cfg.eval.mesh_samples, cfg.eval.seed);
      res.mesh_metrics = mesh_metrics(pred_pts, gt, cfg.eval.mesh_threshold_cm);
    }
  }
  res.timings.evaluate += sw.lap();
  res.timings.total = total.lap();
  return res;
}

// ---------------------------------------------------------------------------
// Outputs

namespace detail {

inline nlohmann::json optional_json(const std::optional<DepthMetrics>& m) {
  return m ? nlohmann::json(*m) : nlohmann::json(nullptr);
}

inline nlohmann::json mean_metrics(const std::vector<KeyframeResult>& kfs,
                                   std::optional<DepthMetrics> KeyframeResult::*field) {
  DepthMetrics mean;
  std::size_t n = 0;
  for (const auto& kf : kfs) {
    const auto& m = kf.*field;
    if (!m) continue;
    mean.abs_diff += m->abs_diff;
    mean.sq_rel += m->sq_rel;
    mean.rmse += m->rmse;
    mean.delta_105 += m->delta_105;
    mean.delta_125 += m->delta_125;
    mean.count += m->count;
    ++n;
  }
  if (n == 0) return nullptr;
  mean.abs_diff /= n;
  mean.sq_rel /= n;
  mean.rmse /= n;
  mean.delta_105 /= n;
  mean.delta_125 /= n;
  return mean;
}

}  // namespace detail

/// Deterministic metrics document: identical inputs give identical bytes.
inline nlohmann::json metrics_json(const RunResult& r, const PipelineConfig& cfg) {
  nlohmann::json kfs = nlohmann::json::array();
  for (const auto& kf : r.keyframes) {
    kfs.push_back({{"frame", kf.frame},
                   {"timestamp", kf.token},
                   {"window", kf.window},
                   {"sparse_points", kf.sparse_points},
                   {"valid_pixels", kf.valid_pixels},
                   {"prior", detail::optional_json(kf.prior_metrics)},
                   {"depth", detail::optional_json(kf.depth_metrics)},
                   {"fused", detail::optional_json(kf.fused_metrics)}});
  }
  nlohmann::json j;
  j["cost_volume"] = to_string(cfg.predict.hypotheses.mode);
  j["prior_source"] = to_string(r.prior_source);
  j["keyframes"] = kfs;
  j["mean"] = {{"prior", detail::mean_metrics(r.keyframes, &KeyframeResult::prior_metrics)},
               {"depth", detail::mean_metrics(r.keyframes, &KeyframeResult::depth_metrics)},
               {"fused", detail::mean_metrics(r.keyframes, &KeyframeResult::fused_metrics)}};
  j["mesh"] = r.mesh_metrics ? nlohmann::json(*r.mesh_metrics) : nlohmann::json(nullptr);
  j["mesh_size"] = {{"vertices", r.mesh.vertices.size()}, {"triangles", r.mesh.triangles.size()}};
  return j;
}

/// Timings and bookkeeping; not deterministic.
inline nlohmann::json report_json(const RunResult& r, const PipelineConfig& cfg) {
  nlohmann::json skipped = nlohmann::json::array();
  for (const auto& s : r.skipped) skipped.push_back({{"frame", s.frame}, {"timestamp", s.token}, {"reason", s.reason}});
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& kf : r.keyframes)
    rows.push_back({{"frame", kf.frame}, {"timestamp", kf.token}, {"window", kf.window},
                    {"abs_diff", kf.depth_metrics ? nlohmann::json(kf.depth_metrics->abs_diff) : nlohmann::json(nullptr)}});
  const auto& t = r.timings;
  return {{"config", config_to_json(cfg)},
          {"keyframes_processed", r.keyframes.size()},
          {"keyframes", rows},
          {"skipped", skipped},
          {"timings_s",
           {{"select", t.select},
            {"prior", t.prior},
            {"predict", t.predict},
            {"integrate", t.integrate},
            {"mesh", t.mesh},
            {"evaluate", t.evaluate},
            {"total", t.total}}}};
}

struct NamedDepth {
  std::string name;
  const DepthMap* depth = nullptr;
};

/// depth/<name>.dmap, mesh.ply and metrics.json, each written atomically.
inline void write_outputs(std::span<const NamedDepth> depths, const TriangleMesh& mesh, const nlohmann::json& metrics,
                          const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir / "depth", ec);
  if (ec || !fs::is_directory(dir / "depth")) throw Error(Errc::IoError, "cannot create " + (dir / "depth").string());
  for (const auto& d : depths) io::write_dmap(dir / "depth" / (d.name + ".dmap"), *d.depth);
  io::atomic_write(dir / "mesh.ply", [&](std::ostream& os) { write_ply(os, mesh); });
  io::atomic_write_text(dir / "metrics.json", metrics.dump(2) + "\n");
}

inline void write_outputs(const RunResult& r, const PipelineConfig& cfg, const fs::path& dir) {
  std::vector<NamedDepth> depths;
  for (const auto& kf : r.keyframes) depths.push_back({kf.token, &kf.depth});
  write_outputs(depths, r.mesh, metrics_json(r, cfg), dir);
  io::atomic_write_text(dir / "report.json", report_json(r, cfg).dump(2) + "\n");
}

inline RunResult run(const DatasetManifest& manifest, const PipelineConfig& cfg, const fs::path& out_dir) {
  cfg.validate();
  const Dataset ds = load_dataset(manifest);
  RunResult r = run(ds, cfg);
  write_outputs(r, cfg, out_dir);
  return r;
}

// ---------------------------------------------------------------------------
// Guided-vs-uniform ablation

struct AblationResult {
  RunResult uniform;
  RunResult guided;
  nlohmann::json summary;
};

inline nlohmann::json ablation_summary(const RunResult& uniform, const RunResult& guided) {
  std::map<std::size_t, double> u;
  for (const auto& kf : uniform.keyframes)
    if (kf.depth_metrics) u[kf.frame] = kf.depth_metrics->abs_diff;
  nlohmann::json rows = nlohmann::json::array();
  std::size_t n = 0, guided_not_worse = 0;
  double su = 0.0, sg = 0.0;
  for (const auto& kf : guided.keyframes) {
    auto it = u.find(kf.frame);
    if (!kf.depth_metrics || it == u.end()) continue;
    const double g = kf.depth_metrics->abs_diff;
    rows.push_back({{"frame", kf.frame}, {"timestamp", kf.token}, {"uniform_abs_diff", it->second}, {"guided_abs_diff", g}});
    ++n;
    guided_not_worse += g <= it->second ? 1 : 0;
    su += it->second;
    sg += g;
  }
  nlohmann::json j;
  j["keyframes"] = rows;
  j["compared"] = n;
  j["guided_not_worse_fraction"] = n ? double(guided_not_worse) / n : 0.0;
  j["mean_abs_diff"] = {{"uniform", n ? su / n : 0.0}, {"prior_guided", n ? sg / n : 0.0}};
  return j;
}

/// Runs the same dataset with uniform and prior-guided hypotheses; every
/// other setting, including the simulated noise, is shared.
inline AblationResult ablate(const Dataset& ds, PipelineConfig cfg) {
  AblationResult out;
  cfg.predict.hypotheses.mode = HypothesisMode::uniform;
  out.uniform = run(ds, cfg);
  cfg.predict.hypotheses.mode = HypothesisMode::prior_guided;
  out.guided = run(ds, cfg);
  out.summary = ablation_summary(out.uniform, out.guided);
  return out;
}

// ---------------------------------------------------------------------------
// Synthetic datasets

struct SynthOptions {
  int frames = 100;
  double baseline = 0.1;
  int landmark_count = 4000;
  std::uint64_t seed = 0;
  double depth_scale = 1.0 / 5000.0;
  CameraIntrinsics intrinsics = synth::default_intrinsics();
  bool landmarks = true;
};

/// Renders the orbit in memory (float images, exact depth).
inline Dataset make_synthetic_dataset(const synth::Scene& scene, const SynthOptions& opt) {
  Dataset ds;
  ds.intrinsics = opt.intrinsics;
  const auto traj = synth::orbit_trajectory(scene, opt.frames, opt.baseline);
  for (const auto& tp : traj) {
    auto view = synth::render(scene, tp.pose, opt.intrinsics);
    ds.frames.push_back({tp.timestamp, io::format_timestamp(tp.timestamp), tp.pose, std::move(view.image),
                         std::move(view.depth)});
  }
  if (opt.landmarks) {
    auto lms = synth::scene_landmarks(scene, traj, opt.intrinsics, opt.landmark_count, opt.seed);
    for (auto& lm : lms) lm.observations.clear();  // the landmark file carries positions only
    ds.landmarks = std::move(lms);
  }
  return ds;
}

/// Writes a dataset directory: images/, depth/ (16-bit), poses.txt,
/// intrinsics.txt, landmarks.txt, scene.json and manifest.json.
inline DatasetManifest write_synthetic_dataset(const synth::Scene& scene, const SynthOptions& opt, const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir / "images", ec);
  fs::create_directories(dir / "depth", ec);
  if (!fs::is_directory(dir / "images") || !fs::is_directory(dir / "depth"))
    throw Error(Errc::IoError, "cannot create dataset directories under " + dir.string());
  const Dataset ds = make_synthetic_dataset(scene, opt);
  std::vector<io::StampedPose> poses;
  for (const auto& f : ds.frames) {
    io::write_image(dir / "images" / (f.token + ".png"), f.image);
    io::write_depth_png(dir / "depth" / (f.token + ".png"), *f.gt_depth, opt.depth_scale);
    poses.push_back({f.timestamp, f.token, f.pose});
  }
  io::write_poses(dir / "poses.txt", poses);
  io::write_intrinsics(dir / "intrinsics.txt", ds.intrinsics);
  DatasetManifest m;
  m.root = dir;
  m.depth = "depth";
  m.depth_scale = opt.depth_scale;
  if (ds.landmarks) {
    io::write_landmarks(dir / "landmarks.txt", *ds.landmarks);
    m.landmarks = "landmarks.txt";
  }
  io::atomic_write_text(dir / "scene.json", synth::scene_to_json(scene).dump(2) + "\n");
  write_manifest(dir, m);
  return m;
}

}  // namespace smap
