#pragma once

// Pipeline configuration: one JSON document with a section per stage.
// Files and dotted-key overrides are overlaid on the defaults; unknown keys
// and wrong types are rejected.

#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "smap/fusion.hpp"
#include "smap/keyframe.hpp"
#include "smap/mvs.hpp"
#include "smap/sparse_prior.hpp"

namespace smap {

enum class PriorSource { automatic, landmarks, simulate };

struct FusionConfig {
  bool enabled = true;
  TsdfConfig tsdf;
};

struct EvalConfig {
  std::optional<double> max_depth;  // metres; unset evaluates every depth
  double mesh_threshold_cm = 5.0;
  std::size_t mesh_samples = 800000;
  int gt_pixel_stride = 2;  // ground-truth surface points taken from every n-th pixel
  std::uint64_t seed = 0;
  bool render_fused = false;  // also score depth rendered from the TSDF
};

struct RunConfig {
  PriorSource prior_source = PriorSource::automatic;
  int stride = 1;  // run MVS on every stride-th frame
};

struct PipelineConfig {
  SelectionConfig selection;
  LandmarkFilterConfig landmark_filter;
  NoiseConfig noise;
  DensifierConfig densifier;
  PredictConfig predict;
  FusionConfig fusion;
  EvalConfig eval;
  RunConfig run;

  void validate() const {
    selection.validate();
    landmark_filter.validate();
    noise.validate();
    densifier.validate();
    predict.hypotheses.validate();
    predict.matching.validate();
    if (!(predict.min_confidence >= 0.0 && predict.min_confidence <= 1.0))
      throw Error(Errc::ConfigError, "predict.min_confidence must be in [0, 1]");
    fusion.tsdf.validate();
    if (eval.max_depth && !(*eval.max_depth > 0.0)) throw Error(Errc::ConfigError, "eval.max_depth must be > 0");
    if (!(eval.mesh_threshold_cm > 0.0)) throw Error(Errc::ConfigError, "eval.mesh_threshold_cm must be > 0");
    if (eval.mesh_samples < 1) throw Error(Errc::ConfigError, "eval.mesh_samples must be >= 1");
    if (eval.gt_pixel_stride < 1) throw Error(Errc::ConfigError, "eval.gt_pixel_stride must be >= 1");
    if (run.stride < 1) throw Error(Errc::ConfigError, "run.stride must be >= 1");
  }
};

// ---------------------------------------------------------------------------
// Enum names

namespace detail {

template <typename E>
struct EnumName {
  E value;
  const char* name;
};

inline constexpr EnumName<DistanceFilterMode> kFilterModes[] = {{DistanceFilterMode::min_separation, "min_separation"},
                                                                 {DistanceFilterMode::max_distance, "max_distance"}};
inline constexpr EnumName<DensifyFallback> kFallbacks[] = {{DensifyFallback::nearest_valid, "nearest_valid"},
                                                           {DensifyFallback::global_median, "global_median"}};
inline constexpr EnumName<HypothesisMode> kHypothesisModes[] = {{HypothesisMode::uniform, "uniform"},
                                                                {HypothesisMode::prior_guided, "prior_guided"}};
inline constexpr EnumName<MatchCost> kCosts[] = {{MatchCost::sad, "sad"}, {MatchCost::zncc, "zncc"}};
inline constexpr EnumName<PriorSource> kPriorSources[] = {
    {PriorSource::automatic, "auto"}, {PriorSource::landmarks, "landmarks"}, {PriorSource::simulate, "simulate"}};

template <typename E, std::size_t N>
const char* enum_to_string(E v, const EnumName<E> (&table)[N]) {
  for (const auto& e : table)
    if (e.value == v) return e.name;
  return "?";
}

template <typename E, std::size_t N>
E enum_from_string(const std::string& s, const EnumName<E> (&table)[N], const std::string& key) {
  for (const auto& e : table)
    if (s == e.name) return e.value;
  std::string allowed;
  for (const auto& e : table) allowed += std::string(allowed.empty() ? "" : ", ") + e.name;
  throw Error(Errc::ConfigError, key + ": '" + s + "' is not one of " + allowed);
}

}  // namespace detail

inline const char* to_string(HypothesisMode m) { return detail::enum_to_string(m, detail::kHypothesisModes); }
inline const char* to_string(PriorSource p) { return detail::enum_to_string(p, detail::kPriorSources); }

// ---------------------------------------------------------------------------
// JSON

inline nlohmann::json config_to_json(const PipelineConfig& c) {
  using detail::enum_to_string;
  nlohmann::json j;
  j["selection"] = {{"p_th", c.selection.p_th},
                    {"t_th", c.selection.t_th},
                    {"alpha_near", c.selection.alpha_near},
                    {"alpha_far", c.selection.alpha_far},
                    {"min_covisibility", c.selection.min_covisibility},
                    {"window_size", c.selection.window_size},
                    {"distance_filter_mode", enum_to_string(c.selection.distance_filter_mode, detail::kFilterModes)}};
  j["landmark_filter"] = {{"d_th", c.landmark_filter.d_th}, {"r_th", c.landmark_filter.r_th}};
  j["noise"] = {{"sigma_f", c.noise.sigma_f},   {"sigma_c", c.noise.sigma_c},   {"sigma_R", c.noise.sigma_R},
                {"sigma_t", c.noise.sigma_t},   {"sigma_d", c.noise.sigma_d},   {"sigma_uv", c.noise.sigma_uv},
                {"point_count", c.noise.point_count}, {"seed", c.noise.seed}};
  j["densifier"] = {{"kernels", c.densifier.kernels},
                    {"smoothing_passes", c.densifier.smoothing_passes},
                    {"fallback", enum_to_string(c.densifier.fallback, detail::kFallbacks)}};
  const auto& h = c.predict.hypotheses;
  j["hypotheses"] = {{"mode", enum_to_string(h.mode, detail::kHypothesisModes)},
                     {"planes", h.planes},
                     {"interval", h.interval},
                     {"n1", h.n1},
                     {"n2", h.n2},
                     {"min_depth", h.min_depth},
                     {"max_depth", h.max_depth}};
  const auto& m = c.predict.matching;
  j["matching"] = {{"patch_radius", m.patch_radius},
                   {"cost", enum_to_string(m.cost, detail::kCosts)},
                   {"min_valid_sources", m.min_valid_sources},
                   {"zncc_epsilon", m.zncc_epsilon},
                   {"threads", m.threads}};
  j["predict"] = {{"min_confidence", c.predict.min_confidence}};
  j["fusion"] = {{"enabled", c.fusion.enabled},
                 {"voxel_size", c.fusion.tsdf.voxel_size},
                 {"truncation", c.fusion.tsdf.truncation},
                 {"max_weight", c.fusion.tsdf.max_weight},
                 {"block_size", c.fusion.tsdf.block_size}};
  j["eval"] = {{"max_depth", c.eval.max_depth ? nlohmann::json(*c.eval.max_depth) : nlohmann::json(nullptr)},
               {"mesh_threshold_cm", c.eval.mesh_threshold_cm},
               {"mesh_samples", c.eval.mesh_samples},
               {"gt_pixel_stride", c.eval.gt_pixel_stride},
               {"seed", c.eval.seed},
               {"render_fused", c.eval.render_fused}};
  j["run"] = {{"prior_source", enum_to_string(c.run.prior_source, detail::kPriorSources)}, {"stride", c.run.stride}};
  return j;
}

namespace detail {

inline bool nullable_key(const std::string& key) { return key == "eval.max_depth"; }

inline bool same_kind(const nlohmann::json& base, const nlohmann::json& v, const std::string& key) {
  if (v.is_null()) return nullable_key(key);
  if (base.is_null()) return nullable_key(key) && v.is_number();
  if (base.is_boolean()) return v.is_boolean();
  if (base.is_number_integer()) return v.is_number_integer() && (!base.is_number_unsigned() || v >= 0);
  if (base.is_number()) return v.is_number();
  if (base.is_string()) return v.is_string();
  if (base.is_array()) return v.is_array() && std::all_of(v.begin(), v.end(), [](const auto& e) { return e.is_number_integer(); });
  return false;
}

inline void overlay(nlohmann::json& base, const nlohmann::json& patch, const std::string& prefix) {
  if (!patch.is_object()) throw Error(Errc::ConfigError, (prefix.empty() ? "config" : prefix) + " must be an object");
  for (auto it = patch.begin(); it != patch.end(); ++it) {
    const std::string key = prefix.empty() ? it.key() : prefix + "." + it.key();
    if (!base.contains(it.key())) throw Error(Errc::ConfigError, "unknown config key '" + key + "'");
    auto& slot = base[it.key()];
    if (slot.is_object()) {
      overlay(slot, it.value(), key);
    } else {
      if (!same_kind(slot, it.value(), key)) throw Error(Errc::ConfigError, "config key '" + key + "' has the wrong type");
      slot = it.value();
    }
  }
}

}  // namespace detail

/// Reads a complete configuration (as produced by config_to_json).
inline PipelineConfig config_from_json(const nlohmann::json& patch) {
  using detail::enum_from_string;
  nlohmann::json j = config_to_json(PipelineConfig{});
  detail::overlay(j, patch, "");
  PipelineConfig c;
  try {
    const auto& s = j["selection"];
    c.selection.p_th = s["p_th"];
    c.selection.t_th = s["t_th"];
    c.selection.alpha_near = s["alpha_near"];
    c.selection.alpha_far = s["alpha_far"];
    c.selection.min_covisibility = s["min_covisibility"];
    c.selection.window_size = s["window_size"];
    c.selection.distance_filter_mode =
        enum_from_string(s["distance_filter_mode"].get<std::string>(), detail::kFilterModes, "selection.distance_filter_mode");
    c.landmark_filter.d_th = j["landmark_filter"]["d_th"];
    c.landmark_filter.r_th = j["landmark_filter"]["r_th"];
    const auto& n = j["noise"];
    c.noise.sigma_f = n["sigma_f"];
    c.noise.sigma_c = n["sigma_c"];
    c.noise.sigma_R = n["sigma_R"];
    c.noise.sigma_t = n["sigma_t"];
    c.noise.sigma_d = n["sigma_d"];
    c.noise.sigma_uv = n["sigma_uv"];
    c.noise.point_count = n["point_count"];
    c.noise.seed = n["seed"];
    const auto& d = j["densifier"];
    c.densifier.kernels = d["kernels"].get<std::vector<int>>();
    c.densifier.smoothing_passes = d["smoothing_passes"];
    c.densifier.fallback = enum_from_string(d["fallback"].get<std::string>(), detail::kFallbacks, "densifier.fallback");
    const auto& h = j["hypotheses"];
    auto& hc = c.predict.hypotheses;
    hc.mode = enum_from_string(h["mode"].get<std::string>(), detail::kHypothesisModes, "hypotheses.mode");
    hc.planes = h["planes"];
    hc.interval = h["interval"];
    hc.n1 = h["n1"];
    hc.n2 = h["n2"];
    hc.min_depth = h["min_depth"];
    hc.max_depth = h["max_depth"];
    const auto& m = j["matching"];
    c.predict.matching.patch_radius = m["patch_radius"];
    c.predict.matching.cost = enum_from_string(m["cost"].get<std::string>(), detail::kCosts, "matching.cost");
    c.predict.matching.min_valid_sources = m["min_valid_sources"];
    c.predict.matching.zncc_epsilon = m["zncc_epsilon"];
    c.predict.matching.threads = m["threads"];
    c.predict.min_confidence = j["predict"]["min_confidence"];
    const auto& f = j["fusion"];
    c.fusion.enabled = f["enabled"];
    c.fusion.tsdf.voxel_size = f["voxel_size"];
    c.fusion.tsdf.truncation = f["truncation"];
    c.fusion.tsdf.max_weight = f["max_weight"];
    c.fusion.tsdf.block_size = f["block_size"];
    const auto& e = j["eval"];
    if (!e["max_depth"].is_null()) c.eval.max_depth = e["max_depth"].get<double>();
    c.eval.mesh_threshold_cm = e["mesh_threshold_cm"];
    c.eval.mesh_samples = e["mesh_samples"];
    c.eval.gt_pixel_stride = e["gt_pixel_stride"];
    c.eval.seed = e["seed"];
    c.eval.render_fused = e["render_fused"];
    c.run.prior_source =
        enum_from_string(j["run"]["prior_source"].get<std::string>(), detail::kPriorSources, "run.prior_source");
    c.run.stride = j["run"]["stride"];
  } catch (const nlohmann::json::exception& ex) {
    throw Error(Errc::ConfigError, std::string("config: ") + ex.what());
  }
  c.validate();
  return c;
}

/// Leaf keys of the configuration in dotted form ("hypotheses.mode", ...).
inline std::vector<std::string> config_keys() {
  std::vector<std::string> keys;
  const nlohmann::json j = config_to_json(PipelineConfig{});
  for (auto it = j.begin(); it != j.end(); ++it)
    for (auto leaf = it->begin(); leaf != it->end(); ++leaf) keys.push_back(it.key() + "." + leaf.key());
  return keys;
}

/// Parses a command-line string for `key` according to the type of its default.
inline nlohmann::json parse_override_value(const std::string& key, const std::string& text) {
  const nlohmann::json defaults = config_to_json(PipelineConfig{});
  const auto dot = key.find('.');
  if (dot == std::string::npos || !defaults.contains(key.substr(0, dot)) ||
      !defaults[key.substr(0, dot)].contains(key.substr(dot + 1)))
    throw Error(Errc::ConfigError, "unknown config key '" + key + "'");
  const nlohmann::json& base = defaults[key.substr(0, dot)][key.substr(dot + 1)];
  auto bad = [&]() { return Error(Errc::ConfigError, "config key '" + key + "': cannot parse '" + text + "'"); };
  try {
    if (detail::nullable_key(key) && (text == "none" || text == "null")) return nullptr;
    if (base.is_boolean()) {
      if (text == "true" || text == "1") return true;
      if (text == "false" || text == "0") return false;
      throw bad();
    }
    if (base.is_string()) return text;
    if (base.is_array()) {
      nlohmann::json arr = nlohmann::json::array();
      std::stringstream ss(text);
      for (std::string item; std::getline(ss, item, ',');) {
        std::size_t used = 0;
        const long long v = std::stoll(item, &used);
        if (used != item.size()) throw bad();
        arr.push_back(v);
      }
      return arr;
    }
    std::size_t used = 0;
    if (base.is_number_unsigned()) {
      if (!text.empty() && text[0] == '-') throw bad();
      const unsigned long long v = std::stoull(text, &used);
      if (used != text.size()) throw bad();
      return v;
    }
    if (base.is_number_integer()) {
      const long long v = std::stoll(text, &used);
      if (used != text.size()) throw bad();
      return v;
    }
    const double v = std::stod(text, &used);
    if (used != text.size()) throw bad();
    return v;
  } catch (const std::logic_error&) {
    throw bad();
  }
}

/// Sets `key` (dotted) in a config patch object.
inline void set_override(nlohmann::json& patch, const std::string& key, const std::string& text) {
  const nlohmann::json value = parse_override_value(key, text);
  const auto dot = key.find('.');
  patch[key.substr(0, dot)][key.substr(dot + 1)] = value;
}

}  // namespace smap
