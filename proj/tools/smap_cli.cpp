// smap: command-line front end.
//
//   smap run      --dataset DIR --out DIR [--config FILE] [--section.key VALUE ...]
//   smap ablate   --dataset DIR --out DIR [...]
//   smap synth    --scene room|plane|FILE.json --out DIR [--frames N] ...
//   smap eval-depth --pred FILE --gt FILE [--gt-scale S] [--max-depth M]
//   smap eval-mesh  --pred FILE.ply --gt FILE.ply [--samples N] [--threshold CM]
//   smap config   (prints the default configuration)
//
// Exit codes: 0 success, 1 usage or configuration error, 2 data error,
// 3 internal error.

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <map>
#include <string>

#include "smap/smap.hpp"

namespace {

using smap::Errc;
using smap::Error;
namespace fs = std::filesystem;

constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitInternal = 3;

/// Options shared by `run` and `ablate`: a config file plus one flag per
/// configuration key.
struct ConfigFlags {
  std::string config_file;
  std::map<std::string, std::string> values;

  void attach(CLI::App& cmd) {
    cmd.add_option("--config", config_file, "JSON configuration overlaid on the defaults")->check(CLI::ExistingFile);
    for (const auto& key : smap::config_keys()) cmd.add_option("--" + key, values[key], "override " + key);
  }

  smap::PipelineConfig resolve(const CLI::App& cmd) const {
    nlohmann::json patch = nlohmann::json::object();
    if (!config_file.empty()) {
      try {
        patch = nlohmann::json::parse(smap::io::read_text(config_file));
      } catch (const nlohmann::json::exception& e) {
        throw Error(Errc::ConfigError, config_file + ": " + e.what());
      }
    }
    smap::PipelineConfig defaults_only = smap::config_from_json(patch);
    nlohmann::json merged = smap::config_to_json(defaults_only);
    for (const auto& [key, text] : values)
      if (cmd.count("--" + key) > 0) smap::set_override(merged, key, text);
    return smap::config_from_json(merged);
  }
};

smap::DepthMap load_depth(const fs::path& path, double scale) {
  if (path.extension() == ".png") return smap::io::read_depth_png(path, scale);
  return smap::io::read_dmap(path);
}

smap::TriangleMesh load_mesh(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::IoError, "cannot open " + path.string());
  return smap::read_ply(in);
}

void print_summary(const smap::RunResult& r, const fs::path& out) {
  std::cout << "keyframes processed: " << r.keyframes.size() << " (skipped " << r.skipped.size() << ")\n";
  std::cout << "mesh: " << r.mesh.vertices.size() << " vertices, " << r.mesh.triangles.size() << " triangles\n";
  std::cout << "time: " << r.timings.total << " s\n";
  std::cout << "outputs: " << out.string() << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sparse-prior guided plane-sweep depth and TSDF mapping"};
  app.require_subcommand(1);

  // run
  auto* run = app.add_subcommand("run", "Run the mapping pipeline over a dataset");
  std::string run_dataset, run_out, run_cost_volume;
  ConfigFlags run_flags;
  run->add_option("--dataset", run_dataset, "Dataset directory or manifest.json")->required();
  run->add_option("--out", run_out, "Output directory")->required();
  run->add_option("--cost-volume", run_cost_volume, "Alias for --hypotheses.mode")
      ->check(CLI::IsMember({"uniform", "prior_guided", "guided"}));
  run_flags.attach(*run);

  // ablate
  auto* abl = app.add_subcommand("ablate", "Paired uniform vs prior-guided runs");
  std::string abl_dataset, abl_out;
  ConfigFlags abl_flags;
  abl->add_option("--dataset", abl_dataset, "Dataset directory or manifest.json")->required();
  abl->add_option("--out", abl_out, "Output directory")->required();
  abl_flags.attach(*abl);

  // synth
  auto* syn = app.add_subcommand("synth", "Render a synthetic dataset");
  std::string syn_scene = "room", syn_out;
  smap::SynthOptions syn_opt;
  int syn_width = 320, syn_height = 240;
  syn->add_option("--scene", syn_scene, "room, plane, or a scene JSON file")->capture_default_str();
  syn->add_option("--out", syn_out, "Dataset directory to create")->required();
  syn->add_option("--frames", syn_opt.frames, "Number of frames")->capture_default_str()->check(CLI::Range(2, 100000));
  syn->add_option("--baseline", syn_opt.baseline, "Distance between consecutive cameras (m)")->capture_default_str();
  syn->add_option("--landmarks", syn_opt.landmark_count, "Landmark count (0 disables)")->capture_default_str();
  syn->add_option("--seed", syn_opt.seed, "Landmark sampling seed")->capture_default_str();
  syn->add_option("--depth-scale", syn_opt.depth_scale, "Metres per 16-bit depth unit")->capture_default_str();
  syn->add_option("--width", syn_width, "Image width")->capture_default_str();
  syn->add_option("--height", syn_height, "Image height")->capture_default_str();

  // eval-depth
  auto* ed = app.add_subcommand("eval-depth", "Depth metrics between two depth maps");
  std::string ed_pred, ed_gt;
  double ed_pred_scale = 1.0 / 5000.0, ed_gt_scale = 1.0 / 5000.0, ed_max = 0.0;
  ed->add_option("--pred", ed_pred, "Predicted depth (.dmap or 16-bit .png)")->required()->check(CLI::ExistingFile);
  ed->add_option("--gt", ed_gt, "Ground-truth depth (.dmap or 16-bit .png)")->required()->check(CLI::ExistingFile);
  ed->add_option("--pred-scale", ed_pred_scale, "Metres per unit for PNG predictions")->capture_default_str();
  ed->add_option("--gt-scale", ed_gt_scale, "Metres per unit for PNG ground truth")->capture_default_str();
  ed->add_option("--max-depth", ed_max, "Ignore ground truth beyond this depth (m)");

  // eval-mesh
  auto* em = app.add_subcommand("eval-mesh", "Mesh metrics between two meshes");
  std::string em_pred, em_gt;
  std::size_t em_samples = 800000;
  double em_threshold = 5.0;
  std::uint64_t em_seed = 0;
  em->add_option("--pred", em_pred, "Predicted mesh (.ply)")->required()->check(CLI::ExistingFile);
  em->add_option("--gt", em_gt, "Ground-truth mesh (.ply)")->required()->check(CLI::ExistingFile);
  em->add_option("--samples", em_samples, "Surface samples per mesh")->capture_default_str();
  em->add_option("--threshold", em_threshold, "Inlier threshold (cm)")->capture_default_str();
  em->add_option("--seed", em_seed, "Sampling seed")->capture_default_str();

  auto* cfg_cmd = app.add_subcommand("config", "Print the default configuration as JSON");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    if (*run) {
      smap::PipelineConfig cfg = run_flags.resolve(*run);
      if (!run_cost_volume.empty())
        cfg.predict.hypotheses.mode =
            run_cost_volume == "uniform" ? smap::HypothesisMode::uniform : smap::HypothesisMode::prior_guided;
      cfg.validate();
      const auto manifest = smap::read_manifest(run_dataset);
      const auto result = smap::run(manifest, cfg, run_out);
      print_summary(result, run_out);
    } else if (*abl) {
      const smap::PipelineConfig cfg = abl_flags.resolve(*abl);
      const auto ds = smap::load_dataset(smap::read_manifest(abl_dataset));
      const auto result = smap::ablate(ds, cfg);
      smap::PipelineConfig ucfg = cfg, gcfg = cfg;
      ucfg.predict.hypotheses.mode = smap::HypothesisMode::uniform;
      gcfg.predict.hypotheses.mode = smap::HypothesisMode::prior_guided;
      smap::write_outputs(result.uniform, ucfg, fs::path(abl_out) / "uniform");
      smap::write_outputs(result.guided, gcfg, fs::path(abl_out) / "prior_guided");
      smap::io::atomic_write_text(fs::path(abl_out) / "ablation.json", result.summary.dump(2) + "\n");
      std::cout << result.summary.dump(2) << "\n";
    } else if (*syn) {
      smap::synth::Scene scene;
      if (syn_scene == "room") {
        scene = smap::synth::room_scene();
      } else if (syn_scene == "plane") {
        scene = smap::synth::plane_scene();
      } else {
        try {
          scene = smap::synth::scene_from_json(nlohmann::json::parse(smap::io::read_text(syn_scene)));
        } catch (const nlohmann::json::exception& e) {
          throw Error(Errc::ParseError, syn_scene + ": " + e.what());
        }
      }
      syn_opt.intrinsics = smap::synth::default_intrinsics(syn_width, syn_height);
      syn_opt.landmarks = syn_opt.landmark_count > 0;
      smap::write_synthetic_dataset(scene, syn_opt, syn_out);
      std::cout << "wrote " << syn_opt.frames << " frames to " << syn_out << "\n";
    } else if (*ed) {
      const auto pred = load_depth(ed_pred, ed_pred_scale);
      const auto gt = load_depth(ed_gt, ed_gt_scale);
      if (!pred.same_shape(gt))
        throw Error(Errc::ParseError, ed_pred + " and " + ed_gt + " have different dimensions");
      const auto m = smap::depth_metrics(pred, gt, ed_max > 0.0 ? std::optional<double>(ed_max) : std::nullopt);
      std::cout << nlohmann::json(m).dump(2) << "\n";
    } else if (*em) {
      const auto pred = smap::sample_mesh(load_mesh(em_pred), em_samples, em_seed);
      const auto gt = smap::sample_mesh(load_mesh(em_gt), em_samples, em_seed + 1);
      std::cout << nlohmann::json(smap::mesh_metrics(pred, gt, em_threshold)).dump(2) << "\n";
    } else if (*cfg_cmd) {
      std::cout << smap::config_to_json(smap::PipelineConfig{}).dump(2) << "\n";
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return smap::is_config_error(e.code()) ? kExitUsage : kExitData;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return kExitInternal;
  }
  return 0;
}
