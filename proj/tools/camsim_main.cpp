#include <CLI11.hpp>
#include <iostream>

#include "camsim/pipeline.hpp"

namespace {

int report(const camsim::StageOutcome& outcome, const std::string& stage) {
  for (const auto& msg : outcome.failure_messages)
    std::cerr << stage << ": " << msg << "\n";
  std::cout << stage << ": " << (outcome.items - outcome.failures) << "/"
            << outcome.items << " items ok, " << outcome.outputs.size()
            << " files written\n";
  return outcome.ok() ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"camsim: automotive camera simulation pipeline"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir;
  std::uint64_t seed = 0;
  bool seed_set = false;
  int jobs = 1;

  auto add_common = [&](CLI::App* cmd, bool needs_config) {
    auto* opt = cmd->add_option("--config", config_path,
                                "pipeline configuration JSON");
    if (needs_config) opt->required();
    cmd->add_option("--out", out_dir, "output directory override");
    cmd->add_option("--seed", seed, "master seed override")
        ->each([&](const std::string&) { seed_set = true; });
    cmd->add_option("--jobs", jobs, "worker threads per stage")
        ->check(CLI::PositiveNumber);
  };

  auto* assemble = app.add_subcommand("assemble", "write scene recipes");
  add_common(assemble, true);

  auto* render_cmd =
      app.add_subcommand("render", "render recipes to spectral images");
  add_common(render_cmd, true);
  std::vector<std::string> recipe_paths;
  render_cmd->add_option("recipes", recipe_paths,
                         "recipe files (default: all from the manifest)");

  auto* sensor_cmd =
      app.add_subcommand("sensor", "simulate sensors over rendered images");
  add_common(sensor_cmd, true);
  std::vector<std::string> image_paths;
  sensor_cmd->add_option("images", image_paths,
                         "spectral containers (default: all rendered)");

  auto* evaluate =
      app.add_subcommand("evaluate", "score detections against ground truth");
  add_common(evaluate, true);
  std::string detections_path;
  std::vector<std::string> gt_sources;
  evaluate->add_option("--detections", detections_path,
                       "detections text file (overrides config)");
  evaluate->add_option("--ground-truth", gt_sources,
                       "SPIM containers or ground-truth text files");

  auto* all = app.add_subcommand("all", "run the whole pipeline");
  add_common(all, true);

  CLI11_PARSE(app, argc, argv);

  try {
    camsim::PipelineConfig cfg = camsim::PipelineConfig::load(config_path);
    if (!out_dir.empty()) cfg.output_dir = out_dir;
    if (seed_set) cfg.master_seed = seed;

    namespace fs = std::filesystem;
    auto manifest_recipes = [&]() {
      std::vector<std::string> paths;
      const fs::path dir = fs::path(cfg.output_dir) / "recipes";
      if (fs::is_directory(dir))
        for (const auto& e : fs::directory_iterator(dir))
          if (e.path().extension() == ".json") paths.push_back(e.path().string());
      std::sort(paths.begin(), paths.end());
      return paths;
    };
    auto rendered_images = [&]() {
      std::vector<std::string> paths;
      const fs::path dir = fs::path(cfg.output_dir) / "images";
      if (fs::is_directory(dir))
        for (const auto& e : fs::directory_iterator(dir))
          if (e.path().extension() == ".spim") paths.push_back(e.path().string());
      std::sort(paths.begin(), paths.end());
      return paths;
    };

    if (*assemble) return report(camsim::cmd_assemble(cfg), "assemble");
    if (*render_cmd) {
      auto paths = recipe_paths.empty() ? manifest_recipes() : recipe_paths;
      return report(
          camsim::cmd_render(paths, cfg.render, cfg.output_dir, jobs),
          "render");
    }
    if (*sensor_cmd) {
      auto paths = image_paths.empty() ? rendered_images() : image_paths;
      return report(camsim::cmd_sensor(paths, cfg.sensor_specs,
                                       cfg.output_dir, jobs, cfg.render.grid),
                    "sensor");
    }
    if (*evaluate) {
      const std::string dets =
          detections_path.empty() ? cfg.eval_detections : detections_path;
      if (dets.empty()) {
        std::cerr << "evaluate: no detections file given\n";
        return 2;
      }
      auto gts = gt_sources.empty()
                     ? std::vector<std::string>(rendered_images())
                     : gt_sources;
      return report(camsim::cmd_evaluate(dets, gts, cfg.eval_iou_threshold,
                                         cfg.eval_bins_m, cfg.output_dir),
                    "evaluate");
    }
    if (*all) return report(camsim::cmd_all(cfg, jobs), "all");
  } catch (const camsim::Error& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
