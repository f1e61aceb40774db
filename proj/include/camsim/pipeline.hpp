#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "camsim/assembly.hpp"
#include "camsim/eval.hpp"
#include "camsim/render.hpp"
#include "camsim/sensor.hpp"

namespace camsim {

/// Batch configuration for the whole pipeline. JSON schema in
/// docs/formats.md. Stage seeds derive from the master seed by
/// stage-name-keyed hashing, so reruns and stage-by-stage runs agree.
struct PipelineConfig {
  std::string asset_store;
  std::string output_dir = "out";
  std::uint64_t master_seed = 0;
  int scene_count = 1;

  RoadNetwork road;
  TrafficConfig traffic;
  CameraConfig camera_template;
  LightingConfig lighting;
  double shutter_open_s = 0.0;
  double shutter_close_s = 0.01;

  RenderConfig render;
  std::vector<std::string> sensor_specs;  // paths to sensor JSON files

  double eval_iou_threshold = 0.5;
  std::vector<double> eval_bins_m = default_distance_bins();
  std::string eval_detections;  // optional; empty = synthesize from GT

  static PipelineConfig load(const std::string& path);
  static PipelineConfig parse(const std::string& json_text,
                              const std::string& base_dir);
};

std::uint64_t derive_stage_seed(std::uint64_t master_seed,
                                const std::string& stage_name);

struct StageOutcome {
  int items = 0;
  int failures = 0;
  std::vector<std::string> outputs;           // files written
  std::vector<std::string> failure_messages;  // one per failed item

  bool ok() const { return failures == 0; }
};

/// Write scene_count recipes plus a manifest (recipe paths and seeds) and
/// per-recipe placement logs under <output_dir>/recipes.
StageOutcome cmd_assemble(const PipelineConfig& cfg);

/// Render each recipe into a SPIM container plus a preview PNG under
/// <output_dir>/images; failures are isolated per recipe. `jobs` sets the
/// renderer's thread count (output is thread-count independent).
StageOutcome cmd_render(const std::vector<std::string>& recipe_paths,
                        const RenderConfig& cfg, const std::string& output_dir,
                        int jobs);

/// Cartesian product of spectral images and sensor specs under
/// <output_dir>/sensor (supports A/B sensor comparisons in one run).
StageOutcome cmd_sensor(const std::vector<std::string>& image_paths,
                        const std::vector<std::string>& spec_paths,
                        const std::string& output_dir, int jobs,
                        const WavelengthGrid& grid);

/// Score detections against ground truth extracted from the rendered
/// containers (or a ground-truth text file) and emit AP JSON + CSV curve
/// data under <output_dir>/eval. Prints a summary table to stdout unless
/// quiet.
StageOutcome cmd_evaluate(const std::string& detections_path,
                          const std::vector<std::string>& gt_sources,
                          double iou_threshold,
                          const std::vector<double>& bins_m,
                          const std::string& output_dir, bool quiet = false);

/// assemble -> render -> sensor -> evaluate. When cfg.eval_detections is
/// empty, a deterministic detection set is synthesized from the rendered
/// ground truth (seeded by the master seed) so the full pipeline runs
/// end to end without an external network.
StageOutcome cmd_all(const PipelineConfig& cfg, int jobs, bool quiet = false);

/// Deterministic pseudo-detections from ground truth: box jitter of up to
/// one pixel and hash-derived scores. Used by `all` and the demo config.
std::vector<Detection> synthesize_detections(
    const std::vector<GroundTruthObject>& gts, std::uint64_t seed,
    double drop_beyond_m = -1.0);

}  // namespace camsim
