#include "camsim/pipeline.hpp"

#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "camsim/png_io.hpp"
#include "camsim/spectral_image_io.hpp"

namespace camsim {

namespace fs = std::filesystem;
using Json = nlohmann::ordered_json;

std::uint64_t derive_stage_seed(std::uint64_t master_seed,
                                const std::string& stage_name) {
  return hash_mix(master_seed, hash_str(stage_name));
}

namespace {

std::string slurp(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open: " + path);
  std::stringstream buf;
  buf << f.rdbuf();
  return buf.str();
}

void spit(const std::string& path, const std::string& text) {
  fs::create_directories(fs::path(path).parent_path());
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw IoError("cannot write: " + path);
  f << text;
  if (!f) throw IoError("failed writing: " + path);
}

std::string resolve(const std::string& p, const std::string& base) {
  if (p.empty() || fs::path(p).is_absolute() || base.empty()) return p;
  return (fs::path(base) / p).string();
}

CameraConfig camera_from_json(const Json& j) {
  CameraConfig cam;
  if (j.contains("model")) {
    const std::string m = j["model"].get<std::string>();
    if (m == "pinhole") cam.model = CameraModel::pinhole;
    else if (m == "fisheye") cam.model = CameraModel::fisheye;
    else if (m == "lens") cam.model = CameraModel::lens;
    else throw ValidationError("camera.model must be pinhole, fisheye or lens");
  }
  if (j.contains("fov_deg")) cam.fov_deg = j["fov_deg"].get<double>();
  if (j.contains("lens_file")) cam.lens_file = j["lens_file"].get<std::string>();
  if (j.contains("film_width_mm"))
    cam.film_width_mm = j["film_width_mm"].get<double>();
  if (j.contains("film_height_mm"))
    cam.film_height_mm = j["film_height_mm"].get<double>();
  if (j.contains("exposure_s")) cam.exposure_s = j["exposure_s"].get<double>();
  return cam;
}

}  // namespace

PipelineConfig PipelineConfig::parse(const std::string& json_text,
                                     const std::string& base_dir) {
  Json j;
  try {
    j = Json::parse(json_text);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("invalid pipeline JSON: ") + e.what(), 0);
  }
  PipelineConfig cfg;
  try {
  cfg.asset_store = resolve(j.at("asset_store").get<std::string>(), base_dir);
  if (j.contains("output_dir"))
    cfg.output_dir = resolve(j["output_dir"].get<std::string>(), base_dir);
  if (j.contains("master_seed"))
    cfg.master_seed = j["master_seed"].get<std::uint64_t>();
  if (j.contains("scene_count")) cfg.scene_count = j["scene_count"].get<int>();
  if (cfg.scene_count < 0)
    throw ValidationError("scene_count must be >= 0");

  if (j.contains("road")) {
    const Json& r = j["road"];
    cfg.road = r.is_string()
                   ? load_road_network(resolve(r.get<std::string>(), base_dir))
                   : parse_road_network(r.dump());
  }
  if (j.contains("traffic")) {
    const Json& t = j["traffic"];
    cfg.traffic = t.is_string()
                      ? parse_traffic_config(
                            slurp(resolve(t.get<std::string>(), base_dir)))
                      : parse_traffic_config(t.dump());
  }
  if (j.contains("camera")) {
    cfg.camera_template = camera_from_json(j["camera"]);
    if (!cfg.camera_template.lens_file.empty())
      cfg.camera_template.lens_file =
          resolve(cfg.camera_template.lens_file, base_dir);
  }
  if (j.contains("lighting")) {
    const Json& l = j["lighting"];
    cfg.lighting.type = l.value("type", "uniform");
    cfg.lighting.level = l.value("level", 0.01);
    if (l.contains("envmap_path"))
      cfg.lighting.envmap_path =
          resolve(l["envmap_path"].get<std::string>(), base_dir);
    cfg.lighting.scale = l.value("scale", 1.0);
  }
  if (j.contains("shutter")) {
    cfg.shutter_open_s = j["shutter"].at("open_s").get<double>();
    cfg.shutter_close_s = j["shutter"].at("close_s").get<double>();
  }
  if (j.contains("render")) {
    const Json& r = j["render"];
    cfg.render.width = r.value("width", 64);
    cfg.render.height = r.value("height", 64);
    cfg.render.samples_per_pixel = r.value("samples_per_pixel", 16);
    cfg.render.max_path_depth = r.value("max_path_depth", 4);
    cfg.render.metadata = r.value("metadata", true);
    if (r.contains("bands"))
      cfg.render.grid = WavelengthGrid::make(
          r.value("lambda_min_nm", 400.0), r.value("lambda_max_nm", 700.0),
          r["bands"].get<int>());
  }
  if (j.contains("sensors"))
    for (const auto& s : j["sensors"])
      cfg.sensor_specs.push_back(resolve(s.get<std::string>(), base_dir));
  if (j.contains("eval")) {
    const Json& e = j["eval"];
    cfg.eval_iou_threshold = e.value("iou_threshold", 0.5);
    if (e.contains("distance_bins_m"))
      cfg.eval_bins_m = e["distance_bins_m"].get<std::vector<double>>();
    if (e.contains("detections"))
      cfg.eval_detections = resolve(e["detections"].get<std::string>(), base_dir);
  }
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("pipeline config: ") + e.what());
  }
  return cfg;
}

PipelineConfig PipelineConfig::load(const std::string& path) {
  return parse(slurp(path), fs::path(path).parent_path().string());
}

StageOutcome cmd_assemble(const PipelineConfig& cfg) {
  StageOutcome out;
  const AssetStore store(cfg.asset_store);
  const std::uint64_t stage_seed =
      derive_stage_seed(cfg.master_seed, "assemble");
  const fs::path recipe_dir = fs::path(cfg.output_dir) / "recipes";
  fs::create_directories(recipe_dir);

  Json manifest;
  manifest["master_seed"] = cfg.master_seed;
  Json entries = Json::array();
  for (int i = 0; i < cfg.scene_count; ++i) {
    ++out.items;
    char name[32];
    std::snprintf(name, sizeof(name), "recipe_%03d", i);
    try {
      TrafficConfig traffic = cfg.traffic;
      traffic.seed = hash_mix(stage_seed, std::uint64_t(i));
      AssemblyResult assembled = assemble_recipe(
          cfg.road, traffic, store, cfg.camera_template, cfg.lighting,
          cfg.shutter_open_s, cfg.shutter_close_s);
      const std::string recipe_path =
          (recipe_dir / (std::string(name) + ".json")).string();
      write_recipe(assembled.recipe, recipe_path);
      spit((recipe_dir / (std::string(name) + ".log")).string(),
           assembled.log_text());
      out.outputs.push_back(recipe_path);
      entries.push_back(Json{{"path", std::string("recipes/") + name + ".json"},
                             {"seed", traffic.seed}});
    } catch (const std::exception& e) {
      ++out.failures;
      out.failure_messages.push_back(std::string(name) + ": " + e.what());
    }
  }
  manifest["recipes"] = std::move(entries);
  spit((fs::path(cfg.output_dir) / "manifest.json").string(),
       manifest.dump(2) + "\n");
  return out;
}

StageOutcome cmd_render(const std::vector<std::string>& recipe_paths,
                        const RenderConfig& cfg, const std::string& output_dir,
                        int jobs) {
  StageOutcome out;
  const fs::path image_dir = fs::path(output_dir) / "images";
  fs::create_directories(image_dir);
  std::ostringstream log;
  for (const auto& recipe_path : recipe_paths) {
    ++out.items;
    const std::string stem = fs::path(recipe_path).stem().string();
    try {
      const SceneRecipe recipe = read_recipe(recipe_path);
      const Scene scene = Scene::build(recipe, cfg.grid);
      RenderConfig rc = cfg;
      rc.threads = std::max(1, jobs);
      rc.seed = recipe.seed;
      const RenderResult result = render(scene, rc);
      if (result.stats.all_vignetted)
        std::cerr << "warning: " << stem
                  << ": every camera ray was vignetted\n";
      const std::string image_path =
          (image_dir / (stem + ".spim")).string();
      write_spectral_image(result.image, image_path);
      write_preview_png(result.image,
                        (image_dir / (stem + "_preview.png")).string());
      log << stem << ": vignetted_fraction="
          << result.stats.vignetted_fraction()
          << " seconds=" << result.stats.seconds << "\n";
      out.outputs.push_back(image_path);
    } catch (const std::exception& e) {
      ++out.failures;
      out.failure_messages.push_back(stem + ": " + e.what());
    }
  }
  spit((image_dir / "render.log").string(), log.str());
  return out;
}

StageOutcome cmd_sensor(const std::vector<std::string>& image_paths,
                        const std::vector<std::string>& spec_paths,
                        const std::string& output_dir, int jobs,
                        const WavelengthGrid& grid) {
  StageOutcome out;
  const fs::path sensor_dir = fs::path(output_dir) / "sensor";
  fs::create_directories(sensor_dir);

  struct Item {
    std::string image_path;
    std::string spec_path;
  };
  std::vector<Item> items;
  for (const auto& img : image_paths)
    for (const auto& spec : spec_paths) items.push_back(Item{img, spec});
  out.items = int(items.size());

  std::mutex mu;
  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= items.size()) break;
      const Item& item = items[i];
      const std::string stem = fs::path(item.image_path).stem().string();
      try {
        const SpectralImage img = read_spectral_image(item.image_path);
        SensorSpec spec = load_sensor_spec(item.spec_path, grid);
        const SpectralImage binned = bin_irradiance(img, spec);
        SensorImage sensor_img = simulate(binned, spec);
        sensor_img.source_hash =
            fs::path(item.image_path).filename().string();
        const std::string path =
            (sensor_dir / (stem + "_" + spec.name + ".pgm")).string();
        write_sensor_image(sensor_img, path);
        std::lock_guard<std::mutex> lock(mu);
        out.outputs.push_back(path);
      } catch (const std::exception& e) {
        std::lock_guard<std::mutex> lock(mu);
        ++out.failures;
        out.failure_messages.push_back(
            stem + " x " + fs::path(item.spec_path).stem().string() + ": " +
            e.what());
      }
    }
  };
  const int n_threads = std::clamp(jobs, 1, int(items.size()) + 1);
  if (n_threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int i = 0; i < n_threads; ++i) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  std::sort(out.outputs.begin(), out.outputs.end());
  return out;
}

StageOutcome cmd_evaluate(const std::string& detections_path,
                          const std::vector<std::string>& gt_sources,
                          double iou_threshold,
                          const std::vector<double>& bins_m,
                          const std::string& output_dir, bool quiet) {
  StageOutcome out;
  out.items = 1;
  try {
    const std::vector<Detection> dets = load_detections(detections_path);
    std::vector<GroundTruthObject> gts;
    for (const auto& src : gt_sources) {
      if (fs::path(src).extension() == ".spim") {
        const SpectralImage img = read_spectral_image(src);
        const std::string image_id = fs::path(src).stem().string();
        const GroundTruthExtraction extraction =
            extract_ground_truth(img, image_id);
        gts.insert(gts.end(), extraction.objects.begin(),
                   extraction.objects.end());
      } else {
        const auto text_gts = load_ground_truth_text(src);
        gts.insert(gts.end(), text_gts.begin(), text_gts.end());
      }
    }
    const APByDistance result =
        ap_by_distance(dets, gts, bins_m, iou_threshold);
    const fs::path eval_dir = fs::path(output_dir) / "eval";
    const std::string json_path = (eval_dir / "ap_by_distance.json").string();
    const std::string csv_path = (eval_dir / "ap_by_distance.csv").string();
    spit(json_path, ap_by_distance_to_json(result));
    spit(csv_path, ap_by_distance_to_csv(result));
    out.outputs.push_back(json_path);
    out.outputs.push_back(csv_path);

    if (!quiet) {
      std::cout << "AP by distance (IoU >= " << iou_threshold << ")\n";
      std::cout << "bin_m      ";
      for (const auto& [cls, row] : result.ap)
        std::cout << to_string(cls) << "        ";
      std::cout << "\n";
      const int n_bins = int(bins_m.size()) - 1;
      for (int b = 0; b < n_bins; ++b) {
        std::printf("%3.0f-%-3.0f    ", bins_m[b], bins_m[b + 1]);
        for (const auto& [cls, row] : result.ap) {
          if (row[b])
            std::printf("%.3f      ", *row[b]);
          else
            std::printf("  -        ");
        }
        std::cout << "\n";
      }
      if (result.unassigned_fp > 0)
        std::cout << "unassigned false positives (zero overlap): "
                  << result.unassigned_fp << "\n";
    }
  } catch (const std::exception& e) {
    ++out.failures;
    out.failure_messages.push_back(e.what());
  }
  return out;
}

std::vector<Detection> synthesize_detections(
    const std::vector<GroundTruthObject>& gts, std::uint64_t seed,
    double drop_beyond_m) {
  std::vector<Detection> dets;
  for (std::size_t i = 0; i < gts.size(); ++i) {
    const GroundTruthObject& g = gts[i];
    if (drop_beyond_m > 0 && g.distance_m > drop_beyond_m) continue;
    Rng rng = make_stream(seed, hash_str(g.image_id), i);
    Detection d;
    d.image_id = g.image_id;
    d.class_label = g.class_label;
    d.box = g.box;
    d.box.x0 += int(rng.uniform_index(3)) - 1;
    d.box.y0 += int(rng.uniform_index(3)) - 1;
    d.box.x1 += int(rng.uniform_index(3)) - 1;
    d.box.y1 += int(rng.uniform_index(3)) - 1;
    if (d.box.x1 < d.box.x0) std::swap(d.box.x0, d.box.x1);
    if (d.box.y1 < d.box.y0) std::swap(d.box.y0, d.box.y1);
    if (d.box.x1 == d.box.x0) d.box.x1 = d.box.x0 + 1;
    if (d.box.y1 == d.box.y0) d.box.y1 = d.box.y0 + 1;
    d.score = 0.5 + 0.5 * rng.uniform();
    dets.push_back(std::move(d));
  }
  return dets;
}

StageOutcome cmd_all(const PipelineConfig& cfg, int jobs, bool quiet) {
  StageOutcome total;
  auto merge = [&](const StageOutcome& s) {
    total.items += s.items;
    total.failures += s.failures;
    total.outputs.insert(total.outputs.end(), s.outputs.begin(),
                         s.outputs.end());
    total.failure_messages.insert(total.failure_messages.end(),
                                  s.failure_messages.begin(),
                                  s.failure_messages.end());
  };

  const StageOutcome assembled = cmd_assemble(cfg);
  merge(assembled);
  if (!assembled.ok()) return total;

  const StageOutcome rendered =
      cmd_render(assembled.outputs, cfg.render, cfg.output_dir, jobs);
  merge(rendered);
  if (!rendered.ok()) return total;

  if (!cfg.sensor_specs.empty())
    merge(cmd_sensor(rendered.outputs, cfg.sensor_specs, cfg.output_dir, jobs,
                     cfg.render.grid));

  std::string detections_path = cfg.eval_detections;
  if (detections_path.empty()) {
    // No external network output configured: synthesize deterministic
    // detections from the rendered ground truth so the pipeline
    // demonstrates the evaluation stage end to end.
    std::vector<GroundTruthObject> gts;
    for (const auto& image_path : rendered.outputs) {
      const SpectralImage img = read_spectral_image(image_path);
      if (!img.has_metadata) continue;
      const auto extraction = extract_ground_truth(
          img, fs::path(image_path).stem().string());
      gts.insert(gts.end(), extraction.objects.begin(),
                 extraction.objects.end());
    }
    const auto dets = synthesize_detections(
        gts, derive_stage_seed(cfg.master_seed, "detections"));
    detections_path =
        (fs::path(cfg.output_dir) / "eval" / "detections.txt").string();
    spit(detections_path, serialize_detections(dets));
  }
  merge(cmd_evaluate(detections_path, rendered.outputs, cfg.eval_iou_threshold,
                     cfg.eval_bins_m, cfg.output_dir, quiet));
  return total;
}

}  // namespace camsim
