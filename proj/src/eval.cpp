#include "camsim/eval.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include <json.hpp>

namespace camsim {

using Json = nlohmann::ordered_json;

double iou(const PixelBox& a, const PixelBox& b) {
  const int ix0 = std::max(a.x0, b.x0);
  const int iy0 = std::max(a.y0, b.y0);
  const int ix1 = std::min(a.x1, b.x1);
  const int iy1 = std::min(a.y1, b.y1);
  if (ix1 <= ix0 || iy1 <= iy0) return 0.0;
  const double inter = double(ix1 - ix0) * double(iy1 - iy0);
  const double uni = a.area() + b.area() - inter;
  return uni > 0 ? inter / uni : 0.0;
}

GroundTruthExtraction extract_ground_truth(const SpectralImage& meta,
                                           const std::string& image_id) {
  if (!meta.has_metadata)
    throw ValidationError("image has no metadata planes");
  struct Acc {
    int x0 = std::numeric_limits<int>::max();
    int y0 = std::numeric_limits<int>::max();
    int x1 = -1, y1 = -1;
    int pixels = 0;
    int class_id = 0;
    double min_depth = std::numeric_limits<double>::infinity();
  };
  std::map<int, Acc> instances;
  for (int y = 0; y < meta.height; ++y)
    for (int x = 0; x < meta.width; ++x) {
      const std::size_t i = meta.plane_index(x, y);
      const int instance = meta.instance_id[i];
      if (instance == 0) continue;
      Acc& acc = instances[instance];
      if (acc.pixels == 0) {
        acc.class_id = meta.class_id[i];
      } else if (acc.class_id != meta.class_id[i]) {
        throw ValidationError("instance " + std::to_string(instance) +
                              " carries inconsistent class labels");
      }
      acc.x0 = std::min(acc.x0, x);
      acc.y0 = std::min(acc.y0, y);
      acc.x1 = std::max(acc.x1, x);
      acc.y1 = std::max(acc.y1, y);
      ++acc.pixels;
      const double d = meta.depth[i];
      if (d > 0) acc.min_depth = std::min(acc.min_depth, d);
    }

  GroundTruthExtraction out;
  for (const auto& [instance, acc] : instances) {
    if (acc.pixels < 4) {
      ++out.discarded_small;
      continue;
    }
    GroundTruthObject gt;
    gt.image_id = image_id;
    gt.class_label = class_label_from_id(acc.class_id);
    gt.box = PixelBox{acc.x0, acc.y0, acc.x1, acc.y1};
    gt.distance_m = acc.min_depth;
    gt.instance_id = instance;
    out.objects.push_back(std::move(gt));
  }
  return out;
}

MatchResult match(const std::vector<Detection>& dets,
                  const std::vector<GroundTruthObject>& gts,
                  double iou_threshold) {
  MatchResult out;
  out.sorted_detection.resize(dets.size());
  for (std::size_t i = 0; i < dets.size(); ++i) out.sorted_detection[i] = int(i);
  std::stable_sort(out.sorted_detection.begin(), out.sorted_detection.end(),
                   [&](int a, int b) { return dets[a].score > dets[b].score; });

  std::vector<bool> gt_taken(gts.size(), false);
  out.tp.resize(dets.size(), false);
  out.matched_gt.resize(dets.size(), -1);
  for (std::size_t rank = 0; rank < out.sorted_detection.size(); ++rank) {
    const Detection& det = dets[out.sorted_detection[rank]];
    double best = 0.0;
    int best_gt = -1;
    for (std::size_t g = 0; g < gts.size(); ++g) {
      if (gt_taken[g]) continue;
      const double v = iou(det.box, gts[g].box);
      if (v > best) {
        best = v;
        best_gt = int(g);
      }
    }
    if (best_gt >= 0 && best >= iou_threshold) {
      gt_taken[best_gt] = true;
      out.tp[rank] = true;
      out.matched_gt[rank] = best_gt;
    }
  }
  return out;
}

std::optional<double> average_precision(const std::vector<bool>& tp_flags,
                                        int n_gt) {
  if (n_gt == 0 && tp_flags.empty()) return std::nullopt;
  if (n_gt == 0) return 0.0;  // detections against nothing: all FPs
  // Precision at each rank, then the interpolated envelope.
  std::vector<double> precision, recall;
  int tp = 0;
  for (std::size_t i = 0; i < tp_flags.size(); ++i) {
    if (tp_flags[i]) ++tp;
    precision.push_back(double(tp) / double(i + 1));
    recall.push_back(double(tp) / n_gt);
  }
  if (precision.empty()) return 0.0;
  for (int i = int(precision.size()) - 2; i >= 0; --i)
    precision[i] = std::max(precision[i], precision[i + 1]);
  double ap = 0.0;
  double prev_recall = 0.0;
  for (std::size_t i = 0; i < precision.size(); ++i) {
    ap += (recall[i] - prev_recall) * precision[i];
    prev_recall = recall[i];
  }
  return ap;
}

std::vector<double> default_distance_bins() {
  std::vector<double> edges;
  for (int e = 0; e <= 150; e += 10) edges.push_back(double(e));
  return edges;
}

namespace {

int bin_of(double distance, const std::vector<double>& edges) {
  if (distance < edges.front() || distance >= edges.back()) return -1;
  for (std::size_t i = 1; i < edges.size(); ++i)
    if (distance < edges[i]) return int(i - 1);
  return -1;
}

}  // namespace

APByDistance ap_by_distance(const std::vector<Detection>& dets,
                            const std::vector<GroundTruthObject>& gts,
                            const std::vector<double>& bin_edges_m,
                            double iou_threshold) {
  if (bin_edges_m.size() < 2)
    throw ValidationError("need at least two distance bin edges");
  for (std::size_t i = 1; i < bin_edges_m.size(); ++i)
    if (!(bin_edges_m[i] > bin_edges_m[i - 1]))
      throw ValidationError("distance bin edges must be increasing");

  APByDistance out;
  out.bin_edges_m = bin_edges_m;
  const int n_bins = int(bin_edges_m.size()) - 1;

  // Group by (image, class); matching never crosses those boundaries.
  std::set<std::string> images;
  std::set<ClassLabel> classes;
  for (const auto& g : gts) {
    images.insert(g.image_id);
    classes.insert(g.class_label);
  }
  for (const auto& d : dets) {
    images.insert(d.image_id);
    classes.insert(d.class_label);
  }

  struct BinAccumulator {
    std::vector<std::pair<double, bool>> scored_flags;  // (score, tp)
    int n_gt = 0;
  };

  for (ClassLabel cls : classes) {
    std::vector<BinAccumulator> bins(n_bins);
    for (const std::string& image : images) {
      std::vector<Detection> image_dets;
      std::vector<GroundTruthObject> image_gts;
      for (const auto& d : dets)
        if (d.image_id == image && d.class_label == cls)
          image_dets.push_back(d);
      for (const auto& g : gts)
        if (g.image_id == image && g.class_label == cls)
          image_gts.push_back(g);
      for (const auto& g : image_gts) {
        const int b = bin_of(g.distance_m, bin_edges_m);
        if (b >= 0) ++bins[b].n_gt;
      }

      const MatchResult m = match(image_dets, image_gts, iou_threshold);
      for (std::size_t rank = 0; rank < m.sorted_detection.size(); ++rank) {
        const Detection& det = image_dets[m.sorted_detection[rank]];
        int bin = -1;
        if (m.tp[rank]) {
          bin = bin_of(image_gts[m.matched_gt[rank]].distance_m, bin_edges_m);
        } else {
          // Unmatched: the bin of the highest-IoU ground truth, if any
          // overlap exists at all.
          double best = 0.0;
          int best_gt = -1;
          for (std::size_t g = 0; g < image_gts.size(); ++g) {
            const double v = iou(det.box, image_gts[g].box);
            if (v > best) {
              best = v;
              best_gt = int(g);
            }
          }
          if (best_gt < 0) {
            ++out.unassigned_fp;
            continue;
          }
          bin = bin_of(image_gts[best_gt].distance_m, bin_edges_m);
        }
        if (bin >= 0)
          bins[bin].scored_flags.emplace_back(det.score, m.tp[rank]);
      }
    }

    auto& ap_row = out.ap[cls];
    auto& gt_row = out.gt_counts[cls];
    ap_row.resize(n_bins);
    gt_row.resize(n_bins, 0);
    for (int b = 0; b < n_bins; ++b) {
      std::stable_sort(
          bins[b].scored_flags.begin(), bins[b].scored_flags.end(),
          [](const auto& x, const auto& y) { return x.first > y.first; });
      std::vector<bool> flags;
      flags.reserve(bins[b].scored_flags.size());
      for (const auto& [score, tp] : bins[b].scored_flags)
        flags.push_back(tp);
      gt_row[b] = bins[b].n_gt;
      ap_row[b] = average_precision(flags, bins[b].n_gt);
    }
  }
  return out;
}

std::vector<Detection> parse_detections(const std::string& text) {
  std::vector<Detection> out;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::istringstream ls(line);
    Detection d;
    std::string cls;
    if (!(ls >> d.image_id)) continue;  // blank line
    if (!(ls >> cls >> d.box.x0 >> d.box.y0 >> d.box.x1 >> d.box.y1 >>
          d.score))
      throw ParseError("expected 'image_id class x0 y0 x1 y1 score'", lineno);
    try {
      d.class_label = class_label_from_string(cls);
    } catch (const Error& e) {
      throw ParseError(e.what(), lineno);
    }
    if (d.score < 0.0 || d.score > 1.0)
      throw ParseError("score must lie in [0,1]", lineno);
    if (d.box.x1 <= d.box.x0 || d.box.y1 <= d.box.y0)
      throw ParseError("empty box (x1 <= x0 or y1 <= y0)", lineno);
    out.push_back(std::move(d));
  }
  return out;
}

std::vector<Detection> load_detections(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open detections: " + path);
  std::stringstream buf;
  buf << f.rdbuf();
  try {
    return parse_detections(buf.str());
  } catch (const ParseError& e) {
    throw ParseError(path + ": " + e.what(), e.line(), e.col());
  }
}

std::string serialize_detections(const std::vector<Detection>& dets) {
  std::ostringstream out;
  for (const auto& d : dets)
    out << d.image_id << " " << to_string(d.class_label) << " " << d.box.x0
        << " " << d.box.y0 << " " << d.box.x1 << " " << d.box.y1 << " "
        << d.score << "\n";
  return out.str();
}

std::vector<GroundTruthObject> parse_ground_truth_text(
    const std::string& text) {
  std::vector<GroundTruthObject> out;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::istringstream ls(line);
    GroundTruthObject g;
    std::string cls;
    if (!(ls >> g.image_id)) continue;
    if (!(ls >> cls >> g.box.x0 >> g.box.y0 >> g.box.x1 >> g.box.y1 >>
          g.distance_m))
      throw ParseError("expected 'image_id class x0 y0 x1 y1 distance_m'",
                       lineno);
    try {
      g.class_label = class_label_from_string(cls);
    } catch (const Error& e) {
      throw ParseError(e.what(), lineno);
    }
    if (g.distance_m <= 0)
      throw ParseError("ground-truth distance must be positive", lineno);
    out.push_back(std::move(g));
  }
  return out;
}

std::vector<GroundTruthObject> load_ground_truth_text(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open ground truth: " + path);
  std::stringstream buf;
  buf << f.rdbuf();
  try {
    return parse_ground_truth_text(buf.str());
  } catch (const ParseError& e) {
    throw ParseError(path + ": " + e.what(), e.line(), e.col());
  }
}

std::string serialize_ground_truth(const std::vector<GroundTruthObject>& gts) {
  std::ostringstream out;
  for (const auto& g : gts)
    out << g.image_id << " " << to_string(g.class_label) << " " << g.box.x0
        << " " << g.box.y0 << " " << g.box.x1 << " " << g.box.y1 << " "
        << g.distance_m << "\n";
  return out.str();
}

std::string ap_by_distance_to_json(const APByDistance& result) {
  Json j;
  j["bin_edges_m"] = result.bin_edges_m;
  Json classes;
  for (const auto& [cls, row] : result.ap) {
    Json entry;
    Json aps = Json::array();
    for (const auto& v : row) {
      if (v)
        aps.push_back(*v);
      else
        aps.push_back(nullptr);
    }
    entry["ap"] = std::move(aps);
    entry["n_gt"] = result.gt_counts.at(cls);
    classes[to_string(cls)] = std::move(entry);
  }
  j["classes"] = std::move(classes);
  j["unassigned_fp"] = result.unassigned_fp;
  return j.dump(2) + "\n";
}

std::string ap_by_distance_to_csv(const APByDistance& result) {
  std::ostringstream out;
  out << "bin_center_m,class,ap,n_gt\n";
  for (const auto& [cls, row] : result.ap) {
    const auto& counts = result.gt_counts.at(cls);
    for (std::size_t b = 0; b < row.size(); ++b) {
      const double center =
          0.5 * (result.bin_edges_m[b] + result.bin_edges_m[b + 1]);
      out << center << "," << to_string(cls) << ",";
      if (row[b]) out << *row[b];
      out << "," << counts[b] << "\n";
    }
  }
  return out.str();
}

}  // namespace camsim
