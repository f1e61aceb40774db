#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "camsim/asset.hpp"
#include "camsim/spectral.hpp"

namespace camsim {

/// Axis-aligned box in pixel coordinates. Area and IoU use the continuous
/// convention (width = x1 - x0); ground-truth extraction stores inclusive
/// pixel-index corners in the same fields.
struct PixelBox {
  int x0 = 0, y0 = 0, x1 = 0, y1 = 0;

  double area() const { return double(x1 - x0) * double(y1 - y0); }
};

double iou(const PixelBox& a, const PixelBox& b);

struct GroundTruthObject {
  std::string image_id;
  ClassLabel class_label = ClassLabel::other;
  PixelBox box;
  double distance_m = 0.0;  // minimum depth over the instance's pixels
  int instance_id = 0;
};

struct Detection {
  std::string image_id;
  ClassLabel class_label = ClassLabel::other;
  PixelBox box;
  double score = 0.0;
};

struct GroundTruthExtraction {
  std::vector<GroundTruthObject> objects;
  int discarded_small = 0;  // instances below the 4-pixel floor
};

/// One object per distinct nonzero instance id in the metadata planes:
/// tight pixel box, class from the class plane (inconsistent labels raise
/// ValidationError naming the instance), distance = min depth.
GroundTruthExtraction extract_ground_truth(const SpectralImage& meta,
                                           const std::string& image_id);

/// Greedy matching for one (image, class) group: detections in descending
/// score order each take the unmatched ground truth of highest IoU when
/// that IoU reaches the threshold. Returns one flag per detection in the
/// sorted order, plus the matched GT index (-1 for false positives).
struct MatchResult {
  std::vector<int> sorted_detection;  // indices into the input, score-sorted
  std::vector<bool> tp;
  std::vector<int> matched_gt;
};
MatchResult match(const std::vector<Detection>& dets,
                  const std::vector<GroundTruthObject>& gts,
                  double iou_threshold);

/// All-point interpolated average precision: area under the precision
/// envelope p(r) = max_{r' >= r} p(r'). flags must be score-ordered.
/// n_gt == 0 with no detections -> absent (nullopt).
std::optional<double> average_precision(const std::vector<bool>& tp_flags,
                                        int n_gt);

struct APByDistance {
  std::vector<double> bin_edges_m;
  /// ap[class][bin]: absent when the bin holds no ground truth and no
  /// assigned detections.
  std::map<ClassLabel, std::vector<std::optional<double>>> ap;
  std::map<ClassLabel, std::vector<int>> gt_counts;
  int unassigned_fp = 0;  // detections with zero overlap against any GT
};

/// Distance-binned AP per class. Detections fall into the bin of their
/// matched GT; unmatched detections go to the bin of the highest-IoU GT of
/// their class, and zero-overlap detections are excluded from bins and
/// counted in unassigned_fp. Matching runs per image and class before
/// pooling into bins.
APByDistance ap_by_distance(const std::vector<Detection>& dets,
                            const std::vector<GroundTruthObject>& gts,
                            const std::vector<double>& bin_edges_m,
                            double iou_threshold);

std::vector<double> default_distance_bins();  // 0,10,...,150 m

/// Detections text format: one per line, "image_id class x0 y0 x1 y1 score".
std::vector<Detection> parse_detections(const std::string& text);
std::vector<Detection> load_detections(const std::string& path);
std::string serialize_detections(const std::vector<Detection>& dets);

/// Ground truth in the same text format (score column carries distance).
std::vector<GroundTruthObject> parse_ground_truth_text(const std::string& text);
std::vector<GroundTruthObject> load_ground_truth_text(const std::string& path);
std::string serialize_ground_truth(const std::vector<GroundTruthObject>& gts);

std::string ap_by_distance_to_json(const APByDistance& result);
std::string ap_by_distance_to_csv(const APByDistance& result);

}  // namespace camsim
