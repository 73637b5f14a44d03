#pragma once

#include "evdet3d/boxes.hpp"

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace evdet {

struct EvalConfig {
  std::map<ObjectClass, double> iou_thresholds{{ObjectClass::vehicle, 0.7},
                                               {ObjectClass::pedestrian, 0.5},
                                               {ObjectClass::cyclist, 0.5}};
  // Half-open elapsed-blind-time buckets [edges[i], edges[i+1]).
  std::vector<double> bucket_edges{0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0};
};

struct ScoredBox {
  Box3D box;
  double score{0.0};
};

// Per-detection match outcome against one frame's ground truth.
struct MatchResult {
  std::vector<int> matched_gt;        // index into gts, or -1
  std::vector<double> iou;            // 0 for unmatched
  std::vector<double> heading_error;  // wrapped |yaw error| in [0, pi], 0 for unmatched
};

// Greedy: detections in descending score (ties by lower index) each claim the
// highest-IoU unmatched ground truth at or above the threshold.
MatchResult match_detections(std::span<const ScoredBox> dets, std::span<const Box3D> gts,
                             double iou_threshold);

// One ranked detection in a pooled match stream.
struct PrSample {
  double score{0.0};
  bool true_positive{false};
  double heading_weight{1.0};  // max(0, 1 - heading_error / pi) for TPs
};

// All-point interpolated area under the precision-recall curve, evaluated at
// distinct-score thresholds. num_gt == 0 is undefined and reported absent.
std::optional<double> compute_ap(std::span<const PrSample> samples, int num_gt);
// Same curve with each true positive's precision contribution scaled by its
// heading weight.
std::optional<double> compute_aph(std::span<const PrSample> samples, int num_gt);

// One timestamped frame of labeled boxes for a single class.
struct LabeledBox {
  double t{0.0};
  ObjectClass class_id{ObjectClass::vehicle};
  Box3D box;
  double score{0.0};    // detections only
  int track_id{-1};     // optional
};

struct ClassMetrics {
  std::optional<double> ap;
  std::optional<double> aph;
  int num_gt{0};
  int num_det{0};
};

struct BucketMetrics {
  double t_low{0.0}, t_high{0.0};
  std::map<ObjectClass, ClassMetrics> per_class;
  std::optional<double> map;
  std::optional<double> maph;
};

struct EvalReport {
  std::map<ObjectClass, ClassMetrics> per_class;
  std::optional<double> map;
  std::optional<double> maph;
  std::vector<BucketMetrics> buckets;
  std::vector<std::string> notes;
};

// Frames are grouped by timestamp; per-class AP/APH at the class threshold,
// unweighted class means, and per-elapsed-time bucket breakdown.
EvalReport evaluate(std::span<const LabeledBox> detections,
                    std::span<const LabeledBox> ground_truth, const EvalConfig& cfg);

}  // namespace evdet
