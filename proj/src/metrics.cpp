#include "evdet3d/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace evdet {

namespace {
constexpr double kPi = 3.14159265358979323846;

double heading_error(double yaw_a, double yaw_b) {
  return std::abs(wrap_angle(yaw_a - yaw_b));  // in [0, pi]
}

// Shared PR-curve integration; `weighted` selects heading-weighted precision.
std::optional<double> area_under_pr(std::span<const PrSample> samples, int num_gt, bool weighted) {
  if (num_gt <= 0) {
    return std::nullopt;
  }
  std::vector<int> order(samples.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int l, int r) {
    return samples[static_cast<std::size_t>(l)].score > samples[static_cast<std::size_t>(r)].score;
  });
  // Precision/recall at distinct-score thresholds only, so equal-score
  // detections enter together and the curve is invariant to their order.
  std::vector<double> recalls, precisions;
  double tp = 0.0, fp = 0.0, tp_weight = 0.0;
  for (std::size_t i = 0; i < order.size(); ++i) {
    const PrSample& s = samples[static_cast<std::size_t>(order[i])];
    if (s.true_positive) {
      tp += 1.0;
      tp_weight += s.heading_weight;
    } else {
      fp += 1.0;
    }
    const bool last_of_group =
        (i + 1 == order.size()) ||
        samples[static_cast<std::size_t>(order[i + 1])].score != s.score;
    if (last_of_group) {
      recalls.push_back(tp / num_gt);
      const double numer = weighted ? tp_weight : tp;
      precisions.push_back(numer / (tp + fp));
    }
  }
  // Nonincreasing envelope from the right, then sum recall increments.
  for (int i = static_cast<int>(precisions.size()) - 2; i >= 0; --i) {
    precisions[static_cast<std::size_t>(i)] =
        std::max(precisions[static_cast<std::size_t>(i)], precisions[static_cast<std::size_t>(i) + 1]);
  }
  double ap = 0.0;
  double prev_recall = 0.0;
  for (std::size_t i = 0; i < recalls.size(); ++i) {
    ap += (recalls[i] - prev_recall) * precisions[i];
    prev_recall = recalls[i];
  }
  return ap;
}

struct ClassStream {
  std::vector<PrSample> samples;
  int num_gt{0};
  int num_det{0};
};

ClassMetrics metrics_from_stream(const ClassStream& stream) {
  ClassMetrics m;
  m.num_gt = stream.num_gt;
  m.num_det = stream.num_det;
  m.ap = compute_ap(stream.samples, stream.num_gt);
  m.aph = compute_aph(stream.samples, stream.num_gt);
  return m;
}

std::optional<double> class_mean(const std::map<ObjectClass, ClassMetrics>& per_class,
                                 bool heading) {
  double sum = 0.0;
  int n = 0;
  for (const auto& [cls, m] : per_class) {
    const auto& v = heading ? m.aph : m.ap;
    if (v.has_value()) {
      sum += *v;
      ++n;
    }
  }
  if (n == 0) {
    return std::nullopt;
  }
  return sum / n;
}

long frame_key(double t) { return std::lround(t * 1e6); }

}  // namespace

MatchResult match_detections(std::span<const ScoredBox> dets, std::span<const Box3D> gts,
                             double iou_threshold) {
  MatchResult result;
  result.matched_gt.assign(dets.size(), -1);
  result.iou.assign(dets.size(), 0.0);
  result.heading_error.assign(dets.size(), 0.0);
  std::vector<int> order(dets.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int l, int r) {
    if (dets[static_cast<std::size_t>(l)].score != dets[static_cast<std::size_t>(r)].score) {
      return dets[static_cast<std::size_t>(l)].score > dets[static_cast<std::size_t>(r)].score;
    }
    return l < r;
  });
  std::vector<bool> gt_taken(gts.size(), false);
  for (int di : order) {
    const auto& det = dets[static_cast<std::size_t>(di)];
    int best_gt = -1;
    double best_iou = 0.0;
    for (std::size_t gi = 0; gi < gts.size(); ++gi) {
      if (gt_taken[gi]) {
        continue;
      }
      const double v = iou_3d(det.box, gts[gi]);
      if (v >= iou_threshold && v > best_iou) {
        best_iou = v;
        best_gt = static_cast<int>(gi);
      }
    }
    if (best_gt >= 0) {
      gt_taken[static_cast<std::size_t>(best_gt)] = true;
      result.matched_gt[static_cast<std::size_t>(di)] = best_gt;
      result.iou[static_cast<std::size_t>(di)] = best_iou;
      result.heading_error[static_cast<std::size_t>(di)] =
          heading_error(det.box.yaw, gts[static_cast<std::size_t>(best_gt)].yaw);
    }
  }
  return result;
}

std::optional<double> compute_ap(std::span<const PrSample> samples, int num_gt) {
  return area_under_pr(samples, num_gt, /*weighted=*/false);
}

std::optional<double> compute_aph(std::span<const PrSample> samples, int num_gt) {
  return area_under_pr(samples, num_gt, /*weighted=*/true);
}

EvalReport evaluate(std::span<const LabeledBox> detections,
                    std::span<const LabeledBox> ground_truth, const EvalConfig& cfg) {
  // Bucket -1 pools everything for the headline numbers.
  const int num_buckets = static_cast<int>(cfg.bucket_edges.size()) - 1;
  auto bucket_of = [&](double t) {
    for (int b = 0; b < num_buckets; ++b) {
      if (t >= cfg.bucket_edges[static_cast<std::size_t>(b)] &&
          t < cfg.bucket_edges[static_cast<std::size_t>(b) + 1]) {
        return b;
      }
    }
    return -1;
  };

  struct FrameData {
    std::map<ObjectClass, std::vector<ScoredBox>> dets;
    std::map<ObjectClass, std::vector<Box3D>> gts;
    double t{0.0};
  };
  std::map<long, FrameData> frames;
  for (const auto& gt : ground_truth) {
    auto& f = frames[frame_key(gt.t)];
    f.t = gt.t;
    f.gts[gt.class_id].push_back(gt.box);
  }
  for (const auto& det : detections) {
    auto& f = frames[frame_key(det.t)];
    f.t = det.t;
    f.dets[det.class_id].push_back(ScoredBox{det.box, det.score});
  }

  // One pooled stream per (bucket, class); bucket index num_buckets = overall.
  std::vector<std::map<ObjectClass, ClassStream>> streams(
      static_cast<std::size_t>(num_buckets) + 1);
  for (const auto& [key, frame] : frames) {
    const int bucket = bucket_of(frame.t);
    for (const auto& [cls, thresh] : cfg.iou_thresholds) {
      static const std::vector<ScoredBox> no_dets;
      static const std::vector<Box3D> no_gts;
      const auto dit = frame.dets.find(cls);
      const auto git = frame.gts.find(cls);
      const auto& dets = dit == frame.dets.end() ? no_dets : dit->second;
      const auto& gts = git == frame.gts.end() ? no_gts : git->second;
      if (dets.empty() && gts.empty()) {
        continue;
      }
      const MatchResult match = match_detections(dets, gts, thresh);
      auto add_to = [&](ClassStream& stream) {
        stream.num_gt += static_cast<int>(gts.size());
        stream.num_det += static_cast<int>(dets.size());
        for (std::size_t d = 0; d < dets.size(); ++d) {
          PrSample s;
          s.score = dets[d].score;
          s.true_positive = match.matched_gt[d] >= 0;
          s.heading_weight =
              s.true_positive ? std::max(0.0, 1.0 - match.heading_error[d] / kPi) : 0.0;
          stream.samples.push_back(s);
        }
      };
      add_to(streams.back()[cls]);
      if (bucket >= 0) {
        add_to(streams[static_cast<std::size_t>(bucket)][cls]);
      }
    }
  }

  EvalReport report;
  for (const auto& [cls, thresh] : cfg.iou_thresholds) {
    const auto& stream = streams.back()[cls];  // default-constructed when absent
    report.per_class[cls] = metrics_from_stream(stream);
    if (stream.num_gt == 0) {
      report.notes.push_back("class " + to_string(cls) +
                             " has no ground truth; excluded from the mean");
    }
  }
  report.map = class_mean(report.per_class, /*heading=*/false);
  report.maph = class_mean(report.per_class, /*heading=*/true);
  for (int b = 0; b < num_buckets; ++b) {
    BucketMetrics bm;
    bm.t_low = cfg.bucket_edges[static_cast<std::size_t>(b)];
    bm.t_high = cfg.bucket_edges[static_cast<std::size_t>(b) + 1];
    for (const auto& [cls, stream] : streams[static_cast<std::size_t>(b)]) {
      bm.per_class[cls] = metrics_from_stream(stream);
    }
    bm.map = class_mean(bm.per_class, /*heading=*/false);
    bm.maph = class_mean(bm.per_class, /*heading=*/true);
    report.buckets.push_back(std::move(bm));
  }
  return report;
}

}  // namespace evdet
