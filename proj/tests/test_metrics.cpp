#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "evdet3d/metrics.hpp"

#include <cmath>
#include <random>

using namespace evdet;

namespace {
constexpr double kPi = 3.14159265358979323846;

Box3D unit_box_at(double x, double yaw = 0.0) {
  return Box3D(Vec3(x, 0, 0), Vec3(1, 1, 1), yaw);
}

std::vector<PrSample> random_stream(std::mt19937_64& rng, int n) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<PrSample> out;
  for (int i = 0; i < n; ++i) {
    PrSample s;
    s.score = unit(rng);
    s.true_positive = unit(rng) < 0.5;
    s.heading_weight = s.true_positive ? unit(rng) : 0.0;
    out.push_back(s);
  }
  return out;
}
}  // namespace

TEST_CASE("matching basics") {
  const std::vector<Box3D> gts{unit_box_at(0.0)};

  const std::vector<ScoredBox> one{{unit_box_at(0.0), 0.9}};
  const auto m1 = match_detections(one, gts, 0.5);
  CHECK(m1.matched_gt[0] == 0);
  CHECK(m1.iou[0] == doctest::Approx(1.0));

  // Two detections on one ground truth: the higher score wins the claim.
  const std::vector<ScoredBox> two{{unit_box_at(0.05), 0.6}, {unit_box_at(0.0), 0.9}};
  const auto m2 = match_detections(two, gts, 0.5);
  CHECK(m2.matched_gt[1] == 0);
  CHECK(m2.matched_gt[0] == -1);
}

TEST_CASE("greedy matching equals a brute-force oracle on random layouts") {
  std::mt19937_64 rng(401);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<ScoredBox> dets;
    std::vector<Box3D> gts;
    for (int i = 0; i < 5; ++i) {
      dets.push_back({unit_box_at(unit(rng) * 4.0, unit(rng)), unit(rng)});
    }
    for (int i = 0; i < 3; ++i) {
      gts.push_back(unit_box_at(unit(rng) * 4.0, unit(rng)));
    }
    const double thresh = 0.1;
    const auto fast = match_detections(dets, gts, thresh);

    // Oracle: explicit greedy with the same ordering rules.
    std::vector<int> order(dets.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int l, int r) {
      if (dets[static_cast<std::size_t>(l)].score != dets[static_cast<std::size_t>(r)].score) {
        return dets[static_cast<std::size_t>(l)].score > dets[static_cast<std::size_t>(r)].score;
      }
      return l < r;
    });
    std::vector<bool> taken(gts.size(), false);
    std::vector<int> expected(dets.size(), -1);
    for (int d : order) {
      double best = 0.0;
      int best_g = -1;
      for (std::size_t g = 0; g < gts.size(); ++g) {
        if (taken[g]) continue;
        const double v = iou_3d(dets[static_cast<std::size_t>(d)].box, gts[g]);
        if (v >= thresh && v > best) {
          best = v;
          best_g = static_cast<int>(g);
        }
      }
      if (best_g >= 0) {
        taken[static_cast<std::size_t>(best_g)] = true;
        expected[static_cast<std::size_t>(d)] = best_g;
      }
    }
    CHECK(fast.matched_gt == expected);
  }
}

TEST_CASE("each ground truth is matched at most once") {
  std::mt19937_64 rng(409);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<ScoredBox> dets;
  for (int i = 0; i < 10; ++i) {
    dets.push_back({unit_box_at(unit(rng)), unit(rng)});
  }
  const std::vector<Box3D> gts{unit_box_at(0.2), unit_box_at(0.8)};
  const auto m = match_detections(dets, gts, 0.1);
  std::vector<int> claims(gts.size(), 0);
  for (int g : m.matched_gt) {
    if (g >= 0) {
      claims[static_cast<std::size_t>(g)] += 1;
    }
  }
  for (int c : claims) {
    CHECK(c <= 1);
  }
}

TEST_CASE("AP fixed examples") {
  // Perfect single detection.
  CHECK(*compute_ap(std::vector<PrSample>{{0.9, true, 1.0}}, 1) == doctest::Approx(1.0));

  // One FP above one TP, one GT: envelope gives AP = 0.5 (hand-computed
  // PR points (0, 0) then (1, 0.5)).
  const std::vector<PrSample> mixed{{0.95, false, 0.0}, {0.9, true, 1.0}};
  CHECK(*compute_ap(mixed, 1) == doctest::Approx(0.5).epsilon(1e-12));

  // No detections but ground truth exists: zero recall.
  CHECK(*compute_ap({}, 3) == 0.0);

  // Zero ground truth: undefined, absent.
  CHECK_FALSE(compute_ap(std::vector<PrSample>{{0.9, false, 0.0}}, 0).has_value());
}

TEST_CASE("APH examples and ordering") {
  // Exact headings: APH equals AP.
  const std::vector<PrSample> exact{{0.9, true, 1.0}, {0.8, true, 1.0}};
  CHECK(*compute_aph(exact, 2) == doctest::Approx(*compute_ap(exact, 2)).epsilon(1e-12));

  // Heading error pi zeroes the contribution.
  CHECK(*compute_aph(std::vector<PrSample>{{0.9, true, 0.0}}, 1) == doctest::Approx(0.0));

  // Heading error pi/2 halves a perfect AP (weighted-PR oracle, w = 0.5).
  CHECK(*compute_aph(std::vector<PrSample>{{0.9, true, 0.5}}, 1) ==
        doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("APH never exceeds AP on random streams") {
  std::mt19937_64 rng(419);
  for (int trial = 0; trial < 100; ++trial) {
    const auto stream = random_stream(rng, 20);
    const int num_gt = 12;
    const double ap = *compute_ap(stream, num_gt);
    const double aph = *compute_aph(stream, num_gt);
    CHECK(aph <= ap + 1e-12);
  }
}

TEST_CASE("AP is invariant to order-preserving score transforms") {
  std::mt19937_64 rng(421);
  for (int trial = 0; trial < 50; ++trial) {
    auto stream = random_stream(rng, 15);
    const double ap = *compute_ap(stream, 8);
    auto warped = stream;
    for (auto& s : warped) {
      s.score = 0.1 + 0.5 * std::tanh(3.0 * s.score);  // strictly monotone
    }
    CHECK(*compute_ap(warped, 8) == doctest::Approx(ap).epsilon(1e-12));
  }
}

TEST_CASE("evaluate: perfect detections give mAP = mAPH = 1 in every bucket") {
  std::vector<LabeledBox> gt;
  std::vector<LabeledBox> dets;
  for (int k = 0; k < 10; ++k) {
    const double t = 0.1 * k;
    for (int b = 0; b < 2; ++b) {
      LabeledBox row;
      row.t = t;
      row.class_id = b == 0 ? ObjectClass::vehicle : ObjectClass::pedestrian;
      row.box = unit_box_at(2.0 * b, 0.3 * b);
      gt.push_back(row);
      row.score = 1.0;
      dets.push_back(row);
    }
  }
  const EvalConfig cfg;
  const auto report = evaluate(dets, gt, cfg);
  CHECK(*report.map == doctest::Approx(1.0));
  CHECK(*report.maph == doctest::Approx(1.0));
  for (const auto& bucket : report.buckets) {
    CHECK(*bucket.map == doctest::Approx(1.0));
    CHECK(*bucket.maph == doctest::Approx(1.0));
  }
  // Cyclist has no ground truth: noted and excluded from the mean.
  bool noted = false;
  for (const auto& note : report.notes) {
    noted = noted || note.find("cyclist") != std::string::npos;
  }
  CHECK(noted);
}

TEST_CASE("evaluate: empty detections give mAP 0") {
  std::vector<LabeledBox> gt;
  LabeledBox row;
  row.t = 0.0;
  row.class_id = ObjectClass::vehicle;
  row.box = unit_box_at(0.0);
  gt.push_back(row);
  const auto report = evaluate({}, gt, EvalConfig{});
  CHECK(*report.map == 0.0);
}

TEST_CASE("evaluate decomposes into single-class runs") {
  std::mt19937_64 rng(431);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<LabeledBox> gt, dets;
  for (int k = 0; k < 5; ++k) {
    for (auto cls : {ObjectClass::vehicle, ObjectClass::pedestrian}) {
      LabeledBox g;
      g.t = 0.1 * k;
      g.class_id = cls;
      g.box = unit_box_at(unit(rng) * 3.0);
      gt.push_back(g);
      LabeledBox d = g;
      d.box = unit_box_at(d.box.center.x() + 0.2 * unit(rng));
      d.score = unit(rng);
      dets.push_back(d);
      // Plus one FP per frame/class.
      LabeledBox fp = d;
      fp.box = unit_box_at(50.0 + unit(rng));
      fp.score = unit(rng);
      dets.push_back(fp);
    }
  }
  const EvalConfig cfg;
  const auto full = evaluate(dets, gt, cfg);
  for (auto cls : {ObjectClass::vehicle, ObjectClass::pedestrian}) {
    std::vector<LabeledBox> gt_c, det_c;
    for (const auto& g : gt) {
      if (g.class_id == cls) gt_c.push_back(g);
    }
    for (const auto& d : dets) {
      if (d.class_id == cls) det_c.push_back(d);
    }
    const auto solo = evaluate(det_c, gt_c, cfg);
    CHECK(*full.per_class.at(cls).ap == doctest::Approx(*solo.per_class.at(cls).ap).epsilon(1e-12));
    CHECK(*full.per_class.at(cls).aph ==
          doctest::Approx(*solo.per_class.at(cls).aph).epsilon(1e-12));
  }
}

TEST_CASE("duplicating every frame leaves AP unchanged") {
  std::mt19937_64 rng(433);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<LabeledBox> gt, dets;
  for (int k = 0; k < 6; ++k) {
    LabeledBox g;
    g.t = 0.1 * k;
    g.class_id = ObjectClass::vehicle;
    g.box = unit_box_at(unit(rng) * 2.0);
    gt.push_back(g);
    LabeledBox d = g;
    d.box = unit_box_at(d.box.center.x() + 0.3 * unit(rng));
    d.score = unit(rng);
    dets.push_back(d);
  }
  const EvalConfig cfg;
  const auto base = evaluate(dets, gt, cfg);

  // Duplicate each frame at a shifted timestamp with identical content.
  std::vector<LabeledBox> gt2 = gt, dets2 = dets;
  for (auto row : gt) {
    row.t += 3.0;
    gt2.push_back(row);
  }
  for (auto row : dets) {
    row.t += 3.0;
    dets2.push_back(row);
  }
  const auto doubled = evaluate(dets2, gt2, cfg);
  CHECK(*doubled.per_class.at(ObjectClass::vehicle).ap ==
        doctest::Approx(*base.per_class.at(ObjectClass::vehicle).ap).epsilon(1e-12));
}

TEST_CASE("heading error pi/2 detection yields APH = AP/2 through evaluate") {
  std::vector<LabeledBox> gt, dets;
  LabeledBox g;
  g.t = 0.0;
  g.class_id = ObjectClass::pedestrian;
  g.box = unit_box_at(0.0, 0.0);
  gt.push_back(g);
  LabeledBox d = g;
  d.box = unit_box_at(0.0, kPi / 2.0);
  d.score = 0.9;
  dets.push_back(d);
  EvalConfig cfg;
  cfg.iou_thresholds[ObjectClass::pedestrian] = 0.2;  // the rotated box still matches
  const auto report = evaluate(dets, gt, cfg);
  CHECK(*report.per_class.at(ObjectClass::pedestrian).ap == doctest::Approx(1.0));
  CHECK(*report.per_class.at(ObjectClass::pedestrian).aph == doctest::Approx(0.5).epsilon(1e-9));
}
