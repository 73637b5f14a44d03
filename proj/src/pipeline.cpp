#include "evdet3d/pipeline.hpp"

#include "evdet3d/io.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <iostream>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <stdexcept>

namespace evdet {

using nlohmann::json;

namespace {

constexpr std::uint64_t kTrainSeedStream = 0xA5A5A5A5ull;

std::uint64_t mix_seed(std::uint64_t base, std::uint64_t stream) {
  std::uint64_t z = base + 0x9E3779B97F4A7C15ull * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

struct Dataset {
  PointCloud points;
  EventStream events;
  std::vector<BoxProposal> proposals;
  CameraModel camera;
};

Dataset load_dataset_for_inference(const std::filesystem::path& dir) {
  Dataset d;
  d.camera = io::load_camera_json(dir / "calib.json");
  d.points = io::load_point_cloud_csv(dir / "points.csv");
  d.events = io::load_events_csv(dir / "events.csv", d.camera.width, d.camera.height);
  for (const auto& row : io::load_labels_jsonl(dir / "proposals.jsonl")) {
    BoxProposal p;
    p.box = row.box;
    p.class_id = row.class_id;
    p.score = row.score;
    p.track_id = row.track_id;
    d.proposals.push_back(p);
  }
  return d;
}

long time_key(double t) { return std::lround(t * 1e6); }

}  // namespace

SparseVoxelGrid build_voxel_grid(const PointCloud& cloud, const VoxelConfig& voxel_cfg,
                                 const VoxelEncoder& encoder) {
  SparseVoxelGrid grid = voxelize(cloud, voxel_cfg);
  compute_centroids(grid, cloud);
  encode_voxel_features(grid, cloud, encoder);
  return grid;
}

void run_synth(const RunConfig& cfg, const std::filesystem::path& out_dir) {
  std::filesystem::create_directories(out_dir);
  const ScenarioData data = generate(cfg.scenario);
  for (const auto& sb : cfg.scenario.boxes) {
    for (int k = 0; k < cfg.scenario.gt_steps; ++k) {
      const Box3D b = box_at_time(sb, static_cast<double>(k) / cfg.scenario.gt_steps);
      for (int a = 0; a < 3; ++a) {
        if (b.center[a] < cfg.voxel.range_min[a] || b.center[a] >= cfg.voxel.range_max[a]) {
          std::cerr << "warning: scenario box leaves the voxel range at t="
                    << static_cast<double>(k) / cfg.scenario.gt_steps << "\n";
          k = cfg.scenario.gt_steps;  // one warning per box is enough
          break;
        }
      }
    }
  }
  io::save_point_cloud_csv(out_dir / "points.csv", data.points_t0);
  io::save_point_cloud_csv(out_dir / "points_t1.csv", data.points_t1);
  io::save_events_csv(out_dir / "events.csv", data.events);
  io::save_labels_jsonl(out_dir / "gt.jsonl", data.ground_truth, /*with_score=*/false);
  std::vector<LabeledBox> proposal_rows;
  for (const auto& p : data.proposals) {
    LabeledBox row;
    row.t = 0.0;
    row.class_id = p.class_id;
    row.box = p.box;
    row.score = p.score;
    row.track_id = p.track_id;
    proposal_rows.push_back(row);
  }
  io::save_labels_jsonl(out_dir / "proposals.jsonl", proposal_rows, /*with_score=*/true);
  io::save_camera_json(out_dir / "calib.json", cfg.scenario.camera);
  io::write_text_file(out_dir / "config.json", cfg.to_json_text());
}

std::vector<std::vector<TrainSample>> build_training_samples(
    const ModelParams& params, const SparseVoxelGrid& grid, const EventStream& events,
    const CameraModel& cam, const std::vector<BoxProposal>& proposals,
    const std::vector<LabeledBox>& ground_truth, std::vector<double>* times_out) {
  // Ground truth indexed by (track, time); blind times are every GT time > 0.
  std::map<long, double> times;
  std::map<std::pair<int, long>, Box3D> gt_by_track_time;
  for (const auto& row : ground_truth) {
    if (row.t > 0.0) {
      times[time_key(row.t)] = row.t;
    }
    gt_by_track_time.emplace(std::make_pair(row.track_id, time_key(row.t)), row.box);
  }
  if (times_out) {
    times_out->clear();
  }
  std::vector<std::vector<TrainSample>> samples;
  for (const auto& [key, t] : times) {
    const auto sliced = slice_events(events, 0.0, t);
    const EventVoxelGrid egrid = build_event_voxel_grid(
        sliced, params.event_encoder.bins, events.height(), events.width(), 0.0, t);
    const EventFeatureMap emap = encode_event_features(params.event_encoder, egrid);
    const FusionInputs inputs = params.use_non_empty_mask
                                    ? make_fusion_inputs(grid, cam, emap)
                                    : make_fusion_inputs_all_cells(grid, cam, emap);
    std::vector<TrainSample> at_t;
    for (std::size_t i = 0; i < proposals.size(); ++i) {
      const auto& prop = proposals[i];
      const int track = prop.track_id >= 0 ? prop.track_id : static_cast<int>(i);
      const auto it = gt_by_track_time.find(std::make_pair(track, key));
      if (it == gt_by_track_time.end()) {
        throw std::runtime_error("no ground truth for track " + std::to_string(track) +
                                 " at t=" + std::to_string(t));
      }
      TrainSample s;
      s.pooled = roi_grid_pool_box(prop.box, inputs, params.roi_grid_size);
      s.proposal_box = prop.box;
      s.p0 = prop.score;
      s.gt_box = it->second;
      s.t = t;
      at_t.push_back(std::move(s));
    }
    samples.push_back(std::move(at_t));
    if (times_out) {
      times_out->push_back(t);
    }
  }
  return samples;
}

TrainRunResult run_train(const RunConfig& cfg, const std::filesystem::path& dataset_dir,
                         const std::filesystem::path& checkpoint_out,
                         const std::filesystem::path& loss_log_out) {
  Dataset data = load_dataset_for_inference(dataset_dir);
  const auto ground_truth = io::load_labels_jsonl(dataset_dir / "gt.jsonl");
  ModelParams params = cfg.init_model();
  const SparseVoxelGrid grid = build_voxel_grid(data.points, cfg.voxel, params.voxel_encoder);
  const auto samples = build_training_samples(params, grid, data.events, data.camera,
                                              data.proposals, ground_truth);
  if (samples.empty()) {
    throw std::runtime_error("run_train: dataset has no blind-time ground truth");
  }
  TrainHyper hyper;
  hyper.adam = cfg.train.adam;
  hyper.weights = cfg.train.weights;
  hyper.theta_low = cfg.train.theta_low;
  hyper.theta_high = cfg.train.theta_high;
  AdamState state = AdamState::zeros_like({&params.fusion_mlp, &params.motion_mlp, &params.conf_mlp});
  std::mt19937_64 rng(mix_seed(cfg.seed, kTrainSeedStream));
  std::uniform_int_distribution<std::size_t> pick(0, samples.size() - 1);
  std::string log = "step,loss,reg_loss,score_loss\n";
  TrainRunResult result;
  result.steps = cfg.train.steps;
  for (int step = 1; step <= cfg.train.steps; ++step) {
    const auto& batch = samples[pick(rng)];
    const BatchLoss loss = train_step(params, batch, hyper, state);
    log += std::to_string(step) + ',' + io::format_double(loss.total) + ',' +
           io::format_double(loss.reg) + ',' + io::format_double(loss.score) + '\n';
    if (step == 1) {
      result.first_loss = loss.total;
    }
    result.final_loss = loss.total;
  }
  io::write_text_file(loss_log_out, log);
  save_checkpoint(checkpoint_out, params, cfg.config_hash());
  return result;
}

InferRunResult run_infer(const RunConfig& cfg, const std::filesystem::path& dataset_dir,
                         const std::filesystem::path& checkpoint,
                         const std::vector<double>& times,
                         const std::filesystem::path& detections_out,
                         const std::filesystem::path& audit_out) {
  io::reset_input_audit();
  for (double t : times) {
    if (!(t >= 0.0 && t < 1.0)) {
      throw std::invalid_argument("run_infer: every t must be in [0, 1)");
    }
  }
  Dataset data = load_dataset_for_inference(dataset_dir);
  const ModelParams params = load_checkpoint(checkpoint, cfg);
  const SparseVoxelGrid grid = build_voxel_grid(data.points, cfg.voxel, params.voxel_encoder);

  InferRunResult result;
  std::vector<double> sorted_times = times;
  std::sort(sorted_times.begin(), sorted_times.end());
  for (double t : sorted_times) {
    auto dets = blind_time_detect(data.proposals, grid, data.events, data.camera, params, t);
    dets = nms(dets, cfg.nms.iou_threshold, cfg.nms.per_class);
    std::stable_sort(dets.begin(), dets.end(),
                     [](const BoxProposal& a, const BoxProposal& b) { return a.score > b.score; });
    for (const auto& d : dets) {
      LabeledBox row;
      row.t = t;
      row.class_id = d.class_id;
      row.box = d.box;
      row.score = d.score;
      row.track_id = d.track_id;
      result.detections.push_back(row);
    }
  }
  io::save_labels_jsonl(detections_out, result.detections, /*with_score=*/true);
  result.inputs_read = io::input_audit();
  json audit;
  audit["inputs_read"] = result.inputs_read;
  io::write_text_file(audit_out, audit.dump(2) + "\n");
  return result;
}

EvalReport run_eval(const RunConfig& cfg, const std::filesystem::path& detections_path,
                    const std::filesystem::path& gt_path,
                    const std::filesystem::path& report_json_out,
                    const std::filesystem::path& report_text_out) {
  const auto detections = io::load_labels_jsonl(detections_path);
  const auto ground_truth = io::load_labels_jsonl(gt_path);
  const EvalReport report = evaluate(detections, ground_truth, cfg.eval);
  io::write_text_file(report_json_out, report_to_json_text(report));
  io::write_text_file(report_text_out, report_to_table_text(report));
  return report;
}

void run_interp_annotations(const std::filesystem::path& tracks_path, int subdivisions,
                            const std::filesystem::path& out_path) {
  const auto tracks = io::load_tracks_jsonl(tracks_path);
  std::vector<TrackedAnnotation> dense;
  for (const auto& track : tracks) {
    TrackedAnnotation out;
    out.track_id = track.track_id;
    out.keyframes = interpolate_annotations(track, subdivisions);
    dense.push_back(std::move(out));
  }
  io::save_tracks_jsonl(out_path, dense);
}

void run_sync(const std::filesystem::path& cloud0_path, double t0,
              const std::filesystem::path& cloud1_path, double t1,
              const std::filesystem::path& poses_path, double image_time,
              const std::filesystem::path& out_path) {
  const auto poses = io::load_poses_csv(poses_path);
  auto pose_at = [&](double t) {
    for (const auto& tp : poses) {
      if (std::abs(tp.t - t) < 1e-9) {
        return tp.pose;
      }
    }
    throw std::runtime_error("no pose at t=" + std::to_string(t));
  };
  TimedPointCloud c0{io::load_point_cloud_csv(cloud0_path), t0, pose_at(t0)};
  TimedPointCloud c1{io::load_point_cloud_csv(cloud1_path), t1, pose_at(t1)};
  const PointCloud synced = sync_to_image_time(image_time, c0, c1);
  io::save_point_cloud_csv(out_path, synced);
}

namespace {

json class_metrics_to_json(const ClassMetrics& m) {
  json j;
  j["ap"] = m.ap.has_value() ? json(*m.ap) : json();
  j["aph"] = m.aph.has_value() ? json(*m.aph) : json();
  j["num_gt"] = m.num_gt;
  j["num_det"] = m.num_det;
  return j;
}

std::string format_metric(const std::optional<double>& v) {
  if (!v.has_value()) {
    return "   -  ";
  }
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%6.4f", *v);
  return std::string(buf);
}

}  // namespace

std::string report_to_json_text(const EvalReport& report) {
  json j;
  for (const auto& [cls, m] : report.per_class) {
    j["per_class"][to_string(cls)] = class_metrics_to_json(m);
  }
  j["map"] = report.map.has_value() ? json(*report.map) : json();
  j["maph"] = report.maph.has_value() ? json(*report.maph) : json();
  j["buckets"] = json::array();
  for (const auto& bucket : report.buckets) {
    json jb;
    jb["t_low"] = bucket.t_low;
    jb["t_high"] = bucket.t_high;
    for (const auto& [cls, m] : bucket.per_class) {
      jb["per_class"][to_string(cls)] = class_metrics_to_json(m);
    }
    jb["map"] = bucket.map.has_value() ? json(*bucket.map) : json();
    jb["maph"] = bucket.maph.has_value() ? json(*bucket.maph) : json();
    j["buckets"].push_back(jb);
  }
  j["notes"] = report.notes;
  return j.dump(2) + "\n";
}

std::string report_to_table_text(const EvalReport& report) {
  std::ostringstream out;
  out << "class         AP      APH     #gt   #det\n";
  for (const auto& [cls, m] : report.per_class) {
    char line[96];
    std::snprintf(line, sizeof(line), "%-11s %s  %s  %5d  %5d\n", to_string(cls).c_str(),
                  format_metric(m.ap).c_str(), format_metric(m.aph).c_str(), m.num_gt, m.num_det);
    out << line;
  }
  out << "mAP  = " << format_metric(report.map) << "\n";
  out << "mAPH = " << format_metric(report.maph) << "\n\n";
  out << "bucket [t_low, t_high)   mAP     mAPH\n";
  for (const auto& bucket : report.buckets) {
    char line[96];
    std::snprintf(line, sizeof(line), "[%4.2f, %4.2f)           %s  %s\n", bucket.t_low,
                  bucket.t_high, format_metric(bucket.map).c_str(),
                  format_metric(bucket.maph).c_str());
    out << line;
  }
  for (const auto& note : report.notes) {
    out << "note: " << note << "\n";
  }
  return out.str();
}

}  // namespace evdet
