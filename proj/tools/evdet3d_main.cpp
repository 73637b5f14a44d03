#include "evdet3d/config.hpp"
#include "evdet3d/pipeline.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

namespace {

evdet::RunConfig load_config(const std::string& config_path, std::optional<std::uint64_t> seed) {
  evdet::RunConfig cfg =
      config_path.empty() ? evdet::RunConfig() : evdet::RunConfig::load(config_path);
  if (seed.has_value()) {
    cfg.seed = *seed;
    cfg.scenario.seed = *seed;
  }
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Blind-time 3D object detection pipeline over LiDAR, image proposals, and events"};
  app.require_subcommand(1);

  std::string config_path;
  std::optional<std::uint64_t> seed;
  app.add_option("--config", config_path, "JSON run configuration (defaults apply when omitted)");
  app.add_option("--seed", seed, "Override the configured seed");

  auto* synth = app.add_subcommand("synth", "Generate a synthetic dataset");
  std::string synth_out = "dataset";
  synth->add_option("--out", synth_out, "Output dataset directory");

  auto* train = app.add_subcommand("train", "Train the blind-time heads");
  std::string train_dataset = "dataset";
  std::string train_ckpt = "checkpoint.json";
  std::string train_log = "loss_log.csv";
  train->add_option("--dataset", train_dataset, "Dataset directory");
  train->add_option("--out", train_ckpt, "Checkpoint output path");
  train->add_option("--loss-log", train_log, "Per-step loss log output path");

  auto* infer = app.add_subcommand("infer", "Detect boxes at blind times");
  std::string infer_dataset = "dataset";
  std::string infer_ckpt = "checkpoint.json";
  std::string infer_out = "detections.jsonl";
  std::string infer_audit;
  std::vector<double> infer_times;
  infer->add_option("--dataset", infer_dataset, "Dataset directory");
  infer->add_option("--checkpoint", infer_ckpt, "Checkpoint path");
  infer->add_option("--out", infer_out, "Detections output (JSON lines)");
  infer->add_option("--audit", infer_audit, "I/O audit output (default: <out>.audit.json)");
  infer->add_option("--times", infer_times, "Blind times in [0, 1)")->required();

  auto* eval = app.add_subcommand("eval", "Score detections against ground truth");
  std::string eval_dets = "detections.jsonl";
  std::string eval_gt = "gt.jsonl";
  std::string eval_out = "report";
  eval->add_option("--detections", eval_dets, "Detections JSON lines");
  eval->add_option("--gt", eval_gt, "Ground-truth JSON lines");
  eval->add_option("--out", eval_out, "Report basename (writes <out>.json and <out>.txt)");

  auto* interp = app.add_subcommand("interp-annotations", "Densify keyframe tracks");
  std::string interp_tracks;
  std::string interp_out = "tracks_dense.jsonl";
  int interp_subdiv = 10;
  interp->add_option("--tracks", interp_tracks, "Keyframe tracks JSON lines")->required();
  interp->add_option("--subdivisions", interp_subdiv, "Intervals per keyframe gap");
  interp->add_option("--out", interp_out, "Dense tracks output path");

  auto* sync = app.add_subcommand("sync", "Re-express a LiDAR cloud at an image timestamp");
  std::string sync_cloud0, sync_cloud1, sync_poses;
  std::string sync_out = "points_synced.csv";
  double sync_t0 = 0.0, sync_t1 = 0.0, sync_image_time = 0.0;
  sync->add_option("--cloud0", sync_cloud0, "Earlier point cloud CSV")->required();
  sync->add_option("--t0", sync_t0, "Earlier cloud timestamp")->required();
  sync->add_option("--cloud1", sync_cloud1, "Later point cloud CSV")->required();
  sync->add_option("--t1", sync_t1, "Later cloud timestamp")->required();
  sync->add_option("--poses", sync_poses, "Pose CSV (t,x,y,z,qw,qx,qy,qz)")->required();
  sync->add_option("--image-time", sync_image_time, "Target image timestamp")->required();
  sync->add_option("--out", sync_out, "Synced cloud output path");

  CLI11_PARSE(app, argc, argv);

  try {
    const evdet::RunConfig cfg = load_config(config_path, seed);
    if (synth->parsed()) {
      evdet::run_synth(cfg, synth_out);
      std::cout << "dataset written to " << synth_out << "\n";
    } else if (train->parsed()) {
      const auto result = evdet::run_train(cfg, train_dataset, train_ckpt, train_log);
      std::cout << "trained " << result.steps << " steps, loss " << result.first_loss << " -> "
                << result.final_loss << "\n";
    } else if (infer->parsed()) {
      const std::string audit = infer_audit.empty() ? infer_out + ".audit.json" : infer_audit;
      const auto result =
          evdet::run_infer(cfg, infer_dataset, infer_ckpt, infer_times, infer_out, audit);
      std::cout << result.detections.size() << " detections written to " << infer_out << "\n";
    } else if (eval->parsed()) {
      const auto report = evdet::run_eval(cfg, eval_dets, eval_gt, eval_out + ".json",
                                          eval_out + ".txt");
      std::cout << evdet::report_to_table_text(report);
    } else if (interp->parsed()) {
      evdet::run_interp_annotations(interp_tracks, interp_subdiv, interp_out);
      std::cout << "dense tracks written to " << interp_out << "\n";
    } else if (sync->parsed()) {
      evdet::run_sync(sync_cloud0, sync_t0, sync_cloud1, sync_t1, sync_poses, sync_image_time,
                      sync_out);
      std::cout << "synced cloud written to " << sync_out << "\n";
    }
  } catch (const std::exception& e) {
    nlohmann::json err;
    err["error"]["type"] = typeid(e).name();
    err["error"]["message"] = e.what();
    std::cerr << err.dump() << "\n";
    return 1;
  }
  return 0;
}
