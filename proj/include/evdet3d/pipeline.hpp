#pragma once

#include "evdet3d/config.hpp"
#include "evdet3d/metrics.hpp"
#include "evdet3d/trainer.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace evdet {

// Library forms of the CLI subcommands; each CLI verb is a thin wrapper so
// results are identical through either surface.

// Writes events.csv, points.csv, points_t1.csv, gt.jsonl, proposals.jsonl,
// calib.json, and config.json under out_dir.
void run_synth(const RunConfig& cfg, const std::filesystem::path& out_dir);

struct TrainRunResult {
  double first_loss{0.0};
  double final_loss{0.0};
  int steps{0};
};

// Trains the fusion/motion/confidence heads on the dataset's blind-time
// ground truth, one uniformly sampled ground-truth time per step.
TrainRunResult run_train(const RunConfig& cfg, const std::filesystem::path& dataset_dir,
                         const std::filesystem::path& checkpoint_out,
                         const std::filesystem::path& loss_log_out);

struct InferRunResult {
  std::vector<LabeledBox> detections;
  std::vector<std::string> inputs_read;  // audited file opens
};

// Blind-time inference at each requested t; reads only timestamp-0 sensor
// data plus the event stream and writes an I/O audit next to the detections.
InferRunResult run_infer(const RunConfig& cfg, const std::filesystem::path& dataset_dir,
                         const std::filesystem::path& checkpoint,
                         const std::vector<double>& times,
                         const std::filesystem::path& detections_out,
                         const std::filesystem::path& audit_out);

EvalReport run_eval(const RunConfig& cfg, const std::filesystem::path& detections_path,
                    const std::filesystem::path& gt_path,
                    const std::filesystem::path& report_json_out,
                    const std::filesystem::path& report_text_out);

void run_interp_annotations(const std::filesystem::path& tracks_path, int subdivisions,
                            const std::filesystem::path& out_path);

void run_sync(const std::filesystem::path& cloud0_path, double t0,
              const std::filesystem::path& cloud1_path, double t1,
              const std::filesystem::path& poses_path, double image_time,
              const std::filesystem::path& out_path);

std::string report_to_json_text(const EvalReport& report);
std::string report_to_table_text(const EvalReport& report);

// Shared helper: voxelize + centroids + features, built once per scene.
SparseVoxelGrid build_voxel_grid(const PointCloud& cloud, const VoxelConfig& voxel_cfg,
                                 const VoxelEncoder& encoder);

// Pooled training samples for every proposal at each ground-truth time > 0.
std::vector<std::vector<TrainSample>> build_training_samples(
    const ModelParams& params, const SparseVoxelGrid& grid, const EventStream& events,
    const CameraModel& cam, const std::vector<BoxProposal>& proposals,
    const std::vector<LabeledBox>& ground_truth, std::vector<double>* times_out = nullptr);

}  // namespace evdet
