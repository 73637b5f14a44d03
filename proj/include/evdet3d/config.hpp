#pragma once

#include "evdet3d/fusion.hpp"
#include "evdet3d/metrics.hpp"
#include "evdet3d/nn.hpp"
#include "evdet3d/scenario.hpp"
#include "evdet3d/voxel.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace evdet {

// Full run configuration; every field has a default and any subset may be
// overridden from a JSON file.
struct RunConfig {
  std::uint64_t seed{7};
  VoxelConfig voxel;  // desk-scale default below; full-scale values live in VoxelConfig

  struct EventsConfig {
    int bins{5};
    std::string encoder{"identity"};  // identity | linear
    int stride{4};                    // linear mode only
    int channels{5};                  // linear mode only
  } events;

  struct ModelConfig {
    int voxel_channels{5};
    int roi_grid_size{6};
    std::vector<int> fusion_hidden{32};
    int field_channels{4};
    std::vector<int> motion_hidden{64, 64};
    std::vector<int> conf_hidden{64, 64};
    bool use_non_empty_mask{true};
  } model;

  struct TrainConfig {
    int steps{2000};
    AdamConfig adam;
    LossWeights weights;
    double theta_low{0.25};
    double theta_high{0.75};
  } train;

  struct NmsConfig {
    double iou_threshold{0.1};
    bool per_class{true};
  } nms;

  EvalConfig eval;
  ScenarioSpec scenario;

  RunConfig();

  static RunConfig from_json_text(const std::string& text);
  static RunConfig load(const std::filesystem::path& path);  // audited read
  std::string to_json_text() const;                          // canonical dump
  std::string config_hash() const;                           // FNV-1a of the dump

  ModelParams init_model() const;  // deterministic from seed
};

// Versioned named-tensor checkpoint.
constexpr int kCheckpointVersion = 1;
void save_checkpoint(const std::filesystem::path& path, const ModelParams& params,
                     const std::string& config_hash);
// Shape mismatches against `expected` throw; a hash mismatch only warns.
ModelParams load_checkpoint(const std::filesystem::path& path, const RunConfig& expected);

}  // namespace evdet
