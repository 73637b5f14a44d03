#include "evdet3d/config.hpp"

#include "evdet3d/io.hpp"

#include <json.hpp>

#include <iostream>
#include <stdexcept>

namespace evdet {

using nlohmann::json;

namespace {

constexpr std::uint64_t kSeedStride = 0x9E3779B97F4A7C15ull;

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream) {
  std::uint64_t z = base + kSeedStride * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

json vec3_to_json(const Vec3& v) { return json{v.x(), v.y(), v.z()}; }

Vec3 vec3_from_json(const json& j) { return Vec3(j[0], j[1], j[2]); }

json camera_to_json(const CameraModel& cam) {
  json j;
  j["fx"] = cam.fx;
  j["fy"] = cam.fy;
  j["cx"] = cam.cx;
  j["cy"] = cam.cy;
  j["width"] = cam.width;
  j["height"] = cam.height;
  j["extrinsic"]["rotation"] = {
      {cam.extrinsic.rotation(0, 0), cam.extrinsic.rotation(0, 1), cam.extrinsic.rotation(0, 2)},
      {cam.extrinsic.rotation(1, 0), cam.extrinsic.rotation(1, 1), cam.extrinsic.rotation(1, 2)},
      {cam.extrinsic.rotation(2, 0), cam.extrinsic.rotation(2, 1), cam.extrinsic.rotation(2, 2)}};
  j["extrinsic"]["translation"] = vec3_to_json(cam.extrinsic.translation);
  return j;
}

CameraModel camera_from_json(const json& j, const CameraModel& fallback) {
  if (j.is_null()) {
    return fallback;
  }
  Mat3 r = fallback.extrinsic.rotation;
  Vec3 t = fallback.extrinsic.translation;
  if (j.contains("extrinsic")) {
    const auto& e = j.at("extrinsic");
    if (e.contains("rotation")) {
      for (int i = 0; i < 3; ++i) {
        for (int k = 0; k < 3; ++k) {
          r(i, k) = e.at("rotation")[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)];
        }
      }
    }
    if (e.contains("translation")) {
      t = vec3_from_json(e.at("translation"));
    }
  }
  return CameraModel(j.value("fx", fallback.fx), j.value("fy", fallback.fy),
                     j.value("cx", fallback.cx), j.value("cy", fallback.cy),
                     RigidTransform(r, t), j.value("width", fallback.width),
                     j.value("height", fallback.height));
}

json scenario_to_json(const ScenarioSpec& s) {
  json j;
  j["seed"] = s.seed;
  j["points_per_box"] = s.points_per_box;
  j["events_per_unit_motion"] = s.events_per_unit_motion;
  j["point_jitter"] = s.point_jitter;
  j["event_pixel_jitter"] = s.event_pixel_jitter;
  j["proposal_center_jitter"] = s.proposal_center_jitter;
  j["gt_steps"] = s.gt_steps;
  j["camera"] = camera_to_json(s.camera);
  j["boxes"] = json::array();
  for (const auto& b : s.boxes) {
    json jb;
    jb["center"] = vec3_to_json(b.box.center);
    jb["dims"] = vec3_to_json(b.box.dims);
    jb["yaw"] = b.box.yaw;
    jb["velocity"] = vec3_to_json(b.velocity);
    jb["yaw_rate"] = b.yaw_rate;
    jb["class"] = to_string(b.class_id);
    j["boxes"].push_back(jb);
  }
  return j;
}

ScenarioSpec scenario_from_json(const json& j, const ScenarioSpec& fallback) {
  ScenarioSpec s = fallback;
  if (j.is_null()) {
    return s;
  }
  s.seed = j.value("seed", s.seed);
  s.points_per_box = j.value("points_per_box", s.points_per_box);
  s.events_per_unit_motion = j.value("events_per_unit_motion", s.events_per_unit_motion);
  s.point_jitter = j.value("point_jitter", s.point_jitter);
  s.event_pixel_jitter = j.value("event_pixel_jitter", s.event_pixel_jitter);
  s.proposal_center_jitter = j.value("proposal_center_jitter", s.proposal_center_jitter);
  s.gt_steps = j.value("gt_steps", s.gt_steps);
  s.camera = camera_from_json(j.value("camera", json()), s.camera);
  if (j.contains("boxes")) {
    s.boxes.clear();
    for (const auto& jb : j.at("boxes")) {
      ScenarioBox b;
      b.box = Box3D(vec3_from_json(jb.at("center")), vec3_from_json(jb.at("dims")),
                    jb.at("yaw").get<double>());
      b.velocity = jb.contains("velocity") ? vec3_from_json(jb.at("velocity")) : Vec3::Zero();
      b.yaw_rate = jb.value("yaw_rate", 0.0);
      b.class_id = object_class_from_string(jb.value("class", std::string("vehicle")));
      s.boxes.push_back(b);
    }
  }
  return s;
}

}  // namespace

RunConfig::RunConfig() {
  // Desk-scale defaults around the synthetic scene; VoxelConfig itself
  // defaults to the full-scale values.
  voxel.range_min = Vec3(0.0, -10.0, -2.0);
  voxel.range_max = Vec3(20.0, 10.0, 4.0);
  voxel.voxel_size = Vec3(0.25, 0.25, 0.3);
  scenario = ScenarioSpec::default_spec();
}

RunConfig RunConfig::from_json_text(const std::string& text) {
  const json j = json::parse(text);
  RunConfig cfg;
  cfg.seed = j.value("seed", cfg.seed);
  if (j.contains("voxel")) {
    const auto& jv = j.at("voxel");
    if (jv.contains("range_min")) cfg.voxel.range_min = vec3_from_json(jv.at("range_min"));
    if (jv.contains("range_max")) cfg.voxel.range_max = vec3_from_json(jv.at("range_max"));
    if (jv.contains("voxel_size")) cfg.voxel.voxel_size = vec3_from_json(jv.at("voxel_size"));
  }
  if (j.contains("events")) {
    const auto& je = j.at("events");
    cfg.events.bins = je.value("bins", cfg.events.bins);
    cfg.events.encoder = je.value("encoder", cfg.events.encoder);
    cfg.events.stride = je.value("stride", cfg.events.stride);
    cfg.events.channels = je.value("channels", cfg.events.channels);
  }
  if (j.contains("model")) {
    const auto& jm = j.at("model");
    cfg.model.voxel_channels = jm.value("voxel_channels", cfg.model.voxel_channels);
    cfg.model.roi_grid_size = jm.value("roi_grid_size", cfg.model.roi_grid_size);
    cfg.model.fusion_hidden = jm.value("fusion_hidden", cfg.model.fusion_hidden);
    cfg.model.field_channels = jm.value("field_channels", cfg.model.field_channels);
    cfg.model.motion_hidden = jm.value("motion_hidden", cfg.model.motion_hidden);
    cfg.model.conf_hidden = jm.value("conf_hidden", cfg.model.conf_hidden);
    cfg.model.use_non_empty_mask = jm.value("use_non_empty_mask", cfg.model.use_non_empty_mask);
  }
  if (j.contains("train")) {
    const auto& jt = j.at("train");
    cfg.train.steps = jt.value("steps", cfg.train.steps);
    cfg.train.adam.lr = jt.value("lr", cfg.train.adam.lr);
    cfg.train.adam.beta1 = jt.value("beta1", cfg.train.adam.beta1);
    cfg.train.adam.beta2 = jt.value("beta2", cfg.train.adam.beta2);
    cfg.train.adam.eps = jt.value("eps", cfg.train.adam.eps);
    cfg.train.weights.lambda_reg = jt.value("lambda_reg", cfg.train.weights.lambda_reg);
    cfg.train.weights.lambda_score = jt.value("lambda_score", cfg.train.weights.lambda_score);
    cfg.train.theta_low = jt.value("theta_low", cfg.train.theta_low);
    cfg.train.theta_high = jt.value("theta_high", cfg.train.theta_high);
  }
  if (j.contains("nms")) {
    cfg.nms.iou_threshold = j.at("nms").value("iou_threshold", cfg.nms.iou_threshold);
    cfg.nms.per_class = j.at("nms").value("per_class", cfg.nms.per_class);
  }
  if (j.contains("eval")) {
    const auto& je = j.at("eval");
    if (je.contains("iou_thresholds")) {
      for (const auto& [key, value] : je.at("iou_thresholds").items()) {
        cfg.eval.iou_thresholds[object_class_from_string(key)] = value.get<double>();
      }
    }
    if (je.contains("bucket_edges")) {
      cfg.eval.bucket_edges = je.at("bucket_edges").get<std::vector<double>>();
    }
  }
  cfg.scenario = scenario_from_json(j.value("scenario", json()), cfg.scenario);
  return cfg;
}

RunConfig RunConfig::load(const std::filesystem::path& path) {
  return from_json_text(io::read_text_file(path));
}

std::string RunConfig::to_json_text() const {
  json j;
  j["seed"] = seed;
  j["voxel"]["range_min"] = vec3_to_json(voxel.range_min);
  j["voxel"]["range_max"] = vec3_to_json(voxel.range_max);
  j["voxel"]["voxel_size"] = vec3_to_json(voxel.voxel_size);
  j["events"]["bins"] = events.bins;
  j["events"]["encoder"] = events.encoder;
  j["events"]["stride"] = events.stride;
  j["events"]["channels"] = events.channels;
  j["model"]["voxel_channels"] = model.voxel_channels;
  j["model"]["roi_grid_size"] = model.roi_grid_size;
  j["model"]["fusion_hidden"] = model.fusion_hidden;
  j["model"]["field_channels"] = model.field_channels;
  j["model"]["motion_hidden"] = model.motion_hidden;
  j["model"]["conf_hidden"] = model.conf_hidden;
  j["model"]["use_non_empty_mask"] = model.use_non_empty_mask;
  j["train"]["steps"] = train.steps;
  j["train"]["lr"] = train.adam.lr;
  j["train"]["beta1"] = train.adam.beta1;
  j["train"]["beta2"] = train.adam.beta2;
  j["train"]["eps"] = train.adam.eps;
  j["train"]["lambda_reg"] = train.weights.lambda_reg;
  j["train"]["lambda_score"] = train.weights.lambda_score;
  j["train"]["theta_low"] = train.theta_low;
  j["train"]["theta_high"] = train.theta_high;
  j["nms"]["iou_threshold"] = nms.iou_threshold;
  j["nms"]["per_class"] = nms.per_class;
  for (const auto& [cls, thresh] : eval.iou_thresholds) {
    j["eval"]["iou_thresholds"][to_string(cls)] = thresh;
  }
  j["eval"]["bucket_edges"] = eval.bucket_edges;
  j["scenario"] = scenario_to_json(scenario);
  return j.dump(2) + "\n";
}

std::string RunConfig::config_hash() const {
  const std::string text = to_json_text();
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return std::string(buf);
}

ModelParams RunConfig::init_model() const {
  ModelParams p;
  if (events.encoder == "identity") {
    p.event_encoder = EventEncoder::make_identity(events.bins);
  } else if (events.encoder == "linear") {
    p.event_encoder = EventEncoder::make_linear(events.bins, events.channels, events.stride,
                                                derive_seed(seed, 1));
  } else {
    throw std::invalid_argument("unknown event encoder: " + events.encoder);
  }
  p.voxel_encoder = (model.voxel_channels == kVoxelDescriptorSize)
                        ? VoxelEncoder::make_identity()
                        : VoxelEncoder::make_linear(model.voxel_channels, derive_seed(seed, 2));
  const int fused_in = p.event_encoder.channels + model.voxel_channels;
  std::vector<int> fusion_widths{fused_in};
  fusion_widths.insert(fusion_widths.end(), model.fusion_hidden.begin(), model.fusion_hidden.end());
  fusion_widths.push_back(model.field_channels);
  p.fusion_mlp = MlpParams::make(fusion_widths, Activation::relu, Activation::identity,
                                 derive_seed(seed, 3));
  const int cells = model.roi_grid_size * model.roi_grid_size * model.roi_grid_size;
  std::vector<int> motion_widths{cells * model.field_channels};
  motion_widths.insert(motion_widths.end(), model.motion_hidden.begin(), model.motion_hidden.end());
  motion_widths.push_back(4);
  p.motion_mlp = MlpParams::make(motion_widths, Activation::relu, Activation::identity,
                                 derive_seed(seed, 4));
  std::vector<int> conf_widths{cells * model.field_channels};
  conf_widths.insert(conf_widths.end(), model.conf_hidden.begin(), model.conf_hidden.end());
  conf_widths.push_back(1);
  p.conf_mlp = MlpParams::make(conf_widths, Activation::relu, Activation::identity,
                               derive_seed(seed, 5));
  p.roi_grid_size = model.roi_grid_size;
  p.use_non_empty_mask = model.use_non_empty_mask;
  p.validate();
  return p;
}

namespace {

json mlp_to_json(const MlpParams& p, const std::string& prefix) {
  json tensors = json::object();
  for (std::size_t l = 0; l < p.layers.size(); ++l) {
    const auto& layer = p.layers[l];
    json w;
    w["shape"] = {layer.weight.rows(), layer.weight.cols()};
    std::vector<double> values;
    values.reserve(static_cast<std::size_t>(layer.weight.size()));
    for (Eigen::Index r = 0; r < layer.weight.rows(); ++r) {
      for (Eigen::Index c = 0; c < layer.weight.cols(); ++c) {
        values.push_back(layer.weight(r, c));
      }
    }
    w["data"] = values;
    tensors[prefix + ".l" + std::to_string(l) + ".weight"] = w;
    json b;
    b["shape"] = {layer.bias.size()};
    b["data"] = std::vector<double>(layer.bias.data(), layer.bias.data() + layer.bias.size());
    tensors[prefix + ".l" + std::to_string(l) + ".bias"] = b;
  }
  return tensors;
}

void mlp_from_json(const json& tensors, const std::string& prefix, MlpParams& p) {
  for (std::size_t l = 0; l < p.layers.size(); ++l) {
    auto& layer = p.layers[l];
    const std::string wkey = prefix + ".l" + std::to_string(l) + ".weight";
    const std::string bkey = prefix + ".l" + std::to_string(l) + ".bias";
    if (!tensors.contains(wkey) || !tensors.contains(bkey)) {
      throw std::runtime_error("checkpoint missing tensor " + wkey);
    }
    const auto& w = tensors.at(wkey);
    const auto shape = w.at("shape").get<std::vector<long>>();
    if (shape.size() != 2 || shape[0] != layer.weight.rows() || shape[1] != layer.weight.cols()) {
      throw std::runtime_error("checkpoint shape mismatch for " + wkey);
    }
    const auto values = w.at("data").get<std::vector<double>>();
    std::size_t i = 0;
    for (Eigen::Index r = 0; r < layer.weight.rows(); ++r) {
      for (Eigen::Index c = 0; c < layer.weight.cols(); ++c) {
        layer.weight(r, c) = values[i++];
      }
    }
    const auto& b = tensors.at(bkey);
    const auto bshape = b.at("shape").get<std::vector<long>>();
    if (bshape.size() != 1 || bshape[0] != layer.bias.size()) {
      throw std::runtime_error("checkpoint shape mismatch for " + bkey);
    }
    const auto bvalues = b.at("data").get<std::vector<double>>();
    for (Eigen::Index r = 0; r < layer.bias.size(); ++r) {
      layer.bias[r] = bvalues[static_cast<std::size_t>(r)];
    }
  }
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const ModelParams& params,
                     const std::string& config_hash) {
  json j;
  j["format_version"] = kCheckpointVersion;
  j["config_hash"] = config_hash;
  json tensors = json::object();
  tensors.update(mlp_to_json(params.fusion_mlp, "fusion"));
  tensors.update(mlp_to_json(params.motion_mlp, "motion"));
  tensors.update(mlp_to_json(params.conf_mlp, "conf"));
  if (params.event_encoder.mode == EventEncoderMode::linear) {
    tensors.update(mlp_to_json(params.event_encoder.mlp, "event_encoder"));
  }
  {
    json w;
    w["shape"] = {params.voxel_encoder.weight.rows(), params.voxel_encoder.weight.cols()};
    std::vector<double> values;
    for (Eigen::Index r = 0; r < params.voxel_encoder.weight.rows(); ++r) {
      for (Eigen::Index c = 0; c < params.voxel_encoder.weight.cols(); ++c) {
        values.push_back(params.voxel_encoder.weight(r, c));
      }
    }
    w["data"] = values;
    tensors["voxel_encoder.weight"] = w;
  }
  j["tensors"] = std::move(tensors);
  io::write_text_file(path, j.dump() + "\n");
}

ModelParams load_checkpoint(const std::filesystem::path& path, const RunConfig& expected) {
  const json j = json::parse(io::read_text_file(path));
  if (j.value("format_version", -1) != kCheckpointVersion) {
    throw std::runtime_error("unsupported checkpoint version in " + path.string());
  }
  if (j.value("config_hash", std::string()) != expected.config_hash()) {
    std::cerr << "warning: checkpoint config hash differs from the active config\n";
  }
  ModelParams params = expected.init_model();
  const json& tensors = j.at("tensors");
  mlp_from_json(tensors, "fusion", params.fusion_mlp);
  mlp_from_json(tensors, "motion", params.motion_mlp);
  mlp_from_json(tensors, "conf", params.conf_mlp);
  if (params.event_encoder.mode == EventEncoderMode::linear) {
    mlp_from_json(tensors, "event_encoder", params.event_encoder.mlp);
  }
  const auto& w = tensors.at("voxel_encoder.weight");
  const auto shape = w.at("shape").get<std::vector<long>>();
  if (shape.size() != 2 || shape[0] != params.voxel_encoder.weight.rows() ||
      shape[1] != params.voxel_encoder.weight.cols()) {
    throw std::runtime_error("checkpoint shape mismatch for voxel_encoder.weight");
  }
  const auto values = w.at("data").get<std::vector<double>>();
  std::size_t i = 0;
  for (Eigen::Index r = 0; r < params.voxel_encoder.weight.rows(); ++r) {
    for (Eigen::Index c = 0; c < params.voxel_encoder.weight.cols(); ++c) {
      params.voxel_encoder.weight(r, c) = values[i++];
    }
  }
  params.validate();
  return params;
}

}  // namespace evdet
