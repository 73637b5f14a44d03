#pragma once

#include "evdet3d/annotations.hpp"
#include "evdet3d/events.hpp"
#include "evdet3d/geometry.hpp"
#include "evdet3d/metrics.hpp"
#include "evdet3d/voxel.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace evdet::io {

// Process-wide record of every input file opened through this module; lets
// callers audit that a run touched only the data it was allowed to see.
void reset_input_audit();
std::vector<std::string> input_audit();
std::string read_text_file(const std::filesystem::path& path);  // audited
void write_text_file(const std::filesystem::path& path, const std::string& content);

// Deterministic shortest-round-trip formatting for CSV payloads.
std::string format_double(double v);

// points: CSV header x,y,z[,intensity]
PointCloud load_point_cloud_csv(const std::filesystem::path& path);
void save_point_cloud_csv(const std::filesystem::path& path, const PointCloud& cloud);

// events: CSV header t,x,y,p sorted by t
EventStream load_events_csv(const std::filesystem::path& path, int width, int height);
void save_events_csv(const std::filesystem::path& path, const EventStream& stream);

// poses: CSV header t,x,y,z,qw,qx,qy,qz
struct TimedPose {
  double t{0.0};
  Pose pose;
};
std::vector<TimedPose> load_poses_csv(const std::filesystem::path& path);
void save_poses_csv(const std::filesystem::path& path, const std::vector<TimedPose>& poses);

// labels: JSON lines {"t","class","center","dims","yaw"[,"score"][,"track_id"]}
std::vector<LabeledBox> load_labels_jsonl(const std::filesystem::path& path);
void save_labels_jsonl(const std::filesystem::path& path, const std::vector<LabeledBox>& rows,
                       bool with_score);

// tracks: same row shape keyed by track_id, grouped and time-sorted on load
std::vector<TrackedAnnotation> load_tracks_jsonl(const std::filesystem::path& path);
void save_tracks_jsonl(const std::filesystem::path& path,
                       const std::vector<TrackedAnnotation>& tracks);

CameraModel load_camera_json(const std::filesystem::path& path);
void save_camera_json(const std::filesystem::path& path, const CameraModel& cam);

}  // namespace evdet::io
