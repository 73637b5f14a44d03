#include "evdet3d/io.hpp"

#include <json.hpp>

#include <algorithm>
#include <charconv>
#include <fstream>
#include <map>
#include <mutex>
#include <sstream>
#include <stdexcept>

namespace evdet::io {

using nlohmann::json;

namespace {

std::mutex g_audit_mutex;
std::vector<std::string> g_audit;

void record_input(const std::filesystem::path& path) {
  std::lock_guard<std::mutex> lock(g_audit_mutex);
  g_audit.push_back(path.string());
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, sep)) {
    out.push_back(field);
  }
  return out;
}

double parse_double(const std::string& s) {
  std::size_t pos = 0;
  const double v = std::stod(s, &pos);
  if (pos == 0) {
    throw std::invalid_argument("bad numeric field: " + s);
  }
  return v;
}

std::vector<std::string> read_lines(const std::filesystem::path& path) {
  const std::string text = read_text_file(path);
  std::vector<std::string> lines;
  std::string line;
  std::istringstream ss(text);
  while (std::getline(ss, line)) {
    if (!line.empty() && line.back() == '\r') {
      line.pop_back();
    }
    if (!line.empty()) {
      lines.push_back(line);
    }
  }
  return lines;
}

json box_to_json(const LabeledBox& row, bool with_score) {
  json j;
  j["t"] = row.t;
  j["class"] = to_string(row.class_id);
  j["center"] = {row.box.center.x(), row.box.center.y(), row.box.center.z()};
  j["dims"] = {row.box.dims.x(), row.box.dims.y(), row.box.dims.z()};
  j["yaw"] = row.box.yaw;
  if (with_score) {
    j["score"] = row.score;
  }
  if (row.track_id >= 0) {
    j["track_id"] = row.track_id;
  }
  return j;
}

LabeledBox box_from_json(const json& j) {
  LabeledBox row;
  row.t = j.at("t").get<double>();
  row.class_id = object_class_from_string(j.at("class").get<std::string>());
  const auto c = j.at("center");
  const auto d = j.at("dims");
  row.box = Box3D(Vec3(c[0], c[1], c[2]), Vec3(d[0], d[1], d[2]), j.at("yaw").get<double>());
  row.score = j.value("score", 0.0);
  if (j.contains("track_id") && j.at("track_id").is_number_integer()) {
    row.track_id = j.at("track_id").get<int>();
  }
  return row;
}

}  // namespace

void reset_input_audit() {
  std::lock_guard<std::mutex> lock(g_audit_mutex);
  g_audit.clear();
}

std::vector<std::string> input_audit() {
  std::lock_guard<std::mutex> lock(g_audit_mutex);
  std::vector<std::string> out = g_audit;
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

std::string read_text_file(const std::filesystem::path& path) {
  record_input(path);
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw std::runtime_error("cannot open input file: " + path.string());
  }
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw std::runtime_error("cannot open output file: " + path.string());
  }
  out << content;
  if (!out) {
    throw std::runtime_error("write failed: " + path.string());
  }
}

std::string format_double(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

PointCloud load_point_cloud_csv(const std::filesystem::path& path) {
  const auto lines = read_lines(path);
  if (lines.empty()) {
    throw std::runtime_error("point cloud file is empty: " + path.string());
  }
  const auto header = split(lines[0], ',');
  const bool has_intensity = header.size() >= 4;
  if (header.size() < 3 || header[0] != "x" || header[1] != "y" || header[2] != "z") {
    throw std::runtime_error("bad point cloud header in " + path.string());
  }
  PointCloud cloud;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const auto f = split(lines[i], ',');
    if (f.size() < 3) {
      throw std::runtime_error("bad point row in " + path.string());
    }
    cloud.points.emplace_back(parse_double(f[0]), parse_double(f[1]), parse_double(f[2]));
    if (has_intensity && f.size() >= 4) {
      cloud.intensity.push_back(parse_double(f[3]));
    }
  }
  return cloud;
}

void save_point_cloud_csv(const std::filesystem::path& path, const PointCloud& cloud) {
  std::string out;
  const bool with_intensity = cloud.intensity.size() == cloud.points.size() &&
                              !cloud.intensity.empty();
  out += with_intensity ? "x,y,z,intensity\n" : "x,y,z\n";
  for (std::size_t i = 0; i < cloud.points.size(); ++i) {
    const Vec3& p = cloud.points[i];
    out += format_double(p.x()) + ',' + format_double(p.y()) + ',' + format_double(p.z());
    if (with_intensity) {
      out += ',' + format_double(cloud.intensity[i]);
    }
    out += '\n';
  }
  write_text_file(path, out);
}

EventStream load_events_csv(const std::filesystem::path& path, int width, int height) {
  const auto lines = read_lines(path);
  if (lines.empty() || lines[0] != "t,x,y,p") {
    throw std::runtime_error("bad event header in " + path.string());
  }
  std::vector<Event> events;
  events.reserve(lines.size() - 1);
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const auto f = split(lines[i], ',');
    if (f.size() != 4) {
      throw std::runtime_error("bad event row in " + path.string());
    }
    Event e;
    e.t = parse_double(f[0]);
    e.x = std::stoi(f[1]);
    e.y = std::stoi(f[2]);
    e.polarity = std::stoi(f[3]);
    events.push_back(e);
  }
  return EventStream(std::move(events), width, height);  // validates sortedness
}

void save_events_csv(const std::filesystem::path& path, const EventStream& stream) {
  std::string out = "t,x,y,p\n";
  for (const Event& e : stream.events()) {
    out += format_double(e.t) + ',' + std::to_string(e.x) + ',' + std::to_string(e.y) +
           ',' + std::to_string(e.polarity) + '\n';
  }
  write_text_file(path, out);
}

std::vector<TimedPose> load_poses_csv(const std::filesystem::path& path) {
  const auto lines = read_lines(path);
  if (lines.empty() || lines[0] != "t,x,y,z,qw,qx,qy,qz") {
    throw std::runtime_error("bad pose header in " + path.string());
  }
  std::vector<TimedPose> poses;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const auto f = split(lines[i], ',');
    if (f.size() != 8) {
      throw std::runtime_error("bad pose row in " + path.string());
    }
    TimedPose tp;
    tp.t = parse_double(f[0]);
    tp.pose.position = Vec3(parse_double(f[1]), parse_double(f[2]), parse_double(f[3]));
    tp.pose.orientation = Quaternion(parse_double(f[4]), parse_double(f[5]),
                                     parse_double(f[6]), parse_double(f[7]));
    poses.push_back(tp);
  }
  return poses;
}

void save_poses_csv(const std::filesystem::path& path, const std::vector<TimedPose>& poses) {
  std::string out = "t,x,y,z,qw,qx,qy,qz\n";
  for (const auto& tp : poses) {
    out += format_double(tp.t) + ',' + format_double(tp.pose.position.x()) + ',' +
           format_double(tp.pose.position.y()) + ',' + format_double(tp.pose.position.z()) +
           ',' + format_double(tp.pose.orientation.w) + ',' + format_double(tp.pose.orientation.x) +
           ',' + format_double(tp.pose.orientation.y) + ',' + format_double(tp.pose.orientation.z) +
           '\n';
  }
  write_text_file(path, out);
}

std::vector<LabeledBox> load_labels_jsonl(const std::filesystem::path& path) {
  std::vector<LabeledBox> rows;
  for (const auto& line : read_lines(path)) {
    rows.push_back(box_from_json(json::parse(line)));
  }
  return rows;
}

void save_labels_jsonl(const std::filesystem::path& path, const std::vector<LabeledBox>& rows,
                       bool with_score) {
  std::string out;
  for (const auto& row : rows) {
    out += box_to_json(row, with_score).dump() + '\n';
  }
  write_text_file(path, out);
}

std::vector<TrackedAnnotation> load_tracks_jsonl(const std::filesystem::path& path) {
  std::map<std::string, TrackedAnnotation> by_id;
  for (const auto& line : read_lines(path)) {
    const json j = json::parse(line);
    const std::string id = j.at("track_id").is_string()
                               ? j.at("track_id").get<std::string>()
                               : std::to_string(j.at("track_id").get<long>());
    const LabeledBox row = box_from_json(j);
    auto& track = by_id[id];
    track.track_id = id;
    track.keyframes.push_back(AnnotationKeyframe{row.t, row.box, row.class_id});
  }
  std::vector<TrackedAnnotation> tracks;
  for (auto& [id, track] : by_id) {
    std::sort(track.keyframes.begin(), track.keyframes.end(),
              [](const auto& a, const auto& b) { return a.t < b.t; });
    tracks.push_back(std::move(track));
  }
  return tracks;
}

void save_tracks_jsonl(const std::filesystem::path& path,
                       const std::vector<TrackedAnnotation>& tracks) {
  std::string out;
  for (const auto& track : tracks) {
    for (const auto& kf : track.keyframes) {
      json j;
      j["track_id"] = track.track_id;
      j["t"] = kf.t;
      j["class"] = to_string(kf.class_id);
      j["center"] = {kf.box.center.x(), kf.box.center.y(), kf.box.center.z()};
      j["dims"] = {kf.box.dims.x(), kf.box.dims.y(), kf.box.dims.z()};
      j["yaw"] = kf.box.yaw;
      out += j.dump() + '\n';
    }
  }
  write_text_file(path, out);
}

CameraModel load_camera_json(const std::filesystem::path& path) {
  const json j = json::parse(read_text_file(path));
  Mat3 r;
  const auto& rows = j.at("extrinsic").at("rotation");
  for (int i = 0; i < 3; ++i) {
    for (int k = 0; k < 3; ++k) {
      r(i, k) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)].get<double>();
    }
  }
  const auto& tr = j.at("extrinsic").at("translation");
  const RigidTransform ext(r, Vec3(tr[0], tr[1], tr[2]));
  return CameraModel(j.at("fx").get<double>(), j.at("fy").get<double>(),
                     j.at("cx").get<double>(), j.at("cy").get<double>(), ext,
                     j.at("width").get<int>(), j.at("height").get<int>());
}

void save_camera_json(const std::filesystem::path& path, const CameraModel& cam) {
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
  j["extrinsic"]["translation"] = {cam.extrinsic.translation.x(), cam.extrinsic.translation.y(),
                                   cam.extrinsic.translation.z()};
  write_text_file(path, j.dump(2) + "\n");
}

}  // namespace evdet::io
