#include "evdet3d/boxes.hpp"
#include "evdet3d/config.hpp"
#include "evdet3d/events.hpp"
#include "evdet3d/fusion.hpp"
#include "evdet3d/geometry.hpp"
#include "evdet3d/nn.hpp"
#include "evdet3d/pipeline.hpp"

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

namespace py = pybind11;
using namespace evdet;

namespace {

using Quat = std::array<double, 4>;  // (w, x, y, z)

Quaternion to_quat(const Quat& q) { return Quaternion(q[0], q[1], q[2], q[3]); }
Quat from_quat(const Quaternion& q) { return {q.w, q.x, q.y, q.z}; }

Vec3 to_vec3(const std::array<double, 3>& v) { return Vec3(v[0], v[1], v[2]); }
std::array<double, 3> from_vec3(const Vec3& v) { return {v.x(), v.y(), v.z()}; }

RunConfig config_from_optional(const std::optional<std::string>& config_json) {
  return config_json ? RunConfig::from_json_text(*config_json) : RunConfig();
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Blind-time 3D detection core: geometry, event grids, box motion, "
            "and the end-to-end pipeline verbs";

  py::class_<Box3D>(m, "Box3D")
      .def(py::init([](const std::array<double, 3>& center, const std::array<double, 3>& dims,
                       double yaw) { return Box3D(to_vec3(center), to_vec3(dims), yaw); }),
           py::arg("center"), py::arg("dims"), py::arg("yaw"))
      .def_property_readonly("center", [](const Box3D& b) { return from_vec3(b.center); })
      .def_property_readonly("dims", [](const Box3D& b) { return from_vec3(b.dims); })
      .def_readonly("yaw", &Box3D::yaw)
      .def("volume", &Box3D::volume);

  m.def("wrap_angle", &wrap_angle, py::arg("angle"));

  m.def(
      "slerp",
      [](const Quat& q0, const Quat& q1, double t) {
        return from_quat(slerp(to_quat(q0), to_quat(q1), t));
      },
      py::arg("q0"), py::arg("q1"), py::arg("t"),
      "Shorter-geodesic quaternion interpolation; quaternions are (w, x, y, z)");

  m.def(
      "pose_interpolate",
      [](const std::array<double, 3>& p0, const Quat& q0, const std::array<double, 3>& p1,
         const Quat& q1, double t) {
        Pose a{to_vec3(p0), to_quat(q0)};
        Pose b{to_vec3(p1), to_quat(q1)};
        const Pose out = pose_interpolate(a, b, t);
        return py::make_tuple(from_vec3(out.position), from_quat(out.orientation));
      },
      py::arg("position0"), py::arg("quat0"), py::arg("position1"), py::arg("quat1"),
      py::arg("t"));

  m.def("iou_3d", &iou_3d, py::arg("a"), py::arg("b"));
  m.def("iou_bev", &iou_bev, py::arg("a"), py::arg("b"));

  m.def(
      "box_corners",
      [](const Box3D& b) {
        const auto corners = box_corners(b);
        py::array_t<double> out({8, 3});
        auto view = out.mutable_unchecked<2>();
        for (int k = 0; k < 8; ++k) {
          for (int a = 0; a < 3; ++a) {
            view(k, a) = corners[static_cast<std::size_t>(k)][a];
          }
        }
        return out;
      },
      py::arg("box"));

  m.def(
      "apply_motion",
      [](const Box3D& b, const std::array<double, 4>& motion) {
        return apply_motion(b, MotionVector{motion[0], motion[1], motion[2], motion[3]});
      },
      py::arg("box"), py::arg("motion"), "motion is (dx, dy, dz, dyaw) in the box frame");

  m.def("combine_score", &combine_score, py::arg("p0"), py::arg("p_motion"));
  m.def("iou_target", &iou_target, py::arg("iou"), py::arg("theta_low"), py::arg("theta_high"));

  m.def(
      "build_event_voxel_grid",
      [](const std::vector<std::tuple<double, int, int, int>>& events, int bins, int height,
         int width, double t0, double t1) {
        std::vector<Event> evs;
        evs.reserve(events.size());
        for (const auto& [t, x, y, p] : events) {
          evs.push_back(Event{x, y, p, t});
        }
        const EventVoxelGrid grid = build_event_voxel_grid(evs, bins, height, width, t0, t1);
        py::array_t<double> out({bins, height, width});
        std::copy(grid.data.begin(), grid.data.end(), out.mutable_data());
        return out;
      },
      py::arg("events"), py::arg("bins"), py::arg("height"), py::arg("width"), py::arg("t0"),
      py::arg("t1"), "events are (t, x, y, polarity) tuples");

  m.def("default_config_json", []() { return RunConfig().to_json_text(); });

  m.def(
      "run_synth",
      [](const std::filesystem::path& out_dir, const std::optional<std::string>& config_json) {
        run_synth(config_from_optional(config_json), out_dir);
      },
      py::arg("out_dir"), py::arg("config_json") = std::nullopt);

  m.def(
      "run_train",
      [](const std::filesystem::path& dataset_dir, const std::filesystem::path& checkpoint_out,
         const std::filesystem::path& loss_log_out, const std::optional<std::string>& config_json) {
        const auto result =
            run_train(config_from_optional(config_json), dataset_dir, checkpoint_out, loss_log_out);
        py::dict d;
        d["first_loss"] = result.first_loss;
        d["final_loss"] = result.final_loss;
        d["steps"] = result.steps;
        return d;
      },
      py::arg("dataset_dir"), py::arg("checkpoint_out"), py::arg("loss_log_out"),
      py::arg("config_json") = std::nullopt);

  m.def(
      "run_infer",
      [](const std::filesystem::path& dataset_dir, const std::filesystem::path& checkpoint,
         const std::vector<double>& times, const std::filesystem::path& detections_out,
         const std::filesystem::path& audit_out, const std::optional<std::string>& config_json) {
        const auto result = run_infer(config_from_optional(config_json), dataset_dir, checkpoint,
                                      times, detections_out, audit_out);
        py::dict d;
        d["num_detections"] = result.detections.size();
        d["inputs_read"] = result.inputs_read;
        return d;
      },
      py::arg("dataset_dir"), py::arg("checkpoint"), py::arg("times"), py::arg("detections_out"),
      py::arg("audit_out"), py::arg("config_json") = std::nullopt);

  m.def(
      "run_eval",
      [](const std::filesystem::path& detections, const std::filesystem::path& ground_truth,
         const std::filesystem::path& report_json, const std::filesystem::path& report_text,
         const std::optional<std::string>& config_json) {
        const EvalReport report = run_eval(config_from_optional(config_json), detections,
                                           ground_truth, report_json, report_text);
        py::dict d;
        d["map"] = report.map ? py::cast(*report.map) : py::none();
        d["maph"] = report.maph ? py::cast(*report.maph) : py::none();
        py::dict per_class;
        for (const auto& [cls, metrics] : report.per_class) {
          py::dict cm;
          cm["ap"] = metrics.ap ? py::cast(*metrics.ap) : py::none();
          cm["aph"] = metrics.aph ? py::cast(*metrics.aph) : py::none();
          cm["num_gt"] = metrics.num_gt;
          per_class[py::str(to_string(cls))] = cm;
        }
        d["per_class"] = per_class;
        return d;
      },
      py::arg("detections"), py::arg("ground_truth"), py::arg("report_json"),
      py::arg("report_text"), py::arg("config_json") = std::nullopt);
}
