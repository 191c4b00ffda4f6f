#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "cli.hpp"
#include "elemgrasp/augment.hpp"
#include "elemgrasp/dataset.hpp"
#include "elemgrasp/errors.hpp"
#include "elemgrasp/eval.hpp"
#include "elemgrasp/geometry.hpp"

namespace py = pybind11;
using namespace elemgrasp;

namespace {

py::array_t<std::uint8_t> image_array(const cv::Mat& m) {
  const cv::Mat c = m.isContinuous() ? m : m.clone();
  std::vector<py::ssize_t> shape = {c.rows, c.cols};
  if (c.channels() > 1) shape.push_back(c.channels());
  py::array_t<std::uint8_t> out(shape);
  std::memcpy(out.mutable_data(), c.data, c.total() * c.elemSize());
  return out;
}

py::array_t<bool> mask_array(const BinaryMask& m) {
  py::array_t<bool> out({m.height(), m.width()});
  auto* dst = out.mutable_data();
  for (std::size_t i = 0; i < m.bits().size(); ++i) dst[i] = m.bits()[i] != 0;
  return out;
}

BinaryMask mask_from_array(const py::array_t<bool, py::array::c_style | py::array::forcecast>& a) {
  if (a.ndim() != 2) throw Error(ErrorCode::kDimensionMismatch, "mask must be 2-D");
  std::vector<std::uint8_t> bits(a.data(), a.data() + a.size());
  return BinaryMask(static_cast<int>(a.shape(1)), static_cast<int>(a.shape(0)), std::move(bits));
}

py::dict sample_dict(const Sample& s) {
  py::list elements;
  for (const auto& e : s.elements) {
    py::dict d;
    d["element_class"] = std::string(class_name(e.element_class));
    d["mask"] = mask_array(e.mask);
    elements.append(d);
  }
  py::dict out;
  out["id"] = s.id;
  out["object_name"] = s.object_name;
  out["seen_split"] = std::string(seen_split_name(s.seen_split));
  out["object_image"] = image_array(s.object_image);
  out["approach_image"] = image_array(s.approach_image);
  out["elements"] = elements;
  out["grasp"] = s.grasp;
  out["approach"] = py::dict(py::arg("x") = s.approach.x, py::arg("y") = s.approach.y, py::arg("z") = s.approach.z,
                             py::arg("yaw_deg") = s.approach.yaw_deg);
  return out;
}

KeyValueConfig config_from(const py::dict& d) {
  KeyValueConfig cfg;
  for (const auto& [k, v] : d) cfg.set(py::str(k), py::str(v));
  return cfg;
}

}  // namespace

PYBIND11_MODULE(_elemgrasp, m) {
  m.doc() = "Element-based grasp detection core";

  static py::exception<Error> error_type(m, "ElemGraspError");
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      py::object exc = py::reinterpret_borrow<py::object>(error_type)(e.what());
      exc.attr("code") = std::string(error_code_name(e.code()));
      PyErr_SetObject(error_type.ptr(), exc.ptr());
    }
  });

  py::class_<GraspRectangle>(m, "GraspRectangle")
      .def(py::init<double, double, double, double, double>(), py::arg("cx"), py::arg("cy"), py::arg("theta_deg"),
           py::arg("width_px"), py::arg("height_px"))
      .def_property_readonly("cx", &GraspRectangle::cx)
      .def_property_readonly("cy", &GraspRectangle::cy)
      .def_property_readonly("theta_deg", &GraspRectangle::theta_deg)
      .def_property_readonly("width_px", &GraspRectangle::width_px)
      .def_property_readonly("height_px", &GraspRectangle::height_px)
      .def_property_readonly("area", &GraspRectangle::area)
      .def("corners",
           [](const GraspRectangle& r) {
             std::vector<std::pair<double, double>> out;
             for (const auto& p : rect_corners(r)) out.emplace_back(p.x, p.y);
             return out;
           })
      .def("__eq__", [](const GraspRectangle& a, const GraspRectangle& b) { return a == b; })
      .def("__repr__", [](const GraspRectangle& r) {
        return "GraspRectangle(cx=" + std::to_string(r.cx()) + ", cy=" + std::to_string(r.cy()) +
               ", theta_deg=" + std::to_string(r.theta_deg()) + ", width_px=" + std::to_string(r.width_px()) +
               ", height_px=" + std::to_string(r.height_px()) + ")";
      });

  m.def("jaccard", &jaccard, py::arg("g"), py::arg("g_hat"));
  m.def("angle_diff", &angle_diff, py::arg("a_deg"), py::arg("b_deg"));
  m.def(
      "grasp_success",
      [](const GraspRectangle& g, const GraspRectangle& h, double jt, double at) {
        return grasp_success(g, h, {jt, at});
      },
      py::arg("g"), py::arg("g_hat"), py::arg("jaccard_threshold") = 0.25, py::arg("angle_threshold_deg") = 30.0);
  m.def(
      "dice", [](const py::array_t<bool>& a, const py::array_t<bool>& b) { return dice(mask_from_array(a), mask_from_array(b)); },
      py::arg("a"), py::arg("b"));
  m.def(
      "rasterize_rect", [](const GraspRectangle& r, int w, int h) { return mask_array(rasterize_rect(r, w, h)); },
      py::arg("rect"), py::arg("width"), py::arg("height"));

  m.def("train_template_names", &train_template_names);
  m.def("novel_template_names", &novel_template_names);
  m.def(
      "generate_dataset",
      [](const py::dict& config, const std::filesystem::path& root) {
        return generate_dataset(GenerationConfig::from_config(config_from(config)), root).split_counts;
      },
      py::arg("config"), py::arg("root"),
      "Generate a dataset; `config` maps 'dataset.<key>' to values. Returns split counts.");
  m.def(
      "augment_dataset",
      [](const std::filesystem::path& src, const std::filesystem::path& dst, const py::dict& config, int multiplier) {
        const auto s = augment_dataset(src, dst, AugmentConfig::from_config(config_from(config)), multiplier);
        return py::dict(py::arg("originals") = s.originals, py::arg("emitted") = s.emitted,
                        py::arg("skipped") = s.skipped);
      },
      py::arg("src"), py::arg("dst"), py::arg("config") = py::dict(), py::arg("multiplier") = 4);
  m.def(
      "validate_dataset",
      [](const std::filesystem::path& root) {
        std::vector<std::tuple<std::string, std::string, std::string>> out;
        for (const auto& v : validate_dataset(root)) out.emplace_back(v.sample_id, v.path, v.message);
        return out;
      },
      py::arg("root"));
  m.def("dataset_checksum", &dataset_checksum, py::arg("root"));
  m.def("validation_count", &validation_count, py::arg("n"), py::arg("val_fraction"));
  m.def(
      "read_sample", [](const std::filesystem::path& dir) { return sample_dict(read_sample(dir)); }, py::arg("dir"));
  m.def(
      "list_samples",
      [](const std::filesystem::path& root, const std::string& split) { return list_sample_dirs(root, split); },
      py::arg("root"), py::arg("split"));

  m.def(
      "evaluate_oracle",
      [](const std::filesystem::path& root, const std::vector<std::string>& splits) {
        std::vector<Sample> samples;
        for (const auto& s : splits) {
          auto part = load_split(root, s);
          samples.insert(samples.end(), part.begin(), part.end());
        }
        const auto report = evaluate_pipeline(oracle_detection_source(), oracle_grasp_source(), samples);
        return report_to_json(report).dump();
      },
      py::arg("root"), py::arg("splits") = std::vector<std::string>{"val"},
      "Ground-truth pipeline report as a JSON string.");
  m.def(
      "read_report", [](const std::filesystem::path& p) { return report_to_json(read_report(p)).dump(); },
      py::arg("path"), "Parse and re-serialize a report.json; raises on schema errors.");

  m.def(
      "run_cli",
      [](const std::vector<std::string>& args) {
        py::gil_scoped_release release;
        return cli::run_cli(args);
      },
      py::arg("args"), "Run a command-line subcommand in-process; returns its exit code.");
}
