#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "dceformer/dataset_io.hpp"
#include "dceformer/error.hpp"
#include "dceformer/losses.hpp"
#include "dceformer/metrics.hpp"
#include "dceformer/phantom.hpp"
#include "dceformer/training.hpp"

namespace py = pybind11;
using namespace dceformer;

namespace {

using FloatArray = py::array_t<float, py::array::c_style | py::array::forcecast>;
using DoubleArray = py::array_t<double, py::array::c_style | py::array::forcecast>;

torch::Tensor to_tensor(const FloatArray& a) {
  std::vector<int64_t> shape(a.shape(), a.shape() + a.ndim());
  return torch::from_blob(const_cast<float*>(a.data()), shape, torch::kFloat32).clone();
}

torch::Tensor to_tensor(const DoubleArray& a) {
  std::vector<int64_t> shape(a.shape(), a.shape() + a.ndim());
  return torch::from_blob(const_cast<double*>(a.data()), shape, torch::kFloat64).clone();
}

py::array_t<float> to_array(const torch::Tensor& t) {
  auto c = t.detach().to(torch::kFloat32).contiguous();
  py::array_t<float> out(std::vector<py::ssize_t>(c.sizes().begin(), c.sizes().end()));
  std::memcpy(out.mutable_data(), c.data_ptr<float>(), c.nbytes());
  return out;
}

py::dict study_dict(const data::Study& s) {
  const auto shape = s.shape();
  py::dict volumes;
  for (const auto& [m, v] : s.volumes) {
    py::array_t<float> a({shape.depth, shape.height, shape.width});
    std::copy(v.voxels.values().begin(), v.voxels.values().end(), a.mutable_data());
    volumes[py::str(std::string(data::modality_name(m)))] = a;
  }
  py::dict out;
  out["id"] = s.id;
  out["volumes"] = volumes;
  if (s.lesion_mask) {
    py::array_t<uint8_t> mask({shape.depth, shape.height, shape.width});
    std::copy(s.lesion_mask->values().begin(), s.lesion_mask->values().end(), mask.mutable_data());
    out["lesion_mask"] = mask;
  } else {
    out["lesion_mask"] = py::none();
  }
  return out;
}

std::vector<data::TrainingSample> slices_of(const std::vector<data::Study>& studies) {
  std::vector<data::TrainingSample> out;
  for (const auto& s : studies) {
    auto part = data::extract_slices(s);
    out.insert(out.end(), part.begin(), part.end());
  }
  return out;
}

losses::SoftHistogramConfig histogram(int64_t bins, double bandwidth) {
  losses::SoftHistogramConfig c;
  c.bins = bins;
  c.bandwidth = bandwidth;
  return c;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "DCE-MRI synthesis core (C++ / libtorch)";
  py::register_exception<Error>(m, "Error", PyExc_RuntimeError);

  // data
  m.def(
      "generate_phantom",
      [](uint64_t seed, bool paper_scale) {
        auto spec = paper_scale ? data::PhantomSpec::paper_scale() : data::PhantomSpec{};
        auto p = data::generate_phantom(spec, seed);
        auto d = study_dict(p.study);
        py::list lesions;
        for (const auto& l : p.lesions) lesions.append(py::make_tuple(l.center, l.radius));
        d["lesions"] = lesions;
        return d;
      },
      py::arg("seed"), py::arg("paper_scale") = false,
      "Phantom study as {'id', 'volumes': {tag: (D,H,W)}, 'lesion_mask', 'lesions'}.");
  m.def(
      "write_phantom_dataset",
      [](const std::filesystem::path& path, int studies, uint64_t base_seed, std::array<int64_t, 3> crop) {
        data::save_dataset(data::generate_phantom_set(data::PhantomSpec{}, studies, base_seed,
                                                      {crop[0], crop[1], crop[2]}),
                           path);
      },
      py::arg("path"), py::arg("studies") = 1, py::arg("base_seed") = 0,
      py::arg("crop") = std::array<int64_t, 3>{64, 64, 8},
      "Generates desk phantom studies, center-cropped to (H, W, D), into a container file.");
  m.def(
      "load_dataset",
      [](const std::filesystem::path& path) {
        py::list out;
        for (const auto& s : data::load_dataset(path)) out.append(study_dict(s));
        return out;
      },
      py::arg("path"));

  // losses
  m.def(
      "nmi",
      [](const FloatArray& a, const FloatArray& b, int64_t bins, double bandwidth) {
        return losses::mi_loss(to_tensor(a), to_tensor(b), histogram(bins, bandwidth)).item<double>();
      },
      py::arg("real"), py::arg("fake"), py::arg("bins") = 64, py::arg("bandwidth") = 0.0,
      "Soft-histogram normalised mutual information of two images.");
  m.def(
      "gaussian_kernel",
      [](int64_t size, double sigma) {
        auto k = losses::gaussian_kernel(size, sigma).contiguous();
        py::array_t<double> out({size, size});
        std::memcpy(out.mutable_data(), k.data_ptr<double>(), k.nbytes());
        return out;
      },
      py::arg("size") = 13, py::arg("sigma") = 2.0);
  m.def(
      "frequency_split",
      [](const FloatArray& x, int64_t size, double sigma) {
        auto bands = losses::frequency_split(to_tensor(x), size, sigma);
        return py::make_tuple(to_array(bands.low), to_array(bands.high));
      },
      py::arg("image"), py::arg("size") = 13, py::arg("sigma") = 2.0);
  m.def(
      "freq_pixel_loss",
      [](const FloatArray& x, const FloatArray& g, int64_t size, double sigma) {
        return losses::freq_pixel_loss(to_tensor(x), to_tensor(g), size, sigma).item<double>();
      },
      py::arg("x"), py::arg("g"), py::arg("size") = 13, py::arg("sigma") = 2.0);
  m.def(
      "freq_fft_loss",
      [](const FloatArray& x, const FloatArray& g) {
        return losses::freq_fft_loss(to_tensor(x), to_tensor(g)).item<double>();
      },
      py::arg("x"), py::arg("g"));

  // metrics
  m.def("psnr", [](const FloatArray& x, const FloatArray& g) { return metrics::psnr(to_tensor(x), to_tensor(g)); },
        py::arg("x"), py::arg("g"));
  m.def("ssim", [](const FloatArray& x, const FloatArray& g) { return metrics::ssim(to_tensor(x), to_tensor(g)); },
        py::arg("x"), py::arg("g"));
  m.def("mae", [](const FloatArray& x, const FloatArray& g) { return metrics::mae(to_tensor(x), to_tensor(g)); },
        py::arg("x"), py::arg("g"));
  m.def("fid", [](const DoubleArray& r, const DoubleArray& f) { return metrics::fid(to_tensor(r), to_tensor(f)); },
        py::arg("real_features"), py::arg("fake_features"));

  // model
  py::class_<nn::Generator>(m, "Generator")
      .def(py::init([](const std::string& config_json) {
             auto c = config_json.empty() ? training::TrainConfig{}
                                          : training::config_from_json(nlohmann::json::parse(config_json));
             torch::manual_seed(c.seed);
             return nn::Generator(c.generator);
           }),
           py::arg("config_json") = "")
      .def_static("load", [](const std::filesystem::path& p) { return training::load_generator(p); })
      .def("__call__",
           [](nn::Generator& g, const FloatArray& x) {
             torch::NoGradGuard guard;
             return to_array(g->forward(to_tensor(x)));
           })
      .def_property_readonly("parameter_count", [](const nn::Generator& g) { return g->parameter_count(); });

  // training
  m.def(
      "train",
      [](const std::string& config_json, const std::filesystem::path& data,
         const std::filesystem::path& output_dir) {
        auto config = training::config_from_json(nlohmann::json::parse(config_json));
        const auto samples = slices_of(data::load_dataset(data));
        training::FitOptions opts;
        opts.output_dir = output_dir;
        std::vector<training::StepRecord> history;
        {
          py::gil_scoped_release release;
          history = training::fit(samples, config, opts).history;
        }
        py::list out;
        for (const auto& r : history) {
          py::dict d;
          d["step"] = r.step;
          d["total"] = r.total;
          d["terms"] = r.terms;
          out.append(d);
        }
        return out;
      },
      py::arg("config_json"), py::arg("data"), py::arg("output_dir") = std::filesystem::path{},
      "Runs fit and returns the per-step history.");
  m.def(
      "evaluate",
      [](const std::filesystem::path& checkpoint, const std::filesystem::path& data) {
        auto g = training::load_generator(checkpoint);
        const auto samples = slices_of(data::load_dataset(data));
        const metrics::RandomConvExtractor extractor;
        auto report = metrics::evaluate_dataset(
            [&](const torch::Tensor& x) {
              torch::NoGradGuard guard;
              return g->forward(x);
            },
            samples, extractor);
        return report.to_json();
      },
      py::arg("checkpoint"), py::arg("data"), "Metrics report as a JSON string.");
}
