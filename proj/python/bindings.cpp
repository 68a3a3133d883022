// NumPy-facing bindings. Images are float64 arrays of shape (H, W, C) (a 2-D
// array is treated as one channel), datasets are an (N, H, W, C) array plus
// an (N,) integer label array. Reports come back as plain dicts.

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <algorithm>
#include <optional>
#include <string>
#include <vector>

#include "checkerboard/complexity.hpp"
#include "checkerboard/core.hpp"
#include "checkerboard/dataset_io.hpp"
#include "checkerboard/defense.hpp"
#include "checkerboard/error.hpp"
#include "checkerboard/poison.hpp"
#include "checkerboard/reports.hpp"
#include "checkerboard/separability.hpp"
#include "checkerboard/trigger.hpp"

namespace py = pybind11;
namespace cb = checkerboard;

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;
using LabelArray = py::array_t<std::int64_t, py::array::c_style | py::array::forcecast>;

namespace {

py::object to_py(const nlohmann::json& j) {
  return py::module_::import("json").attr("loads")(j.dump());
}

nlohmann::json from_py(const py::object& o) {
  return nlohmann::json::parse(py::module_::import("json").attr("dumps")(o).cast<std::string>());
}

cb::ImageTensor image_in(const Array& a) {
  if (a.ndim() != 2 && a.ndim() != 3) {
    throw cb::InvalidInput("image must be 2-D or 3-D, got " + std::to_string(a.ndim()) + "-D");
  }
  const auto h = static_cast<std::size_t>(a.shape(0));
  const auto w = static_cast<std::size_t>(a.shape(1));
  const auto c = a.ndim() == 3 ? static_cast<std::size_t>(a.shape(2)) : 1;
  return cb::ImageTensor(h, w, c, std::vector<double>(a.data(), a.data() + a.size()));
}

Array image_out(const cb::ImageTensor& x) {
  Array a({x.height, x.width, x.channels});
  std::copy(x.data.begin(), x.data.end(), a.mutable_data());
  return a;
}

Array plane_out(std::size_t h, std::size_t w, const std::vector<double>& v) {
  Array a({h, w});
  std::copy(v.begin(), v.end(), a.mutable_data());
  return a;
}

cb::LuminanceTemplate template_in(const Array& a) {
  if (a.ndim() != 2) throw cb::InvalidInput("template must be 2-D");
  return {static_cast<std::size_t>(a.shape(0)), static_cast<std::size_t>(a.shape(1)),
          std::vector<double>(a.data(), a.data() + a.size())};
}

// A 2-D template is replicated over `channels`; a 3-D array is taken as is.
cb::TriggerPattern pattern_in(const Array& a, std::size_t channels) {
  if (a.ndim() == 2) return cb::replicate(template_in(a), channels);
  const cb::ImageTensor x = image_in(a);
  return {x.height, x.width, x.channels, x.data};
}

cb::LabeledDataset dataset_in(const Array& images, const LabelArray& labels,
                              std::optional<std::size_t> class_count) {
  if (images.ndim() != 4 && images.ndim() != 3) {
    throw cb::InvalidInput("images must be (N, H, W[, C])");
  }
  if (labels.ndim() != 1 || labels.shape(0) != images.shape(0)) {
    throw cb::InvalidInput("labels must be (N,) matching images");
  }
  cb::LabeledDataset d;
  const auto n = static_cast<std::size_t>(images.shape(0));
  const auto h = static_cast<std::size_t>(images.shape(1));
  const auto w = static_cast<std::size_t>(images.shape(2));
  const auto c = images.ndim() == 4 ? static_cast<std::size_t>(images.shape(3)) : 1;
  const std::size_t per = h * w * c;
  std::size_t top = 0;
  d.images.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double* p = images.data() + i * per;
    d.images.emplace_back(h, w, c, std::vector<double>(p, p + per));
    const std::int64_t l = labels.data()[i];
    if (l < 0) throw cb::InvalidInput("negative label at index " + std::to_string(i));
    d.labels.push_back(static_cast<std::size_t>(l));
    top = std::max(top, static_cast<std::size_t>(l) + 1);
  }
  d.class_count = class_count.value_or(top);
  d.validate();
  return d;
}

// Every image in one class; for operations that ignore labels.
cb::LabeledDataset images_only(const Array& images) {
  if (images.ndim() < 1) throw cb::InvalidInput("images must be (N, H, W[, C])");
  LabelArray labels(images.shape(0));
  std::fill(labels.mutable_data(), labels.mutable_data() + labels.size(), 0);
  return dataset_in(images, labels, std::size_t{1});
}

py::tuple dataset_out(const cb::LabeledDataset& d) {
  const std::size_t n = d.size();
  const std::size_t h = n ? d.images[0].height : 0;
  const std::size_t w = n ? d.images[0].width : 0;
  const std::size_t c = n ? d.images[0].channels : 0;
  Array images({n, h, w, c});
  LabelArray labels(static_cast<py::ssize_t>(n));
  double* out = images.mutable_data();
  for (std::size_t i = 0; i < n; ++i) {
    out = std::copy(d.images[i].data.begin(), d.images[i].data.end(), out);
    labels.mutable_data()[i] = static_cast<std::int64_t>(d.labels[i]);
  }
  return py::make_tuple(images, labels, d.class_count);
}

cb::TriggerSpec spec_in(const std::string& kind, std::size_t block_size, int phase,
                        std::optional<std::uint64_t> seed) {
  cb::TriggerSpec s{cb::parse_trigger_kind(kind), block_size, phase, seed};
  s.validate();
  return s;
}

std::vector<std::vector<double>> rows_in(const Array& a) {
  if (a.ndim() != 2) throw cb::InvalidInput("samples must be (N, d)");
  const auto n = static_cast<std::size_t>(a.shape(0));
  const auto d = static_cast<std::size_t>(a.shape(1));
  std::vector<std::vector<double>> rows(n);
  for (std::size_t i = 0; i < n; ++i) rows[i].assign(a.data() + i * d, a.data() + (i + 1) * d);
  return rows;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Checkerboard clean-label trigger toolkit";

  auto error = py::register_exception<cb::Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<cb::InvalidInput>(m, "InvalidInput", error.ptr());
  py::register_exception<cb::FormatError>(m, "FormatError", error.ptr());
  py::register_exception<cb::NumericalError>(m, "NumericalError", error.ptr());
  py::register_exception<cb::ResourceLimit>(m, "ResourceLimit", error.ptr());

  // core
  m.def("clip_unit", [](const Array& x) { return image_out(cb::clip_unit(image_in(x))); });
  m.def("to_gray", [](const Array& x) {
    const auto g = cb::to_gray(image_in(x));
    return plane_out(g.height, g.width, g.data);
  });

  // trigger synthesis
  m.def(
      "gen_template",
      [](const std::string& kind, std::size_t height, std::size_t width, std::size_t block_size,
         int phase, std::optional<std::uint64_t> seed) {
        const auto g = cb::gen_template(spec_in(kind, block_size, phase, seed), height, width);
        return plane_out(g.height, g.width, g.values);
      },
      py::arg("kind"), py::arg("height"), py::arg("width"), py::arg("block_size") = 1,
      py::arg("phase") = 1, py::arg("seed") = py::none());
  m.def(
      "checkerboard_template",
      [](std::size_t h, std::size_t w, int phase, std::size_t block) {
        const auto g = cb::checkerboard_template(h, w, phase, block);
        return plane_out(g.height, g.width, g.values);
      },
      py::arg("height"), py::arg("width"), py::arg("phase") = 1, py::arg("block_size") = 1);
  m.def("discrete_objective", [](const Array& g) { return cb::discrete_objective(template_in(g)); });
  m.def("brute_force_optimum", [](std::size_t h, std::size_t w) {
    const auto r = cb::brute_force_optimum(h, w);
    py::dict out = to_py(cb::report_to_json(r, h, w));
    py::list maximizers;
    for (const auto& g : r.maximizers) maximizers.append(plane_out(g.height, g.width, g.values));
    out["maximizers"] = maximizers;
    return out;
  });

  // separability
  m.def(
      "analyze_separability",
      [](const Array& clean, const Array& poisoned, double ridge) {
        const auto c = rows_in(clean);
        const auto p = rows_in(poisoned);
        const auto r = cb::analyze_separability(c, p, ridge, cb::threads_from_env());
        py::dict out = to_py(cb::report_to_json(r));
        Array w(static_cast<py::ssize_t>(r.direction.size()));
        std::copy(r.direction.data(), r.direction.data() + r.direction.size(), w.mutable_data());
        out["direction"] = w;
        return out;
      },
      py::arg("clean"), py::arg("poisoned"), py::arg("ridge") = 0.0);
  m.def("luminance_vectors", [](const Array& images) {
    const auto d = images_only(images);
    const auto rows = cb::luminance_vectors(d.images);
    const std::size_t dim = rows.empty() ? 0 : rows.front().size();
    Array out({rows.size(), dim});
    double* p = out.mutable_data();
    for (const auto& r : rows) p = std::copy(r.begin(), r.end(), p);
    return out;
  });

  // complexity
  m.def("cge_score", [](const Array& x) { return cb::cge_score(image_in(x)); });
  m.def("sobel_gradients", [](const Array& gray) {
    const auto t = template_in(gray);
    cb::GrayImage g(t.height, t.width);
    g.data = t.values;
    const auto r = cb::sobel_gradients(g);
    return py::make_tuple(plane_out(g.height, g.width, r.gx.data),
                          plane_out(g.height, g.width, r.gy.data));
  });
  m.def(
      "cge_scores",
      [](const Array& images) {
        const auto d = images_only(images);
        const auto s = cb::cge_scores(d, cb::threads_from_env());
        return py::array_t<double>(static_cast<py::ssize_t>(s.size()), s.data());
      },
      py::arg("images"));
  m.def(
      "rank_by_cge",
      [](const Array& images, const LabelArray& labels, std::size_t c,
         std::optional<std::size_t> class_count) {
        const auto d = dataset_in(images, labels, class_count);
        return to_py(cb::report_to_json(cb::rank_by_cge(d, c, cb::threads_from_env())));
      },
      py::arg("images"), py::arg("labels"), py::arg("class_index"),
      py::arg("class_count") = py::none());
  m.def(
      "select_css",
      [](const Array& images, const LabelArray& labels, std::size_t c, std::size_t p_num,
         std::optional<std::size_t> class_count) {
        return cb::select_css(dataset_in(images, labels, class_count), c, p_num,
                              cb::threads_from_env());
      },
      py::arg("images"), py::arg("labels"), py::arg("class_index"), py::arg("p_num"),
      py::arg("class_count") = py::none());

  // poisoning
  m.def(
      "inject",
      [](const Array& x, const Array& pattern, double alpha) {
        const auto img = image_in(x);
        return image_out(cb::inject(img, pattern_in(pattern, img.channels), alpha));
      },
      py::arg("x"), py::arg("pattern"), py::arg("alpha"));
  m.def(
      "amplify",
      [](const Array& x, const Array& pattern, double alpha, double gamma) {
        const auto img = image_in(x);
        return image_out(cb::amplify(img, pattern_in(pattern, img.channels), alpha, gamma));
      },
      py::arg("x"), py::arg("pattern"), py::arg("alpha"), py::arg("gamma"));
  m.def(
      "select_random",
      [](const LabelArray& labels, std::size_t c, std::size_t p_num, std::uint64_t seed) {
        cb::LabeledDataset d;
        for (py::ssize_t i = 0; i < labels.size(); ++i) {
          d.labels.push_back(static_cast<std::size_t>(labels.data()[i]));
          d.images.emplace_back(1, 1, 1);
        }
        d.class_count = d.labels.empty() ? 0 : *std::max_element(d.labels.begin(), d.labels.end()) + 1;
        return cb::select_random(d, c, p_num, seed);
      },
      py::arg("labels"), py::arg("class_index"), py::arg("p_num"), py::arg("seed"));
  m.def(
      "poison_dataset",
      [](const Array& images, const LabelArray& labels, std::size_t target, std::size_t p_num,
         double alpha, const std::string& trigger, std::size_t block_size, int phase,
         std::optional<std::uint64_t> trigger_seed, const std::string& selection,
         std::uint64_t seed, double gamma, std::optional<std::size_t> class_count) {
        cb::PoisonRequest req;
        req.target_class = target;
        req.p_num = p_num;
        req.alpha = alpha;
        req.gamma = gamma;
        req.trigger = spec_in(trigger, block_size, phase, trigger_seed);
        req.selection = cb::parse_selection(selection);
        req.seed = seed;
        const auto r = cb::poison_dataset(dataset_in(images, labels, class_count), req,
                                          cb::threads_from_env());
        py::tuple data = dataset_out(r.poisoned);
        return py::make_tuple(data[0], to_py(cb::manifest_to_json(r.manifest)));
      },
      py::arg("images"), py::arg("labels"), py::arg("target"), py::arg("p_num"),
      py::arg("alpha") = 10.0 / 255.0, py::arg("trigger") = "checkerboard",
      py::arg("block_size") = 1, py::arg("phase") = 1, py::arg("trigger_seed") = py::none(),
      py::arg("selection") = "random", py::arg("seed") = 0, py::arg("gamma") = 1.0,
      py::arg("class_count") = py::none());

  // defenses
  m.def("checkerboard_coefficient", [](const Array& x, const Array& q) {
    const auto img = image_in(x);
    return cb::checkerboard_coefficient(img, pattern_in(q, img.channels));
  });
  m.def("soft_threshold", &cb::soft_threshold, py::arg("c"), py::arg("tau"));
  m.def(
      "notch_sanitize",
      [](const Array& x, double tau, double lam) {
        const auto img = image_in(x);
        const auto cfg = cb::NotchConfig::for_shape(img.height, img.width, img.channels, tau, lam);
        return image_out(cb::notch_sanitize(img, cfg));
      },
      py::arg("x"), py::arg("tau") = 0.0, py::arg("lam") = 1.0);
  m.def(
      "mean_filter", [](const Array& x, std::size_t k) { return image_out(cb::mean_filter(image_in(x), k)); },
      py::arg("x"), py::arg("k") = 3);
  m.def(
      "gaussian_blur",
      [](const Array& x, double sigma, std::size_t k) {
        return image_out(cb::gaussian_blur(image_in(x), sigma, k));
      },
      py::arg("x"), py::arg("sigma") = 1.0, py::arg("k") = 3);
  m.def(
      "gaussian_kernel",
      [](double sigma, std::size_t k) { return plane_out(k, k, cb::gaussian_kernel(sigma, k)); },
      py::arg("sigma"), py::arg("k"));
  m.def(
      "dct_suppress", [](const Array& x, std::size_t k) { return image_out(cb::dct_suppress(image_in(x), k)); },
      py::arg("x"), py::arg("k"));
  m.def("dct2", [](const Array& plane) {
    const auto t = template_in(plane);
    const Eigen::MatrixXd p =
        Eigen::Map<const Eigen::Matrix<double, -1, -1, Eigen::RowMajor>>(t.values.data(), t.height, t.width);
    const Eigen::Matrix<double, -1, -1, Eigen::RowMajor> c = cb::dct2(p);
    return plane_out(t.height, t.width, std::vector<double>(c.data(), c.data() + c.size()));
  });
  m.def("idct2", [](const Array& coeffs) {
    const auto t = template_in(coeffs);
    const Eigen::MatrixXd p =
        Eigen::Map<const Eigen::Matrix<double, -1, -1, Eigen::RowMajor>>(t.values.data(), t.height, t.width);
    const Eigen::Matrix<double, -1, -1, Eigen::RowMajor> c = cb::idct2(p);
    return plane_out(t.height, t.width, std::vector<double>(c.data(), c.data() + c.size()));
  });
  m.def(
      "cge_detect",
      [](const Array& images, const LabelArray& labels, double t, double eps,
         std::optional<std::size_t> class_count) {
        const auto d = dataset_in(images, labels, class_count);
        const auto r = cb::cge_detect(d, cb::DetectorConfig{t, eps}, cb::threads_from_env());
        py::dict out = to_py(cb::report_to_json(r));
        out["z_scores"] = py::array_t<double>(static_cast<py::ssize_t>(r.z_scores.size()), r.z_scores.data());
        return out;
      },
      py::arg("images"), py::arg("labels"), py::arg("t") = 2.5, py::arg("eps") = 1e-9,
      py::arg("class_count") = py::none());
  m.def(
      "detect_from_scores",
      [](const std::vector<double>& scores, const std::vector<std::size_t>& labels,
         std::size_t class_count, double t, double eps) {
        const auto r = cb::detect_from_scores(scores, labels, class_count, cb::DetectorConfig{t, eps});
        py::dict out = to_py(cb::report_to_json(r));
        out["z_scores"] = py::array_t<double>(static_cast<py::ssize_t>(r.z_scores.size()), r.z_scores.data());
        return out;
      },
      py::arg("scores"), py::arg("labels"), py::arg("class_count"), py::arg("t") = 2.5,
      py::arg("eps") = 1e-9);

  // dataset io
  m.def("load_tensor", [](const std::string& path) {
    const auto t = cb::load_tensor(path);
    std::vector<py::ssize_t> shape(t.dims.begin(), t.dims.end());
    py::array_t<float> a(shape);
    std::copy(t.data.begin(), t.data.end(), a.mutable_data());
    return a;
  });
  m.def("save_tensor", [](const std::string& path,
                          const py::array_t<float, py::array::c_style | py::array::forcecast>& a) {
    cb::Tensor t;
    for (py::ssize_t i = 0; i < a.ndim(); ++i) t.dims.push_back(static_cast<std::uint32_t>(a.shape(i)));
    t.data.assign(a.data(), a.data() + a.size());
    cb::save_tensor(t, path);
  });
  m.def("load_dataset", [](const std::vector<std::string>& paths) {
    const std::vector<cb::fs::path> p(paths.begin(), paths.end());
    return dataset_out(cb::load_any_dataset(p));
  }, py::arg("paths"));
  m.def(
      "save_bundle",
      [](const std::string& dir, const Array& images, const LabelArray& labels,
         std::optional<std::size_t> class_count, const std::string& source,
         std::optional<std::string> manifest) {
        cb::BundleMeta meta;
        meta.source = source;
        meta.created_by = "checkerboard python";
        meta.manifest = manifest;
        cb::save_bundle(dataset_in(images, labels, class_count), meta, dir);
      },
      py::arg("dir"), py::arg("images"), py::arg("labels"), py::arg("class_count") = py::none(),
      py::arg("source") = "python", py::arg("manifest") = py::none());
  m.def("load_bundle", [](const std::string& dir) {
    const auto b = cb::load_bundle(dir);
    py::tuple data = dataset_out(b.dataset);
    py::dict meta;
    meta["source"] = b.meta.source;
    meta["created_by"] = b.meta.created_by;
    meta["manifest"] = b.meta.manifest ? py::cast(*b.meta.manifest) : py::none();
    return py::make_tuple(data[0], data[1], data[2], meta);
  });
  m.def("read_manifest",
        [](const std::string& path) { return to_py(cb::manifest_to_json(cb::read_manifest(path))); });
  m.def("write_manifest", [](const py::object& manifest, const std::string& path) {
    cb::write_manifest(cb::manifest_from_json(from_py(manifest)), path);
  });
  m.def(
      "dataset_fingerprint",
      [](const Array& images, const LabelArray& labels, std::optional<std::size_t> class_count) {
        return cb::dataset_fingerprint(dataset_in(images, labels, class_count));
      },
      py::arg("images"), py::arg("labels"), py::arg("class_count") = py::none());
}
