#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <cstring>
#include <fstream>
#include <iterator>
#include <memory>

#include "pve/bench.hpp"
#include "pve/datakit.hpp"
#include "pve/detector.hpp"
#include "pve/error.hpp"
#include "pve/model_zoo.hpp"
#include "pve/saliency.hpp"

namespace py = pybind11;

namespace {

std::span<const std::uint8_t> as_span(const py::bytes& b) {
  const std::string_view view = b;
  return {reinterpret_cast<const std::uint8_t*>(view.data()), view.size()};
}

py::array_t<std::uint8_t> image_array(const pve::RawImage& img) {
  py::array_t<std::uint8_t> out({img.height, img.width, std::size_t{3}});
  std::memcpy(out.mutable_data(), img.pixels.data(), img.pixels.size());
  return out;
}

py::dict prediction_dict(const pve::Prediction& p) {
  py::dict d;
  d["probability"] = p.probability;
  d["label"] = std::string(pve::to_string(p.label));
  d["threshold"] = p.threshold;
  d["inference_micros"] = p.inference_micros;
  return d;
}

struct Model {
  std::shared_ptr<const pve::ModelGraph> graph;
};

}  // namespace

PYBIND11_MODULE(_pve, m) {
  m.doc() = "AI-generated image detection engine";

  py::register_exception<pve::Error>(m, "Error", PyExc_RuntimeError);

  m.def("init_output_bias", &pve::init_output_bias, py::arg("n_ai"), py::arg("n_human"),
        "ln(n_ai / n_human)");
  m.def("sigmoid", &pve::sigmoid, py::arg("x"));

  m.def(
      "decode_image", [](const py::bytes& data) { return image_array(pve::decode_image(as_span(data))); },
      py::arg("data"), "Decode PNG or JPEG bytes to an (h, w, 3) uint8 array.");

  m.def(
      "preprocess",
      [](const py::bytes& data) {
        const pve::TensorF32 t = pve::preprocess(as_span(data));
        py::array_t<float> out({t.shape()[0], t.shape()[1], t.shape()[2]});
        std::memcpy(out.mutable_data(), t.data().data(), t.data().size() * sizeof(float));
        return out;
      },
      py::arg("data"), "Decode, resize to 256x256, and scale to [0, 1].");

  py::class_<Model>(m, "Model")
      .def_static("default", [] { return Model{std::make_shared<const pve::ModelGraph>(pve::default_model())}; })
      .def_static(
          "from_bytes",
          [](const py::bytes& data) {
            return Model{std::make_shared<const pve::ModelGraph>(pve::load_model(as_span(data)))};
          },
          py::arg("data"))
      .def_static(
          "load",
          [](const std::string& path) {
            std::ifstream in(path, std::ios::binary);
            if (!in) throw pve::Error(pve::Errc::io, "cannot open " + path);
            const std::vector<std::uint8_t> bytes{std::istreambuf_iterator<char>(in), {}};
            return Model{std::make_shared<const pve::ModelGraph>(pve::load_model(bytes))};
          },
          py::arg("path"))
      .def("to_bytes",
           [](const Model& self) {
             const auto bytes = pve::save_model(*self.graph);
             return py::bytes(reinterpret_cast<const char*>(bytes.data()), bytes.size());
           })
      .def_property_readonly("name", [](const Model& self) { return self.graph->metadata.name; })
      .def_property_readonly("version", [](const Model& self) { return self.graph->metadata.version; })
      .def_property_readonly("n_ai", [](const Model& self) { return self.graph->metadata.n_ai; })
      .def_property_readonly("n_human", [](const Model& self) { return self.graph->metadata.n_human; })
      .def_property_readonly("input_shape", [](const Model& self) { return self.graph->input_shape; })
      .def_property_readonly("num_parameters", [](const Model& self) { return self.graph->weights.size(); })
      .def_property_readonly("num_layers", [](const Model& self) { return self.graph->layers.size(); });

  m.def(
      "predict",
      [](const Model& model, const py::bytes& data, double threshold) {
        const auto bytes = as_span(data);
        pve::Prediction p;
        {
          py::gil_scoped_release release;
          p = pve::predict(*model.graph, bytes, {.threshold = threshold});
        }
        return prediction_dict(p);
      },
      py::arg("model"), py::arg("data"), py::arg("threshold") = 0.5);

  m.def(
      "explain",
      [](const Model& model, const py::bytes& data, double alpha, const std::string& colormap,
         double threshold, bool force) {
        const auto bytes = as_span(data);
        const pve::OverlayConfig overlay{.alpha = alpha, .colormap = pve::colormap_from_string(colormap)};
        const pve::DetectorConfig detector{.threshold = threshold, .saliency_on_positive_only = !force};
        pve::ExplainResult r;
        {
          py::gil_scoped_release release;
          r = pve::explain(*model.graph, bytes, overlay, detector);
        }
        py::dict info = prediction_dict(r.prediction);
        info["overlay_applied"] = r.overlay_applied;
        return py::make_tuple(image_array(r.image), info);
      },
      py::arg("model"), py::arg("data"), py::arg("alpha") = 0.45, py::arg("colormap") = "inferno",
      py::arg("threshold") = 0.5, py::arg("force") = false,
      "Returns (image, info). The image is the overlay when one was applied.");

  m.def(
      "saliency",
      [](const Model& model, const py::bytes& data) {
        const pve::SaliencyMap s = pve::vanilla_gradient(*model.graph, pve::preprocess(as_span(data)));
        py::array_t<float> out({s.height, s.width});
        std::memcpy(out.mutable_data(), s.values.data(), s.values.size() * sizeof(float));
        return out;
      },
      py::arg("model"), py::arg("data"), "Normalized gradient saliency at model resolution.");

  m.def(
      "stratified_split",
      [](const std::vector<std::string>& labels, std::uint64_t seed,
         std::optional<std::vector<std::string>> sources) {
        pve::DatasetManifest manifest;
        for (std::size_t i = 0; i < labels.size(); ++i) {
          pve::ManifestEntry e;
          e.path = std::to_string(i);
          if (labels[i] == "ai") {
            e.label = pve::Label::ai;
          } else if (labels[i] == "human") {
            e.label = pve::Label::human;
          } else {
            throw pve::Error(pve::Errc::invalid_argument, "label must be 'ai' or 'human'");
          }
          if (sources) e.source = sources->at(i);
          manifest.entries.push_back(std::move(e));
        }
        const auto split = pve::stratified_split(manifest, seed, {.per_source = sources.has_value()});
        std::vector<std::string> out;
        for (auto s : split.splits) out.emplace_back(pve::to_string(s));
        return out;
      },
      py::arg("labels"), py::arg("seed"), py::arg("sources") = py::none(),
      "Split names ('train', 'val', 'test') parallel to the labels.");

  m.def(
      "compute_metrics",
      [](const std::vector<double>& probabilities, const std::vector<std::string>& labels,
         double threshold) {
        std::vector<pve::Label> parsed;
        for (const auto& l : labels) parsed.push_back(l == "ai" ? pve::Label::ai : pve::Label::human);
        const auto r = pve::compute_metrics(probabilities, parsed, threshold);
        py::dict d;
        d["accuracy"] = r.accuracy;
        d["precision"] = r.precision;
        d["recall"] = r.recall;
        d["loss"] = r.loss;
        d["tp"] = r.tp;
        d["fp"] = r.fp;
        d["tn"] = r.tn;
        d["fn"] = r.fn;
        return d;
      },
      py::arg("probabilities"), py::arg("labels"), py::arg("threshold") = 0.5);

  m.def(
      "percentile_nearest_rank",
      [](const std::vector<double>& samples, unsigned percent) {
        return pve::percentile_nearest_rank(samples, percent);
      },
      py::arg("samples"), py::arg("percent"));

  m.def(
      "write_synthetic_corpus",
      [](const std::string& dir, std::size_t count, std::uint64_t seed, double amplitude) {
        return pve::write_synthetic_corpus(dir, {.count = count, .seed = seed, .artifact_amplitude = amplitude})
            .entries.size();
      },
      py::arg("dir"), py::arg("count") = 1000, py::arg("seed") = 1, py::arg("amplitude") = 24.0,
      "Writes PNGs and manifest.tsv; returns the number of images.");
}
