// pve: command-line front end for detection, overlays, datasets, training,
// evaluation, serving, and latency benchmarks.
//
// Exit codes: detect returns 0 for human, 2 for ai; every command returns 1
// on error.

#include <CLI11.hpp>
#include <csignal>
#include <fstream>
#include <iostream>
#include <iterator>
#include <json.hpp>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <string>

#include "pve/bench.hpp"
#include "pve/datakit.hpp"
#include "pve/detector.hpp"
#include "pve/error.hpp"
#include "pve/model_zoo.hpp"
#include "pve/saliency.hpp"
#include "pve/service.hpp"

namespace {

using json = nlohmann::json;
namespace fs = std::filesystem;

std::vector<std::uint8_t> read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw pve::Error(pve::Errc::io, "cannot open " + path);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file(const std::string& path, std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw pve::Error(pve::Errc::io, "cannot write " + path);
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
  if (!out) throw pve::Error(pve::Errc::io, "cannot write " + path);
}

std::string read_text(const std::string& path) {
  const auto bytes = read_file(path);
  return {bytes.begin(), bytes.end()};
}

// Two-column TSV, blank and '#' lines skipped.
std::vector<std::pair<std::string, std::string>> read_pairs(const std::string& path) {
  std::vector<std::pair<std::string, std::string>> out;
  std::stringstream ss(read_text(path));
  for (std::string line; std::getline(ss, line);) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos) throw pve::Error(pve::Errc::invalid_argument, "expected two columns in " + path);
    out.emplace_back(line.substr(0, tab), line.substr(tab + 1));
  }
  return out;
}

pve::ModelGraph load_model_or_default(const std::string& path) {
  if (path.empty()) return pve::default_model();
  return pve::load_model(read_file(path));
}

fs::path manifest_dir(const std::string& manifest_path) {
  return fs::path(manifest_path).parent_path();
}

json metrics_json(const pve::Metrics& m) {
  return {{"accuracy", m.accuracy}, {"precision", m.precision}, {"recall", m.recall},
          {"loss", m.loss},         {"tp", m.tp},               {"fp", m.fp},
          {"tn", m.tn},             {"fn", m.fn}};
}

pve::DetectorConfig detector_config(double threshold, bool positive_only = true) {
  pve::DetectorConfig c{.threshold = threshold, .saliency_on_positive_only = positive_only};
  c.validate();
  return c;
}

std::unique_ptr<pve::DetectionService> g_service;

extern "C" void handle_signal(int) {
  if (g_service) g_service->stop();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"AI-generated image detection with gradient saliency overlays"};
  app.require_subcommand(1);
  int exit_code = 0;

  // detect
  std::string image_path, model_path, out_path;
  double threshold = 0.5;
  bool json_out = false;
  auto* detect = app.add_subcommand("detect", "Classify one image");
  detect->add_option("image", image_path, "PNG or JPEG file")->required();
  detect->add_option("--model", model_path, "Model container (default: built-in model)");
  detect->add_option("--threshold", threshold, "Decision threshold in (0, 1)");
  detect->add_flag("--json", json_out, "Emit JSON");
  detect->callback([&] {
    const auto model = load_model_or_default(model_path);
    const auto r = pve::predict_detailed(model, read_file(image_path), detector_config(threshold));
    const auto& p = r.prediction;
    if (json_out) {
      std::cout << json{{"image", image_path},
                        {"probability", p.probability},
                        {"label", std::string(pve::to_string(p.label))},
                        {"threshold", p.threshold},
                        {"timings",
                         {{"decode_micros", r.timings.decode_micros},
                          {"preprocess_micros", r.timings.preprocess_micros},
                          {"forward_micros", r.timings.forward_micros},
                          {"inference_micros", p.inference_micros}}}}
                       .dump(2)
                << "\n";
    } else {
      std::printf("probability %.5f\nlabel %s\nthreshold %.5f\ninference %.3f ms (decode %.3f ms)\n",
                  p.probability, std::string(pve::to_string(p.label)).c_str(), p.threshold,
                  p.inference_micros / 1e3, r.timings.decode_micros / 1e3);
    }
    exit_code = p.label == pve::Label::ai ? 2 : 0;
  });

  // overlay
  double alpha = 0.45;
  std::string colormap = "inferno";
  bool force = false;
  auto* overlay = app.add_subcommand("overlay", "Write a saliency overlay PNG");
  overlay->add_option("image", image_path, "PNG or JPEG file")->required();
  overlay->add_option("-o,--out", out_path, "Output PNG")->required();
  overlay->add_option("--model", model_path, "Model container (default: built-in model)");
  overlay->add_option("--alpha", alpha, "Heatmap opacity in [0, 1]");
  overlay->add_option("--colormap", colormap, "inferno, jet, or grayscale");
  overlay->add_option("--threshold", threshold, "Decision threshold in (0, 1)");
  overlay->add_flag("--force", force, "Overlay even when the image is classified human");
  overlay->add_flag("--json", json_out, "Emit JSON");
  overlay->callback([&] {
    const auto model = load_model_or_default(model_path);
    const pve::OverlayConfig cfg{.alpha = alpha, .colormap = pve::colormap_from_string(colormap)};
    const auto r = pve::explain(model, read_file(image_path), cfg, detector_config(threshold, !force));
    write_file(out_path, pve::encode_png(r.image));
    const auto& p = r.prediction;
    if (json_out) {
      std::cout << json{{"image", image_path},
                        {"output", out_path},
                        {"probability", p.probability},
                        {"label", std::string(pve::to_string(p.label))},
                        {"overlay_applied", r.overlay_applied},
                        {"width", r.image.width},
                        {"height", r.image.height}}
                       .dump(2)
                << "\n";
    } else {
      std::printf("%s: label %s (p=%.5f), %s written to %s\n", image_path.c_str(),
                  std::string(pve::to_string(p.label)).c_str(), p.probability,
                  r.overlay_applied ? "overlay" : "unchanged image", out_path.c_str());
    }
  });

  // bench
  std::size_t iters = 100, warmup = 10;
  std::string stage = "all", report_path;
  bool synthetic = false;
  auto* bench = app.add_subcommand("bench", "Per-stage latency benchmark");
  bench->add_option("--iters", iters, "Timed iterations")->check(CLI::PositiveNumber);
  bench->add_option("--warmup", warmup, "Untimed warmup iterations");
  auto* bench_image = bench->add_option("--image", image_path, "Input image");
  bench->add_flag("--synthetic", synthetic, "Fixed-seed 256x256 noise input (default)")
      ->excludes(bench_image);
  bench->add_option("--stage", stage, "all, forward, or saliency");
  bench->add_option("--model", model_path, "Model container (default: built-in model)");
  bench->add_option("--report", report_path, "Also write the JSON report to this file");
  bench->add_flag("--json", json_out, "Emit JSON instead of a table");
  bench->callback([&] {
    const auto model = load_model_or_default(model_path);
    pve::RawImage input = image_path.empty() ? pve::synthetic_bench_image()
                                             : pve::decode_image(read_file(image_path));
    const std::string description =
        image_path.empty() ? "synthetic noise 256x256 (seed 42)"
                           : image_path + " (" + std::to_string(input.width) + "x" +
                                 std::to_string(input.height) + ")";
    pve::EngineBenchTarget target(model, std::move(input));
    auto report = pve::run_benchmark(
        target, {.iterations = iters, .warmup = warmup, .stage = pve::bench_stage_from_string(stage)});
    report.model_name = model.metadata.name;
    report.input_description = description;
    const std::string as_json = pve::report_to_json(report);
    if (!report_path.empty()) write_text(report_path, as_json + "\n");
    std::cout << (json_out ? as_json + "\n" : pve::report_to_table(report));
  });

  // split
  std::string manifest_path, split_path;
  std::uint64_t seed = 0;
  bool per_source = false;
  auto* split = app.add_subcommand("split", "Stratified 60/20/20 split of a manifest");
  split->add_option("--manifest", manifest_path, "Manifest TSV")->required();
  split->add_option("--seed", seed, "Shuffle seed");
  split->add_option("-o,--out", split_path, "Split TSV to write")->required();
  split->add_flag("--per-source", per_source, "Stratify by label and source");
  split->add_flag("--json", json_out, "Emit JSON summary");
  split->callback([&] {
    const auto manifest = pve::read_manifest(manifest_path);
    const auto assignment = pve::stratified_split(manifest, seed, {.per_source = per_source});
    write_text(split_path, pve::format_split(manifest, assignment));
    json counts;
    for (auto s : {pve::Split::train, pve::Split::val, pve::Split::test}) {
      std::size_t ai = 0, human = 0;
      for (auto i : assignment.indices_of(s)) {
        (manifest.entries[i].label == pve::Label::ai ? ai : human)++;
      }
      counts[std::string(pve::to_string(s))] = {{"ai", ai}, {"human", human}};
    }
    if (json_out) {
      std::cout << json{{"seed", seed}, {"output", split_path}, {"counts", counts}}.dump(2) << "\n";
    } else {
      std::cout << "wrote " << split_path << "\n" << counts.dump(2) << "\n";
    }
  });

  // train
  pve::TrainConfig train_cfg;
  bool no_augment = false;
  auto* train = app.add_subcommand("train", "Train the compact detector with SGD");
  train->add_option("--manifest", manifest_path, "Manifest TSV")->required();
  train->add_option("--split", split_path, "Split TSV")->required();
  train->add_option("--epochs", train_cfg.epochs, "Epochs");
  train->add_option("--lr", train_cfg.learning_rate, "Learning rate");
  train->add_option("--batch", train_cfg.batch_size, "Minibatch size")->check(CLI::PositiveNumber);
  train->add_option("--seed", train_cfg.seed, "Initialization and shuffle seed");
  train->add_option("--augment-seed", train_cfg.augment.seed, "Augmentation seed");
  train->add_option("--max-rotation", train_cfg.augment.max_rotation_degrees, "Rotation bound in degrees");
  train->add_flag("--no-augment", no_augment, "Disable training-set augmentation");
  train->add_option("--stop-at", train_cfg.stop_at_val_accuracy,
                    "Stop once validation accuracy reaches this value");
  train->add_option("-o,--out", out_path, "Model container to write")->required();
  train->add_flag("--json", json_out, "Emit JSON per epoch");
  train->callback([&] {
    const auto manifest = pve::read_manifest(manifest_path);
    const auto assignment = pve::parse_split(manifest, read_text(split_path));
    train_cfg.augment_train = !no_augment;
    auto arch = pve::compact_detector({.name = "compact-detector", .version = "trained"});
    const auto result = pve::train_toy(
        arch, manifest, assignment, train_cfg, pve::file_loader(manifest_dir(manifest_path)),
        [&](const pve::EpochStats& s) {
          if (json_out) {
            std::cout << json{{"epoch", s.epoch}, {"train_loss", s.train_loss},
                              {"val", metrics_json(s.val)}}
                             .dump()
                      << "\n";
          } else {
            std::printf("epoch %zu  train_loss %.5f  val_acc %.4f  val_loss %.5f\n", s.epoch,
                        s.train_loss, s.val.accuracy, s.val.loss);
          }
          std::fflush(stdout);
        });
    write_file(out_path, pve::save_model(result.model));
    if (!json_out) std::cout << "wrote " << out_path << "\n";
  });

  // eval
  std::string predictions_path, split_name = "val";
  auto* eval = app.add_subcommand("eval", "Accuracy, precision, recall, and loss on one split");
  eval->add_option("--manifest", manifest_path, "Manifest TSV")->required();
  eval->add_option("--split", split_path, "Split TSV")->required();
  eval->add_option("--split-name", split_name, "train, val, or test");
  auto* eval_model = eval->add_option("--model", model_path, "Model container");
  eval->add_option("--predictions", predictions_path, "path<TAB>probability TSV instead of a model")
      ->excludes(eval_model);
  eval->add_option("--threshold", threshold, "Decision threshold in (0, 1)");
  eval->add_flag("--json", json_out, "Emit JSON");
  eval->callback([&] {
    const auto manifest = pve::read_manifest(manifest_path);
    const auto assignment = pve::parse_split(manifest, read_text(split_path));
    const auto which = pve::split_from_string(split_name);
    detector_config(threshold);
    pve::Metrics m;
    if (!predictions_path.empty()) {
      std::map<std::string, double, std::less<>> probs;
      for (const auto& [path, value] : read_pairs(predictions_path)) {
        probs[path] = std::stod(value);
      }
      std::vector<double> p;
      std::vector<pve::Label> labels;
      for (auto i : assignment.indices_of(which)) {
        const auto it = probs.find(manifest.entries[i].path);
        if (it == probs.end()) {
          throw pve::Error(pve::Errc::invalid_argument,
                           "no prediction for '" + manifest.entries[i].path + "'");
        }
        p.push_back(it->second);
        labels.push_back(manifest.entries[i].label);
      }
      m = pve::compute_metrics(p, labels, threshold);
    } else {
      const auto model = load_model_or_default(model_path);
      m = pve::evaluate(model, manifest, assignment, which, threshold,
                        pve::file_loader(manifest_dir(manifest_path)));
    }
    if (json_out) {
      std::cout << json{{"split", split_name}, {"threshold", threshold}, {"metrics", metrics_json(m)}}
                       .dump(2)
                << "\n";
    } else {
      std::printf("split %s  n=%zu\naccuracy  %.5f\nprecision %.5f\nrecall    %.5f\nloss      %.5f\n",
                  split_name.c_str(), m.tp + m.fp + m.tn + m.fn, m.accuracy, m.precision, m.recall,
                  m.loss);
    }
  });

  // serve
  pve::ServiceConfig service_cfg;
  std::string listen, cors;
  auto* serve = app.add_subcommand("serve", "Run the HTTP detection service");
  serve->add_option("--listen", listen, "host:port (default 127.0.0.1:8597)");
  serve->add_option("--model", service_cfg.model_path, "Model container (default: built-in model)");
  serve->add_option("--max-body", service_cfg.max_image_bytes, "Per-image byte limit");
  serve->add_option("--threshold", service_cfg.default_threshold, "Default threshold");
  serve->add_option("--alpha", service_cfg.default_alpha, "Default overlay alpha");
  serve->add_option("--colormap", colormap, "Default colormap");
  serve->add_option("--cors", cors, "Comma-separated allowed origins, or *");
  serve->add_option("--threads", service_cfg.worker_threads, "Worker threads");
  serve->add_flag("--json", json_out, "Emit the startup line as JSON");
  serve->callback([&] {
    pve::apply_env(service_cfg);
    if (!listen.empty()) service_cfg.set_listen(listen);
    if (serve->count("--colormap")) service_cfg.default_colormap = pve::colormap_from_string(colormap);
    if (!cors.empty()) {
      service_cfg.cors_allowlist.clear();
      std::stringstream ss(cors);
      for (std::string item; std::getline(ss, item, ',');) {
        if (!item.empty()) service_cfg.cors_allowlist.push_back(item);
      }
    }
    detector_config(service_cfg.default_threshold);
    g_service = std::make_unique<pve::DetectionService>(service_cfg);
    const int port = g_service->bind();
    if (port < 0) {
      throw pve::Error(pve::Errc::io, "cannot bind " + service_cfg.host + ":" +
                                          std::to_string(service_cfg.port));
    }
    auto model = std::make_shared<const pve::ModelGraph>(load_model_or_default(service_cfg.model_path));
    g_service->set_model(model);
    std::signal(SIGINT, handle_signal);
    std::signal(SIGTERM, handle_signal);
    if (json_out) {
      std::cout << json{{"listening", service_cfg.host + ":" + std::to_string(port)},
                        {"model", model->metadata.name}}
                       .dump()
                << std::endl;
    } else {
      std::cout << "serving " << model->metadata.name << " on http://" << service_cfg.host << ":"
                << port << std::endl;
    }
    g_service->serve();
    g_service.reset();
  });

  // make-model
  std::string init = "zero";
  auto* make_model = app.add_subcommand("make-model", "Write the compact detector as a container");
  make_model->add_option("-o,--out", out_path, "Container path")->required();
  make_model->add_option("--init", init, "zero (default model) or kaiming");
  make_model->add_option("--seed", seed, "Seed for kaiming init");
  make_model->add_flag("--json", json_out, "Emit JSON");
  make_model->callback([&] {
    pve::ModelGraph model;
    if (init == "zero") {
      model = pve::default_model();
    } else if (init == "kaiming") {
      model = pve::default_model();
      const double bias = model.weights[model.layers[pve::output_layer_index(model)].bias_offset];
      pve::kaiming_init(model, seed);
      pve::set_output_bias(model, bias);
      model.metadata.version = "kaiming-" + std::to_string(seed);
    } else {
      throw pve::Error(pve::Errc::invalid_argument, "--init must be zero or kaiming");
    }
    const auto bytes = pve::save_model(model);
    write_file(out_path, bytes);
    if (json_out) {
      std::cout << json{{"output", out_path}, {"bytes", bytes.size()}, {"name", model.metadata.name},
                        {"version", model.metadata.version}, {"parameters", model.weights.size()}}
                       .dump(2)
                << "\n";
    } else {
      std::cout << "wrote " << out_path << " (" << bytes.size() << " bytes, "
                << model.weights.size() << " parameters)\n";
    }
  });

  // synth
  pve::SyntheticCorpusConfig synth_cfg;
  std::string synth_dir;
  auto* synth = app.add_subcommand("synth", "Generate the synthetic periodic-artifact corpus");
  synth->add_option("--out", synth_dir, "Output directory")->required();
  synth->add_option("--count", synth_cfg.count, "Number of images (half per class)");
  synth->add_option("--seed", synth_cfg.seed, "Generator seed");
  synth->add_option("--amplitude", synth_cfg.artifact_amplitude, "Artifact amplitude (0-255 scale)");
  synth->add_flag("--json", json_out, "Emit JSON");
  synth->callback([&] {
    const auto manifest = pve::write_synthetic_corpus(synth_dir, synth_cfg);
    const auto manifest_file = (fs::path(synth_dir) / "manifest.tsv").string();
    if (json_out) {
      std::cout << json{{"manifest", manifest_file}, {"images", manifest.entries.size()}}.dump(2)
                << "\n";
    } else {
      std::cout << "wrote " << manifest.entries.size() << " images and " << manifest_file << "\n";
    }
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  } catch (const pve::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return exit_code;
}
