#include "pve/service.hpp"

#include <httplib.h>

#include <chrono>
#include <cstdlib>
#include <json.hpp>
#include <mutex>

#include "pve/error.hpp"
#include "pve/model_zoo.hpp"

namespace pve {

using json = nlohmann::json;

std::string base64_encode(std::span<const std::uint8_t> bytes) {
  static constexpr char kAlphabet[] =
      "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";
  std::string out;
  out.reserve((bytes.size() + 2) / 3 * 4);
  std::size_t i = 0;
  for (; i + 2 < bytes.size(); i += 3) {
    const std::uint32_t v = bytes[i] << 16 | bytes[i + 1] << 8 | bytes[i + 2];
    out += kAlphabet[v >> 18];
    out += kAlphabet[(v >> 12) & 63];
    out += kAlphabet[(v >> 6) & 63];
    out += kAlphabet[v & 63];
  }
  if (i < bytes.size()) {
    const bool two = i + 1 < bytes.size();
    const std::uint32_t v = bytes[i] << 16 | (two ? bytes[i + 1] << 8 : 0);
    out += kAlphabet[v >> 18];
    out += kAlphabet[(v >> 12) & 63];
    out += two ? kAlphabet[(v >> 6) & 63] : '=';
    out += '=';
  }
  return out;
}

void ServiceConfig::set_listen(const std::string& address) {
  const auto colon = address.rfind(':');
  if (colon == std::string::npos) throw Error(Errc::invalid_argument, "listen address needs host:port");
  host = address.substr(0, colon);
  try {
    port = std::stoi(address.substr(colon + 1));
  } catch (const std::exception&) {
    throw Error(Errc::invalid_argument, "bad port in listen address '" + address + "'");
  }
}

void apply_env(ServiceConfig& config) {
  auto env = [](const char* name) -> std::optional<std::string> {
    const char* v = std::getenv(name);
    if (!v || !*v) return std::nullopt;
    return std::string(v);
  };
  if (auto v = env("PVE_LISTEN")) config.set_listen(*v);
  if (auto v = env("PVE_MODEL")) config.model_path = *v;
  if (auto v = env("PVE_MAX_BODY")) config.max_image_bytes = std::stoull(*v);
  if (auto v = env("PVE_THRESHOLD")) config.default_threshold = std::stod(*v);
  if (auto v = env("PVE_ALPHA")) config.default_alpha = std::stod(*v);
  if (auto v = env("PVE_COLORMAP")) config.default_colormap = colormap_from_string(*v);
  if (auto v = env("PVE_CORS")) {
    config.cors_allowlist.clear();
    std::size_t start = 0;
    while (start <= v->size()) {
      const auto comma = v->find(',', start);
      auto item = v->substr(start, comma - start);
      if (!item.empty()) config.cors_allowlist.push_back(item);
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
  }
}

namespace {

using Clock = std::chrono::steady_clock;

struct HttpError {
  int status;
  std::string message;
};

json error_body(int status, const std::string& message) {
  return {{"error", {{"status", status}, {"message", message}}}};
}

int status_for(const Error& e) {
  switch (e.code()) {
    case Errc::unsupported_format:
    case Errc::corrupt_stream:
      return 400;
    case Errc::invalid_argument:
    case Errc::unknown_colormap:
      return 422;
    default:
      return 500;
  }
}

bool parse_bool(const std::string& v, const char* name) {
  if (v == "1" || v == "true" || v == "yes" || v == "on") return true;
  if (v == "0" || v == "false" || v == "no" || v == "off") return false;
  throw HttpError{422, std::string("query parameter '") + name + "' must be a boolean"};
}

double parse_number(const std::string& v, const char* name) {
  char* end = nullptr;
  const double d = std::strtod(v.c_str(), &end);
  if (v.empty() || end != v.c_str() + v.size() || !std::isfinite(d)) {
    throw HttpError{422, std::string("query parameter '") + name + "' must be a number"};
  }
  return d;
}

DetectOptions parse_options(const httplib::Request& req, const ServiceConfig& config) {
  DetectOptions o;
  o.threshold = config.default_threshold;
  o.overlay.alpha = config.default_alpha;
  o.overlay.colormap = config.default_colormap;
  if (req.has_param("saliency")) o.saliency = parse_bool(req.get_param_value("saliency"), "saliency");
  if (req.has_param("force")) o.force = parse_bool(req.get_param_value("force"), "force");
  if (req.has_param("threshold")) {
    o.threshold = parse_number(req.get_param_value("threshold"), "threshold");
  }
  if (req.has_param("alpha")) o.overlay.alpha = parse_number(req.get_param_value("alpha"), "alpha");
  if (req.has_param("colormap")) {
    try {
      o.overlay.colormap = colormap_from_string(req.get_param_value("colormap"));
    } catch (const Error& e) {
      throw HttpError{422, e.what()};
    }
  }
  if (!(o.threshold > 0.0 && o.threshold < 1.0)) throw HttpError{422, "threshold must lie in (0, 1)"};
  if (!(o.overlay.alpha >= 0.0 && o.overlay.alpha <= 1.0)) throw HttpError{422, "alpha must lie in [0, 1]"};
  return o;
}

json detect_json(const ModelGraph& model, std::span<const std::uint8_t> image,
                 const DetectOptions& options) {
  const auto t0 = Clock::now();
  const DetectorConfig detector{.threshold = options.threshold,
                                .saliency_on_positive_only = !options.force};
  json out;
  json timings;
  Prediction prediction;
  std::optional<std::string> overlay;
  if (options.saliency) {
    ExplainResult r = explain(model, image, options.overlay, detector);
    prediction = r.prediction;
    timings = {{"decode_micros", r.timings.decode_micros},
               {"preprocess_micros", r.timings.preprocess_micros},
               {"forward_micros", r.timings.forward_micros}};
    if (r.overlay_applied) {
      timings["saliency_micros"] = r.saliency_micros;
      overlay = base64_encode(encode_png(r.image));
    }
  } else {
    DetailedPrediction r = predict_detailed(model, image, detector);
    prediction = r.prediction;
    timings = {{"decode_micros", r.timings.decode_micros},
               {"preprocess_micros", r.timings.preprocess_micros},
               {"forward_micros", r.timings.forward_micros}};
  }
  out["probability"] = prediction.probability;
  out["label"] = std::string(to_string(prediction.label));
  out["threshold"] = prediction.threshold;
  out["model"] = {{"name", model.metadata.name}, {"version", model.metadata.version}};
  if (overlay) out["overlay"] = std::move(*overlay);
  timings["total_micros"] = std::chrono::duration<double, std::micro>(Clock::now() - t0).count();
  out["timings"] = std::move(timings);
  return out;
}

// (status, body) for one image; never throws.
std::pair<int, json> process_image(const ModelGraph& model, std::span<const std::uint8_t> image,
                                   const DetectOptions& options, std::size_t max_bytes) {
  if (image.empty()) return {400, error_body(400, "empty image payload")};
  if (image.size() > max_bytes) return {413, error_body(413, "image exceeds size limit")};
  try {
    return {200, detect_json(model, image, options)};
  } catch (const Error& e) {
    const int status = status_for(e);
    return {status, error_body(status, e.what())};
  } catch (const std::exception& e) {
    return {500, error_body(500, e.what())};
  }
}

std::span<const std::uint8_t> as_bytes(const std::string& s) {
  return {reinterpret_cast<const std::uint8_t*>(s.data()), s.size()};
}

void send_json(httplib::Response& res, int status, const json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

}  // namespace

std::string detect_response_json(const ModelGraph& model, std::span<const std::uint8_t> image,
                                 const DetectOptions& options) {
  return detect_json(model, image, options).dump();
}

struct DetectionService::Impl {
  httplib::Server server;
  mutable std::mutex mutex;
  std::shared_ptr<const ModelGraph> model;

  std::shared_ptr<const ModelGraph> snapshot() const {
    std::lock_guard lock(mutex);
    return model;
  }
};

DetectionService::DetectionService(ServiceConfig config)
    : config_(std::move(config)), impl_(std::make_unique<Impl>()) {
  auto& server = impl_->server;
  const std::size_t workers = std::max<std::size_t>(1, config_.worker_threads);
  server.new_task_queue = [workers] { return new httplib::ThreadPool(workers); };
  server.set_payload_max_length(config_.max_request_bytes);

  server.set_post_routing_handler([this](const httplib::Request& req, httplib::Response& res) {
    const auto& allow = config_.cors_allowlist;
    const std::string origin = req.get_header_value("Origin");
    if (std::find(allow.begin(), allow.end(), "*") != allow.end()) {
      res.set_header("Access-Control-Allow-Origin", "*");
    } else if (!origin.empty() && std::find(allow.begin(), allow.end(), origin) != allow.end()) {
      res.set_header("Access-Control-Allow-Origin", origin);
      res.set_header("Vary", "Origin");
    }
    res.set_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS");
    res.set_header("Access-Control-Allow-Headers", "Content-Type");
  });
  server.set_error_handler([](const httplib::Request&, httplib::Response& res) {
    if (res.body.empty()) {
      const char* message = res.status == 404 ? "not found" : httplib::status_message(res.status);
      res.set_content(error_body(res.status, message).dump(), "application/json");
    }
  });
  server.Options(R"(/v1/.*)", [](const httplib::Request&, httplib::Response& res) {
    res.status = 204;
  });

  server.Get("/v1/health", [this](const httplib::Request&, httplib::Response& res) {
    if (!impl_->snapshot()) return send_json(res, 503, {{"status", "unavailable"}});
    send_json(res, 200, {{"status", "ok"}});
  });

  server.Get("/v1/model", [this](const httplib::Request&, httplib::Response& res) {
    const auto model = impl_->snapshot();
    if (!model) return send_json(res, 503, error_body(503, "model not loaded"));
    send_json(res, 200,
              {{"name", model->metadata.name},
               {"version", model->metadata.version},
               {"input_shape", model->input_shape},
               {"n_ai", model->metadata.n_ai},
               {"n_human", model->metadata.n_human},
               {"default_threshold", config_.default_threshold}});
  });

  server.Post("/v1/detect", [this](const httplib::Request& req, httplib::Response& res) {
    const auto model = impl_->snapshot();
    if (!model) return send_json(res, 503, error_body(503, "model not loaded"));
    DetectOptions options;
    try {
      options = parse_options(req, config_);
    } catch (const HttpError& e) {
      return send_json(res, e.status, error_body(e.status, e.message));
    }
    const std::string* payload = &req.body;
    if (req.is_multipart_form_data()) {
      if (req.files.empty()) return send_json(res, 400, error_body(400, "no image part"));
      auto it = req.files.find("image");
      payload = &(it != req.files.end() ? it->second : req.files.begin()->second).content;
    }
    const auto [status, body] = process_image(*model, as_bytes(*payload), options,
                                              config_.max_image_bytes);
    send_json(res, status, body);
  });

  server.Post("/v1/detect/batch", [this](const httplib::Request& req, httplib::Response& res,
                                         const httplib::ContentReader& reader) {
    const auto model = impl_->snapshot();
    if (!model) return send_json(res, 503, error_body(503, "model not loaded"));
    if (!req.is_multipart_form_data()) {
      return send_json(res, 400, error_body(400, "batch expects multipart/form-data"));
    }
    std::vector<std::string> parts;
    bool too_many = false;
    reader(
        [&](const httplib::MultipartFormData&) {
          if (parts.size() >= config_.max_batch_images) too_many = true;
          if (!too_many) parts.emplace_back();
          return true;
        },
        [&](const char* data, std::size_t len) {
          if (!too_many && !parts.empty()) parts.back().append(data, len);
          return true;
        });
    if (too_many) {
      return send_json(res, 413, error_body(413, "batch holds more than " +
                                                     std::to_string(config_.max_batch_images) +
                                                     " images"));
    }
    if (parts.empty()) return send_json(res, 400, error_body(400, "batch has no images"));
    DetectOptions options;
    try {
      options = parse_options(req, config_);
    } catch (const HttpError& e) {
      return send_json(res, e.status, error_body(e.status, e.message));
    }
    json results = json::array();
    for (const auto& part : parts) {
      results.push_back(process_image(*model, as_bytes(part), options, config_.max_image_bytes).second);
    }
    send_json(res, 200, {{"results", std::move(results)}});
  });
}

DetectionService::~DetectionService() { stop(); }

void DetectionService::set_model(std::shared_ptr<const ModelGraph> model) {
  if (model) validate(*model);
  std::lock_guard lock(impl_->mutex);
  impl_->model = std::move(model);
}

int DetectionService::bind() {
  if (config_.port == 0) return impl_->server.bind_to_any_port(config_.host);
  return impl_->server.bind_to_port(config_.host, config_.port) ? config_.port : -1;
}

bool DetectionService::serve() { return impl_->server.listen_after_bind(); }

void DetectionService::stop() {
  if (impl_ && impl_->server.is_running()) impl_->server.stop();
}

void DetectionService::wait_until_ready() const { impl_->server.wait_until_ready(); }

}  // namespace pve
