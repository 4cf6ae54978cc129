#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "pve/detector.hpp"
#include "pve/engine.hpp"
#include "pve/saliency.hpp"

namespace pve {

struct ServiceConfig {
  std::string host = "127.0.0.1";
  int port = 8597;
  std::string model_path;                                 // empty: built-in default model
  std::size_t max_image_bytes = 20u << 20;                // per image
  std::size_t max_request_bytes = 256u << 20;             // whole request (batch)
  std::size_t max_batch_images = 64;
  double default_threshold = 0.5;
  double default_alpha = 0.45;
  Colormap default_colormap = Colormap::inferno;
  std::vector<std::string> cors_allowlist = {"*"};
  std::size_t worker_threads = 8;

  // "host:port" form used by --listen / PVE_LISTEN.
  void set_listen(const std::string& address);
};

// Overrides fields from PVE_LISTEN, PVE_MODEL, PVE_MAX_BODY, PVE_THRESHOLD,
// PVE_ALPHA, PVE_COLORMAP, PVE_CORS (comma-separated).
void apply_env(ServiceConfig& config);

struct DetectOptions {
  bool saliency = true;
  bool force = false;  // overlay even for human-labeled images
  double threshold = 0.5;
  OverlayConfig overlay;
};

// Response body for one image. Throws pve::Error on bad input.
std::string detect_response_json(const ModelGraph& model, std::span<const std::uint8_t> image,
                                 const DetectOptions& options);

/// HTTP front end over one immutable model. Requests are served concurrently
/// from a worker pool; no request state is shared or persisted.
class DetectionService {
 public:
  explicit DetectionService(ServiceConfig config);
  ~DetectionService();
  DetectionService(const DetectionService&) = delete;
  DetectionService& operator=(const DetectionService&) = delete;

  // Until a model is installed, /v1 endpoints answer 503.
  void set_model(std::shared_ptr<const ModelGraph> model);

  // Binds config.host:config.port (port 0 picks a free one) and returns the
  // bound port, or -1.
  int bind();
  // Blocks serving until stop().
  bool serve();
  // Stops accepting connections; in-flight requests finish first.
  void stop();
  void wait_until_ready() const;

  const ServiceConfig& config() const noexcept { return config_; }

 private:
  struct Impl;
  ServiceConfig config_;
  std::unique_ptr<Impl> impl_;
};

std::string base64_encode(std::span<const std::uint8_t> bytes);

}  // namespace pve
