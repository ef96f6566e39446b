#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "stemtrace/annotation.hpp"
#include "stemtrace/spline.hpp"

namespace stemtrace {

std::string_view version() noexcept;

/// Transport form of one image's mask request (POST /v1/mask body).
struct GenerateRequest {
  std::size_t image_width = 0;
  std::size_t image_height = 0;
  std::vector<std::vector<Point2>> stems;
  int tau = kDefaultTau;
  bool clamp_ends = false;
  std::optional<std::size_t> samples_per_segment;
};

/// Throws Error(parse) for malformed JSON and the annotation validation
/// errors for bad content.
GenerateRequest parse_generate_request(std::string_view json_text);
std::string generate_request_json(const GenerateRequest& request);

/// Request equivalent to previewing an annotation with CLI overrides.
GenerateRequest request_from_annotation(const ControlPointAnnotation& annotation, std::optional<int> tau,
                                        bool clamp_ends, std::optional<std::size_t> samples_per_segment);

struct RenderedMask {
  std::vector<std::uint8_t> png;
  int tau = 0;
  std::vector<std::size_t> samples_per_segment;
};

/// The single code path behind both `preview` and POST /v1/mask.
RenderedMask render_mask(const GenerateRequest& request);

struct ServiceConfig {
  std::string host = "127.0.0.1";
  int port = 8080;
  std::vector<std::string> allowed_origins;
  std::size_t max_body_bytes = 10u * 1024u * 1024u;
  /// Directory that {"path": ...} mask references in /v1/evaluate resolve
  /// against; references are refused when unset.
  std::optional<std::string> mask_root;

  /// STEMTRACE_ADDR, STEMTRACE_ALLOWED_ORIGINS (comma separated),
  /// STEMTRACE_MAX_BODY_BYTES, STEMTRACE_MASK_ROOT.
  static ServiceConfig from_environment();
};

/// Parses "host:port"; throws Error(validation).
void parse_address(std::string_view addr, std::string& host, int& port);

/// HTTP front end. Handlers are reentrant and only read the configuration.
class Service {
 public:
  explicit Service(ServiceConfig config);
  ~Service();
  Service(const Service&) = delete;
  Service& operator=(const Service&) = delete;

  /// Binds config.host:config.port (port 0 picks a free port) and returns
  /// the bound port. Throws Error(io) on failure.
  int bind();
  /// Serves until stop(); call after bind().
  void run();
  void stop();
  void wait_until_ready() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace stemtrace
