#include "stemtrace/service.hpp"

#include <algorithm>
#include <cstdlib>
#include <filesystem>

#include <httplib.h>
#include <json.hpp>

#include "stemtrace/error.hpp"
#include "stemtrace/metrics.hpp"
#include "stemtrace/png_io.hpp"
#include "stemtrace/raster.hpp"

#ifndef STEMTRACE_VERSION
#define STEMTRACE_VERSION "0.0.0"
#endif

namespace stemtrace {

namespace {

using nlohmann::json;

json parse_json(std::string_view text) {
  try {
    return json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::parse, "malformed JSON at byte " + std::to_string(e.byte));
  }
}

std::string join(const std::vector<std::size_t>& values) {
  std::string out;
  for (std::size_t i = 0; i < values.size(); ++i) out += (i ? "," : "") + std::to_string(values[i]);
  return out;
}

int status_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::io: return 500;
    default: return 400;
  }
}

std::string error_body(std::string_view code, std::string_view message) {
  return json{{"error", {{"code", code}, {"message", message}}}}.dump();
}

void reply_error(httplib::Response& res, int status, std::string_view code, std::string_view message) {
  res.status = status;
  res.set_content(error_body(code, message), "application/json");
}

std::vector<std::uint8_t> base64_decode(std::string_view text) {
  static constexpr std::string_view kAlphabet =
      "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";
  std::vector<std::uint8_t> out;
  out.reserve(text.size() / 4 * 3);
  std::uint32_t buffer = 0;
  int bits = 0;
  std::size_t padding = 0;
  for (char c : text) {
    if (c == '\n' || c == '\r' || c == ' ') continue;
    if (c == '=') {
      ++padding;
      continue;
    }
    const auto pos = kAlphabet.find(c);
    if (pos == std::string_view::npos || padding > 0) {
      throw Error(ErrorCode::format, "invalid base64 payload");
    }
    buffer = (buffer << 6) | static_cast<std::uint32_t>(pos);
    bits += 6;
    if (bits >= 8) {
      bits -= 8;
      out.push_back(static_cast<std::uint8_t>(buffer >> bits));
    }
  }
  if (padding > 2) throw Error(ErrorCode::format, "invalid base64 padding");
  return out;
}

bool is_json_request(const httplib::Request& req) {
  const std::string type = req.get_header_value("Content-Type");
  return type.rfind("application/json", 0) == 0;
}

bool accepts(const httplib::Request& req, std::string_view media_type) {
  if (!req.has_header("Accept")) return true;
  const std::string accept = req.get_header_value("Accept");
  const std::string_view major = media_type.substr(0, media_type.find('/'));
  return accept.find(media_type) != std::string::npos || accept.find("*/*") != std::string::npos ||
         accept.find(std::string(major) + "/*") != std::string::npos;
}

}  // namespace

std::string_view version() noexcept { return STEMTRACE_VERSION; }

// ---------------------------------------------------------------------------

GenerateRequest parse_generate_request(std::string_view json_text) {
  const json doc = parse_json(json_text);
  if (!doc.is_object()) throw Error(ErrorCode::parse, "request body must be a JSON object");
  GenerateRequest r;
  const auto dimension = [&](const char* key) -> std::size_t {
    const auto it = doc.find(key);
    if (it == doc.end() || !it->is_number_integer() || it->get<long long>() < 1) {
      throw Error(ErrorCode::validation, std::string("missing or invalid ") + key);
    }
    return it->get<std::size_t>();
  };
  r.image_width = dimension("image_width");
  r.image_height = dimension("image_height");

  const auto stems = doc.find("stems");
  if (stems == doc.end() || !stems->is_array()) throw Error(ErrorCode::validation, "missing stems array");
  for (std::size_t s = 0; s < stems->size(); ++s) {
    const json& stem = (*stems)[s];
    if (!stem.is_array()) throw Error(ErrorCode::validation, "stem " + std::to_string(s) + " must be an array");
    std::vector<Point2> points;
    for (const json& p : stem) {
      if (!p.is_array() || p.size() != 2 || !p[0].is_number() || !p[1].is_number()) {
        throw Error(ErrorCode::validation, "stem " + std::to_string(s) + ": points must be [x, y] pairs");
      }
      points.emplace_back(p[0].get<double>(), p[1].get<double>());
    }
    r.stems.push_back(std::move(points));
  }
  if (const auto it = doc.find("tau"); it != doc.end() && !it->is_null()) {
    if (!it->is_number_integer()) throw Error(ErrorCode::validation, "tau must be an integer");
    const long long v = it->get<long long>();
    if (v < 1 || v > 1'000'000) throw Error(ErrorCode::validation, "tau must be in [1, 1000000]");
    r.tau = static_cast<int>(v);
  }
  if (const auto it = doc.find("clamp_ends"); it != doc.end() && !it->is_null()) {
    if (!it->is_boolean()) throw Error(ErrorCode::validation, "clamp_ends must be a boolean");
    r.clamp_ends = it->get<bool>();
  }
  if (const auto it = doc.find("samples_per_segment"); it != doc.end() && !it->is_null()) {
    if (!it->is_number_integer() || it->get<long long>() < 2 ||
        it->get<unsigned long long>() > kMaxSamplesPerSegment) {
      throw Error(ErrorCode::validation, "samples_per_segment must be an integer in [2, 1048576]");
    }
    r.samples_per_segment = it->get<std::size_t>();
  }
  return r;
}

std::string generate_request_json(const GenerateRequest& r) {
  json stems = json::array();
  for (const auto& stem : r.stems) {
    json points = json::array();
    for (const Point2& p : stem) points.push_back({p.x(), p.y()});
    stems.push_back(std::move(points));
  }
  json doc = {{"image_width", r.image_width},
              {"image_height", r.image_height},
              {"stems", std::move(stems)},
              {"tau", r.tau},
              {"clamp_ends", r.clamp_ends},
              {"samples_per_segment", r.samples_per_segment ? json(*r.samples_per_segment) : json(nullptr)}};
  return doc.dump();
}

GenerateRequest request_from_annotation(const ControlPointAnnotation& a, std::optional<int> tau, bool clamp_ends,
                                        std::optional<std::size_t> samples_per_segment) {
  GenerateRequest r;
  r.image_width = a.image_width;
  r.image_height = a.image_height;
  r.stems = a.stems;
  r.tau = tau.value_or(a.tau);
  r.clamp_ends = clamp_ends;
  r.samples_per_segment = samples_per_segment;
  return r;
}

RenderedMask render_mask(const GenerateRequest& r) {
  ControlPointAnnotation as_annotation;
  as_annotation.image_id = "request";
  as_annotation.image_width = r.image_width;
  as_annotation.image_height = r.image_height;
  as_annotation.stems = r.stems;
  as_annotation.tau = r.tau;
  validate(as_annotation);
  if (r.samples_per_segment && (*r.samples_per_segment < 2 || *r.samples_per_segment > kMaxSamplesPerSegment)) {
    throw Error(ErrorCode::validation, "samples_per_segment must be in [2, 1048576]");
  }

  MaskParams params;
  params.tau = r.tau;
  params.samples_per_segment = r.samples_per_segment;
  const auto curves = to_curves(as_annotation, r.clamp_ends ? EndMode::clamped : EndMode::open);
  auto result = generate_union_mask(curves, r.image_width, r.image_height, params);
  return {write_mask_png(result.mask), r.tau, std::move(result.samples_per_segment)};
}

// ---------------------------------------------------------------------------

void parse_address(std::string_view addr, std::string& host, int& port) {
  const auto colon = addr.rfind(':');
  if (colon == std::string_view::npos || colon == 0) {
    throw Error(ErrorCode::validation, "address must look like host:port, got \"" + std::string(addr) + "\"");
  }
  const std::string port_text(addr.substr(colon + 1));
  char* end = nullptr;
  const long value = std::strtol(port_text.c_str(), &end, 10);
  if (port_text.empty() || *end != '\0' || value < 0 || value > 65535) {
    throw Error(ErrorCode::validation, "invalid port in address \"" + std::string(addr) + "\"");
  }
  host = std::string(addr.substr(0, colon));
  port = static_cast<int>(value);
}

ServiceConfig ServiceConfig::from_environment() {
  ServiceConfig c;
  if (const char* addr = std::getenv("STEMTRACE_ADDR"); addr != nullptr && *addr != '\0') {
    parse_address(addr, c.host, c.port);
  }
  if (const char* origins = std::getenv("STEMTRACE_ALLOWED_ORIGINS"); origins != nullptr) {
    std::string_view rest = origins;
    while (!rest.empty()) {
      const auto comma = rest.find(',');
      std::string item(rest.substr(0, comma));
      item.erase(0, item.find_first_not_of(' '));
      item.erase(item.find_last_not_of(' ') + 1);
      if (!item.empty()) c.allowed_origins.push_back(item);
      if (comma == std::string_view::npos) break;
      rest.remove_prefix(comma + 1);
    }
  }
  if (const char* limit = std::getenv("STEMTRACE_MAX_BODY_BYTES"); limit != nullptr && *limit != '\0') {
    char* end = nullptr;
    const unsigned long long v = std::strtoull(limit, &end, 10);
    if (*end != '\0' || v == 0) throw Error(ErrorCode::validation, "STEMTRACE_MAX_BODY_BYTES must be a positive integer");
    c.max_body_bytes = static_cast<std::size_t>(v);
  }
  if (const char* root = std::getenv("STEMTRACE_MASK_ROOT"); root != nullptr && *root != '\0') {
    c.mask_root = root;
  }
  return c;
}

struct Service::Impl {
  ServiceConfig config;
  httplib::Server server;
  int bound_port = -1;

  bool origin_allowed(const httplib::Request& req) const {
    if (!req.has_header("Origin")) return false;
    const std::string origin = req.get_header_value("Origin");
    return std::find(config.allowed_origins.begin(), config.allowed_origins.end(), origin) !=
           config.allowed_origins.end();
  }

  BinaryMask load_reference(const json& ref, std::string_view which) const {
    if (!ref.is_object()) {
      throw Error(ErrorCode::validation, std::string(which) + " must be an object with png_base64 or path");
    }
    if (const auto it = ref.find("png_base64"); it != ref.end()) {
      if (!it->is_string()) throw Error(ErrorCode::validation, std::string(which) + ".png_base64 must be a string");
      return read_mask_png(base64_decode(it->get_ref<const std::string&>()));
    }
    if (const auto it = ref.find("path"); it != ref.end()) {
      if (!config.mask_root) {
        throw Error(ErrorCode::validation, "mask path references are disabled (set STEMTRACE_MASK_ROOT)");
      }
      if (!it->is_string()) throw Error(ErrorCode::validation, std::string(which) + ".path must be a string");
      const std::filesystem::path rel(it->get<std::string>());
      if (rel.is_absolute() || std::any_of(rel.begin(), rel.end(), [](const auto& part) { return part == ".."; })) {
        throw Error(ErrorCode::validation, std::string(which) + ".path must stay inside the mask root");
      }
      return load_mask_png(std::filesystem::path(*config.mask_root) / rel);
    }
    throw Error(ErrorCode::validation, std::string(which) + " must carry png_base64 or path");
  }

  void handle_mask(const httplib::Request& req, httplib::Response& res) const {
    if (!is_json_request(req)) {
      reply_error(res, 415, "unsupported_media_type", "send the request as application/json");
      return;
    }
    if (!accepts(req, "image/png")) {
      reply_error(res, 406, "not_acceptable", "this endpoint returns image/png");
      return;
    }
    try {
      const GenerateRequest request = parse_generate_request(req.body);
      const RenderedMask rendered = render_mask(request);
      res.status = 200;
      res.set_header("X-Stemtrace-Tau", std::to_string(rendered.tau));
      res.set_header("X-Stemtrace-Samples-Per-Segment", join(rendered.samples_per_segment));
      res.set_header("X-Stemtrace-Clamp-Ends", request.clamp_ends ? "true" : "false");
      res.set_content(std::string(rendered.png.begin(), rendered.png.end()), "image/png");
    } catch (const Error& e) {
      reply_error(res, status_for(e.code()), to_string(e.code()), e.what());
    }
  }

  void handle_evaluate(const httplib::Request& req, httplib::Response& res) const {
    if (!is_json_request(req)) {
      reply_error(res, 415, "unsupported_media_type", "send the request as application/json");
      return;
    }
    if (!accepts(req, "application/json")) {
      reply_error(res, 406, "not_acceptable", "this endpoint returns application/json");
      return;
    }
    try {
      const json doc = parse_json(req.body);
      if (!doc.is_object() || !doc.contains("pred") || !doc.contains("gt")) {
        throw Error(ErrorCode::validation, "body must contain pred and gt");
      }
      const BinaryMask pred = load_reference(doc.at("pred"), "pred");
      const BinaryMask gt = load_reference(doc.at("gt"), "gt");
      const ConfusionCounts c = confusion(pred, gt);
      const Scores s = scores(c);
      const json body = {{"width", pred.width()},  {"height", pred.height()},  {"tp", c.tp},
                         {"fp", c.fp},             {"fn", c.fn_},              {"tn", c.tn},
                         {"precision", s.precision}, {"recall", s.recall},    {"f1_standard", s.f1_standard},
                         {"f1_paper", s.f1_paper}};
      res.status = 200;
      res.set_content(body.dump(), "application/json");
    } catch (const Error& e) {
      reply_error(res, status_for(e.code()), to_string(e.code()), e.what());
    }
  }

  void install_routes() {
    server.set_payload_max_length(config.max_body_bytes);

    server.set_pre_routing_handler([this](const httplib::Request& req, httplib::Response& res) {
      if (origin_allowed(req)) {
        res.set_header("Access-Control-Allow-Origin", req.get_header_value("Origin"));
        res.set_header("Vary", "Origin");
        res.set_header("Access-Control-Expose-Headers",
                       "X-Stemtrace-Tau, X-Stemtrace-Samples-Per-Segment, X-Stemtrace-Clamp-Ends");
      }
      return httplib::Server::HandlerResponse::Unhandled;
    });

    server.Get("/healthz", [](const httplib::Request&, httplib::Response& res) {
      res.set_content("ok " + std::string(version()), "text/plain");
    });
    server.Post("/v1/mask", [this](const httplib::Request& req, httplib::Response& res) { handle_mask(req, res); });
    server.Post("/v1/evaluate",
                [this](const httplib::Request& req, httplib::Response& res) { handle_evaluate(req, res); });

    const auto method_not_allowed = [](std::string allow) {
      return [allow](const httplib::Request&, httplib::Response& res) {
        res.set_header("Allow", allow);
        reply_error(res, 405, "method_not_allowed", "allowed: " + allow);
      };
    };
    for (const char* path : {"/v1/mask", "/v1/evaluate"}) {
      server.Get(path, method_not_allowed("POST, OPTIONS"));
      server.Put(path, method_not_allowed("POST, OPTIONS"));
      server.Delete(path, method_not_allowed("POST, OPTIONS"));
      server.Patch(path, method_not_allowed("POST, OPTIONS"));
      server.Options(path, [this](const httplib::Request& req, httplib::Response& res) {
        if (!origin_allowed(req)) {
          reply_error(res, 403, "origin_not_allowed", "cross-origin requests are not enabled for this origin");
          return;
        }
        res.status = 204;
        res.set_header("Access-Control-Allow-Methods", "POST, OPTIONS");
        res.set_header("Access-Control-Allow-Headers", "Content-Type, Accept");
        res.set_header("Access-Control-Max-Age", "600");
      });
    }
    server.Post("/healthz", method_not_allowed("GET"));
    server.Put("/healthz", method_not_allowed("GET"));
    server.Delete("/healthz", method_not_allowed("GET"));
    server.Patch("/healthz", method_not_allowed("GET"));

    server.set_error_handler([](const httplib::Request&, httplib::Response& res) {
      if (!res.body.empty()) return;
      if (res.status == 404) {
        reply_error(res, 404, "not_found", "no such endpoint");
      } else if (res.status == 413) {
        reply_error(res, 413, "payload_too_large", "request body exceeds the configured limit");
      }
    });
  }
};

Service::Service(ServiceConfig config) : impl_(std::make_unique<Impl>()) {
  impl_->config = std::move(config);
  impl_->install_routes();
}

Service::~Service() { stop(); }

int Service::bind() {
  if (impl_->config.port == 0) {
    impl_->bound_port = impl_->server.bind_to_any_port(impl_->config.host);
  } else if (impl_->server.bind_to_port(impl_->config.host, impl_->config.port)) {
    impl_->bound_port = impl_->config.port;
  }
  if (impl_->bound_port < 0) {
    throw Error(ErrorCode::io, "cannot bind " + impl_->config.host + ":" + std::to_string(impl_->config.port));
  }
  return impl_->bound_port;
}

void Service::run() { impl_->server.listen_after_bind(); }

void Service::stop() {
  if (impl_ && impl_->server.is_running()) impl_->server.stop();
}

void Service::wait_until_ready() const { impl_->server.wait_until_ready(); }

}  // namespace stemtrace
