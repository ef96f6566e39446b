#include "stemtrace/annotation.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <map>
#include <optional>

#include <json.hpp>

#include "stemtrace/error.hpp"

namespace stemtrace {

namespace {

using nlohmann::json;

constexpr std::string_view kStemLabel = "stem";

Point2 read_point(const json& value, std::size_t shape_index) {
  if (!value.is_array() || value.size() != 2 || !value[0].is_number() || !value[1].is_number()) {
    throw Error(ErrorCode::validation,
                "shape " + std::to_string(shape_index) + ": each point must be a [x, y] number pair");
  }
  try {
    return {value[0].get<double>(), value[1].get<double>()};
  } catch (const Error&) {
    throw Error(ErrorCode::validation, "shape " + std::to_string(shape_index) + ": non-finite coordinate");
  }
}

int read_tau(const json& value, std::string_view where) {
  if (!value.is_number_integer() && !(value.is_number_float() && std::floor(value.get<double>()) == value.get<double>())) {
    throw Error(ErrorCode::validation, std::string(where) + ": tau must be an integer");
  }
  const double v = value.get<double>();
  if (v < 1 || v > 1'000'000) {
    throw Error(ErrorCode::validation, std::string(where) + ": tau must be in [1, 1000000]");
  }
  return static_cast<int>(v);
}

std::size_t read_dimension(const json& doc, const char* key) {
  const auto it = doc.find(key);
  if (it == doc.end() || !it->is_number_integer() || it->get<long long>() < 1) {
    throw Error(ErrorCode::validation, std::string("missing or invalid ") + key);
  }
  return it->get<std::size_t>();
}

struct PendingStem {
  std::size_t first_shape = 0;
  std::vector<Point2> points;
};

}  // namespace

void validate(const ControlPointAnnotation& a) {
  if (a.image_width < 1 || a.image_height < 1) {
    throw Error(ErrorCode::validation, "image dimensions must be positive");
  }
  if (a.tau < 1) throw Error(ErrorCode::validation, "tau must be >= 1");
  if (static_cast<std::size_t>(a.tau) > std::max(a.image_width, a.image_height)) {
    throw Error(ErrorCode::validation, "tau " + std::to_string(a.tau) + " exceeds the larger image dimension");
  }
  if (a.stems.empty()) throw Error(ErrorCode::no_stems, "annotation contains no stems");
  const double w = static_cast<double>(a.image_width);
  const double h = static_cast<double>(a.image_height);
  const double diagonal = std::hypot(w, h);
  for (std::size_t s = 0; s < a.stems.size(); ++s) {
    const auto& stem = a.stems[s];
    if (stem.size() < 4) {
      throw Error(ErrorCode::insufficient_control_points,
                  "stem " + std::to_string(s) + " has " + std::to_string(stem.size()) +
                      " control points; at least 4 are required");
    }
    for (const Point2& p : stem) {
      const double ox = std::max({0.0, -p.x(), p.x() - w});
      const double oy = std::max({0.0, -p.y(), p.y() - h});
      if (std::hypot(ox, oy) > diagonal) {
        throw Error(ErrorCode::validation,
                    "stem " + std::to_string(s) + " has a point more than one image diagonal outside the image");
      }
    }
  }
}

ControlPointAnnotation parse_annotation(std::string_view json_text, std::string_view fallback_image_id,
                                        ParseDiagnostics* diagnostics) {
  json doc;
  try {
    doc = json::parse(json_text.begin(), json_text.end());
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::parse, "malformed JSON at byte " + std::to_string(e.byte) + ": " + e.what());
  }
  if (!doc.is_object()) throw Error(ErrorCode::parse, "annotation document must be a JSON object");

  ControlPointAnnotation a;
  a.image_width = read_dimension(doc, "imageWidth");
  a.image_height = read_dimension(doc, "imageHeight");

  if (const auto it = doc.find("imagePath"); it != doc.end() && it->is_string() && !it->get<std::string>().empty()) {
    // LabelMe on Windows writes backslashes.
    std::string path = it->get<std::string>();
    std::replace(path.begin(), path.end(), '\\', '/');
    a.image_id = std::filesystem::path(path).stem().string();
  }
  if (a.image_id.empty()) a.image_id = std::string(fallback_image_id);

  std::optional<int> top_tau;
  if (const auto it = doc.find("tau"); it != doc.end() && !it->is_null()) top_tau = read_tau(*it, "document");

  const auto shapes_it = doc.find("shapes");
  if (shapes_it == doc.end() || !shapes_it->is_array()) {
    throw Error(ErrorCode::no_stems, "document has no shapes array");
  }

  std::vector<PendingStem> stems;
  std::map<long long, std::size_t> point_groups;  // group_id -> index into stems
  std::optional<int> shape_tau;
  std::size_t ignored = 0;

  for (std::size_t i = 0; i < shapes_it->size(); ++i) {
    const json& shape = (*shapes_it)[i];
    if (!shape.is_object()) {
      ++ignored;
      continue;
    }
    const std::string label = shape.value("label", "");
    const std::string type = shape.value("shape_type", "polygon");
    if (label != kStemLabel || (type != "linestrip" && type != "point")) {
      ++ignored;
      continue;
    }
    const auto points_it = shape.find("points");
    if (points_it == shape.end() || !points_it->is_array()) {
      throw Error(ErrorCode::validation, "shape " + std::to_string(i) + ": missing points");
    }
    if (const auto t = shape.find("tau"); t != shape.end() && !t->is_null()) {
      const int v = read_tau(*t, "shape " + std::to_string(i));
      if (shape_tau && *shape_tau != v && !top_tau) {
        throw Error(ErrorCode::validation, "shape " + std::to_string(i) + ": conflicting per-shape tau values");
      }
      shape_tau = v;
    }

    if (type == "linestrip") {
      PendingStem stem{i, {}};
      for (const json& p : *points_it) stem.points.push_back(read_point(p, i));
      stems.push_back(std::move(stem));
      continue;
    }

    const auto group_it = shape.find("group_id");
    if (group_it == shape.end() || !group_it->is_number_integer()) {
      ++ignored;  // a lone point cannot be ordered into a stem
      continue;
    }
    if (points_it->size() != 1) {
      throw Error(ErrorCode::validation, "shape " + std::to_string(i) + ": point shape must hold exactly one point");
    }
    const long long group = group_it->get<long long>();
    auto [slot, inserted] = point_groups.try_emplace(group, stems.size());
    if (inserted) stems.push_back({i, {}});
    stems[slot->second].points.push_back(read_point((*points_it)[0], i));
  }

  if (stems.empty()) throw Error(ErrorCode::no_stems, "no shapes labelled \"stem\" found");
  for (const auto& s : stems) {
    if (s.points.size() < 4) {
      throw Error(ErrorCode::insufficient_control_points,
                  "shape " + std::to_string(s.first_shape) + ": stem has " + std::to_string(s.points.size()) +
                      " control points; at least 4 are required");
    }
    a.stems.push_back(s.points);
  }
  a.tau = top_tau.value_or(shape_tau.value_or(kDefaultTau));
  if (diagnostics != nullptr) diagnostics->ignored_shapes = ignored;
  validate(a);
  return a;
}

std::string write_annotation(const ControlPointAnnotation& a) {
  validate(a);
  if (a.image_id.empty() || a.image_id.find_first_of("/\\") != std::string::npos) {
    throw Error(ErrorCode::validation, "image_id must be a non-empty name without path separators");
  }
  json shapes = json::array();
  for (const auto& stem : a.stems) {
    json points = json::array();
    for (const Point2& p : stem) points.push_back({p.x(), p.y()});
    shapes.push_back({{"label", kStemLabel},
                      {"points", std::move(points)},
                      {"group_id", nullptr},
                      {"description", ""},
                      {"shape_type", "linestrip"},
                      {"flags", json::object()}});
  }
  json doc = {{"version", "5.2.1"},
              {"flags", json::object()},
              {"shapes", std::move(shapes)},
              {"imagePath", a.image_id + ".jpg"},
              {"imageData", nullptr},
              {"imageHeight", a.image_height},
              {"imageWidth", a.image_width},
              {"tau", a.tau}};
  return doc.dump(2) + "\n";
}

std::vector<StemCurve> to_curves(const ControlPointAnnotation& annotation, EndMode ends) {
  std::vector<StemCurve> curves;
  curves.reserve(annotation.stems.size());
  for (const auto& stem : annotation.stems) curves.emplace_back(stem, ends);
  return curves;
}

}  // namespace stemtrace
