#include "stemtrace/dataset.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <map>
#include <random>
#include <set>
#include <sstream>

#include <fmt/format.h>
#include <json.hpp>

#include "parallel.hpp"
#include "stemtrace/annotation.hpp"
#include "stemtrace/error.hpp"
#include "stemtrace/png_io.hpp"

namespace fs = std::filesystem;

namespace stemtrace {

namespace {

std::uint64_t bounded(std::mt19937_64& rng, std::uint64_t range) {
  // Reject the short final bucket so every residue is equally likely.
  const std::uint64_t threshold = (0 - range) % range;
  for (;;) {
    const std::uint64_t v = rng();
    if (v >= threshold) return v % range;
  }
}

std::vector<fs::path> list_files(const fs::path& dir) {
  std::error_code ec;
  fs::directory_iterator it(dir, ec);
  if (ec) throw Error(ErrorCode::io, "cannot read directory " + dir.string() + ": " + ec.message());
  std::vector<fs::path> files;
  for (const auto& entry : it) {
    if (entry.is_regular_file(ec)) files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  return files;
}

bool ends_with(std::string_view s, std::string_view suffix) {
  return s.size() >= suffix.size() && s.substr(s.size() - suffix.size()) == suffix;
}

std::string describe(const std::exception& e) {
  if (const auto* err = dynamic_cast<const Error*>(&e)) return std::string(to_string(err->code())) + ": " + e.what();
  return e.what();
}

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

}  // namespace

// ---------------------------------------------------------------------------

DatasetSplit split_dataset(std::vector<std::string> ids, std::uint64_t seed) {
  if (ids.size() < 3) {
    throw Error(ErrorCode::domain, "a split needs at least 3 images, got " + std::to_string(ids.size()));
  }
  std::sort(ids.begin(), ids.end());
  if (std::adjacent_find(ids.begin(), ids.end()) != ids.end()) {
    throw Error(ErrorCode::domain, "image ids must be unique");
  }
  std::mt19937_64 rng(seed);
  for (std::size_t i = ids.size() - 1; i > 0; --i) {
    std::swap(ids[i], ids[bounded(rng, i + 1)]);
  }
  const std::size_t n = ids.size();
  const std::size_t tenth = n / 10;
  const std::size_t n_train = n - 2 * tenth;
  DatasetSplit split;
  split.seed = seed;
  split.train.assign(ids.begin(), ids.begin() + static_cast<std::ptrdiff_t>(n_train));
  split.val.assign(ids.begin() + static_cast<std::ptrdiff_t>(n_train),
                   ids.begin() + static_cast<std::ptrdiff_t>(n_train + tenth));
  split.test.assign(ids.begin() + static_cast<std::ptrdiff_t>(n_train + tenth), ids.end());
  return split;
}

std::string split_manifest_json(const DatasetSplit& split) {
  const nlohmann::json doc = {{"seed", split.seed},
                              {"counts", {{"train", split.train.size()}, {"val", split.val.size()}, {"test", split.test.size()}}},
                              {"train", split.train},
                              {"val", split.val},
                              {"test", split.test}};
  return doc.dump(2) + "\n";
}

std::optional<std::string> mask_image_id(const fs::path& file) {
  const std::string name = file.filename().string();
  if (!ends_with(name, ".png")) return std::nullopt;
  std::string id = name.substr(0, name.size() - 4);
  if (ends_with(id, "_mask")) id.resize(id.size() - 5);
  if (id.empty()) return std::nullopt;
  return id;
}

std::vector<std::string> collect_image_ids(const fs::path& dir) {
  std::set<std::string> ids;
  for (const auto& file : list_files(dir)) {
    if (file.extension() == ".json") {
      if (file.filename() != "manifest.json") ids.insert(file.stem().string());
    } else if (auto id = mask_image_id(file)) {
      ids.insert(*id);
    }
  }
  return {ids.begin(), ids.end()};
}

// ---------------------------------------------------------------------------

std::string_view to_string(AnnotationMethod m) noexcept {
  return m == AnnotationMethod::point_based ? "point-based" : "detailed";
}

AnnotationMethod parse_annotation_method(std::string_view text) {
  if (text == "point-based") return AnnotationMethod::point_based;
  if (text == "detailed") return AnnotationMethod::detailed;
  throw Error(ErrorCode::validation, "unknown annotation method \"" + std::string(text) + "\"");
}

void TimingLog::append(TimingEntry entry) {
  if (!(entry.seconds > 0.0) || !std::isfinite(entry.seconds)) {
    throw Error(ErrorCode::validation, "annotation time must be positive, got " + std::to_string(entry.seconds));
  }
  entries_.push_back(std::move(entry));
}

std::vector<TimingSummary> TimingLog::summary() const {
  std::vector<TimingSummary> out;
  for (AnnotationMethod m : {AnnotationMethod::point_based, AnnotationMethod::detailed}) {
    TimingSummary s{m};
    double total = 0.0;
    for (const auto& e : entries_) {
      if (e.method != m) continue;
      s.min_seconds = s.count == 0 ? e.seconds : std::min(s.min_seconds, e.seconds);
      s.max_seconds = s.count == 0 ? e.seconds : std::max(s.max_seconds, e.seconds);
      total += e.seconds;
      ++s.count;
    }
    if (s.count == 0) continue;
    s.mean_seconds = total / static_cast<double>(s.count);
    out.push_back(s);
  }
  return out;
}

std::string TimingLog::to_csv() const {
  std::string out = "image_id,seconds,method\n";
  for (const auto& e : entries_) out += fmt::format("{},{},{}\n", e.image_id, e.seconds, to_string(e.method));
  return out;
}

TimingLog TimingLog::from_csv(std::string_view text) {
  TimingLog log;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line_no == 1 && line == "image_id,seconds,method") continue;
    const auto c1 = line.find(',');
    const auto c2 = c1 == std::string::npos ? c1 : line.find(',', c1 + 1);
    if (c2 == std::string::npos) {
      throw Error(ErrorCode::parse, "timing log line " + std::to_string(line_no) + ": expected 3 fields");
    }
    TimingEntry e;
    e.image_id = line.substr(0, c1);
    try {
      std::size_t used = 0;
      const std::string field = line.substr(c1 + 1, c2 - c1 - 1);
      e.seconds = std::stod(field, &used);
      if (used != field.size()) throw std::invalid_argument("trailing characters");
    } catch (const std::exception&) {
      throw Error(ErrorCode::parse, "timing log line " + std::to_string(line_no) + ": bad seconds value");
    }
    e.method = parse_annotation_method(line.substr(c2 + 1));
    log.append(std::move(e));
  }
  return log;
}

// ---------------------------------------------------------------------------

std::size_t GenerateReport::succeeded() const noexcept {
  return static_cast<std::size_t>(std::count_if(entries.begin(), entries.end(), [](const auto& e) { return e.ok; }));
}

std::size_t GenerateReport::failed() const noexcept { return entries.size() - succeeded(); }

std::string mask_file_name(std::string_view image_id) { return std::string(image_id) + "_mask.png"; }

GenerateReport batch_generate(const fs::path& annotation_dir, const fs::path& output_dir,
                              const GenerateOptions& options) {
  std::vector<fs::path> sources;
  for (const auto& f : list_files(annotation_dir)) {
    if (f.extension() == ".json") sources.push_back(f);
  }
  std::error_code ec;
  fs::create_directories(output_dir, ec);
  if (ec) throw Error(ErrorCode::io, "cannot create " + output_dir.string() + ": " + ec.message());

  GenerateReport report;
  report.entries.resize(sources.size());
  std::vector<std::optional<ControlPointAnnotation>> parsed(sources.size());
  std::vector<double> parse_seconds(sources.size(), 0.0);

  detail::parallel_for(sources.size(), options.jobs, [&](std::size_t i) {
    const auto start = std::chrono::steady_clock::now();
    GenerateEntry& entry = report.entries[i];
    entry.source = sources[i].filename().string();
    try {
      const auto bytes = read_file_bytes(sources[i]);
      ParseDiagnostics diag;
      parsed[i] = parse_annotation(std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size()),
                                   sources[i].stem().string(), &diag);
      entry.image_id = parsed[i]->image_id;
      entry.ignored_shapes = diag.ignored_shapes;
    } catch (const std::exception& e) {
      entry.error = describe(e);
    }
    parse_seconds[i] = seconds_since(start);
  });

  // Two annotations must not write the same mask file; none of them wins.
  std::map<std::string, std::vector<std::size_t>> owners;
  for (std::size_t i = 0; i < sources.size(); ++i) {
    if (parsed[i]) owners[parsed[i]->image_id].push_back(i);
  }
  for (const auto& [id, files] : owners) {
    if (files.size() < 2) continue;
    std::string names;
    for (std::size_t i : files) names += (names.empty() ? "" : ", ") + report.entries[i].source;
    for (std::size_t i : files) {
      report.entries[i].error = "validation_error: duplicate image_id \"" + id + "\" in " + names;
      parsed[i].reset();
    }
  }

  detail::parallel_for(sources.size(), options.jobs, [&](std::size_t i) {
    if (!parsed[i]) return;
    const auto start = std::chrono::steady_clock::now();
    GenerateEntry& entry = report.entries[i];
    try {
      ControlPointAnnotation& a = *parsed[i];
      MaskParams params;
      params.tau = options.tau.value_or(a.tau);
      params.samples_per_segment = options.samples_per_segment;
      const auto curves = to_curves(a, options.ends);
      const auto result = generate_union_mask(curves, a.image_width, a.image_height, params);
      entry.mask_file = mask_file_name(a.image_id);
      save_mask_png(output_dir / entry.mask_file, result.mask);
      entry.tau = params.tau;
      entry.samples_per_segment = result.samples_per_segment;
      entry.ok = true;
    } catch (const std::exception& e) {
      entry.error = describe(e);
      entry.mask_file.clear();
    }
    entry.seconds = parse_seconds[i] + seconds_since(start);
  });

  nlohmann::json manifest_entries = nlohmann::json::array();
  for (const auto& e : report.entries) {
    nlohmann::json row = {{"source", e.source}, {"ok", e.ok}};
    if (!e.image_id.empty()) row["image_id"] = e.image_id;
    if (e.ok) {
      row["mask"] = e.mask_file;
      row["tau"] = e.tau;
      row["samples_per_segment"] = e.samples_per_segment;
    } else {
      row["error"] = e.error;
    }
    manifest_entries.push_back(std::move(row));
  }
  const nlohmann::json manifest = {
      {"clamp_ends", options.ends == EndMode::clamped},
      {"tau_override", options.tau ? nlohmann::json(*options.tau) : nlohmann::json(nullptr)},
      {"samples_per_segment_override",
       options.samples_per_segment ? nlohmann::json(*options.samples_per_segment) : nlohmann::json(nullptr)},
      {"entries", std::move(manifest_entries)}};
  const std::string text = manifest.dump(2) + "\n";
  write_file_bytes(output_dir / "manifest.json",
                   std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
  return report;
}

std::string generate_report_text(const GenerateReport& report) {
  std::string out;
  for (const auto& e : report.entries) {
    if (e.ok) {
      std::string samples;
      for (std::size_t i = 0; i < e.samples_per_segment.size(); ++i) {
        samples += (i ? "," : "") + std::to_string(e.samples_per_segment[i]);
      }
      out += fmt::format("ok    {} -> {} (tau={}, samples/segment={}) {:.3f}s\n", e.source, e.mask_file, e.tau,
                         samples, e.seconds);
    } else {
      out += fmt::format("FAIL  {}: {}\n", e.source, e.error);
    }
  }
  out += fmt::format("{} succeeded, {} failed\n", report.succeeded(), report.failed());
  return out;
}

// ---------------------------------------------------------------------------

EvaluateReport batch_evaluate(const fs::path& pred_dir, const fs::path& gt_dir, const EvaluateOptions& options) {
  EvaluateReport report;
  std::set<std::string> ambiguous;
  const auto index = [&](const fs::path& dir) {
    std::map<std::string, fs::path> by_id;
    for (const auto& f : list_files(dir)) {
      const auto id = mask_image_id(f);
      if (!id) continue;
      if (!by_id.try_emplace(*id, f).second) ambiguous.insert(*id);
    }
    return by_id;
  };
  const auto preds = index(pred_dir);
  const auto gts = index(gt_dir);

  std::vector<std::string> paired;
  for (const auto& [id, path] : preds) {
    if (gts.contains(id)) {
      paired.push_back(id);
    } else {
      report.missing_gt.push_back(id);
    }
  }
  for (const auto& [id, path] : gts) {
    if (!preds.contains(id)) report.missing_pred.push_back(id);
  }

  std::vector<std::optional<ImageMetrics>> results(paired.size());
  std::vector<std::string> failures(paired.size());
  detail::parallel_for(paired.size(), options.jobs, [&](std::size_t i) {
    const std::string& id = paired[i];
    if (ambiguous.contains(id)) {
      failures[i] = "several mask files map to this image id";
      return;
    }
    try {
      const BinaryMask pred = load_mask_png(preds.at(id));
      const BinaryMask gt = load_mask_png(gts.at(id));
      results[i] = evaluate_pair(id, pred, gt);
    } catch (const std::exception& e) {
      failures[i] = describe(e);
    }
  });

  std::vector<ImageMetrics> rows;
  for (std::size_t i = 0; i < paired.size(); ++i) {
    if (results[i]) {
      rows.push_back(std::move(*results[i]));
    } else {
      report.errors.push_back({paired[i], failures[i]});
    }
  }
  if (!rows.empty()) report.metrics = build_report(std::move(rows), options.headline);
  return report;
}

}  // namespace stemtrace
