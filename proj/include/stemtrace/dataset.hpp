#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "stemtrace/metrics.hpp"
#include "stemtrace/raster.hpp"
#include "stemtrace/spline.hpp"

namespace stemtrace {

// ---------------------------------------------------------------------------
// Train / validation / test split

struct DatasetSplit {
  std::vector<std::string> train;
  std::vector<std::string> val;
  std::vector<std::string> test;
  std::uint64_t seed = 0;
};

/// Sorts the ids, shuffles them with a seeded Fisher-Yates (mt19937_64,
/// rejection-sampled indices, so the result is portable across standard
/// libraries), then assigns floor(n/10) to val, floor(n/10) to test and the
/// remainder to train. Throws Error(domain) for n < 3 or duplicate ids.
DatasetSplit split_dataset(std::vector<std::string> image_ids, std::uint64_t seed);

std::string split_manifest_json(const DatasetSplit& split);

/// Ids found in a directory: "<id>.json" annotations and "<id>_mask.png" or
/// "<id>.png" masks, deduplicated and sorted.
std::vector<std::string> collect_image_ids(const std::filesystem::path& dir);

// ---------------------------------------------------------------------------
// Annotation timing

enum class AnnotationMethod { point_based, detailed };

std::string_view to_string(AnnotationMethod m) noexcept;
AnnotationMethod parse_annotation_method(std::string_view text);

struct TimingEntry {
  std::string image_id;
  double seconds = 0.0;
  AnnotationMethod method = AnnotationMethod::point_based;
};

struct TimingSummary {
  AnnotationMethod method;
  std::size_t count = 0;
  double min_seconds = 0.0;
  double max_seconds = 0.0;
  double mean_seconds = 0.0;
};

class TimingLog {
 public:
  /// Throws Error(validation) unless seconds > 0 and finite.
  void append(TimingEntry entry);
  const std::vector<TimingEntry>& entries() const noexcept { return entries_; }
  /// One summary per method present, point_based first.
  std::vector<TimingSummary> summary() const;

  /// "image_id,seconds,method" header plus one row per entry.
  std::string to_csv() const;
  static TimingLog from_csv(std::string_view text);

 private:
  std::vector<TimingEntry> entries_;
};

// ---------------------------------------------------------------------------
// Batch jobs

struct GenerateOptions {
  std::optional<int> tau;  // overrides the annotation's own tau
  std::optional<std::size_t> samples_per_segment;
  EndMode ends = EndMode::open;
  unsigned jobs = 1;
};

struct GenerateEntry {
  std::string source;    // annotation file name
  std::string image_id;  // empty when parsing failed
  std::string mask_file;
  bool ok = false;
  std::string error;
  double seconds = 0.0;
  int tau = 0;
  std::vector<std::size_t> samples_per_segment;
  std::size_t ignored_shapes = 0;
};

struct GenerateReport {
  std::vector<GenerateEntry> entries;  // sorted by source file name
  std::size_t succeeded() const noexcept;
  std::size_t failed() const noexcept;
};

/// Name of the mask written for an image.
std::string mask_file_name(std::string_view image_id);

/// One <image_id>_mask.png per *.json annotation in annotation_dir, plus
/// manifest.json. Per-file failures are collected, never fatal; an
/// unreadable input directory throws Error(io).
GenerateReport batch_generate(const std::filesystem::path& annotation_dir,
                              const std::filesystem::path& output_dir, const GenerateOptions& options = {});

std::string generate_report_text(const GenerateReport& report);

struct EvaluateOptions {
  unsigned jobs = 1;
  Aggregation headline = Aggregation::micro;
};

struct PairError {
  std::string image_id;
  std::string error;
};

struct EvaluateReport {
  /// Empty per_image when no pair could be evaluated.
  std::optional<MetricsReport> metrics;
  std::vector<std::string> missing_gt;    // prediction without ground truth
  std::vector<std::string> missing_pred;  // ground truth without prediction
  std::vector<PairError> errors;
  std::size_t warnings() const noexcept { return missing_gt.size() + missing_pred.size(); }
};

/// Pairs masks by image id ("<id>_mask.png" or "<id>.png") across the two
/// directories. Unpaired ids are listed and excluded; pairs that fail to
/// decode or differ in size become error entries.
EvaluateReport batch_evaluate(const std::filesystem::path& pred_dir, const std::filesystem::path& gt_dir,
                              const EvaluateOptions& options = {});

/// Image id a mask file name maps to, or nullopt for non-PNG files.
std::optional<std::string> mask_image_id(const std::filesystem::path& file);

}  // namespace stemtrace
