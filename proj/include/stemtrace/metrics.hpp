#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "stemtrace/mask.hpp"

namespace stemtrace {

/// Pixel tallies of a prediction against a ground truth.
struct ConfusionCounts {
  std::uint64_t tp = 0;
  std::uint64_t fp = 0;
  std::uint64_t fn_ = 0;
  std::uint64_t tn = 0;

  std::uint64_t total() const noexcept { return tp + fp + fn_ + tn; }
  ConfusionCounts& operator+=(const ConfusionCounts& o) noexcept {
    tp += o.tp;
    fp += o.fp;
    fn_ += o.fn_;
    tn += o.tn;
    return *this;
  }
  friend bool operator==(const ConfusionCounts&, const ConfusionCounts&) = default;
};

/// Throws Error(dimension_mismatch) naming both shapes.
ConfusionCounts confusion(const BinaryMask& pred, const BinaryMask& gt, const ExecPolicy& policy = {});

// All three return 0 when their denominator is 0.
double precision(const ConfusionCounts& c) noexcept;
double recall(const ConfusionCounts& c) noexcept;

enum class F1Formula {
  standard,  // 2PR / (P + R)
  paper,     // PR / (P + R), half the standard value, so at most 0.5
};

double f1(const ConfusionCounts& c, F1Formula formula = F1Formula::standard) noexcept;
double f1_from(double p, double r, F1Formula formula = F1Formula::standard) noexcept;

struct Scores {
  double precision = 0.0;
  double recall = 0.0;
  double f1_standard = 0.0;
  double f1_paper = 0.0;
};

Scores scores(const ConfusionCounts& c) noexcept;

enum class Aggregation { micro, macro };

std::string_view to_string(Aggregation mode) noexcept;

struct ImageMetrics {
  std::string image_id;
  ConfusionCounts counts;
  Scores scores;
};

struct AggregateMetrics {
  Aggregation mode = Aggregation::micro;
  /// Summed counts (both modes carry them; only micro derives scores from them).
  ConfusionCounts counts;
  Scores scores;
  std::size_t images = 0;
};

/// micro: scores of summed counts. macro: mean of per-image scores.
/// Throws Error(domain) on an empty list.
AggregateMetrics aggregate(std::span<const ConfusionCounts> per_image, Aggregation mode);

struct MetricsReport {
  std::vector<ImageMetrics> per_image;  // sorted by image_id
  AggregateMetrics micro;
  AggregateMetrics macro;
  Aggregation headline = Aggregation::micro;
  std::string aggregation_note;
};

/// Sorts rows by image_id and fills both aggregates. Throws on empty input.
MetricsReport build_report(std::vector<ImageMetrics> rows, Aggregation headline = Aggregation::micro);

ImageMetrics evaluate_pair(std::string image_id, const BinaryMask& pred, const BinaryMask& gt,
                           const ExecPolicy& policy = {});

/// Which F1 column(s) the text table shows. CSV always carries both.
enum class F1Columns { standard, paper, both };

inline constexpr const char* kReportCsvHeader =
    "image_id,tp,fp,fn,tn,precision,recall,f1_standard,f1_paper";

/// Header, one row per image, then "micro" and "macro" rows. Scores are
/// fractions in [0,1] with 9 decimals; the macro row has empty count cells.
std::string report_csv(const MetricsReport& report);

/// Aligned text table, scores as percentages with one decimal.
std::string report_table(const MetricsReport& report, F1Columns columns = F1Columns::both);

}  // namespace stemtrace
