#include "stemtrace/metrics.hpp"

#include <algorithm>
#include <fmt/format.h>

#include "stemtrace/error.hpp"
#include "stemtrace/simd/kernels.hpp"

namespace stemtrace {

namespace {

double ratio(std::uint64_t num, std::uint64_t den) noexcept {
  return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}

std::string shape(const BinaryMask& m) {
  return std::to_string(m.width()) + "x" + std::to_string(m.height());
}

}  // namespace

ConfusionCounts confusion(const BinaryMask& pred, const BinaryMask& gt, const ExecPolicy& policy) {
  if (pred.width() != gt.width() || pred.height() != gt.height()) {
    throw Error(ErrorCode::dimension_mismatch,
                "prediction is " + shape(pred) + " but ground truth is " + shape(gt));
  }
  const auto pw = pred.words();
  const auto gw = gt.words();
  const auto pc = policy.resolved_kernels().confusion(pw.data(), gw.data(), pw.size());
  ConfusionCounts c;
  c.tp = pc.both;
  c.fp = pc.only_pred;
  c.fn_ = pc.only_gt;
  c.tn = static_cast<std::uint64_t>(pred.pixel_count()) - c.tp - c.fp - c.fn_;
  return c;
}

double precision(const ConfusionCounts& c) noexcept { return ratio(c.tp, c.tp + c.fp); }

double recall(const ConfusionCounts& c) noexcept { return ratio(c.tp, c.tp + c.fn_); }

double f1_from(double p, double r, F1Formula formula) noexcept {
  const double sum = p + r;
  if (sum <= 0.0) return 0.0;
  const double harmonic = p * r / sum;
  return formula == F1Formula::standard ? 2.0 * harmonic : harmonic;
}

double f1(const ConfusionCounts& c, F1Formula formula) noexcept {
  return f1_from(precision(c), recall(c), formula);
}

Scores scores(const ConfusionCounts& c) noexcept {
  const double p = precision(c);
  const double r = recall(c);
  return {p, r, f1_from(p, r, F1Formula::standard), f1_from(p, r, F1Formula::paper)};
}

std::string_view to_string(Aggregation mode) noexcept {
  return mode == Aggregation::micro ? "micro" : "macro";
}

AggregateMetrics aggregate(std::span<const ConfusionCounts> per_image, Aggregation mode) {
  if (per_image.empty()) throw Error(ErrorCode::domain, "cannot aggregate an empty list of images");
  AggregateMetrics out;
  out.mode = mode;
  out.images = per_image.size();
  for (const auto& c : per_image) out.counts += c;
  if (mode == Aggregation::micro) {
    out.scores = scores(out.counts);
    return out;
  }
  Scores sum;
  for (const auto& c : per_image) {
    const Scores s = scores(c);
    sum.precision += s.precision;
    sum.recall += s.recall;
    sum.f1_standard += s.f1_standard;
    sum.f1_paper += s.f1_paper;
  }
  const auto n = static_cast<double>(per_image.size());
  out.scores = {sum.precision / n, sum.recall / n, sum.f1_standard / n, sum.f1_paper / n};
  return out;
}

MetricsReport build_report(std::vector<ImageMetrics> rows, Aggregation headline) {
  std::sort(rows.begin(), rows.end(),
            [](const ImageMetrics& a, const ImageMetrics& b) { return a.image_id < b.image_id; });
  std::vector<ConfusionCounts> counts;
  counts.reserve(rows.size());
  for (const auto& r : rows) counts.push_back(r.counts);
  MetricsReport report;
  report.micro = aggregate(counts, Aggregation::micro);
  report.macro = aggregate(counts, Aggregation::macro);
  report.per_image = std::move(rows);
  report.headline = headline;
  report.aggregation_note =
      headline == Aggregation::micro
          ? "headline: micro (pixel counts pooled over all images); macro = mean of per-image scores"
          : "headline: macro (mean of per-image scores); micro = scores of pooled pixel counts";
  return report;
}

ImageMetrics evaluate_pair(std::string image_id, const BinaryMask& pred, const BinaryMask& gt,
                           const ExecPolicy& policy) {
  ImageMetrics m;
  m.image_id = std::move(image_id);
  m.counts = confusion(pred, gt, policy);
  m.scores = scores(m.counts);
  return m;
}

std::string report_csv(const MetricsReport& report) {
  std::string out = kReportCsvHeader;
  out += '\n';
  const auto score_cells = [](const Scores& s) {
    return fmt::format("{:.9f},{:.9f},{:.9f},{:.9f}", s.precision, s.recall, s.f1_standard, s.f1_paper);
  };
  for (const auto& r : report.per_image) {
    out += fmt::format("{},{},{},{},{},{}\n", r.image_id, r.counts.tp, r.counts.fp, r.counts.fn_,
                       r.counts.tn, score_cells(r.scores));
  }
  const auto& m = report.micro;
  out += fmt::format("micro,{},{},{},{},{}\n", m.counts.tp, m.counts.fp, m.counts.fn_, m.counts.tn,
                     score_cells(m.scores));
  out += fmt::format("macro,,,,,{}\n", score_cells(report.macro.scores));
  return out;
}

std::string report_table(const MetricsReport& report, F1Columns columns) {
  std::size_t id_width = 8;
  for (const auto& r : report.per_image) id_width = std::max(id_width, r.image_id.size());

  const bool show_standard = columns != F1Columns::paper;
  const bool show_paper = columns != F1Columns::standard;

  std::string out = fmt::format("{:<{}}  {:>12} {:>12} {:>12} {:>14}  {:>9} {:>9}", "image_id", id_width,
                                "TP", "FP", "FN", "TN", "Precision", "Recall");
  if (show_standard) out += fmt::format(" {:>9}", "F1");
  if (show_paper) out += fmt::format(" {:>9}", "F1(paper)");
  out += '\n';
  out += std::string(out.size() - 1, '-') + '\n';

  const auto line = [&](std::string_view id, const std::string& counts, const Scores& s) {
    std::string l = fmt::format("{:<{}}  {}  {:>9.1f} {:>9.1f}", id, id_width, counts, 100.0 * s.precision,
                                100.0 * s.recall);
    if (show_standard) l += fmt::format(" {:>9.1f}", 100.0 * s.f1_standard);
    if (show_paper) l += fmt::format(" {:>9.1f}", 100.0 * s.f1_paper);
    return l + '\n';
  };
  const auto count_cells = [](const ConfusionCounts& c) {
    return fmt::format("{:>12} {:>12} {:>12} {:>14}", c.tp, c.fp, c.fn_, c.tn);
  };

  for (const auto& r : report.per_image) out += line(r.image_id, count_cells(r.counts), r.scores);
  out += line("micro", count_cells(report.micro.counts), report.micro.scores);
  out += line("macro", fmt::format("{:>12} {:>12} {:>12} {:>14}", "", "", "", ""), report.macro.scores);
  out += report.aggregation_note + '\n';
  return out;
}

}  // namespace stemtrace
