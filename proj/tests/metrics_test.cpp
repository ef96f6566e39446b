#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "oracles.hpp"
#include "stemtrace/error.hpp"
#include "stemtrace/metrics.hpp"

namespace stemtrace {
namespace {

ConfusionCounts counts(std::uint64_t tp, std::uint64_t fp, std::uint64_t fn, std::uint64_t tn = 0) {
  return ConfusionCounts{tp, fp, fn, tn};
}

BinaryMask crop(const BinaryMask& m, std::size_t x0, std::size_t y0, std::size_t w, std::size_t h) {
  BinaryMask out(w, h);
  for (std::size_t y = 0; y < h; ++y)
    for (std::size_t x = 0; x < w; ++x) out.set(x, y, m.get(x0 + x, y0 + y));
  return out;
}

TEST(Confusion, IdenticalMasks) {
  BinaryMask m(8, 8);
  for (std::size_t i = 0; i < 10; ++i) m.set((i * 5) % 8, i / 2);
  ASSERT_EQ(m.count(), 10u);
  EXPECT_EQ(confusion(m, m), counts(10, 0, 0, 54));
}

TEST(Confusion, EmptyPrediction) {
  BinaryMask gt(8, 8), pred(8, 8);
  gt.set(1, 1);
  gt.set(7, 7);
  gt.set(3, 0);
  EXPECT_EQ(confusion(pred, gt), counts(0, 0, 3, 61));
}

TEST(Confusion, MatchesNaiveLoopOnRandomPairs) {
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> density(0.0, 1.0);
  for (int trial = 0; trial < 100; ++trial) {
    const BinaryMask pred = oracle::random_mask(rng, 64, 64, density(rng));
    const BinaryMask gt = oracle::random_mask(rng, 64, 64, density(rng));
    const auto c = confusion(pred, gt);
    EXPECT_EQ(c, oracle::naive_confusion(pred, gt));
    EXPECT_EQ(c.total(), 64u * 64u);
  }
  // Odd widths exercise the padding bits.
  for (int trial = 0; trial < 20; ++trial) {
    const BinaryMask pred = oracle::random_mask(rng, 131, 7, 0.5);
    const BinaryMask gt = oracle::random_mask(rng, 131, 7, 0.5);
    EXPECT_EQ(confusion(pred, gt), oracle::naive_confusion(pred, gt));
  }
}

TEST(Confusion, DimensionMismatchNamesBothShapes) {
  try {
    confusion(BinaryMask(8, 8), BinaryMask(8, 9));
    FAIL() << "expected an error";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::dimension_mismatch);
    const std::string what = e.what();
    EXPECT_NE(what.find("8x8"), std::string::npos) << what;
    EXPECT_NE(what.find("8x9"), std::string::npos) << what;
  }
}

TEST(Confusion, TilingSumsExactly) {
  std::mt19937_64 rng(22);
  const BinaryMask pred = oracle::random_mask(rng, 150, 90, 0.3);
  const BinaryMask gt = oracle::random_mask(rng, 150, 90, 0.3);
  const auto whole = confusion(pred, gt);
  ConfusionCounts sum;
  const std::size_t xs[] = {0, 37, 64, 150};
  const std::size_t ys[] = {0, 11, 90};
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 2; ++j) {
      const std::size_t w = xs[i + 1] - xs[i], h = ys[j + 1] - ys[j];
      sum += confusion(crop(pred, xs[i], ys[j], w, h), crop(gt, xs[i], ys[j], w, h));
    }
  EXPECT_EQ(sum, whole);
}

TEST(Confusion, SwappingArgumentsSwapsErrors) {
  std::mt19937_64 rng(23);
  for (int trial = 0; trial < 20; ++trial) {
    const BinaryMask a = oracle::random_mask(rng, 40, 40, 0.2);
    const BinaryMask b = oracle::random_mask(rng, 40, 40, 0.4);
    const auto ab = confusion(a, b);
    const auto ba = confusion(b, a);
    EXPECT_EQ(ab.tp, ba.tp);
    EXPECT_EQ(ab.tn, ba.tn);
    EXPECT_EQ(ab.fp, ba.fn_);
    EXPECT_EQ(ab.fn_, ba.fp);
    EXPECT_EQ(precision(ab), recall(ba));
  }
}

TEST(Scores, PrecisionExamples) {
  EXPECT_EQ(precision(counts(10, 0, 0)), 1.0);
  EXPECT_EQ(precision(counts(10, 10, 0)), 0.5);
  EXPECT_EQ(precision(counts(0, 0, 5)), 0.0);
}

TEST(Scores, RecallExamples) {
  EXPECT_EQ(recall(counts(10, 0, 0)), 1.0);
  EXPECT_EQ(recall(counts(10, 0, 30)), 0.25);
  EXPECT_EQ(recall(counts(0, 5, 0)), 0.0);
}

TEST(Scores, F1Examples) {
  const auto perfect = counts(7, 0, 0);
  EXPECT_EQ(f1(perfect, F1Formula::standard), 1.0);
  EXPECT_EQ(f1(perfect, F1Formula::paper), 0.5);
  const auto superset = counts(10, 10, 0);
  EXPECT_NEAR(f1(superset), 2.0 / 3.0, 1e-12);
  EXPECT_NEAR(f1(superset, F1Formula::paper), 1.0 / 3.0, 1e-12);
  EXPECT_EQ(f1(counts(0, 3, 4)), 0.0);
  EXPECT_EQ(f1(counts(0, 3, 4), F1Formula::paper), 0.0);
  EXPECT_EQ(f1(counts(0, 0, 0)), 0.0);
  EXPECT_EQ(f1_from(0.0, 0.0), 0.0);
}

TEST(Scores, SupersetFixtureByEnumeration) {
  BinaryMask gt(8, 8), pred(8, 8);
  for (std::size_t i = 0; i < 10; ++i) gt.set(i % 8, i / 8);
  for (std::size_t i = 0; i < 20; ++i) pred.set(i % 8, i / 8);
  const auto c = confusion(pred, gt);
  EXPECT_EQ(c, counts(10, 10, 0, 44));
  const auto s = scores(c);
  EXPECT_EQ(s.precision, 0.5);
  EXPECT_EQ(s.recall, 1.0);
  EXPECT_NEAR(s.f1_standard, 2.0 / 3.0, 1e-12);
  EXPECT_NEAR(s.f1_paper, 1.0 / 3.0, 1e-12);
}

TEST(Scores, BoundsAndHarmonicMean) {
  std::mt19937_64 rng(24);
  std::uniform_int_distribution<std::uint64_t> n(0, 1000);
  for (int trial = 0; trial < 1000; ++trial) {
    const auto c = counts(n(rng), n(rng), n(rng), n(rng));
    const auto s = scores(c);
    for (double v : {s.precision, s.recall, s.f1_standard}) {
      EXPECT_TRUE(std::isfinite(v));
      EXPECT_GE(v, 0.0);
      EXPECT_LE(v, 1.0);
    }
    EXPECT_GE(s.f1_paper, 0.0);
    EXPECT_LE(s.f1_paper, 0.5);
    EXPECT_NEAR(s.f1_standard, 2.0 * s.f1_paper, 1e-15);
    if (s.precision > 0 && s.recall > 0) {
      EXPECT_NEAR(s.f1_standard, 2.0 / (1.0 / s.precision + 1.0 / s.recall), 1e-12);
      EXPECT_GE(s.f1_standard, std::min(s.precision, s.recall) - 1e-15);
      EXPECT_LE(s.f1_standard, std::max(s.precision, s.recall) + 1e-15);
    }
  }
}

TEST(Scores, AddingTrueStemPixelNeverLowersRecall) {
  std::mt19937_64 rng(25);
  const BinaryMask gt = oracle::random_mask(rng, 32, 32, 0.3);
  BinaryMask pred = oracle::random_mask(rng, 32, 32, 0.1);
  double last = recall(confusion(pred, gt));
  for (std::size_t y = 0; y < 32; ++y)
    for (std::size_t x = 0; x < 32; ++x)
      if (gt.get(x, y) && !pred.get(x, y)) {
        pred.set(x, y);
        const double r = recall(confusion(pred, gt));
        EXPECT_GE(r, last);
        last = r;
      }
  EXPECT_EQ(last, 1.0);
}

TEST(Aggregate, MicroVersusMacro) {
  const std::vector<ConfusionCounts> two{counts(10, 10, 0), counts(0, 0, 10)};
  const auto micro = aggregate(two, Aggregation::micro);
  const auto macro = aggregate(two, Aggregation::macro);
  EXPECT_EQ(micro.scores.precision, 0.5);
  EXPECT_EQ(macro.scores.precision, 0.25);
  EXPECT_EQ(micro.mode, Aggregation::micro);
  EXPECT_EQ(macro.mode, Aggregation::macro);
  EXPECT_EQ(micro.counts, counts(10, 10, 10));
  EXPECT_EQ(micro.images, 2u);
  EXPECT_THROW(aggregate(std::vector<ConfusionCounts>{}, Aggregation::micro), Error);
}

TEST(Aggregate, SingleImageAndDuplicatesAreIdempotent) {
  const auto c = counts(13, 4, 9, 100);
  const auto single = scores(c);
  for (std::size_t copies : {1u, 5u}) {
    const std::vector<ConfusionCounts> list(copies, c);
    for (auto mode : {Aggregation::micro, Aggregation::macro}) {
      const auto a = aggregate(list, mode);
      EXPECT_NEAR(a.scores.precision, single.precision, 1e-15);
      EXPECT_NEAR(a.scores.recall, single.recall, 1e-15);
      EXPECT_NEAR(a.scores.f1_standard, single.f1_standard, 1e-15);
      EXPECT_NEAR(a.scores.f1_paper, single.f1_paper, 1e-15);
    }
  }
}

TEST(Report, SortedRowsAndMicroRecomputesFromCounts) {
  std::vector<ImageMetrics> rows;
  rows.push_back({"b", counts(10, 10, 0, 5), scores(counts(10, 10, 0, 5))});
  rows.push_back({"a", counts(0, 0, 10, 5), scores(counts(0, 0, 10, 5))});
  const auto report = build_report(rows, Aggregation::macro);
  ASSERT_EQ(report.per_image.size(), 2u);
  EXPECT_EQ(report.per_image[0].image_id, "a");
  EXPECT_EQ(report.headline, Aggregation::macro);
  EXPECT_FALSE(report.aggregation_note.empty());
  const auto again = scores(report.micro.counts);
  EXPECT_EQ(again.precision, report.micro.scores.precision);
  EXPECT_EQ(again.f1_standard, report.micro.scores.f1_standard);
  EXPECT_THROW(build_report({}), Error);
}

TEST(Report, CsvLayout) {
  std::vector<ImageMetrics> rows{{"img1", counts(10, 10, 0, 44), scores(counts(10, 10, 0, 44))}};
  const std::string csv = report_csv(build_report(rows));
  std::istringstream in(csv);
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, kReportCsvHeader);
  std::getline(in, line);
  EXPECT_EQ(line, "img1,10,10,0,44,0.500000000,1.000000000,0.666666667,0.333333333");
  std::getline(in, line);
  EXPECT_EQ(line, "micro,10,10,0,44,0.500000000,1.000000000,0.666666667,0.333333333");
  std::getline(in, line);
  EXPECT_EQ(line, "macro,,,,,0.500000000,1.000000000,0.666666667,0.333333333");
  EXPECT_FALSE(std::getline(in, line));
}

TEST(Report, TableShowsPercentages) {
  std::vector<ImageMetrics> rows{{"img1", counts(10, 10, 0, 44), scores(counts(10, 10, 0, 44))}};
  const auto report = build_report(rows);
  const std::string both = report_table(report, F1Columns::both);
  EXPECT_NE(both.find("66.7"), std::string::npos) << both;
  EXPECT_NE(both.find("33.3"), std::string::npos) << both;
  EXPECT_NE(both.find("50.0"), std::string::npos) << both;
  const std::string standard = report_table(report, F1Columns::standard);
  EXPECT_EQ(standard.find("33.3"), std::string::npos) << standard;
  const std::string paper = report_table(report, F1Columns::paper);
  EXPECT_EQ(paper.find("66.7"), std::string::npos) << paper;
}

TEST(EvaluatePair, CarriesIdAndScores) {
  BinaryMask gt(4, 4), pred(4, 4);
  gt.set(0, 0);
  pred.set(0, 0);
  pred.set(1, 0);
  const auto m = evaluate_pair("x", pred, gt);
  EXPECT_EQ(m.image_id, "x");
  EXPECT_EQ(m.counts, counts(1, 1, 0, 14));
  EXPECT_EQ(m.scores.precision, 0.5);
}

}  // namespace
}  // namespace stemtrace
