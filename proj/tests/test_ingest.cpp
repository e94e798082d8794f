// SPDX-FileCopyrightText: © 2026 netagg authors
//
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <sstream>

#include "netagg/ingest.hpp"

namespace netagg {
namespace {

SparseDataset parse(const std::string& text) {
  std::istringstream in(text);
  return parse_libsvm(in);
}

TEST(Libsvm, ParsesBasicLine) {
  auto ds = parse("1 1:0.5 3:1.0\n");
  ASSERT_EQ(ds.rows.size(), 1u);
  EXPECT_EQ(ds.features, 3u);
  EXPECT_EQ(ds.rows[0].label, 1.0);
  ASSERT_EQ(ds.rows[0].entries.size(), 2u);
  EXPECT_EQ(ds.rows[0].entries[0], (std::pair<size_t, double>{0, 0.5}));
  EXPECT_EQ(ds.rows[0].entries[1], (std::pair<size_t, double>{2, 1.0}));
}

TEST(Libsvm, PlusLabelAndScientificNotation) {
  auto ds = parse("+1 2:3e-1\n");
  EXPECT_EQ(ds.rows[0].label, 1.0);
  EXPECT_EQ(ds.rows[0].entries[0].first, 1u);
  EXPECT_DOUBLE_EQ(ds.rows[0].entries[0].second, 0.3);
}

TEST(Libsvm, OrderPreservingWithCommentsAndBlankLines) {
  auto ds = parse("# header\n-1 1:1\n\n1 2:2 # trailing\n0 1:3\n");
  ASSERT_EQ(ds.rows.size(), 3u);
  EXPECT_EQ(ds.rows[0].label, -1.0);
  EXPECT_EQ(ds.rows[1].label, 1.0);
  EXPECT_EQ(ds.rows[2].entries[0].second, 3.0);
}

TEST(Libsvm, Errors) {
  EXPECT_THROW(parse(""), DataError);
  EXPECT_THROW(parse("\n# only comments\n"), DataError);
  try {
    parse("1 1:0.5\nabc 1:1\n");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 2u);
  }
  EXPECT_THROW(parse("1 0:1\n"), ParseError);
  EXPECT_THROW(parse("1 2:1 1:1\n"), ParseError);
  EXPECT_THROW(parse("1 2\n"), ParseError);
  EXPECT_THROW(parse("1 2:x\n"), ParseError);
  EXPECT_THROW(parse_libsvm(std::filesystem::path("/nonexistent/file.svm")), DataError);
}

SparseDataset column(std::initializer_list<double> values) {
  SparseDataset ds;
  ds.features = 1;
  for (double v : values) ds.rows.push_back({1.0, {{0, v}}});
  return ds;
}

TEST(Quantize, MinMaxExamples) {
  auto a = normalize_quantize(column({0, 2, 4}), LossKind::kSquared);
  EXPECT_EQ(a.features_u8, (std::vector<uint8_t>{0, 128, 255}));
  auto b = normalize_quantize(column({3, 3, 3}), LossKind::kSquared);
  EXPECT_EQ(b.features_u8, (std::vector<uint8_t>{0, 0, 0}));
  auto c = normalize_quantize(column({0, 1, 1, 0}), LossKind::kSquared);
  EXPECT_EQ(c.features_u8, (std::vector<uint8_t>{0, 255, 255, 0}));
}

TEST(Quantize, Idempotent) {
  SparseDataset ds;
  ds.features = 3;
  ds.rows = {{1, {{0, 0.3}, {2, -5}}}, {0, {{1, 7}}}, {1, {{0, 1.9}, {1, 2}, {2, 4}}}};
  auto once = normalize_quantize(ds, LossKind::kSquared);
  auto twice = normalize_quantize(to_sparse(once), LossKind::kSquared);
  EXPECT_EQ(once.features_u8, twice.features_u8);
  EXPECT_EQ(once.labels, twice.labels);
}

TEST(Quantize, Labels) {
  SparseDataset ds;
  ds.features = 1;
  ds.rows = {{-1, {{0, 1}}}, {1, {{0, 2}}}};
  auto l = normalize_quantize(ds, LossKind::kLogistic);
  EXPECT_EQ(l.labels, (std::vector<FixedQ16>{FixedQ16{0}, FixedQ16{65536}}));
  auto s = normalize_quantize(ds, LossKind::kSquared);
  EXPECT_EQ(s.labels, (std::vector<FixedQ16>{FixedQ16{-65536}, FixedQ16{65536}}));
  ds.rows.push_back({3, {}});
  EXPECT_THROW(normalize_quantize(ds, LossKind::kLogistic), DataError);
}

TEST(Quantize, RejectsNonFinite) {
  EXPECT_THROW(normalize_quantize(column({0, std::numeric_limits<double>::quiet_NaN()}), LossKind::kSquared),
               DataError);
  EXPECT_THROW(normalize_quantize(column({0, std::numeric_limits<double>::infinity()}), LossKind::kSquared),
               DataError);
}

TEST(Partition, ModelSpans) {
  auto even = plan_partitions(256, 10, 2, 2, PartitionMode::kModel);
  EXPECT_EQ(even.spans, (std::vector<FeatureSpan>{{0, 64}, {64, 128}, {128, 192}, {192, 256}}));
  auto uneven = plan_partitions(320, 10, 2, 2, PartitionMode::kModel);
  EXPECT_EQ(uneven.spans, (std::vector<FeatureSpan>{{0, 128}, {128, 192}, {192, 256}, {256, 320}}));
  auto ragged = plan_partitions(100, 10, 2, 1, PartitionMode::kModel);
  EXPECT_EQ(ragged.spans, (std::vector<FeatureSpan>{{0, 64}, {64, 100}}));
  EXPECT_THROW(plan_partitions(128, 10, 2, 2, PartitionMode::kModel), PartitionError);
}

TEST(Partition, DataSpans) {
  auto p = plan_partitions(64, 100, 4, 1, PartitionMode::kData);
  EXPECT_EQ(p.spans, (std::vector<FeatureSpan>{{0, 25}, {25, 50}, {50, 75}, {75, 100}}));
  auto q = plan_partitions(64, 10, 4, 1, PartitionMode::kData);
  EXPECT_EQ(q.spans, (std::vector<FeatureSpan>{{0, 3}, {3, 6}, {6, 8}, {8, 10}}));
}

TEST(Partition, CoverageProperty) {
  for (size_t d = 64; d < 2000; d += 37) {
    for (size_t m : {1u, 2u, 3u}) {
      for (size_t n : {1u, 2u}) {
        const size_t chunks = (d + 63) / 64;
        if (chunks < m * n) continue;
        auto p = plan_partitions(d, 1, m, n, PartitionMode::kModel);
        ASSERT_EQ(p.spans.size(), m * n);
        size_t at = 0, lo = SIZE_MAX, hi = 0;
        for (auto s : p.spans) {
          ASSERT_EQ(s.begin, at);
          ASSERT_EQ(s.begin % 64, 0u);
          at = s.end;
          if (s.end == d) continue;
          lo = std::min(lo, s.size());
          hi = std::max(hi, s.size());
        }
        ASSERT_EQ(at, d);
        ASSERT_LE(hi - lo, 64u);
      }
    }
  }
}

TEST(Synthetic, DeterministicAndShaped) {
  SyntheticSpec spec{.samples = 64, .features = 128, .seed = 3};
  auto a = make_synthetic(spec);
  auto b = make_synthetic(spec);
  ASSERT_EQ(a.rows.size(), 64u);
  EXPECT_EQ(a.features, 128u);
  for (size_t i = 0; i < a.rows.size(); ++i) {
    EXPECT_EQ(a.rows[i].label, b.rows[i].label);
    EXPECT_EQ(a.rows[i].entries, b.rows[i].entries);
    EXPECT_TRUE(a.rows[i].label == 0.0 || a.rows[i].label == 1.0);
  }
}

}  // namespace
}  // namespace netagg
