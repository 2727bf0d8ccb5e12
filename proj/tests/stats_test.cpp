#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <random>

#include "segstab/error.hpp"
#include "segstab/stats.hpp"
#include "testing.hpp"

namespace segstab {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

TEST(Ranks, TiesShareMeanRank) {
  const std::vector<double> v{10, 20, 20, 5, 20};
  EXPECT_EQ(average_ranks(v), (std::vector<double>{2, 4, 4, 1, 4}));
}

TEST(Spearman, Examples) {
  const std::vector<double> x{1, 2, 3, 4, 5};
  EXPECT_DOUBLE_EQ(spearman(x, std::vector<double>{2, 4, 6, 8, 10}).rho, 1.0);
  EXPECT_DOUBLE_EQ(spearman(x, std::vector<double>{5, 4, 3, 2, 1}).rho, -1.0);
  EXPECT_NEAR(spearman(x, std::vector<double>{2, 1, 4, 3, 5}).rho, 0.8, 1e-12);
  EXPECT_EQ(spearman(x, std::vector<double>{2, 4, 6, 8, 10}).p_value, 0.0);
}

TEST(Spearman, PValueFromStudentT) {
  // rho = 0.8, n = 5: t = 0.8 * sqrt(3 / 0.36), two-sided with 3 dof
  const auto c = spearman(std::vector<double>{1, 2, 3, 4, 5}, std::vector<double>{2, 1, 4, 3, 5});
  EXPECT_NEAR(c.p_value, 0.10408803866182788, 1e-9);
  EXPECT_EQ(c.n, 5u);
}

TEST(Spearman, Errors) {
  const std::vector<double> x{1, 2, 3};
  EXPECT_THROW(spearman(x, std::vector<double>{4, 4, 4}), DataError);
  EXPECT_THROW(spearman(x, std::vector<double>{1, 2}), DataError);
  EXPECT_THROW(spearman(std::vector<double>{1, 2}, std::vector<double>{1, 2}), DataError);
}

TEST(Spearman, SymmetryAndMonotoneInvariance) {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> n(0, 1);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> x(15), y(15), ex(15), ny(15);
    for (int i = 0; i < 15; ++i) {
      x[i] = n(rng);
      y[i] = x[i] + n(rng);
      ex[i] = std::exp(3 * x[i]);
      ny[i] = -y[i];
    }
    const double r = spearman(x, y).rho;
    EXPECT_DOUBLE_EQ(spearman(y, x).rho, r);
    EXPECT_NEAR(spearman(ex, y).rho, r, 1e-12);
    EXPECT_NEAR(spearman(x, ny).rho, -r, 1e-12);
    EXPECT_LE(std::abs(r), 1.0);
  }
}

TEST(SignTest, Tail) {
  EXPECT_NEAR(sign_test_p(15, 20), 21700.0 / 1048576.0, 1e-12);
  EXPECT_DOUBLE_EQ(sign_test_p(0, 10), 1.0);
  EXPECT_NEAR(sign_test_p(10, 10), 1.0 / 1024, 1e-15);
  EXPECT_THROW(sign_test_p(5, 4), DataError);
}

RatingsTable grid_ratings(const std::string& worker, auto rating_of) {
  RatingsTable t;
  for (int a = 1; a <= 3; ++a)
    for (int c = 1; c <= 3; ++c)
      t.push_back({.video_id = "q" + std::to_string(a) + std::to_string(c), .worker_id = worker,
                   .rating = static_cast<double>(rating_of(a, c)), .accuracy_rank = a, .consistency_rank = c});
  return t;
}

TEST(FilterWorkers, Examples) {
  RatingsTable table = grid_ratings("cons", [](int, int c) { return 2 * c - 1; });
  for (auto& r : grid_ratings("acc", [](int a, int) { return 2 * a - 1; })) table.push_back(r);
  for (auto& r : grid_ratings("flat", [](int, int) { return 3; })) table.push_back(r);
  const auto kept = filter_workers(table);
  EXPECT_EQ(kept, (std::set<std::string>{"cons"}));

  const auto scores = score_workers(table);
  ASSERT_EQ(scores.size(), 3u);
  EXPECT_EQ(scores[0].worker_id, "acc");
  EXPECT_DOUBLE_EQ(*scores[0].rho_accuracy, 1.0);
  EXPECT_DOUBLE_EQ(*scores[0].rho_consistency, 0.0);
  EXPECT_FALSE(scores[2].rho_consistency.has_value());  // "flat"
}

TEST(FilterWorkers, TooFewClipsRejected) {
  RatingsTable t = grid_ratings("w", [](int, int c) { return c; });
  t.resize(2);
  EXPECT_TRUE(filter_workers(t).empty());
  EXPECT_TRUE(filter_workers(grid_ratings("w", [](int, int c) { return c; }), 10).empty());
}

TEST(FilterWorkers, RecoversAttentiveMixture) {
  std::mt19937_64 rng(2024);
  const auto pop = testing::simulate_workers(rng, 100, 0.7, 0.6);
  const auto kept = filter_workers(pop.table);
  int agree = 0;
  for (int k = 0; k < 100; ++k) {
    const std::string id = "w" + std::to_string(k);
    agree += kept.contains(id) == pop.attentive.contains(id);
  }
  EXPECT_GE(agree, 90);
}

TEST(Validate, RejectsBadRows) {
  EXPECT_THROW(validate({{.video_id = "v", .worker_id = "w", .rating = 6}}), DataError);
  EXPECT_THROW(validate({{.video_id = "v", .worker_id = "w", .rating = 3, .accuracy_rank = 2}}), DataError);
  EXPECT_THROW(validate({{.video_id = "v", .worker_id = "w", .rating = 3, .accuracy_rank = 4, .consistency_rank = 1}}),
               DataError);
  EXPECT_NO_THROW(validate({{.video_id = "v", .worker_id = "w", .rating = 1}}));
}

TEST(Aggregate, SingleWorkerPerfectOrder) {
  RatingsTable t;
  MeasureTable m;
  for (int v = 0; v < 5; ++v) {
    const std::string id = "v" + std::to_string(v);
    t.push_back({.video_id = id, .worker_id = "w", .rating = 1.0 + v});
    m["e"][id] = 1.0 / (1.0 + v);
  }
  const auto report = aggregate_and_correlate(t, m, kInf);
  ASSERT_EQ(report.correlations.size(), 1u);
  EXPECT_DOUBLE_EQ(report.correlations[0].all.rho, 1.0);
  EXPECT_DOUBLE_EQ(report.correlations[0].filtered.rho, 1.0);
}

TEST(Aggregate, InfiniteCutoffEqualsUnfiltered) {
  std::mt19937_64 rng(3);
  const auto study = testing::simulate_study(rng, 30, 6, 0.3);
  const auto report = aggregate_and_correlate(study.table, study.measures, kInf);
  EXPECT_EQ(report.correlations[0].all.rho, report.correlations[0].filtered.rho);
  EXPECT_EQ(report.correlations[0].all.n, 30u);
}

TEST(Aggregate, SampleStandardDeviation) {
  RatingsTable t{{.video_id = "a", .worker_id = "1", .rating = 1}, {.video_id = "a", .worker_id = "2", .rating = 3},
                 {.video_id = "b", .worker_id = "1", .rating = 4}, {.video_id = "c", .worker_id = "1", .rating = 2},
                 {.video_id = "d", .worker_id = "1", .rating = 5}};
  MeasureTable m{{"e", {{"a", 0.5}, {"b", 0.2}, {"c", 0.7}, {"d", 0.1}, {"z", 0.3}}}};
  const auto report = aggregate_and_correlate(t, m, 1.0);
  ASSERT_EQ(report.videos.size(), 4u);
  EXPECT_DOUBLE_EQ(report.videos[0].mean, 2.0);
  EXPECT_DOUBLE_EQ(report.videos[0].stddev, std::sqrt(2.0));
  EXPECT_EQ(report.videos[1].stddev, 0.0);
  EXPECT_EQ(report.unrated_videos, std::vector<std::string>{"z"});
  EXPECT_EQ(report.correlations[0].filtered.n, 3u);
}

TEST(Aggregate, QualificationRowsAndUnqualifiedWorkersIgnored) {
  RatingsTable t = grid_ratings("w", [](int, int c) { return c; });
  for (int v = 0; v < 4; ++v) {
    const std::string id = "v" + std::to_string(v);
    t.push_back({.video_id = id, .worker_id = "good", .rating = 1.0 + v});
    t.push_back({.video_id = id, .worker_id = "bad", .rating = 4.0 - v});
  }
  MeasureTable m;
  for (int v = 0; v < 4; ++v) m["e"]["v" + std::to_string(v)] = std::exp(-v);
  const std::set<std::string> only_good{"good"};
  EXPECT_DOUBLE_EQ(aggregate_and_correlate(t, m, kInf, &only_good).correlations[0].all.rho, 1.0);
  const std::set<std::string> nobody{"x"};
  EXPECT_THROW(aggregate_and_correlate(t, m, kInf, &nobody), DataError);
}

}  // namespace
}  // namespace segstab
