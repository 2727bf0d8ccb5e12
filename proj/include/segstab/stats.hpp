#pragma once

#include <limits>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

namespace segstab {

struct Correlation {
  double rho = 0.0;
  double p_value = 1.0;
  std::size_t n = 0;
};

/// Fractional ranks starting at 1; tied values share the mean of their ranks.
std::vector<double> average_ranks(std::span<const double> values);

/// Spearman rank correlation with a two-sided p-value from the t approximation
/// t = rho sqrt((n-2) / (1-rho^2)) against Student-t with n-2 degrees of freedom.
/// Throws DataError for n < 3, unequal lengths or a constant input.
Correlation spearman(std::span<const double> x, std::span<const double> y);

/// One-sided sign test: P(X >= successes) for X ~ Binomial(trials, 1/2).
double sign_test_p(int successes, int trials);

/// One Likert rating. Qualification clips also carry their corruption ranks
/// (3 = uncorrupted, 1 = strongest corruption).
struct Rating {
  std::string video_id;
  std::string worker_id;
  double rating = 0.0;
  std::optional<int> accuracy_rank;
  std::optional<int> consistency_rank;

  bool is_qualification() const { return accuracy_rank.has_value(); }
};

using RatingsTable = std::vector<Rating>;

/// Throws DataError on ratings outside [1,5], ranks outside [1,3] or a row
/// with only one of the two ranks.
void validate(const RatingsTable& table);

struct WorkerScore {
  std::string worker_id;
  std::size_t clips = 0;
  std::optional<double> rho_consistency;  // empty when undefined
  std::optional<double> rho_accuracy;
  bool kept = false;
};

/// Qualification verdict per worker, sorted by worker id. A worker is kept when
/// rho(ratings, consistency_rank) >= rho(ratings, accuracy_rank); an undefined
/// correlation (constant ranks) counts as 0. Workers with fewer than
/// `min_clips` qualification ratings or constant ratings are rejected.
std::vector<WorkerScore> score_workers(const RatingsTable& table, std::size_t min_clips = 3);

std::set<std::string> filter_workers(const RatingsTable& table, std::size_t min_clips = 3);

/// measure name -> video id -> value (an inconsistency: lower is better).
using MeasureTable = std::map<std::string, std::map<std::string, double>>;

struct VideoSummary {
  std::string video_id;
  std::size_t ratings = 0;
  double mean = 0.0;
  double stddev = 0.0;  // sample standard deviation, 0 for a single rating
};

struct MeasureCorrelation {
  std::string measure;
  Correlation all;
  Correlation filtered;  // videos with stddev <= cutoff only
};

struct StudyReport {
  double cutoff = std::numeric_limits<double>::infinity();
  std::vector<VideoSummary> videos;
  std::vector<std::string> unrated_videos;
  std::vector<MeasureCorrelation> correlations;
};

/// Mean rating per non-qualification video (restricted to `qualified` workers
/// when given) correlated against -log(measure), so that a rating scale where
/// higher means more consistent yields positive rho. Both the unfiltered and
/// the agreement-filtered correlations are reported.
StudyReport aggregate_and_correlate(const RatingsTable& table, const MeasureTable& measures,
                                    double agreement_cutoff,
                                    const std::set<std::string>* qualified = nullptr);

}  // namespace segstab
