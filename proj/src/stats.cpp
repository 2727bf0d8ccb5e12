#include "segstab/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <boost/math/distributions/binomial.hpp>
#include <boost/math/distributions/students_t.hpp>

#include "segstab/error.hpp"

namespace segstab {

std::vector<double> average_ranks(std::span<const double> values) {
  const std::size_t n = values.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(n);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i + 1;
    while (j < n && values[order[j]] == values[order[i]]) ++j;
    // positions i..j-1 hold ranks i+1..j
    const double rank = 0.5 * static_cast<double>(i + 1 + j);
    for (std::size_t k = i; k < j; ++k) ranks[order[k]] = rank;
    i = j;
  }
  return ranks;
}

Correlation spearman(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw DataError("spearman: inputs differ in length");
  const std::size_t n = x.size();
  if (n < 3) throw DataError("spearman: need at least 3 observations");
  for (std::size_t i = 0; i < n; ++i) {
    if (std::isnan(x[i]) || std::isnan(y[i])) throw DataError("spearman: NaN input");
  }
  const auto rx = average_ranks(x);
  const auto ry = average_ranks(y);
  const double mean = 0.5 * static_cast<double>(n + 1);
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dx = rx[i] - mean;
    const double dy = ry[i] - mean;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0) throw DataError("spearman: constant input, correlation undefined");
  Correlation out;
  out.n = n;
  out.rho = std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
  if (std::abs(out.rho) >= 1.0) {
    out.p_value = 0.0;
    return out;
  }
  const double df = static_cast<double>(n - 2);
  const double t = out.rho * std::sqrt(df / (1.0 - out.rho * out.rho));
  const boost::math::students_t_distribution<double> dist(df);
  out.p_value = std::min(1.0, 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(t))));
  return out;
}

double sign_test_p(int successes, int trials) {
  if (trials < 1 || successes < 0 || successes > trials) throw DataError("sign_test_p: bad counts");
  if (successes == 0) return 1.0;
  const boost::math::binomial_distribution<double> dist(trials, 0.5);
  // P(X >= k) = 1 - P(X <= k-1)
  return boost::math::cdf(boost::math::complement(dist, successes - 1));
}

void validate(const RatingsTable& table) {
  for (const auto& r : table) {
    if (!(r.rating >= 1.0 && r.rating <= 5.0)) {
      throw DataError("rating outside [1,5] for video '" + r.video_id + "'");
    }
    if (r.accuracy_rank.has_value() != r.consistency_rank.has_value()) {
      throw DataError("qualification row needs both ranks (video '" + r.video_id + "')");
    }
    for (const auto& rank : {r.accuracy_rank, r.consistency_rank}) {
      if (rank && (*rank < 1 || *rank > 3)) {
        throw DataError("rank outside [1,3] for video '" + r.video_id + "'");
      }
    }
  }
}

namespace {

std::optional<double> try_spearman(std::span<const double> x, std::span<const double> y) {
  const auto constant = [](std::span<const double> v) {
    return std::all_of(v.begin(), v.end(), [&](double a) { return a == v.front(); });
  };
  if (constant(x) || constant(y)) return std::nullopt;
  return spearman(x, y).rho;
}

}  // namespace

std::vector<WorkerScore> score_workers(const RatingsTable& table, std::size_t min_clips) {
  validate(table);
  struct Columns {
    std::vector<double> ratings, accuracy, consistency;
  };
  std::map<std::string, Columns> by_worker;
  for (const auto& r : table) {
    if (!r.is_qualification()) continue;
    auto& c = by_worker[r.worker_id];
    c.ratings.push_back(r.rating);
    c.accuracy.push_back(*r.accuracy_rank);
    c.consistency.push_back(*r.consistency_rank);
  }
  std::vector<WorkerScore> scores;
  for (const auto& [worker, c] : by_worker) {
    WorkerScore s;
    s.worker_id = worker;
    s.clips = c.ratings.size();
    const bool ratings_constant = std::all_of(c.ratings.begin(), c.ratings.end(),
                                              [&](double v) { return v == c.ratings.front(); });
    if (s.clips >= std::max<std::size_t>(min_clips, 3) && !ratings_constant) {
      s.rho_consistency = try_spearman(c.ratings, c.consistency);
      s.rho_accuracy = try_spearman(c.ratings, c.accuracy);
      s.kept = s.rho_consistency.value_or(0.0) >= s.rho_accuracy.value_or(0.0);
    }
    scores.push_back(std::move(s));
  }
  return scores;
}

std::set<std::string> filter_workers(const RatingsTable& table, std::size_t min_clips) {
  std::set<std::string> kept;
  for (const auto& s : score_workers(table, min_clips)) {
    if (s.kept) kept.insert(s.worker_id);
  }
  return kept;
}

StudyReport aggregate_and_correlate(const RatingsTable& table, const MeasureTable& measures,
                                    double agreement_cutoff, const std::set<std::string>* qualified) {
  validate(table);
  if (std::isnan(agreement_cutoff) || agreement_cutoff < 0) {
    throw DataError("agreement cutoff must be non-negative");
  }
  std::set<std::string> videos;
  for (const auto& [name, values] : measures) {
    for (const auto& [video, value] : values) {
      if (!(value >= 0.0)) throw DataError("measure '" + name + "' is negative or NaN for '" + video + "'");
      videos.insert(video);
    }
  }

  std::map<std::string, std::vector<double>> ratings;
  for (const auto& r : table) {
    if (r.is_qualification() || !videos.contains(r.video_id)) continue;
    if (qualified && !qualified->contains(r.worker_id)) continue;
    ratings[r.video_id].push_back(r.rating);
  }

  StudyReport report;
  report.cutoff = agreement_cutoff;
  std::map<std::string, const VideoSummary*> summary_of;
  report.videos.reserve(videos.size());
  for (const auto& video : videos) {
    auto it = ratings.find(video);
    if (it == ratings.end()) {
      report.unrated_videos.push_back(video);
      continue;
    }
    const auto& r = it->second;
    VideoSummary s;
    s.video_id = video;
    s.ratings = r.size();
    s.mean = std::accumulate(r.begin(), r.end(), 0.0) / static_cast<double>(r.size());
    if (r.size() > 1) {
      double ss = 0.0;
      for (double v : r) ss += (v - s.mean) * (v - s.mean);
      s.stddev = std::sqrt(ss / static_cast<double>(r.size() - 1));
    }
    report.videos.push_back(std::move(s));
  }
  for (const auto& s : report.videos) summary_of[s.video_id] = &s;
  if (report.videos.empty()) throw DataError("no measured video has a qualified rating");

  for (const auto& [name, values] : measures) {
    std::vector<double> score_all, measure_all, score_kept, measure_kept;
    for (const auto& [video, value] : values) {
      auto it = summary_of.find(video);
      if (it == summary_of.end()) continue;
      const double consistency = -std::log(value);  // +inf for a zero measure
      score_all.push_back(it->second->mean);
      measure_all.push_back(consistency);
      if (it->second->stddev <= agreement_cutoff) {
        score_kept.push_back(it->second->mean);
        measure_kept.push_back(consistency);
      }
    }
    if (score_kept.empty()) throw DataError("agreement filter excluded every video for '" + name + "'");
    MeasureCorrelation mc;
    mc.measure = name;
    mc.all = spearman(score_all, measure_all);
    mc.filtered = spearman(score_kept, measure_kept);
    report.correlations.push_back(std::move(mc));
  }
  return report;
}

}  // namespace segstab
