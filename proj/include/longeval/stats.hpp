#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace longeval {

struct CorrelationResult {
  double pearson_r = 0.0;
  double spearman_rho = 0.0;
  std::size_t n = 0;
};

// Sample Pearson correlation. Throws StatsError on mismatched lengths, fewer
// than two points, or a constant input.
double pearson(std::span<const double> xs, std::span<const double> ys);

// 1-based ranks; tied values share the mean of the ranks they span.
std::vector<double> average_ranks(std::span<const double> values);

// Pearson correlation of the average-rank transforms.
double spearman(std::span<const double> xs, std::span<const double> ys);

CorrelationResult correlate(std::span<const double> xs, std::span<const double> ys);

struct LengthStats {
  std::size_t n = 0;
  double mean = 0.0;
  double p25 = 0.0;
  double p75 = 0.0;
};

// Nearest-rank percentile (rank = ceil(p/100 * n)) of unsorted values.
double nearest_rank_percentile(std::span<const double> values, double p);

// Throws StatsError for an empty input.
LengthStats length_stats(std::span<const double> values);

}  // namespace longeval
