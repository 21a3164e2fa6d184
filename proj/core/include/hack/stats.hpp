#pragma once

#include <span>
#include <vector>

namespace hack::stats {

double mean(std::span<const double> xs);
double variance(std::span<const double> xs);  // population
double coefficient_of_variation(std::span<const double> xs);

/// 1-based ranks, ties receive their average rank.
std::vector<double> average_ranks(std::span<const double> xs);

double pearson(std::span<const double> x, std::span<const double> y);
double spearman(std::span<const double> x, std::span<const double> y);

struct RankSumResult {
  double u = 0.0;        // Mann-Whitney U of the first sample
  double z = 0.0;
  double p_less = 1.0;   // one-sided p-value for "first sample tends to be smaller"
};

/// Wilcoxon rank-sum / Mann-Whitney test, normal approximation with tie and
/// continuity corrections.
RankSumResult rank_sum_test(std::span<const double> first, std::span<const double> second);

}  // namespace hack::stats
