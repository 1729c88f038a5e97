#pragma once

#include <span>
#include <vector>

namespace saint {

double mean(std::span<const double> x);
// Sample standard deviation (n - 1); 0 for fewer than two values.
double stddev(std::span<const double> x);

// Average ranks (1-based), ties share the mean of their positions.
std::vector<double> ranks(std::span<const double> x);
double pearson(std::span<const double> x, std::span<const double> y);
double spearman(std::span<const double> x, std::span<const double> y);

struct PairedTTest {
  double t = 0.0;
  double df = 0.0;
  double p_less = 1.0;     // H1: mean(a - b) < 0
  double p_greater = 1.0;  // H1: mean(a - b) > 0
};

// Paired Student t-test on differences a_i - b_i. When every difference is
// identical the statistic is +-infinity (or 0 when they are all zero).
PairedTTest paired_t_test(std::span<const double> a, std::span<const double> b);

double percentile(std::vector<double> x, double q);  // linear interpolation, q in [0, 1]

}  // namespace saint
