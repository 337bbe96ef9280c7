#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "rwre/hashing.hpp"

namespace rwre {

struct MeanSe {
  double mean = 0;
  double se = 0;
  std::int64_t n = 0;
};

MeanSe mean_se(std::span<const double> xs);

// Normal-approximation interval for a binomial proportion; zero counts use
// the rule-of-three upper bound instead of a degenerate interval.
struct BinomialCi {
  double p_hat = 0;
  double lo = 0;
  double hi = 0;
  bool rule_of_three = false;
};
BinomialCi binomial_ci(std::int64_t successes, std::int64_t trials, double z);

double median_of(std::vector<double> xs);

// Percentile bootstrap for the mean; fixed resample count, seeded draws.
struct BootstrapCi {
  double lo = 0;
  double hi = 0;
};
BootstrapCi bootstrap_mean_ci(std::span<const double> xs, std::uint64_t seed,
                              int resamples = 1000, double coverage = 0.95);

struct LineFit {
  double slope = 0;
  double intercept = 0;
};
LineFit least_squares(std::span<const double> xs, std::span<const double> ys);

}  // namespace rwre
