#include "rwre/stats.hpp"

#include <algorithm>
#include <cmath>

#include "rwre/error.hpp"

namespace rwre {

MeanSe mean_se(std::span<const double> xs) {
  MeanSe out;
  out.n = static_cast<std::int64_t>(xs.size());
  if (out.n == 0) return out;
  double s = 0;
  for (double x : xs) s += x;
  out.mean = s / static_cast<double>(out.n);
  if (out.n > 1) {
    double v = 0;
    for (double x : xs) v += (x - out.mean) * (x - out.mean);
    v /= static_cast<double>(out.n - 1);
    out.se = std::sqrt(v / static_cast<double>(out.n));
  }
  return out;
}

BinomialCi binomial_ci(std::int64_t successes, std::int64_t trials, double z) {
  require(trials >= 1, Errc::BadParameter, "binomial_ci needs trials >= 1");
  require(successes >= 0 && successes <= trials, Errc::BadParameter,
          "successes outside [0, trials]");
  BinomialCi ci;
  ci.p_hat = static_cast<double>(successes) / static_cast<double>(trials);
  if (successes == 0) {
    ci.lo = 0.0;
    ci.hi = 3.0 / static_cast<double>(trials);
    ci.rule_of_three = true;
    return ci;
  }
  if (successes == trials) {
    ci.hi = 1.0;
    ci.lo = 1.0 - 3.0 / static_cast<double>(trials);
    ci.rule_of_three = true;
    return ci;
  }
  double se = std::sqrt(ci.p_hat * (1.0 - ci.p_hat) / static_cast<double>(trials));
  ci.lo = std::max(0.0, ci.p_hat - z * se);
  ci.hi = std::min(1.0, ci.p_hat + z * se);
  return ci;
}

double median_of(std::vector<double> xs) {
  require(!xs.empty(), Errc::BadParameter, "median of empty sample");
  std::sort(xs.begin(), xs.end());
  std::size_t n = xs.size();
  return n % 2 == 1 ? xs[n / 2] : 0.5 * (xs[n / 2 - 1] + xs[n / 2]);
}

BootstrapCi bootstrap_mean_ci(std::span<const double> xs, std::uint64_t seed, int resamples,
                              double coverage) {
  require(!xs.empty(), Errc::BadParameter, "bootstrap of empty sample");
  std::vector<double> means;
  means.reserve(static_cast<std::size_t>(resamples));
  const std::uint64_t n = xs.size();
  std::uint64_t key = hash_combine(seed, tag::kBootstrap);
  for (int r = 0; r < resamples; ++r) {
    HashStream stream(hash_combine(key, static_cast<std::uint64_t>(r)));
    double s = 0;
    for (std::uint64_t i = 0; i < n; ++i)
      s += xs[static_cast<std::size_t>(stream.next_u64() % n)];
    means.push_back(s / static_cast<double>(n));
  }
  std::sort(means.begin(), means.end());
  double alpha = (1.0 - coverage) / 2.0;
  auto pick = [&](double q) {
    double pos = q * static_cast<double>(means.size() - 1);
    std::size_t i = static_cast<std::size_t>(pos);
    double frac = pos - static_cast<double>(i);
    return i + 1 < means.size() ? means[i] * (1 - frac) + means[i + 1] * frac : means[i];
  };
  return BootstrapCi{pick(alpha), pick(1.0 - alpha)};
}

LineFit least_squares(std::span<const double> xs, std::span<const double> ys) {
  require(xs.size() == ys.size() && xs.size() >= 2, Errc::BadParameter,
          "least_squares needs >= 2 points");
  double n = static_cast<double>(xs.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sx += xs[i];
    sy += ys[i];
    sxx += xs[i] * xs[i];
    sxy += xs[i] * ys[i];
  }
  double denom = n * sxx - sx * sx;
  require(denom != 0.0, Errc::BadParameter, "degenerate abscissae in least_squares");
  LineFit f;
  f.slope = (n * sxy - sx * sy) / denom;
  f.intercept = (sy - f.slope * sx) / n;
  return f;
}

}  // namespace rwre
