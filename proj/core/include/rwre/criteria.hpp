#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "rwre/environment.hpp"
#include "rwre/solver.hpp"
#include "rwre/walk.hpp"

namespace rwre {

enum class TGammaVerdict { ConsistentWithTGamma, Inconsistent, Inconclusive };

struct TGammaCell {
  double L = 0;
  DirectionalReport report;
  double normalized = 0;     // L^{-gamma} log p_hat (rule-of-three bound at zero counts)
  double normalized_lo = 0;  // one-sided at zero counts: -inf encoded as -HUGE_VAL
  double normalized_hi = 0;
};

struct TGammaReport {
  double gamma = 0;
  Vec l{};
  double b = 1;
  std::vector<TGammaCell> cells;
  double trend_slope = 0;
  TGammaVerdict verdict = TGammaVerdict::Inconclusive;
};

// Empirical condition (T)_gamma over an L grid. Consistent when every
// normalized value is negative at 3 sigma and no adjacent pair shows a
// 3-sigma certified increase; inconsistent when a cell's CI contains zero or
// an increase is certified; otherwise inconclusive.
TGammaReport t_gamma_estimate(const EnvironmentModel& model, std::uint64_t master_seed,
                              const Vec& l, double b, double gamma,
                              const std::vector<double>& L_grid, std::int64_t M,
                              std::int64_t safety_cap = 50'000'000, int workers = 1);

struct TailMomentReport {
  double gamma = 0;
  double c = 0;
  double statistic = 0;     // mean of exp(c radius^gamma) over uncensored replicas
  std::int64_t used = 0;
  std::int64_t censored = 0;
  std::vector<std::int64_t> histogram;  // radius counts, index = radius
};

// Empirical E_0 exp(c (X^{*(1)})^gamma) from M first-regeneration radii.
TailMomentReport regeneration_tail(const EnvironmentModel& model, std::uint64_t master_seed,
                                   double gamma, double c, std::int64_t M,
                                   std::int64_t horizon, int workers = 1);

struct CriterionConstants {
  double c1 = 1.0;
  double c2 = 4.0;
};

// Box specification B(R, L-2, L+2, Ltilde). Slab mode realizes the same
// extents as a periodic-transversal slab so the e_1-marginal ruin formula
// applies; box mode uses the rotated box with R(e_1) = l.
struct CriterionSpec {
  double L = 8;
  double Ltilde = 5;
  bool slab_mode = true;
  std::array<Vec, kMaxDim> rotation{};  // used when slab_mode is false
  int d = 2;

  Region make_region() const;
  void validate(const CriterionConstants& k) const;  // SpecInvalid
};

struct CriterionReport {
  CriterionSpec spec;
  double a = 0;
  double e_rho_a = 0;
  double ci_half = 0;       // normal-approximation half width on E rho^a
  double value = 0;         // c1 (log 1/kappa)^{3(d-1)} Ltilde^{d-1} L^{3(d-1)+1} E rho^a
  double value_ci_half = 0;
  bool pass = false;        // value + value_ci_half < 1
  CriterionConstants constants;
  std::int64_t M = 0;
  bool heavy_tailed = false;
  double median_rho_a = 0;
  double boot_lo = 0, boot_hi = 0;  // bootstrap CI when heavy tailed
};

CriterionReport effective_criterion_evaluate(const EnvironmentModel& model,
                                             std::uint64_t master_seed,
                                             const CriterionSpec& spec, double a,
                                             std::int64_t M, const CriterionConstants& constants,
                                             int workers = 1);

// Minimizes the criterion value over L_grid x (a_grid plus L^{-epsilon} for
// each configured epsilon); ties break toward smaller L, then smaller a.
CriterionReport effective_criterion_search(const EnvironmentModel& model,
                                           std::uint64_t master_seed,
                                           const std::vector<double>& L_grid,
                                           const std::vector<double>& a_grid,
                                           const std::vector<double>& epsilons, double Ltilde,
                                           std::int64_t M, const CriterionConstants& constants,
                                           int workers = 1,
                                           std::vector<CriterionReport>* all = nullptr);

struct BandParams {
  double gamma = 0.5;
  int n = 3;
  std::vector<double> beta;  // beta_1 = gamma < ... < beta_n = 1
  std::vector<double> k;     // k_1..k_n > 0
  double epsilon = 0.5;      // a = L^{-epsilon}
  double L = 8;
};

struct BandDecomposition {
  BandParams params;
  double a = 0;
  std::vector<double> thresholds;  // e^{-k_j L^{beta_j}}, decreasing
  std::vector<double> masses;      // E_0 .. E_n, exact partition of e_rho_a
  std::vector<std::int64_t> counts;
  double e_rho_a = 0;              // sum of band masses, bit-identical
  double delta1_hat = 0;           // -L^{-gamma} log(mean wrong-exit mass)
};

// Assigns each (h, rho) sample to its band by the h thresholds and averages
// rho^a per band; the reported E rho^a is the sum of the band masses, so the
// partition identity holds bit-exactly.
BandDecomposition rho_band_decomposition(
    const std::vector<std::pair<double, double>>& h_rho_samples, const BandParams& params);

const char* verdict_name(TGammaVerdict v);

}  // namespace rwre
