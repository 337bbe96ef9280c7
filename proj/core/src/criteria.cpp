#include "rwre/criteria.hpp"

#include <algorithm>
#include <cmath>

#include "rwre/error.hpp"
#include "rwre/hashing.hpp"
#include "rwre/parallel.hpp"
#include "rwre/stats.hpp"

namespace rwre {

const char* verdict_name(TGammaVerdict v) {
  switch (v) {
    case TGammaVerdict::ConsistentWithTGamma: return "consistent_with_T_gamma";
    case TGammaVerdict::Inconsistent: return "inconsistent";
    case TGammaVerdict::Inconclusive: return "inconclusive";
  }
  return "?";
}

TGammaReport t_gamma_estimate(const EnvironmentModel& model, std::uint64_t master_seed,
                              const Vec& l, double b, double gamma,
                              const std::vector<double>& L_grid, std::int64_t M,
                              std::int64_t safety_cap, int workers) {
  require(gamma > 0.0 && gamma < 1.0, Errc::BadParameter, "gamma must lie in (0,1)");
  require(b > 0.0, Errc::BadParameter, "b must be positive");
  require(!L_grid.empty(), Errc::BadParameter, "L grid is empty");
  for (std::size_t i = 1; i < L_grid.size(); ++i)
    require(L_grid[i] > L_grid[i - 1], Errc::BadParameter, "L grid must increase");

  TGammaReport rep;
  rep.gamma = gamma;
  rep.l = normalized(l, model.d);
  rep.b = b;
  for (double L : L_grid) {
    TGammaCell cell;
    cell.L = L;
    cell.report = directional_report(model, hash_combine(master_seed, static_cast<std::uint64_t>(L)),
                                     l, b, L, M, safety_cap, workers);
    double scale = std::pow(L, -gamma);
    // Zero counts: rule-of-three upper bound, one-sided interval, never log 0.
    double p_for_log = cell.report.p_hat > 0 ? cell.report.p_hat : cell.report.ci_hi;
    cell.normalized = scale * std::log(p_for_log);
    cell.normalized_hi = scale * std::log(cell.report.ci_hi);
    cell.normalized_lo =
        cell.report.ci_lo > 0 ? scale * std::log(cell.report.ci_lo) : -HUGE_VAL;
    rep.cells.push_back(cell);
  }

  // Trend slope of the normalized values against L.
  if (rep.cells.size() >= 2) {
    std::vector<double> xs, ys;
    for (const auto& c : rep.cells) {
      xs.push_back(c.L);
      ys.push_back(c.normalized);
    }
    rep.trend_slope = least_squares(xs, ys).slope;
  }

  bool any_contains_zero = false;
  bool certified_increase = false;
  bool all_negative = true;
  for (const auto& c : rep.cells) {
    if (c.normalized_hi >= 0.0) {
      any_contains_zero = true;
      all_negative = false;
    }
  }
  for (std::size_t i = 1; i < rep.cells.size(); ++i) {
    // Increase certified at 3 sigma: the later cell's whole interval sits
    // above the earlier cell's.
    if (rep.cells[i].normalized_lo > rep.cells[i - 1].normalized_hi) certified_increase = true;
  }
  if (any_contains_zero || certified_increase)
    rep.verdict = TGammaVerdict::Inconsistent;
  else if (all_negative)
    rep.verdict = TGammaVerdict::ConsistentWithTGamma;
  else
    rep.verdict = TGammaVerdict::Inconclusive;
  return rep;
}

TailMomentReport regeneration_tail(const EnvironmentModel& model, std::uint64_t master_seed,
                                   double gamma, double c, std::int64_t M, std::int64_t horizon,
                                   int workers) {
  require(gamma > 0.0 && gamma < 1.0, Errc::BadParameter, "gamma must lie in (0,1)");
  require(c > 0.0, Errc::BadParameter, "c must be positive");
  require(M >= 1, Errc::BadParameter, "replica count must be >= 1");
  model.validate();
  const int d = model.d;
  Region ambient = Region::slab(d, axis_vec(0, d), 1e15, 1e15);

  std::vector<std::int64_t> radius(static_cast<std::size_t>(M), -1);
  parallel_for(M, workers, [&](std::int64_t i) {
    Environment env = build_environment(
        model, replica_seed(master_seed, 0x7461696C /* tail */, static_cast<std::uint64_t>(i)));
    Trajectory traj = simulate(env, Point{}, ambient, horizon, 0);
    RegenerationRecord rec =
        regeneration_decompose(traj, std::max<std::int64_t>(1, horizon / 2));
    if (!rec.radii.empty()) radius[static_cast<std::size_t>(i)] = rec.radii.front();
  });

  TailMomentReport rep;
  rep.gamma = gamma;
  rep.c = c;
  double sum = 0;
  for (std::int64_t i = 0; i < M; ++i) {
    std::int64_t r = radius[static_cast<std::size_t>(i)];
    if (r < 0) {
      ++rep.censored;
      continue;
    }
    ++rep.used;
    sum += std::exp(c * std::pow(static_cast<double>(r), gamma));
    if (r >= static_cast<std::int64_t>(rep.histogram.size()))
      rep.histogram.resize(static_cast<std::size_t>(r) + 1, 0);
    ++rep.histogram[static_cast<std::size_t>(r)];
  }
  require(rep.used >= 1, Errc::InsufficientData, "every replica was censored");
  rep.statistic = sum / static_cast<double>(rep.used);
  return rep;
}

Region CriterionSpec::make_region() const {
  if (slab_mode) {
    std::int64_t width = std::max<std::int64_t>(1, static_cast<std::int64_t>(2.0 * Ltilde));
    return Region::slab(d, axis_vec(0, d), L - 2.0, L + 2.0, Transversal::Periodic, width);
  }
  return Region::box_spec(d, rotation, L - 2.0, L + 2.0, Ltilde);
}

void CriterionSpec::validate(const CriterionConstants& k) const {
  require(L >= k.c2, Errc::SpecInvalid, "box scale below c2(d)");
  require(Ltilde >= 3.0 * std::sqrt(static_cast<double>(d)), Errc::SpecInvalid,
          "Ltilde below 3 sqrt(d)");
  require(Ltilde < L * L * L, Errc::SpecInvalid, "Ltilde must stay below L^3");
  require(L > 2.0, Errc::SpecInvalid, "box scale too small for the (L-2, L+2) extents");
}

namespace {

double criterion_prefactor(const EnvironmentModel& model, const CriterionSpec& spec,
                           const CriterionConstants& constants) {
  require(model.kappa > 0.0, Errc::SpecInvalid,
          "effective criterion needs a positive ellipticity constant");
  const double d1 = static_cast<double>(model.d - 1);
  return constants.c1 * std::pow(std::log(1.0 / model.kappa), 3.0 * d1) *
         std::pow(spec.Ltilde, d1) * std::pow(spec.L, 3.0 * d1 + 1.0);
}

}  // namespace

CriterionReport effective_criterion_evaluate(const EnvironmentModel& model,
                                             std::uint64_t master_seed,
                                             const CriterionSpec& spec, double a,
                                             std::int64_t M, const CriterionConstants& constants,
                                             int workers) {
  require(a >= 0.0 && a <= 1.0, Errc::BadParameter, "a must lie in [0,1]");
  require(M >= 1, Errc::BadParameter, "replica count must be >= 1");
  model.validate();
  spec.validate(constants);
  require(spec.d == model.d, Errc::SpecInvalid, "spec dimension mismatch");

  std::vector<double> rho_a(static_cast<std::size_t>(M), 0.0);
  const std::int64_t env_count = model.deterministic_field() ? 1 : M;
  Region region = spec.make_region();
  parallel_for(env_count, workers, [&](std::int64_t i) {
    Environment env = build_environment(
        model, replica_seed(master_seed, 0x63726974 /* crit */, static_cast<std::uint64_t>(i)));
    double rho = rho_of_box(env, region);
    rho_a[static_cast<std::size_t>(i)] = std::pow(rho, a);
  });
  if (env_count == 1)
    for (std::int64_t i = 1; i < M; ++i) rho_a[static_cast<std::size_t>(i)] = rho_a[0];

  CriterionReport rep;
  rep.spec = spec;
  rep.a = a;
  rep.constants = constants;
  rep.M = M;
  MeanSe ms = mean_se(rho_a);
  rep.e_rho_a = ms.mean;
  rep.ci_half = 3.0 * ms.se;
  double maxv = *std::max_element(rho_a.begin(), rho_a.end());
  rep.heavy_tailed = ms.mean > 0 && maxv / ms.mean > 100.0;
  rep.median_rho_a = median_of(rho_a);
  if (rep.heavy_tailed) {
    BootstrapCi bs = bootstrap_mean_ci(rho_a, master_seed);
    rep.boot_lo = bs.lo;
    rep.boot_hi = bs.hi;
  }
  double pref = criterion_prefactor(model, spec, constants);
  rep.value = pref * rep.e_rho_a;
  rep.value_ci_half = pref * rep.ci_half;
  rep.pass = rep.value + rep.value_ci_half < 1.0;
  return rep;
}

CriterionReport effective_criterion_search(const EnvironmentModel& model,
                                           std::uint64_t master_seed,
                                           const std::vector<double>& L_grid,
                                           const std::vector<double>& a_grid,
                                           const std::vector<double>& epsilons, double Ltilde,
                                           std::int64_t M, const CriterionConstants& constants,
                                           int workers, std::vector<CriterionReport>* all) {
  require(!L_grid.empty(), Errc::BadParameter, "L grid is empty");
  require(!a_grid.empty() || !epsilons.empty(), Errc::BadParameter, "a grid is empty");
  std::optional<CriterionReport> best;
  for (double L : L_grid) {
    CriterionSpec spec;
    spec.d = model.d;
    spec.L = L;
    spec.Ltilde = Ltilde;
    spec.slab_mode = true;
    std::vector<double> as = a_grid;
    for (double eps : epsilons) as.push_back(std::pow(L, -eps));
    std::sort(as.begin(), as.end());
    for (double a : as) {
      CriterionReport r =
          effective_criterion_evaluate(model, master_seed, spec, a, M, constants, workers);
      if (all) all->push_back(r);
      if (!best || r.value < best->value) best = r;
    }
  }
  return *best;
}

BandDecomposition rho_band_decomposition(
    const std::vector<std::pair<double, double>>& h_rho_samples, const BandParams& params) {
  const int n = params.n;
  require(n >= 1, Errc::BadParameter, "band count must be >= 1");
  require(static_cast<int>(params.beta.size()) == n, Errc::BadParameter,
          "need n band exponents");
  require(static_cast<int>(params.k.size()) == n, Errc::BadParameter, "need n band constants");
  require(params.beta.front() == params.gamma, Errc::BadParameter, "beta_1 must equal gamma");
  require(std::fabs(params.beta.back() - 1.0) < 1e-12, Errc::BadParameter,
          "beta_n must equal 1");
  for (int j = 1; j < n; ++j)
    require(params.beta[static_cast<std::size_t>(j)] >
                params.beta[static_cast<std::size_t>(j - 1)],
            Errc::BadParameter, "beta sequence must strictly increase");
  for (double kj : params.k)
    require(kj > 0.0, Errc::BadParameter, "band constants must be positive");
  require(params.epsilon > 0.0 && params.epsilon < 1.0, Errc::BadParameter,
          "epsilon must lie in (0,1)");
  require(!h_rho_samples.empty(), Errc::BadParameter, "no samples");

  BandDecomposition out;
  out.params = params;
  out.a = std::pow(params.L, -params.epsilon);
  out.thresholds.resize(static_cast<std::size_t>(n));
  for (int j = 0; j < n; ++j)
    out.thresholds[static_cast<std::size_t>(j)] =
        std::exp(-params.k[static_cast<std::size_t>(j)] *
                 std::pow(params.L, params.beta[static_cast<std::size_t>(j)]));
  for (int j = 1; j < n; ++j)
    require(out.thresholds[static_cast<std::size_t>(j)] <
                out.thresholds[static_cast<std::size_t>(j - 1)],
            Errc::BadParameter, "band thresholds must strictly decrease");

  out.masses.assign(static_cast<std::size_t>(n) + 1, 0.0);
  out.counts.assign(static_cast<std::size_t>(n) + 1, 0);
  const double inv_m = 1.0 / static_cast<double>(h_rho_samples.size());
  for (const auto& [h, rho] : h_rho_samples) {
    require(h >= 0.0 && h <= 1.0, Errc::BadParameter, "h sample outside [0,1]");
    // Band 0: h > t_1; band j in 1..n-1: t_{j+1} < h <= t_j; band n: h <= t_n.
    int band = n;
    if (h > out.thresholds[0]) {
      band = 0;
    } else {
      for (int j = 1; j < n; ++j) {
        if (h > out.thresholds[static_cast<std::size_t>(j)] &&
            h <= out.thresholds[static_cast<std::size_t>(j - 1)]) {
          band = j;
          break;
        }
      }
    }
    out.masses[static_cast<std::size_t>(band)] += std::pow(rho, out.a) * inv_m;
    out.counts[static_cast<std::size_t>(band)] += 1;
  }
  // The reported mean is the sum of the band masses; the partition identity
  // is bit-exact by construction.
  double total = 0;
  for (double m : out.masses) total += m;
  out.e_rho_a = total;

  double wrong_mean = 0;
  for (const auto& [h, rho] : h_rho_samples) {
    (void)rho;
    wrong_mean += (1.0 - h) * inv_m;
  }
  out.delta1_hat =
      wrong_mean > 0 ? -std::pow(params.L, -params.gamma) * std::log(wrong_mean) : HUGE_VAL;
  return out;
}

}  // namespace rwre
