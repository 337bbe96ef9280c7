// Acceptance suite: one pass/fail line per criterion, nonzero exit on any
// failure. Each criterion pins its tolerances in code; the stated runtime
// bounds are asserted alongside the numeric checks.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "rwre/criteria.hpp"
#include "rwre/environment.hpp"
#include "rwre/error.hpp"
#include "rwre/exit_stats.hpp"
#include "rwre/experiments.hpp"
#include "rwre/hashing.hpp"
#include "rwre/llt.hpp"
#include "rwre/multiscale.hpp"
#include "rwre/scales.hpp"
#include "rwre/solver.hpp"
#include "rwre/stats.hpp"
#include "rwre/walk.hpp"

using namespace rwre;
using Clock = std::chrono::steady_clock;
namespace fs = std::filesystem;

namespace {

int g_failures = 0;
std::vector<std::string> g_notes;

struct Checker {
  bool ok = true;
  std::string detail;

  void expect(bool cond, const std::string& what) {
    if (!cond) {
      ok = false;
      detail += (detail.empty() ? "" : "; ") + what;
    }
  }
};

void run_criterion(int number, const std::string& label, double time_budget_s,
                   const std::function<void(Checker&)>& body) {
  Checker c;
  auto t0 = Clock::now();
  try {
    body(c);
  } catch (const std::exception& e) {
    c.expect(false, std::string("exception: ") + e.what());
  }
  double secs = std::chrono::duration<double>(Clock::now() - t0).count();
  if (time_budget_s > 0 && secs > time_budget_s) {
    char buf[128];
    std::snprintf(buf, sizeof(buf), "runtime %.1fs exceeds budget %.0fs", secs, time_budget_s);
    c.expect(false, buf);
  }
  if (!c.ok) ++g_failures;
  std::printf("[%s] criterion %2d: %s (%.1fs)%s%s\n", c.ok ? "PASS" : "FAIL", number,
              label.c_str(), secs, c.detail.empty() ? "" : " -- ", c.detail.c_str());
  std::fflush(stdout);
}

EnvironmentModel biased_model() {
  return EnvironmentModel::deterministic(2, Kernel::of(2, {0.4, 0.2, 0.2, 0.2}));
}

EnvironmentModel srw_model() { return EnvironmentModel::deterministic(2, Kernel::srw(2)); }

EnvironmentModel strong_model() {
  return EnvironmentModel::deterministic(2, Kernel::of(2, {0.7, 0.1, 0.1, 0.1}));
}

EnvironmentModel dirichlet_model() {
  return EnvironmentModel::dirichlet(2, {12.0, 2.0, 4.0, 4.0}, 0.02);
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

int main() {
  const int workers = 2;

  run_criterion(1, "ruin oracle on the periodic biased slab", 1.0, [&](Checker& c) {
    Environment env = build_environment(biased_model(), 1);
    Region slab = Region::slab(2, axis_vec(0, 2), 8.0, 8.0, Transversal::Periodic, 8);
    SolveOptions opts;
    opts.exit_distribution = false;
    ExitSolution sol = solve_exit(env, slab, Point{}, opts);
    double oracle = (1.0 - std::pow(0.5, 8)) / (1.0 - std::pow(0.5, 16));
    c.expect(std::fabs(sol.h_start() - oracle) <= 1e-10, "h_start differs from the ruin value");
  });

  run_criterion(2, "solver matches Monte Carlo exits on 17x17 boxes", 60.0, [&](Checker& c) {
    auto model = EnvironmentModel::dirichlet(2, {2.0, 1.0, 1.0, 1.0}, 0.01);
    Region box = Region::slab(2, axis_vec(0, 2), 9.0, 9.0, Transversal::Absorbing, 9);
    for (std::uint64_t seed : {11u, 22u, 33u}) {
      Environment env = build_environment(model, seed);
      ExitSolution sol = solve_exit(env, box, Point{});
      std::map<Point, double> empirical;
      const std::int64_t walks = 100000;
      for (std::int64_t i = 0; i < walks; ++i) {
        Trajectory t = simulate(env, Point{}, box, 10'000'000, static_cast<std::uint64_t>(i));
        empirical[t.final_position()] += 1.0 / static_cast<double>(walks);
      }
      double tv = 0;
      for (const auto& a : sol.exit_distribution()) {
        auto it = empirical.find(a.y);
        tv += std::fabs(a.prob - (it == empirical.end() ? 0.0 : it->second));
      }
      c.expect(tv / 2.0 <= 0.02, "TV distance above 0.02 at seed " + std::to_string(seed));
    }
  });

  run_criterion(3, "rho decay slope equals log(q/p) on exact solves", 30.0, [&](Checker& c) {
    Environment env = build_environment(biased_model(), 1);
    std::vector<double> xs, ys;
    for (double L : {8.0, 16.0, 24.0, 32.0}) {
      Region slab = Region::slab(2, axis_vec(0, 2), L, L, Transversal::Periodic, 8);
      xs.push_back(L);
      ys.push_back(std::log(rho_of_box(env, slab)));
    }
    double slope = least_squares(xs, ys).slope;
    c.expect(std::fabs(slope - std::log(0.5)) <= 0.05 * std::fabs(std::log(0.5)),
             "slope off by more than 5%");
  });

  run_criterion(4, "(T)_gamma discriminates biased from symmetric", 120.0, [&](Checker& c) {
    std::vector<double> grid{8, 16, 24};
    TGammaReport b =
        t_gamma_estimate(biased_model(), 41, axis_vec(0, 2), 1.0, 0.5, grid, 10000,
                         5'000'000, workers);
    c.expect(b.verdict == TGammaVerdict::ConsistentWithTGamma, "biased verdict not consistent");
    for (const auto& cell : b.cells) {
      double L = cell.L;
      double p = (1.0 - std::pow(0.5, L)) / (std::pow(0.5, -L) - std::pow(0.5, L));
      double oracle = std::pow(L, -0.5) * std::log(p);
      c.expect(cell.normalized_lo <= oracle && oracle <= cell.normalized_hi,
               "ruin-oracle value outside the reported CI at L=" + std::to_string((int)L));
    }
    TGammaReport s = t_gamma_estimate(srw_model(), 42, axis_vec(0, 2), 1.0, 0.5, grid, 10000,
                                      5'000'000, workers);
    c.expect(s.verdict == TGammaVerdict::Inconsistent, "symmetric verdict not inconsistent");
  });

  run_criterion(5, "effective criterion sanity and regression", 120.0, [&](Checker& c) {
    CriterionSpec spec;
    spec.d = 2;
    spec.L = 8;
    spec.Ltilde = 5;
    CriterionConstants k;
    CriterionReport zero = effective_criterion_evaluate(biased_model(), 3, spec, 0.0, 4, k);
    double pref = k.c1 * std::pow(std::log(1.0 / 0.2), 3.0) * 5.0 * std::pow(8.0, 4.0);
    c.expect(zero.e_rho_a == 1.0, "E rho^0 differs from 1");
    c.expect(zero.value == pref, "a=0 value is not exactly the constants product");

    std::vector<CriterionReport> srw_all;
    (void)effective_criterion_search(srw_model(), 3, {8, 16, 24}, {0.0, 0.5, 1.0}, {}, 5.0, 4,
                                     k, workers, &srw_all);
    for (const auto& r : srw_all)
      c.expect(!r.pass, "symmetric SRW passed the criterion");

    std::vector<CriterionReport> all;
    (void)effective_criterion_search(biased_model(), 3, {8, 16, 24, 32}, {1.0}, {}, 5.0, 2, k,
                                     workers, &all);
    double first_pass = 0;
    for (const auto& r : all)
      if (r.pass && (first_pass == 0 || r.spec.L < first_pass)) first_pass = r.spec.L;
    c.expect(first_pass == 24.0, "regression: first passing L moved from 24");
  });

  run_criterion(6, "band masses partition E rho^a bit-exactly", 30.0, [&](Checker& c) {
    // Fixture 1: synthetic h samples.
    std::vector<std::pair<double, double>> samples;
    std::uint64_t key = 7;
    for (int i = 0; i < 4096; ++i) {
      key = splitmix64(key);
      double h = (static_cast<double>(key >> 11) + 0.5) * 0x1.0p-53;
      samples.emplace_back(h, (1.0 - h) / h);
    }
    BandParams params;
    params.gamma = 0.5;
    params.n = 3;
    params.beta = {0.5, 0.75, 1.0};
    params.k = {1.0, 0.5, 0.25};
    params.epsilon = 0.5;
    params.L = 12;
    BandDecomposition bands = rho_band_decomposition(samples, params);
    double total = 0;
    for (double m : bands.masses) total += m;
    c.expect(total == bands.e_rho_a, "synthetic fixture partition not bit-exact");

    // Fixture 2: solver-generated samples from a Dirichlet slab family.
    auto model = EnvironmentModel::dirichlet(2, {4.0, 1.0, 2.0, 2.0}, 0.01);
    Region region = Region::slab(2, axis_vec(0, 2), 10.0, 14.0, Transversal::Periodic, 10);
    std::vector<std::pair<double, double>> solved;
    for (std::uint64_t s = 0; s < 128; ++s) {
      Environment env = build_environment(model, splitmix64(s));
      SolveOptions h_only;
      h_only.exit_distribution = false;
      double h = solve_exit(env, region, Point{}, h_only).h_start();
      solved.emplace_back(h, (1.0 - h) / h);
    }
    BandDecomposition b2 = rho_band_decomposition(solved, params);
    double t2 = 0;
    for (double m : b2.masses) t2 += m;
    c.expect(t2 == b2.e_rho_a, "solver fixture partition not bit-exact");
  });

  run_criterion(7, "scale-function and ladder golden values", 5.0, [&](Checker& c) {
    c.expect(scale_R(1, 16) == 3, "R_1(16) != 3");
    c.expect(scale_R(1, 100) == 11, "R_1(100) != 11");
    c.expect(scale_R(2, 100) == 36, "R_2(100) != 36");
    LadderParams p = LadderParams::explicit_mode(2, 4, 3, 0.5, 0.9, 0.05);
    ScaleLadder ladder = build_ladder(10000, p);
    c.expect(ladder.levels == std::vector<std::int64_t>{4, 12, 36, 108, 324},
             "ladder levels moved");
    c.expect(ladder.iota == 5, "iota != 5");
  });

  run_criterion(8, "good/bad classification at N=16", 120.0, [&](Checker& c) {
    auto model = strong_model();
    Vec vhat = axis_vec(0, 2);
    TestSitePolicy policy;
    policy.per_axis = 2;
    AnnealedReference ref = annealed_reference(model, 5, 16, 0.5, vhat, 1, policy, workers);
    Environment env = build_environment(model, 5);

    // Every feasible block of the deterministic model is good with exact
    // zero gaps: classify a few anchors.
    for (const Point& anchor : {Point{}, point_of({256, 16}), point_of({-256, -16})}) {
      BlockReport rep = classify_block(env, anchor, 16, 0.5, ref, policy);
      c.expect(rep.good, "deterministic block not good");
      c.expect(rep.metric2 == 0.0, "metric 2 not exactly 0");
      c.expect(rep.metric3 == 0.0, "metric 3 not exactly 0");
    }

    TrapOverlay ov{Point{}, 150, 0.2, 0.0};
    c.expect(ov.radius >= scale_R(1, 16), "trap radius below R_1(N)");
    BlockReport bad = classify_block(apply_trap(env, ov), Point{}, 16, 0.5, ref, policy);
    c.expect(!bad.good, "trapped block not classified bad");
    c.expect(bad.metric1 > bad.thresholds.wrong_exit, "trap did not trip metric 1");
  });

  run_criterion(9, "naive-trap tail fraction matches the mixture weight", 0.0, [&](Checker& c) {
    ExitTailQuery q;
    q.geometry = TailGeometry::Slab;
    q.c = 1.0;
    q.beta = 0.5;
    q.L = 16;
    q.l = axis_vec(0, 2);
    q.M = 10000;
    q.slab_width = 64;
    q.trap = TrapMixture{TrapOverlay{point_of({-4, 0}), 8, 0.01, 0.97}, 0.01};
    TailReport rep = atypical_exit_tail(biased_model(), 97, q, workers);
    double sigma = std::sqrt(0.01 * 0.99 / 10000.0);
    c.expect(std::fabs(rep.fraction - 0.01) <= 3.0 * sigma,
             "fraction outside 3 sigma of the mixture weight");
    for (std::int64_t i = 0; i < rep.M; ++i) {
      bool trapped = rep.trapped[static_cast<std::size_t>(i)];
      bool below = rep.below[static_cast<std::size_t>(i)];
      if (trapped)
        c.expect(rep.probs[static_cast<std::size_t>(i)] <= rep.threshold,
                 "a trapped instance sits above the threshold");
      c.expect(trapped == below, "below-threshold flags do not match the trapped instances");
      if (!c.ok) break;
    }
  });

  run_criterion(10, "local-limit numerics for the one-dimensional walk", 30.0, [&](Checker& c) {
    std::vector<std::int64_t> grid{64, 100, 144, 196, 256};
    LltReport rep = llt_discrepancy_report(LatticeLaw::srw(1), grid);
    for (const auto& cell : rep.cells) {
      double scaled = cell.sup_p * std::sqrt(static_cast<double>(cell.n));
      c.expect(scaled >= 0.75 && scaled <= 0.85,
               "sup * sqrt(n) outside [0.75, 0.85] at n=" + std::to_string(cell.n));
    }
    c.expect(std::fabs(rep.exp_sup - 0.5) <= 0.05, "sup exponent outside 0.5 +- 0.05");
    c.expect(std::fabs(rep.exp_first - 1.0) <= 0.15, "difference exponent outside 1.0 +- 0.15");
  });

  run_criterion(11, "exit-point floor and variance window", 300.0, [&](Checker& c) {
    auto model = dirichlet_model();
    Vec vhat = axis_vec(0, 2);
    SolveOptions opts;
    opts.max_sites = 16'000'000;
    opts.tolerance = 1e-10;
    std::vector<double> floors, vars;
    for (std::int64_t L : {8, 16, 32}) {
      ExitFloorReport rep = exit_point_floor(model, 13, L, 2, 1.0, vhat, Point{}, workers, opts);
      floors.push_back(rep.floor);
      // Conditioned variance of the annealed exit law on the right face.
      double mass = 0, mean1 = 0;
      for (const auto& row : rep.table) {
        mass += row.prob;
        mean1 += row.prob * static_cast<double>(row.y[1]);
      }
      mean1 /= mass;
      double var = 0;
      for (const auto& row : rep.table) {
        double dev = std::fabs(static_cast<double>(row.y[1]) - mean1);
        var += row.prob / mass * dev * dev;
      }
      vars.push_back(var / static_cast<double>(L * L));
    }
    auto spread = [](const std::vector<double>& v) {
      double lo = v[0], hi = v[0];
      for (double x : v) {
        lo = std::min(lo, x);
        hi = std::max(hi, x);
      }
      return hi / lo;
    };
    c.expect(spread(floors) <= 4.0, "scaled floor varies by more than 4x");
    c.expect(spread(vars) <= 4.0, "Var/L^2 varies by more than 4x");
  });

  run_criterion(12, "artifact determinism across reruns and worker counts", 0.0, [&](Checker& c) {
    nlohmann::json conf = {
        {"model",
         {{"d", 2}, {"kappa", 0.005},
          {"variant", {{"type", "dirichlet"}, {"alpha", {2.0, 1.0, 1.0, 1.0}}}}}},
        {"seed", 9},
        {"query",
         {{"geometry", "slab"}, {"c", 1.0}, {"beta", 0.5}, {"L", 8.0}, {"replicas", 200},
          {"width", 16}}},
    };
    fs::path base = fs::temp_directory_path() / "rwre_acceptance";
    fs::remove_all(base);
    std::vector<std::string> tails;
    for (int run = 0; run < 3; ++run) {
      ExperimentConfig cfg = parse_experiment_config(ExperimentKind::Tails, conf.dump());
      cfg.out_dir = base / ("run" + std::to_string(run));
      cfg.workers = run == 2 ? 8 : 1;
      (void)run_experiment(cfg);
      tails.push_back(slurp(cfg.out_dir / "tails.csv"));
    }
    c.expect(tails[0] == tails[1], "rerun changed the CSV artifact");
    c.expect(tails[0] == tails[2], "worker count changed the CSV artifact");
  });

  if (g_failures == 0) {
    std::printf("acceptance: all criteria passed\n");
    return 0;
  }
  std::printf("acceptance: %d criterion(s) failed\n", g_failures);
  return 1;
}
