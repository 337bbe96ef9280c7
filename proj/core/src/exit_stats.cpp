#include "rwre/exit_stats.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <unordered_set>

#include "rwre/error.hpp"
#include "rwre/hashing.hpp"
#include "rwre/parallel.hpp"
#include "rwre/scales.hpp"
#include "rwre/stats.hpp"

namespace rwre {

namespace {

Region tail_region(const ExitTailQuery& q, int d) {
  switch (q.geometry) {
    case TailGeometry::Slab: {
      std::int64_t width = q.slab_width > 0
                               ? q.slab_width
                               : static_cast<std::int64_t>(4.0 * q.L);
      return Region::slab(d, q.l, std::pow(q.L, q.beta), q.L, Transversal::Periodic, width);
    }
    case TailGeometry::Box:
      return Region::directed_box(d, q.l, q.L, q.K);
    case TailGeometry::Cone:
      return Region::cone(d, q.L, q.cone_delta, q.axis, q.vhat);
  }
  fail(Errc::BadParameter, "unknown tail geometry");
}

}  // namespace

TailReport atypical_exit_tail(const EnvironmentModel& model, std::uint64_t master_seed,
                              const ExitTailQuery& query, int workers,
                              const SolveOptions& solve) {
  require(query.M >= 1, Errc::BadParameter, "environment count must be >= 1");
  require(query.c > 0.0, Errc::BadParameter, "c must be positive");
  require(query.beta > 0.0 && query.beta < 1.0, Errc::BadParameter, "beta must lie in (0,1)");
  model.validate();
  const int d = model.d;
  Region region = tail_region(query, d);

  TailReport rep;
  rep.M = query.M;
  rep.threshold = std::exp(-query.c * std::pow(query.L, query.beta));
  rep.underflow = rep.threshold == 0.0;
  rep.probs.assign(static_cast<std::size_t>(query.M), 0.0);
  rep.trapped.assign(static_cast<std::size_t>(query.M), 0);

  SolveOptions h_only = solve;
  h_only.exit_distribution = false;
  parallel_for(query.M, workers, [&](std::int64_t i) {
    std::uint64_t env_seed =
        replica_seed(master_seed, 0x7461696C73 /* tails */, static_cast<std::uint64_t>(i));
    Environment env = build_environment(model, env_seed);
    if (query.trap) {
      double u = u01(hash_combine(env_seed, tag::kMixture), 0);
      if (u < query.trap->weight) {
        env = apply_trap(env, query.trap->overlay);
        rep.trapped[static_cast<std::size_t>(i)] = 1;
      }
    }
    ExitSolution sol = solve_exit(env, region, Point{}, h_only);
    rep.probs[static_cast<std::size_t>(i)] = sol.h_start();
  });

  rep.below.assign(static_cast<std::size_t>(query.M), 0);
  std::int64_t below = 0;
  for (std::int64_t i = 0; i < query.M; ++i) {
    if (!rep.underflow && rep.probs[static_cast<std::size_t>(i)] <= rep.threshold) {
      rep.below[static_cast<std::size_t>(i)] = 1;
      ++below;
    }
  }
  rep.fraction = static_cast<double>(below) / static_cast<double>(query.M);
  return rep;
}

TailGridReport atypical_exit_tail_grid(const EnvironmentModel& model, std::uint64_t master_seed,
                                       ExitTailQuery query, const std::vector<double>& L_grid,
                                       int workers, const SolveOptions& solve) {
  require(!L_grid.empty(), Errc::BadParameter, "L grid is empty");
  TailGridReport out;
  out.L_grid = L_grid;
  std::vector<double> xs, ys;
  for (double L : L_grid) {
    query.L = L;
    TailReport r = atypical_exit_tail(model, hash_combine(master_seed, static_cast<std::uint64_t>(L)),
                                      query, workers, solve);
    if (r.fraction > 0.0) {
      xs.push_back(std::log(L));
      ys.push_back(std::log(-std::log(r.fraction)));
    }
    out.reports.push_back(std::move(r));
  }
  if (xs.size() >= 2) out.alpha_hat = least_squares(xs, ys).slope;
  return out;
}

ExitFloorReport exit_point_floor(const EnvironmentModel& model, std::uint64_t master_seed,
                                 std::int64_t L, std::int64_t M, double Cprime,
                                 const Vec& vhat, const Point& x, int workers,
                                 const SolveOptions& solve) {
  require(M >= 1, Errc::BadParameter, "environment count must be >= 1");
  require(Cprime > 0.0, Errc::BadParameter, "admissibility constant must be positive");
  model.validate();
  const int d = model.d;
  Vec v = normalized(vhat, d);
  Region block = Region::block(d, Point{}, L, v);
  require(block.in_middle_third(x), Errc::BadParameter, "x must lie in the middle third");

  const std::int64_t env_count = model.deterministic_field() ? 1 : M;
  // Accumulate right-face atom probabilities per environment, then average in
  // ascending replica order. Only the adjoint solve is needed here.
  SolveOptions opts = solve;
  opts.forward_field = false;
  std::vector<std::vector<BoundaryAtom>> per_env(static_cast<std::size_t>(env_count));
  parallel_for(env_count, workers, [&](std::int64_t e) {
    Environment env = build_environment(
        model, replica_seed(master_seed, 0x666C6F6F72 /* floor */, static_cast<std::uint64_t>(e)));
    ExitSolution sol = solve_exit(env, block, x, opts);
    per_env[static_cast<std::size_t>(e)] = sol.exit_distribution();
  });

  std::map<Point, double> acc;
  double right_mass = 0.0;
  for (const auto& atoms : per_env) {
    for (const auto& a : atoms) {
      if (!a.right) continue;
      acc[a.y] += a.prob / static_cast<double>(env_count);
    }
  }
  ExitFloorReport rep;
  rep.L = L;
  double scale = std::pow(static_cast<double>(L), static_cast<double>(d - 1));
  bool any_admissible = false;
  for (const auto& [y, p] : acc) {
    right_mass += p;
    ExitFloorRow row;
    row.y = y;
    row.prob = p;
    row.scaled = scale * p;
    Point rel = y;
    for (int i = 0; i < d; ++i) rel[i] -= x[i];
    row.admissible = l1_norm(oblique_perp(v, 0, rel, d), d) < Cprime * static_cast<double>(L);
    if (row.admissible) {
      if (!any_admissible || row.scaled < rep.floor) rep.floor = row.scaled;
      any_admissible = true;
    }
    rep.table.push_back(row);
  }
  rep.right_mass = right_mass;
  require(any_admissible, Errc::BadParameter, "no admissible exit points under Cprime");
  return rep;
}

DirectionGapReport direction_gap(const EnvironmentModel& model, std::uint64_t master_seed,
                                 std::int64_t L, std::int64_t M, std::int64_t horizon,
                                 int workers) {
  DirectionEstimate est = estimate_direction(model, master_seed, L, M, horizon, workers);
  require(est.drift_detected, Errc::NoDrift, "no drift detected at 3 sigma");
  const int d = model.d;
  DirectionGapReport rep;
  rep.usable = est.usable;
  rep.gap = l2_norm(sub(est.v_emp, est.v_L_emp, d), d);

  // Bootstrap over replica increments.
  RegenIncrementSample sample = sample_regen_increments(model, master_seed, L, M, horizon, workers);
  const std::size_t n = sample.increments.size();
  require(n >= 2, Errc::InsufficientData, "too few usable replicas for a bootstrap");
  std::vector<double> gaps;
  const int resamples = 200;
  std::uint64_t key = hash_combine(master_seed, tag::kBootstrap);
  for (int r = 0; r < resamples; ++r) {
    HashStream stream(hash_combine(key, static_cast<std::uint64_t>(r)));
    Vec mean{}, mean_a{};
    std::int64_t n_a = 0;
    for (std::size_t i = 0; i < n; ++i) {
      std::size_t j = static_cast<std::size_t>(stream.next_u64() % n);
      for (int c = 0; c < d; ++c) mean[c] += sample.increments[j][c];
      if (sample.a_event[j]) {
        ++n_a;
        for (int c = 0; c < d; ++c) mean_a[c] += sample.increments[j][c];
      }
    }
    if (n_a == 0) continue;
    for (int c = 0; c < d; ++c) {
      mean[c] /= static_cast<double>(n);
      mean_a[c] /= static_cast<double>(n_a);
    }
    gaps.push_back(l2_norm(sub(normalized(mean, d), normalized(mean_a, d), d), d));
  }
  require(!gaps.empty(), Errc::InsufficientData, "bootstrap produced no usable resamples");
  std::sort(gaps.begin(), gaps.end());
  auto pick = [&](double q) {
    return gaps[static_cast<std::size_t>(q * static_cast<double>(gaps.size() - 1))];
  };
  rep.boot_lo = pick(0.025);
  rep.boot_hi = pick(0.975);
  return rep;
}

FluctuationReport transversal_fluctuation_tail(const EnvironmentModel& model,
                                               std::uint64_t master_seed, std::int64_t L,
                                               std::int64_t M, const Point& x, const Vec& vhat,
                                               int transversal_index, int workers) {
  require(M >= 1, Errc::BadParameter, "replica count must be >= 1");
  require(L >= 16, Errc::BadParameter, "fluctuation scale needs L >= 16");
  model.validate();
  const int d = model.d;
  Vec v = normalized(vhat, d);
  const double trans_bound =
      static_cast<double>(scale_R(transversal_index, L)) * static_cast<double>(L);
  const std::int64_t back_bound = scale_R(2, L);
  const std::int64_t level = L * L;
  const std::int64_t cap = 400 * L * L;  // safety net well past T_{L^2}

  std::vector<std::uint8_t> hit_trans(static_cast<std::size_t>(M), 0);
  std::vector<std::uint8_t> hit_back(static_cast<std::size_t>(M), 0);
  parallel_for(M, workers, [&](std::int64_t i) {
    Environment env = build_environment(
        model, replica_seed(master_seed, 0x666C7563 /* fluc */, static_cast<std::uint64_t>(i)));
    const std::uint64_t key = stream_key(env.seed(), tag::kWalkStep, 0);
    Point pos = x;
    for (std::int64_t n = 0; n < cap; ++n) {
      if (pos[0] - x[0] >= level) break;  // T_{L^2} reached
      Kernel k = env.site_kernel(pos);
      double u = u01(key, static_cast<std::uint64_t>(n));
      double accp = 0;
      int dir = 2 * d - 1;
      for (int t = 0; t < 2 * d - 1; ++t) {
        accp += k.p[t];
        if (u < accp) {
          dir = t;
          break;
        }
      }
      pos = step(pos, dir);
      Point rel = pos;
      for (int c = 0; c < d; ++c) rel[c] -= x[c];
      if (linf_norm(oblique_perp(v, 0, rel, d), d) >= trans_bound)
        hit_trans[static_cast<std::size_t>(i)] = 1;
      if (rel[0] < -back_bound) hit_back[static_cast<std::size_t>(i)] = 1;
      if (hit_trans[static_cast<std::size_t>(i)] && hit_back[static_cast<std::size_t>(i)]) break;
    }
  });

  FluctuationReport rep;
  rep.M = M;
  rep.transversal_index = transversal_index;
  std::int64_t t = 0, b = 0, u = 0;
  for (std::int64_t i = 0; i < M; ++i) {
    bool ht = hit_trans[static_cast<std::size_t>(i)];
    bool hb = hit_back[static_cast<std::size_t>(i)];
    t += ht;
    b += hb;
    u += ht || hb;
  }
  rep.p_transversal = static_cast<double>(t) / static_cast<double>(M);
  rep.p_backtrack = static_cast<double>(b) / static_cast<double>(M);
  rep.p_union = static_cast<double>(u) / static_cast<double>(M);
  return rep;
}

IntersectionReport intersection_census(const EnvironmentModel& model, std::uint64_t master_seed,
                                       std::int64_t L, std::int64_t M, const Point& x1,
                                       const Point& x2, const Vec& vhat, int workers) {
  require(M >= 1, Errc::BadParameter, "replica count must be >= 1");
  require(hyperplane_level(x1) == 0 && hyperplane_level(x2) == 0, Errc::BadParameter,
          "starts must lie on the hyperplane H_0");
  model.validate();
  const int d = model.d;
  Vec v = normalized(vhat, d);
  Region block = Region::block(d, Point{}, L, v);
  // Walks run until they leave a padded box around the block.
  const std::int64_t cap = 64 * L * L * L;

  IntersectionReport rep;
  rep.M = M;
  rep.dimension_warning = d < 4;
  rep.counts.assign(static_cast<std::size_t>(M), 0);

  struct PointHash {
    std::size_t operator()(const Point& p) const {
      std::uint64_t h = 0x9E3779B97F4A7C15ull;
      for (auto c : p) h = hash_combine(h, static_cast<std::uint64_t>(c));
      return static_cast<std::size_t>(h);
    }
  };

  parallel_for(M, workers, [&](std::int64_t i) {
    Environment env = build_environment(
        model, replica_seed(master_seed, 0x696E7473 /* ints */, static_cast<std::uint64_t>(i)));
    auto run = [&](const Point& start, std::uint64_t stream,
                   std::unordered_set<Point, PointHash>& sites) {
      const std::uint64_t key = stream_key(env.seed(), tag::kWalkStep, stream);
      Point pos = start;
      if (block.contains(pos)) sites.insert(pos);
      for (std::int64_t n = 0; n < cap; ++n) {
        Kernel k = env.site_kernel(pos);
        double u = u01(key, static_cast<std::uint64_t>(n));
        double accp = 0;
        int dir = 2 * d - 1;
        for (int t = 0; t < 2 * d - 1; ++t) {
          accp += k.p[t];
          if (u < accp) {
            dir = t;
            break;
          }
        }
        pos = step(pos, dir);
        bool inside = block.contains(pos);
        if (inside) sites.insert(pos);
        // Stop once the walk has left the block for good measure: past the
        // right face or far outside the transversal extent.
        if (!inside && (pos[0] >= L * L || std::llabs(pos[0]) > 2 * L * L)) break;
      }
    };
    std::unordered_set<Point, PointHash> s1, s2;
    run(x1, 2 * static_cast<std::uint64_t>(i), s1);
    run(x2, 2 * static_cast<std::uint64_t>(i) + 1, s2);
    std::int64_t count = 0;
    const auto& small = s1.size() <= s2.size() ? s1 : s2;
    const auto& big = s1.size() <= s2.size() ? s2 : s1;
    for (const Point& p : small)
      if (big.count(p)) ++count;
    rep.counts[static_cast<std::size_t>(i)] = count;
  });

  double r2 = static_cast<double>(scale_R(2, std::max<std::int64_t>(L, 16)));
  double unit = std::pow(r2, static_cast<double>(d + 1));
  rep.tail.assign(3, 0.0);
  double mean = 0;
  for (std::int64_t c : rep.counts) {
    mean += static_cast<double>(c);
    for (int m = 1; m <= 3; ++m)
      if (static_cast<double>(c) > static_cast<double>(m) * unit)
        rep.tail[static_cast<std::size_t>(m - 1)] += 1.0;
  }
  rep.mean = mean / static_cast<double>(M);
  for (double& t : rep.tail) t /= static_cast<double>(M);
  return rep;
}

}  // namespace rwre
