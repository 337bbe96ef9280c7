#include "rwre/multiscale.hpp"

#include <algorithm>
#include <cmath>

#include "rwre/error.hpp"
#include "rwre/hashing.hpp"
#include "rwre/parallel.hpp"
#include "rwre/stats.hpp"
#include "rwre/walk.hpp"

namespace rwre {

BlockThresholds block_thresholds(std::int64_t N, double gamma, double theta, int d) {
  require(gamma > 0.0 && gamma < 1.0, Errc::BadParameter, "gamma must lie in (0,1)");
  require(theta > 0.0 && theta <= 1.0, Errc::BadParameter, "theta must lie in (0,1]");
  BlockThresholds t;
  t.wrong_exit = std::exp(-std::pow(static_cast<double>(scale_R_unchecked(1, N)), gamma));
  t.expectation_gap = static_cast<double>(scale_R_unchecked(4, N));
  double d1 = static_cast<double>(d - 1);
  t.cube_gap = std::pow(static_cast<double>(N),
                        (theta - 1.0) * d1 - theta * d1 / static_cast<double>(d + 1));
  return t;
}

std::vector<Point> test_site_offsets(std::int64_t N, const Vec& vhat, int d,
                                     const TestSitePolicy& policy) {
  require(policy.per_axis >= 1, Errc::BadParameter, "per_axis must be >= 1");
  Region block = Region::block(d, Point{}, N, vhat);
  // Stratified grid across the middle third, clipped to membership. The axis
  // extents are strict, so stay a touch inside.
  double n2 = static_cast<double>(N) * static_cast<double>(N);
  double w = static_cast<double>(block.block_transversal_radius());
  std::vector<Point> sites;
  std::vector<double> fracs;
  for (int i = 0; i < policy.per_axis; ++i)
    fracs.push_back(policy.per_axis == 1
                        ? 0.0
                        : -0.9 + 1.8 * static_cast<double>(i) /
                                     static_cast<double>(policy.per_axis - 1));
  std::vector<int> idx(static_cast<std::size_t>(d), 0);
  while (true) {
    Point p{};
    p[0] = static_cast<std::int64_t>(fracs[static_cast<std::size_t>(idx[0])] * n2 / 3.0);
    for (int c = 1; c < d; ++c)
      p[c] = static_cast<std::int64_t>(fracs[static_cast<std::size_t>(idx[static_cast<std::size_t>(c)])] * w / 3.0);
    if (block.in_middle_third(p) &&
        std::find(sites.begin(), sites.end(), p) == sites.end())
      sites.push_back(p);
    int c = d - 1;
    while (c >= 0 && ++idx[static_cast<std::size_t>(c)] == policy.per_axis) {
      idx[static_cast<std::size_t>(c)] = 0;
      --c;
    }
    if (c < 0) break;
  }
  std::sort(sites.begin(), sites.end());
  require(!sites.empty(), Errc::BadParameter, "test-site policy produced no sites");
  return sites;
}

std::int64_t CubeTiling::index_of(const Point& y) const {
  std::int64_t idx = 0;
  for (int j = 1; j < d; ++j)
    idx = idx * dims[j] + (y[j] - min_corner[j]) / side;
  return idx;
}

CubeTiling block_right_face_tiling(const Point& anchor, std::int64_t N, const Vec& vhat, int d,
                                   double theta) {
  CubeTiling t;
  t.d = d;
  t.side = std::max<std::int64_t>(
      1, static_cast<std::int64_t>(std::ceil(std::pow(static_cast<double>(N), theta))));
  double w = static_cast<double>(scale_R_unchecked(6, N) * N);
  t.min_corner[0] = anchor[0] + N * N;
  t.n_cubes = 1;
  for (int j = 1; j < d; ++j) {
    // Face atoms sit over the interior layer at e_1 offset N^2 - 1.
    double c = static_cast<double>(N * N - 1) * vhat[j] / vhat[0];
    std::int64_t lo = static_cast<std::int64_t>(std::floor(c - w)) + 1;
    std::int64_t hi = static_cast<std::int64_t>(std::ceil(c + w)) - 1;
    t.min_corner[j] = anchor[j] + lo;
    t.dims[j] = (hi - lo) / t.side + 1;
    t.n_cubes *= t.dims[j];
  }
  return t;
}

namespace {

// Align two cube-probability vectors that may differ in length (cube grids
// are anchored at the data's min corner, so pad with zeros).
double max_abs_gap(const std::vector<double>& a, const std::vector<double>& b) {
  double worst = 0;
  std::size_t n = std::max(a.size(), b.size());
  for (std::size_t i = 0; i < n; ++i) {
    double x = i < a.size() ? a[i] : 0.0;
    double y = i < b.size() ? b[i] : 0.0;
    worst = std::max(worst, std::fabs(x - y));
  }
  return worst;
}

}  // namespace

AnnealedReference annealed_reference(const EnvironmentModel& model, std::uint64_t master_seed,
                                     std::int64_t N, double theta, const Vec& vhat,
                                     std::int64_t M, const TestSitePolicy& policy, int workers,
                                     const SolveOptions& solve) {
  require(M >= 1, Errc::BadParameter, "reference needs M >= 1");
  model.validate();
  const int d = model.d;
  AnnealedReference ref;
  ref.N = N;
  ref.theta = theta;
  ref.vhat = normalized(vhat, d);
  ref.d = d;
  ref.policy = policy;
  const std::int64_t env_count = model.deterministic_field() ? 1 : M;
  ref.M = env_count;

  std::vector<Point> offsets = test_site_offsets(N, ref.vhat, d, policy);
  Region block = Region::block(d, Point{}, N, ref.vhat);

  struct Draw {
    Vec expectation{};
    std::vector<double> cubes;
    std::int64_t side = 0;
  };
  // environment-major, site-minor
  std::vector<Draw> draws(static_cast<std::size_t>(env_count * static_cast<std::int64_t>(offsets.size())));

  ref.mc_fallback = block.interior_bbox().volume(d) > static_cast<double>(solve.max_sites);

  if (!ref.mc_fallback) {
    SolveOptions adjoint = solve;
    adjoint.forward_field = false;
    parallel_for(env_count * static_cast<std::int64_t>(offsets.size()), workers,
                 [&](std::int64_t job) {
                   std::int64_t e = job / static_cast<std::int64_t>(offsets.size());
                   std::int64_t s = job % static_cast<std::int64_t>(offsets.size());
                   Environment env = build_environment(
                       model, replica_seed(master_seed, 0x726566 /* ref */,
                                           static_cast<std::uint64_t>(e)));
                   ExitSolution sol =
                       solve_exit(env, block, offsets[static_cast<std::size_t>(s)], adjoint);
                   ConditionalExitStats st = conditional_exit_stats(sol, theta);
                   Draw& dr = draws[static_cast<std::size_t>(job)];
                   dr.expectation = st.expectation;
                   dr.cubes = st.cube_probs;
                   dr.side = st.cube_side;
                 });
  } else {
    // Block too large for the exact solve: estimate the conditioned exit law
    // per (environment, site) from simulated walks.
    const std::int64_t walks = 2000;
    const std::int64_t cap = 64 * N * N * N;
    CubeTiling tiling = block_right_face_tiling(Point{}, N, ref.vhat, d, theta);
    parallel_for(env_count * static_cast<std::int64_t>(offsets.size()), workers,
                 [&](std::int64_t job) {
                   std::int64_t e = job / static_cast<std::int64_t>(offsets.size());
                   std::int64_t s = job % static_cast<std::int64_t>(offsets.size());
                   Environment env = build_environment(
                       model, replica_seed(master_seed, 0x726566 /* ref */,
                                           static_cast<std::uint64_t>(e)));
                   Draw& dr = draws[static_cast<std::size_t>(job)];
                   dr.side = tiling.side;
                   dr.cubes.assign(static_cast<std::size_t>(tiling.n_cubes), 0.0);
                   std::int64_t kept = 0;
                   for (std::int64_t w = 0; w < walks; ++w) {
                     Trajectory traj =
                         simulate(env, offsets[static_cast<std::size_t>(s)], block, cap,
                                  static_cast<std::uint64_t>(job * walks + w));
                     if (traj.stop_reason != StopReason::RightBoundary) continue;
                     Point y = traj.final_position();
                     ++kept;
                     for (int c = 0; c < d; ++c) dr.expectation[c] += static_cast<double>(y[c]);
                     dr.cubes[static_cast<std::size_t>(tiling.index_of(y))] += 1.0;
                   }
                   if (kept > 0) {
                     for (int c = 0; c < d; ++c) dr.expectation[c] /= static_cast<double>(kept);
                     for (double& q : dr.cubes) q /= static_cast<double>(kept);
                   }
                 });
  }

  for (std::size_t s = 0; s < offsets.size(); ++s) {
    AnnealedReference::PerSite site;
    site.offset = offsets[s];
    std::size_t max_cubes = 0;
    for (std::int64_t e = 0; e < env_count; ++e) {
      const Draw& dr = draws[static_cast<std::size_t>(e) * offsets.size() + s];
      max_cubes = std::max(max_cubes, dr.cubes.size());
      site.cube_side = dr.side;
    }
    site.cube_probs.assign(max_cubes, 0.0);
    site.cube_se.assign(max_cubes, 0.0);
    for (int c = 0; c < d; ++c) {
      std::vector<double> xs;
      for (std::int64_t e = 0; e < env_count; ++e)
        xs.push_back(draws[static_cast<std::size_t>(e) * offsets.size() + s].expectation[c]);
      MeanSe ms = mean_se(xs);
      site.expectation[c] = ms.mean;
      site.expectation_se[c] = ms.se;
    }
    for (std::size_t q = 0; q < max_cubes; ++q) {
      std::vector<double> xs;
      for (std::int64_t e = 0; e < env_count; ++e) {
        const Draw& dr = draws[static_cast<std::size_t>(e) * offsets.size() + s];
        xs.push_back(q < dr.cubes.size() ? dr.cubes[q] : 0.0);
      }
      MeanSe ms = mean_se(xs);
      site.cube_probs[q] = ms.mean;
      site.cube_se[q] = ms.se;
    }
    ref.sites.push_back(std::move(site));
  }
  return ref;
}

BlockReport classify_block(const Environment& env, const Point& anchor, std::int64_t N,
                           double gamma, const AnnealedReference& reference,
                           const TestSitePolicy& policy, const SolveOptions& solve) {
  require(reference.N == N, Errc::ReferenceMismatch, "reference built for a different scale");
  require(reference.d == env.dim(), Errc::ReferenceMismatch, "reference dimension mismatch");

  const int d = env.dim();
  Region block = Region::block(d, anchor, N, reference.vhat);
  BlockReport rep;
  rep.anchor = anchor;
  rep.N = N;
  rep.thresholds = block_thresholds(N, gamma, reference.theta, d);

  // Metric 1: wrong-exit probability max over the middle third; one h-solve
  // covers every site. Subsample deterministically above the budget.
  SolveOptions h_only = solve;
  h_only.exit_distribution = false;
  ExitSolution hsol = solve_exit(env, block, anchor, h_only);
  {
    BoundingBox bb = block.interior_bbox();
    Point p = bb.lo;
    std::int64_t stride = 1;
    std::int64_t middle_count = 0;
    // Count middle-third sites first to pick the subsample stride.
    for (bool more = true; more;) {
      if (block.in_middle_third(p)) ++middle_count;
      more = false;
      for (int i = d - 1; i >= 0; --i) {
        if (++p[i] <= bb.hi[i]) {
          more = true;
          break;
        }
        p[i] = bb.lo[i];
      }
    }
    if (middle_count > policy.site_budget)
      stride = (middle_count + policy.site_budget - 1) / policy.site_budget;
    p = bb.lo;
    std::int64_t seen = 0;
    for (bool more = true; more;) {
      if (block.in_middle_third(p)) {
        if (seen % stride == 0) {
          rep.metric1 = std::max(rep.metric1, 1.0 - hsol.h_at(p));
          ++rep.metric1_sites;
        }
        ++seen;
      }
      more = false;
      for (int i = d - 1; i >= 0; --i) {
        if (++p[i] <= bb.hi[i]) {
          more = true;
          break;
        }
        p[i] = bb.lo[i];
      }
    }
  }

  if (rep.metric1 > rep.thresholds.wrong_exit) {
    rep.good = false;
    rep.metrics23_evaluated = false;
    return rep;
  }

  // Metrics 2 and 3: conditioned exit laws at the policy sites vs reference.
  SolveOptions adjoint = solve;
  adjoint.forward_field = false;
  for (const auto& site : reference.sites) {
    Point z = anchor;
    for (int i = 0; i < d; ++i) z[i] += site.offset[i];
    ExitSolution sol = solve_exit(env, block, z, adjoint);
    ConditionalExitStats st = conditional_exit_stats(sol, reference.theta);
    double gap = 0;
    for (int i = 0; i < d; ++i) {
      double ref_i = site.expectation[i] + static_cast<double>(anchor[i]);
      gap += std::fabs(st.expectation[i] - ref_i);
    }
    rep.metric2 = std::max(rep.metric2, gap);
    rep.metric3 = std::max(rep.metric3, max_abs_gap(st.cube_probs, site.cube_probs));
  }

  rep.good = rep.metric2 <= rep.thresholds.expectation_gap &&
             rep.metric3 <= rep.thresholds.cube_gap;
  return rep;
}

std::vector<Point> enumerate_blocks(std::int64_t N, const Region& window, const Vec& vhat) {
  require(N >= 2, Errc::BadParameter, "block scale must be >= 2");
  const int d = window.dim();
  Vec v = normalized(vhat, d);
  const std::int64_t e1_spacing = N * N;
  const std::int64_t tr_spacing = std::max<std::int64_t>(1, scale_R_unchecked(6, N) * N / 4);

  BoundingBox wbb = window.interior_bbox();
  // A block anchored at x reaches e1 within (x0 - N^2, x0 + N^2) and
  // transversally within the oblique tube; pad the window box accordingly.
  Region proto = Region::block(d, Point{}, N, v);
  BoundingBox pbb = proto.interior_bbox();

  std::vector<Point> anchors;
  std::array<std::int64_t, kMaxDim> lo{}, hi{}, spacing{};
  for (int i = 0; i < d; ++i) {
    std::int64_t s = i == 0 ? e1_spacing : tr_spacing;
    spacing[i] = s;
    std::int64_t reach_lo = pbb.hi[i];  // block extends anchor + [pbb.lo, pbb.hi]
    std::int64_t reach_hi = -pbb.lo[i];
    lo[i] = static_cast<std::int64_t>(std::floor(static_cast<double>(wbb.lo[i] - reach_lo) /
                                                 static_cast<double>(s)));
    hi[i] = static_cast<std::int64_t>(std::ceil(static_cast<double>(wbb.hi[i] + reach_hi) /
                                                static_cast<double>(s)));
  }
  std::array<std::int64_t, kMaxDim> c{};
  for (int i = 0; i < d; ++i) c[i] = lo[i];
  while (true) {
    Point anchor{};
    for (int i = 0; i < d; ++i) anchor[i] = c[i] * spacing[i];
    // Keep anchors whose block bounding box meets the window bounding box;
    // the real-interval relaxation may over-include but never misses.
    bool meets = true;
    for (int i = 0; i < d; ++i) {
      std::int64_t blo = anchor[i] + pbb.lo[i];
      std::int64_t bhi = anchor[i] + pbb.hi[i];
      if (bhi < wbb.lo[i] || blo > wbb.hi[i]) {
        meets = false;
        break;
      }
    }
    if (meets) anchors.push_back(anchor);
    int i = d - 1;
    while (i >= 0 && ++c[i] > hi[i]) {
      c[i] = lo[i];
      --i;
    }
    if (i < 0) break;
  }
  std::sort(anchors.begin(), anchors.end());
  return anchors;
}

CensusReport bad_block_census(const Environment& env, std::int64_t L,
                              const ScaleLadder& ladder, const LadderParams& params,
                              double gamma, double cone_delta,
                              const std::vector<AnnealedReference>& references,
                              const Vec& vhat, const TestSitePolicy& policy, int workers,
                              const SolveOptions& solve) {
  require(references.size() == ladder.levels.size(), Errc::ReferenceMismatch,
          "one reference per ladder level required");
  const int d = env.dim();
  Region cone = Region::cone(d, static_cast<double>(L), cone_delta, 0, vhat);

  CensusReport out;
  out.count_threshold = std::pow(static_cast<double>(L), params.alpha + params.delta);
  for (std::size_t k = 0; k < ladder.levels.size(); ++k) {
    std::int64_t Lk = ladder.levels[k];
    require(references[k].N == Lk, Errc::ReferenceMismatch,
            "reference scale does not match ladder level");
    std::vector<Point> anchors = enumerate_blocks(Lk, cone, vhat);
    std::vector<BlockReport> reports(anchors.size());
    parallel_for(static_cast<std::int64_t>(anchors.size()), workers, [&](std::int64_t i) {
      reports[static_cast<std::size_t>(i)] =
          classify_block(env, anchors[static_cast<std::size_t>(i)], Lk, gamma, references[k],
                         policy, solve);
    });
    std::int64_t bad = 0;
    for (const auto& r : reports)
      if (!r.good) ++bad;
    out.levels.push_back(Lk);
    out.bad_counts.push_back(bad);
    out.block_totals.push_back(static_cast<std::int64_t>(anchors.size()));
    out.reports.insert(out.reports.end(), reports.begin(), reports.end());
  }
  out.theta_holds = true;
  for (std::int64_t bad : out.bad_counts)
    if (static_cast<double>(bad) > out.count_threshold) out.theta_holds = false;
  return out;
}

}  // namespace rwre
