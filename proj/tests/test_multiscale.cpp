#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "rwre/error.hpp"
#include "rwre/hashing.hpp"
#include "rwre/multiscale.hpp"
#include "rwre/scales.hpp"

using namespace rwre;

TEST_CASE("scale function golden values") {
  CHECK(scale_R(1, 16) == 3);
  CHECK(scale_R(1, 100) == 11);
  CHECK(scale_R(2, 100) == 36);
  CHECK(scale_R(2, 16) == 3);
}

TEST_CASE("scale function is monotone in k") {
  for (std::int64_t N : {16, 40, 100, 1000, 100000, 1000000}) {
    for (int k = 1; k <= 8; ++k) CHECK(scale_R(k + 1, N) >= scale_R(k, N));
  }
}

TEST_CASE("scale function rejects N below 16") {
  CHECK_THROWS_AS((void)scale_R(1, 15), Error);
  CHECK_THROWS_AS((void)scale_R(3, 2), Error);
}

TEST_CASE("explicit ladder fixture") {
  LadderParams p = LadderParams::explicit_mode(2, 4, 3, 0.5, 0.9, 0.05);
  ScaleLadder ladder = build_ladder(10000, p);
  CHECK(ladder.levels == std::vector<std::int64_t>{4, 12, 36, 108, 324});
  CHECK(ladder.iota == 5);
}

TEST_CASE("strictly increasing levels for explicit ladders") {
  LadderParams p = LadderParams::explicit_mode(2, 2, 2, 0.5, 0.9, 0.1);
  ScaleLadder ladder = build_ladder(400, p);
  for (std::size_t i = 1; i < ladder.levels.size(); ++i)
    CHECK(ladder.levels[i] > ladder.levels[i - 1]);
}

TEST_CASE("paper-mode ladder degenerates when floor(L^chi) is 1") {
  // Valid regime admitting chi = 0.02: beta=0.5, delta=0.0385, psi=0.0825.
  LadderParams p = LadderParams::paper(2, 0.05, 0.5, 0.0385, 0.0825, 0.02);
  CHECK_THROWS_AS((void)build_ladder(1000000, p), Error);  // 10^0.12 ~ 1.318
}

TEST_CASE("paper-mode parameter windows are enforced") {
  CHECK_THROWS_AS((void)LadderParams::paper(2, 0.05, 0.5, 0.2, 0.41, 0.02), Error);   // delta
  CHECK_THROWS_AS((void)LadderParams::paper(2, 0.05, 0.5, 0.0385, 0.2, 0.02), Error); // psi
  CHECK_THROWS_AS((void)LadderParams::paper(2, 0.05, 0.5, 0.0385, 0.0825, 0.5), Error);  // chi
  CHECK_THROWS_AS((void)LadderParams::explicit_mode(2, 4, 1, 0.5, 0.9, 0.05), Error); // m
}

TEST_CASE("block anchors use the sublattice spacing") {
  Vec vhat = axis_vec(0, 2);
  // Window: a small cone around the axis.
  Region window = Region::cone(2, 60.0, 0.25, 0, vhat);
  std::vector<Point> anchors = enumerate_blocks(16, window, vhat);
  REQUIRE(!anchors.empty());
  // Spacing (N^2, floor(R_6(16) * 16 / 4)) = (256, 16).
  for (const Point& a : anchors) {
    CHECK(a[0] % 256 == 0);
    CHECK(a[1] % 16 == 0);
  }
  // Lexicographic order.
  for (std::size_t i = 1; i < anchors.size(); ++i) CHECK(anchors[i - 1] < anchors[i]);
}

TEST_CASE("empty windows produce no anchors") {
  Vec vhat = axis_vec(0, 2);
  Region window = Region::slab(2, axis_vec(0, 2), 1.0, 1.0, Transversal::Absorbing, 1);
  // A thin slab far from any block of scale 64: blocks still meet it, so use
  // a window that the block lattice cannot reach: impossible here, so check
  // instead that a tiny window yields a small anchor set.
  std::vector<Point> anchors = enumerate_blocks(16, window, vhat);
  CHECK(anchors.size() <= 9);
}

TEST_CASE("middle-third coverage by sublattice anchors") {
  // For 100 random e1-aligned points with x.e1 in N^2 Z, some anchor's block
  // middle third contains the point.
  Vec vhat = axis_vec(0, 2);
  std::int64_t N = 16;
  Region window = Region::cone(2, 200.0, 0.3, 0, vhat);
  std::vector<Point> anchors = enumerate_blocks(N, window, vhat);
  std::uint64_t key = 12345;
  for (int trial = 0; trial < 100; ++trial) {
    key = splitmix64(key);
    std::int64_t x1 = static_cast<std::int64_t>(key % 3) * 256;
    std::int64_t x2 = static_cast<std::int64_t>(splitmix64(key) % 41) - 20;
    Point x = point_of({x1, x2});
    if (!window.contains(x)) continue;
    bool covered = false;
    for (const Point& a : anchors) {
      Region block = Region::block(2, a, N, vhat);
      if (block.in_middle_third(x)) covered = true;
    }
    CHECK(covered);
  }
}

TEST_CASE("block thresholds evaluate the pinned formulas") {
  BlockThresholds t = block_thresholds(16, 0.5, 0.5, 2);
  CHECK(t.wrong_exit == doctest::Approx(std::exp(-std::sqrt(3.0))).epsilon(1e-12));
  CHECK(t.expectation_gap == doctest::Approx(4.0));
  CHECK(t.cube_gap == doctest::Approx(std::pow(16.0, -0.5 - 0.5 / 3.0)).epsilon(1e-12));
}

TEST_CASE("deterministic reference has zero error bars and deterministic blocks are good") {
  auto model = EnvironmentModel::deterministic(2, Kernel::of(2, {0.7, 0.1, 0.1, 0.1}));
  Vec vhat = axis_vec(0, 2);
  TestSitePolicy policy;
  policy.per_axis = 2;
  AnnealedReference ref = annealed_reference(model, 5, 16, 0.5, vhat, 10, policy, 2);
  CHECK(ref.M == 1);  // deterministic field: one exact solve
  for (const auto& site : ref.sites) {
    for (int c = 0; c < 2; ++c) CHECK(site.expectation_se[c] == 0.0);
    for (double se : site.cube_se) CHECK(se == 0.0);
  }
  Environment env = build_environment(model, 5);
  BlockReport rep = classify_block(env, Point{}, 16, 0.5, ref, policy);
  CHECK(rep.good);
  CHECK(rep.metric2 == 0.0);  // quenched equals annealed exactly
  CHECK(rep.metric3 == 0.0);
  CHECK(rep.metric1 <= rep.thresholds.wrong_exit);
}

TEST_CASE("a centered drift-killing trap flips the block to bad via metric one") {
  auto model = EnvironmentModel::deterministic(2, Kernel::of(2, {0.7, 0.1, 0.1, 0.1}));
  Vec vhat = axis_vec(0, 2);
  TestSitePolicy policy;
  policy.per_axis = 2;
  AnnealedReference ref = annealed_reference(model, 5, 16, 0.5, vhat, 1, policy, 2);
  Environment env = build_environment(model, 5);
  // Neutral ball: the local drift vanishes, so the walk diffuses into the
  // transversal faces long before reaching the right face.
  TrapOverlay ov{Point{}, 150, 0.2, 0.0};
  CHECK(ov.radius >= scale_R(1, 16));
  Environment trapped = apply_trap(env, ov);
  BlockReport rep = classify_block(trapped, Point{}, 16, 0.5, ref, policy);
  CHECK_FALSE(rep.good);
  CHECK(rep.metric1 > rep.thresholds.wrong_exit);
}

TEST_CASE("classification is monotone in thresholds") {
  auto model = EnvironmentModel::perturbed_srw(2, 0.2, 0);
  Vec vhat = axis_vec(0, 2);
  TestSitePolicy policy;
  policy.per_axis = 2;
  AnnealedReference ref = annealed_reference(model, 21, 16, 0.5, vhat, 8, policy, 2);
  Environment env = build_environment(model, 77);
  BlockReport rep = classify_block(env, Point{}, 16, 0.5, ref, policy);
  // Raising every threshold can only keep or improve the verdict.
  bool relaxed_good = rep.metric1 <= rep.thresholds.wrong_exit * 10 &&
                      rep.metric2 <= rep.thresholds.expectation_gap * 10 &&
                      rep.metric3 <= rep.thresholds.cube_gap * 10;
  if (rep.good) CHECK(relaxed_good);
}

TEST_CASE("reference mismatch is rejected") {
  auto model = EnvironmentModel::deterministic(2, Kernel::of(2, {0.7, 0.1, 0.1, 0.1}));
  Vec vhat = axis_vec(0, 2);
  TestSitePolicy policy;
  policy.per_axis = 2;
  AnnealedReference ref = annealed_reference(model, 5, 16, 0.5, vhat, 1, policy, 2);
  Environment env = build_environment(model, 5);
  CHECK_THROWS_AS((void)classify_block(env, Point{}, 32, 0.5, ref, policy), Error);
}

TEST_CASE("census of a deterministic biased model has no bad blocks") {
  auto model = EnvironmentModel::deterministic(2, Kernel::of(2, {0.7, 0.1, 0.1, 0.1}));
  Vec vhat = axis_vec(0, 2);
  LadderParams params = LadderParams::explicit_mode(2, 16, 2, 0.5, 0.9, 0.05);
  ScaleLadder ladder;
  ladder.L = 300;
  ladder.levels = {16};
  ladder.multiplier = 2;
  ladder.iota = 1;
  TestSitePolicy policy;
  policy.per_axis = 2;
  std::vector<AnnealedReference> refs{annealed_reference(model, 5, 16, 0.5, vhat, 1, policy, 2)};
  Environment env = build_environment(model, 5);
  CensusReport census =
      bad_block_census(env, 300, ladder, params, 0.5, 0.1, refs, vhat, policy, 2);
  REQUIRE(census.levels.size() == 1);
  CHECK(census.bad_counts[0] == 0);
  CHECK(census.block_totals[0] >= 1);
  CHECK(census.theta_holds);
  // theta_holds is exactly the conjunction of the per-level comparisons.
  bool recomputed = true;
  for (std::size_t k = 0; k < census.levels.size(); ++k)
    if (static_cast<double>(census.bad_counts[k]) > census.count_threshold) recomputed = false;
  CHECK(census.theta_holds == recomputed);
}

TEST_CASE("right-face cube tiling indexes every face atom") {
  Vec vhat = axis_vec(0, 2);
  CubeTiling t = block_right_face_tiling(Point{}, 8, vhat, 2, 0.5);
  CHECK(t.side == static_cast<std::int64_t>(std::ceil(std::pow(8.0, 0.5))));
  // Face atoms: e1 offset 64, |y2| <= 15 (transversal radius 16).
  CHECK(t.min_corner[0] == 64);
  std::int64_t w = Region::block(2, Point{}, 8, vhat).block_transversal_radius();
  for (std::int64_t y = -(w - 1); y <= w - 1; ++y) {
    std::int64_t idx = t.index_of(point_of({64, y}));
    CHECK(idx >= 0);
    CHECK(idx < t.n_cubes);
  }
}
