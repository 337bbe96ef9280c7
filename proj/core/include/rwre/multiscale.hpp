#pragma once

#include <cstdint>
#include <vector>

#include "rwre/environment.hpp"
#include "rwre/region.hpp"
#include "rwre/scales.hpp"
#include "rwre/solver.hpp"

namespace rwre {

struct BlockThresholds {
  double wrong_exit = 0;        // e^{-R_1(N)^gamma}
  double expectation_gap = 0;   // R_4(N)
  double cube_gap = 0;          // N^{(theta-1)(d-1) - theta (d-1)/(d+1)}
};

BlockThresholds block_thresholds(std::int64_t N, double gamma, double theta, int d);

// Deterministic stratified grid of test sites in the middle third; the same
// offsets are used for the annealed reference and for every classified block.
struct TestSitePolicy {
  int per_axis = 3;             // stratified grid points per axis
  std::int64_t site_budget = 16384;  // metric_1 scans all middle-third sites up to this
};

std::vector<Point> test_site_offsets(std::int64_t N, const Vec& vhat, int d,
                                     const TestSitePolicy& policy);

// Fixed axis-aligned tiling of the block's right face by (d-1)-cubes of side
// ceil(N^theta), anchored at the face's minimal corner.
struct CubeTiling {
  int d = 2;
  std::int64_t side = 1;
  Point min_corner{};
  std::array<std::int64_t, kMaxDim> dims{};  // transversal axes 1..d-1
  std::int64_t n_cubes = 1;

  std::int64_t index_of(const Point& y) const;
};

CubeTiling block_right_face_tiling(const Point& anchor, std::int64_t N, const Vec& vhat, int d,
                                   double theta);

// Monte Carlo annealed reference for the conditioned exit law of the block
// P(0, N): per test site, exact per-environment solves averaged over M
// environments (a single solve when the kernel field is deterministic).
struct AnnealedReference {
  std::int64_t N = 0;
  double theta = 0;
  Vec vhat{};
  int d = 2;
  TestSitePolicy policy;
  std::int64_t M = 0;
  bool mc_fallback = false;  // walk-simulation estimate (block too large to solve)

  struct PerSite {
    Point offset{};
    Vec expectation{};
    Vec expectation_se{};
    std::vector<double> cube_probs;
    std::vector<double> cube_se;
    std::int64_t cube_side = 0;
  };
  std::vector<PerSite> sites;
};

AnnealedReference annealed_reference(const EnvironmentModel& model, std::uint64_t master_seed,
                                     std::int64_t N, double theta, const Vec& vhat,
                                     std::int64_t M, const TestSitePolicy& policy = {},
                                     int workers = 1, const SolveOptions& solve = {});

struct BlockReport {
  Point anchor{};
  std::int64_t N = 0;
  double metric1 = 0;  // max wrong-exit probability over the middle third
  double metric2 = 0;  // max l1 gap of conditioned exit expectations vs reference
  double metric3 = 0;  // max hypercube probability gap vs reference
  BlockThresholds thresholds;
  bool good = false;
  std::int64_t metric1_sites = 0;   // middle-third sites scanned for metric 1
  bool metrics23_evaluated = true;  // false when metric 1 already failed
};

// Good/bad classification of the block P(anchor, N): metric 1 from the
// right-exit field over the whole middle third (subsampled above the site
// budget), metrics 2 and 3 from conditioned exit laws at the policy sites.
// A block that already fails the exit-probability condition is bad whatever
// the remaining metrics say, so those are skipped and flagged.
BlockReport classify_block(const Environment& env, const Point& anchor, std::int64_t N,
                           double gamma, const AnnealedReference& reference,
                           const TestSitePolicy& policy = {}, const SolveOptions& solve = {});

// Anchors x in L_N = N^2 Z x floor(R_6(N) N / 4) Z^{d-1} whose block P(x, N)
// meets the window, in lexicographic order.
std::vector<Point> enumerate_blocks(std::int64_t N, const Region& window, const Vec& vhat);

struct CensusReport {
  std::vector<std::int64_t> levels;
  std::vector<std::int64_t> bad_counts;   // J_{L_k}
  std::vector<std::int64_t> block_totals;
  double count_threshold = 0;             // L^{alpha + delta}
  bool theta_holds = false;
  std::vector<BlockReport> reports;       // all classified blocks, level-major
};

// Classifies every block of every ladder level whose block meets the cone
// window C_L and checks the bad-count bound J_{L_k} <= L^{alpha+delta}.
CensusReport bad_block_census(const Environment& env, std::int64_t L,
                              const ScaleLadder& ladder, const LadderParams& params,
                              double gamma, double cone_delta,
                              const std::vector<AnnealedReference>& references,
                              const Vec& vhat, const TestSitePolicy& policy = {},
                              int workers = 1, const SolveOptions& solve = {});

}  // namespace rwre
