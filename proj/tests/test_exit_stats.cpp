#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "rwre/error.hpp"
#include "rwre/exit_stats.hpp"

using namespace rwre;

namespace {

EnvironmentModel biased() {
  return EnvironmentModel::deterministic(2, Kernel::of(2, {0.4, 0.2, 0.2, 0.2}));
}

ExitTailQuery slab_query(double L, double beta, double c, std::int64_t M) {
  ExitTailQuery q;
  q.geometry = TailGeometry::Slab;
  q.c = c;
  q.beta = beta;
  q.L = L;
  q.l = axis_vec(0, 2);
  q.M = M;
  q.slab_width = 64;
  return q;
}

}  // namespace

TEST_CASE("deterministic biased tail has zero below-threshold fraction, exactly") {
  TailReport rep = atypical_exit_tail(biased(), 5, slab_query(16, 0.5, 1.0, 32), 2);
  CHECK(rep.fraction == 0.0);
  for (double p : rep.probs) {
    CHECK(p == rep.probs[0]);  // deterministic environment: identical values
    CHECK(p > 0.9);
  }
}

TEST_CASE("trap mixture produces tail events at the mixture weight") {
  ExitTailQuery q = slab_query(16, 0.5, 1.0, 400);
  q.trap = TrapMixture{TrapOverlay{point_of({-4, 0}), 8, 0.01, 0.97}, 0.05};
  TailReport rep = atypical_exit_tail(biased(), 12, q, 2);
  std::int64_t trapped = 0, below = 0;
  for (std::int64_t i = 0; i < rep.M; ++i) {
    trapped += rep.trapped[static_cast<std::size_t>(i)];
    below += rep.below[static_cast<std::size_t>(i)];
    // Every trapped instance must sit below the threshold and vice versa.
    CHECK(rep.trapped[static_cast<std::size_t>(i)] == rep.below[static_cast<std::size_t>(i)]);
    if (rep.trapped[static_cast<std::size_t>(i)])
      CHECK(rep.probs[static_cast<std::size_t>(i)] <= rep.threshold);
  }
  CHECK(trapped > 0);
  CHECK(rep.fraction == doctest::Approx(static_cast<double>(below) / 400.0));
}

TEST_CASE("underflowing thresholds give fraction zero with a warning") {
  ExitTailQuery q = slab_query(16, 0.5, 1e6, 8);
  TailReport rep = atypical_exit_tail(biased(), 5, q, 2);
  CHECK(rep.underflow);
  CHECK(rep.threshold == 0.0);
  CHECK(rep.fraction == 0.0);
}

TEST_CASE("box and cone geometries solve as well") {
  ExitTailQuery q = slab_query(8, 0.5, 1.0, 4);
  q.geometry = TailGeometry::Box;
  q.K = 1.0;
  TailReport box = atypical_exit_tail(biased(), 5, q, 2);
  CHECK(box.probs[0] > 0.5);
  q.geometry = TailGeometry::Cone;
  q.cone_delta = 0.3;
  q.vhat = axis_vec(0, 2);
  TailReport cone = atypical_exit_tail(biased(), 5, q, 2);
  CHECK(cone.probs[0] > 0.0);
}

TEST_CASE("tail grid fits a descriptive exponent when frequencies exist") {
  ExitTailQuery q = slab_query(8, 0.5, 1.0, 120);
  q.trap = TrapMixture{TrapOverlay{point_of({-2, 0}), 12, 0.01, 0.97}, 0.5};
  TailGridReport grid = atypical_exit_tail_grid(biased(), 4, q, {8, 12, 16}, 2);
  REQUIRE(grid.reports.size() == 3);
  // The trap forces events at every L here, so the fit exists.
  bool any = false;
  for (const auto& r : grid.reports) any = any || r.fraction > 0;
  if (any && grid.alpha_hat) CHECK(std::isfinite(*grid.alpha_hat));
}

TEST_CASE("exit-point floor: admissibility, symmetry, and mass accounting") {
  auto model = EnvironmentModel::dirichlet(2, {6.0, 1.0, 2.0, 2.0}, 0.005);
  ExitFloorReport rep =
      exit_point_floor(model, 9, 8, 6, 1.0, axis_vec(0, 2), Point{}, 2);
  REQUIRE(!rep.table.empty());
  double total = 0;
  for (const auto& row : rep.table) {
    total += row.prob;
    // Admissible rows satisfy the l1 bound, inadmissible ones violate it.
    double t = std::fabs(static_cast<double>(row.y[1]));
    CHECK(row.admissible == (t < 8.0));
    if (row.admissible) CHECK(row.scaled >= rep.floor);
  }
  CHECK(total == doctest::Approx(rep.right_mass).epsilon(1e-9));
  CHECK(rep.floor > 0.0);
}

TEST_CASE("transversally symmetric floor table reflects") {
  ExitFloorReport rep = exit_point_floor(biased(), 3, 8, 1, 1.5, axis_vec(0, 2), Point{}, 1);
  for (const auto& row : rep.table) {
    Point mirror = row.y;
    mirror[1] = -mirror[1];
    bool found = false;
    for (const auto& other : rep.table) {
      if (other.y == mirror) {
        CHECK(other.prob == doctest::Approx(row.prob).epsilon(1e-8));
        found = true;
      }
    }
    CHECK(found);
  }
}

TEST_CASE("direction gap demands drift") {
  auto srw = EnvironmentModel::deterministic(2, Kernel::srw(2));
  CHECK_THROWS_AS((void)direction_gap(srw, 5, 4, 100, 1000, 2), Error);
}

TEST_CASE("deterministic drift model has a small direction gap") {
  auto model = EnvironmentModel::deterministic(2, Kernel::of(2, {0.45, 0.25, 0.15, 0.15}));
  DirectionGapReport rep = direction_gap(model, 21, 4, 600, 4000, 2);
  CHECK(rep.gap <= 0.05);
  CHECK(rep.boot_lo <= rep.gap + 1e-12);
  CHECK(rep.boot_hi >= rep.gap - 1e-12);
}

TEST_CASE("fluctuation report decomposes into its sub-events") {
  auto model = EnvironmentModel::deterministic(2, Kernel::of(2, {0.7, 0.1, 0.1, 0.1}));
  FluctuationReport rep =
      transversal_fluctuation_tail(model, 8, 16, 600, Point{}, axis_vec(0, 2), 3, 2);
  CHECK(rep.p_union <= rep.p_transversal + rep.p_backtrack + 1e-12);
  CHECK(rep.p_union >= std::max(rep.p_transversal, rep.p_backtrack) - 1e-12);
  CHECK(rep.p_union <= 0.01);  // strongly biased walk stays in the tube
}

TEST_CASE("raising the transversal scale index never increases that frequency") {
  auto model = EnvironmentModel::perturbed_srw(2, 0.15, 0);
  FluctuationReport r3 =
      transversal_fluctuation_tail(model, 8, 16, 300, Point{}, axis_vec(0, 2), 3, 2);
  FluctuationReport r4 =
      transversal_fluctuation_tail(model, 8, 16, 300, Point{}, axis_vec(0, 2), 4, 2);
  CHECK(r4.p_transversal <= r3.p_transversal + 1e-12);
}

TEST_CASE("shared starts always intersect") {
  auto model = EnvironmentModel::deterministic(2, Kernel::of(2, {0.7, 0.1, 0.1, 0.1}));
  IntersectionReport rep =
      intersection_census(model, 4, 16, 50, Point{}, Point{}, axis_vec(0, 2), 2);
  for (auto c : rep.counts) CHECK(c >= 1);
  CHECK(rep.dimension_warning);  // d = 2
}

TEST_CASE("swapping the two walks leaves the counts unchanged") {
  auto model = EnvironmentModel::dirichlet(2, {4.0, 1.0, 2.0, 2.0}, 0.01);
  IntersectionReport a =
      intersection_census(model, 4, 8, 40, point_of({0, 3}), point_of({0, -3}), axis_vec(0, 2), 2);
  // Swapped starts walk with swapped stream ids, so per-replica counts need
  // not match pairwise; compare the full distributions instead.
  IntersectionReport b =
      intersection_census(model, 4, 8, 40, point_of({0, -3}), point_of({0, 3}), axis_vec(0, 2), 2);
  auto sorted = [](std::vector<std::int64_t> v) {
    std::sort(v.begin(), v.end());
    return v;
  };
  CHECK(sorted(a.counts) == sorted(b.counts));
}

TEST_CASE("d=4 intersections decay over the tail grid") {
  auto model = EnvironmentModel::deterministic(
      4, Kernel::of(4, {0.44, 0.08, 0.08, 0.08, 0.08, 0.08, 0.08, 0.08}));
  IntersectionReport rep = intersection_census(model, 6, 16, 400, Point{},
                                               point_of({0, 8, 0, 0}), axis_vec(0, 4), 2);
  CHECK_FALSE(rep.dimension_warning);
  CHECK(rep.tail[0] >= rep.tail[1]);
  CHECK(rep.tail[1] >= rep.tail[2]);
}
