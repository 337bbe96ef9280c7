#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "rwre/environment.hpp"
#include "rwre/solver.hpp"
#include "rwre/walk.hpp"

namespace rwre {

enum class TailGeometry { Slab, Box, Cone };

// Overlay applied to a fraction of environments; the sanctioned mechanism for
// producing observable tail events at desk scales.
struct TrapMixture {
  TrapOverlay overlay;
  double weight = 0.0;
};

struct ExitTailQuery {
  TailGeometry geometry = TailGeometry::Slab;
  double c = 1.0;
  double beta = 0.5;
  double L = 16;
  Vec l{};                      // slab/box direction
  int axis = 0;                 // cone axis
  double K = 1.0;               // box transversal factor
  double cone_delta = 0.2;
  std::int64_t M = 1;
  std::int64_t slab_width = 0;  // periodic width for the slab solve (default 4L)
  Vec vhat{};                   // cone geometry
  std::optional<TrapMixture> trap;
};

struct TailReport {
  double threshold = 0.0;       // e^{-c L^beta}
  bool underflow = false;
  double fraction = 0.0;        // empirical P(right-exit prob <= threshold)
  std::vector<double> probs;    // per-environment right-exit probability (exact)
  std::vector<std::uint8_t> below;
  std::vector<std::uint8_t> trapped;
  std::int64_t M = 0;
};

// Per environment, the exact right-exit probability of the query geometry;
// the report's fraction is the frequency of environments at or below the
// threshold e^{-c L^beta}.
TailReport atypical_exit_tail(const EnvironmentModel& model, std::uint64_t master_seed,
                              const ExitTailQuery& query, int workers = 1,
                              const SolveOptions& solve = {});

// Least-squares tail exponent from log(-log frequency) against log L over a
// grid; empty when no grid point has a nonzero frequency.
struct TailGridReport {
  std::vector<double> L_grid;
  std::vector<TailReport> reports;
  std::optional<double> alpha_hat;
};
TailGridReport atypical_exit_tail_grid(const EnvironmentModel& model, std::uint64_t master_seed,
                                       ExitTailQuery query, const std::vector<double>& L_grid,
                                       int workers = 1, const SolveOptions& solve = {});

struct ExitFloorRow {
  Point y{};
  double prob = 0.0;    // annealed exit-point probability
  double scaled = 0.0;  // L^{d-1} prob
  bool admissible = false;
};

struct ExitFloorReport {
  double floor = 0.0;  // min of scaled over admissible rows
  std::vector<ExitFloorRow> table;
  double right_mass = 0.0;  // annealed right-exit probability from x
  std::int64_t L = 0;
};

// Annealed exit-point probabilities on the right face of P(0, L) from x;
// admissible rows have |oblique_perp(vhat)(y - x)|_1 < Cprime L.
ExitFloorReport exit_point_floor(const EnvironmentModel& model, std::uint64_t master_seed,
                                 std::int64_t L, std::int64_t M, double Cprime,
                                 const Vec& vhat, const Point& x, int workers = 1,
                                 const SolveOptions& solve = {});

struct DirectionGapReport {
  double gap = 0.0;  // || v_emp - v_L_emp ||_2
  double boot_lo = 0.0, boot_hi = 0.0;
  std::int64_t usable = 0;
};

DirectionGapReport direction_gap(const EnvironmentModel& model, std::uint64_t master_seed,
                                 std::int64_t L, std::int64_t M, std::int64_t horizon,
                                 int workers = 1);

struct FluctuationReport {
  double p_union = 0.0;
  double p_transversal = 0.0;  // |oblique_perp(vhat)(X_n - x)|_inf >= R_3(L) L
  double p_backtrack = 0.0;    // (X_n - x).e_1 < -R_2(L)
  std::int64_t M = 0;
  std::int64_t transversal_index = 3;  // R index used for the transversal bound
};

// Frequency of the event F_{x,L} (big transversal excursion or backtrack
// before reaching the hyperplane level L^2), one environment per replica.
FluctuationReport transversal_fluctuation_tail(const EnvironmentModel& model,
                                               std::uint64_t master_seed, std::int64_t L,
                                               std::int64_t M, const Point& x, const Vec& vhat,
                                               int transversal_index = 3, int workers = 1);

struct IntersectionReport {
  std::vector<std::int64_t> counts;  // per replica, |traj1 ∩ traj2 ∩ P(0,L)|
  std::vector<double> tail;          // P(count > m R_2(L)^{d+1}), m = 1..3
  double mean = 0.0;
  bool dimension_warning = false;    // d < 4
  std::int64_t M = 0;
};

// Two independent quenched walks per environment; counts distinct shared
// lattice points inside the block P(0, L).
IntersectionReport intersection_census(const EnvironmentModel& model, std::uint64_t master_seed,
                                       std::int64_t L, std::int64_t M, const Point& x1,
                                       const Point& x2, const Vec& vhat, int workers = 1);

}  // namespace rwre
