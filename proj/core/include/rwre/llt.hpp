#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "rwre/environment.hpp"
#include "rwre/solver.hpp"

namespace rwre {

// Finitely supported probability law on Z^d.
struct LatticeLaw {
  int d = 1;
  std::vector<std::pair<Point, double>> atoms;  // sorted by point

  void validate() const;  // mass 1 within 1e-12, entries >= 0
  double mass() const;
  static LatticeLaw srw(int d);
  static LatticeLaw of(int d, std::vector<std::pair<Point, double>> atoms);
};

// Exact n-fold convolution of the law with itself, long-double accumulation.
// SupportTooLarge when the support would exceed the cap.
LatticeLaw convolve_power(const LatticeLaw& law, std::int64_t n,
                          std::int64_t support_cap = 4'000'000);

struct LltCell {
  std::int64_t n = 0;
  double sup_p = 0;
  double sup_first = 0;   // step along a lattice axis (2 steps on a parity class)
  double sup_second = 0;
  double sup_mixed = 0;   // d >= 2 only
};

struct LltReport {
  std::vector<LltCell> cells;
  bool parity_restricted = false;  // differences taken within one parity class
  double exp_sup = 0;      // fitted decay exponents (positive)
  double exp_first = 0;
  double exp_second = 0;
  double exp_mixed = 0;    // 0 when d = 1
};

// Sup bounds and discrete derivatives of the n-step law over an increasing
// grid (>= 3 points), with log-log least-squares decay exponents.
LltReport llt_discrepancy_report(const LatticeLaw& law, const std::vector<std::int64_t>& n_grid,
                                 std::int64_t support_cap = 4'000'000);

struct ExitKernelCell {
  std::int64_t L = 0;
  double sup_nu = 0;
  double sup_diff = 0;
  double scaled_sup = 0;   // L^{d-1} sup_nu
  double scaled_diff = 0;  // L^d sup_diff
  double right_mass = 0;
};

struct ExitKernelReport {
  std::vector<ExitKernelCell> cells;
  std::int64_t M = 0;
};

// Annealed block-exit law on the hyperplane at level L^2: sup and transversal
// first-difference sup, scaled per the local-limit rates.
ExitKernelReport exit_kernel_smoothness(const EnvironmentModel& model, std::uint64_t master_seed,
                                        const std::vector<std::int64_t>& L_grid, std::int64_t M,
                                        const Vec& vhat, int workers = 1,
                                        const SolveOptions& solve = {});

}  // namespace rwre
