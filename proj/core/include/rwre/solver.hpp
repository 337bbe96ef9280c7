#pragma once

#include <cstdint>
#include <map>
#include <vector>

#include "rwre/environment.hpp"
#include "rwre/region.hpp"

namespace rwre {

enum class SolveMethod { GaussSeidel, Jacobi };

struct SolveOptions {
  double tolerance = 1e-12;
  std::int64_t max_iterations = 1'000'000;
  SolveMethod method = SolveMethod::GaussSeidel;
  std::int64_t max_sites = 10'000'000;
  bool exit_distribution = true;  // adjoint solve for the start-site exit law
  bool forward_field = true;      // right-exit field h; when skipped, h_start
                                  // falls back to the adjoint right mass
};

struct BoundaryAtom {
  Point y{};
  double prob = 0.0;
  bool right = false;
};

// Exact quenched harmonic data on a finite region: the right-exit probability
// field h (h = 1 on the right boundary part, 0 elsewhere) and the absorption
// distribution from the start site.
class ExitSolution {
 public:
  const Region& region() const { return region_; }
  const Point& start() const { return start_; }

  double h_start() const { return h_start_; }
  double h_at(const Point& x) const;  // interior sites only

  const std::vector<BoundaryAtom>& exit_distribution() const { return atoms_; }
  double right_mass() const { return right_mass_; }

  std::int64_t iterations() const { return iterations_; }
  double max_residual() const { return max_residual_; }
  std::int64_t interior_sites() const { return n_interior_; }

 private:
  friend ExitSolution solve_exit(const Environment&, const Region&, const Point&,
                                 const SolveOptions&);

  ExitSolution(Region region, Point start) : region_(std::move(region)), start_(start) {}

  Region region_;
  Point start_{};
  double h_start_ = 0.0;
  double right_mass_ = 0.0;
  std::int64_t iterations_ = 0;
  double max_residual_ = 0.0;
  std::int64_t n_interior_ = 0;

  // Grid bookkeeping for h_at lookups.
  BoundingBox bbox_{};
  std::array<std::int64_t, kMaxDim> dims_{};
  std::vector<std::int32_t> cell_index_;
  std::vector<double> h_;
  std::vector<BoundaryAtom> atoms_;
};

ExitSolution solve_exit(const Environment& env, const Region& region, const Point& start,
                        const SolveOptions& options = {});

// Quenched odds of a wrong exit: (1 - h(0)) / h(0). DegenerateRho when the
// right-exit probability vanishes (possible only in test mode).
double rho_of_box(const Environment& env, const Region& region,
                  const SolveOptions& options = {});

struct ConditionalExitStats {
  Vec expectation{};          // under the exit law conditioned on the right part
  double variance_l1sq = 0;   // E || Z - EZ ||_1^2 under the conditioned law
  std::vector<double> cube_probs;
  std::int64_t cube_side = 0;
  std::vector<std::int64_t> cube_grid_dims;
  double right_mass = 0;
};

// Conditioned exit statistics; the hypercube tiling uses side
// ceil(scale^theta) over the transversal coordinates of the right part,
// anchored at its minimal corner.
ConditionalExitStats conditional_exit_stats(const ExitSolution& sol, double theta);

}  // namespace rwre
