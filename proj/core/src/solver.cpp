#include "rwre/solver.hpp"

#include <algorithm>
#include <cmath>

#include "rwre/error.hpp"

namespace rwre {

namespace {

constexpr std::int32_t kOther = -1;  // absorbing atom, h = 0
constexpr std::int32_t kRight = -2;  // absorbing atom, h = 1

struct Grid {
  int d = 2;
  BoundingBox bb{};
  std::array<std::int64_t, kMaxDim> dims{};
  std::array<std::int64_t, kMaxDim> strides{};
  std::int64_t n_cells = 0;
  std::int64_t n_interior = 0;
  std::vector<std::int32_t> index;     // cell -> interior index, kOther or kRight
  std::vector<std::int64_t> cell_of;   // interior index -> linear cell
  bool wrap[kMaxDim] = {};
  std::int64_t period[kMaxDim] = {};

  Point point_of_cell(std::int64_t cell) const {
    Point p{};
    for (int i = d - 1; i >= 0; --i) {
      p[i] = bb.lo[i] + cell % dims[i];
      cell /= dims[i];
    }
    return p;
  }

  // Neighbor linear cell in direction dir, or -1 when outside the grid.
  std::int64_t neighbor_cell(std::int64_t cell, const Point& p, int dir) const {
    int axis = dir_axis(dir);
    std::int64_t c = p[axis] + dir_sign(dir);
    if (wrap[axis]) {
      if (c < bb.lo[axis]) return cell + (period[axis] - 1) * strides[axis];
      if (c > bb.hi[axis]) return cell - (period[axis] - 1) * strides[axis];
      return cell + dir_sign(dir) * strides[axis];
    }
    if (c < bb.lo[axis] || c > bb.hi[axis]) return -1;
    return cell + dir_sign(dir) * strides[axis];
  }
};

Grid build_grid(const Region& region, const SolveOptions& options) {
  Grid g;
  g.d = region.dim();
  g.bb = region.interior_bbox();
  double vol = g.bb.volume(g.d);
  require(vol <= 8.0 * static_cast<double>(options.max_sites) + 1024.0, Errc::RegionTooLarge,
          "region bounding box exceeds the configured site budget");
  g.n_cells = static_cast<std::int64_t>(vol);
  std::int64_t s = 1;
  for (int i = g.d - 1; i >= 0; --i) {
    g.dims[i] = g.bb.hi[i] - g.bb.lo[i] + 1;
    g.strides[i] = s;
    s *= g.dims[i];
  }
  if (region.periodic()) {
    for (int i = 1; i < g.d; ++i) {
      g.wrap[i] = true;
      g.period[i] = g.dims[i];
    }
  }
  g.index.assign(static_cast<std::size_t>(g.n_cells), kOther);
  Point p = g.bb.lo;
  for (std::int64_t cell = 0; cell < g.n_cells; ++cell) {
    switch (region.classify(p)) {
      case SiteClass::Interior:
        g.index[static_cast<std::size_t>(cell)] = static_cast<std::int32_t>(g.n_interior);
        g.cell_of.push_back(cell);
        ++g.n_interior;
        break;
      case SiteClass::RightBoundary:
        g.index[static_cast<std::size_t>(cell)] = kRight;
        break;
      case SiteClass::OtherBoundary:
        g.index[static_cast<std::size_t>(cell)] = kOther;
        break;
    }
    // Odometer over the last axis fastest.
    for (int i = g.d - 1; i >= 0; --i) {
      if (++p[i] <= g.bb.hi[i]) break;
      p[i] = g.bb.lo[i];
    }
  }
  require(g.n_interior >= 1, Errc::RegionTooLarge, "region has no interior sites");
  require(g.n_interior <= options.max_sites, Errc::RegionTooLarge,
          "interior site count exceeds the configured maximum");
  return g;
}

// Classification of an off-grid neighbor (possible only from bbox-edge cells).
std::int32_t off_grid_class(const Region& region, const Point& q) {
  return region.classify(q) == SiteClass::RightBoundary ? kRight : kOther;
}

struct System {
  const Region* region = nullptr;
  Grid grid;
  // Per interior site, 2d neighbor codes (>= 0 interior index, kOther, kRight)
  // and the 2d kernel entries.
  std::vector<std::int32_t> neigh;
  std::vector<double> kernels;
  int two_d = 4;
};

System build_system(const Environment& env, const Region& region, const SolveOptions& options) {
  System sys;
  sys.region = &region;
  sys.grid = build_grid(region, options);
  const Grid& g = sys.grid;
  const int d = g.d;
  sys.two_d = 2 * d;
  sys.neigh.resize(static_cast<std::size_t>(g.n_interior) * sys.two_d);
  sys.kernels.resize(static_cast<std::size_t>(g.n_interior) * sys.two_d);
  const bool uniform = env.model().deterministic_field() && env.overlays().empty();
  Kernel uni;
  if (uniform) uni = env.site_kernel(Point{});
  for (std::int64_t i = 0; i < g.n_interior; ++i) {
    std::int64_t cell = g.cell_of[static_cast<std::size_t>(i)];
    Point p = g.point_of_cell(cell);
    Kernel k = uniform ? uni : env.site_kernel(region.canonical(p));
    for (int dir = 0; dir < sys.two_d; ++dir) {
      sys.kernels[static_cast<std::size_t>(i) * sys.two_d + dir] = k.p[dir];
      std::int64_t nc = g.neighbor_cell(cell, p, dir);
      std::int32_t code;
      if (nc < 0) {
        code = off_grid_class(region, step(p, dir));
      } else {
        code = g.index[static_cast<std::size_t>(nc)];
      }
      sys.neigh[static_cast<std::size_t>(i) * sys.two_d + dir] = code;
    }
  }
  return sys;
}

double boundary_value(std::int32_t code) { return code == kRight ? 1.0 : 0.0; }

// max_i | h_i - sum_dir k_i,dir h(neigh) |
double residual_pass(const System& sys, const std::vector<double>& h) {
  const std::int64_t n = sys.grid.n_interior;
  const int td = sys.two_d;
  double worst = 0;
  for (std::int64_t i = 0; i < n; ++i) {
    double acc = 0;
    const std::size_t base = static_cast<std::size_t>(i) * td;
    for (int dir = 0; dir < td; ++dir) {
      std::int32_t c = sys.neigh[base + dir];
      double v = c >= 0 ? h[static_cast<std::size_t>(c)] : boundary_value(c);
      acc += sys.kernels[base + dir] * v;
    }
    worst = std::max(worst, std::fabs(acc - h[static_cast<std::size_t>(i)]));
  }
  return worst;
}

// Solve h = K h + b by Gauss-Seidel or Jacobi. Gauss-Seidel alternates
// descending and ascending sweeps: the descending pass carries the
// right-boundary data through the whole box at once for drift-to-the-right
// problems, the ascending pass does the same for the opposite directions.
// Returns iterations; sets residual.
std::int64_t run_forward(const System& sys, const SolveOptions& options, std::vector<double>& h,
                         double& residual) {
  const std::int64_t n = sys.grid.n_interior;
  const int td = sys.two_d;
  h.assign(static_cast<std::size_t>(n), 0.0);
  std::vector<double> next;
  if (options.method == SolveMethod::Jacobi) next.assign(static_cast<std::size_t>(n), 0.0);
  std::int64_t iter = 0;
  residual = 1.0;
  const std::int64_t check_every = 16;
  while (iter < options.max_iterations) {
    ++iter;
    if (options.method == SolveMethod::GaussSeidel) {
      auto update = [&](std::int64_t i) {
        const std::size_t base = static_cast<std::size_t>(i) * td;
        double acc = 0;
        for (int dir = 0; dir < td; ++dir) {
          std::int32_t c = sys.neigh[base + dir];
          double v = c >= 0 ? h[static_cast<std::size_t>(c)] : boundary_value(c);
          acc += sys.kernels[base + dir] * v;
        }
        h[static_cast<std::size_t>(i)] = acc;
      };
      if (iter & 1) {
        for (std::int64_t i = n - 1; i >= 0; --i) update(i);
      } else {
        for (std::int64_t i = 0; i < n; ++i) update(i);
      }
    } else {
      for (std::int64_t i = 0; i < n; ++i) {
        const std::size_t base = static_cast<std::size_t>(i) * td;
        double acc = 0;
        for (int dir = 0; dir < td; ++dir) {
          std::int32_t c = sys.neigh[base + dir];
          double v = c >= 0 ? h[static_cast<std::size_t>(c)] : boundary_value(c);
          acc += sys.kernels[base + dir] * v;
        }
        next[static_cast<std::size_t>(i)] = acc;
      }
      h.swap(next);
    }
    if (iter % check_every == 0 || iter == options.max_iterations) {
      residual = residual_pass(sys, h);
      if (residual <= options.tolerance) return iter;
    }
  }
  residual = residual_pass(sys, h);
  require(residual <= options.tolerance, Errc::NoConvergence,
          "forward solve residual above tolerance after max iterations");
  return iter;
}

// Expected-visits (adjoint) system: g = delta_start + K^T g. The residual is
// measured relative to max(1, |g|); visit counts inside deep traps are huge
// and an absolute target would be unattainable in double precision.
std::int64_t run_adjoint(const System& sys, const SolveOptions& options, std::int64_t start_idx,
                         std::vector<double>& g, double& residual) {
  const std::int64_t n = sys.grid.n_interior;
  const int td = sys.two_d;
  g.assign(static_cast<std::size_t>(n), 0.0);
  std::vector<double> next;
  if (options.method == SolveMethod::Jacobi) next.assign(static_cast<std::size_t>(n), 0.0);
  std::int64_t iter = 0;
  residual = 1.0;
  const std::int64_t check_every = 16;
  auto gather = [&](std::int64_t i) {
    const std::size_t base = static_cast<std::size_t>(i) * td;
    double acc = i == start_idx ? 1.0 : 0.0;
    for (int dir = 0; dir < td; ++dir) {
      std::int32_t c = sys.neigh[base + dir];
      if (c >= 0) {
        // Step from that neighbor back into i uses the opposite direction.
        acc += sys.kernels[static_cast<std::size_t>(c) * td + (dir ^ 1)] *
               g[static_cast<std::size_t>(c)];
      }
    }
    // Flush vanishing visit counts; they contribute nothing to the exit law
    // but drag the sweep into denormal arithmetic.
    return acc < 1e-280 && acc > -1e-280 ? 0.0 : acc;
  };
  auto rel_residual = [&]() {
    double worst = 0;
    for (std::int64_t i = 0; i < n; ++i) {
      double acc = gather(i);
      double scale = std::max(1.0, std::fabs(g[static_cast<std::size_t>(i)]));
      worst = std::max(worst, std::fabs(acc - g[static_cast<std::size_t>(i)]) / scale);
    }
    return worst;
  };
  while (iter < options.max_iterations) {
    ++iter;
    if (options.method == SolveMethod::GaussSeidel) {
      // Alternate sweep direction; information radiates outward from start.
      if (iter & 1) {
        for (std::int64_t i = 0; i < n; ++i) g[static_cast<std::size_t>(i)] = gather(i);
      } else {
        for (std::int64_t i = n - 1; i >= 0; --i) g[static_cast<std::size_t>(i)] = gather(i);
      }
    } else {
      for (std::int64_t i = 0; i < n; ++i) next[static_cast<std::size_t>(i)] = gather(i);
      g.swap(next);
    }
    if (iter % check_every == 0 || iter == options.max_iterations) {
      residual = rel_residual();
      if (residual <= options.tolerance) return iter;
    }
  }
  residual = rel_residual();
  require(residual <= options.tolerance, Errc::NoConvergence,
          "adjoint solve residual above tolerance after max iterations");
  return iter;
}

}  // namespace

double ExitSolution::h_at(const Point& x) const {
  Point p = region_.canonical(x);
  std::int64_t cell = 0;
  for (int i = 0; i < region_.dim(); ++i) {
    require(p[i] >= bbox_.lo[i] && p[i] <= bbox_.hi[i], Errc::BadParameter,
            "h_at: point outside solved region");
    cell = cell * dims_[i] + (p[i] - bbox_.lo[i]);
  }
  std::int32_t idx = cell_index_[static_cast<std::size_t>(cell)];
  require(idx >= 0, Errc::BadParameter, "h_at: point is not interior");
  return h_[static_cast<std::size_t>(idx)];
}

ExitSolution solve_exit(const Environment& env, const Region& region, const Point& start,
                        const SolveOptions& options) {
  require(env.test_mode() || env.kappa() > 0.0, Errc::ModelInvalid,
          "solver requires an elliptic or test-mode environment");
  Point s = region.canonical(start);
  require(region.contains(s), Errc::StartOutside, "start site is not interior");

  System sys = build_system(env, region, options);
  const Grid& g = sys.grid;

  std::int64_t start_cell = 0;
  for (int i = 0; i < g.d; ++i) start_cell = start_cell * g.dims[i] + (s[i] - g.bb.lo[i]);
  std::int32_t start_idx = g.index[static_cast<std::size_t>(start_cell)];

  ExitSolution sol(region, s);
  sol.bbox_ = g.bb;
  for (int i = 0; i < g.d; ++i) sol.dims_[i] = g.dims[i];
  sol.n_interior_ = g.n_interior;

  require(options.forward_field || options.exit_distribution, Errc::BadParameter,
          "solve_exit needs at least one of the forward field or the exit distribution");
  if (options.forward_field) {
    double res_h = 0;
    std::int64_t it_h = run_forward(sys, options, sol.h_, res_h);
    sol.h_start_ = sol.h_[static_cast<std::size_t>(start_idx)];
    sol.iterations_ = it_h;
    sol.max_residual_ = res_h;
  }

  if (options.exit_distribution) {
    std::vector<double> visits;
    double res_g = 0;
    std::int64_t it_g = run_adjoint(sys, options, start_idx, visits, res_g);
    sol.iterations_ += it_g;
    sol.max_residual_ = std::max(sol.max_residual_, res_g);

    std::map<Point, std::pair<double, bool>> atoms;
    for (std::int64_t i = 0; i < g.n_interior; ++i) {
      const std::size_t base = static_cast<std::size_t>(i) * sys.two_d;
      std::int64_t cell = g.cell_of[static_cast<std::size_t>(i)];
      Point p = g.point_of_cell(cell);
      for (int dir = 0; dir < sys.two_d; ++dir) {
        std::int32_t c = sys.neigh[base + dir];
        if (c >= 0) continue;  // wrapped axes never reach this branch
        Point q = step(p, dir);
        double mass = sys.kernels[base + dir] * visits[static_cast<std::size_t>(i)];
        auto& slot = atoms[q];
        slot.first += mass;
        slot.second = c == kRight;
      }
    }
    sol.atoms_.reserve(atoms.size());
    double right = 0;
    for (const auto& [pt, pr] : atoms) {
      sol.atoms_.push_back(BoundaryAtom{pt, pr.first, pr.second});
      if (pr.second) right += pr.first;
    }
    sol.right_mass_ = right;
    if (!options.forward_field) sol.h_start_ = right;
  }

  sol.cell_index_ = std::move(sys.grid.index);
  return sol;
}

double rho_of_box(const Environment& env, const Region& region, const SolveOptions& options) {
  SolveOptions opts = options;
  opts.exit_distribution = false;
  ExitSolution sol = solve_exit(env, region, Point{}, opts);
  double h0 = sol.h_start();
  require(h0 > 0.0, Errc::DegenerateRho, "right-exit probability vanishes at the origin");
  return (1.0 - h0) / h0;
}

ConditionalExitStats conditional_exit_stats(const ExitSolution& sol, double theta) {
  require(theta > 0.0 && theta <= 1.0, Errc::BadParameter, "theta must lie in (0,1]");
  const int d = sol.region().dim();
  ConditionalExitStats out;
  double W = 0;
  for (const auto& a : sol.exit_distribution())
    if (a.right) W += a.prob;
  require(W > 0.0, Errc::NoRightExit, "no mass on the right boundary part");
  out.right_mass = W;

  for (const auto& a : sol.exit_distribution()) {
    if (!a.right) continue;
    for (int i = 0; i < d; ++i) out.expectation[i] += a.prob / W * static_cast<double>(a.y[i]);
  }
  for (const auto& a : sol.exit_distribution()) {
    if (!a.right) continue;
    double dev = 0;
    for (int i = 0; i < d; ++i)
      dev += std::fabs(static_cast<double>(a.y[i]) - out.expectation[i]);
    out.variance_l1sq += a.prob / W * dev * dev;
  }

  // Hypercube tiling over the transversal coordinates of the right part.
  // Requires a flat right part: one coordinate shared by all right atoms.
  int flat_axis = -1;
  for (int axis = 0; axis < d && flat_axis < 0; ++axis) {
    bool flat = true;
    std::int64_t v = 0;
    bool first = true;
    for (const auto& a : sol.exit_distribution()) {
      if (!a.right) continue;
      if (first) {
        v = a.y[axis];
        first = false;
      } else if (a.y[axis] != v) {
        flat = false;
        break;
      }
    }
    if (flat) flat_axis = axis;
  }
  if (flat_axis < 0) return out;  // no canonical tiling for this geometry

  std::int64_t side =
      static_cast<std::int64_t>(std::ceil(std::pow(sol.region().scale(), theta)));
  side = std::max<std::int64_t>(side, 1);
  out.cube_side = side;
  Point lo{}, hi{};
  bool first = true;
  for (const auto& a : sol.exit_distribution()) {
    if (!a.right) continue;
    for (int i = 0; i < d; ++i) {
      if (first || a.y[i] < lo[i]) lo[i] = a.y[i];
      if (first || a.y[i] > hi[i]) hi[i] = a.y[i];
    }
    first = false;
  }
  std::int64_t n_cubes = 1;
  for (int i = 0; i < d; ++i) {
    if (i == flat_axis) continue;
    std::int64_t cells = (hi[i] - lo[i]) / side + 1;
    out.cube_grid_dims.push_back(cells);
    n_cubes *= cells;
  }
  out.cube_probs.assign(static_cast<std::size_t>(n_cubes), 0.0);
  for (const auto& a : sol.exit_distribution()) {
    if (!a.right) continue;
    std::int64_t idx = 0;
    int k = 0;
    for (int i = 0; i < d; ++i) {
      if (i == flat_axis) continue;
      idx = idx * out.cube_grid_dims[static_cast<std::size_t>(k)] + (a.y[i] - lo[i]) / side;
      ++k;
    }
    out.cube_probs[static_cast<std::size_t>(idx)] += a.prob / W;
  }
  return out;
}

}  // namespace rwre
