#include "rwre/llt.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "rwre/error.hpp"
#include "rwre/parallel.hpp"
#include "rwre/stats.hpp"

namespace rwre {

void LatticeLaw::validate() const {
  require(d >= 1 && d <= kMaxDim, Errc::BadParameter, "law dimension out of range");
  require(!atoms.empty(), Errc::BadParameter, "law has no atoms");
  double m = 0;
  for (const auto& [p, w] : atoms) {
    (void)p;
    require(w >= 0.0, Errc::BadParameter, "law has a negative weight");
    m += w;
  }
  require(std::fabs(m - 1.0) <= 1e-12, Errc::BadParameter, "law mass differs from 1");
}

double LatticeLaw::mass() const {
  double m = 0;
  for (const auto& [p, w] : atoms) {
    (void)p;
    m += w;
  }
  return m;
}

LatticeLaw LatticeLaw::srw(int d) {
  LatticeLaw law;
  law.d = d;
  for (int dir = 0; dir < 2 * d; ++dir)
    law.atoms.emplace_back(step(Point{}, dir), 1.0 / (2.0 * d));
  std::sort(law.atoms.begin(), law.atoms.end());
  return law;
}

LatticeLaw LatticeLaw::of(int d, std::vector<std::pair<Point, double>> atoms) {
  LatticeLaw law;
  law.d = d;
  law.atoms = std::move(atoms);
  std::sort(law.atoms.begin(), law.atoms.end());
  law.validate();
  return law;
}

namespace {

LatticeLaw convolve(const LatticeLaw& a, const LatticeLaw& b, std::int64_t support_cap) {
  std::map<Point, long double> acc;
  for (const auto& [pa, wa] : a.atoms) {
    for (const auto& [pb, wb] : b.atoms) {
      Point q = pa;
      for (int i = 0; i < a.d; ++i) q[i] += pb[i];
      acc[q] += static_cast<long double>(wa) * static_cast<long double>(wb);
    }
    require(static_cast<std::int64_t>(acc.size()) <= support_cap, Errc::SupportTooLarge,
            "convolution support exceeds the cap");
  }
  LatticeLaw out;
  out.d = a.d;
  out.atoms.reserve(acc.size());
  for (const auto& [p, w] : acc) out.atoms.emplace_back(p, static_cast<double>(w));
  return out;
}

}  // namespace

LatticeLaw convolve_power(const LatticeLaw& law, std::int64_t n, std::int64_t support_cap) {
  require(n >= 1, Errc::BadParameter, "convolution power must be >= 1");
  law.validate();
  LatticeLaw out = law;
  for (std::int64_t k = 1; k < n; ++k) out = convolve(out, law, support_cap);
  return out;
}

namespace {

// True when every atom lives on one parity class of the coordinate sum.
bool parity_periodic(const LatticeLaw& law) {
  int parity = -1;
  for (const auto& [p, w] : law.atoms) {
    if (w == 0.0) continue;
    std::int64_t s = 0;
    for (int i = 0; i < law.d; ++i) s += p[i];
    int par = static_cast<int>(((s % 2) + 2) % 2);
    if (parity < 0)
      parity = par;
    else if (parity != par)
      return false;
  }
  return true;
}

struct DenseLaw {
  int d;
  BoundingBox bb{};
  std::array<std::int64_t, kMaxDim> dims{};
  std::vector<double> w;

  double at(const Point& p) const {
    std::int64_t cell = 0;
    for (int i = 0; i < d; ++i) {
      if (p[i] < bb.lo[i] || p[i] > bb.hi[i]) return 0.0;
      cell = cell * dims[i] + (p[i] - bb.lo[i]);
    }
    return w[static_cast<std::size_t>(cell)];
  }
};

DenseLaw densify(const LatticeLaw& law) {
  DenseLaw out;
  out.d = law.d;
  bool first = true;
  for (const auto& [p, wt] : law.atoms) {
    (void)wt;
    for (int i = 0; i < law.d; ++i) {
      if (first || p[i] < out.bb.lo[i]) out.bb.lo[i] = p[i];
      if (first || p[i] > out.bb.hi[i]) out.bb.hi[i] = p[i];
    }
    first = false;
  }
  std::int64_t cells = 1;
  for (int i = 0; i < law.d; ++i) {
    out.dims[i] = out.bb.hi[i] - out.bb.lo[i] + 1;
    cells *= out.dims[i];
  }
  out.w.assign(static_cast<std::size_t>(cells), 0.0);
  for (const auto& [p, wt] : law.atoms) {
    std::int64_t cell = 0;
    for (int i = 0; i < law.d; ++i) cell = cell * out.dims[i] + (p[i] - out.bb.lo[i]);
    out.w[static_cast<std::size_t>(cell)] = wt;
  }
  return out;
}

}  // namespace

LltReport llt_discrepancy_report(const LatticeLaw& law, const std::vector<std::int64_t>& n_grid,
                                 std::int64_t support_cap) {
  law.validate();
  require(law.atoms.size() >= 2, Errc::DegenerateLaw, "single-atom law has no spread");
  require(n_grid.size() >= 3, Errc::BadParameter, "n grid needs at least 3 points");
  for (std::size_t i = 1; i < n_grid.size(); ++i)
    require(n_grid[i] > n_grid[i - 1], Errc::BadParameter, "n grid must increase");
  require(n_grid.front() >= 1, Errc::BadParameter, "n grid must be positive");

  LltReport rep;
  rep.parity_restricted = parity_periodic(law);
  const std::int64_t diff_step = rep.parity_restricted ? 2 : 1;

  LatticeLaw current = law;
  std::int64_t current_n = 1;
  for (std::int64_t n : n_grid) {
    for (; current_n < n; ++current_n) current = convolve(current, law, support_cap);
    DenseLaw dense = densify(current);
    LltCell cell;
    cell.n = n;
    for (const auto& [p, w] : current.atoms) {
      cell.sup_p = std::max(cell.sup_p, w);
      for (int axis = 0; axis < law.d; ++axis) {
        Point q = p;
        q[axis] += diff_step;
        cell.sup_first = std::max(cell.sup_first, std::fabs(w - dense.at(q)));
        Point r = p;
        r[axis] -= diff_step;
        cell.sup_second =
            std::max(cell.sup_second, std::fabs(dense.at(q) - 2.0 * w + dense.at(r)));
      }
      if (law.d >= 2) {
        for (int i = 0; i < law.d; ++i) {
          for (int j = i + 1; j < law.d; ++j) {
            Point a = p, b = p, c = p;
            a[i] += diff_step;
            b[j] += diff_step;
            c[i] += diff_step;
            c[j] += diff_step;
            cell.sup_mixed = std::max(
                cell.sup_mixed, std::fabs(w - dense.at(a) - dense.at(b) + dense.at(c)));
          }
        }
      }
    }
    rep.cells.push_back(cell);
  }

  auto fit_exponent = [&](auto pick) {
    std::vector<double> xs, ys;
    for (const auto& c : rep.cells) {
      double v = pick(c);
      if (v > 0) {
        xs.push_back(std::log(static_cast<double>(c.n)));
        ys.push_back(std::log(v));
      }
    }
    if (xs.size() < 2) return 0.0;
    return -least_squares(xs, ys).slope;
  };
  rep.exp_sup = fit_exponent([](const LltCell& c) { return c.sup_p; });
  rep.exp_first = fit_exponent([](const LltCell& c) { return c.sup_first; });
  rep.exp_second = fit_exponent([](const LltCell& c) { return c.sup_second; });
  if (law.d >= 2) rep.exp_mixed = fit_exponent([](const LltCell& c) { return c.sup_mixed; });
  return rep;
}

ExitKernelReport exit_kernel_smoothness(const EnvironmentModel& model, std::uint64_t master_seed,
                                        const std::vector<std::int64_t>& L_grid, std::int64_t M,
                                        const Vec& vhat, int workers,
                                        const SolveOptions& solve) {
  require(!L_grid.empty(), Errc::BadParameter, "L grid is empty");
  require(M >= 1, Errc::BadParameter, "environment count must be >= 1");
  model.validate();
  const int d = model.d;
  Vec v = normalized(vhat, d);

  ExitKernelReport rep;
  const std::int64_t env_count = model.deterministic_field() ? 1 : M;
  rep.M = env_count;
  SolveOptions opts = solve;
  opts.forward_field = false;
  for (std::int64_t L : L_grid) {
    Region block = Region::block(d, Point{}, L, v);
    std::vector<std::vector<BoundaryAtom>> per_env(static_cast<std::size_t>(env_count));
    parallel_for(env_count, workers, [&](std::int64_t e) {
      Environment env = build_environment(
          model,
          replica_seed(master_seed, 0x656B65726E /* ekern */, static_cast<std::uint64_t>(e)));
      ExitSolution sol = solve_exit(env, block, Point{}, opts);
      per_env[static_cast<std::size_t>(e)] = sol.exit_distribution();
    });
    std::map<Point, double> nu;
    for (const auto& atoms : per_env)
      for (const auto& a : atoms)
        if (a.right) nu[a.y] += a.prob / static_cast<double>(env_count);

    ExitKernelCell cell;
    cell.L = L;
    for (const auto& [y, p] : nu) {
      cell.right_mass += p;
      cell.sup_nu = std::max(cell.sup_nu, p);
      for (int axis = 1; axis < d; ++axis) {
        for (int s : {-1, +1}) {
          Point q = y;
          q[axis] += s;
          auto it = nu.find(q);
          double other = it == nu.end() ? 0.0 : it->second;
          cell.sup_diff = std::max(cell.sup_diff, std::fabs(p - other));
        }
      }
    }
    cell.scaled_sup = std::pow(static_cast<double>(L), static_cast<double>(d - 1)) * cell.sup_nu;
    cell.scaled_diff = std::pow(static_cast<double>(L), static_cast<double>(d)) * cell.sup_diff;
    rep.cells.push_back(cell);
  }
  return rep;
}

}  // namespace rwre
