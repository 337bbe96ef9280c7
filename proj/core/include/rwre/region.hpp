#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <variant>

#include "rwre/lattice.hpp"

namespace rwre {

enum class SiteClass { Interior, RightBoundary, OtherBoundary };

enum class Transversal { Unbounded, Periodic, Absorbing };

// Slab { -a < x.l < L } with the levels -a and L absorbing; the right part
// is { x.l >= L }. With an axis direction and periodic transversal handling
// the e_1-marginal is an exact birth-death chain (the test oracle).
struct SlabRegion {
  Vec l{};               // direction, unit
  double a = 1;          // left depth
  double L = 1;          // right level
  Transversal transversal = Transversal::Unbounded;
  std::int64_t width = 0;  // period (periodic) or halfwidth bound (absorbing)
};

// B_{L,l,K} = { 0 <= x.l <= L, |pi_{l-perp}(x)|_inf <= K L }, right part
// { y in boundary : y.l > L }.
struct DirectedBoxRegion {
  Vec l{};
  double L = 1;
  double K = 1;
};

// P(anchor, N): -N^2 < t < N^2 and |oblique_perp(vhat, e1)|_inf < R6(N) N,
// where t is the e_1 offset from the anchor. Right part: t = N^2.
struct BlockRegion {
  Point anchor{};
  std::int64_t N = 16;
  Vec vhat{};
};

// C_L = { 0 <= x.e_axis <= L^{1+delta},
//         |oblique_perp(vhat, axis)|_inf <= L^{3 delta} + (x.e_axis) L^{-2 delta} }.
struct ConeRegion {
  double L = 1;
  double delta = 0.1;
  int axis = 0;
  Vec vhat{};
};

// Rotated box specification: { x : R^T x in (-L, Lp) x (-Lt, Lt)^{d-1} };
// right part: (R^T x)_1 >= Lp and |(R^T x)_j| < Lt for j >= 2.
struct BoxSpecRegion {
  double L = 1;
  double Lp = 1;
  double Lt = 1;
  std::array<Vec, kMaxDim> rows{};  // rows of R^T, i.e. rows[i] = R(e_{i+1})
};

struct BoundingBox {
  Point lo{};
  Point hi{};  // inclusive
  double volume(int d) const {
    double v = 1;
    for (int i = 0; i < d; ++i) v *= static_cast<double>(hi[i] - lo[i] + 1);
    return v;
  }
};

class Region {
 public:
  using Variant =
      std::variant<SlabRegion, DirectedBoxRegion, BlockRegion, ConeRegion, BoxSpecRegion>;

  Region(int d, Variant v);

  int dim() const { return d_; }
  const Variant& variant() const { return v_; }

  SiteClass classify(const Point& x) const;
  bool contains(const Point& x) const { return classify(x) == SiteClass::Interior; }
  bool right_boundary(const Point& y) const {
    return classify(y) == SiteClass::RightBoundary;
  }

  // Wraps transversal coordinates of periodic slabs; identity elsewhere.
  // Kernel lookups and solver states use canonical points.
  Point canonical(const Point& x) const;
  bool periodic() const;

  // Tight axis-aligned box containing the interior. Throws RegionTooLarge for
  // unbounded variants (unbounded-transversal slabs).
  BoundingBox interior_bbox() const;

  // Characteristic length: slab/box/cone L, block N. Used for the hypercube
  // tiling side ceil(scale^theta).
  double scale() const;

  // Block-only helpers.
  bool in_middle_third(const Point& x) const;
  std::int64_t block_transversal_radius() const;  // R6(N) * N

  std::string to_json_string() const;
  static Region from_json_string(int d, const std::string& text);

  static Region slab(int d, const Vec& l, double a, double L,
                     Transversal t = Transversal::Unbounded, std::int64_t width = 0);
  static Region directed_box(int d, const Vec& l, double L, double K);
  static Region block(int d, const Point& anchor, std::int64_t N, const Vec& vhat);
  static Region cone(int d, double L, double delta, int axis, const Vec& vhat);
  static Region box_spec(int d, const std::array<Vec, kMaxDim>& rotation_rows, double L,
                         double Lp, double Lt);

 private:
  int d_;
  Variant v_;
};

// ceil(exp((log log N)^{k+1})) without the N >= 16 domain guard; block
// geometry needs R_6 at small N where the ladder regime does not apply.
std::int64_t scale_R_unchecked(int k, std::int64_t N);

}  // namespace rwre
