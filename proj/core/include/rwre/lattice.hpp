#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <initializer_list>

namespace rwre {

// Runtime dimension, bounded so points fit in a flat array.
inline constexpr int kMaxDim = 8;

// Lattice point. Coordinates beyond the active dimension stay zero.
using Point = std::array<std::int64_t, kMaxDim>;
// Real vector (directions, drifts, projections).
using Vec = std::array<double, kMaxDim>;

inline Point point_of(std::initializer_list<std::int64_t> cs) {
  Point p{};
  int i = 0;
  for (auto c : cs) p[i++] = c;
  return p;
}

inline Vec vec_of(std::initializer_list<double> cs) {
  Vec v{};
  int i = 0;
  for (auto c : cs) v[i++] = c;
  return v;
}

// Direction index convention matches kernel entry order
// (+e_1, -e_1, +e_2, -e_2, ...): dir 2j is +e_{j+1}, dir 2j+1 is -e_{j+1}.
inline int dir_axis(int dir) { return dir >> 1; }
inline int dir_sign(int dir) { return (dir & 1) ? -1 : +1; }

inline Point step(Point p, int dir) {
  p[static_cast<std::size_t>(dir_axis(dir))] += dir_sign(dir);
  return p;
}

inline double dot(const Vec& l, const Point& x, int d) {
  double s = 0;
  for (int i = 0; i < d; ++i) s += l[i] * static_cast<double>(x[i]);
  return s;
}

inline double dot(const Vec& a, const Vec& b, int d) {
  double s = 0;
  for (int i = 0; i < d; ++i) s += a[i] * b[i];
  return s;
}

inline std::int64_t l1_dist(const Point& a, const Point& b, int d) {
  std::int64_t s = 0;
  for (int i = 0; i < d; ++i) s += std::llabs(a[i] - b[i]);
  return s;
}

inline std::int64_t l1_norm(const Point& a, int d) {
  std::int64_t s = 0;
  for (int i = 0; i < d; ++i) s += std::llabs(a[i]);
  return s;
}

inline double l1_norm(const Vec& v, int d) {
  double s = 0;
  for (int i = 0; i < d; ++i) s += std::fabs(v[i]);
  return s;
}

inline double l2_norm(const Vec& v, int d) {
  double s = 0;
  for (int i = 0; i < d; ++i) s += v[i] * v[i];
  return std::sqrt(s);
}

inline double linf_norm(const Vec& v, int d) {
  double s = 0;
  for (int i = 0; i < d; ++i) s = std::max(s, std::fabs(v[i]));
  return s;
}

inline Vec axis_vec(int axis, int d) {
  (void)d;
  Vec v{};
  v[static_cast<std::size_t>(axis)] = 1.0;
  return v;
}

inline Vec normalized(const Vec& v, int d) {
  Vec out{};
  double n = l2_norm(v, d);
  if (n == 0) return out;
  for (int i = 0; i < d; ++i) out[i] = v[i] / n;
  return out;
}

inline Vec to_vec(const Point& p, int d) {
  Vec v{};
  for (int i = 0; i < d; ++i) v[i] = static_cast<double>(p[i]);
  return v;
}

inline Vec sub(const Vec& a, const Vec& b, int d) {
  Vec v{};
  for (int i = 0; i < d; ++i) v[i] = a[i] - b[i];
  return v;
}

// Orthogonal projection of x onto the line spanned by l (l need not be unit;
// it is normalized internally).
inline Vec project_l(const Vec& l, const Vec& x, int d) {
  double n2 = dot(l, l, d);
  double c = dot(l, x, d) / n2;
  Vec v{};
  for (int i = 0; i < d; ++i) v[i] = c * l[i];
  return v;
}

// Orthogonal projection of x onto the complement of l.
inline Vec project_perp(const Vec& l, const Vec& x, int d) {
  Vec p = project_l(l, x, d);
  Vec v{};
  for (int i = 0; i < d; ++i) v[i] = x[i] - p[i];
  return v;
}

// Oblique projection along l of x onto the complement of e_{axis}:
// x - (x.e_axis / l.e_axis) l.  The axis component of the result is zero.
inline Vec oblique_perp(const Vec& l, int axis, const Vec& x, int d) {
  double c = x[static_cast<std::size_t>(axis)] / l[static_cast<std::size_t>(axis)];
  Vec v{};
  for (int i = 0; i < d; ++i) v[i] = x[i] - c * l[i];
  return v;
}

inline Vec oblique_perp(const Vec& l, int axis, const Point& x, int d) {
  return oblique_perp(l, axis, to_vec(x, d), d);
}

// Hyperplane H_k = { x : x.e_1 = k }.
inline std::int64_t hyperplane_level(const Point& x) { return x[0]; }

}  // namespace rwre
