#include "rwre/region.hpp"

#include <cmath>

#include <nlohmann/json.hpp>

#include "rwre/error.hpp"

namespace rwre {

using nlohmann::json;

std::int64_t scale_R_unchecked(int k, std::int64_t N) {
  long double ll = logl(logl(static_cast<long double>(N)));
  long double x = powl(ll, static_cast<long double>(k + 1));
  long double v = expl(x);
  long double nearest = roundl(v);
  if (fabsl(v - nearest) < 1e-9L) {
    // Near-integer guard: decide the ceiling on the exponent scale, where the
    // comparison is far from the rounding cliff.
    return x <= logl(nearest) ? static_cast<std::int64_t>(nearest)
                              : static_cast<std::int64_t>(nearest) + 1;
  }
  return static_cast<std::int64_t>(ceill(v));
}

Region::Region(int d, Variant v) : d_(d), v_(std::move(v)) {
  require(d >= 2 && d <= kMaxDim, Errc::BadParameter, "region dimension out of range");
}

namespace {

std::int64_t wrap_mod(std::int64_t x, std::int64_t m) {
  std::int64_t r = x % m;
  return r < 0 ? r + m : r;
}

}  // namespace

bool Region::periodic() const {
  if (const auto* s = std::get_if<SlabRegion>(&v_))
    return s->transversal == Transversal::Periodic;
  return false;
}

Point Region::canonical(const Point& x) const {
  const auto* s = std::get_if<SlabRegion>(&v_);
  if (!s || s->transversal != Transversal::Periodic) return x;
  Point y = x;
  for (int i = 1; i < d_; ++i) y[i] = wrap_mod(y[i], s->width);
  return y;
}

SiteClass Region::classify(const Point& x) const {
  const int d = d_;
  return std::visit(
      [&](const auto& r) -> SiteClass {
        using T = std::decay_t<decltype(r)>;
        if constexpr (std::is_same_v<T, SlabRegion>) {
          double t = dot(r.l, x, d);
          if (t >= r.L) return SiteClass::RightBoundary;
          if (t <= -r.a) return SiteClass::OtherBoundary;
          if (r.transversal == Transversal::Absorbing) {
            for (int i = 1; i < d; ++i)
              if (std::llabs(x[i]) >= r.width) return SiteClass::OtherBoundary;
          }
          return SiteClass::Interior;
        } else if constexpr (std::is_same_v<T, DirectedBoxRegion>) {
          double t = dot(r.l, x, d);
          Vec perp = project_perp(r.l, to_vec(x, d), d);
          bool in = t >= 0.0 && t <= r.L && linf_norm(perp, d) <= r.K * r.L;
          if (in) return SiteClass::Interior;
          return t > r.L ? SiteClass::RightBoundary : SiteClass::OtherBoundary;
        } else if constexpr (std::is_same_v<T, BlockRegion>) {
          Point rel = x;
          for (int i = 0; i < d; ++i) rel[i] -= r.anchor[i];
          std::int64_t t = rel[0];
          std::int64_t n2 = r.N * r.N;
          double tr = linf_norm(oblique_perp(r.vhat, 0, rel, d), d);
          double w = static_cast<double>(scale_R_unchecked(6, r.N) * r.N);
          if (t > -n2 && t < n2 && tr < w) return SiteClass::Interior;
          return t >= n2 ? SiteClass::RightBoundary : SiteClass::OtherBoundary;
        } else if constexpr (std::is_same_v<T, ConeRegion>) {
          double t = static_cast<double>(x[r.axis]);
          double length = std::pow(r.L, 1.0 + r.delta);
          if (t < 0.0) return SiteClass::OtherBoundary;
          if (t > length) return SiteClass::RightBoundary;
          double w = std::pow(r.L, 3.0 * r.delta) + t * std::pow(r.L, -2.0 * r.delta);
          double tr = linf_norm(oblique_perp(r.vhat, r.axis, to_vec(x, d), d), d);
          return tr <= w ? SiteClass::Interior : SiteClass::OtherBoundary;
        } else {
          static_assert(std::is_same_v<T, BoxSpecRegion>);
          // rows[i] = R(e_{i+1}), so rows[i].x = (R^T x)_{i+1}.
          double c1 = dot(r.rows[0], to_vec(x, d), d);
          bool trans_in = true, trans_strict = true;
          for (int i = 1; i < d; ++i) {
            double ci = dot(r.rows[i], to_vec(x, d), d);
            if (!(ci > -r.Lt && ci < r.Lt)) trans_in = false;
            if (!(std::fabs(ci) < r.Lt)) trans_strict = false;
          }
          if (c1 > -r.L && c1 < r.Lp && trans_in) return SiteClass::Interior;
          if (c1 >= r.Lp && trans_strict) return SiteClass::RightBoundary;
          return SiteClass::OtherBoundary;
        }
      },
      v_);
}

double Region::scale() const {
  return std::visit(
      [](const auto& r) -> double {
        using T = std::decay_t<decltype(r)>;
        if constexpr (std::is_same_v<T, SlabRegion>)
          return r.L;
        else if constexpr (std::is_same_v<T, DirectedBoxRegion>)
          return r.L;
        else if constexpr (std::is_same_v<T, BlockRegion>)
          return static_cast<double>(r.N);
        else if constexpr (std::is_same_v<T, ConeRegion>)
          return r.L;
        else
          return r.L;
      },
      v_);
}

bool Region::in_middle_third(const Point& x) const {
  const auto* b = std::get_if<BlockRegion>(&v_);
  require(b != nullptr, Errc::BadParameter, "middle third defined for blocks only");
  Point rel = x;
  for (int i = 0; i < d_; ++i) rel[i] -= b->anchor[i];
  double n2 = static_cast<double>(b->N) * static_cast<double>(b->N);
  double w = static_cast<double>(scale_R_unchecked(6, b->N) * b->N);
  double tr = linf_norm(oblique_perp(b->vhat, 0, rel, d_), d_);
  return static_cast<double>(rel[0]) > -n2 / 3.0 && static_cast<double>(rel[0]) < n2 / 3.0 &&
         tr < w / 3.0;
}

std::int64_t Region::block_transversal_radius() const {
  const auto* b = std::get_if<BlockRegion>(&v_);
  require(b != nullptr, Errc::BadParameter, "block radius defined for blocks only");
  return scale_R_unchecked(6, b->N) * b->N;
}

BoundingBox Region::interior_bbox() const {
  const int d = d_;
  BoundingBox bb{};
  if (const auto* s = std::get_if<SlabRegion>(&v_)) {
    int axis = -1;
    for (int i = 0; i < d; ++i) {
      if (std::fabs(std::fabs(s->l[i]) - 1.0) < 1e-12) axis = i;
    }
    require(axis == 0 && s->l[0] > 0, Errc::RegionTooLarge,
            "slab enumeration needs direction +e_1");
    require(s->transversal != Transversal::Unbounded, Errc::RegionTooLarge,
            "unbounded-transversal slab cannot be enumerated");
    bb.lo[0] = static_cast<std::int64_t>(std::floor(-s->a)) + 1;
    bb.hi[0] = static_cast<std::int64_t>(std::ceil(s->L)) - 1;
    for (int i = 1; i < d; ++i) {
      if (s->transversal == Transversal::Periodic) {
        bb.lo[i] = 0;
        bb.hi[i] = s->width - 1;
      } else {
        bb.lo[i] = -s->width + 1;
        bb.hi[i] = s->width - 1;
      }
    }
    return bb;
  }
  if (const auto* b = std::get_if<DirectedBoxRegion>(&v_)) {
    double reach = b->L + b->K * b->L * std::sqrt(static_cast<double>(d)) + 1.0;
    for (int i = 0; i < d; ++i) {
      bb.lo[i] = static_cast<std::int64_t>(-reach);
      bb.hi[i] = static_cast<std::int64_t>(reach);
    }
    return bb;
  }
  if (const auto* b = std::get_if<BlockRegion>(&v_)) {
    std::int64_t n2 = b->N * b->N;
    double w = static_cast<double>(scale_R_unchecked(6, b->N) * b->N);
    bb.lo[0] = b->anchor[0] - n2 + 1;
    bb.hi[0] = b->anchor[0] + n2 - 1;
    for (int i = 1; i < d; ++i) {
      // |x_i - t vhat_i / vhat_0| < w over t in (-N^2, N^2)
      double slope = std::fabs(b->vhat[i] / b->vhat[0]);
      double reach = w + slope * static_cast<double>(n2);
      bb.lo[i] = b->anchor[i] - static_cast<std::int64_t>(reach);
      bb.hi[i] = b->anchor[i] + static_cast<std::int64_t>(reach);
    }
    return bb;
  }
  if (const auto* c = std::get_if<ConeRegion>(&v_)) {
    double length = std::pow(c->L, 1.0 + c->delta);
    double w = std::pow(c->L, 3.0 * c->delta) + length * std::pow(c->L, -2.0 * c->delta);
    for (int i = 0; i < d; ++i) {
      if (i == c->axis) {
        bb.lo[i] = 0;
        bb.hi[i] = static_cast<std::int64_t>(std::floor(length));
      } else {
        double slope = std::fabs(c->vhat[i] / c->vhat[c->axis]);
        double reach = w + slope * length + 1.0;
        bb.lo[i] = -static_cast<std::int64_t>(reach);
        bb.hi[i] = static_cast<std::int64_t>(reach);
      }
    }
    return bb;
  }
  const auto& r = std::get<BoxSpecRegion>(v_);
  // x = R c with c in the cuboid; per-coordinate reach = sum_j |R_ij| extent_j.
  for (int i = 0; i < d; ++i) {
    double reach = 0;
    for (int j = 0; j < d; ++j) {
      double extent = (j == 0) ? std::max(r.L, r.Lp) : r.Lt;
      // rows[j] = R(e_{j+1}); its i-th component is R_{i,j}.
      reach += std::fabs(r.rows[j][i]) * extent;
    }
    bb.lo[i] = -static_cast<std::int64_t>(reach + 1.0);
    bb.hi[i] = static_cast<std::int64_t>(reach + 1.0);
  }
  return bb;
}

Region Region::slab(int d, const Vec& l, double a, double L, Transversal t,
                    std::int64_t width) {
  require(a > 0 && L > 0, Errc::BadParameter, "slab depths must be positive");
  require(t == Transversal::Unbounded || width >= 1, Errc::BadParameter,
          "transversal width must be >= 1");
  SlabRegion s;
  s.l = normalized(l, d);
  s.a = a;
  s.L = L;
  s.transversal = t;
  s.width = width;
  return Region(d, s);
}

Region Region::directed_box(int d, const Vec& l, double L, double K) {
  require(L > 0 && K > 0, Errc::BadParameter, "box parameters must be positive");
  DirectedBoxRegion b;
  b.l = normalized(l, d);
  b.L = L;
  b.K = K;
  return Region(d, b);
}

Region Region::block(int d, const Point& anchor, std::int64_t N, const Vec& vhat) {
  require(N >= 2, Errc::BadParameter, "block scale must be >= 2");
  require(vhat[0] != 0.0, Errc::BadParameter, "block needs vhat with positive e_1 component");
  BlockRegion b;
  b.anchor = anchor;
  b.N = N;
  b.vhat = normalized(vhat, d);
  return Region(d, b);
}

Region Region::cone(int d, double L, double delta, int axis, const Vec& vhat) {
  require(L > 1 && delta > 0, Errc::BadParameter, "cone needs L > 1, delta > 0");
  require(axis >= 0 && axis < d, Errc::BadParameter, "cone axis out of range");
  require(vhat[axis] != 0.0, Errc::BadParameter, "cone needs vhat.e_axis != 0");
  ConeRegion c;
  c.L = L;
  c.delta = delta;
  c.axis = axis;
  c.vhat = normalized(vhat, d);
  return Region(d, c);
}

Region Region::box_spec(int d, const std::array<Vec, kMaxDim>& rotation_rows, double L,
                        double Lp, double Lt) {
  require(L > 0 && Lp > 0 && Lt > 0, Errc::BadParameter, "box spec extents must be positive");
  for (int i = 0; i < d; ++i)
    require(std::fabs(l2_norm(rotation_rows[i], d) - 1.0) < 1e-9, Errc::BadParameter,
            "rotation rows must be unit vectors");
  BoxSpecRegion r;
  r.rows = rotation_rows;
  r.L = L;
  r.Lp = Lp;
  r.Lt = Lt;
  return Region(d, r);
}

namespace {

json vec_to_json(const Vec& v, int d) {
  json a = json::array();
  for (int i = 0; i < d; ++i) a.push_back(v[i]);
  return a;
}

json point_to_json(const Point& p, int d) {
  json a = json::array();
  for (int i = 0; i < d; ++i) a.push_back(p[i]);
  return a;
}

Vec vec_from_json(const json& a, int d) {
  Vec v{};
  for (int i = 0; i < d; ++i) v[i] = a.at(i).get<double>();
  return v;
}

Point point_from_json(const json& a, int d) {
  Point p{};
  for (int i = 0; i < d; ++i) p[i] = a.at(i).get<std::int64_t>();
  return p;
}

}  // namespace

std::string Region::to_json_string() const {
  const int d = d_;
  json j;
  if (const auto* s = std::get_if<SlabRegion>(&v_)) {
    const char* t = s->transversal == Transversal::Unbounded    ? "unbounded"
                    : s->transversal == Transversal::Periodic ? "periodic"
                                                              : "absorbing";
    j = {{"type", "slab"},       {"l", vec_to_json(s->l, d)}, {"a", s->a},
         {"L", s->L},            {"transversal", t},          {"width", s->width}};
  } else if (const auto* b = std::get_if<DirectedBoxRegion>(&v_)) {
    j = {{"type", "directed_box"}, {"l", vec_to_json(b->l, d)}, {"L", b->L}, {"K", b->K}};
  } else if (const auto* b = std::get_if<BlockRegion>(&v_)) {
    j = {{"type", "block"},
         {"anchor", point_to_json(b->anchor, d)},
         {"N", b->N},
         {"vhat", vec_to_json(b->vhat, d)}};
  } else if (const auto* c = std::get_if<ConeRegion>(&v_)) {
    j = {{"type", "cone"},
         {"L", c->L},
         {"delta", c->delta},
         {"axis", c->axis},
         {"vhat", vec_to_json(c->vhat, d)}};
  } else {
    const auto& r = std::get<BoxSpecRegion>(v_);
    json rows = json::array();
    for (int i = 0; i < d; ++i) rows.push_back(vec_to_json(r.rows[i], d));
    j = {{"type", "box_spec"}, {"rotation", rows}, {"L", r.L}, {"Lp", r.Lp}, {"Lt", r.Lt}};
  }
  return j.dump();
}

Region Region::from_json_string(int d, const std::string& text) {
  json j = json::parse(text, nullptr, false);
  require(!j.is_discarded(), Errc::BadParameter, "region JSON unparsable");
  std::string type = j.at("type").get<std::string>();
  if (type == "slab") {
    std::string t = j.value("transversal", "unbounded");
    Transversal tr = t == "periodic"    ? Transversal::Periodic
                     : t == "absorbing" ? Transversal::Absorbing
                                        : Transversal::Unbounded;
    return slab(d, vec_from_json(j.at("l"), d), j.at("a").get<double>(),
                j.at("L").get<double>(), tr, j.value("width", std::int64_t{0}));
  }
  if (type == "directed_box")
    return directed_box(d, vec_from_json(j.at("l"), d), j.at("L").get<double>(),
                        j.at("K").get<double>());
  if (type == "block")
    return block(d, point_from_json(j.at("anchor"), d), j.at("N").get<std::int64_t>(),
                 vec_from_json(j.at("vhat"), d));
  if (type == "cone")
    return cone(d, j.at("L").get<double>(), j.at("delta").get<double>(), j.at("axis").get<int>(),
                vec_from_json(j.at("vhat"), d));
  if (type == "box_spec") {
    std::array<Vec, kMaxDim> rows{};
    for (int i = 0; i < d; ++i) rows[i] = vec_from_json(j.at("rotation").at(i), d);
    return box_spec(d, rows, j.at("L").get<double>(), j.at("Lp").get<double>(),
                    j.at("Lt").get<double>());
  }
  fail(Errc::BadParameter, "unknown region type: " + type);
}

}  // namespace rwre
