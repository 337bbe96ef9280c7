#include "rwre/environment.hpp"

#include <cmath>

#include <nlohmann/json.hpp>

#include "rwre/error.hpp"
#include "rwre/hashing.hpp"
#include "rwre/random.hpp"

namespace rwre {

using nlohmann::json;

double Kernel::sum() const {
  double s = 0;
  for (int i = 0; i < size(); ++i) s += p[i];
  return s;
}

double Kernel::min_entry() const {
  double m = p[0];
  for (int i = 1; i < size(); ++i) m = std::min(m, p[i]);
  return m;
}

Vec Kernel::drift() const {
  Vec v{};
  for (int i = 0; i < size(); ++i) v[dir_axis(i)] += dir_sign(i) * p[i];
  return v;
}

bool Kernel::operator==(const Kernel& o) const {
  if (d != o.d) return false;
  for (int i = 0; i < size(); ++i)
    if (p[i] != o.p[i]) return false;
  return true;
}

void Kernel::validate(double kappa, bool test_mode) const {
  require(d >= 2 && d <= kMaxDim, Errc::ModelInvalid, "dimension out of range");
  double floor = test_mode ? 0.0 : kappa;
  for (int i = 0; i < size(); ++i) {
    require(p[i] >= 0.0, Errc::ModelInvalid, "kernel entry negative");
    require(p[i] >= floor - 1e-15, Errc::ModelInvalid, "kernel entry below ellipticity floor");
  }
  require(std::fabs(sum() - 1.0) <= 1e-12, Errc::ModelInvalid, "kernel does not sum to 1");
}

Kernel Kernel::srw(int d) {
  Kernel k;
  k.d = d;
  for (int i = 0; i < 2 * d; ++i) k.p[i] = 1.0 / (2.0 * d);
  return k;
}

Kernel Kernel::of(int d, std::initializer_list<double> entries) {
  Kernel k;
  k.d = d;
  require(static_cast<int>(entries.size()) == 2 * d, Errc::ModelInvalid,
          "kernel needs 2d entries");
  int i = 0;
  for (double e : entries) k.p[i++] = e;
  return k;
}

void TrapOverlay::validate(int d) const {
  require(radius >= 0, Errc::OverlayInvalid, "trap radius must be >= 0");
  require(floor_kappa >= 0.0 && floor_kappa <= 1.0 / (2.0 * d), Errc::OverlayInvalid,
          "trap floor outside [0, 1/(2d)]");
  require(inward_bias >= 0.0, Errc::OverlayInvalid, "inward_bias negative");
  require(inward_bias <= 1.0 - (2.0 * d - 1.0) * floor_kappa + 1e-15, Errc::OverlayInvalid,
          "inward_bias incompatible with floor");
}

void EnvironmentModel::validate() const {
  require(d >= 2 && d <= kMaxDim, Errc::ModelInvalid, "dimension must be in [2,8]");
  require(kappa >= 0.0 && kappa <= 1.0 / (2.0 * d) + 1e-15, Errc::ModelInvalid,
          "kappa outside [0, 1/(2d)]");
  if (!test_mode)
    require(kappa > 0.0, Errc::ModelInvalid, "kappa = 0 requires test mode");
  switch (kind) {
    case ModelKind::Deterministic:
      kernel.validate(kappa, test_mode);
      require(kernel.d == d, Errc::ModelInvalid, "kernel dimension mismatch");
      break;
    case ModelKind::PerturbedSrw:
      require(epsilon >= 0.0 && epsilon <= 1.0 / (2.0 * d), Errc::ModelInvalid,
              "epsilon outside [0, 1/(2d)]");
      require(drift_axis >= 0 && drift_axis < d, Errc::ModelInvalid, "drift axis out of range");
      require(kappa <= 1.0 / (2.0 * d) - epsilon + 1e-15, Errc::ModelInvalid,
              "kappa exceeds 1/(2d) - epsilon");
      break;
    case ModelKind::TwoPointMixture:
      kernel_plus.validate(kappa, test_mode);
      kernel_minus.validate(kappa, test_mode);
      require(kernel_plus.d == d && kernel_minus.d == d, Errc::ModelInvalid,
              "mixture kernel dimension mismatch");
      require(p_mix >= 0.0 && p_mix <= 1.0, Errc::ModelInvalid, "p_mix outside [0,1]");
      break;
    case ModelKind::DirichletSites:
      require(static_cast<int>(alpha.size()) == 2 * d, Errc::ModelInvalid,
              "dirichlet needs 2d concentrations");
      for (double a : alpha)
        require(a > 0.0, Errc::ModelInvalid, "dirichlet concentration must be positive");
      break;
  }
}

bool EnvironmentModel::deterministic_field() const {
  switch (kind) {
    case ModelKind::Deterministic:
      return true;
    case ModelKind::PerturbedSrw:
      return epsilon == 0.0;
    case ModelKind::TwoPointMixture:
      return p_mix == 0.0 || p_mix == 1.0 || kernel_plus == kernel_minus;
    case ModelKind::DirichletSites:
      return false;
  }
  return false;
}

Kernel EnvironmentModel::mean_kernel() const {
  Kernel k;
  k.d = d;
  switch (kind) {
    case ModelKind::Deterministic:
      return kernel;
    case ModelKind::PerturbedSrw: {
      // Per-site magnitude is uniform on (0,1); mean tilt is epsilon/2.
      k = Kernel::srw(d);
      k.p[2 * drift_axis] += epsilon / 2.0;
      k.p[2 * drift_axis + 1] -= epsilon / 2.0;
      return k;
    }
    case ModelKind::TwoPointMixture: {
      for (int i = 0; i < 2 * d; ++i)
        k.p[i] = p_mix * kernel_plus.p[i] + (1.0 - p_mix) * kernel_minus.p[i];
      return k;
    }
    case ModelKind::DirichletSites: {
      double total = 0;
      for (double a : alpha) total += a;
      for (int i = 0; i < 2 * d; ++i)
        k.p[i] = kappa + (1.0 - 2.0 * d * kappa) * alpha[i] / total;
      return k;
    }
  }
  return k;
}

EnvironmentModel EnvironmentModel::deterministic(int d, const Kernel& k, bool test_mode) {
  EnvironmentModel m;
  m.d = d;
  m.kind = ModelKind::Deterministic;
  m.kernel = k;
  m.test_mode = test_mode;
  m.kappa = test_mode ? 0.0 : k.min_entry();
  m.validate();
  return m;
}

EnvironmentModel EnvironmentModel::perturbed_srw(int d, double epsilon, int axis) {
  EnvironmentModel m;
  m.d = d;
  m.kind = ModelKind::PerturbedSrw;
  m.epsilon = epsilon;
  m.drift_axis = axis;
  m.kappa = 1.0 / (2.0 * d) - epsilon;
  m.test_mode = m.kappa <= 0.0;
  m.validate();
  return m;
}

EnvironmentModel EnvironmentModel::two_point(int d, const Kernel& plus, const Kernel& minus,
                                             double p_mix) {
  EnvironmentModel m;
  m.d = d;
  m.kind = ModelKind::TwoPointMixture;
  m.kernel_plus = plus;
  m.kernel_minus = minus;
  m.p_mix = p_mix;
  m.kappa = std::min(plus.min_entry(), minus.min_entry());
  m.validate();
  return m;
}

EnvironmentModel EnvironmentModel::dirichlet(int d, std::vector<double> alpha,
                                             double kappa_floor) {
  EnvironmentModel m;
  m.d = d;
  m.kind = ModelKind::DirichletSites;
  m.alpha = std::move(alpha);
  m.kappa = kappa_floor;
  m.validate();
  return m;
}

namespace {

json kernel_to_json(const Kernel& k) {
  json arr = json::array();
  for (int i = 0; i < k.size(); ++i) arr.push_back(k.p[i]);
  return arr;
}

Kernel kernel_from_json(int d, const json& arr) {
  require(arr.is_array() && static_cast<int>(arr.size()) == 2 * d, Errc::ModelInvalid,
          "kernel array needs 2d entries");
  Kernel k;
  k.d = d;
  for (int i = 0; i < 2 * d; ++i) k.p[i] = arr[i].get<double>();
  return k;
}

}  // namespace

std::string EnvironmentModel::to_json_string(std::uint64_t seed) const {
  json v;
  switch (kind) {
    case ModelKind::Deterministic:
      v = {{"type", "deterministic"}, {"kernel", kernel_to_json(kernel)}};
      break;
    case ModelKind::PerturbedSrw:
      v = {{"type", "perturbed_srw"}, {"epsilon", epsilon}, {"axis", drift_axis}};
      break;
    case ModelKind::TwoPointMixture:
      v = {{"type", "two_point_mixture"},
           {"kernel_plus", kernel_to_json(kernel_plus)},
           {"kernel_minus", kernel_to_json(kernel_minus)},
           {"p_mix", p_mix}};
      break;
    case ModelKind::DirichletSites:
      v = {{"type", "dirichlet"}, {"alpha", alpha}};
      break;
  }
  if (test_mode) v["test_mode"] = true;
  json j = {{"d", d}, {"kappa", kappa}, {"variant", v}, {"seed", seed}};
  return j.dump();
}

std::pair<EnvironmentModel, std::uint64_t> EnvironmentModel::from_json_string(
    const std::string& text) {
  json j = json::parse(text, nullptr, false);
  require(!j.is_discarded(), Errc::ModelInvalid, "model JSON unparsable");
  require(j.contains("d") && j.contains("kappa") && j.contains("variant") && j.contains("seed"),
          Errc::ModelInvalid, "model JSON missing d/kappa/variant/seed");
  EnvironmentModel m;
  m.d = j["d"].get<int>();
  m.kappa = j["kappa"].get<double>();
  std::uint64_t seed = j["seed"].get<std::uint64_t>();
  const json& v = j["variant"];
  require(v.contains("type"), Errc::ModelInvalid, "variant missing type");
  std::string type = v["type"].get<std::string>();
  m.test_mode = v.value("test_mode", false);
  if (type == "deterministic") {
    m.kind = ModelKind::Deterministic;
    m.kernel = kernel_from_json(m.d, v.at("kernel"));
  } else if (type == "perturbed_srw") {
    m.kind = ModelKind::PerturbedSrw;
    m.epsilon = v.at("epsilon").get<double>();
    m.drift_axis = v.value("axis", 0);
  } else if (type == "two_point_mixture") {
    m.kind = ModelKind::TwoPointMixture;
    m.kernel_plus = kernel_from_json(m.d, v.at("kernel_plus"));
    m.kernel_minus = kernel_from_json(m.d, v.at("kernel_minus"));
    m.p_mix = v.at("p_mix").get<double>();
  } else if (type == "dirichlet") {
    m.kind = ModelKind::DirichletSites;
    m.alpha = v.at("alpha").get<std::vector<double>>();
  } else {
    fail(Errc::ModelInvalid, "unknown variant type: " + type);
  }
  m.validate();
  return {m, seed};
}

Environment::Environment(EnvironmentModel model, std::uint64_t seed)
    : model_(std::move(model)), seed_(seed) {
  model_.validate();
}

Kernel Environment::base_kernel(const Point& x) const {
  switch (model_.kind) {
    case ModelKind::Deterministic:
      return model_.kernel;
    case ModelKind::PerturbedSrw: {
      Kernel k = Kernel::srw(model_.d);
      if (model_.epsilon > 0.0) {
        double u = u01(site_key(seed_, x, model_.d), 0);
        k.p[2 * model_.drift_axis] += model_.epsilon * u;
        k.p[2 * model_.drift_axis + 1] -= model_.epsilon * u;
      }
      return k;
    }
    case ModelKind::TwoPointMixture: {
      double u = u01(site_key(seed_, x, model_.d), 0);
      return u < model_.p_mix ? model_.kernel_plus : model_.kernel_minus;
    }
    case ModelKind::DirichletSites: {
      HashStream stream(site_key(seed_, x, model_.d));
      std::array<double, 2 * kMaxDim> g{};
      dirichlet_draw(model_.alpha, stream, std::span<double>(g.data(), 2 * model_.d));
      Kernel k;
      k.d = model_.d;
      double slack = 1.0 - 2.0 * model_.d * model_.kappa;
      for (int i = 0; i < 2 * model_.d; ++i) k.p[i] = model_.kappa + slack * g[i];
      return k;
    }
  }
  return model_.kernel;
}

Kernel trap_kernel(const TrapOverlay& overlay, const Kernel& base, const Point& x, int d) {
  std::int64_t dist = l1_dist(x, overlay.center, d);
  if (dist > overlay.radius || dist == 0) return base;
  // Inward steps reduce the l1 distance to the trap center.
  int n_in = 0;
  bool inward[2 * kMaxDim] = {};
  for (int dir = 0; dir < 2 * d; ++dir) {
    inward[dir] = l1_dist(step(x, dir), overlay.center, d) < dist;
    if (inward[dir]) ++n_in;
  }
  int n_out = 2 * d - n_in;
  // Total inward mass: at least the requested bias, never below the natural
  // share (so a zero-bias overlay never tilts outward).
  double t = std::max(overlay.inward_bias, static_cast<double>(n_in) / (2.0 * d));
  Kernel k;
  k.d = d;
  for (int dir = 0; dir < 2 * d; ++dir)
    k.p[dir] = inward[dir] ? t / n_in : (1.0 - t) / n_out;
  return k;
}

Kernel Environment::site_kernel(const Point& x) const {
  Kernel k = base_kernel(x);
  for (const auto& ov : overlays_) k = trap_kernel(ov, k, x, model_.d);
  return k;
}

double Environment::kappa() const {
  double k = model_.kappa;
  for (const auto& ov : overlays_) k = std::min(k, ov.floor_kappa);
  return k;
}

Environment build_environment(const EnvironmentModel& model, std::uint64_t seed) {
  model.validate();
  return Environment(model, seed);
}

Environment apply_trap(const Environment& env, const TrapOverlay& overlay) {
  overlay.validate(env.dim());
  Environment out = env;
  out.overlays_.push_back(overlay);
  return out;
}

}  // namespace rwre
