#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "rwre/lattice.hpp"

namespace rwre {

// Transition kernel at one site: probabilities for the 2d signed unit steps,
// ordered (+e_1, -e_1, +e_2, -e_2, ...).
struct Kernel {
  int d = 2;
  std::array<double, 2 * kMaxDim> p{};

  int size() const { return 2 * d; }
  double sum() const;
  double min_entry() const;
  Vec drift() const;

  bool operator==(const Kernel& o) const;

  // Throws ModelInvalid unless entries are >= 0, >= kappa (when not in test
  // mode) and sum to 1 within 1e-12.
  void validate(double kappa, bool test_mode) const;

  static Kernel srw(int d);
  static Kernel of(int d, std::initializer_list<double> entries);
};

enum class ModelKind { Deterministic, PerturbedSrw, TwoPointMixture, DirichletSites };

// Inward-biased ball overlay; the mechanism behind atypically small
// right-exit probabilities at small scales.
struct TrapOverlay {
  Point center{};
  std::int64_t radius = 0;       // l1 ball radius
  double floor_kappa = 0.0;      // every overlaid entry stays >= this
  double inward_bias = 0.0;      // total inward mass >= this

  void validate(int d) const;  // OverlayInvalid
};

// i.i.d. site kernel distribution on Z^d.
struct EnvironmentModel {
  int d = 2;
  double kappa = 0.0;
  bool test_mode = false;
  ModelKind kind = ModelKind::Deterministic;

  Kernel kernel;                       // Deterministic
  double epsilon = 0.0;                // PerturbedSrw
  int drift_axis = 0;                  // PerturbedSrw
  Kernel kernel_plus, kernel_minus;    // TwoPointMixture
  double p_mix = 0.0;                  // TwoPointMixture
  std::vector<double> alpha;           // DirichletSites (kernels floored at kappa)

  void validate() const;  // ModelInvalid

  // True when the kernel field carries no randomness (a single quenched
  // environment equals the annealed average).
  bool deterministic_field() const;

  // Annealed one-step mean kernel.
  Kernel mean_kernel() const;

  // Direction of the annealed drift, or zero vector when driftless.
  Vec mean_drift() const { return mean_kernel().drift(); }

  static EnvironmentModel deterministic(int d, const Kernel& k, bool test_mode = false);
  static EnvironmentModel perturbed_srw(int d, double epsilon, int axis);
  static EnvironmentModel two_point(int d, const Kernel& plus, const Kernel& minus, double p_mix);
  static EnvironmentModel dirichlet(int d, std::vector<double> alpha, double kappa_floor);

  std::string to_json_string(std::uint64_t seed) const;
  static std::pair<EnvironmentModel, std::uint64_t> from_json_string(const std::string& text);
};

// A concrete environment: model + master seed (+ overlays). Site lookup is a
// pure function; the infinite kernel field is realized lazily through
// counter-based hashing and never materialized.
class Environment {
 public:
  Environment(EnvironmentModel model, std::uint64_t seed);

  const EnvironmentModel& model() const { return model_; }
  std::uint64_t seed() const { return seed_; }
  const std::vector<TrapOverlay>& overlays() const { return overlays_; }

  Kernel site_kernel(const Point& x) const;

  // Effective ellipticity floor, accounting for overlays.
  double kappa() const;

  bool test_mode() const { return model_.test_mode; }
  int dim() const { return model_.d; }

 private:
  friend Environment apply_trap(const Environment&, const TrapOverlay&);

  Kernel base_kernel(const Point& x) const;

  EnvironmentModel model_;
  std::uint64_t seed_ = 0;
  std::vector<TrapOverlay> overlays_;
};

Environment build_environment(const EnvironmentModel& model, std::uint64_t seed);
Environment apply_trap(const Environment& env, const TrapOverlay& overlay);

// Kernel the overlay induces at x (identity outside the ball and at the
// center). Exposed for tests.
Kernel trap_kernel(const TrapOverlay& overlay, const Kernel& base, const Point& x, int d);

}  // namespace rwre
