#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "rwre/environment.hpp"
#include "rwre/region.hpp"

namespace rwre {

enum class StopReason { RightBoundary, OtherBoundary, LeftHalfspace, StepCap };

struct Trajectory {
  Point start{};
  std::vector<std::uint8_t> moves;  // direction indices
  StopReason stop_reason = StopReason::StepCap;
  std::uint64_t stream_id = 0;
  int d = 2;

  std::int64_t steps() const { return static_cast<std::int64_t>(moves.size()); }
  Point position_at(std::int64_t n) const;  // unwrapped
  Point final_position() const { return position_at(steps()); }

  std::vector<std::uint8_t> to_binary() const;
  static Trajectory from_binary(const std::vector<std::uint8_t>& bytes);
  std::string to_json_string() const;
};

// Quenched trajectory from start until the region boundary or the step cap.
// Steps are drawn from the hashed stream (env seed, stream id, step index);
// periodic slabs wrap positions for kernel lookups only, the recorded
// trajectory is unwrapped.
Trajectory simulate(const Environment& env, const Point& start, const Region& region,
                    std::int64_t step_cap, std::uint64_t stream_id);

struct DirectionalReport {
  double p_hat = 0;      // estimate of P_0(back halfspace crossed first)
  double ci_lo = 0;
  double ci_hi = 0;
  bool rule_of_three = false;
  std::int64_t back = 0;
  std::int64_t right = 0;
  std::int64_t censored = 0;
  std::int64_t replicas = 0;
};

// Annealed estimate of P_0(T_L^l > T_{bL}^{-l}): a fresh environment per
// replica; each walk runs until the level L is reached along l or the level
// -bL is reached (attaining the level counts as crossing). The step cap is a
// safety net only; capped replicas are censored and reported.
DirectionalReport directional_report(const EnvironmentModel& model, std::uint64_t master_seed,
                                     const Vec& l, double b, double L, std::int64_t M,
                                     std::int64_t safety_cap = 50'000'000, int workers = 1);

struct RegenerationRecord {
  std::vector<std::int64_t> times;     // confirmed regeneration times
  std::vector<Point> positions;
  std::vector<std::int64_t> radii;     // max l1 displacement per segment
  bool censored = false;               // ended before the last candidate's horizon
};

// Times n where X_n.e_1 strictly exceeds all earlier values and no later
// point within confirm_horizon falls below it.
RegenerationRecord regeneration_decompose(const Trajectory& traj,
                                          std::int64_t confirm_horizon);

// True iff the first 2N^2 regeneration radii are all strictly below R_2(N).
// InsufficientData when fewer than 2N^2 confirmed regenerations exist.
bool check_event_A_N(const RegenerationRecord& record, std::int64_t N);

struct DirectionEstimate {
  bool drift_detected = false;
  Vec v_emp{};
  Vec v_L_emp{};
  double mean_norm = 0;
  double se_norm = 0;
  std::int64_t usable = 0;        // replicas with a confirmed second regeneration
  std::int64_t a_event_count = 0; // among those, replicas where A_L holds
};

// Monte Carlo estimate of the asymptotic direction from regeneration
// increments X_{tau_2} - X_{tau_1}; v_L restricts to replicas satisfying A_L.
DirectionEstimate estimate_direction(const EnvironmentModel& model, std::uint64_t master_seed,
                                     std::int64_t L, std::int64_t M, std::int64_t horizon,
                                     int workers = 1);

// Regeneration increments X_{tau_2} - X_{tau_1} with their A_L flags; shared
// by estimate_direction and the direction-gap statistic.
struct RegenIncrementSample {
  std::vector<Vec> increments;
  std::vector<std::uint8_t> a_event;
};
RegenIncrementSample sample_regen_increments(const EnvironmentModel& model,
                                             std::uint64_t master_seed, std::int64_t L,
                                             std::int64_t M, std::int64_t horizon, int workers);

const char* stop_reason_name(StopReason r);

}  // namespace rwre
