#include "rwre/walk.hpp"

#include <cmath>
#include <cstring>

#include <nlohmann/json.hpp>

#include "rwre/error.hpp"
#include "rwre/hashing.hpp"
#include "rwre/parallel.hpp"
#include "rwre/scales.hpp"
#include "rwre/stats.hpp"

namespace rwre {

using nlohmann::json;

const char* stop_reason_name(StopReason r) {
  switch (r) {
    case StopReason::RightBoundary: return "right_boundary";
    case StopReason::OtherBoundary: return "other_boundary";
    case StopReason::LeftHalfspace: return "left_halfspace";
    case StopReason::StepCap: return "step_cap";
  }
  return "?";
}

Point Trajectory::position_at(std::int64_t n) const {
  require(n >= 0 && n <= steps(), Errc::BadParameter, "trajectory index out of range");
  Point p = start;
  for (std::int64_t i = 0; i < n; ++i) p = step(p, moves[static_cast<std::size_t>(i)]);
  return p;
}

std::vector<std::uint8_t> Trajectory::to_binary() const {
  // Layout: u8 d, u8 stop_reason, u64 stream_id, i64 start[d], u64 n, moves.
  std::vector<std::uint8_t> out;
  out.reserve(16 + 8 * static_cast<std::size_t>(d) + moves.size());
  auto put64 = [&](std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  };
  out.push_back(static_cast<std::uint8_t>(d));
  out.push_back(static_cast<std::uint8_t>(stop_reason));
  put64(stream_id);
  for (int i = 0; i < d; ++i) put64(static_cast<std::uint64_t>(start[i]));
  put64(static_cast<std::uint64_t>(moves.size()));
  out.insert(out.end(), moves.begin(), moves.end());
  return out;
}

Trajectory Trajectory::from_binary(const std::vector<std::uint8_t>& bytes) {
  require(bytes.size() >= 10, Errc::BadParameter, "trajectory blob too short");
  Trajectory t;
  std::size_t at = 0;
  auto get64 = [&]() {
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(bytes[at++]) << (8 * i);
    return v;
  };
  t.d = bytes[at++];
  t.stop_reason = static_cast<StopReason>(bytes[at++]);
  require(t.d >= 2 && t.d <= kMaxDim, Errc::BadParameter, "trajectory dimension corrupt");
  t.stream_id = get64();
  require(bytes.size() >= at + 8 * static_cast<std::size_t>(t.d) + 8, Errc::BadParameter,
          "trajectory blob truncated");
  for (int i = 0; i < t.d; ++i) t.start[i] = static_cast<std::int64_t>(get64());
  std::uint64_t n = get64();
  require(bytes.size() == at + n, Errc::BadParameter, "trajectory move count mismatch");
  t.moves.assign(bytes.begin() + static_cast<std::ptrdiff_t>(at), bytes.end());
  for (std::uint8_t m : t.moves)
    require(m < 2 * t.d, Errc::BadParameter, "trajectory move out of range");
  return t;
}

std::string Trajectory::to_json_string() const {
  json j;
  j["d"] = d;
  json s = json::array();
  for (int i = 0; i < d; ++i) s.push_back(start[i]);
  j["start"] = s;
  j["moves"] = moves;
  j["stop_reason"] = stop_reason_name(stop_reason);
  j["stream_id"] = stream_id;
  return j.dump();
}

namespace {

inline int draw_direction(const Kernel& k, double u) {
  double acc = 0;
  int last = k.size() - 1;
  for (int dir = 0; dir < last; ++dir) {
    acc += k.p[dir];
    if (u < acc) return dir;
  }
  return last;
}

}  // namespace

Trajectory simulate(const Environment& env, const Point& start, const Region& region,
                    std::int64_t step_cap, std::uint64_t stream_id) {
  require(step_cap >= 1, Errc::BadParameter, "step cap must be >= 1");
  require(region.contains(region.canonical(start)), Errc::StartOutside,
          "start site is not strictly inside the region");
  Trajectory traj;
  traj.d = env.dim();
  traj.start = start;
  traj.stream_id = stream_id;
  traj.stop_reason = StopReason::StepCap;
  traj.moves.reserve(static_cast<std::size_t>(std::min<std::int64_t>(step_cap, 1 << 20)));

  const std::uint64_t key = stream_key(env.seed(), tag::kWalkStep, stream_id);
  Point pos = start;
  for (std::int64_t n = 0; n < step_cap; ++n) {
    Kernel k = env.site_kernel(region.canonical(pos));
    int dir = draw_direction(k, u01(key, static_cast<std::uint64_t>(n)));
    pos = step(pos, dir);
    traj.moves.push_back(static_cast<std::uint8_t>(dir));
    SiteClass c = region.classify(region.canonical(pos));
    if (c != SiteClass::Interior) {
      traj.stop_reason =
          c == SiteClass::RightBoundary ? StopReason::RightBoundary : StopReason::OtherBoundary;
      break;
    }
  }
  return traj;
}

DirectionalReport directional_report(const EnvironmentModel& model, std::uint64_t master_seed,
                                     const Vec& l, double b, double L, std::int64_t M,
                                     std::int64_t safety_cap, int workers) {
  require(b > 0.0, Errc::BadParameter, "b must be positive");
  require(L > 0.0, Errc::BadParameter, "L must be positive");
  require(M >= 1, Errc::BadParameter, "replica count must be >= 1");
  model.validate();
  require(model.test_mode || model.kappa > 0.0, Errc::ModelInvalid,
          "statistical estimates need an elliptic model");
  const int d = model.d;
  Vec dir = normalized(l, d);

  // Outcome per replica: 0 right first, 1 back first, 2 censored.
  std::vector<std::uint8_t> outcome(static_cast<std::size_t>(M), 2);
  parallel_for(M, workers, [&](std::int64_t i) {
    Environment env = build_environment(
        model, replica_seed(master_seed, 0x64697265 /* dire */, static_cast<std::uint64_t>(i)));
    const std::uint64_t key = stream_key(env.seed(), tag::kWalkStep, 0);
    Point pos{};
    for (std::int64_t n = 0; n < safety_cap; ++n) {
      Kernel k = env.site_kernel(pos);
      pos = step(pos, draw_direction(k, u01(key, static_cast<std::uint64_t>(n))));
      double t = dot(dir, pos, d);
      if (t >= L) {
        outcome[static_cast<std::size_t>(i)] = 0;
        return;
      }
      if (t <= -b * L) {
        outcome[static_cast<std::size_t>(i)] = 1;
        return;
      }
    }
  });

  DirectionalReport rep;
  rep.replicas = M;
  for (std::int64_t i = 0; i < M; ++i) {
    switch (outcome[static_cast<std::size_t>(i)]) {
      case 0: ++rep.right; break;
      case 1: ++rep.back; break;
      default: ++rep.censored; break;
    }
  }
  std::int64_t usable = rep.right + rep.back;
  require(usable >= 1, Errc::InsufficientData, "all replicas hit the safety cap");
  BinomialCi ci = binomial_ci(rep.back, usable, 3.0);
  rep.p_hat = ci.p_hat;
  rep.ci_lo = ci.lo;
  rep.ci_hi = ci.hi;
  rep.rule_of_three = ci.rule_of_three;
  return rep;
}

RegenerationRecord regeneration_decompose(const Trajectory& traj,
                                          std::int64_t confirm_horizon) {
  require(confirm_horizon >= 1, Errc::BadParameter, "confirm horizon must be >= 1");
  require(traj.steps() >= 1, Errc::BadParameter, "trajectory is empty");
  const std::int64_t n_steps = traj.steps();

  // e_1 coordinates along the path.
  std::vector<std::int64_t> e1(static_cast<std::size_t>(n_steps) + 1);
  e1[0] = traj.start[0];
  {
    std::int64_t v = traj.start[0];
    for (std::int64_t i = 0; i < n_steps; ++i) {
      int mv = traj.moves[static_cast<std::size_t>(i)];
      if (dir_axis(mv) == 0) v += dir_sign(mv);
      e1[static_cast<std::size_t>(i) + 1] = v;
    }
  }
  // window_min[i] = min of e1[i..min(end, i+confirm_horizon)], sliding-window
  // minimum with a monotone deque scanned right to left.
  std::vector<std::int64_t> window_min(e1.size());
  {
    std::vector<std::int64_t> deque_idx;
    std::size_t head = 0;
    for (std::int64_t i = static_cast<std::int64_t>(e1.size()) - 1; i >= 0; --i) {
      // maintain indices of increasing e1 over [i, i+H]
      while (deque_idx.size() > head &&
             e1[static_cast<std::size_t>(deque_idx.back())] >= e1[static_cast<std::size_t>(i)])
        deque_idx.pop_back();
      deque_idx.push_back(i);
      while (deque_idx[head] > i + confirm_horizon) ++head;
      window_min[static_cast<std::size_t>(i)] = e1[static_cast<std::size_t>(deque_idx[head])];
    }
  }

  RegenerationRecord rec;
  std::int64_t best = e1[0];
  std::vector<std::int64_t> all_times;
  for (std::int64_t n = 1; n < static_cast<std::int64_t>(e1.size()); ++n) {
    std::int64_t v = e1[static_cast<std::size_t>(n)];
    if (v <= best) continue;
    best = v;
    // Candidate regeneration: new strict maximum. Confirmed when no later
    // point within the horizon (clipped at the end) goes below.
    if (window_min[static_cast<std::size_t>(n)] >= v) {
      all_times.push_back(n);
      if (n + confirm_horizon > n_steps) rec.censored = true;
    }
  }
  // Radii relative to the previous confirmed regeneration (tau_0 = 0).
  Point prev = traj.start;
  Point pos = traj.start;
  std::size_t next_idx = 0;
  std::int64_t run_max = 0;
  for (std::int64_t n = 1; n <= n_steps && next_idx < all_times.size(); ++n) {
    pos = step(pos, traj.moves[static_cast<std::size_t>(n - 1)]);
    run_max = std::max(run_max, l1_dist(pos, prev, traj.d));
    if (n == all_times[next_idx]) {
      rec.times.push_back(n);
      rec.positions.push_back(pos);
      rec.radii.push_back(run_max);
      prev = pos;
      run_max = 0;
      ++next_idx;
    }
  }
  return rec;
}

bool check_event_A_N(const RegenerationRecord& record, std::int64_t N) {
  std::int64_t needed = 2 * N * N;
  require(static_cast<std::int64_t>(record.radii.size()) >= needed, Errc::InsufficientData,
          "record holds fewer than 2N^2 confirmed regenerations");
  std::int64_t bound = scale_R(2, N);
  for (std::int64_t n = 0; n < needed; ++n)
    if (record.radii[static_cast<std::size_t>(n)] >= bound) return false;
  return true;
}

RegenIncrementSample sample_regen_increments(const EnvironmentModel& model,
                                             std::uint64_t master_seed, std::int64_t L,
                                             std::int64_t M, std::int64_t horizon,
                                             int workers) {
  require(M >= 1, Errc::BadParameter, "replica count must be >= 1");
  model.validate();
  const int d = model.d;
  // Roomy slab so walks only ever stop at the cap.
  Region ambient = Region::slab(d, axis_vec(0, d), 1e15, 1e15);
  std::int64_t needed = 2 * L * L;

  std::vector<Vec> increments(static_cast<std::size_t>(M));
  std::vector<std::uint8_t> has(static_cast<std::size_t>(M), 0);
  std::vector<std::uint8_t> a_flag(static_cast<std::size_t>(M), 0);
  parallel_for(M, workers, [&](std::int64_t i) {
    Environment env = build_environment(
        model, replica_seed(master_seed, 0x72656765 /* rege */, static_cast<std::uint64_t>(i)));
    Trajectory traj = simulate(env, Point{}, ambient, horizon, 0);
    RegenerationRecord rec = regeneration_decompose(traj, std::max<std::int64_t>(1, horizon / 4));
    if (rec.times.size() < 2) return;
    has[static_cast<std::size_t>(i)] = 1;
    Vec inc{};
    for (int c = 0; c < d; ++c)
      inc[c] = static_cast<double>(rec.positions[1][c] - rec.positions[0][c]);
    increments[static_cast<std::size_t>(i)] = inc;
    if (static_cast<std::int64_t>(rec.radii.size()) >= needed)
      a_flag[static_cast<std::size_t>(i)] = check_event_A_N(rec, L) ? 1 : 0;
  });

  RegenIncrementSample out;
  for (std::int64_t i = 0; i < M; ++i) {
    if (!has[static_cast<std::size_t>(i)]) continue;
    out.increments.push_back(increments[static_cast<std::size_t>(i)]);
    out.a_event.push_back(a_flag[static_cast<std::size_t>(i)]);
  }
  return out;
}

DirectionEstimate estimate_direction(const EnvironmentModel& model, std::uint64_t master_seed,
                                     std::int64_t L, std::int64_t M, std::int64_t horizon,
                                     int workers) {
  RegenIncrementSample sample = sample_regen_increments(model, master_seed, L, M, horizon, workers);
  DirectionEstimate est;
  est.usable = static_cast<std::int64_t>(sample.increments.size());
  if (est.usable == 0) return est;
  const int d = model.d;

  Vec mean{};
  Vec mean_a{};
  for (std::size_t i = 0; i < sample.increments.size(); ++i) {
    for (int c = 0; c < d; ++c) mean[c] += sample.increments[i][c];
    if (sample.a_event[i]) {
      ++est.a_event_count;
      for (int c = 0; c < d; ++c) mean_a[c] += sample.increments[i][c];
    }
  }
  for (int c = 0; c < d; ++c) mean[c] /= static_cast<double>(est.usable);
  est.mean_norm = l2_norm(mean, d);

  // Standard error of the mean-vector norm: per-coordinate sample variance.
  double var_sum = 0;
  for (int c = 0; c < d; ++c) {
    double v = 0;
    for (const Vec& inc : sample.increments) v += (inc[c] - mean[c]) * (inc[c] - mean[c]);
    if (est.usable > 1) v /= static_cast<double>(est.usable - 1);
    var_sum += v;
  }
  est.se_norm = std::sqrt(var_sum / static_cast<double>(est.usable));

  if (est.mean_norm < 3.0 * est.se_norm) {
    est.drift_detected = false;
    return est;
  }
  est.drift_detected = true;
  est.v_emp = normalized(mean, d);
  if (est.a_event_count > 0) {
    for (int c = 0; c < d; ++c) mean_a[c] /= static_cast<double>(est.a_event_count);
    est.v_L_emp = normalized(mean_a, d);
  }
  return est;
}

}  // namespace rwre
