#include "saint/metrics.hpp"

#include <algorithm>
#include <map>
#include <sstream>

namespace saint {

double compute_ttc(double leader_x, double follower_x, double leader_length, double follower_speed,
                   double leader_speed) {
  if (!(follower_speed > leader_speed)) return kInfinity;
  return (leader_x - follower_x - leader_length) / (follower_speed - leader_speed);
}

double compute_ttc(const VehicleState& follower, const VehicleState& leader) {
  return compute_ttc(leader.x, follower.x, leader.length, follower.v, leader.v);
}

void WindowTally::add_sample(int follower, double ttc, double ttc_star) {
  if (flagged_dangerous(ttc, ttc_star)) flagged_.push_back(follower);
}

void WindowTally::add_near_collision(int follower) { near_.push_back(follower); }

SafetyTally WindowTally::close() {
  auto unique_sorted = [](std::vector<int>& v) {
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
  };
  unique_sorted(flagged_);
  unique_sorted(near_);
  SafetyTally t;
  std::vector<int> diff;
  std::set_difference(flagged_.begin(), flagged_.end(), near_.begin(), near_.end(),
                      std::back_inserter(diff));
  t.fp = static_cast<std::int64_t>(diff.size());
  diff.clear();
  std::set_difference(near_.begin(), near_.end(), flagged_.begin(), flagged_.end(),
                      std::back_inserter(diff));
  t.fn = static_cast<std::int64_t>(diff.size());
  t.ac = ac_;
  t.near_collisions = onsets_;
  flagged_.clear();
  near_.clear();
  ac_ = 0;
  onsets_ = 0;
  return t;
}

SafetyTally classify_safety_events(std::span<const TtcSample> samples,
                                   std::span<const TimedEvent> events, double ttc_star) {
  WindowTally w;
  for (const auto& s : samples) w.add_sample(s.follower, s.ttc, ttc_star);
  for (const auto& e : events) {
    if (e.kind == EventKind::kNearCollision) {
      w.add_near_collision(e.subject);
      w.add_near_collision_onset();
    } else if (e.kind == EventKind::kActualCollision) {
      w.add_actual_collision();
    }
  }
  return w.close();
}

MetricsAccumulator::MetricsAccumulator(double warmup, int steps_per_control,
                                       double control_interval)
    : warmup_(warmup), steps_per_control_(steps_per_control), control_interval_(control_interval) {}

void MetricsAccumulator::observe_vehicle(std::int64_t step, double time, int id, double speed,
                                         double accel) {
  if (time < warmup_) return;
  speed_sum_ += speed;
  abs_accel_sum_ += std::abs(accel);
  ++vehicle_steps_;
  interval_speed_sum_ += speed;
  ++interval_count_;
  if (step % steps_per_control_ == 0) {
    const auto it = last_control_accel_.find(id);
    if (it != last_control_accel_.end()) {
      const double jerk = (accel - it->second) / control_interval_;
      jerk_sq_sum_ += jerk * jerk;
      ++jerk_samples_;
    }
    current_control_accel_[id] = accel;
  }
}

void MetricsAccumulator::end_step(std::int64_t step, double time) {
  if (time < warmup_) return;
  if (step % steps_per_control_ == 0) {
    last_control_accel_.swap(current_control_accel_);
    current_control_accel_.clear();
    if (interval_count_ > 0)
      min_interval_speed_ =
          std::min(min_interval_speed_, interval_speed_sum_ / static_cast<double>(interval_count_));
    interval_speed_sum_ = 0.0;
    interval_count_ = 0;
  }
}

void MetricsAccumulator::observe_event(const TimedEvent& e, int mainline_lanes) {
  if (e.kind == EventKind::kSpawn) {
    if (e.lane < mainline_lanes) mainline_spawn_time_[e.subject] = e.time;
    return;
  }
  if (e.time < warmup_) {
    if (e.kind == EventKind::kDespawn) mainline_spawn_time_.erase(e.subject);
    return;
  }
  switch (e.kind) {
    case EventKind::kNearCollision:
      ++near_onsets_;
      break;
    case EventKind::kActualCollision:
      ++collisions_;
      break;
    case EventKind::kDespawn: {
      const auto it = mainline_spawn_time_.find(e.subject);
      if (it != mainline_spawn_time_.end()) {
        if (e.reason == DespawnReason::kSegmentEnd) {
          delay_sum_ += e.time - it->second;
          ++trips_;
        }
        mainline_spawn_time_.erase(it);
      }
      break;
    }
    default:
      break;
  }
}

EpisodeMetrics MetricsAccumulator::finish() const {
  if (trips_ == 0) throw DegenerateEpisode("no vehicle completed a traversal of the segment");
  EpisodeMetrics m;
  const double n = static_cast<double>(std::max<std::int64_t>(vehicle_steps_, 1));
  m.mean_speed = speed_sum_ / n;
  m.mean_abs_accel = abs_accel_sum_ / n;
  m.mean_delay = delay_sum_ / static_cast<double>(trips_);
  m.mean_sq_jerk = jerk_samples_ > 0 ? jerk_sq_sum_ / static_cast<double>(jerk_samples_) : 0.0;
  m.min_interval_speed = min_interval_speed_ == kInfinity ? m.mean_speed : min_interval_speed_;
  m.completed_trips = trips_;
  m.near_collisions = near_onsets_;
  m.safety = safety_;
  m.safety.near_collisions = near_onsets_;
  m.safety.ac = collisions_;
  m.decision_latency_ms = latency_;
  return m;
}

EpisodeMetrics aggregate_episode(std::span<const TimedEvent> events,
                                 std::span<const TrajectoryRow> trajectory,
                                 const AggregationContext& context, const SafetyTally& tally) {
  MetricsAccumulator acc(context.warmup, context.steps_per_control, context.control_interval);
  std::size_t i = 0;
  while (i < trajectory.size()) {
    const std::int64_t step = trajectory[i].step;
    const double time = trajectory[i].time;
    for (; i < trajectory.size() && trajectory[i].step == step; ++i)
      acc.observe_vehicle(step, time, trajectory[i].id, trajectory[i].speed, trajectory[i].accel);
    acc.end_step(step, time);
  }
  for (const auto& e : events) acc.observe_event(e, context.mainline_lanes);
  acc.set_safety(tally);
  return acc.finish();
}

std::string metrics_csv_header() {
  return "seed,scenario,penetration,ramp_flow,near_collisions,fp,fn,ac,mean_speed,mean_delay,"
         "mean_abs_accel,mean_sq_jerk";
}

std::string metrics_csv_row(std::uint64_t seed, const std::string& scenario, double penetration,
                            double ramp_flow, const EpisodeMetrics& m) {
  std::ostringstream os;
  os.precision(10);
  os << seed << ',' << scenario << ',' << penetration << ',' << ramp_flow << ','
     << m.near_collisions << ',' << m.safety.fp << ',' << m.safety.fn << ',' << m.safety.ac << ','
     << m.mean_speed << ',' << m.mean_delay << ',' << m.mean_abs_accel << ',' << m.mean_sq_jerk;
  return os.str();
}

}  // namespace saint
