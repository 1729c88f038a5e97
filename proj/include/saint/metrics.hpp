#pragma once

#include <cstdint>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "saint/sim_types.hpp"

namespace saint {

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

// Time to collision of `follower` with respect to `leader` at constant speeds;
// +infinity unless the follower is strictly faster.
double compute_ttc(const VehicleState& follower, const VehicleState& leader);
double compute_ttc(double leader_x, double follower_x, double leader_length, double follower_speed,
                   double leader_speed);

inline bool flagged_dangerous(double ttc, double ttc_star) { return ttc < ttc_star; }

struct TtcSample {
  double time = 0.0;
  int follower = -1;
  double ttc = kInfinity;
  double threshold = 0.0;
  bool flagged = false;
};

struct SafetyTally {
  std::int64_t fp = 0;
  std::int64_t fn = 0;
  std::int64_t ac = 0;
  std::int64_t near_collisions = 0;

  SafetyTally& operator+=(const SafetyTally& o) {
    fp += o.fp;
    fn += o.fn;
    ac += o.ac;
    near_collisions += o.near_collisions;
    return *this;
  }
  bool operator==(const SafetyTally&) const = default;
};

// Per-follower bookkeeping over one TTC decision window. A follower counts
// as FP when it was flagged but had no near collision in the window, FN when
// it had a near collision without being flagged.
class WindowTally {
 public:
  void add_sample(int follower, double ttc, double ttc_star);
  void add_near_collision(int follower);
  void add_actual_collision() { ++ac_; }
  void add_near_collision_onset() { ++onsets_; }
  SafetyTally close();

 private:
  std::vector<int> flagged_;
  std::vector<int> near_;
  std::int64_t ac_ = 0;
  std::int64_t onsets_ = 0;
};

// Batch form over one window. `near_collisions` lists followers with a near
// collision in the window (one entry per registration); every actual
// collision event increments AC.
SafetyTally classify_safety_events(std::span<const TtcSample> samples,
                                   std::span<const TimedEvent> events, double ttc_star);

struct EpisodeMetrics {
  double mean_speed = 0.0;
  double mean_delay = 0.0;
  std::int64_t near_collisions = 0;
  SafetyTally safety;
  double mean_abs_accel = 0.0;
  double mean_sq_jerk = 0.0;
  double min_interval_speed = 0.0;
  std::int64_t completed_trips = 0;
  std::vector<double> decision_latency_ms;
};

class DegenerateEpisode : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Streaming aggregation over an episode. Only steps with time >= warmup and
// events at or after warmup count.
class MetricsAccumulator {
 public:
  MetricsAccumulator(double warmup, int steps_per_control, double control_interval);

  void observe_vehicle(std::int64_t step, double time, int id, double speed, double accel);
  void end_step(std::int64_t step, double time);
  void observe_event(const TimedEvent& event, int mainline_lanes);
  void set_safety(const SafetyTally& tally) { safety_ = tally; }
  void add_latency(double ms) { latency_.push_back(ms); }

  // Throws DegenerateEpisode when no vehicle completed a through traversal.
  EpisodeMetrics finish() const;

 private:
  double warmup_;
  int steps_per_control_;
  double control_interval_;

  double speed_sum_ = 0.0;
  double abs_accel_sum_ = 0.0;
  std::int64_t vehicle_steps_ = 0;
  double jerk_sq_sum_ = 0.0;
  std::int64_t jerk_samples_ = 0;
  std::unordered_map<int, double> last_control_accel_;
  std::unordered_map<int, double> current_control_accel_;

  double interval_speed_sum_ = 0.0;
  std::int64_t interval_count_ = 0;
  double min_interval_speed_ = kInfinity;

  std::unordered_map<int, double> mainline_spawn_time_;
  double delay_sum_ = 0.0;
  std::int64_t trips_ = 0;
  std::int64_t near_onsets_ = 0;
  std::int64_t collisions_ = 0;
  SafetyTally safety_;
  std::vector<double> latency_;
};

struct AggregationContext {
  double warmup = 0.0;
  int steps_per_control = 10;
  double control_interval = 1.0;
  int mainline_lanes = 3;
};

// Rebuilds EpisodeMetrics from recorded logs. The safety tally (FP/FN) needs
// the TTC threshold history and is passed in; near collisions and actual
// collisions come from the event log.
EpisodeMetrics aggregate_episode(std::span<const TimedEvent> events,
                                 std::span<const TrajectoryRow> trajectory,
                                 const AggregationContext& context,
                                 const SafetyTally& tally = {});

// Fixed column order: seed, scenario, penetration, ramp_flow, near_collisions,
// fp, fn, ac, mean_speed, mean_delay, mean_abs_accel, mean_sq_jerk.
std::string metrics_csv_header();
std::string metrics_csv_row(std::uint64_t seed, const std::string& scenario, double penetration,
                            double ramp_flow, const EpisodeMetrics& m);

}  // namespace saint
