#pragma once

#include <cstdint>

#include "saint/scenario.hpp"

namespace saint {

struct VehicleState {
  int id = 0;
  double x = 0.0;  // front bumper position along the lane
  double v = 0.0;
  double a = 0.0;
  int lane = 0;
  double length = 4.5;
  double max_accel = 2.6;
  double max_decel = 2.6;  // magnitude; applied as negative acceleration
  double sigma = 0.0;
  double tau = 1.0;
  bool is_acc_equipped = false;
  bool acc_active = false;  // equipped and the running system actuates ACC
  double commanded_gap = 10.0;
  Route route = Route::kThrough;

  double spawn_time = 0.0;
  int spawn_lane = 0;
  double last_lane_change = -1e9;
  double v_max = 33.3;
  double speed_factor = 1.0;

  double rear() const { return x - length; }
};

// Bumper-to-bumper distance from follower to leader.
inline double bumper_gap(const VehicleState& follower, const VehicleState& leader) {
  return leader.x - follower.x - leader.length;
}

enum class EventKind { kNearCollision, kActualCollision, kLaneChange, kSpawn, kDespawn };
enum class DespawnReason { kNone, kSegmentEnd, kRampExit, kCollision };

struct TimedEvent {
  double time = 0.0;
  EventKind kind = EventKind::kSpawn;
  int subject = -1;
  int object = -1;  // -1 when absent
  int lane = -1;
  DespawnReason reason = DespawnReason::kNone;
};

struct TrajectoryRow {
  std::int64_t step = 0;
  double time = 0.0;
  int id = 0;
  int lane = 0;
  double position = 0.0;
  double speed = 0.0;
  double accel = 0.0;
  double gap = -1.0;  // -1 when the vehicle has no leader in its lane
  bool equipped = false;
};

}  // namespace saint
