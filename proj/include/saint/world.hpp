#pragma once

#include <cstdint>
#include <deque>
#include <optional>
#include <utility>
#include <vector>

#include "saint/car_following.hpp"
#include "saint/scenario.hpp"
#include "saint/sim_types.hpp"

namespace saint {

struct CompletedTrip {
  int id;
  double spawn_time;
  double exit_time;
  bool mainline_origin;
};

// Whole-segment simulation state. Each lane vector is ordered by position,
// front-most vehicle first.
struct WorldState {
  std::int64_t step_index = 0;
  double time = 0.0;
  std::vector<std::vector<VehicleState>> lanes;
  std::vector<TimedEvent> events;

  std::vector<SpawnEntry> schedule;
  std::size_t schedule_cursor = 0;
  std::vector<std::deque<SpawnEntry>> pending;  // per entry lane

  std::vector<std::pair<int, int>> near_pairs;  // (follower, leader), sorted
  std::vector<CompletedTrip> trips;
  std::int64_t spawned = 0;
  std::int64_t despawned = 0;
  int next_id = 0;

  bool acc_enabled = true;  // false: equipped vehicles drive as humans
  bool danger_response = false;
  double ttc_star = 4.0;
  double default_gap = 10.0;
  AccGains gains;

  std::vector<TrajectoryRow>* trajectory = nullptr;  // optional per-step sink

  std::size_t vehicle_count() const;
  const VehicleState* find(int id) const;
};

WorldState make_world(const Scenario& scenario, std::vector<SpawnEntry> schedule);
WorldState make_world(const Scenario& scenario, std::uint64_t seed);

// Leader of the vehicle at `index` in `lane`: the next vehicle ahead, or the
// lane-end obstacle of an on-ramp. `obstacle` receives the synthetic leader.
const VehicleState* leader_of(const WorldState& world, const Scenario& scenario, int lane,
                              std::size_t index, VehicleState& obstacle);

// Vehicles in `lane` immediately ahead of and behind position x.
struct Neighbors {
  const VehicleState* leader = nullptr;
  const VehicleState* follower = nullptr;
};
Neighbors neighbors_at(const WorldState& world, int lane, double x, int exclude_id = -1);

// (follower id, leader id) for same-lane adjacent pairs whose bumper gap is
// below min_gap while the follower is strictly faster.
std::vector<std::pair<int, int>> detect_near_collisions(const WorldState& world, double min_gap);

// Advances the world by one physics step: spawning, lane changes,
// longitudinal update, collision and near-collision detection, despawning.
void step(WorldState& world, const Scenario& scenario, Rng& dawdle_rng);

// Sets the commanded gap on every ACC vehicle and for future spawns.
void broadcast_gap(WorldState& world, double gap);

}  // namespace saint
