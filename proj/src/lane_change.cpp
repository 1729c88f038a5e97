#include "saint/lane_change.hpp"

#include <algorithm>

namespace saint {

double safe_speed_deficit(const VehicleState& follower, const VehicleState& leader) {
  return std::max(0.0, follower.v - krauss_safe_speed(follower, leader));
}

bool gap_acceptable(const VehicleState& vehicle, const VehicleState* new_leader,
                    const VehicleState* new_follower, double urgency) {
  if (new_leader) {
    if (bumper_gap(vehicle, *new_leader) <= 0.0) return false;
    if (safe_speed_deficit(vehicle, *new_leader) > urgency * vehicle.max_decel) return false;
  }
  if (new_follower) {
    if (bumper_gap(*new_follower, vehicle) <= 0.0) return false;
    if (safe_speed_deficit(*new_follower, vehicle) >
        urgency * new_follower->max_decel * kLagBrakingHorizon)
      return false;
  }
  return true;
}

std::optional<LaneChangeIntent> mandatory_intent(const VehicleState& vehicle,
                                                 const RoadGeometry& geometry) {
  if (!geometry.has_ramp()) return std::nullopt;
  const int ramp = geometry.ramp_lane();
  const double zs = geometry.merge_zone_start();
  const double ze = geometry.merge_zone_end();
  if (geometry.ramp_kind == RampKind::kOnRamp) {
    if (vehicle.lane != ramp || vehicle.x < zs) return std::nullopt;
    return LaneChangeIntent{0, std::clamp((vehicle.x - zs) / (ze - zs), 0.0, 1.0), true};
  }
  if (vehicle.route != Route::kExitAtRamp || vehicle.lane == ramp) return std::nullopt;
  if (vehicle.lane == 0) {
    if (vehicle.x < zs || vehicle.x > ze) return std::nullopt;
    return LaneChangeIntent{ramp, std::clamp((vehicle.x - zs) / (ze - zs), 0.0, 1.0), true};
  }
  const double remaining = ze - vehicle.x;
  if (remaining > kExitLookahead) return std::nullopt;
  return LaneChangeIntent{vehicle.lane - 1, std::clamp(1.0 - remaining / kExitLookahead, 0.0, 1.0),
                          true};
}

double anticipated_speed(const VehicleState& vehicle, const WorldState& world, int lane) {
  const Neighbors n = neighbors_at(world, lane, vehicle.x, vehicle.id);
  double v = vehicle.v_max;
  if (n.leader) v = std::min(v, krauss_safe_speed(vehicle, *n.leader));
  return v;
}

std::optional<int> lane_change_decision(const VehicleState& vehicle, const WorldState& world,
                                        const Scenario& scenario) {
  const RoadGeometry& g = scenario.geometry;
  if (world.time - vehicle.last_lane_change < scenario.run.lane_change_cooldown)
    return std::nullopt;

  auto accept = [&](int target, double urgency) {
    const Neighbors n = neighbors_at(world, target, vehicle.x, vehicle.id);
    VehicleState moved = vehicle;
    moved.lane = target;
    return gap_acceptable(moved, n.leader, n.follower, urgency);
  };

  if (const auto intent = mandatory_intent(vehicle, g)) {
    if (accept(intent->target_lane, intent->urgency)) return intent->target_lane;
    return std::nullopt;
  }

  // discretionary changes stay on the mainline
  if (vehicle.lane >= g.lane_count) return std::nullopt;
  if (vehicle.route == Route::kExitAtRamp && g.ramp_kind == RampKind::kOffRamp &&
      g.merge_zone_end() - vehicle.x <= kExitLookahead)
    return std::nullopt;

  const double here = anticipated_speed(vehicle, world, vehicle.lane);
  int best = -1;
  double best_gain = scenario.run.lane_change_threshold;
  for (int target : {vehicle.lane + 1, vehicle.lane - 1}) {
    if (target < 0 || target >= g.lane_count) continue;
    const double gain = anticipated_speed(vehicle, world, target) - here;
    if (gain > best_gain && accept(target, 0.0)) {
      best = target;
      best_gain = gain;
    }
  }
  if (best < 0) return std::nullopt;
  return best;
}

}  // namespace saint
