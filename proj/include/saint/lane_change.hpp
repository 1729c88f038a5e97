#pragma once

#include <optional>

#include "saint/world.hpp"

namespace saint {

// Exit vehicles start working toward the ramp this far before the end of the
// diverge zone.
inline constexpr double kExitLookahead = 600.0;

// Seconds of bounded braking a lag vehicle is expected to absorb for a
// mandatory change at full urgency.
inline constexpr double kLagBrakingHorizon = 3.0;

// Fraction of the acceleration lane a merger must have used before lane-0
// traffic yields to it.
inline constexpr double kYieldUrgency = 0.5;

// Speed the vehicle would need to shed, within one second, to be safe behind
// `leader`. Zero when already safe.
double safe_speed_deficit(const VehicleState& follower, const VehicleState& leader);

// Gap acceptance: both the new lead gap and lag gap must be positive, and the
// speed deficit must not exceed urgency * max_decel * 1 s for the changing
// vehicle and urgency * max_decel * kLagBrakingHorizon for the lag vehicle.
// urgency 0 means a strictly safe change.
bool gap_acceptable(const VehicleState& vehicle, const VehicleState* new_leader,
                    const VehicleState* new_follower, double urgency);

struct LaneChangeIntent {
  int target_lane = -1;
  double urgency = 0.0;
  bool mandatory = false;
};

// Route-driven lane change the vehicle must make, if any.
std::optional<LaneChangeIntent> mandatory_intent(const VehicleState& vehicle,
                                                 const RoadGeometry& geometry);

// Anticipated speed in `lane` for a vehicle at the given position and speed.
double anticipated_speed(const VehicleState& vehicle, const WorldState& world, int lane);

std::optional<int> lane_change_decision(const VehicleState& vehicle, const WorldState& world,
                                        const Scenario& scenario);

}  // namespace saint
