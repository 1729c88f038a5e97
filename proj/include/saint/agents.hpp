#pragma once

#include <array>
#include <optional>
#include <span>

#include "saint/metrics.hpp"
#include "saint/scenario.hpp"
#include "saint/world.hpp"

namespace saint {

inline constexpr int kStateDim = 13;
inline constexpr int kTtcActions = 21;
inline constexpr int kAccActions = 25;
inline constexpr double kMeanTtcCap = 20.0;  // s, cap of the mean-TTC feature
inline constexpr double kTtcLogFloor = 0.01;  // s, keeps log(TTC/TTC*) finite
inline constexpr double kMaxJerk = 5.2;       // m/s^3, (2.6 + 2.6) / 1 s

using AgentState = std::array<double, kStateDim>;

// Feature order:
//  0 mean max acceleration     1 mean max deceleration   2 mean time headway (tau)
//  3 mean driver imperfection  4 mean minimum gap setting 5 mean vehicle length
//  6 mainline density veh/km/lane    7 mainline mean speed
//  8 non-mainline density veh/km     9 non-mainline mean speed
// 10 ramp length  11 current TTC*  12 mean finite TTC, capped
// Vehicle means cover every vehicle in the segment and are 0 when it is
// empty. The gap setting is the commanded gap for active ACC vehicles and 0
// for human drivers.
AgentState encode_state(const WorldState& world, const RoadGeometry& geometry, double ttc_star);

double ttc_star_from_action(int index);  // 0.5 * index
int action_from_ttc_star(double ttc_star);
double gap_from_action(int index);  // index + 1 meters
int action_from_gap(double gap);

struct RewardWeights {
  double alpha_fp = 1.0;
  double alpha_fn = 2.0;
  double alpha_ac = 10.0;
  double beta_efficiency = 1.0;
  double beta_safety = 1.0;
  double beta_comfort = 1.0;
};

RewardWeights weights_from(const AgentConfig& config);

// -(a1 FP + a2 FN + a3 AC)
double reward_ttc(const SafetyTally& tally, const RewardWeights& w = {});

// sum over 0 <= TTC_i <= TTC* of log(max(TTC_i, 0.01) / TTC*); 0 when TTC* <= 0.
double reward_acc_safety(std::span<const double> ttcs, double ttc_star);

// +1 when the mean delay is at most length / congestion_speed, -1 when above,
// 0 when nothing completed.
double reward_acc_efficiency(std::optional<double> mean_delay, double segment_length,
                             double congestion_speed);

// -(jerk / max_jerk)^2
double reward_acc_comfort(double jerk, double max_jerk = kMaxJerk);

double reward_acc_total(double r_efficiency, double r_safety, double r_comfort,
                        const RewardWeights& w = {});

// TTC of every follower in the segment against its same-lane leader
// (+infinity when not closing).
std::vector<double> segment_ttcs(const WorldState& world);

// Gap used by the scripted fixed-threshold ACC: the smallest grid gap whose
// TTC stays at or above TTC* after the leader brakes at max_decel for one
// control interval, i.e. ceil(TTC* * max_decel * interval) clamped to the grid.
double scripted_gap(double ttc_star, double max_decel, double control_interval);

}  // namespace saint
