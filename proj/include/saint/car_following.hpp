#pragma once

#include "saint/sim_types.hpp"

namespace saint {

// Krauss safe speed: the highest speed from which the follower can still
// avoid contact if the leader brakes at the follower's deceleration, given a
// reaction time tau. Clamped at 0.
double krauss_safe_speed(double gap, double follower_speed, double leader_speed, double tau,
                         double decel);
double krauss_safe_speed(const VehicleState& follower, const VehicleState& leader);

// Deterministic part of the Krauss update: min(v + a*dt, v_safe, v_max),
// floored by the deceleration bound and 0. Pass leader == nullptr for free flow.
double krauss_desired_speed(const VehicleState& follower, const VehicleState* leader, double dt);

// Full Krauss update including driver imperfection; `dawdle_draw` is U(0,1).
double krauss_next_speed(const VehicleState& follower, const VehicleState* leader, double dt,
                         double dawdle_draw);

struct AccGains {
  double gap = 0.3;     // 1/s^2 on gap error
  double speed = 0.9;   // 1/s on speed difference
  double cruise = 0.5;  // 1/s toward the speed limit
  double reopen_decel = 1.0;  // m/s^2, most braking the gap error alone may request
};

// Proportional-derivative gap regulation toward `commanded_gap`, clamped to
// the acceleration bounds and capped by the Krauss safe speed of the
// follower's own tau.
double acc_target_gap_control(const VehicleState& follower, const VehicleState* leader,
                              double commanded_gap, double dt, const AccGains& gains = {});

// Braking request when the follower's TTC falls below the threshold; returns
// +infinity when no response is needed.
double ttc_danger_accel(double ttc, double ttc_star, double max_decel);

// Acceleration actually applied by an equipped vehicle: gap regulation,
// tightened by the TTC danger response and kept inside the safe envelope.
// `conflict` is an optional prospective leader (a merging vehicle) that is
// checked against the TTC threshold but not regulated to.
double acc_acceleration(const VehicleState& follower, const VehicleState* leader,
                        double commanded_gap, double ttc_star, double dt,
                        const AccGains& gains = {}, const VehicleState* conflict = nullptr);

}  // namespace saint
