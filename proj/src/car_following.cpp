#include "saint/car_following.hpp"

#include <algorithm>
#include <cmath>

#include "saint/metrics.hpp"

namespace saint {

double krauss_safe_speed(double gap, double follower_speed, double leader_speed, double tau,
                         double decel) {
  const double denom = (leader_speed + follower_speed) / (2.0 * decel) + tau;
  return std::max(0.0, leader_speed + (gap - leader_speed * tau) / denom);
}

double krauss_safe_speed(const VehicleState& follower, const VehicleState& leader) {
  return krauss_safe_speed(bumper_gap(follower, leader), follower.v, leader.v, follower.tau,
                           follower.max_decel);
}

double krauss_desired_speed(const VehicleState& follower, const VehicleState* leader, double dt) {
  double v = std::min(follower.v + follower.max_accel * dt, follower.v_max);
  if (leader) v = std::min(v, krauss_safe_speed(follower, *leader));
  return std::max({v, follower.v - follower.max_decel * dt, 0.0});
}

double krauss_next_speed(const VehicleState& follower, const VehicleState* leader, double dt,
                         double dawdle_draw) {
  const double desired = krauss_desired_speed(follower, leader, dt);
  const double dawdled = desired - follower.sigma * follower.max_accel * dt * dawdle_draw;
  return std::max({dawdled, follower.v - follower.max_decel * dt, 0.0});
}

double acc_target_gap_control(const VehicleState& follower, const VehicleState* leader,
                              double commanded_gap, double dt, const AccGains& gains) {
  double a = gains.cruise * (follower.v_max - follower.v);
  if (leader) {
    const double gap = bumper_gap(follower, *leader);
    const double gap_term = std::max(gains.gap * (gap - commanded_gap), -gains.reopen_decel);
    a = std::min(a, gap_term + gains.speed * (leader->v - follower.v));
  }
  a = std::clamp(a, -follower.max_decel, follower.max_accel);
  if (leader) {
    const double v_safe = krauss_safe_speed(follower, *leader);
    if (follower.v + a * dt > v_safe) a = (v_safe - follower.v) / dt;
  }
  a = std::max(a, -follower.max_decel);
  // never command a reverse speed
  if (follower.v + a * dt < 0.0) a = -follower.v / dt;
  return a;
}

double ttc_danger_accel(double ttc, double ttc_star, double max_decel) {
  if (!(ttc < ttc_star) || ttc_star <= 0.0) return kInfinity;
  return -max_decel * (1.0 - ttc / ttc_star);
}

double acc_acceleration(const VehicleState& follower, const VehicleState* leader,
                        double commanded_gap, double ttc_star, double dt, const AccGains& gains,
                        const VehicleState* conflict) {
  double a = acc_target_gap_control(follower, leader, commanded_gap, dt, gains);
  for (const VehicleState* other : {leader, conflict}) {
    if (!other) continue;
    a = std::min(a, ttc_danger_accel(compute_ttc(follower, *other), ttc_star, follower.max_decel));
  }
  a = std::max(a, -follower.max_decel);
  if (follower.v + a * dt < 0.0) a = -follower.v / dt;
  return a;
}

}  // namespace saint
