#include "saint/agents.hpp"

#include <algorithm>
#include <cmath>

namespace saint {

AgentState encode_state(const WorldState& world, const RoadGeometry& g, double ttc_star) {
  AgentState s{};
  double n_all = 0.0, main_n = 0.0, main_v = 0.0, ramp_n = 0.0, ramp_v = 0.0;
  double ttc_sum = 0.0, ttc_n = 0.0;
  for (std::size_t lane = 0; lane < world.lanes.size(); ++lane) {
    const auto& vs = world.lanes[lane];
    const bool mainline = static_cast<int>(lane) < g.lane_count;
    for (std::size_t i = 0; i < vs.size(); ++i) {
      const VehicleState& v = vs[i];
      s[0] += v.max_accel;
      s[1] += v.max_decel;
      s[2] += v.tau;
      s[3] += v.sigma;
      s[4] += v.acc_active ? v.commanded_gap : 0.0;
      s[5] += v.length;
      n_all += 1.0;
      if (mainline) {
        main_n += 1.0;
        main_v += v.v;
      } else {
        ramp_n += 1.0;
        ramp_v += v.v;
      }
      if (i > 0) {
        const double ttc = compute_ttc(v, vs[i - 1]);
        if (std::isfinite(ttc) && ttc >= 0.0) {
          ttc_sum += std::min(ttc, kMeanTtcCap);
          ttc_n += 1.0;
        }
      }
    }
  }
  if (n_all > 0)
    for (int k = 0; k < 6; ++k) s[k] /= n_all;
  s[6] = main_n / (g.mainline_length / 1000.0 * g.lane_count);
  s[7] = main_n > 0 ? main_v / main_n : 0.0;
  if (g.has_ramp()) {
    s[8] = ramp_n / (g.ramp_length / 1000.0);
    s[9] = ramp_n > 0 ? ramp_v / ramp_n : 0.0;
    s[10] = g.ramp_length;
  }
  s[11] = ttc_star;
  s[12] = ttc_n > 0 ? ttc_sum / ttc_n : kMeanTtcCap;
  return s;
}

double ttc_star_from_action(int index) { return 0.5 * std::clamp(index, 0, kTtcActions - 1); }

int action_from_ttc_star(double ttc_star) {
  return std::clamp(static_cast<int>(std::lround(ttc_star / 0.5)), 0, kTtcActions - 1);
}

double gap_from_action(int index) { return 1.0 + std::clamp(index, 0, kAccActions - 1); }

int action_from_gap(double gap) {
  return std::clamp(static_cast<int>(std::lround(gap)) - 1, 0, kAccActions - 1);
}

RewardWeights weights_from(const AgentConfig& c) {
  return {c.alpha_fp, c.alpha_fn, c.alpha_ac, c.beta_efficiency, c.beta_safety, c.beta_comfort};
}

double reward_ttc(const SafetyTally& t, const RewardWeights& w) {
  return -(w.alpha_fp * static_cast<double>(t.fp) + w.alpha_fn * static_cast<double>(t.fn) +
           w.alpha_ac * static_cast<double>(t.ac));
}

double reward_acc_safety(std::span<const double> ttcs, double ttc_star) {
  if (!(ttc_star > 0.0)) return 0.0;
  double r = 0.0;
  for (double ttc : ttcs)
    if (ttc >= 0.0 && ttc <= ttc_star) r += std::log(std::max(ttc, kTtcLogFloor) / ttc_star);
  return r;
}

double reward_acc_efficiency(std::optional<double> mean_delay, double segment_length,
                             double congestion_speed) {
  if (!mean_delay) return 0.0;
  return *mean_delay <= segment_length / congestion_speed ? 1.0 : -1.0;
}

double reward_acc_comfort(double jerk, double max_jerk) {
  const double r = jerk / max_jerk;
  return -r * r;
}

double reward_acc_total(double r_efficiency, double r_safety, double r_comfort,
                        const RewardWeights& w) {
  return w.beta_efficiency * r_efficiency + w.beta_safety * r_safety + w.beta_comfort * r_comfort;
}

std::vector<double> segment_ttcs(const WorldState& world) {
  std::vector<double> out;
  for (const auto& vs : world.lanes)
    for (std::size_t i = 1; i < vs.size(); ++i) out.push_back(compute_ttc(vs[i], vs[i - 1]));
  return out;
}

double scripted_gap(double ttc_star, double max_decel, double control_interval) {
  const double g = std::ceil(ttc_star * max_decel * control_interval - 1e-9);
  return std::clamp(g, gap_from_action(0), gap_from_action(kAccActions - 1));
}

}  // namespace saint
