#include "saint/world.hpp"

#include <algorithm>
#include <cmath>

#include "saint/lane_change.hpp"

namespace saint {

std::size_t WorldState::vehicle_count() const {
  std::size_t n = 0;
  for (const auto& lane : lanes) n += lane.size();
  return n;
}

const VehicleState* WorldState::find(int id) const {
  for (const auto& lane : lanes)
    for (const auto& v : lane)
      if (v.id == id) return &v;
  return nullptr;
}

WorldState make_world(const Scenario& scenario, std::vector<SpawnEntry> schedule) {
  WorldState w;
  const int n = scenario.geometry.total_lanes();
  w.lanes.resize(n);
  w.pending.resize(n);
  w.schedule = std::move(schedule);
  w.ttc_star = scenario.agents.initial_ttc_star;
  w.default_gap = scenario.agents.scripted_gap;
  return w;
}

WorldState make_world(const Scenario& scenario, std::uint64_t seed) {
  Rng rng(derive_seed(seed, stream::kSpawn));
  return make_world(scenario, spawn_schedule(scenario.geometry, scenario.demand, scenario.run,
                                             scenario.run.episode_duration, rng));
}

const VehicleState* leader_of(const WorldState& world, const Scenario& scenario, int lane,
                              std::size_t index, VehicleState& obstacle) {
  if (index > 0) return &world.lanes[lane][index - 1];
  const RoadGeometry& g = scenario.geometry;
  if (g.ramp_kind == RampKind::kOnRamp && lane == g.ramp_lane()) {
    obstacle = VehicleState{};
    obstacle.id = -1;
    obstacle.x = g.ramp_end();
    obstacle.v = 0.0;
    obstacle.length = 0.0;
    obstacle.lane = lane;
    return &obstacle;
  }
  return nullptr;
}

Neighbors neighbors_at(const WorldState& world, int lane, double x, int exclude_id) {
  const auto& vs = world.lanes[lane];
  const auto split =
      std::partition_point(vs.begin(), vs.end(), [x](const VehicleState& v) { return v.x >= x; });
  Neighbors n;
  for (auto it = split; it != vs.begin();) {
    --it;
    if (it->id != exclude_id) {
      n.leader = &*it;
      break;
    }
  }
  for (auto it = split; it != vs.end(); ++it) {
    if (it->id != exclude_id) {
      n.follower = &*it;
      break;
    }
  }
  return n;
}

std::vector<std::pair<int, int>> detect_near_collisions(const WorldState& world, double min_gap) {
  std::vector<std::pair<int, int>> out;
  for (const auto& lane : world.lanes) {
    for (std::size_t i = 1; i < lane.size(); ++i) {
      const VehicleState& leader = lane[i - 1];
      const VehicleState& follower = lane[i];
      if (bumper_gap(follower, leader) < min_gap && follower.v > leader.v)
        out.emplace_back(follower.id, leader.id);
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

void broadcast_gap(WorldState& world, double gap) {
  world.default_gap = gap;
  for (auto& lane : world.lanes)
    for (auto& v : lane)
      if (v.acc_active) v.commanded_gap = gap;
}

namespace {

double lane_speed_limit(const RoadGeometry& g, int lane) {
  return g.has_ramp() && lane == g.ramp_lane() ? g.ramp_speed_limit : g.speed_limit;
}

void insert_sorted(std::vector<VehicleState>& lane, const VehicleState& v) {
  const auto pos = std::partition_point(lane.begin(), lane.end(),
                                        [&](const VehicleState& o) { return o.x >= v.x; });
  lane.insert(pos, v);
}

void spawn_vehicles(WorldState& w, const Scenario& s) {
  const RoadGeometry& g = s.geometry;
  const RunConfig& run = s.run;
  while (w.schedule_cursor < w.schedule.size() &&
         w.schedule[w.schedule_cursor].arrival_time <= w.time) {
    const SpawnEntry& e = w.schedule[w.schedule_cursor++];
    w.pending[e.lane].push_back(e);
  }
  for (std::size_t lane = 0; lane < w.pending.size(); ++lane) {
    auto& queue = w.pending[lane];
    if (queue.empty()) continue;
    const SpawnEntry& e = queue.front();
    const bool ramp = g.has_ramp() && static_cast<int>(lane) == g.ramp_lane();

    VehicleState v;
    v.lane = static_cast<int>(lane);
    v.x = ramp ? g.ramp_start() : 0.0;
    v.length = e.body_length;
    v.max_accel = run.max_accel;
    v.max_decel = run.max_decel;
    v.sigma = e.sigma;
    v.is_acc_equipped = e.is_acc_equipped;
    v.acc_active = e.is_acc_equipped && w.acc_enabled;
    v.tau = v.acc_active ? run.acc_tau : run.human_tau;
    v.commanded_gap = w.default_gap;
    v.route = e.route;
    v.spawn_time = w.time;
    v.spawn_lane = v.lane;
    v.speed_factor = e.speed_factor;
    v.v_max = lane_speed_limit(g, v.lane) * v.speed_factor;
    double speed = std::min(ramp ? run.ramp_spawn_speed : run.spawn_speed, v.v_max);

    auto& vs = w.lanes[lane];
    if (!vs.empty()) {
      const VehicleState& last = vs.back();
      if (last.rear() - v.x < run.min_spawn_gap) continue;
      speed = std::min(speed, krauss_safe_speed(v.x < last.x ? bumper_gap(v, last) : 0.0, speed,
                                                last.v, v.tau, v.max_decel));
    }
    v.v = speed;
    v.id = w.next_id++;
    vs.push_back(v);
    ++w.spawned;
    w.events.push_back({w.time, EventKind::kSpawn, v.id, -1, v.lane, DespawnReason::kNone});
    queue.pop_front();
  }
}

void change_lanes(WorldState& w, const Scenario& s) {
  const RoadGeometry& g = s.geometry;
  for (std::size_t lane = 0; lane < w.lanes.size(); ++lane) {
    std::size_t i = 0;
    while (i < w.lanes[lane].size()) {
      const VehicleState& current = w.lanes[lane][i];
      if (current.last_lane_change == w.time) {
        ++i;
        continue;
      }
      const auto target = lane_change_decision(current, w, s);
      if (!target) {
        ++i;
        continue;
      }
      VehicleState moved = current;
      moved.lane = *target;
      moved.last_lane_change = w.time;
      moved.v_max = lane_speed_limit(g, moved.lane) * moved.speed_factor;
      if (moved.route == Route::kMergeFromRamp && moved.lane < g.lane_count)
        moved.route = Route::kThrough;
      w.lanes[lane].erase(w.lanes[lane].begin() + static_cast<std::ptrdiff_t>(i));
      insert_sorted(w.lanes[*target], moved);
      w.events.push_back(
          {w.time, EventKind::kLaneChange, moved.id, -1, moved.lane, DespawnReason::kNone});
    }
  }
}

// A vehicle with a pending mandatory change also adapts to the leader in its
// target lane, and a lane-0 vehicle yields to an urgent merger ahead of it
// when it can do so within one second of bounded braking. Whichever leader
// imposes the lower safe speed is followed.
const VehicleState* tighter_leader(const WorldState& w, const Scenario& s, const VehicleState& v,
                                   const VehicleState* leader, VehicleState& shadow) {
  const RoadGeometry& g = s.geometry;
  const VehicleState* candidate = nullptr;
  if (const auto intent = mandatory_intent(v, g)) {
    candidate = neighbors_at(w, intent->target_lane, v.x, v.id).leader;
  } else if (g.ramp_kind == RampKind::kOnRamp && v.lane == 0) {
    const VehicleState* merger = neighbors_at(w, g.ramp_lane(), v.x, v.id).leader;
    if (merger && merger->x >= g.merge_zone_start() &&
        merger->x - g.merge_zone_start() >= kYieldUrgency * g.accel_lane_length &&
        bumper_gap(v, *merger) > 0.0 && safe_speed_deficit(v, *merger) <= v.max_decel)
      candidate = merger;
  }
  if (!candidate) return leader;
  if (leader && krauss_safe_speed(v, *leader) <= krauss_safe_speed(v, *candidate)) return leader;
  shadow = *candidate;
  return &shadow;
}

void update_longitudinal(WorldState& w, const Scenario& s, Rng& rng) {
  const double dt = s.run.physics_timestep;
  const RoadGeometry& g = s.geometry;
  static thread_local std::vector<double> next_speed;
  VehicleState obstacle;
  VehicleState shadow;
  for (std::size_t lane = 0; lane < w.lanes.size(); ++lane) {
    auto& vs = w.lanes[lane];
    next_speed.resize(vs.size());
    const bool on_ramp_lane =
        g.ramp_kind == RampKind::kOnRamp && static_cast<int>(lane) == g.ramp_lane();
    for (std::size_t i = 0; i < vs.size(); ++i) {
      const VehicleState& v = vs[i];
      const VehicleState* leader =
          i > 0 ? &vs[i - 1] : (on_ramp_lane ? nullptr : leader_of(w, s, static_cast<int>(lane), i, obstacle));
      leader = tighter_leader(w, s, v, leader, shadow);
      double speed;
      if (v.acc_active) {
        const VehicleState* conflict = nullptr;
        if (g.ramp_kind == RampKind::kOnRamp && lane == 0) {
          const VehicleState* m = neighbors_at(w, g.ramp_lane(), v.x, v.id).leader;
          if (m && m->x >= g.merge_zone_start() && bumper_gap(v, *m) > 0.0) conflict = m;
        }
        const double a = acc_acceleration(v, leader, v.commanded_gap,
                                          w.danger_response ? w.ttc_star : 0.0, dt, w.gains,
                                          conflict);
        speed = std::max(0.0, v.v + a * dt);
      } else {
        speed = krauss_next_speed(v, leader, dt, rng.uniform());
      }
      if (on_ramp_lane && i == 0) {
        // brake for the end of the acceleration lane as if a stopped car stood there
        const double stop =
            krauss_safe_speed(std::max(0.0, g.ramp_end() - v.x), v.v, 0.0, dt, v.max_decel);
        speed = std::max(std::min(speed, stop), std::max(0.0, v.v - v.max_decel * dt));
      }
      next_speed[i] = speed;
    }
    for (std::size_t i = 0; i < vs.size(); ++i) {
      VehicleState& v = vs[i];
      v.a = (next_speed[i] - v.v) / dt;
      v.v = next_speed[i];
      v.x += v.v * dt;
      if (on_ramp_lane && v.x > g.ramp_end()) {
        v.x = g.ramp_end();
        v.a = -v.v / dt;
        v.v = 0.0;
      }
    }
  }
}

void remove_ids(std::vector<VehicleState>& lane, const std::vector<int>& ids) {
  std::erase_if(lane, [&](const VehicleState& v) {
    return std::find(ids.begin(), ids.end(), v.id) != ids.end();
  });
}

void resolve_collisions(WorldState& w) {
  std::vector<int> crashed;
  for (auto& vs : w.lanes) {
    crashed.clear();
    for (std::size_t i = 1; i < vs.size(); ++i) {
      if (bumper_gap(vs[i], vs[i - 1]) < 0.0) {
        w.events.push_back({w.time, EventKind::kActualCollision, vs[i].id, vs[i - 1].id,
                            vs[i].lane, DespawnReason::kNone});
        crashed.push_back(vs[i].id);
        crashed.push_back(vs[i - 1].id);
      }
    }
    if (crashed.empty()) continue;
    std::sort(crashed.begin(), crashed.end());
    crashed.erase(std::unique(crashed.begin(), crashed.end()), crashed.end());
    for (int id : crashed) {
      w.events.push_back({w.time, EventKind::kDespawn, id, -1, vs.front().lane,
                          DespawnReason::kCollision});
      ++w.despawned;
    }
    remove_ids(vs, crashed);
  }
  for (auto& vs : w.lanes)
    std::stable_sort(vs.begin(), vs.end(),
                     [](const VehicleState& a, const VehicleState& b) { return a.x > b.x; });
}

void despawn_finished(WorldState& w, const Scenario& s) {
  const RoadGeometry& g = s.geometry;
  for (std::size_t lane = 0; lane < w.lanes.size(); ++lane) {
    auto& vs = w.lanes[lane];
    const bool ramp = g.has_ramp() && static_cast<int>(lane) == g.ramp_lane();
    if (ramp && g.ramp_kind == RampKind::kOnRamp) continue;
    const double end = ramp ? g.ramp_end() : g.mainline_length;
    // missed exits continue as through traffic
    if (!ramp && g.ramp_kind == RampKind::kOffRamp) {
      for (auto& v : vs)
        if (v.route == Route::kExitAtRamp && v.x > g.merge_zone_end()) v.route = Route::kThrough;
    }
    while (!vs.empty() && vs.front().x >= end) {
      const VehicleState& v = vs.front();
      const DespawnReason reason = ramp ? DespawnReason::kRampExit : DespawnReason::kSegmentEnd;
      w.events.push_back({w.time, EventKind::kDespawn, v.id, -1, v.lane, reason});
      if (!ramp)
        w.trips.push_back({v.id, v.spawn_time, w.time, v.spawn_lane < g.lane_count});
      ++w.despawned;
      vs.erase(vs.begin());
    }
  }
}

void record_near_collisions(WorldState& w, const Scenario& s) {
  const double min_gap = s.run.min_gap_for_near_collision;
  // A pair registers at most once per continuous period with gap < min_gap.
  std::vector<std::pair<int, int>> close;
  std::vector<std::pair<int, int>> registered;
  for (const auto& lane : w.lanes) {
    for (std::size_t i = 1; i < lane.size(); ++i) {
      const VehicleState& leader = lane[i - 1];
      const VehicleState& follower = lane[i];
      if (bumper_gap(follower, leader) >= min_gap) continue;
      const std::pair<int, int> p{follower.id, leader.id};
      close.push_back(p);
    }
  }
  std::sort(close.begin(), close.end());
  const auto active = detect_near_collisions(w, min_gap);
  for (const auto& p : close) {
    const bool was = std::binary_search(w.near_pairs.begin(), w.near_pairs.end(), p);
    const bool now = std::binary_search(active.begin(), active.end(), p);
    if (was) {
      registered.push_back(p);
    } else if (now) {
      const VehicleState* f = w.find(p.first);
      w.events.push_back({w.time, EventKind::kNearCollision, p.first, p.second, f ? f->lane : -1,
                          DespawnReason::kNone});
      registered.push_back(p);
    }
  }
  w.near_pairs = std::move(registered);
}

void record_trajectory(WorldState& w) {
  if (!w.trajectory) return;
  for (const auto& vs : w.lanes) {
    for (std::size_t i = 0; i < vs.size(); ++i) {
      const VehicleState& v = vs[i];
      const double gap = i > 0 ? bumper_gap(v, vs[i - 1]) : -1.0;
      w.trajectory->push_back({w.step_index, w.time, v.id, v.lane, v.x, v.v, v.a, gap,
                               v.is_acc_equipped});
    }
  }
}

}  // namespace

void step(WorldState& world, const Scenario& scenario, Rng& dawdle_rng) {
  spawn_vehicles(world, scenario);
  change_lanes(world, scenario);
  update_longitudinal(world, scenario, dawdle_rng);

  ++world.step_index;
  world.time = static_cast<double>(world.step_index) * scenario.run.physics_timestep;

  resolve_collisions(world);
  despawn_finished(world, scenario);
  record_near_collisions(world, scenario);
  record_trajectory(world);
}

}  // namespace saint
