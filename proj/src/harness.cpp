#include "saint/harness.hpp"

#include <omp.h>

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>

#include "saint/checkpoint.hpp"
#include "saint/rng.hpp"
#include "saint/stats.hpp"

namespace saint {

namespace fs = std::filesystem;

std::uint64_t training_seed(std::uint64_t base, std::int64_t episode) {
  return derive_seed(base, 1'000'000 + static_cast<std::uint64_t>(episode));
}

std::uint64_t evaluation_seed(std::uint64_t base, int index) {
  return derive_seed(base, 2'000'000 + static_cast<std::uint64_t>(index));
}

int worker_count() {
  if (const char* env = std::getenv("SAINT_WORKERS")) {
    const int n = std::atoi(env);
    if (n > 0) return n;
  }
  return omp_get_max_threads();
}

// ---- training -------------------------------------------------------------

std::string reward_csv_header() {
  return "episode,seed,ttc_reward,acc_reward,ttc_epsilon,acc_epsilon,mean_ttc_star,mean_gap,"
         "near_collisions,mean_speed";
}

std::string reward_csv_row(const RewardRow& r) {
  std::ostringstream os;
  os.precision(10);
  os << r.episode << ',' << r.seed << ',' << r.ttc_reward << ',' << r.acc_reward << ','
     << r.ttc_epsilon << ',' << r.acc_epsilon << ',' << r.mean_ttc_star << ',' << r.mean_gap << ','
     << r.near_collisions << ',' << r.mean_speed;
  return os.str();
}

std::vector<RewardRow> train_agents(const Scenario& s, Agents& agents, const TrainOptions& opt,
                                    std::int64_t first_episode,
                                    const std::function<void(const RewardRow&)>& on_episode) {
  if (opt.system != System::kSaint && opt.system != System::kFixedTtc)
    throw HarnessError("usage", "only saint and fixed-ttc systems can be trained");
  std::vector<RewardRow> rows;
  for (int i = 0; i < opt.episodes; ++i) {
    const std::int64_t e = first_episode + i;
    EpisodeOptions eo;
    eo.system = opt.system;
    eo.mode = Mode::kTrain;
    eo.seed = training_seed(opt.seed, e);
    eo.fixed_ttc_star = s.agents.fixed_ttc_star;
    if (s.agents.schedule == TrainingSchedule::kAlternating && opt.system == System::kSaint) {
      const bool ttc_block = (e / std::max(1, s.agents.alternating_block)) % 2 == 0;
      eo.train_ttc = ttc_block;
      eo.train_acc = !ttc_block;
    }
    EpisodeResult r;
    try {
      r = run_episode(s, &agents, eo);
    } catch (const DegenerateEpisode& d) {
      throw HarnessError("simulation", "training episode " + std::to_string(e) + " (seed " +
                                           std::to_string(eo.seed) + "): " + d.what());
    }
    RewardRow row;
    row.episode = e;
    row.seed = eo.seed;
    row.ttc_reward = r.ttc_reward;
    row.acc_reward = r.acc_reward;
    row.ttc_epsilon = agents.ttc.schedule().value();
    row.acc_epsilon = agents.acc.schedule().value();
    row.mean_ttc_star = r.mean_ttc_star;
    row.mean_gap = r.mean_gap;
    row.near_collisions = r.metrics.near_collisions;
    row.mean_speed = r.metrics.mean_speed;
    rows.push_back(row);
    if (on_episode) on_episode(row);
  }
  return rows;
}

namespace {

std::string hex(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::string make_meta(const Scenario& s, const TrainOptions& opt, std::int64_t episodes) {
  std::ostringstream os;
  os << "episodes=" << episodes << ";system=" << to_string(opt.system) << ";seed=" << opt.seed
     << ";config_hash=" << hex(config_hash(s));
  return os.str();
}

std::map<std::string, std::string> parse_meta(const std::string& meta) {
  std::map<std::string, std::string> out;
  std::istringstream is(meta);
  std::string item;
  while (std::getline(is, item, ';')) {
    const auto eq = item.find('=');
    if (eq != std::string::npos) out[item.substr(0, eq)] = item.substr(eq + 1);
  }
  return out;
}

}  // namespace

void save_agents(const fs::path& dir, const Agents& agents, const std::string& meta) {
  try {
    std::error_code ec;
    fs::create_directories(dir, ec);
    save_checkpoint(dir / kTtcCheckpoint, agents.ttc, meta);
    save_checkpoint(dir / kAccCheckpoint, agents.acc, meta);
  } catch (const CheckpointError& e) {
    throw HarnessError("io", e.what());
  }
}

Agents load_agents(const fs::path& dir, std::string* meta) {
  for (const char* name : {kTtcCheckpoint, kAccCheckpoint})
    if (!fs::exists(dir / name))
      throw HarnessError("checkpoint", "missing checkpoint " + (dir / name).string());
  try {
    Agents a{load_checkpoint(dir / kTtcCheckpoint), load_checkpoint(dir / kAccCheckpoint, meta)};
    return a;
  } catch (const CheckpointError& e) {
    throw HarnessError(e.kind() == CheckpointError::Kind::kIo ? "io" : "checkpoint", e.what());
  }
}

TrainOutcome cmd_train(const Scenario& s, const TrainOptions& opt, const fs::path& out_dir) {
  if (opt.system != System::kSaint && opt.system != System::kFixedTtc)
    throw HarnessError("usage", "only saint and fixed-ttc systems can be trained");
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec || !fs::is_directory(out_dir))
    throw HarnessError("io", "cannot create output directory " + out_dir.string());

  TrainOutcome out;
  Agents agents;
  const bool resume = fs::exists(out_dir / kAccCheckpoint) && fs::exists(out_dir / kTtcCheckpoint);
  if (resume) {
    std::string meta;
    agents = load_agents(out_dir, &meta);
    const auto kv = parse_meta(meta);
    const auto it = kv.find("episodes");
    if (it == kv.end()) throw HarnessError("checkpoint", "checkpoint metadata lacks an episode count");
    out.first_episode = std::stoll(it->second);
    const auto sys = kv.find("system");
    if (sys != kv.end() && sys->second != to_string(opt.system))
      throw HarnessError("checkpoint", "checkpoint was trained as " + sys->second + ", not " +
                                           to_string(opt.system));
  } else {
    agents = make_agents(s.agents, opt.seed);
  }

  const fs::path csv = out_dir / kRewardCsv;
  const bool fresh_csv = !resume || !fs::exists(csv);
  std::ofstream f(csv, fresh_csv ? std::ios::trunc : std::ios::app);
  if (!f) throw HarnessError("io", "cannot write " + csv.string());
  if (fresh_csv) {
    f << csv_comment(s, "training_seed(" + std::to_string(opt.seed) + ", episode)",
                     "system=" + to_string(opt.system))
      << '\n'
      << reward_csv_header() << '\n';
  }

  std::int64_t done = out.first_episode;
  TrainOptions chunk = opt;
  const int every = opt.checkpoint_every > 0 ? opt.checkpoint_every : opt.episodes;
  int remaining = opt.episodes;
  while (remaining > 0) {
    chunk.episodes = std::min(every, remaining);
    auto rows = train_agents(s, agents, chunk, done, [&](const RewardRow& r) {
      f << reward_csv_row(r) << '\n';
    });
    f.flush();
    done += chunk.episodes;
    remaining -= chunk.episodes;
    save_agents(out_dir, agents, make_meta(s, opt, done));
    out.rows.insert(out.rows.end(), rows.begin(), rows.end());
  }
  if (opt.episodes == 0 && !resume) save_agents(out_dir, agents, make_meta(s, opt, done));
  out.episodes_done = done;
  return out;
}

// ---- evaluation sweeps ----------------------------------------------------

std::string to_string(SweepVariable v) {
  switch (v) {
    case SweepVariable::kTtcStarFixed:
      return "ttc_star_fixed";
    case SweepVariable::kPenetration:
      return "penetration";
    case SweepVariable::kMergeFlow:
      return "merge_flow";
    case SweepVariable::kExitFlow:
      return "exit_flow";
    case SweepVariable::kUpdateInterval:
      return "update_interval";
  }
  return "?";
}

SweepVariable sweep_variable_from_string(const std::string& name) {
  for (auto v : {SweepVariable::kTtcStarFixed, SweepVariable::kPenetration,
                 SweepVariable::kMergeFlow, SweepVariable::kExitFlow,
                 SweepVariable::kUpdateInterval})
    if (to_string(v) == name) return v;
  throw HarnessError("usage", "unknown sweep variable '" + name + "'");
}

void apply_sweep_value(Scenario& s, EpisodeOptions& o, SweepVariable v, double value) {
  switch (v) {
    case SweepVariable::kTtcStarFixed:
      o.fixed_ttc_star = value;
      break;
    case SweepVariable::kPenetration:
      s.demand.penetration_rate = value;
      break;
    case SweepVariable::kMergeFlow:
      if (s.geometry.ramp_kind != RampKind::kOnRamp)
        throw HarnessError("config", "merge_flow sweeps need an on-ramp scenario");
      s.demand.ramp_flow = value;
      break;
    case SweepVariable::kExitFlow:
      if (s.geometry.ramp_kind != RampKind::kOffRamp)
        throw HarnessError("config", "exit_flow sweeps need an off-ramp scenario");
      s.demand.ramp_flow = value;
      break;
    case SweepVariable::kUpdateInterval:
      s.run.control_interval = value;
      break;
  }
  try {
    s.validate();
  } catch (const std::exception& e) {
    throw HarnessError("config", std::string("sweep value ") + std::to_string(value) + ": " + e.what());
  }
}

std::vector<EpisodeRecord> run_sweep(const Scenario& base, const SweepSpec& spec,
                                     const PolicySet& policies, bool parallel) {
  if (spec.values.empty()) throw HarnessError("usage", "sweep needs at least one value");
  if (spec.episodes_per_point < 1) throw HarnessError("usage", "episodes per point must be >= 1");
  for (System sys : spec.systems) {
    if (sys == System::kSaint && !policies.saint)
      throw HarnessError("checkpoint", "saint system requested without a trained checkpoint");
    if (sys == System::kFixedTtc && !policies.fixed_ttc)
      throw HarnessError("checkpoint", "fixed-ttc system requested without a trained checkpoint");
  }

  struct Job {
    Scenario scenario;
    EpisodeOptions options;
    EpisodeRecord record;
  };
  std::vector<Job> jobs;
  for (double value : spec.values)
    for (System sys : spec.systems)
      for (int i = 0; i < spec.episodes_per_point; ++i) {
        Job j{base, {}, {}};
        j.options.system = sys;
        j.options.mode = Mode::kEval;
        j.options.seed = evaluation_seed(spec.base_seed, i);
        j.options.fixed_ttc_star = base.agents.fixed_ttc_star;
        apply_sweep_value(j.scenario, j.options, spec.variable, value);
        j.record.value = value;
        j.record.system = sys;
        j.record.seed_index = i;
        j.record.seed = j.options.seed;
        jobs.push_back(std::move(j));
      }

  std::vector<std::string> errors(jobs.size());
  auto run_job = [&](std::size_t k) {
    Job& j = jobs[k];
    try {
      std::optional<Agents> local;
      const Agents* src = j.options.system == System::kSaint      ? policies.saint
                          : j.options.system == System::kFixedTtc ? policies.fixed_ttc
                                                                  : nullptr;
      if (src) local = Agents{src->ttc.snapshot(), src->acc.snapshot()};
      EpisodeResult r = run_episode(j.scenario, local ? &*local : nullptr, j.options);
      j.record.metrics = std::move(r.metrics);
      j.record.mean_ttc_star = r.mean_ttc_star;
      j.record.mean_gap = r.mean_gap;
    } catch (const std::exception& e) {
      errors[k] = to_string(j.options.system) + " " + to_string(spec.variable) + "=" +
                  std::to_string(j.record.value) + " seed " + std::to_string(j.record.seed) +
                  ": " + e.what();
    }
  };

  const auto n = static_cast<std::ptrdiff_t>(jobs.size());
  if (parallel) {
#pragma omp parallel for schedule(dynamic) num_threads(worker_count())
    for (std::ptrdiff_t k = 0; k < n; ++k) run_job(static_cast<std::size_t>(k));
  } else {
    for (std::ptrdiff_t k = 0; k < n; ++k) run_job(static_cast<std::size_t>(k));
  }
  for (const auto& e : errors)
    if (!e.empty()) throw HarnessError("simulation", e);

  std::vector<EpisodeRecord> out;
  out.reserve(jobs.size());
  for (auto& j : jobs) out.push_back(std::move(j.record));
  return out;
}

std::vector<ResultRow> aggregate(const std::vector<EpisodeRecord>& records) {
  std::vector<ResultRow> rows;
  std::size_t i = 0;
  while (i < records.size()) {
    std::size_t j = i;
    while (j < records.size() && records[j].value == records[i].value &&
           records[j].system == records[i].system)
      ++j;
    std::vector<std::vector<double>> cols(11);
    for (std::size_t k = i; k < j; ++k) {
      const EpisodeMetrics& m = records[k].metrics;
      const double vals[11] = {static_cast<double>(m.near_collisions),
                               static_cast<double>(m.safety.fp),
                               static_cast<double>(m.safety.fn),
                               static_cast<double>(m.safety.ac),
                               m.mean_speed,
                               m.mean_delay,
                               m.mean_abs_accel,
                               m.mean_sq_jerk,
                               m.min_interval_speed,
                               records[k].mean_ttc_star,
                               records[k].mean_gap};
      for (int c = 0; c < 11; ++c) cols[c].push_back(vals[c]);
    }
    auto sum = [&](int c) { return Summary{mean(cols[c]), stddev(cols[c])}; };
    ResultRow r;
    r.value = records[i].value;
    r.system = records[i].system;
    r.episodes = static_cast<int>(j - i);
    r.near_collisions = sum(0);
    r.fp = sum(1);
    r.fn = sum(2);
    r.ac = sum(3);
    r.mean_speed = sum(4);
    r.mean_delay = sum(5);
    r.mean_abs_accel = sum(6);
    r.mean_sq_jerk = sum(7);
    r.min_interval_speed = sum(8);
    r.ttc_star = sum(9);
    r.gap = sum(10);
    rows.push_back(r);
    i = j;
  }
  return rows;
}

std::string csv_comment(const Scenario& s, const std::string& seeds, const std::string& extra) {
  std::string c = "# config_hash=" + hex(config_hash(s)) + " seeds=" + seeds;
  if (!extra.empty()) c += " " + extra;
  return c;
}

void write_episode_csv(std::ostream& os, const std::vector<EpisodeRecord>& records,
                       const std::string& comment, const std::string& variable) {
  os << comment << '\n';
  os << variable << ",system,seed_index,seed,near_collisions,fp,fn,ac,mean_speed,mean_delay,"
                    "mean_abs_accel,mean_sq_jerk,min_interval_speed,mean_ttc_star,mean_gap\n";
  os.precision(10);
  for (const auto& r : records) {
    const EpisodeMetrics& m = r.metrics;
    os << r.value << ',' << to_string(r.system) << ',' << r.seed_index << ',' << r.seed << ','
       << m.near_collisions << ',' << m.safety.fp << ',' << m.safety.fn << ',' << m.safety.ac
       << ',' << m.mean_speed << ',' << m.mean_delay << ',' << m.mean_abs_accel << ','
       << m.mean_sq_jerk << ',' << m.min_interval_speed << ',' << r.mean_ttc_star << ','
       << r.mean_gap << '\n';
  }
}

void write_result_csv(std::ostream& os, const std::vector<ResultRow>& rows,
                      const std::string& comment, const std::string& variable) {
  os << comment << " aggregate=mean,std(n-1)\n";
  os << variable << ",system,episodes";
  for (const char* name : {"near_collisions", "fp", "fn", "ac", "mean_speed", "mean_delay",
                           "mean_abs_accel", "mean_sq_jerk", "min_interval_speed", "ttc_star",
                           "gap"})
    os << ',' << name << "_mean," << name << "_std";
  os << '\n';
  os.precision(10);
  for (const auto& r : rows) {
    os << r.value << ',' << to_string(r.system) << ',' << r.episodes;
    for (const Summary* s : {&r.near_collisions, &r.fp, &r.fn, &r.ac, &r.mean_speed,
                             &r.mean_delay, &r.mean_abs_accel, &r.mean_sq_jerk,
                             &r.min_interval_speed, &r.ttc_star, &r.gap})
      os << ',' << s->mean << ',' << s->std;
    os << '\n';
  }
}

std::vector<EpisodeRecord> cmd_motivation(const Scenario& s, const std::vector<double>& values,
                                          int episodes, std::uint64_t base_seed, bool parallel) {
  SweepSpec spec;
  spec.variable = SweepVariable::kTtcStarFixed;
  spec.values = values;
  spec.episodes_per_point = episodes;
  spec.base_seed = base_seed;
  spec.systems = {System::kScripted};
  return run_sweep(s, spec, {}, parallel);
}

LatencyReport cmd_latency(const Scenario& s, const Agents& agents, int samples,
                          std::uint64_t base_seed) {
  LatencyReport rep;
  Agents local{agents.ttc.snapshot(), agents.acc.snapshot()};
  for (int i = 0; static_cast<int>(rep.ms.size()) < samples; ++i) {
    EpisodeOptions o;
    o.system = System::kSaint;
    o.mode = Mode::kEval;
    o.seed = evaluation_seed(base_seed, i);
    const EpisodeResult r = run_episode(s, &local, o);
    if (r.metrics.decision_latency_ms.empty())
      throw HarnessError("simulation", "episode produced no agent decisions");
    rep.ms.insert(rep.ms.end(), r.metrics.decision_latency_ms.begin(),
                  r.metrics.decision_latency_ms.end());
  }
  rep.ms.resize(static_cast<std::size_t>(samples));
  rep.mean = mean(rep.ms);
  rep.p50 = percentile(rep.ms, 0.5);
  rep.p90 = percentile(rep.ms, 0.9);
  rep.p99 = percentile(rep.ms, 0.99);
  return rep;
}

std::string trajectory_csv_header() { return "step,time,id,lane,position,speed,accel,gap,equipped"; }

std::string trajectory_csv_row(const TrajectoryRow& r) {
  std::ostringstream os;
  os.precision(10);
  os << r.step << ',' << r.time << ',' << r.id << ',' << r.lane << ',' << r.position << ','
     << r.speed << ',' << r.accel << ',' << r.gap << ',' << (r.equipped ? 1 : 0);
  return os.str();
}

EpisodeResult cmd_spacetime(const Scenario& s, System system, const Agents* agents,
                            std::uint64_t seed) {
  EpisodeOptions o;
  o.system = system;
  o.mode = Mode::kEval;
  o.seed = seed;
  o.fixed_ttc_star = s.agents.fixed_ttc_star;
  o.record_trajectory = true;
  std::optional<Agents> local;
  if (agents) local = Agents{agents->ttc.snapshot(), agents->acc.snapshot()};
  return run_episode(s, local ? &*local : nullptr, o);
}

}  // namespace saint
