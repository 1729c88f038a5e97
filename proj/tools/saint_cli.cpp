#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "saint/checkpoint.hpp"
#include "saint/harness.hpp"
#include "saint/metrics.hpp"
#include "saint/scenario.hpp"

namespace fs = std::filesystem;
using namespace saint;

namespace {

struct Common {
  std::string config;
  std::vector<std::string> overrides;
  std::uint64_t seed = 1;
  std::string out = "out";
  bool serial = false;
};

Scenario scenario_from(const Common& c) {
  Scenario s = c.config.empty() ? Scenario{} : load_scenario(c.config);
  if (c.overrides.empty()) return s;
  std::string text = to_config_text(s);
  for (const auto& o : c.overrides) {
    const auto dot = o.find('.');
    const auto eq = o.find('=');
    if (dot == std::string::npos || eq == std::string::npos || dot > eq)
      throw ConfigError("override '" + o + "' is not of the form section.key=value");
    text += "\n[" + o.substr(0, dot) + "]\n" + o.substr(dot + 1, eq - dot - 1) + " = " +
            o.substr(eq + 1) + "\n";
  }
  return parse_scenario(text, "--set");
}

fs::path ensure_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw HarnessError("io", "cannot create output directory " + dir);
  return dir;
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream f(path);
  if (!f) throw HarnessError("io", "cannot write " + path.string());
  return f;
}

std::string seed_list(std::uint64_t base, int n) {
  return "evaluation_seed(" + std::to_string(base) + ",0.." + std::to_string(n - 1) + ")";
}

void write_sweep(const fs::path& dir, const Scenario& s, const std::vector<EpisodeRecord>& records,
                 SweepVariable variable, std::uint64_t seed, int episodes, const std::string& extra) {
  const std::string comment = csv_comment(s, seed_list(seed, episodes), extra);
  auto ep = open_out(dir / "episodes.csv");
  write_episode_csv(ep, records, comment, to_string(variable));
  const auto rows = aggregate(records);
  auto res = open_out(dir / "results.csv");
  write_result_csv(res, rows, comment, to_string(variable));
  std::printf("%-10s %-10s %12s %12s %10s %10s\n", to_string(variable).c_str(), "system", "near",
              "speed", "fp", "fn");
  for (const auto& r : rows)
    std::printf("%-10g %-10s %6.2f±%-5.2f %6.2f±%-5.2f %10.1f %10.1f\n", r.value,
                to_string(r.system).c_str(), r.near_collisions.mean, r.near_collisions.std,
                r.mean_speed.mean, r.mean_speed.std, r.fp.mean, r.fn.mean);
}

std::vector<double> parse_values(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw HarnessError("usage", "bad value '" + item + "' in --values");
    }
  }
  if (out.empty()) throw HarnessError("usage", "--values is empty");
  return out;
}

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--config", c.config, "scenario config file (defaults built in)");
  cmd->add_option("--set", c.overrides, "override a config key, e.g. demand.ramp_flow=1200");
  cmd->add_option("--seed", c.seed, "base seed");
  cmd->add_option("--out", c.out, "output directory");
  cmd->add_flag("--serial", c.serial, "run sweep jobs on one thread");
}

int exit_code(const std::string& category) {
  if (category == "usage") return 2;
  if (category == "config") return 3;
  if (category == "io") return 4;
  if (category == "checkpoint") return 5;
  if (category == "simulation") return 6;
  return 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"highway traffic simulation with learned TTC threshold and ACC gap agents"};
  app.require_subcommand(1);

  Common c;
  int train_episodes = 300, episodes = 20;
  std::string train_system = "saint", space_system = "base";
  std::string checkpoints, ablation, variable = "penetration", values;
  std::vector<std::string> systems;
  int checkpoint_every = 10;
  int samples = 1000;

  auto* train = app.add_subcommand("train", "train agents, writing checkpoints and rewards.csv");
  add_common(train, c);
  train->add_option("--episodes", train_episodes, "episodes to train");
  train->add_option("--system", train_system, "saint or fixed-ttc");
  train->add_option("--checkpoint-every", checkpoint_every, "checkpoint period in episodes");

  auto* motivation = app.add_subcommand("motivation", "scripted fixed-threshold ACC over a TTC* grid");
  add_common(motivation, c);
  motivation->add_option("--episodes", episodes, "episodes per point");
  motivation->add_option("--values", values, "comma-separated TTC* values")
      ->default_val("1,2,3,4,5,6,7,8,9,10");

  auto* sweep = app.add_subcommand("sweep", "evaluate systems over a swept variable");
  add_common(sweep, c);
  sweep->add_option("--episodes", episodes, "episodes per point");
  sweep->add_option("--variable", variable,
                    "ttc_star_fixed, penetration, merge_flow, exit_flow or update_interval");
  sweep->add_option("--values", values, "comma-separated values")->required();
  sweep->add_option("--checkpoints", checkpoints, "directory with SAINT checkpoints");
  sweep->add_option("--ablation", ablation, "directory with fixed-ttc checkpoints");
  sweep->add_option("--system", systems, "systems to run (default all available)");

  auto* ablate = app.add_subcommand("ablate-ttc", "SAINT vs fixed TTC* vs base at the config point");
  add_common(ablate, c);
  ablate->add_option("--episodes", episodes, "paired episodes");
  ablate->add_option("--checkpoints", checkpoints, "directory with SAINT checkpoints")->required();
  ablate->add_option("--ablation", ablation, "directory with fixed-ttc checkpoints")->required();

  auto* latency = app.add_subcommand("latency", "time agent decisions");
  add_common(latency, c);
  latency->add_option("--checkpoints", checkpoints, "directory with SAINT checkpoints")->required();
  latency->add_option("--samples", samples, "decisions to time");

  auto* spacetime = app.add_subcommand("spacetime", "per-step trajectory CSV for one episode");
  add_common(spacetime, c);
  spacetime->add_option("--system", space_system, "saint, fixed-ttc, base or scripted");
  spacetime->add_option("--checkpoints", checkpoints, "checkpoint directory for learned systems");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    const Scenario s = scenario_from(c);
    const fs::path out = ensure_dir(c.out);

    if (*train) {
      TrainOptions o;
      o.system = system_from_string(train_system);
      o.episodes = train_episodes;
      o.seed = c.seed;
      o.checkpoint_every = checkpoint_every;
      const auto r = cmd_train(s, o, out);
      std::printf("trained episodes %lld..%lld into %s\n", static_cast<long long>(r.first_episode),
                  static_cast<long long>(r.episodes_done - 1), out.string().c_str());
    } else if (*motivation) {
      const auto recs = cmd_motivation(s, parse_values(values), episodes, c.seed, !c.serial);
      write_sweep(out, s, recs, SweepVariable::kTtcStarFixed, c.seed, episodes, "system=scripted");
    } else if (*sweep || *ablate) {
      SweepSpec spec;
      spec.base_seed = c.seed;
      spec.episodes_per_point = episodes;
      std::optional<Agents> saint, fixed;
      if (!checkpoints.empty()) saint = load_agents(checkpoints);
      if (!ablation.empty()) fixed = load_agents(ablation);
      if (*ablate) {
        spec.variable = SweepVariable::kPenetration;
        spec.values = {s.demand.penetration_rate};
      } else {
        spec.variable = sweep_variable_from_string(variable);
        spec.values = parse_values(values);
      }
      if (!systems.empty()) {
        spec.systems.clear();
        for (const auto& name : systems) spec.systems.push_back(system_from_string(name));
      } else {
        spec.systems = {System::kBase};
        if (fixed) spec.systems.insert(spec.systems.begin(), System::kFixedTtc);
        if (saint) spec.systems.insert(spec.systems.begin(), System::kSaint);
      }
      const auto recs = run_sweep(s, spec, {saint ? &*saint : nullptr, fixed ? &*fixed : nullptr},
                                  !c.serial);
      write_sweep(out, s, recs, spec.variable, c.seed, episodes,
                  "checkpoints=" + checkpoints + " ablation=" + ablation);
    } else if (*latency) {
      const Agents agents = load_agents(checkpoints);
      const auto rep = cmd_latency(s, agents, samples, c.seed);
      auto f = open_out(out / "latency.csv");
      f << csv_comment(s, seed_list(c.seed, 1) + "...", "checkpoints=" + checkpoints) << '\n';
      f << "sample,latency_ms\n";
      for (std::size_t i = 0; i < rep.ms.size(); ++i) f << i << ',' << rep.ms[i] << '\n';
      f << "# mean=" << rep.mean << " p50=" << rep.p50 << " p90=" << rep.p90 << " p99=" << rep.p99
        << '\n';
      std::printf("decisions %zu  mean %.4f ms  p50 %.4f  p90 %.4f  p99 %.4f\n", rep.ms.size(),
                  rep.mean, rep.p50, rep.p90, rep.p99);
    } else if (*spacetime) {
      const System sys = system_from_string(space_system);
      std::optional<Agents> agents;
      if (!checkpoints.empty()) agents = load_agents(checkpoints);
      const auto r = cmd_spacetime(s, sys, agents ? &*agents : nullptr, c.seed);
      auto f = open_out(out / "trajectory.csv");
      f << csv_comment(s, std::to_string(c.seed), "system=" + space_system) << '\n';
      f << trajectory_csv_header() << '\n';
      for (const auto& row : r.trajectory) f << trajectory_csv_row(row) << '\n';
      std::printf("%zu trajectory rows, near collisions %lld, mean speed %.3f\n", r.trajectory.size(),
                  static_cast<long long>(r.metrics.near_collisions), r.metrics.mean_speed);
    }
  } catch (const HarnessError& e) {
    std::fprintf(stderr, "error[%s]: %s\n", e.category().c_str(), e.what());
    return exit_code(e.category());
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "error[config]: %s\n", e.what());
    return 3;
  } catch (const ValidationError& e) {
    std::fprintf(stderr, "error[config]: %s\n", e.what());
    return 3;
  } catch (const CheckpointError& e) {
    std::fprintf(stderr, "error[checkpoint]: %s\n", e.what());
    return 5;
  } catch (const DegenerateEpisode& e) {
    std::fprintf(stderr, "error[simulation]: %s\n", e.what());
    return 6;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error[internal]: %s\n", e.what());
    return 1;
  }
  return 0;
}
