// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fail.
#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "saint/agents.hpp"
#include "saint/checkpoint.hpp"
#include "saint/harness.hpp"
#include "saint/metrics.hpp"
#include "saint/qnetwork.hpp"
#include "saint/rng.hpp"
#include "saint/stats.hpp"
#include "saint/world.hpp"

using namespace saint;
namespace fs = std::filesystem;

namespace {

struct Verdict {
  bool pass = false;
  std::string detail;
};

bool rel_close(double got, double want, double tol = 1e-9) {
  return std::abs(got - want) <= tol * std::max(1.0, std::abs(want));
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double elapsed(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::vector<double> column(const std::vector<ResultRow>& rows, System sys,
                           Summary ResultRow::*field) {
  std::vector<double> out;
  for (const auto& r : rows)
    if (r.system == sys) out.push_back((r.*field).mean);
  return out;
}

std::vector<double> per_episode(const std::vector<EpisodeRecord>& recs, System sys,
                                const std::function<double(const EpisodeMetrics&)>& f) {
  std::vector<double> out;
  for (const auto& r : recs)
    if (r.system == sys) out.push_back(f(r.metrics));
  return out;
}

// ---- 1 ----------------------------------------------------------------------

Verdict formulas() {
  int bad = 0, n = 0;
  auto check = [&](double got, double want) {
    ++n;
    if (!rel_close(got, want)) ++bad;
  };
  check(compute_ttc(100, 50, 5, 25, 20), 9.0);
  check(compute_ttc(100, 95, 5, 25, 20), 0.0);
  ++n;
  if (compute_ttc(100, 50, 5, 20, 20) != kInfinity) ++bad;
  SafetyTally t;
  t.fp = 3;
  t.fn = 2;
  t.ac = 1;
  check(reward_ttc(t), -17.0);
  check(reward_ttc(SafetyTally{}), 0.0);
  check(reward_acc_safety(std::vector<double>{2.0}, 4.0), std::log(0.5));
  check(reward_acc_safety(std::vector<double>{1.0, 3.0}, 4.0), std::log(0.25) + std::log(0.75));
  check(reward_acc_safety(std::vector<double>{0.0}, 4.0), std::log(0.01 / 4.0));
  check(reward_acc_safety(std::vector<double>{kInfinity, 9.0}, 4.0), 0.0);
  check(reward_acc_efficiency(150.0, 1500.0, 8.0), 1.0);
  check(reward_acc_efficiency(200.0, 1500.0, 8.0), -1.0);
  check(reward_acc_efficiency(std::nullopt, 1500.0, 8.0), 0.0);
  check(reward_acc_comfort(2.6), -0.25);
  check(reward_acc_comfort(3.0), -9.0 / 27.04);
  check(reward_acc_total(1.0, -0.693, -0.25), 0.057);
  ++n;
  if (reward_acc_comfort(5.2) != -1.0) ++bad;
  return {bad == 0, fmt("%d/%d examples within 1e-9 relative, R_c(5.2) == -1 exactly", n - bad, n)};
}

// ---- 2 ----------------------------------------------------------------------

Verdict numerics() {
  Rng r(2024);
  int checked = 0;
  double worst = 0.0;
  while (checked < 100) {
    const int in = 1 + static_cast<int>(r.uniform_index(3));
    const int hid = 1 + static_cast<int>(r.uniform_index(4));
    const int out = 1 + static_cast<int>(r.uniform_index(3));
    QNetwork net(std::vector<int>{in, hid, out});
    for (auto& p : net.params()) p = r.normal(0, 1);
    net.norm().enabled = false;
    std::vector<double> s(in);
    for (auto& x : s) x = r.normal(0, 1);
    bool near_kink = false;
    for (int h = 0; h < hid; ++h) {
      double z = net.params()[net.bias_offset(0) + h];
      for (int i = 0; i < in; ++i) z += net.params()[h * in + i] * s[i];
      near_kink = near_kink || std::abs(z) < 1e-2;
    }
    if (near_kink) continue;
    worst = std::max(worst, backward_check(net, s, static_cast<int>(r.uniform_index(out)), r.normal(0, 2)));
    ++checked;
  }
  const double lr = 0.01, g = 0.4;
  AdamState adam(1, lr);
  std::vector<double> w{1.0};
  adam.step(w, std::vector<double>{g});
  const double adam_err = std::abs(w[0] - (1.0 - lr * g / (std::abs(g) + 1e-8)));
  return {worst < 1e-4 && adam_err <= 1e-12,
          fmt("max gradient rel error %.3g (< 1e-4) over 100 nets, Adam error %.3g (<= 1e-12)", worst,
              adam_err)};
}

// ---- 3 ----------------------------------------------------------------------

bool chain_solved(std::uint64_t seed) {
  DqnConfig c;
  c.state_dim = 5;
  c.action_count = 2;
  c.hidden_dim = 30;
  c.gamma = 0.95;
  c.batch_size = 64;
  c.learning_rate = 1e-2;
  c.train_start = 64;
  c.replay_capacity = 10000;
  c.epsilon_decay = 0.99;
  c.target_sync_episodes = 1;
  DqnAgent a(c, seed, stream::kTtcExplore);
  a.online().norm().enabled = false;
  a.target().norm().enabled = false;
  auto onehot = [](int s) {
    std::vector<double> v(5, 0.0);
    v[s] = 1.0;
    return v;
  };
  for (int ep = 0; ep < 200; ++ep) {
    int s = 0;
    for (int t = 0; t < 20; ++t) {
      const int act = a.act(onehot(s), true);
      const int s2 = std::clamp(s + (act == 1 ? 1 : -1), 0, 4);
      const bool done = s2 == 4;
      a.remember(onehot(s), act, done ? 1.0 : 0.0, onehot(s2), done);
      a.learn();
      s = s2;
      if (done) break;
    }
    a.end_episode();
  }
  for (int s = 0; s < 4; ++s)
    if (a.act(onehot(s), false) != 1) return false;
  return true;
}

Verdict toy_chain() {
  int solved = 0;
  for (std::uint64_t seed = 1; seed <= 100; ++seed) solved += chain_solved(seed);
  return {solved >= 95, fmt("%d/100 seeds reach the optimal greedy policy (need >= 95)", solved)};
}

// ---- 4 ----------------------------------------------------------------------

Verdict motivation(const Scenario& s, const fs::path& work) {
  std::vector<double> grid;
  for (int k = 1; k <= 10; ++k) grid.push_back(k);
  const auto recs = cmd_motivation(s, grid, 20, 1);
  const auto rows = aggregate(recs);
  std::ofstream f(work / "motivation.csv");
  write_result_csv(f, rows, csv_comment(s, "evaluation_seed(1,0..19)"), "ttc_star_fixed");
  const double rn = spearman(grid, column(rows, System::kScripted, &ResultRow::near_collisions));
  const double rv = spearman(grid, column(rows, System::kScripted, &ResultRow::mean_speed));
  return {rn <= -0.5 && rv <= -0.5,
          fmt("Spearman(TTC*, near collisions) = %.3f, Spearman(TTC*, speed) = %.3f (both <= -0.5)", rn, rv)};
}

// ---- 5 ----------------------------------------------------------------------

struct Trained {
  std::vector<Agents> saint, fixed;
  std::vector<std::vector<RewardRow>> curves;
};

double window_mean(const std::vector<RewardRow>& rows, std::size_t from, double RewardRow::*f) {
  double sum = 0.0;
  for (std::size_t i = from; i < from + 20; ++i) sum += rows[i].*f;
  return sum / 20.0;
}

void write_curve(const fs::path& p, const Scenario& s, std::uint64_t seed,
                 const std::vector<RewardRow>& rows) {
  std::ofstream f(p);
  f << csv_comment(s, fmt("training_seed(%llu,0..%zu)", static_cast<unsigned long long>(seed),
                          rows.size() - 1))
    << "\n"
    << reward_csv_header() << "\n";
  for (const auto& r : rows) f << reward_csv_row(r) << "\n";
}

Verdict convergence(const Scenario& s, const fs::path& work, Trained& out) {
  int improved = 0;
  bool finite = true;
  std::ostringstream detail;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    TrainOptions o;
    o.seed = seed;
    o.episodes = 300;
    Agents a = make_agents(s.agents, seed);
    auto rows = train_agents(s, a, o);
    o.system = System::kFixedTtc;
    Agents b = make_agents(s.agents, seed);
    train_agents(s, b, o);
    write_curve(work / fmt("rewards_saint_%llu.csv", static_cast<unsigned long long>(seed)), s, seed, rows);
    for (const auto& r : rows) finite = finite && std::isfinite(r.ttc_reward) && std::isfinite(r.acc_reward);
    for (const Agents* ag : {&a, &b})
      for (const DqnAgent* d : {&ag->ttc, &ag->acc})
        for (double p : d->online().params()) finite = finite && std::isfinite(p);
    const double t0 = window_mean(rows, 0, &RewardRow::ttc_reward);
    const double t1 = window_mean(rows, rows.size() - 20, &RewardRow::ttc_reward);
    const double a0 = window_mean(rows, 0, &RewardRow::acc_reward);
    const double a1 = window_mean(rows, rows.size() - 20, &RewardRow::acc_reward);
    improved += (t1 > t0 && a1 > a0);
    detail << fmt(" s%llu[ttc %.1f->%.1f acc %.1f->%.1f]", static_cast<unsigned long long>(seed), t0, t1, a0, a1);
    std::fprintf(stderr, "trained seed %llu\n", static_cast<unsigned long long>(seed));
    if (seed == 1) {
      save_agents(work / "saint", a, "episodes=300;system=saint;seed=1");
      save_agents(work / "fixed-ttc", b, "episodes=300;system=fixed-ttc;seed=1");
    }
    out.saint.push_back(std::move(a));
    out.fixed.push_back(std::move(b));
    out.curves.push_back(std::move(rows));
  }
  return {improved >= 8 && finite,
          fmt("%d/10 seeds improve both agents' 20-episode average (need >= 8), all finite: %s;", improved,
              finite ? "yes" : "no") +
              detail.str()};
}

// ---- 6 ----------------------------------------------------------------------

SweepSpec at_penetration(double p, std::uint64_t base_seed) {
  SweepSpec spec;
  spec.variable = SweepVariable::kPenetration;
  spec.values = {p};
  spec.episodes_per_point = 20;
  spec.base_seed = base_seed;
  return spec;
}

Verdict headline(const Scenario& s, const fs::path& work, const Trained& t) {
  const auto recs = run_sweep(s, at_penetration(0.8, 1), {&t.saint[0], &t.fixed[0]});
  std::ofstream f(work / "headline.csv");
  write_episode_csv(f, recs, csv_comment(s, "evaluation_seed(1,0..19)"), "penetration");
  auto nc = [](const EpisodeMetrics& m) { return static_cast<double>(m.near_collisions); };
  auto sp = [](const EpisodeMetrics& m) { return m.mean_speed; };
  const auto ns = per_episode(recs, System::kSaint, nc), nf = per_episode(recs, System::kFixedTtc, nc),
             nb = per_episode(recs, System::kBase, nc);
  const double ms = mean(ns), mf = mean(nf), mb = mean(nb);
  const double vs = mean(per_episode(recs, System::kSaint, sp)), vb = mean(per_episode(recs, System::kBase, sp));
  const PairedTTest tt = paired_t_test(ns, nf);
  const bool halved = ms <= 0.5 * mb;
  const bool beats_fixed = ms < mf && tt.p_less < 0.05;
  const bool speed = vs >= vb;
  return {halved && beats_fixed && speed,
          fmt("near collisions saint %.2f fixed-ttc %.2f base %.2f; saint <= 0.5*base: %s; saint < fixed-ttc "
              "p_less = %.4g (< 0.05): %s; speed saint %.3f >= base %.3f: %s",
              ms, mf, mb, halved ? "yes" : "no", tt.p_less, beats_fixed ? "yes" : "no", vs, vb,
              speed ? "yes" : "no")};
}

// ---- 7 ----------------------------------------------------------------------

Verdict ablation(const Scenario& s, const Trained& t) {
  int ordered = 0;
  std::ostringstream detail;
  for (std::size_t k = 0; k < t.saint.size(); ++k) {
    const auto rows = aggregate(run_sweep(s, at_penetration(0.8, k + 1), {&t.saint[k], &t.fixed[k]}));
    const double vs = column(rows, System::kSaint, &ResultRow::mean_speed)[0];
    const double vf = column(rows, System::kFixedTtc, &ResultRow::mean_speed)[0];
    const double vb = column(rows, System::kBase, &ResultRow::mean_speed)[0];
    ordered += (vs >= vf && vf >= vb);
    detail << fmt(" set%zu[%.2f %.2f %.2f]", k + 1, vs, vf, vb);
  }
  return {ordered >= 7,
          fmt("%d/10 paired sets have speed saint >= fixed-ttc >= base (need >= 7);", ordered) + detail.str()};
}

// ---- 8 ----------------------------------------------------------------------

std::string event_log(const EpisodeResult& r) {
  std::ostringstream os;
  os.precision(17);
  for (const auto& e : r.events)
    os << e.time << ',' << static_cast<int>(e.kind) << ',' << e.subject << ',' << e.object << ',' << e.lane
       << ',' << static_cast<int>(e.reason) << '\n';
  for (const auto& row : r.trajectory) os << trajectory_csv_row(row) << '\n';
  return os.str();
}

bool near_collision_oracle() {
  Rng r(77);
  for (int trial = 0; trial < 10000; ++trial) {
    const int lanes = 1 + static_cast<int>(r.uniform_index(4));
    const int n = static_cast<int>(r.uniform_index(51));
    std::vector<VehicleState> all;
    for (int i = 0; i < n; ++i) {
      VehicleState v;
      v.id = i;
      v.x = r.uniform(0, 300);
      v.v = std::floor(r.uniform(0, 6)) * 5.0;
      v.lane = static_cast<int>(r.uniform_index(lanes));
      v.length = r.uniform(4, 5);
      all.push_back(v);
    }
    WorldState w;
    w.lanes.resize(lanes);
    for (const auto& v : all) w.lanes[v.lane].push_back(v);
    for (auto& l : w.lanes)
      std::sort(l.begin(), l.end(), [](const VehicleState& a, const VehicleState& b) { return a.x > b.x; });
    std::vector<std::pair<int, int>> expect;
    for (const auto& f : all)
      for (const auto& l : all) {
        if (f.id == l.id || f.lane != l.lane || !(l.x > f.x)) continue;
        bool adjacent = true;
        for (const auto& k : all)
          if (k.id != f.id && k.id != l.id && k.lane == f.lane && k.x > f.x && k.x < l.x) adjacent = false;
        if (adjacent && l.x - f.x - l.length < 2.5 && f.v > l.v) expect.emplace_back(f.id, l.id);
      }
    std::sort(expect.begin(), expect.end());
    if (detect_near_collisions(w, 2.5) != expect) return false;
  }
  return true;
}

Verdict determinism(const Scenario& s, const fs::path& work, const Trained& t) {
  EpisodeOptions o;
  o.seed = evaluation_seed(1, 0);
  o.record_trajectory = true;
  Agents a1 = t.saint[0], a2 = t.saint[0];
  const bool episode_same = event_log(run_episode(s, &a1, o)) == event_log(run_episode(s, &a2, o));

  SweepSpec spec = at_penetration(0.8, 3);
  spec.episodes_per_point = 4;
  std::ostringstream c1, c2;
  write_episode_csv(c1, run_sweep(s, spec, {&t.saint[0], &t.fixed[0]}, true), "#", "penetration");
  write_episode_csv(c2, run_sweep(s, spec, {&t.saint[0], &t.fixed[0]}, false), "#", "penetration");
  const bool sweep_same = c1.str() == c2.str();

  Scenario quick = s;
  quick.run.episode_duration = 150.0;
  quick.run.warmup = 30.0;
  TrainOptions to;
  to.episodes = 3;
  auto slurp = [](const fs::path& p) {
    std::ifstream f(p);
    std::stringstream ss;
    ss << f.rdbuf();
    return ss.str();
  };
  cmd_train(quick, to, work / "det_a");
  cmd_train(quick, to, work / "det_b");
  const bool train_same = slurp(work / "det_a" / kRewardCsv) == slurp(work / "det_b" / kRewardCsv);

  const bool oracle = near_collision_oracle();

  bool ckpt = true;
  Rng probe(9);
  for (const DqnAgent* d : {&t.saint[0].ttc, &t.saint[0].acc}) {
    const DqnAgent back = decode_checkpoint(encode_checkpoint(*d));
    for (int i = 0; i < 200; ++i) {
      std::vector<double> x(kStateDim);
      for (auto& v : x) v = probe.normal(0, 10);
      if (back.online().forward(x) != d->online().forward(x)) ckpt = false;
    }
  }
  auto yn = [](bool b) { return b ? "yes" : "no"; };
  return {episode_same && sweep_same && train_same && oracle && ckpt,
          fmt("event log + trajectory identical: %s; sweep CSV identical (parallel vs serial): %s; training CSV "
              "identical: %s; near-collision oracle 10^4 worlds: %s; checkpoint Q bit-exact: %s",
              yn(episode_same), yn(sweep_same), yn(train_same), yn(oracle), yn(ckpt))};
}

// ---- 9 ----------------------------------------------------------------------

Verdict latency(const Scenario& s, const fs::path& work, const Trained& t) {
  const LatencyReport r = cmd_latency(s, t.saint[0], 1000, 1);
  std::ofstream f(work / "latency.csv");
  f << "sample,ms\n";
  for (std::size_t i = 0; i < r.ms.size(); ++i) f << i << ',' << r.ms[i] << '\n';
  return {r.ms.size() >= 1000 && r.mean < 50.0,
          fmt("mean %.4f ms over %zu decisions (< 50 ms), p50 %.4f p99 %.4f", r.mean, r.ms.size(), r.p50,
              r.p99)};
}

// ---- 10 ---------------------------------------------------------------------

Verdict update_interval(const Scenario& s, const fs::path& work, const Trained& t) {
  SweepSpec spec;
  spec.variable = SweepVariable::kUpdateInterval;
  spec.values = {1, 2, 3, 5, 10};
  spec.episodes_per_point = 20;
  spec.systems = {System::kSaint};
  const auto rows = aggregate(run_sweep(s, spec, {&t.saint[0], &t.fixed[0]}));
  std::ofstream f(work / "update_interval.csv");
  write_result_csv(f, rows, csv_comment(s, "evaluation_seed(1,0..19)"), "update_interval");
  const auto speeds = column(rows, System::kSaint, &ResultRow::mean_speed);
  const double rho = spearman(spec.values, speeds);
  std::string detail = fmt("Spearman(interval, speed) = %.3f (<= 0); speeds", rho);
  for (double v : speeds) detail += fmt(" %.3f", v);
  return {rho <= 0.0, detail};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"acceptance checks"};
  std::string work = "acceptance";
  app.add_option("--work", work, "scratch directory for checkpoints and CSVs");
  CLI11_PARSE(app, argc, argv);
  const fs::path dir(work);
  fs::remove_all(dir);
  fs::create_directories(dir);

  const Scenario s;  // on-ramp defaults, 80% penetration
  Trained trained;
  int failed = 0;
  std::ofstream log(dir / "acceptance.txt");
  auto report = [&](int id, const char* name, const std::function<Verdict()>& run) {
    const auto t0 = std::chrono::steady_clock::now();
    Verdict v;
    try {
      v = run();
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    failed += !v.pass;
    const std::string line =
        fmt("%s [%d] %s: ", v.pass ? "PASS" : "FAIL", id, name) + v.detail + fmt(" (%.1f s)", elapsed(t0));
    std::printf("%s\n", line.c_str());
    std::fflush(stdout);
    log << line << '\n';
  };

  report(1, "formula fidelity", formulas);
  report(2, "rl-core numerics", numerics);
  report(3, "toy chain convergence", toy_chain);
  report(4, "motivation study", [&] { return motivation(s, dir); });
  report(5, "training convergence", [&] { return convergence(s, dir, trained); });
  const bool have_agents = trained.saint.size() == 10;
  auto needs_agents = [&](const std::function<Verdict()>& f) {
    return [&, f] { return have_agents ? f() : Verdict{false, "no trained agents"}; };
  };
  report(6, "headline comparison", needs_agents([&] { return headline(s, dir, trained); }));
  report(7, "ttc-agent ablation", needs_agents([&] { return ablation(s, trained); }));
  report(8, "determinism and oracles", needs_agents([&] { return determinism(s, dir, trained); }));
  report(9, "decision latency", needs_agents([&] { return latency(s, dir, trained); }));
  report(10, "update-interval sweep", needs_agents([&] { return update_interval(s, dir, trained); }));

  std::printf("%d/10 criteria passed\n", 10 - failed);
  return failed == 0 ? 0 : 1;
}
