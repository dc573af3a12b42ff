#include "floc/harness.hpp"
#include "oracles.hpp"

#include <catch_amalgamated.hpp>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <numeric>
#include <random>

#include <sys/wait.h>

using namespace floc;
using Catch::Approx;

namespace {

const std::filesystem::path kData = FLOC_DATA_DIR;

std::filesystem::path scratch_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("floc_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

RunRecord synthetic_record(const std::function<double(double)>& rate_norm, double duration = 8.0) {
  RunRecord r;
  r.summary.completed = true;
  r.summary.duration = duration;
  for (int k = 0; k <= static_cast<int>(duration / 0.01); ++k) {
    r.times.push_back(k * 0.01);
    r.rate_norms.push_back(rate_norm(k * 0.01));
  }
  return r;
}

SweepConfig small_sweep() {
  SweepConfig cfg;
  cfg.aircraft_file = kData / "f16_surrogate.json";
  cfg.altitudes_m = {2000.0};
  cfg.mach = {0.7, 0.9, 2};
  cfg.alpha_cmd_deg = {5.0, 20.0, 2};
  cfg.p_cmd_deg_s = {-90.0, 90.0, 2};
  cfg.modes = {GuardMode::kLyapunov};
  cfg.duration_s = 3.0;
  return cfg;
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(FLOC_CLI_PATH) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST_CASE("profiles hold the initial value until the first knot") {
  Profile p;
  p.knots = {{1.0, 10.0}, {3.0, -10.0}};
  CHECK(p.at(0.5, 2.0) == 2.0);
  CHECK(p.at(1.0, 2.0) == 10.0);
  CHECK(p.at(2.99, 2.0) == 10.0);
  CHECK(p.at(5.0, 2.0) == -10.0);
  p.interp = Profile::Interp::kLinear;
  CHECK(p.at(2.0, 2.0) == Approx(0.0).margin(1e-15));
  CHECK(p.at(4.0, 2.0) == -10.0);
}

TEST_CASE("profile reversals are slope sign changes") {
  Profile p;
  p.knots = {{1.0, 180.0}, {3.0, -180.0}, {5.0, 0.0}};
  CHECK(p.reversals(0.0) == std::vector<double>{3.0, 5.0});
  p.knots = {{1.0, 10.0}, {2.0, 20.0}};
  CHECK(p.reversals(0.0).empty());
}

TEST_CASE("trim is held with no pilot input") {
  const ManeuverScenario sc = load_scenario(kData / "scenarios" / "trim_hold.json");
  const Aircraft ac = load_vehicle(sc.aircraft_file, sc.cg);
  const RunRecord rec = run_scenario(ac, sc);
  REQUIRE(rec.summary.completed);
  CHECK(rec.summary.outcome == Outcome::kStable);
  double worst_alpha = 0.0, worst_speed = 0.0, worst_rate = 0.0;
  for (const StepRecord& s : rec.history) {
    worst_alpha = std::max(worst_alpha, std::abs(s.state.alpha - rec.trim.state.alpha));
    worst_speed = std::max(worst_speed, std::abs(s.state.V - rec.trim.state.V) / rec.trim.state.V);
    worst_rate = std::max(worst_rate, s.state.rates().norm());
  }
  CHECK(worst_alpha < 1e-3);
  CHECK(worst_speed < 1e-3);
  CHECK(worst_rate < 1e-3);
  CHECK(rec.summary.first_loc_risk < 0.0);
}

TEST_CASE("roll reversal departs without the guard and is held with it") {
  ManeuverScenario sc = load_scenario(kData / "scenarios" / "maneuver1.json");
  const Aircraft ac = load_vehicle(sc.aircraft_file, sc.cg);
  const TrimResult trim = trim_level_flight(ac, sc.mach, sc.altitude_m);
  RunOptions opt;
  opt.trim = &trim;
  opt.keep_history = false;

  sc.guard = GuardMode::kOff;
  const RunRecord off = run_scenario(ac, sc, opt);
  CHECK(off.summary.outcome != Outcome::kStable);
  CHECK(off.summary.first_loc_risk >= 0.0);

  sc.guard = GuardMode::kLyapunov;
  const RunRecord guarded = run_scenario(ac, sc, opt);
  CHECK(guarded.summary.completed);
  CHECK(guarded.summary.outcome == Outcome::kStable);
  CHECK(guarded.summary.end_time == Approx(sc.duration_s).margin(sc.dt_s));
  CHECK(guarded.summary.max_relative_residual < 1e-3);
  CHECK(guarded.summary.unguarded_outside == 0);
  CHECK(guarded.summary.guarded_steps > 0);
}

TEST_CASE("stability classification fixtures") {
  const ClassificationConfig cfg;
  SECTION("decaying response is stable") {
    CHECK(classify_stability(synthetic_record([](double t) { return 2.0 * std::exp(-t); }), cfg) ==
          Outcome::kStable);
  }
  SECTION("quiet response below the floor is stable") {
    CHECK(classify_stability(synthetic_record([](double) { return 0.05; }), cfg) == Outcome::kStable);
  }
  SECTION("bounded limit cycle is stable") {
    auto cycle = [](double t) { return 1.0 + 0.5 * std::sin(6.0 * t); };
    CHECK(classify_stability(synthetic_record(cycle), cfg) == Outcome::kStable);
  }
  SECTION("growing oscillation is divergent") {
    auto growing = [](double t) { return 0.2 * std::exp(0.5 * t) * (1.0 + 0.5 * std::sin(6.0 * t)); };
    CHECK(classify_stability(synthetic_record(growing), cfg) == Outcome::kDiverged);
  }
  SECTION("non-finite samples are divergent") {
    auto blowup = [](double t) { return t > 7.5 ? INFINITY : 1.0; };
    CHECK(classify_stability(synthetic_record(blowup), cfg) == Outcome::kDiverged);
  }
  SECTION("incomplete runs keep their terminal outcome") {
    RunRecord r = synthetic_record([](double) { return 0.0; });
    r.summary.completed = false;
    r.summary.outcome = Outcome::kGuardTerminated;
    CHECK(classify_stability(r, cfg) == Outcome::kGuardTerminated);
    r.summary.outcome = Outcome::kStable;
    CHECK(classify_stability(r, cfg) == Outcome::kDiverged);
  }
}

TEST_CASE("outcome names round trip") {
  for (Outcome o : {Outcome::kStable, Outcome::kDiverged, Outcome::kGuardTerminated})
    CHECK(parse_outcome(to_string(o)) == o);
  CHECK_THROWS_AS(parse_outcome("wobbly"), ConfigError);
}

TEST_CASE("a sweep point reproduces the single-scenario run") {
  SweepConfig cfg = small_sweep();
  cfg.mach = {0.8, 0.9, 1};
  cfg.alpha_cmd_deg = {15.0, 20.0, 1};
  cfg.p_cmd_deg_s = {120.0, 130.0, 1};
  const Aircraft ac = load_vehicle(cfg.aircraft_file, cfg.cg);
  const SweepResult res = monte_carlo_sweep(ac, cfg, nullptr);
  REQUIRE(res.points.size() == 1);
  const SweepPoint& pt = res.points[0];
  CHECK(pt.error.empty());
  const ManeuverScenario sc = sweep_case(cfg, 2000.0, GuardMode::kLyapunov, 0.8, 15.0, 120.0);
  const RunRecord rec = run_scenario(ac, sc);
  CHECK(pt.outcome == rec.summary.outcome);
  CHECK(sc.alpha_deg.at(cfg.step_time_s, 0.0) == 15.0);
  CHECK(sc.p_deg_s.at(cfg.step_time_s, 0.0) == 120.0);
}

TEST_CASE("sweep grids do not depend on execution order or workers") {
  const SweepConfig cfg = small_sweep();
  const Aircraft ac = load_vehicle(cfg.aircraft_file, cfg.cg);
  const SweepResult base = monte_carlo_sweep(ac, cfg, nullptr, 1);
  std::vector<std::size_t> order(base.points.size());
  std::iota(order.begin(), order.end(), 0);
  std::mt19937 rng(99);
  std::shuffle(order.begin(), order.end(), rng);
  const SweepResult shuffled = monte_carlo_sweep(ac, cfg, nullptr, 3, &order);
  REQUIRE(shuffled.points.size() == base.points.size());
  CHECK(base.points.size() == 8);
  for (std::size_t i = 0; i < base.points.size(); ++i) {
    CHECK(shuffled.points[i].mach == base.points[i].mach);
    CHECK(shuffled.points[i].alpha_cmd_deg == base.points[i].alpha_cmd_deg);
    CHECK(shuffled.points[i].p_cmd_deg_s == base.points[i].p_cmd_deg_s);
    CHECK(shuffled.points[i].outcome == base.points[i].outcome);
  }
  CHECK(shuffled.volumes[0].volume == base.volumes[0].volume);
  const std::vector<std::size_t> wrong(3, 0);
  CHECK_THROWS_AS(monte_carlo_sweep(ac, cfg, nullptr, 1, &wrong), ConfigError);
}

TEST_CASE("hull of the unit cube corners") {
  std::vector<Vec3> pts;
  for (int k = 0; k < 8; ++k) pts.emplace_back(k & 1, (k >> 1) & 1, (k >> 2) & 1);
  pts.emplace_back(0.5, 0.5, 0.5);
  pts.emplace_back(0.5, 0.0, 0.5);
  const ConvexHull h = convex_hull(pts);
  CHECK(h.volume == Approx(1.0).epsilon(1e-12));
  CHECK_FALSE(h.degenerate);
  CHECK(h.faces.size() == 12);
}

TEST_CASE("hull of a tetrahedron") {
  CHECK(hull_volume({Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(0, 1, 0), Vec3(0, 0, 1)}) ==
        Approx(1.0 / 6.0).epsilon(1e-12));
}

TEST_CASE("hull volume agrees with Monte Carlo sampling") {
  std::mt19937 rng(31);
  std::normal_distribution<double> g(0.0, 1.0);
  for (int trial = 0; trial < 5; ++trial) {
    std::vector<Vec3> pts;
    for (int k = 0; k < 40; ++k) pts.emplace_back(g(rng), 0.5 * g(rng), 2.0 * g(rng));
    const double exact = hull_volume(pts);
    CHECK(oracle::hull_volume_sampled(pts, 100000, rng) == Approx(exact).epsilon(0.02));
  }
}

TEST_CASE("grid hulls with coplanar faces and degenerate inputs") {
  std::vector<Vec3> grid;
  for (int i = 0; i <= 4; ++i)
    for (int j = 0; j <= 4; ++j)
      for (int k = 0; k <= 2; ++k) grid.emplace_back(0.25 * i, 0.25 * j, 0.5 * k);
  CHECK(hull_volume(grid) == Approx(1.0).epsilon(1e-12));

  std::vector<Vec3> flat;
  for (int i = 0; i <= 4; ++i)
    for (int j = 0; j <= 4; ++j) flat.emplace_back(0.25 * i, 0.25 * j, 0.3);
  const ConvexHull h = convex_hull(flat);
  CHECK(h.degenerate);
  CHECK(h.volume == 0.0);
  CHECK(convex_hull({}).volume == 0.0);
  CHECK(convex_hull({Vec3(1, 2, 3)}).degenerate);
}

TEST_CASE("hull volume never decreases as points are added") {
  std::mt19937 rng(37);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<Vec3> pts;
  double prev = 0.0;
  for (int k = 0; k < 60; ++k) {
    pts.emplace_back(u(rng), u(rng), u(rng));
    const double v = hull_volume(pts);
    CHECK(v >= prev - 1e-15);
    prev = v;
  }
}

TEST_CASE("stable volume is normalized to the unit cube") {
  const SweepConfig cfg = small_sweep();
  std::vector<SweepPoint> pts;
  for (double m : cfg.mach.values())
    for (double a : cfg.alpha_cmd_deg.values())
      for (double p : cfg.p_cmd_deg_s.values()) {
        SweepPoint pt;
        pt.altitude_m = 2000.0;
        pt.mode = GuardMode::kLyapunov;
        pt.mach = m;
        pt.alpha_cmd_deg = a;
        pt.p_cmd_deg_s = p;
        pt.stable = true;
        pt.outcome = Outcome::kStable;
        pts.push_back(pt);
      }
  VolumeReport v = stable_volume(pts, cfg, 2000.0, GuardMode::kLyapunov);
  CHECK(v.volume == Approx(1.0).epsilon(1e-12));
  CHECK(v.stable_points == 8);
  CHECK(v.volume_positive_p == 0.0);
  pts[0].stable = false;
  v = stable_volume(pts, cfg, 2000.0, GuardMode::kLyapunov);
  CHECK(v.volume == Approx(5.0 / 6.0).epsilon(1e-12));
  CHECK(stable_volume(pts, cfg, 0.0, GuardMode::kLyapunov).total_points == 0);
  CHECK(volume_expansion(1.2, 1.0) == Approx(0.2));
  CHECK(std::isnan(volume_expansion(1.0, 0.0)));
}

TEST_CASE("sweep exports round trip") {
  const auto dir = scratch_dir("sweep");
  SweepResult res;
  SweepPoint a;
  a.altitude_m = 3048.0;
  a.mode = GuardMode::kScheduled;
  a.mach = 0.7000000000000001;
  a.alpha_cmd_deg = 1.0 / 3.0;
  a.p_cmd_deg_s = -210.0;
  a.outcome = Outcome::kGuardTerminated;
  SweepPoint b = a;
  b.mode = GuardMode::kLyapunov;
  b.outcome = Outcome::kStable;
  b.stable = true;
  b.error = "trim failed, surfaces beyond limits";
  res.points = {a, b};
  res.volumes = {VolumeReport{3048.0, GuardMode::kLyapunov, 1, 1, 0.9},
                 VolumeReport{3048.0, GuardMode::kScheduled, 1, 1, 0.75}};
  write_sweep_grid(res, dir / "grid.csv");
  const auto back = read_sweep_grid(dir / "grid.csv");
  REQUIRE(back.size() == 2);
  for (std::size_t i = 0; i < 2; ++i) {
    CHECK(back[i].altitude_m == res.points[i].altitude_m);
    CHECK(back[i].mode == res.points[i].mode);
    CHECK(back[i].mach == res.points[i].mach);
    CHECK(back[i].alpha_cmd_deg == res.points[i].alpha_cmd_deg);
    CHECK(back[i].p_cmd_deg_s == res.points[i].p_cmd_deg_s);
    CHECK(back[i].outcome == res.points[i].outcome);
    CHECK(back[i].stable == res.points[i].stable);
  }
  CHECK_FALSE(back[1].error.empty());

  SweepConfig cfg = small_sweep();
  cfg.altitudes_m = {3048.0};
  write_sweep_summary(res, cfg, dir / "summary.json");
  std::ifstream in(dir / "summary.json");
  const auto j = nlohmann::json::parse(in);
  CHECK(j["slices"][0]["expansion"].get<double>() == Approx(0.2));
  CHECK_FALSE(j["empty"].get<bool>());

  write_sweep_summary(SweepResult{}, cfg, dir / "empty.json");
  std::ifstream in2(dir / "empty.json");
  CHECK(nlohmann::json::parse(in2)["empty"].get<bool>());

  CHECK_THROWS_AS(read_sweep_grid(dir / "missing.csv"), IoError);
  std::ofstream(dir / "bad.csv") << "header\n1,2,3\n";
  CHECK_THROWS_AS(read_sweep_grid(dir / "bad.csv"), ConfigError);
}

TEST_CASE("configuration files with errors are rejected") {
  const auto dir = scratch_dir("config");
  std::ifstream in(kData / "scenarios" / "maneuver1.json");
  const auto doc = nlohmann::json::parse(in);
  auto write = [&](const nlohmann::json& j) {
    const auto path = dir / "scenario.json";
    std::ofstream(path) << j.dump();
    return path;
  };
  CHECK_THROWS_AS(load_scenario(dir / "nope.json"), IoError);
  nlohmann::json d = doc;
  d["guard"] = "sometimes";
  CHECK_THROWS_AS(load_scenario(write(d)), ConfigError);
  d = doc;
  d["initial"]["mach"] = 2.0;
  CHECK_THROWS_AS(load_scenario(write(d)), ConfigError);
  d = doc;
  d["commands"]["alpha_deg"]["knots"] = {{2.0, 5.0}, {1.0, 6.0}};
  CHECK_THROWS_AS(load_scenario(write(d)), ConfigError);
  d = doc;
  d["schema"] = "floc-sweep/1";
  CHECK_THROWS_AS(load_scenario(write(d)), ConfigError);

  CHECK_NOTHROW(load_sweep(kData / "sweeps" / "envelope.json"));
  const SweepConfig sweep = load_sweep(kData / "sweeps" / "envelope.json");
  CHECK(sweep.cases_per_altitude() == 21 * 29 * 5);
  CHECK(sweep.mach.values().size() == 5);
  CHECK(sweep.mach.values().back() == Approx(1.0));
}

TEST_CASE("command-line exit codes") {
  const auto dir = scratch_dir("cli");
  const std::string scenario = (kData / "scenarios" / "trim_hold.json").string();
  CHECK(run_cli("trim " + scenario) == 0);
  CHECK(run_cli("--out " + dir.string() + " simulate " + scenario) == 0);
  CHECK(std::filesystem::exists(dir / "trim_hold_lyapunov.csv"));
  CHECK(std::filesystem::exists(dir / "trim_hold_lyapunov_summary.json"));
  CHECK(run_cli("--out " + dir.string() + " ams " + scenario + " --at 0.5") == 0);

  CHECK(run_cli("--guard sideways simulate " + scenario) == 2);
  CHECK(run_cli("frobnicate") == 2);
  CHECK(run_cli("trim --aircraft " + (kData / "f16_surrogate.json").string() + " --mach 3.0") == 2);
  CHECK(run_cli("simulate " + (dir / "absent.json").string()) == 4);

  std::ifstream in(kData / "f16_surrogate.json");
  auto doc = nlohmann::json::parse(in);
  doc["aero"]["coefficients"]["Cm"].push_back({{"c", 0.5}});
  const auto heavy = dir / "nose_up.json";
  std::ofstream(heavy) << doc.dump();
  CHECK(run_cli("trim --aircraft " + heavy.string() + " --mach 0.6 --altitude 0") == 3);
}
