#include "floc/harness.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

namespace floc {

using nlohmann::json;

namespace {

json read_json(const std::filesystem::path& path, const char* what) {
  std::ifstream in(path);
  if (!in) throw IoError(std::string("cannot open ") + what + " " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

void expect_schema(const json& j, const std::string& schema, const std::filesystem::path& path) {
  if (j.value("schema", std::string()) != schema)
    throw ConfigError(path.string() + ": expected schema " + schema);
}

std::filesystem::path resolve(const std::filesystem::path& base, const json& j, const char* key) {
  if (!j.contains(key)) return {};
  std::filesystem::path p = j.at(key).get<std::string>();
  return p.is_absolute() ? p : (base.parent_path() / p).lexically_normal();
}

Profile parse_profile(const json& j) {
  Profile p;
  const std::string interp = j.value("interp", std::string("step"));
  if (interp == "step") p.interp = Profile::Interp::kStep;
  else if (interp == "linear") p.interp = Profile::Interp::kLinear;
  else throw ConfigError("profile: interp must be step or linear");
  for (const auto& k : j.value("knots", json::array())) {
    if (!k.is_array() || k.size() != 2) throw ConfigError("profile: knots are [t, value] pairs");
    p.knots.push_back({k[0].get<double>(), k[1].get<double>()});
  }
  for (std::size_t i = 1; i < p.knots.size(); ++i)
    if (!(p.knots[i].t > p.knots[i - 1].t)) throw ConfigError("profile: knot times must increase");
  return p;
}

void parse_controller(const json& j, ControllerConfig& c) {
  if (j.is_null()) return;
  auto& g = c.gains;
  g.alpha = j.value("w_alpha", g.alpha);
  g.beta = j.value("w_beta", g.beta);
  g.p = j.value("w_p", g.p);
  g.q = j.value("w_q", g.q);
  g.r = j.value("w_r", g.r);
  c.lyapunov_scale = j.value("lyapunov_scale", c.lyapunov_scale);
  c.authority_fraction = j.value("authority_fraction", c.authority_fraction);
  c.release_delay_s = j.value("release_delay_s", c.release_delay_s);
  c.blend = j.value("blend", c.blend);
  c.allocator.exact_tolerance = j.value("allocator_tolerance", c.allocator.exact_tolerance);
  c.allocator.max_iterations = j.value("allocator_max_iterations", c.allocator.max_iterations);
  g.validate();
  if (!(c.lyapunov_scale > 0.0)) throw ConfigError("controller: lyapunov_scale must be > 0");
  if (!(c.authority_fraction > 0.0 && c.authority_fraction <= 1.0))
    throw ConfigError("controller: authority_fraction must be in (0, 1]");
  if (!(c.release_delay_s >= 0.0)) throw ConfigError("controller: release_delay_s must be >= 0");
}

void parse_classification(const json& j, ClassificationConfig& c) {
  if (j.is_null()) return;
  c.settle_fraction = j.value("settle_fraction", c.settle_fraction);
  c.growth_ratio = j.value("growth_ratio", c.growth_ratio);
  c.rate_floor_deg_s = j.value("rate_floor_deg_s", c.rate_floor_deg_s);
  if (!(c.settle_fraction > 0.0 && c.settle_fraction <= 0.5))
    throw ConfigError("classification: settle_fraction must be in (0, 0.5]");
  if (!(c.growth_ratio >= 1.0)) throw ConfigError("classification: growth_ratio must be >= 1");
}

void parse_divergence(const json& j, DivergenceGuards& d) {
  if (j.is_null()) return;
  d.max_rate_deg_s = j.value("max_rate_deg_s", d.max_rate_deg_s);
  d.max_alpha_deg = j.value("max_alpha_deg", d.max_alpha_deg);
  d.max_load_factor = j.value("max_load_factor", d.max_load_factor);
  d.min_airspeed = j.value("min_airspeed", d.min_airspeed);
}

AxisRange parse_axis(const json& j) {
  AxisRange a{j.at("min").get<double>(), j.at("max").get<double>(), 1};
  if (j.contains("count")) {
    a.count = j.at("count").get<int>();
  } else if (j.contains("step")) {
    const double step = j.at("step").get<double>();
    if (!(step > 0.0)) throw ConfigError("axis: step must be > 0");
    a.count = static_cast<int>(std::lround((a.max - a.min) / step)) + 1;
  }
  if (a.count < 1 || (a.count > 1 && !(a.max > a.min)))
    throw ConfigError("axis: need count >= 1 and max > min");
  return a;
}

const json& optional(const json& j, const char* key) {
  static const json null_json;
  return j.contains(key) ? j.at(key) : null_json;
}

}  // namespace

double Profile::at(double t, double initial) const {
  if (knots.empty() || t < knots.front().t) return initial;
  if (interp == Interp::kStep) {
    auto it = std::upper_bound(knots.begin(), knots.end(), t,
                               [](double x, const Knot& k) { return x < k.t; });
    return std::prev(it)->value;
  }
  if (t >= knots.back().t) return knots.back().value;
  auto it = std::upper_bound(knots.begin(), knots.end(), t,
                             [](double x, const Knot& k) { return x < k.t; });
  const Knot& b = *it;
  const Knot& a = *std::prev(it);
  return a.value + (b.value - a.value) * (t - a.t) / (b.t - a.t);
}

std::vector<double> Profile::reversals(double initial) const {
  std::vector<double> out;
  double prev = initial;
  double prev_slope = 0.0;
  for (const Knot& k : knots) {
    const double slope = k.value - prev;
    if (slope != 0.0) {
      if (prev_slope != 0.0 && (slope > 0.0) != (prev_slope > 0.0)) out.push_back(k.t);
      prev_slope = slope;
    }
    prev = k.value;
  }
  return out;
}

void ManeuverScenario::validate() const {
  if (!(mach >= 0.3 && mach <= 1.2)) throw ConfigError("scenario: Mach must be in [0.3, 1.2]");
  if (!(altitude_m >= 0.0 && altitude_m <= kMaxAtmosphereAltitude))
    throw ConfigError("scenario: altitude outside [0, 20000] m");
  if (!(cg >= 0.2 && cg <= 0.45)) throw ConfigError("scenario: CG outside [0.2, 0.45]");
  if (!(duration_s > 0.0) || !(dt_s > 0.0) || dt_s > duration_s)
    throw ConfigError("scenario: need 0 < dt <= duration");
  for (const Profile* p : {&alpha_deg, &beta_deg, &p_deg_s})
    for (const auto& k : p->knots)
      if (k.t < 0.0 || k.t > duration_s) throw ConfigError("scenario: profile knot outside [0, duration]");
  controller.gains.validate();
}

ManeuverScenario load_scenario(const std::filesystem::path& path) {
  const json j = read_json(path, "scenario file");
  expect_schema(j, "floc-scenario/1", path);
  ManeuverScenario s;
  try {
    s.name = j.value("name", path.stem().string());
    s.aircraft_file = resolve(path, j, "aircraft");
    s.schedule_file = resolve(path, j, "limiter_schedule");
    const json& init = j.at("initial");
    s.mach = init.at("mach").get<double>();
    s.altitude_m = init.at("altitude_m").get<double>();
    s.cg = init.value("cg", s.cg);
    s.duration_s = j.at("duration_s").get<double>();
    s.dt_s = j.value("dt_s", s.dt_s);
    s.guard = parse_guard_mode(j.value("guard", std::string("off")));
    const json& cmd = optional(j, "commands");
    if (!cmd.is_null()) {
      if (cmd.contains("alpha_deg")) s.alpha_deg = parse_profile(cmd.at("alpha_deg"));
      if (cmd.contains("beta_deg")) s.beta_deg = parse_profile(cmd.at("beta_deg"));
      if (cmd.contains("p_deg_s")) s.p_deg_s = parse_profile(cmd.at("p_deg_s"));
    }
    parse_controller(optional(j, "controller"), s.controller);
    parse_classification(optional(j, "classification"), s.classification);
    parse_divergence(optional(j, "divergence"), s.divergence);
  } catch (const json::exception& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  if (s.aircraft_file.empty()) throw ConfigError(path.string() + ": missing aircraft");
  s.validate();
  return s;
}

std::vector<double> AxisRange::values() const {
  std::vector<double> v(count);
  for (int i = 0; i < count; ++i)
    v[i] = count == 1 ? min : min + (max - min) * static_cast<double>(i) / (count - 1);
  return v;
}

void SweepConfig::validate() const {
  if (altitudes_m.empty()) throw ConfigError("sweep: no altitudes");
  if (modes.empty()) throw ConfigError("sweep: no guard modes");
  for (double h : altitudes_m)
    if (!(h >= 0.0 && h <= kMaxAtmosphereAltitude)) throw ConfigError("sweep: altitude out of range");
  if (!(mach.min >= 0.3 && mach.max <= 1.2)) throw ConfigError("sweep: Mach must be in [0.3, 1.2]");
  if (!(step_time_s >= 0.0 && step_time_s < duration_s)) throw ConfigError("sweep: step after end");
  if (!(dt_s > 0.0)) throw ConfigError("sweep: dt must be > 0");
  if (!(cg >= 0.2 && cg <= 0.45)) throw ConfigError("sweep: CG outside [0.2, 0.45]");
}

std::size_t SweepConfig::cases_per_altitude() const {
  return static_cast<std::size_t>(mach.count) * alpha_cmd_deg.count * p_cmd_deg_s.count;
}

SweepConfig load_sweep(const std::filesystem::path& path) {
  const json j = read_json(path, "sweep file");
  expect_schema(j, "floc-sweep/1", path);
  SweepConfig c;
  try {
    c.aircraft_file = resolve(path, j, "aircraft");
    c.schedule_file = resolve(path, j, "limiter_schedule");
    c.cg = j.value("cg", c.cg);
    if (j.contains("altitudes_m")) c.altitudes_m = j.at("altitudes_m").get<std::vector<double>>();
    if (j.contains("mach")) c.mach = parse_axis(j.at("mach"));
    if (j.contains("alpha_cmd_deg")) c.alpha_cmd_deg = parse_axis(j.at("alpha_cmd_deg"));
    if (j.contains("p_cmd_deg_s")) c.p_cmd_deg_s = parse_axis(j.at("p_cmd_deg_s"));
    if (j.contains("modes")) {
      c.modes.clear();
      for (const auto& m : j.at("modes")) c.modes.push_back(parse_guard_mode(m.get<std::string>()));
    }
    c.step_time_s = j.value("step_time_s", c.step_time_s);
    c.duration_s = j.value("duration_s", c.duration_s);
    c.dt_s = j.value("dt_s", c.dt_s);
    parse_controller(optional(j, "controller"), c.controller);
    parse_classification(optional(j, "classification"), c.classification);
    parse_divergence(optional(j, "divergence"), c.divergence);
  } catch (const json::exception& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  if (c.aircraft_file.empty()) throw ConfigError(path.string() + ": missing aircraft");
  c.validate();
  return c;
}

LimiterSchedule load_limiter_schedule(const std::filesystem::path& path) {
  const json j = read_json(path, "limiter schedule");
  expect_schema(j, "floc-limiter/1", path);
  LimiterSchedule s;
  try {
    s.mach = j.at("mach").get<std::vector<double>>();
    s.altitude_m = j.at("altitude_m").get<std::vector<double>>();
    auto table = [&](const char* key) {
      const auto rows = j.at(key).get<std::vector<std::vector<double>>>();
      Eigen::MatrixXd t(rows.size(), rows.empty() ? 0 : rows[0].size());
      for (std::size_t i = 0; i < rows.size(); ++i) {
        if (rows[i].size() != static_cast<std::size_t>(t.cols()))
          throw ConfigError(path.string() + ": ragged table " + key);
        for (std::size_t k = 0; k < rows[i].size(); ++k) t(i, k) = rows[i][k];
      }
      return t;
    };
    s.max_alpha_deg = table("max_alpha_deg");
    s.max_p_deg_s = table("max_p_deg_s");
    s.max_q_deg_s = table("max_q_deg_s");
    s.max_r_deg_s = table("max_r_deg_s");
  } catch (const json::exception& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  s.validate();
  return s;
}

Aircraft load_vehicle(const std::filesystem::path& aircraft_file, double cg) {
  Aircraft ac = load_aircraft(aircraft_file);
  ac.airframe.x_cg = cg;
  ac.airframe.validate();
  return ac;
}

}  // namespace floc
