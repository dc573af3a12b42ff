#include "floc/harness.hpp"

#include <nlohmann/json.hpp>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace floc {

using ojson = nlohmann::ordered_json;

namespace {

std::string num(double v, int digits = 10) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.*g", digits, v);
  return buf;
}

std::ofstream open_out(const std::filesystem::path& path) {
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
    if (ec) throw IoError("cannot create directory " + path.parent_path().string() + ": " + ec.message());
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  return out;
}

void finish(std::ofstream& out, const std::filesystem::path& path) {
  out.flush();
  if (!out) throw IoError("write failed for " + path.string());
}

// JSON numbers cannot hold inf or nan; those become null.
ojson jnum(double v) { return std::isfinite(v) ? ojson(v) : ojson(nullptr); }

ojson jvec(const Vec3& v) { return ojson::array({jnum(v[0]), jnum(v[1]), jnum(v[2])}); }

std::string status_name(AllocationStatus s) {
  switch (s) {
    case AllocationStatus::kExact: return "exact";
    case AllocationStatus::kRelaxed: return "relaxed";
    case AllocationStatus::kError: return "error";
  }
  return "error";
}

std::string clean(std::string s) {
  for (char& c : s)
    if (c == ',' || c == '\n' || c == '\r' || c == '"') c = ';';
  return s;
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

ojson polytope_json(const MomentSetPolytope& set) {
  ojson j;
  j["center"] = jvec(set.center());
  j["generators"] = ojson::array();
  for (int k = 0; k < set.generators().cols(); ++k) j["generators"].push_back(jvec(set.generators().col(k)));
  j["rank"] = set.rank();
  j["volume"] = set.volume();
  j["facets"] = ojson::array();
  for (const Facet& f : set.facets())
    j["facets"].push_back({{"normal", jvec(f.normal)}, {"offset", f.offset}});
  j["vertices"] = ojson::array();
  for (const Vec3& v : set.vertices()) j["vertices"].push_back(jvec(v));
  return j;
}

}  // namespace

void write_run_csv(const RunRecord& rec, const std::filesystem::path& path) {
  std::ofstream out = open_out(path);
  out << "t,V,alpha_deg,beta_deg,p_deg_s,q_deg_s,r_deg_s,phi_deg,theta_deg,psi_deg,north_m,east_m,h_m,nz,"
         "alpha_cmd_deg,beta_cmd_deg,p_cmd_deg_s,q_cmd_deg_s,r_cmd_deg_s,"
         "alpha_guarded_deg,p_guarded_deg_s,q_guarded_deg_s,r_guarded_deg_s";
  for (const auto& n : rec.surface_names) out << ",u_" << n << "_deg";
  for (const auto& n : rec.surface_names) out << ",ucmd_" << n << "_deg";
  out << ",tau_l,tau_m,tau_n,dtau_l,dtau_m,dtau_n,relative_residual,alloc_status,loc_risk,margin,"
         "guard_active,guard_stage,blend,demand_inside,sat_alpha_deg,sat_p_deg_s,sat_q_deg_s,sat_r_deg_s\n";
  const double d = kRadToDeg;
  for (const StepRecord& s : rec.history) {
    const AircraftState& x = s.state;
    out << num(s.t, 8) << ',' << num(x.V) << ',' << num(x.alpha * d) << ',' << num(x.beta * d) << ','
        << num(x.p * d) << ',' << num(x.q * d) << ',' << num(x.r * d) << ',' << num(x.phi * d) << ','
        << num(x.theta * d) << ',' << num(x.psi * d) << ',' << num(x.north) << ',' << num(x.east) << ','
        << num(x.h) << ',' << num(s.nz) << ',' << num(s.pilot.alpha * d) << ',' << num(s.pilot.beta * d)
        << ',' << num(s.pilot.p * d) << ',' << num(s.raw_rates.q * d) << ',' << num(s.raw_rates.r * d)
        << ',' << num(s.guarded_alpha * d) << ',' << num(s.guarded_rates.p * d) << ','
        << num(s.guarded_rates.q * d) << ',' << num(s.guarded_rates.r * d);
    for (int j = 0; j < s.u_deg.size(); ++j) out << ',' << num(s.u_deg[j]);
    for (int j = 0; j < s.u_cmd_deg.size(); ++j) out << ',' << num(s.u_cmd_deg[j]);
    for (int j = 0; j < 3; ++j) out << ',' << num(s.tau_c[j]);
    for (int j = 0; j < 3; ++j) out << ',' << num(s.demand[j]);
    out << ',' << num(s.relative_residual) << ',' << status_name(s.alloc_status) << ',' << int(s.loc_risk)
        << ',' << num(s.margin) << ',' << int(s.guard_active) << ',' << s.guard_stage << ',' << num(s.blend) << ','
        << int(s.demand_inside) << ',' << num(s.limits.alpha * d) << ',' << num(s.limits.p * d) << ','
        << num(s.limits.q * d) << ',' << num(s.limits.r * d) << '\n';
  }
  finish(out, path);
}

void write_run_summary(const RunRecord& rec, const std::filesystem::path& path) {
  const RunSummary& s = rec.summary;
  ojson j;
  j["scenario"] = rec.scenario;
  j["guard"] = to_string(rec.guard);
  j["outcome"] = to_string(s.outcome);
  j["reason"] = s.reason;
  j["completed"] = s.completed;
  j["end_time_s"] = s.end_time;
  j["duration_s"] = s.duration;
  j["trim"] = {{"V_m_s", rec.trim.state.V},
               {"alpha_deg", rec.trim.state.alpha * kRadToDeg},
               {"thrust_N", rec.trim.thrust},
               {"residual", rec.trim.residual}};
  j["peak"] = {{"p_deg_s", s.peak_p * kRadToDeg},
               {"q_deg_s", s.peak_q * kRadToDeg},
               {"r_deg_s", s.peak_r * kRadToDeg},
               {"alpha_deg", s.peak_alpha * kRadToDeg},
               {"nz_g", s.peak_nz}};
  j["max_relative_residual"] = s.max_relative_residual;
  j["first_loc_risk_s"] = s.first_loc_risk >= 0.0 ? ojson(s.first_loc_risk) : ojson(nullptr);
  j["guarded_steps"] = s.guarded_steps;
  j["unguarded_steps_outside_set"] = s.unguarded_outside;
  j["allocation_errors"] = s.allocation_errors;
  std::ofstream out = open_out(path);
  out << j.dump(2) << '\n';
  finish(out, path);
}

void write_sweep_grid(const SweepResult& result, const std::filesystem::path& path) {
  std::ofstream out = open_out(path);
  out << "altitude_m,mode,mach,alpha_cmd_deg,p_cmd_deg_s,outcome,stable,error\n";
  for (const SweepPoint& p : result.points)
    out << num(p.altitude_m, 17) << ',' << to_string(p.mode) << ',' << num(p.mach, 17) << ','
        << num(p.alpha_cmd_deg, 17) << ',' << num(p.p_cmd_deg_s, 17) << ',' << to_string(p.outcome) << ','
        << int(p.stable) << ',' << clean(p.error) << '\n';
  finish(out, path);
}

std::vector<SweepPoint> read_sweep_grid(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open sweep grid " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw ConfigError(path.string() + ": empty file (missing header)");
  std::vector<SweepPoint> out;
  int row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty()) continue;
    const auto c = split(line);
    if (c.size() != 8) throw ConfigError(path.string() + ": row " + std::to_string(row) + " malformed");
    SweepPoint p;
    try {
      p.altitude_m = std::stod(c[0]);
      p.mode = parse_guard_mode(c[1]);
      p.mach = std::stod(c[2]);
      p.alpha_cmd_deg = std::stod(c[3]);
      p.p_cmd_deg_s = std::stod(c[4]);
      p.outcome = parse_outcome(c[5]);
      p.stable = c[6] == "1";
      p.error = c[7];
    } catch (const std::logic_error&) {
      throw ConfigError(path.string() + ": row " + std::to_string(row) + " malformed");
    }
    out.push_back(p);
  }
  return out;
}

void write_sweep_summary(const SweepResult& result, const SweepConfig& cfg,
                         const std::filesystem::path& path) {
  ojson j;
  j["empty"] = result.points.empty();
  j["cases"] = result.points.size();
  j["cases_per_altitude_per_mode"] = cfg.cases_per_altitude();
  j["errors"] = result.errors;
  j["slices"] = ojson::array();
  for (double h : cfg.altitudes_m) {
    ojson slice;
    slice["altitude_m"] = h;
    const VolumeReport* lyap = nullptr;
    const VolumeReport* sched = nullptr;
    slice["modes"] = ojson::array();
    for (const VolumeReport& v : result.volumes) {
      if (v.altitude_m != h) continue;
      if (v.mode == GuardMode::kLyapunov) lyap = &v;
      if (v.mode == GuardMode::kScheduled) sched = &v;
      const double diff = v.volume_positive_p - v.volume_negative_p;
      const double ref = std::max(v.volume_positive_p, v.volume_negative_p);
      std::string direction = "symmetric";
      if (ref > 0.0 && std::abs(diff) > 0.01 * ref) direction = diff > 0 ? "positive p larger" : "negative p larger";
      slice["modes"].push_back({{"mode", to_string(v.mode)},
                                {"stable_points", v.stable_points},
                                {"total_points", v.total_points},
                                {"volume_uc", v.volume},
                                {"degenerate", v.degenerate},
                                {"volume_positive_p_uc", v.volume_positive_p},
                                {"volume_negative_p_uc", v.volume_negative_p},
                                {"asymmetry", direction}});
    }
    if (lyap && sched) {
      const double e = volume_expansion(lyap->volume, sched->volume);
      slice["expansion"] = jnum(e);
      slice["expansion_percent"] = std::isfinite(e) ? ojson(num(100.0 * e, 4) + "%") : ojson(nullptr);
    }
    j["slices"].push_back(slice);
  }
  std::ofstream out = open_out(path);
  out << j.dump(2) << '\n';
  finish(out, path);
}

void write_ams_snapshot(const AmsSnapshot& snap, const std::filesystem::path& path) {
  ojson j;
  j["t"] = snap.t;
  j["demand"] = jvec(snap.demand);
  j["loc_risk"] = snap.loc_risk;
  j["margin"] = jnum(snap.margin);
  j["set"] = polytope_json(snap.set);
  j["shrunk"] = polytope_json(snap.shrunk);
  std::ofstream out = open_out(path);
  out << j.dump(2) << '\n';
  finish(out, path);
}

std::string trim_report(const Aircraft& ac, const TrimResult& trim) {
  std::ostringstream o;
  const AtmosphereState atm = atmosphere(trim.state.h);
  o << "aircraft      " << ac.name << '\n'
    << "altitude      " << num(trim.state.h) << " m\n"
    << "mach          " << num(trim.state.V / atm.speed_of_sound, 6) << '\n'
    << "airspeed      " << num(trim.state.V) << " m/s\n"
    << "alpha         " << num(trim.state.alpha * kRadToDeg) << " deg\n"
    << "thrust        " << num(trim.thrust) << " N\n";
  for (int j = 0; j < ac.num_surfaces(); ++j)
    o << "surface " << std::left << std::setw(6) << ac.effectors.surfaces[j].name << num(trim.actuators.position_deg[j])
      << " deg\n";
  o << "residual      " << num(trim.residual, 3) << " (" << trim.iterations << " iterations)\n";
  return o.str();
}

}  // namespace floc
