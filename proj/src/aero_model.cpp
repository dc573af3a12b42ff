#include "floc/airframe.hpp"

#include <nlohmann/json.hpp>

#include <cmath>
#include <fstream>
#include <sstream>

namespace floc {

namespace {

const char* const kStateVarNames[AeroModel::kNumStateVars] = {"alpha", "beta", "phat", "qhat",
                                                              "rhat"};
const char* const kCoefficientNames[AeroModel::kNumCoefficients] = {"CD", "CY", "CL",
                                                                    "Cl", "Cm", "Cn"};
constexpr const char* kSchema = "floc-aircraft/1";

inline double ipow(double x, int e) {
  double r = 1.0;
  for (int i = 0; i < e; ++i) r *= x;
  return r;
}

}  // namespace

AeroModel::AeroModel(std::vector<std::string> surface_names, double reference_cg,
                     double alpha_min, double alpha_max, double beta_min, double beta_max)
    : surfaces_(std::move(surface_names)),
      reference_cg_(reference_cg),
      alpha_min_(alpha_min),
      alpha_max_(alpha_max),
      beta_min_(beta_min),
      beta_max_(beta_max) {
  if (!(alpha_min < alpha_max && beta_min < beta_max))
    throw ConfigError("aero: empty validity envelope");
}

int AeroModel::variable_index(const std::string& name) const {
  for (int i = 0; i < kNumStateVars; ++i)
    if (name == kStateVarNames[i]) return i;
  for (int j = 0; j < num_surfaces(); ++j)
    if (name == surfaces_[j]) return kNumStateVars + j;
  return -1;
}

void AeroModel::add_term(Coefficient c, Term term) {
  if (static_cast<int>(term.powers.size()) != num_variables())
    throw ConfigError("aero: term has wrong number of exponents");
  terms_[c].push_back(std::move(term));
}

double AeroModel::evaluate(Coefficient c, std::span<const double> vars) const {
  double sum = 0.0;
  for (const auto& t : terms_[c]) {
    double v = t.coef;
    for (std::size_t k = 0; k < t.powers.size(); ++k)
      if (t.powers[k]) v *= ipow(vars[k], t.powers[k]);
    sum += v;
  }
  return sum;
}

double AeroModel::partial(Coefficient c, std::span<const double> vars, int var) const {
  double sum = 0.0;
  for (const auto& t : terms_[c]) {
    const int e = t.powers[var];
    if (e == 0) continue;
    double v = t.coef * e;
    for (std::size_t k = 0; k < t.powers.size(); ++k) {
      const int ek = static_cast<int>(k) == var ? e - 1 : t.powers[k];
      if (ek) v *= ipow(vars[k], ek);
    }
    sum += v;
  }
  return sum;
}

Aircraft parse_aircraft(const std::string& json_text) {
  using nlohmann::json;
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("aircraft file: ") + e.what());
  }

  try {
    if (doc.value("schema", "") != kSchema)
      throw ConfigError(std::string("aircraft file: expected schema ") + kSchema);

    Aircraft ac;
    ac.name = doc.value("name", "unnamed");

    const auto& af = doc.at("airframe");
    ac.airframe.mass = af.at("mass_kg").get<double>();
    const auto& J = af.at("inertia_kg_m2");
    const double jxz = J.value("Jxz", 0.0);
    ac.airframe.inertia << J.at("Jxx").get<double>(), 0.0, -jxz,  //
        0.0, J.at("Jyy").get<double>(), 0.0,                       //
        -jxz, 0.0, J.at("Jzz").get<double>();
    ac.airframe.wing_area = af.at("wing_area_m2").get<double>();
    ac.airframe.span = af.at("span_m").get<double>();
    ac.airframe.chord = af.at("chord_m").get<double>();
    ac.airframe.x_cg = af.at("x_cg").get<double>();
    ac.airframe.validate();

    std::vector<std::string> names;
    for (const auto& s : doc.at("effectors")) {
      Surface surf;
      surf.name = s.at("name").get<std::string>();
      surf.min_deg = s.at("min_deg").get<double>();
      surf.max_deg = s.at("max_deg").get<double>();
      surf.rate_deg_s = s.at("rate_deg_s").get<double>();
      surf.lag_s = s.value("lag_s", 0.0);
      names.push_back(surf.name);
      ac.effectors.surfaces.push_back(surf);
    }
    ac.effectors.validate();

    const auto& aero = doc.at("aero");
    const auto& env = aero.at("envelope");
    const auto a = env.at("alpha_deg").get<std::array<double, 2>>();
    const auto b = env.at("beta_deg").get<std::array<double, 2>>();
    ac.aero = AeroModel(names, aero.at("reference_cg").get<double>(), a[0] * kDegToRad,
                        a[1] * kDegToRad, b[0] * kDegToRad, b[1] * kDegToRad);

    const auto& coefs = aero.at("coefficients");
    for (int ci = 0; ci < AeroModel::kNumCoefficients; ++ci) {
      const auto it = coefs.find(kCoefficientNames[ci]);
      if (it == coefs.end()) continue;
      for (const auto& jt : *it) {
        AeroModel::Term term;
        term.powers.assign(ac.aero.num_variables(), 0);
        term.coef = jt.at("c").get<double>();
        int angle_power = 0;
        for (const auto& [key, val] : jt.items()) {
          if (key == "c") continue;
          const int idx = ac.aero.variable_index(key);
          if (idx < 0) throw ConfigError("aircraft file: unknown aero variable '" + key + "'");
          const int e = val.get<int>();
          if (e < 0 || e > 8) throw ConfigError("aircraft file: exponent out of range for " + key);
          term.powers[idx] = static_cast<std::uint8_t>(e);
          // alpha, beta and surface deflections are per-degree in the file.
          if (idx <= 1 || idx >= AeroModel::kNumStateVars) angle_power += e;
        }
        term.coef *= std::pow(kRadToDeg, angle_power);
        ac.aero.add_term(static_cast<AeroModel::Coefficient>(ci), std::move(term));
      }
    }
    return ac;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("aircraft file: ") + e.what());
  }
}

Aircraft load_aircraft(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open aircraft file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_aircraft(ss.str());
}

}  // namespace floc
