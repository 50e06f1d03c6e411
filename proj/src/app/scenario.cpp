#include "app/scenario.hpp"

#include "common/error.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

namespace stlcbf::app {

namespace {

using nlohmann::json;

Vector to_vector(const json& j, const std::string& what) {
  if (!j.is_array()) throw ScenarioError(what + " must be an array of numbers");
  Vector v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_number()) throw ScenarioError(what + " must be an array of numbers");
    v[static_cast<Eigen::Index>(i)] = j[i].get<double>();
  }
  return v;
}

stl::Matrix to_matrix(const json& j, const std::string& what) {
  if (!j.is_array() || j.empty()) throw ScenarioError(what + " must be a nonempty array of rows");
  const Vector first = to_vector(j[0], what);
  stl::Matrix m(static_cast<Eigen::Index>(j.size()), first.size());
  for (std::size_t r = 0; r < j.size(); ++r) {
    const Vector row = to_vector(j[r], what);
    if (row.size() != m.cols()) throw ScenarioError(what + " has ragged rows");
    m.row(static_cast<Eigen::Index>(r)) = row.transpose();
  }
  return m;
}

double number(const json& j, const char* key, double fallback) {
  if (!j.contains(key)) return fallback;
  if (!j.at(key).is_number()) throw ScenarioError(std::string("'") + key + "' must be a number");
  return j.at(key).get<double>();
}

AgentSpec parse_agent(const json& ja) {
  AgentSpec a;
  if (!ja.contains("id") || !ja.at("id").is_string()) throw ScenarioError("every agent needs a string 'id'");
  a.id = ja.at("id").get<std::string>();
  if (a.id.empty() || a.id == "x") throw ScenarioError("agent id '" + a.id + "' is reserved or empty");
  if (!ja.contains("dim") || !ja.at("dim").is_number_integer() || ja.at("dim").get<long>() <= 0) {
    throw ScenarioError("agent " + a.id + ": 'dim' must be a positive integer");
  }
  a.dim = ja.at("dim").get<Eigen::Index>();
  a.dynamics_json = ja.value("dynamics", json{{"type", "single_integrator"}});
  const std::string type = a.dynamics_json.value("type", "single_integrator");
  try {
    if (type == "single_integrator") {
      a.dynamics = control::Dynamics::single_integrator(a.dim);
    } else if (type == "linear") {
      const auto& d = a.dynamics_json;
      stl::Matrix A = d.contains("A") ? to_matrix(d.at("A"), "agent " + a.id + " A")
                                      : stl::Matrix::Zero(a.dim, a.dim);
      Vector a0 = d.contains("a0") ? to_vector(d.at("a0"), "agent " + a.id + " a0") : Vector::Zero(a.dim);
      stl::Matrix B = d.contains("B") ? to_matrix(d.at("B"), "agent " + a.id + " B")
                                      : stl::Matrix::Identity(a.dim, a.dim);
      a.dynamics = control::Dynamics::linear(std::move(A), std::move(a0), std::move(B));
    } else {
      throw ScenarioError("agent " + a.id + ": unknown dynamics type '" + type + "'");
    }
  } catch (const std::invalid_argument& e) {
    throw ScenarioError("agent " + a.id + ": " + e.what());
  }
  if (a.dynamics.state_dim() != a.dim) throw ScenarioError("agent " + a.id + ": dynamics do not match 'dim'");
  if (!ja.contains("x0")) throw ScenarioError("agent " + a.id + ": missing 'x0'");
  a.x0 = to_vector(ja.at("x0"), "agent " + a.id + " x0");
  if (a.x0.size() != a.dim) throw ScenarioError("agent " + a.id + ": x0 has the wrong length");
  return a;
}

GroupSpec parse_group(const json& jg, std::size_t index, const std::vector<AgentSpec>& agents,
                      std::set<std::string>& used) {
  GroupSpec g;
  g.raw = jg;
  g.name = jg.value("name", "g" + std::to_string(index + 1));
  if (!jg.contains("agents") || !jg.at("agents").is_array() || jg.at("agents").empty()) {
    throw ScenarioError("group " + g.name + ": 'agents' must be a nonempty array");
  }
  Eigen::Index offset = 0;
  for (const auto& jid : jg.at("agents")) {
    const std::string id = jid.get<std::string>();
    std::size_t k = agents.size();
    for (std::size_t i = 0; i < agents.size(); ++i) {
      if (agents[i].id == id) k = i;
    }
    if (k == agents.size()) throw ScenarioError("group " + g.name + " references unknown agent '" + id + "'");
    if (!used.insert(id).second) throw ScenarioError("agent '" + id + "' belongs to more than one group");
    g.agents.push_back(id);
    g.agent_indices.push_back(k);
    g.layout.slices[id] = stl::Slice{offset, agents[k].dim};
    offset += agents[k].dim;
  }
  g.layout.dim = offset;
  if (jg.contains("slices")) {
    for (const auto& [name, js] : jg.at("slices").items()) {
      if (name == "x" || g.layout.slices.count(name) != 0) {
        throw ScenarioError("group " + g.name + ": slice name '" + name + "' is already taken");
      }
      const std::string agent = js.at("agent").get<std::string>();
      auto it = g.layout.slices.find(agent);
      if (it == g.layout.slices.end()) {
        throw ScenarioError("group " + g.name + ": slice '" + name + "' references agent '" + agent +
                            "' outside the group");
      }
      const auto start = js.value("start", Eigen::Index{0});
      const auto length = js.value("length", it->second.length - start);
      if (start < 0 || length <= 0 || start + length > it->second.length) {
        throw ScenarioError("group " + g.name + ": slice '" + name + "' is out of range");
      }
      g.layout.slices[name] = stl::Slice{it->second.offset + start, length};
    }
  }
  if (!jg.contains("formula") || !jg.at("formula").is_string()) {
    throw ScenarioError("group " + g.name + ": missing 'formula'");
  }
  g.formula_text = jg.at("formula").get<std::string>();
  try {
    g.formula = stl::parse_formula(g.formula_text, g.layout);
  } catch (const ParseError& e) {
    throw ScenarioError("group " + g.name + ": " + e.what());
  }
  g.specs = barrier::decompose(g.formula);
  if (g.specs.empty()) throw ScenarioError("group " + g.name + ": formula has no non-trivial predicate");
  for (const auto& s : g.specs) {
    if (s.predicate.optimum() < 0.0) {
      char buf[64];
      std::snprintf(buf, sizeof(buf), "%g", s.predicate.optimum());
      throw ScenarioError("group " + g.name + ": predicate " + stl::print(s.predicate) +
                          " is not satisfiable (h_opt = " + buf + " < 0)");
    }
  }
  g.C = number(jg, "C", 0.0);
  g.chi = number(jg, "chi", 0.0);
  g.epsilon_margin = number(jg, "epsilon_margin", 0.01);
  if (g.C < 0.0 || g.chi < 0.0) throw ScenarioError("group " + g.name + ": C and chi must be nonnegative");
  if (jg.contains("kappa") && !(jg.at("kappa").is_string() && jg.at("kappa").get<std::string>() == "auto")) {
    if (!jg.at("kappa").is_number()) throw ScenarioError("group " + g.name + ": 'kappa' must be a number or \"auto\"");
    g.kappa = jg.at("kappa").get<double>();
    if (*g.kappa < 0.0) throw ScenarioError("group " + g.name + ": kappa must be nonnegative");
  }
  if (jg.contains("fixed_parameters")) {
    const auto& jf = jg.at("fixed_parameters");
    FixedParameters f;
    f.eta = number(jf, "eta", 1.0);
    f.D = number(jf, "D", 0.0);
    f.r = number(jf, "r", 0.0);
    f.gamma0 = to_vector(jf.at("gamma0"), "group " + g.name + " gamma0");
    f.gamma_inf = to_vector(jf.at("gamma_inf"), "group " + g.name + " gamma_inf");
    const auto n = static_cast<Eigen::Index>(g.specs.size());
    if (f.gamma0.size() != n || f.gamma_inf.size() != n) {
      throw ScenarioError("group " + g.name + ": fixed gamma vectors need " + std::to_string(n) + " entries");
    }
    g.fixed = f;
  }
  return g;
}

synthesis::Bounds parse_bounds(const json& jb) {
  synthesis::Bounds b;
  b.eta_min = number(jb, "eta_min", b.eta_min);
  b.eta_max = number(jb, "eta_max", b.eta_max);
  b.D_min = number(jb, "D_min", b.D_min);
  b.D_max = number(jb, "D_max", b.D_max);
  b.gamma0_span = number(jb, "gamma0_span", b.gamma0_span);
  b.gamma_inf_cap = number(jb, "gamma_inf_cap", b.gamma_inf_cap);
  b.r_max = number(jb, "r_max", b.r_max);
  if (!(b.eta_min > 0.0) || b.eta_max < b.eta_min) throw ScenarioError("synthesis bounds: need 0 < eta_min <= eta_max");
  if (!(b.gamma0_span > 0.0)) throw ScenarioError("synthesis bounds: gamma0_span must be positive");
  return b;
}

}  // namespace

std::string fnv1a_hex(const std::string& text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

Vector stack_group(const GroupSpec& group, const std::vector<Vector>& per_agent) {
  Vector x(group.layout.dim);
  for (std::size_t k = 0; k < group.agents.size(); ++k) {
    const auto& slot = group.layout.slices.at(group.agents[k]);
    x.segment(slot.offset, slot.length) = per_agent.at(group.agent_indices[k]);
  }
  return x;
}

Scenario parse_scenario(const json& doc) {
  if (!doc.is_object()) throw ScenarioError("scenario must be a JSON object");
  Scenario sc;
  try {
    sc.name = doc.value("name", "scenario");
    if (!doc.contains("agents") || !doc.at("agents").is_array() || doc.at("agents").empty()) {
      throw ScenarioError("'agents' must be a nonempty array");
    }
    std::set<std::string> ids;
    for (const auto& ja : doc.at("agents")) {
      sc.agents.push_back(parse_agent(ja));
      if (!ids.insert(sc.agents.back().id).second) throw ScenarioError("duplicate agent id '" + sc.agents.back().id + "'");
    }
    if (!doc.contains("groups") || !doc.at("groups").is_array() || doc.at("groups").empty()) {
      throw ScenarioError("'groups' must be a nonempty array");
    }
    std::set<std::string> used;
    std::set<std::string> names;
    for (std::size_t i = 0; i < doc.at("groups").size(); ++i) {
      sc.groups.push_back(parse_group(doc.at("groups")[i], i, sc.agents, used));
      if (!names.insert(sc.groups.back().name).second) throw ScenarioError("duplicate group name");
    }

    const json jc = doc.value("coupling", json{{"type", "none"}});
    const std::string ctype = jc.value("type", "none");
    if (ctype == "repulsive") {
      sc.coupling.kind = sim::Coupling::Kind::kRepulsive;
      sc.coupling.radius = number(jc, "radius", 0.65);
      sc.coupling.gain = number(jc, "gain", 0.05);
      sc.coupling.position_dims = jc.value("position_dims", Eigen::Index{2});
      if (!(sc.coupling.radius > 0.0) || sc.coupling.gain < 0.0) throw ScenarioError("coupling: invalid radius or gain");
    } else if (ctype != "none") {
      throw ScenarioError("coupling: unknown type '" + ctype + "'");
    }

    const json jd = doc.value("disturbance", json::object());
    sc.disturbance.bound = number(jd, "bound", 0.0);
    sc.disturbance.seed = jd.value("seed", std::uint64_t{0});
    if (sc.disturbance.bound < 0.0) throw ScenarioError("disturbance bound must be nonnegative");
    for (const auto& g : sc.groups) {
      if (sc.disturbance.bound > g.C) {
        throw ScenarioError("disturbance bound exceeds C of group " + g.name);
      }
    }

    const json jt = doc.value("timing", json::object());
    sc.timing.sim_dt = number(jt, "sim_dt", 0.002);
    sc.timing.control_rate = number(jt, "control_rate", 50.0);
    if (!(sc.timing.sim_dt > 0.0) || !(sc.timing.control_rate > 0.0)) throw ScenarioError("timing must be positive");
    if (sc.timing.sim_dt > 1.0 / sc.timing.control_rate * (1.0 + 1e-9)) {
      throw ScenarioError("sim_dt must not exceed the control period");
    }
    double last = 0.0;
    for (const auto& g : sc.groups) last = std::max(last, barrier::switching_times(g.specs).back());
    sc.timing.horizon = number(jt, "horizon", last);
    if (sc.timing.horizon < last - 1e-9 * std::max(1.0, last)) {
      char buf[128];
      std::snprintf(buf, sizeof(buf), "horizon %g is shorter than the last switching time %g", sc.timing.horizon,
                    last);
      throw ScenarioError(buf);
    }

    const json js = doc.value("synthesis", json::object());
    auto& ss = sc.synthesis;
    ss.mode = js.value("mode", "maximize_r");
    if (ss.mode != "maximize_r" && ss.mode != "feasibility" && ss.mode != "fixed") {
      throw ScenarioError("synthesis: unknown mode '" + ss.mode + "'");
    }
    ss.r = number(js, "r", 0.0);
    if (ss.mode == "feasibility" && !(ss.r > 0.0)) throw ScenarioError("synthesis: feasibility mode needs r > 0");
    if (ss.mode == "fixed") {
      for (const auto& g : sc.groups) {
        if (!g.fixed) throw ScenarioError("synthesis mode 'fixed' needs fixed_parameters in group " + g.name);
      }
    }
    ss.restarts = js.value("restarts", 32);
    ss.max_evaluations = js.value("max_evaluations", 2500);
    ss.seed = js.value("seed", std::uint64_t{1});
    if (ss.restarts < 1 || ss.max_evaluations < 1) throw ScenarioError("synthesis: restarts and budget must be positive");
    ss.bounds = parse_bounds(js.value("bounds", json::object()));
    for (const auto& a : sc.agents) ss.x0.push_back(a.x0);
    if (js.contains("x0")) {
      for (const auto& [id, jv] : js.at("x0").items()) {
        std::size_t k = sc.agents.size();
        for (std::size_t i = 0; i < sc.agents.size(); ++i) {
          if (sc.agents[i].id == id) k = i;
        }
        if (k == sc.agents.size()) throw ScenarioError("synthesis x0 references unknown agent '" + id + "'");
        ss.x0[k] = to_vector(jv, "synthesis x0 of " + id);
        if (ss.x0[k].size() != sc.agents[k].dim) throw ScenarioError("synthesis x0 of " + id + " has the wrong length");
      }
    }

    // Parameters depend on agents' dynamics, the groups, and the synthesis section.
    json key = json::object();
    json jag = json::array();
    for (std::size_t i = 0; i < sc.agents.size(); ++i) {
      const auto& a = sc.agents[i];
      std::vector<double> x0(ss.x0[i].data(), ss.x0[i].data() + ss.x0[i].size());
      jag.push_back({{"id", a.id}, {"dim", a.dim}, {"dynamics", a.dynamics_json}, {"synthesis_x0", x0}});
    }
    key["agents"] = jag;
    key["groups"] = doc.at("groups");
    json jsyn = js;
    jsyn.erase("x0");
    key["synthesis"] = jsyn;
    sc.hash = fnv1a_hex(key.dump());
  } catch (const json::exception& e) {
    throw ScenarioError(std::string("malformed scenario: ") + e.what());
  }
  return sc;
}

Scenario load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ScenarioError("cannot open scenario file '" + path + "'");
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::exception& e) {
    throw ScenarioError("scenario file '" + path + "' is not valid JSON: " + e.what());
  }
  return parse_scenario(doc);
}

}  // namespace stlcbf::app
