#include "app/pipeline.hpp"

#include "common/error.hpp"
#include "stl/monitor.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <sstream>

namespace stlcbf::app {

namespace {

using nlohmann::json;

constexpr double kInf = std::numeric_limits<double>::infinity();

json finite_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }
double from_nullable(const json& j, double fallback) { return j.is_null() ? fallback : j.get<double>(); }

std::vector<double> to_std(const Vector& v) { return std::vector<double>(v.data(), v.data() + v.size()); }
Vector from_std(const std::vector<double>& v) {
  return Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size()));
}

synthesis::SynthesisProblem make_problem(const Scenario& sc, const GroupSpec& g, const SynthOptions& opt) {
  synthesis::SynthesisProblem p;
  p.specs = g.specs;
  p.x0 = stack_group(g, sc.synthesis.x0);
  p.dim = g.layout.dim;
  p.chi = g.chi;
  p.bounds = sc.synthesis.bounds;
  p.restarts = sc.synthesis.restarts;
  p.max_evaluations = sc.synthesis.max_evaluations;
  p.seed = opt.seed.value_or(sc.synthesis.seed);
  if (opt.feasibility_r) {
    p.mode = synthesis::Mode::kFeasibility;
    p.fixed_r = *opt.feasibility_r;
  } else if (sc.synthesis.mode == "feasibility") {
    p.mode = synthesis::Mode::kFeasibility;
    p.fixed_r = sc.synthesis.r;
  } else {
    p.mode = synthesis::Mode::kMaximizeR;
  }
  return p;
}

std::string fmt_short(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.4g", v);
  return buf;
}

}  // namespace

bool ParamsFile::feasible() const {
  if (groups.empty()) return false;
  for (const auto& g : groups) {
    if (!g.result.feasible) return false;
  }
  return true;
}

double ParamsFile::r() const {
  double r = kInf;
  for (const auto& g : groups) r = std::min(r, g.result.r);
  return groups.empty() ? 0.0 : r;
}

ParamsFile synthesize_scenario(const Scenario& sc, const SynthOptions& opt) {
  ParamsFile out;
  out.scenario_hash = sc.hash;
  out.mode = opt.feasibility_r ? "feasibility" : sc.synthesis.mode;
  for (const auto& g : sc.groups) {
    const auto problem = make_problem(sc, g, opt);
    synthesis::SynthesisResult res;
    try {
      if (sc.synthesis.mode == "fixed" && !opt.feasibility_r) {
        const auto& f = *g.fixed;
        res.eta = f.eta;
        res.D = f.D > 0.0 ? f.D : synthesis::default_state_bound(problem);
        res.r = f.r;
        res.gamma0 = f.gamma0;
        res.gamma_inf = f.gamma_inf;
        res.xi_times = barrier::deadline_times(problem.specs);
        res.report = synthesis::verify_candidate(res, problem);
        res.feasible = res.report.feasible;
      } else {
        res = synthesis::synthesize(problem);
      }
    } catch (const SpecError& e) {
      throw ScenarioError("group " + g.name + ": " + e.what());
    }
    res.epsilon_margin = g.epsilon_margin;
    std::string source = "explicit";
    if (g.kappa) {
      res.kappa = *g.kappa;
    } else {
      source = "auto";
      if (!(g.chi > 0.0)) throw ScenarioError("group " + g.name + ": automatic kappa needs chi > 0");
      res.kappa = res.feasible ? synthesis::select_kappa(res, problem, g.epsilon_margin) : 0.0;
    }
    std::optional<barrier::CompositeBarrier> b;
    try {
      b.emplace(res.barrier(problem));
    } catch (const std::invalid_argument& e) {
      throw ScenarioError("group " + g.name + ": " + e.what());
    }
    out.groups.push_back(GroupParameters{g.name, std::move(res), std::move(*b), g.chi, source});
  }
  return out;
}

json params_to_json(const ParamsFile& p) {
  json groups = json::array();
  for (const auto& g : p.groups) {
    const auto& r = g.result;
    json constraints = json::array();
    for (const auto& c : r.report.constraints) {
      constraints.push_back(
          {{"name", c.name}, {"slack", finite_or_null(c.slack)}, {"strict", c.strict}, {"satisfied", c.satisfied()}});
    }
    json xi = json::array();
    for (const auto& v : r.xi) xi.push_back(to_std(v));
    groups.push_back({{"name", g.name},
                      {"feasible", r.feasible},
                      {"r", r.r},
                      {"eta", r.eta},
                      {"D", r.D},
                      {"gamma0", to_std(r.gamma0)},
                      {"gamma_inf", to_std(r.gamma_inf)},
                      {"kappa", finite_or_null(r.kappa)},
                      {"kappa_source", g.kappa_source},
                      {"epsilon_margin", r.epsilon_margin},
                      {"chi", g.chi},
                      {"xi", xi},
                      {"xi_times", r.xi_times},
                      {"constraints", constraints},
                      {"note", r.report.note},
                      {"barrier", g.barrier.to_json()}});
  }
  return {{"scenario_hash", p.scenario_hash},
          {"mode", p.mode},
          {"feasible", p.feasible()},
          {"r", p.r()},
          {"groups", groups}};
}

ParamsFile params_from_json(const json& j) {
  ParamsFile p;
  try {
    p.scenario_hash = j.at("scenario_hash").get<std::string>();
    p.mode = j.value("mode", "");
    for (const auto& jg : j.at("groups")) {
      synthesis::SynthesisResult r;
      r.feasible = jg.at("feasible").get<bool>();
      r.r = jg.at("r").get<double>();
      r.eta = jg.at("eta").get<double>();
      r.D = jg.at("D").get<double>();
      r.gamma0 = from_std(jg.at("gamma0").get<std::vector<double>>());
      r.gamma_inf = from_std(jg.at("gamma_inf").get<std::vector<double>>());
      r.kappa = from_nullable(jg.at("kappa"), kInf);
      r.epsilon_margin = jg.value("epsilon_margin", 0.0);
      for (const auto& v : jg.value("xi", json::array())) r.xi.push_back(from_std(v.get<std::vector<double>>()));
      r.xi_times = jg.value("xi_times", std::vector<double>{});
      for (const auto& c : jg.value("constraints", json::array())) {
        r.report.constraints.push_back(
            {c.at("name").get<std::string>(), from_nullable(c.at("slack"), kInf), c.value("strict", false)});
      }
      r.report.feasible = r.feasible;
      r.report.note = jg.value("note", "");
      p.groups.push_back(GroupParameters{jg.at("name").get<std::string>(), std::move(r),
                                         barrier::CompositeBarrier::from_json(jg.at("barrier")),
                                         jg.value("chi", 0.0), jg.value("kappa_source", "explicit")});
    }
  } catch (const json::exception& e) {
    throw ScenarioError(std::string("malformed parameter file: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw ScenarioError(std::string("malformed parameter file: ") + e.what());
  }
  return p;
}

void save_params(const ParamsFile& params, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write '" + path + "'");
  out << params_to_json(params).dump(2) << "\n";
}

ParamsFile load_params(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ScenarioError("cannot open parameter file '" + path + "'");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw ScenarioError("parameter file '" + path + "' is not valid JSON: " + e.what());
  }
  return params_from_json(j);
}

sim::Trajectory simulate_scenario(const Scenario& sc, const ParamsFile& params, std::optional<std::uint64_t> seed) {
  if (params.scenario_hash != sc.hash) {
    throw ParamsMismatch("parameter file was produced for scenario hash " + params.scenario_hash +
                         ", but this scenario hashes to " + sc.hash + "; re-run synth");
  }
  if (params.groups.size() != sc.groups.size()) throw ParamsMismatch("parameter file has the wrong number of groups");
  std::vector<control::AgentModel> agents;
  std::vector<Vector> x0;
  for (const auto& a : sc.agents) {
    agents.push_back({a.id, a.dynamics});
    x0.push_back(a.x0);
  }
  std::vector<sim::GroupBinding> bindings;
  for (std::size_t gi = 0; gi < sc.groups.size(); ++gi) {
    const auto& g = sc.groups[gi];
    const auto& gp = params.groups[gi];
    if (gp.name != g.name || gp.barrier.dim() != g.layout.dim) {
      throw ParamsMismatch("parameter group '" + gp.name + "' does not match scenario group '" + g.name + "'");
    }
    if (!std::isfinite(gp.result.kappa)) {
      throw ScenarioError("group " + g.name + ": kappa is not finite; set an explicit kappa");
    }
    std::vector<control::AgentModel> members;
    std::vector<control::AgentSlot> layout;
    for (std::size_t k = 0; k < g.agents.size(); ++k) {
      members.push_back(agents[g.agent_indices[k]]);
      const auto& slot = g.layout.slices.at(g.agents[k]);
      layout.push_back({k, slot.offset, slot.length});
    }
    control::TaskGroup tg{std::move(members), std::move(layout), gp.barrier, g.C, gp.result.kappa};
    bindings.push_back({g.name, std::move(tg), g.agent_indices});
  }
  sim::Disturbance dist = sc.disturbance;
  if (seed) dist.seed = *seed;
  sim::Simulator simulator(std::move(agents), std::move(x0), std::move(bindings), sc.coupling, dist, sc.timing);
  return simulator.run();
}

std::optional<std::size_t> Table::column(const std::string& name) const {
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == name) return i;
  }
  return std::nullopt;
}

std::vector<double> Table::series(std::size_t col) const {
  std::vector<double> out;
  out.reserve(rows.size());
  for (const auto& r : rows) out.push_back(r.at(col));
  return out;
}

Table trajectory_table(const sim::Trajectory& traj) {
  Table t;
  t.header.push_back("t");
  for (std::size_t i = 0; i < traj.agent_ids.size(); ++i) {
    for (Eigen::Index k = 0; k < traj.state_dims[i]; ++k) t.header.push_back("x_" + traj.agent_ids[i] + "_" + std::to_string(k));
  }
  for (std::size_t i = 0; i < traj.agent_ids.size(); ++i) {
    for (Eigen::Index k = 0; k < traj.input_dims[i]; ++k) t.header.push_back("u_" + traj.agent_ids[i] + "_" + std::to_string(k));
  }
  for (const auto& g : traj.group_names) t.header.push_back("b_" + g);
  for (const auto& g : traj.group_names) t.header.push_back("slack_" + g);
  t.rows.reserve(traj.times.size());
  for (std::size_t n = 0; n < traj.times.size(); ++n) {
    std::vector<double> row;
    row.reserve(t.header.size());
    row.push_back(traj.times[n]);
    for (Eigen::Index k = 0; k < traj.states[n].size(); ++k) row.push_back(traj.states[n][k]);
    for (Eigen::Index k = 0; k < traj.inputs[n].size(); ++k) row.push_back(traj.inputs[n][k]);
    for (double b : traj.barrier[n]) row.push_back(b);
    for (double s : traj.slack[n]) row.push_back(s);
    t.rows.push_back(std::move(row));
  }
  return t;
}

std::string table_to_csv(const Table& table) {
  std::string out;
  for (std::size_t i = 0; i < table.header.size(); ++i) {
    if (i > 0) out += ',';
    out += table.header[i];
  }
  out += '\n';
  char buf[40];
  for (const auto& row : table.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i > 0) out += ',';
      std::snprintf(buf, sizeof(buf), "%.12g", row[i]);
      out += buf;
    }
    out += '\n';
  }
  return out;
}

void write_csv(const Table& table, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write '" + path + "'");
  out << table_to_csv(table);
}

Table parse_csv(const std::string& text) {
  Table t;
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line.empty()) throw ScenarioError("trajectory CSV is empty");
  {
    std::stringstream hs(line);
    std::string cell;
    while (std::getline(hs, cell, ',')) t.header.push_back(cell);
  }
  if (t.header.empty() || t.header.front() != "t") throw ScenarioError("trajectory CSV must start with a 't' column");
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<double> row;
    row.reserve(t.header.size());
    const char* p = line.c_str();
    while (true) {
      char* end = nullptr;
      const double v = std::strtod(p, &end);
      if (end == p) throw ScenarioError("malformed number in trajectory CSV line " + std::to_string(lineno));
      row.push_back(v);
      if (*end == ',') {
        p = end + 1;
      } else if (*end == '\0' || *end == '\r') {
        break;
      } else {
        throw ScenarioError("malformed trajectory CSV line " + std::to_string(lineno));
      }
    }
    if (row.size() != t.header.size()) {
      throw ScenarioError("trajectory CSV line " + std::to_string(lineno) + " has " + std::to_string(row.size()) +
                          " fields, expected " + std::to_string(t.header.size()));
    }
    if (!t.rows.empty() && !(row[0] > t.rows.back()[0])) {
      throw ScenarioError("trajectory CSV times must be strictly increasing (line " + std::to_string(lineno) + ")");
    }
    t.rows.push_back(std::move(row));
  }
  if (t.rows.size() < 2) throw ScenarioError("trajectory CSV needs at least two samples");
  return t;
}

Table read_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ScenarioError("cannot open trajectory '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_csv(ss.str());
}

json MonitorReport::to_json() const {
  json entries_json = json::array();
  for (const auto& e : entries) {
    entries_json.push_back({{"name", e.name}, {"rho", finite_or_null(e.rho)}, {"satisfied", e.satisfied}});
  }
  return {{"t", t}, {"rho", finite_or_null(rho)}, {"satisfied", rho > 0.0}, {"formulas", entries_json}};
}

namespace {

stl::Signal signal_from(const Table& table, const std::vector<std::size_t>& cols) {
  std::vector<double> times;
  std::vector<Vector> values;
  times.reserve(table.rows.size());
  values.reserve(table.rows.size());
  for (const auto& row : table.rows) {
    times.push_back(row[0]);
    Vector v(static_cast<Eigen::Index>(cols.size()));
    for (std::size_t i = 0; i < cols.size(); ++i) v[static_cast<Eigen::Index>(i)] = row[cols[i]];
    values.push_back(std::move(v));
  }
  return stl::Signal(std::move(times), std::move(values));
}

std::size_t require_column(const Table& table, const std::string& name) {
  auto c = table.column(name);
  if (!c) throw ScenarioError("trajectory has no column '" + name + "'");
  return *c;
}

}  // namespace

MonitorReport monitor_scenario(const Table& table, const Scenario& sc, double t) {
  MonitorReport rep;
  rep.t = t;
  rep.rho = kInf;
  for (const auto& g : sc.groups) {
    std::vector<std::size_t> cols;
    for (std::size_t k = 0; k < g.agents.size(); ++k) {
      const auto& a = sc.agents[g.agent_indices[k]];
      for (Eigen::Index c = 0; c < a.dim; ++c) cols.push_back(require_column(table, "x_" + a.id + "_" + std::to_string(c)));
    }
    const double rho = stl::eval_robust(g.formula, signal_from(table, cols), t);
    rep.entries.push_back({g.name, rho, rho > 0.0});
    rep.rho = std::min(rep.rho, rho);
  }
  return rep;
}

MonitorReport monitor_formula(const Table& table, const std::string& formula, double t) {
  stl::StateLayout layout;
  std::vector<std::size_t> cols;
  for (std::size_t i = 0; i < table.header.size(); ++i) {
    const auto& h = table.header[i];
    if (h.rfind("x_", 0) != 0) continue;
    const auto us = h.rfind('_');
    if (us == std::string::npos || us <= 2) continue;
    const std::string id = h.substr(2, us - 2);
    auto& slice = layout.slices[id];
    if (slice.length == 0) slice.offset = static_cast<Eigen::Index>(cols.size());
    ++slice.length;
    cols.push_back(i);
  }
  if (cols.empty()) throw ScenarioError("trajectory has no state columns");
  layout.dim = static_cast<Eigen::Index>(cols.size());
  const stl::Formula f = stl::parse_formula(formula, layout);
  MonitorReport rep;
  rep.t = t;
  rep.rho = stl::eval_robust(f, signal_from(table, cols), t);
  rep.entries.push_back({formula, rep.rho, rep.rho > 0.0});
  return rep;
}

json Summary::to_json() const {
  return {{"r", r},
          {"rho_at_0", rho_at_0 ? finite_or_null(*rho_at_0) : json(nullptr)},
          {"min_b_after_recovery", finite_or_null(min_b_after_recovery)},
          {"recovery_time", recovery_time ? json(*recovery_time) : json(nullptr)},
          {"infeasible_steps", infeasible_steps},
          {"seed", seed},
          {"min_distance", finite_or_null(min_distance)},
          {"aborted", aborted}};
}

Summary summarize(const sim::Trajectory& traj, const ParamsFile& params, const Scenario& sc) {
  Summary s;
  s.r = params.r();
  s.infeasible_steps = traj.infeasible_steps;
  s.seed = traj.seed;
  s.aborted = traj.aborted;
  try {
    s.rho_at_0 = monitor_scenario(trajectory_table(traj), sc, 0.0).rho;
  } catch (const HorizonError&) {
    s.rho_at_0.reset();
  }
  std::vector<double> bmin(traj.times.size(), kInf);
  for (std::size_t n = 0; n < traj.times.size(); ++n) {
    for (double b : traj.barrier[n]) bmin[n] = std::min(bmin[n], b);
  }
  s.min_b_after_recovery = kInf;
  for (std::size_t n = 0; n < bmin.size(); ++n) {
    if (!s.recovery_time && bmin[n] >= 0.0) s.recovery_time = traj.times[n];
    if (s.recovery_time) s.min_b_after_recovery = std::min(s.min_b_after_recovery, bmin[n]);
  }
  if (!s.recovery_time) s.min_b_after_recovery = -kInf;

  s.min_distance = kInf;
  const Eigen::Index pd = sc.coupling.position_dims;
  std::vector<Eigen::Index> offsets;
  Eigen::Index off = 0;
  for (auto d : traj.state_dims) {
    offsets.push_back(off);
    off += d;
  }
  for (const auto& x : traj.states) {
    for (std::size_t i = 0; i < offsets.size(); ++i) {
      for (std::size_t j = i + 1; j < offsets.size(); ++j) {
        const Eigen::Index n = std::min({pd, traj.state_dims[i], traj.state_dims[j]});
        s.min_distance = std::min(s.min_distance, (x.segment(offsets[i], n) - x.segment(offsets[j], n)).norm());
      }
    }
  }
  return s;
}

PlotKind plot_kind_from_string(const std::string& kind) {
  if (kind == "barrier") return PlotKind::kBarrier;
  if (kind == "paths") return PlotKind::kPaths;
  if (kind == "inputs") return PlotKind::kInputs;
  throw std::invalid_argument("unknown plot kind '" + kind + "' (expected barrier, paths or inputs)");
}

namespace {

const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2", "#17becf"};

struct Frame {
  double x0, x1, y0, y1;
  double left = 70, right = 20, top = 30, bottom = 50, width = 720, height = 420;

  double px(double x) const { return left + (x - x0) / (x1 - x0) * (width - left - right); }
  double py(double y) const { return height - bottom - (y - y0) / (y1 - y0) * (height - top - bottom); }
};

Frame frame_for(double x0, double x1, double y0, double y1, bool equal = false) {
  if (!(x1 > x0)) x1 = x0 + 1.0;
  if (!(y1 > y0)) {
    y0 -= 0.5;
    y1 += 0.5;
  }
  const double my = 0.05 * (y1 - y0);
  Frame f{x0, x1, y0 - my, y1 + my};
  if (equal) {
    const double mx = 0.05 * (x1 - x0);
    f.x0 -= mx;
    f.x1 += mx;
    f.height = 620;
    f.width = 620;
  }
  return f;
}

std::string axes(const Frame& f, const std::string& title, const std::string& xlabel, const std::string& ylabel) {
  std::ostringstream s;
  s << "<rect x=\"" << f.left << "\" y=\"" << f.top << "\" width=\"" << f.width - f.left - f.right
    << "\" height=\"" << f.height - f.top - f.bottom << "\" fill=\"none\" stroke=\"#444\"/>\n";
  for (int i = 0; i <= 5; ++i) {
    const double xv = f.x0 + (f.x1 - f.x0) * i / 5.0;
    const double yv = f.y0 + (f.y1 - f.y0) * i / 5.0;
    s << "<text x=\"" << f.px(xv) << "\" y=\"" << f.height - f.bottom + 18
      << "\" font-size=\"11\" text-anchor=\"middle\">" << fmt_short(xv) << "</text>\n";
    s << "<text x=\"" << f.left - 6 << "\" y=\"" << f.py(yv) + 4 << "\" font-size=\"11\" text-anchor=\"end\">"
      << fmt_short(yv) << "</text>\n";
  }
  s << "<text x=\"" << f.width / 2 << "\" y=\"18\" font-size=\"14\" text-anchor=\"middle\">" << title << "</text>\n";
  s << "<text x=\"" << (f.left + f.width - f.right) / 2 << "\" y=\"" << f.height - 12
    << "\" font-size=\"12\" text-anchor=\"middle\">" << xlabel << "</text>\n";
  s << "<text x=\"16\" y=\"" << f.height / 2 << "\" font-size=\"12\" text-anchor=\"middle\" transform=\"rotate(-90 16 "
    << f.height / 2 << ")\">" << ylabel << "</text>\n";
  return s.str();
}

std::vector<std::size_t> thin(std::size_t n, std::size_t max_points) {
  std::vector<std::size_t> idx;
  const std::size_t stride = std::max<std::size_t>(1, n / max_points);
  for (std::size_t i = 0; i < n; i += stride) idx.push_back(i);
  if (!idx.empty() && idx.back() != n - 1) idx.push_back(n - 1);
  return idx;
}

std::string polyline(const Frame& f, const std::vector<double>& xs, const std::vector<double>& ys,
                     const std::vector<std::size_t>& idx, const std::string& color, double opacity = 1.0) {
  std::ostringstream s;
  s << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" stroke-opacity=\"" << opacity
    << "\" points=\"";
  for (auto i : idx) {
    if (!std::isfinite(xs[i]) || !std::isfinite(ys[i])) continue;
    s << fmt_short(f.px(xs[i])) << "," << fmt_short(f.py(ys[i])) << " ";
  }
  s << "\"/>\n";
  return s.str();
}

std::string legend(const Frame& f, const std::vector<std::string>& names) {
  std::ostringstream s;
  for (std::size_t i = 0; i < names.size(); ++i) {
    const double y = f.top + 14 + 14.0 * static_cast<double>(i);
    s << "<rect x=\"" << f.width - f.right - 120 << "\" y=\"" << y - 9 << "\" width=\"10\" height=\"10\" fill=\""
      << kPalette[i % 8] << "\"/><text x=\"" << f.width - f.right - 105 << "\" y=\"" << y
      << "\" font-size=\"11\">" << names[i] << "</text>\n";
  }
  return s.str();
}

std::string document(const Frame& f, const std::string& body) {
  std::ostringstream s;
  s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << f.width << "\" height=\"" << f.height
    << "\" viewBox=\"0 0 " << f.width << " " << f.height << "\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
    << body << "</svg>\n";
  return s.str();
}

std::vector<std::size_t> columns_with_prefix(const Table& t, const std::string& prefix) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < t.header.size(); ++i) {
    if (t.header[i].rfind(prefix, 0) == 0) out.push_back(i);
  }
  return out;
}

std::string plot_time_series(const Table& table, const std::vector<std::size_t>& cols, const std::string& title,
                             const std::string& ylabel, bool zero_line) {
  if (cols.empty()) throw ScenarioError("trajectory has no columns for a '" + title + "' plot");
  const auto ts = table.series(0);
  double lo = kInf, hi = -kInf;
  std::vector<std::vector<double>> ys;
  for (auto c : cols) {
    ys.push_back(table.series(c));
    for (double v : ys.back()) {
      if (std::isfinite(v)) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
      }
    }
  }
  if (zero_line) {
    lo = std::min(lo, 0.0);
    hi = std::max(hi, 0.0);
  }
  if (!std::isfinite(lo)) lo = hi = 0.0;
  const Frame f = frame_for(ts.front(), ts.back(), lo, hi);
  std::string body = axes(f, title, "t [s]", ylabel);
  if (zero_line) {
    body += "<line x1=\"" + fmt_short(f.px(f.x0)) + "\" x2=\"" + fmt_short(f.px(f.x1)) + "\" y1=\"" +
            fmt_short(f.py(0.0)) + "\" y2=\"" + fmt_short(f.py(0.0)) + "\" stroke=\"#888\" stroke-dasharray=\"4 3\"/>\n";
  }
  const auto idx = thin(ts.size(), 4000);
  std::vector<std::string> names;
  for (std::size_t k = 0; k < cols.size(); ++k) {
    body += polyline(f, ts, ys[k], idx, kPalette[k % 8]);
    names.push_back(table.header[cols[k]]);
  }
  body += legend(f, names);
  return document(f, body);
}

std::string plot_paths(const Table& table) {
  std::vector<std::string> agents;
  std::vector<std::pair<std::size_t, std::size_t>> cols;
  for (std::size_t i = 0; i < table.header.size(); ++i) {
    const auto& h = table.header[i];
    if (h.rfind("x_", 0) != 0 || h.size() < 5 || h.substr(h.size() - 2) != "_0") continue;
    const std::string id = h.substr(2, h.size() - 4);
    auto c1 = table.column("x_" + id + "_1");
    if (!c1) continue;
    agents.push_back(id);
    cols.push_back({i, *c1});
  }
  if (agents.empty()) throw ScenarioError("paths plot needs agents with at least two state components");
  double x0 = kInf, x1 = -kInf, y0 = kInf, y1 = -kInf;
  for (const auto& [cx, cy] : cols) {
    for (const auto& row : table.rows) {
      x0 = std::min(x0, row[cx]);
      x1 = std::max(x1, row[cx]);
      y0 = std::min(y0, row[cy]);
      y1 = std::max(y1, row[cy]);
    }
  }
  const double span = std::max(x1 - x0, y1 - y0);
  const double cx0 = 0.5 * (x0 + x1) - 0.5 * span;
  const double cy0 = 0.5 * (y0 + y1) - 0.5 * span;
  const Frame f = frame_for(cx0, cx0 + span, cy0, cy0 + span, true);
  std::string body = axes(f, "Agent paths (faded = earlier)", "position 0", "position 1");
  const std::size_t n = table.rows.size();
  constexpr std::size_t kSegments = 12;
  for (std::size_t a = 0; a < agents.size(); ++a) {
    const auto xs = table.series(cols[a].first);
    const auto ys = table.series(cols[a].second);
    // One polyline per agent, drawn in segments of increasing opacity.
    std::ostringstream g;
    g << "<g id=\"path-" << agents[a] << "\">\n";
    for (std::size_t s = 0; s < kSegments; ++s) {
      const std::size_t b = s * (n - 1) / kSegments;
      const std::size_t e = (s + 1) * (n - 1) / kSegments;
      std::vector<std::size_t> idx;
      const std::size_t stride = std::max<std::size_t>(1, (e - b) / 300);
      for (std::size_t i = b; i < e; i += stride) idx.push_back(i);
      idx.push_back(e);
      g << polyline(f, xs, ys, idx, kPalette[a % 8], 0.2 + 0.8 * static_cast<double>(s + 1) / kSegments);
    }
    g << "<circle cx=\"" << fmt_short(f.px(xs.back())) << "\" cy=\"" << fmt_short(f.py(ys.back()))
      << "\" r=\"4\" fill=\"" << kPalette[a % 8] << "\"/>\n</g>\n";
    body += g.str();
  }
  body += legend(f, agents);
  return document(f, body);
}

}  // namespace

std::string plot_svg(const Table& table, PlotKind kind) {
  switch (kind) {
    case PlotKind::kBarrier:
      return plot_time_series(table, columns_with_prefix(table, "b_"), "Barrier value b(x(t), t)", "b", true);
    case PlotKind::kInputs:
      return plot_time_series(table, columns_with_prefix(table, "u_"), "Control inputs", "u", false);
    case PlotKind::kPaths: return plot_paths(table);
  }
  return "";
}

}  // namespace stlcbf::app
