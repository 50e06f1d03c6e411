#include "stlcbf/stlcbf.h"

#include "app/pipeline.hpp"
#include "common/error.hpp"
#include "stl/monitor.hpp"
#include "stl/parser.hpp"

#include <cmath>
#include <cstring>
#include <limits>
#include <optional>
#include <string>

using namespace stlcbf;

struct stlcbf_scenario {
  app::Scenario scenario;
};

struct stlcbf_params {
  app::ParamsFile params;
};

struct stlcbf_trajectory {
  std::optional<sim::Trajectory> run;  // absent when loaded from CSV
  app::Table table;
};

struct stlcbf_formula {
  stl::Formula formula;
  size_t dim = 0;
};

namespace {

thread_local std::string g_last_error;

char* copy_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (out) std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

stlcbf_status fail(stlcbf_status status, const std::string& message) {
  g_last_error = message;
  return status;
}

template <typename Fn>
stlcbf_status guarded(Fn&& fn) {
  try {
    g_last_error.clear();
    fn();
    return STLCBF_OK;
  } catch (const ParseError& e) {
    return fail(STLCBF_ERR_PARSE, e.what());
  } catch (const HorizonError& e) {
    return fail(STLCBF_ERR_HORIZON, e.what());
  } catch (const SpecError& e) {
    return fail(STLCBF_ERR_SPEC, e.what());
  } catch (const NonConvergence& e) {
    return fail(STLCBF_ERR_NONCONVERGENCE, e.what());
  } catch (const InfeasibleStep& e) {
    return fail(STLCBF_ERR_INFEASIBLE_STEP, e.what());
  } catch (const SimulationAbort& e) {
    return fail(STLCBF_ERR_ABORT, e.what());
  } catch (const ParamsMismatch& e) {
    return fail(STLCBF_ERR_HASH_MISMATCH, e.what());
  } catch (const ScenarioError& e) {
    return fail(STLCBF_ERR_SCENARIO, e.what());
  } catch (const Error& e) {
    return fail(STLCBF_ERR_IO, e.what());
  } catch (const std::invalid_argument& e) {
    return fail(STLCBF_ERR_INVALID_ARGUMENT, e.what());
  } catch (const std::out_of_range& e) {
    return fail(STLCBF_ERR_INVALID_ARGUMENT, e.what());
  } catch (const std::exception& e) {
    return fail(STLCBF_ERR_INTERNAL, e.what());
  } catch (...) {
    return fail(STLCBF_ERR_INTERNAL, "unknown error");
  }
}

#define REQUIRE_ARG(cond)                                                        \
  do {                                                                           \
    if (!(cond)) return fail(STLCBF_ERR_INVALID_ARGUMENT, "invalid argument: " #cond); \
  } while (0)

stl::Signal make_signal(const double* times, const double* values, size_t n, size_t dim) {
  std::vector<double> ts(times, times + n);
  std::vector<stl::Vector> xs;
  xs.reserve(n);
  for (size_t i = 0; i < n; ++i) {
    xs.push_back(Eigen::Map<const stl::Vector>(values + i * dim, static_cast<Eigen::Index>(dim)));
  }
  return stl::Signal(std::move(ts), std::move(xs));
}

}  // namespace

extern "C" {

const char* stlcbf_last_error(void) { return g_last_error.c_str(); }

const char* stlcbf_status_name(stlcbf_status status) {
  switch (status) {
    case STLCBF_OK: return "ok";
    case STLCBF_ERR_INVALID_ARGUMENT: return "invalid argument";
    case STLCBF_ERR_PARSE: return "parse error";
    case STLCBF_ERR_SPEC: return "specification error";
    case STLCBF_ERR_SCENARIO: return "scenario error";
    case STLCBF_ERR_HASH_MISMATCH: return "parameter file mismatch";
    case STLCBF_ERR_HORIZON: return "horizon error";
    case STLCBF_ERR_NONCONVERGENCE: return "non-convergence";
    case STLCBF_ERR_INFEASIBLE_STEP: return "infeasible step";
    case STLCBF_ERR_ABORT: return "simulation abort";
    case STLCBF_ERR_IO: return "i/o error";
    case STLCBF_ERR_INTERNAL: return "internal error";
  }
  return "unknown status";
}

void stlcbf_string_free(char* s) { std::free(s); }

const char* stlcbf_version(void) { return "1.0.0"; }

stlcbf_status stlcbf_formula_parse(const char* text, size_t dim, stlcbf_formula** out) {
  REQUIRE_ARG(text && out);
  *out = nullptr;
  return guarded([&] {
    stl::StateLayout layout;
    if (dim > 0) {
      layout.dim = static_cast<Eigen::Index>(dim);
      layout.slices["x"] = {0, layout.dim};
    }
    auto f = std::make_unique<stlcbf_formula>();
    f->formula = stl::parse_formula(text, layout);
    f->dim = static_cast<size_t>(stl::state_dim(f->formula));
    *out = f.release();
  });
}

void stlcbf_formula_free(stlcbf_formula* f) { delete f; }

stlcbf_status stlcbf_formula_print(const stlcbf_formula* f, char** out) {
  REQUIRE_ARG(f && out);
  return guarded([&] { *out = copy_string(stl::print(f->formula)); });
}

double stlcbf_formula_horizon(const stlcbf_formula* f) {
  return f ? stl::horizon(f->formula) : std::numeric_limits<double>::quiet_NaN();
}

size_t stlcbf_formula_dim(const stlcbf_formula* f) { return f ? f->dim : 0; }

stlcbf_status stlcbf_formula_robustness(const stlcbf_formula* f, const double* times, const double* values,
                                        size_t n_samples, size_t dim, double t, double* rho) {
  REQUIRE_ARG(f && times && values && rho && dim > 0);
  REQUIRE_ARG(f->dim == 0 || f->dim == dim);
  return guarded([&] { *rho = stl::eval_robust(f->formula, make_signal(times, values, n_samples, dim), t); });
}

stlcbf_status stlcbf_formula_satisfied(const stlcbf_formula* f, const double* times, const double* values,
                                       size_t n_samples, size_t dim, double t, int* holds) {
  REQUIRE_ARG(f && times && values && holds && dim > 0);
  REQUIRE_ARG(f->dim == 0 || f->dim == dim);
  return guarded([&] { *holds = stl::eval_boolean(f->formula, make_signal(times, values, n_samples, dim), t) ? 1 : 0; });
}

stlcbf_status stlcbf_scenario_load(const char* path, stlcbf_scenario** out) {
  REQUIRE_ARG(path && out);
  *out = nullptr;
  return guarded([&] { *out = new stlcbf_scenario{app::load_scenario(path)}; });
}

stlcbf_status stlcbf_scenario_parse(const char* json_text, stlcbf_scenario** out) {
  REQUIRE_ARG(json_text && out);
  *out = nullptr;
  return guarded([&] {
    nlohmann::json doc;
    try {
      doc = nlohmann::json::parse(json_text);
    } catch (const nlohmann::json::exception& e) {
      throw ScenarioError(std::string("scenario is not valid JSON: ") + e.what());
    }
    *out = new stlcbf_scenario{app::parse_scenario(doc)};
  });
}

void stlcbf_scenario_free(stlcbf_scenario* s) { delete s; }

const char* stlcbf_scenario_hash(const stlcbf_scenario* s) { return s ? s->scenario.hash.c_str() : ""; }

size_t stlcbf_scenario_group_count(const stlcbf_scenario* s) { return s ? s->scenario.groups.size() : 0; }

stlcbf_status stlcbf_synthesize(const stlcbf_scenario* s, const stlcbf_synth_options* options, stlcbf_params** out) {
  REQUIRE_ARG(s && out);
  *out = nullptr;
  return guarded([&] {
    app::SynthOptions opt;
    if (options && options->use_feasibility_r) opt.feasibility_r = options->feasibility_r;
    if (options && options->use_seed) opt.seed = options->seed;
    *out = new stlcbf_params{app::synthesize_scenario(s->scenario, opt)};
  });
}

void stlcbf_params_free(stlcbf_params* p) { delete p; }

int stlcbf_params_feasible(const stlcbf_params* p) { return p && p->params.feasible() ? 1 : 0; }

double stlcbf_params_r(const stlcbf_params* p) {
  return p ? p->params.r() : std::numeric_limits<double>::quiet_NaN();
}

size_t stlcbf_params_group_count(const stlcbf_params* p) { return p ? p->params.groups.size() : 0; }

stlcbf_status stlcbf_params_to_json(const stlcbf_params* p, char** out) {
  REQUIRE_ARG(p && out);
  return guarded([&] { *out = copy_string(app::params_to_json(p->params).dump(2)); });
}

stlcbf_status stlcbf_params_from_json(const char* json_text, stlcbf_params** out) {
  REQUIRE_ARG(json_text && out);
  *out = nullptr;
  return guarded([&] {
    nlohmann::json doc;
    try {
      doc = nlohmann::json::parse(json_text);
    } catch (const nlohmann::json::exception& e) {
      throw ScenarioError(std::string("parameter file is not valid JSON: ") + e.what());
    }
    *out = new stlcbf_params{app::params_from_json(doc)};
  });
}

stlcbf_status stlcbf_params_save(const stlcbf_params* p, const char* path) {
  REQUIRE_ARG(p && path);
  return guarded([&] { app::save_params(p->params, path); });
}

stlcbf_status stlcbf_params_load(const char* path, stlcbf_params** out) {
  REQUIRE_ARG(path && out);
  *out = nullptr;
  return guarded([&] { *out = new stlcbf_params{app::load_params(path)}; });
}

stlcbf_status stlcbf_params_barrier(const stlcbf_params* p, size_t group, const double* x, size_t dim, double t,
                                    double* b) {
  REQUIRE_ARG(p && x && b && group < p->params.groups.size());
  const auto& barrier = p->params.groups[group].barrier;
  REQUIRE_ARG(static_cast<Eigen::Index>(dim) == barrier.dim());
  return guarded([&] { *b = barrier.eval(Eigen::Map<const stl::Vector>(x, barrier.dim()), t); });
}

stlcbf_status stlcbf_simulate(const stlcbf_scenario* s, const stlcbf_params* p, int use_seed, uint64_t seed,
                              stlcbf_trajectory** out) {
  REQUIRE_ARG(s && p && out);
  *out = nullptr;
  return guarded([&] {
    auto tr = std::make_unique<stlcbf_trajectory>();
    tr->run = app::simulate_scenario(s->scenario, p->params,
                                     use_seed ? std::optional<std::uint64_t>(seed) : std::nullopt);
    tr->table = app::trajectory_table(*tr->run);
    *out = tr.release();
  });
}

stlcbf_status stlcbf_trajectory_load_csv(const char* path, stlcbf_trajectory** out) {
  REQUIRE_ARG(path && out);
  *out = nullptr;
  return guarded([&] {
    auto tr = std::make_unique<stlcbf_trajectory>();
    tr->table = app::read_csv(path);
    *out = tr.release();
  });
}

void stlcbf_trajectory_free(stlcbf_trajectory* tr) { delete tr; }

size_t stlcbf_trajectory_rows(const stlcbf_trajectory* tr) { return tr ? tr->table.rows.size() : 0; }

size_t stlcbf_trajectory_cols(const stlcbf_trajectory* tr) { return tr ? tr->table.header.size() : 0; }

const char* stlcbf_trajectory_column_name(const stlcbf_trajectory* tr, size_t col) {
  if (!tr || col >= tr->table.header.size()) return nullptr;
  return tr->table.header[col].c_str();
}

double stlcbf_trajectory_value(const stlcbf_trajectory* tr, size_t row, size_t col) {
  if (!tr || row >= tr->table.rows.size() || col >= tr->table.header.size()) {
    return std::numeric_limits<double>::quiet_NaN();
  }
  return tr->table.rows[row][col];
}

int stlcbf_trajectory_aborted(const stlcbf_trajectory* tr) { return tr && tr->run && tr->run->aborted ? 1 : 0; }

stlcbf_status stlcbf_trajectory_to_csv(const stlcbf_trajectory* tr, char** out) {
  REQUIRE_ARG(tr && out);
  return guarded([&] { *out = copy_string(app::table_to_csv(tr->table)); });
}

stlcbf_status stlcbf_trajectory_write_csv(const stlcbf_trajectory* tr, const char* path) {
  REQUIRE_ARG(tr && path);
  return guarded([&] { app::write_csv(tr->table, path); });
}

stlcbf_status stlcbf_trajectory_summary(const stlcbf_trajectory* tr, const stlcbf_scenario* s, const stlcbf_params* p,
                                        char** out) {
  REQUIRE_ARG(tr && s && p && out);
  if (!tr->run) return fail(STLCBF_ERR_INVALID_ARGUMENT, "summary needs a simulated trajectory");
  return guarded([&] {
    auto j = app::summarize(*tr->run, p->params, s->scenario).to_json();
    j["abort_reason"] = tr->run->abort_reason;
    nlohmann::json events = nlohmann::json::array();
    for (const auto& e : tr->run->events) events.push_back({{"t", e.t}, {"kind", e.kind}, {"detail", e.detail}});
    j["events"] = events;
    *out = copy_string(j.dump(2));
  });
}

size_t stlcbf_trajectory_feasible_slacks(const stlcbf_trajectory* tr, const double** slacks) {
  if (!tr || !tr->run) {
    if (slacks) *slacks = nullptr;
    return 0;
  }
  if (slacks) *slacks = tr->run->feasible_update_slacks.data();
  return tr->run->feasible_update_slacks.size();
}

stlcbf_status stlcbf_monitor_scenario(const stlcbf_trajectory* tr, const stlcbf_scenario* s, double t, double* rho,
                                      char** report_json) {
  REQUIRE_ARG(tr && s && rho);
  return guarded([&] {
    const auto rep = app::monitor_scenario(tr->table, s->scenario, t);
    *rho = rep.rho;
    if (report_json) *report_json = copy_string(rep.to_json().dump(2));
  });
}

stlcbf_status stlcbf_monitor_formula(const stlcbf_trajectory* tr, const char* formula, double t, double* rho,
                                     char** report_json) {
  REQUIRE_ARG(tr && formula && rho);
  return guarded([&] {
    const auto rep = app::monitor_formula(tr->table, formula, t);
    *rho = rep.rho;
    if (report_json) *report_json = copy_string(rep.to_json().dump(2));
  });
}

stlcbf_status stlcbf_plot_svg(const stlcbf_trajectory* tr, const char* kind, char** out) {
  REQUIRE_ARG(tr && kind && out);
  return guarded([&] { *out = copy_string(app::plot_svg(tr->table, app::plot_kind_from_string(kind))); });
}

}  // extern "C"
