#include "resent/resent.h"

#include <cstring>
#include <new>
#include <string>

#include "resent/error.hpp"
#include "resent/objective.hpp"
#include "resent/optimizer.hpp"
#include "resent/report.hpp"
#include "resent/systems.hpp"

struct resent_case {
  resent::SystemCase value;
};

struct resent_metric {
  resent::MetricFile file;
};

struct resent_run {
  resent::RunConfig config;
  resent::SystemCase system;
  resent::RunSettings settings;
  resent::RunResult result;
};

namespace {

thread_local std::string g_last_error;

resent_status status_of(resent::ErrorCode code) {
  using resent::ErrorCode;
  switch (code) {
    case ErrorCode::kConfig:
    case ErrorCode::kRange:
    case ErrorCode::kDimensionMismatch:
      return RESENT_ERR_CONFIG;
    case ErrorCode::kInvalidInput:
      return RESENT_ERR_INVALID_ARGUMENT;
    case ErrorCode::kNotSpd:
    case ErrorCode::kSingularMatrix:
    case ErrorCode::kNumerical:
      return RESENT_ERR_NUMERICAL;
  }
  return RESENT_ERR_INTERNAL;
}

resent_status set_error(resent_status s, const std::string& what) {
  g_last_error = what;
  return s;
}

// Runs `body`, translating exceptions into status codes.
template <typename F>
resent_status guarded(F&& body) {
  try {
    g_last_error.clear();
    return body();
  } catch (const resent::Error& e) {
    return set_error(status_of(e.code()), e.what());
  } catch (const nlohmann::json::exception& e) {
    return set_error(RESENT_ERR_CONFIG, std::string("JSON: ") + e.what());
  } catch (const std::bad_alloc&) {
    return set_error(RESENT_ERR_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return set_error(RESENT_ERR_INTERNAL, e.what());
  } catch (...) {
    return set_error(RESENT_ERR_INTERNAL, "unknown exception");
  }
}

char* dup(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (out == nullptr) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

resent_status give(const std::string& s, char** out) {
  *out = dup(s);
  return RESENT_OK;
}

std::map<std::string, double> parse_params(const char* params_json) {
  std::map<std::string, double> params;
  if (params_json == nullptr || *params_json == '\0') return params;
  const auto j = nlohmann::json::parse(params_json);
  if (!j.is_object()) resent::fail(resent::ErrorCode::kConfig, "parameters must be a JSON object");
  for (const auto& [key, value] : j.items()) {
    if (!value.is_number()) {
      resent::fail(resent::ErrorCode::kConfig, "parameter '" + key + "' must be a number");
    }
    params[key] = value.get<double>();
  }
  return params;
}

resent::GridConfig grid_from(const resent::SystemCase& c, const resent::MetricFile& m,
                             const char* grid_json) {
  resent::GridConfig g;
  g.counts = c.defaults.grid;
  if (m.grid) g = *m.grid;
  if (grid_json != nullptr && *grid_json != '\0') {
    const auto j = nlohmann::json::parse(grid_json);
    if (!j.is_object()) resent::fail(resent::ErrorCode::kConfig, "grid must be a JSON object");
    if (j.contains("counts")) g.counts = j["counts"].get<std::vector<int>>();
    if (j.contains("refine")) g.refine = j["refine"].get<bool>();
    if (j.contains("workers")) g.workers = j["workers"].get<int>();
  }
  if (static_cast<int>(g.counts.size()) != c.dim()) {
    resent::fail(resent::ErrorCode::kConfig, "grid has " + std::to_string(g.counts.size()) +
                                                 " axes, system has dimension " +
                                                 std::to_string(c.dim()));
  }
  for (int v : g.counts) {
    if (v < 2) resent::fail(resent::ErrorCode::kConfig, "grid counts must be at least 2");
  }
  if (g.workers < 0) resent::fail(resent::ErrorCode::kConfig, "workers must be nonnegative");
  return g;
}

std::vector<double> to_std(const resent::Vector& v) {
  return std::vector<double>(v.data(), v.data() + v.size());
}

resent_record to_record(const resent::IterationRecord& r) {
  return {r.k, r.theta, r.value, r.best_value, r.k_star, r.subgrad_norm, r.gap_ok ? 1 : 0,
          r.wall_time_ms};
}

#define RESENT_REQUIRE(cond, msg) \
  if (!(cond)) return set_error(RESENT_ERR_INVALID_ARGUMENT, msg)

}  // namespace

extern "C" {

const char* resent_version(void) { return "1.0.0"; }

const char* resent_last_error(void) { return g_last_error.c_str(); }

const char* resent_status_name(resent_status status) {
  switch (status) {
    case RESENT_OK: return "ok";
    case RESENT_ERR_INVALID_ARGUMENT: return "invalid argument";
    case RESENT_ERR_CONFIG: return "configuration error";
    case RESENT_ERR_NUMERICAL: return "numerical failure";
    case RESENT_ERR_UNKNOWN_SYSTEM: return "unknown system";
    case RESENT_ERR_NO_REFERENCE: return "no reference values";
    case RESENT_ERR_INTERNAL: return "internal error";
  }
  return "unknown status";
}

void resent_free_string(char* s) { std::free(s); }

resent_status resent_case_create(const char* name, const char* params_json, resent_case** out) {
  RESENT_REQUIRE(name != nullptr && out != nullptr, "null argument");
  *out = nullptr;
  return guarded([&] {
    if (!resent::CaseRegistry::global().contains(name)) {
      return set_error(RESENT_ERR_UNKNOWN_SYSTEM, std::string("unknown system '") + name + "'");
    }
    auto c = std::make_unique<resent_case>();
    c->value = resent::make_case(name, parse_params(params_json));
    *out = c.release();
    return RESENT_OK;
  });
}

void resent_case_free(resent_case* c) { delete c; }

int resent_case_dim(const resent_case* c) { return c == nullptr ? 0 : c->value.dim(); }

int resent_case_is_discrete(const resent_case* c) {
  return c != nullptr && c->value.discrete() ? 1 : 0;
}

resent_status resent_case_bounds_json(const resent_case* c, char** out) {
  RESENT_REQUIRE(c != nullptr && out != nullptr, "null argument");
  *out = nullptr;
  return guarded([&] {
    const auto& ref = c->value.reference;
    if (!ref.entropy && !ref.lower && !ref.upper) {
      return set_error(RESENT_ERR_NO_REFERENCE,
                       "system " + c->value.name + " has no closed-form reference values");
    }
    return give(resent::bounds_json(c->value).dump(), out);
  });
}

resent_status resent_systems_json(char** out) {
  RESENT_REQUIRE(out != nullptr, "null argument");
  *out = nullptr;
  return guarded([&] { return give(nlohmann::json(resent::CaseRegistry::global().names()).dump(), out); });
}

resent_status resent_register_system(const char* name, int dim, int discrete,
                                     resent_vector_fn field, resent_vector_fn jacobian,
                                     void* user, const double* lower, const double* upper) {
  RESENT_REQUIRE(name != nullptr && *name != '\0', "system name must be non-empty");
  RESENT_REQUIRE(dim >= 1, "dimension must be positive");
  RESENT_REQUIRE(field != nullptr && lower != nullptr && upper != nullptr, "null argument");
  return guarded([&] {
    if (resent::CaseRegistry::global().contains(name)) {
      return set_error(RESENT_ERR_CONFIG, std::string("system '") + name + "' already exists");
    }
    resent::BoxDomain box{std::vector<double>(lower, lower + dim),
                          std::vector<double>(upper, upper + dim)};
    for (int i = 0; i < dim; ++i) {
      if (!(box.lower[i] < box.upper[i])) {
        return set_error(RESENT_ERR_CONFIG, "box needs lower < upper on every axis");
      }
    }
    const std::string label = name;
    auto wrap = [label](resent_vector_fn fn, void* data) -> resent::FieldFn {
      return [label, fn, data](std::span<const double> x, std::span<double> o) {
        if (fn(x.data(), o.data(), data) != 0) {
          resent::fail(resent::ErrorCode::kNumerical, "callback of system " + label + " failed");
        }
      };
    };
    resent::FieldFn f = wrap(field, user);
    resent::JacobianFn jac = jacobian != nullptr ? wrap(jacobian, user)
                                                 : resent::numeric_jacobian(dim, f);
    const bool is_discrete = discrete != 0;
    resent::CaseRegistry::global().add(
        label, [=](const std::map<std::string, double>& params) {
          if (!params.empty()) {
            resent::fail(resent::ErrorCode::kConfig, "system " + label + " takes no parameters");
          }
          resent::SystemCase c;
          c.name = label;
          if (is_discrete) {
            c.system = resent::DiscreteSystem{dim, f, jac};
          } else {
            c.system = resent::ContinuousSystem{dim, f, jac};
          }
          c.domain = resent::Domain(box);
          c.defaults.degree = 0;
          c.defaults.grid.assign(static_cast<std::size_t>(dim), 101);
          c.defaults.step_a = 1.0;
          c.defaults.max_iters = 100;
          return c;
        });
    return RESENT_OK;
  });
}

resent_status resent_metric_identity(const resent_case* c, int degree, int include_constant,
                                     resent_metric** out) {
  RESENT_REQUIRE(c != nullptr && out != nullptr, "null argument");
  RESENT_REQUIRE(degree >= 0, "degree must be nonnegative");
  *out = nullptr;
  return guarded([&] {
    auto m = std::make_unique<resent_metric>();
    m->file.system = c->value.name;
    m->file.params = c->value.params;
    m->file.metric = resent::ConformalMetric::identity(
        resent::PolyBasis(c->value.dim(), degree, include_constant != 0));
    *out = m.release();
    return RESENT_OK;
  });
}

resent_status resent_metric_from_json(const char* json, resent_metric** out) {
  RESENT_REQUIRE(json != nullptr && out != nullptr, "null argument");
  *out = nullptr;
  return guarded([&] {
    auto m = std::make_unique<resent_metric>();
    m->file = resent::metric_from_json(nlohmann::json::parse(json));
    *out = m.release();
    return RESENT_OK;
  });
}

void resent_metric_free(resent_metric* m) { delete m; }

resent_status resent_metric_origin_json(const resent_metric* m, char** out) {
  RESENT_REQUIRE(m != nullptr && out != nullptr, "null argument");
  *out = nullptr;
  return guarded([&] {
    nlohmann::json j = nlohmann::json::object();
    if (!m->file.system.empty()) j["system"] = m->file.system;
    j["params"] = m->file.params;
    if (m->file.grid) j["grid"] = {{"counts", m->file.grid->counts}, {"refine", m->file.grid->refine}};
    return give(j.dump(), out);
  });
}

resent_status resent_metric_to_json(const resent_case* c, const resent_metric* m, char** out) {
  RESENT_REQUIRE(c != nullptr && m != nullptr && out != nullptr, "null argument");
  *out = nullptr;
  return guarded([&] {
    resent::GridConfig g = m->file.grid.value_or(resent::GridConfig{c->value.defaults.grid});
    return give(resent::metric_to_json(c->value, m->file.metric, g).dump(2), out);
  });
}

resent_status resent_evaluate(const resent_case* c, const resent_metric* m, const char* grid_json,
                              char** out) {
  RESENT_REQUIRE(c != nullptr && m != nullptr && out != nullptr, "null argument");
  *out = nullptr;
  return guarded([&] {
    const auto& sc = c->value;
    if (m->file.metric.dim() != sc.dim()) {
      return set_error(RESENT_ERR_CONFIG, "metric dimension " +
                                              std::to_string(m->file.metric.dim()) +
                                              " does not match system dimension " +
                                              std::to_string(sc.dim()));
    }
    if (sc.domain.is_cylinder() && (m->file.metric.coeffs.basis.size() != 0)) {
      return set_error(RESENT_ERR_CONFIG, "system " + sc.name +
                                              " lives on a cylinder; only constant metrics are "
                                              "supported");
    }
    const resent::GridConfig g = grid_from(sc, m->file, grid_json);
    const resent::InnerMaxResult inner = resent::maximize(sc, m->file.metric, g);
    nlohmann::json j;
    j["system"] = sc.name;
    j["value"] = inner.value * resent::entropy_scale(sc);
    j["x_star"] = to_std(inner.x_star);
    j["k_star"] = inner.k_star;
    j["gap_ok"] = inner.gap_ok;
    j["from_refinement"] = inner.from_refinement;
    j["spectrum"] = to_std(inner.spectrum);
    j["grid"] = {{"counts", g.counts}, {"refine", g.refine}};
    return give(j.dump(), out);
  });
}

resent_status resent_run_create(const char* config_json, resent_progress_fn progress, void* user,
                                resent_run** out) {
  RESENT_REQUIRE(config_json != nullptr && out != nullptr, "null argument");
  *out = nullptr;
  return guarded([&] {
    auto r = std::make_unique<resent_run>();
    r->config = resent::parse_run_config(nlohmann::json::parse(config_json));
    if (!resent::CaseRegistry::global().contains(r->config.system)) {
      return set_error(RESENT_ERR_UNKNOWN_SYSTEM, "unknown system '" + r->config.system + "'");
    }
    r->system = resent::make_case(r->config);
    r->settings = resent::resolve_settings(r->config, r->system);
    resent::ProgressFn cb;
    if (progress != nullptr) {
      cb = [progress, user](const resent::IterationRecord& rec) {
        const resent_record c = to_record(rec);
        progress(&c, user);
      };
    }
    r->result = resent::run(r->system, r->settings, cb);
    const bool aborted = r->result.abort_reason.has_value();
    if (aborted) set_error(RESENT_ERR_NUMERICAL, *r->result.abort_reason);
    *out = r.release();
    return aborted ? RESENT_ERR_NUMERICAL : RESENT_OK;
  });
}

void resent_run_free(resent_run* r) { delete r; }

double resent_run_best_value(const resent_run* r) { return r == nullptr ? 0.0 : r->result.best_value; }

int resent_run_best_iteration(const resent_run* r) {
  return r == nullptr ? 0 : r->result.best_iteration;
}

size_t resent_run_record_count(const resent_run* r) {
  return r == nullptr ? 0 : r->result.records.size();
}

resent_status resent_run_record(const resent_run* r, size_t index, resent_record* out) {
  RESENT_REQUIRE(r != nullptr && out != nullptr, "null argument");
  RESENT_REQUIRE(index < r->result.records.size(), "record index out of range");
  *out = to_record(r->result.records[index]);
  return RESENT_OK;
}

const char* resent_run_abort_reason(const resent_run* r) {
  if (r == nullptr || !r->result.abort_reason) return nullptr;
  return r->result.abort_reason->c_str();
}

resent_status resent_run_iterations_csv(const resent_run* r, char** out) {
  RESENT_REQUIRE(r != nullptr && out != nullptr, "null argument");
  *out = nullptr;
  return guarded([&] { return give(resent::iterations_csv(r->result.records, r->system.dim()), out); });
}

resent_status resent_run_timing_csv(const resent_run* r, char** out) {
  RESENT_REQUIRE(r != nullptr && out != nullptr, "null argument");
  *out = nullptr;
  return guarded([&] { return give(resent::timing_csv(r->result.records), out); });
}

resent_status resent_run_summary_json(const resent_run* r, char** out) {
  RESENT_REQUIRE(r != nullptr && out != nullptr, "null argument");
  *out = nullptr;
  return guarded([&] {
    return give(resent::summary_json(r->config, r->system, r->result).dump(2), out);
  });
}

resent_status resent_run_best_metric_json(const resent_run* r, char** out) {
  RESENT_REQUIRE(r != nullptr && out != nullptr, "null argument");
  *out = nullptr;
  return guarded([&] {
    if (r->result.records.empty()) {
      return set_error(RESENT_ERR_NUMERICAL, "run has no evaluated metric");
    }
    return give(resent::metric_to_json(r->system, r->result.best_metric, r->settings.grid).dump(2),
                out);
  });
}

resent_status resent_run_convergence_svg(const resent_run* r, char** out) {
  RESENT_REQUIRE(r != nullptr && out != nullptr, "null argument");
  *out = nullptr;
  return guarded([&] {
    // Rendered from the CSV text so the plot is a function of the log alone.
    const std::string csv = resent::iterations_csv(r->result.records, r->system.dim());
    return give(resent::render_convergence_svg(resent::parse_iterations_csv(csv), r->system.name),
                out);
  });
}

resent_status resent_plot_svg_from_csv(const char* csv, const char* title, char** out) {
  RESENT_REQUIRE(csv != nullptr && out != nullptr, "null argument");
  *out = nullptr;
  return guarded([&] {
    return give(resent::render_convergence_svg(resent::parse_iterations_csv(csv),
                                               title == nullptr ? "" : title),
                out);
  });
}

}  // extern "C"
