// resent: command-line front end over the C API.
//
//   resent run <config.json> [--workers N] [--max-iters N] [--output-dir DIR] [--grid N,N,..]
//   resent evaluate <metric.json> [--system NAME] [--param k=v].. [--grid ..] [--no-refine]
//   resent bounds <system> [--param k=v]..
//   resent plot <iterations.csv> [--title T] [-o out.svg]
//   resent systems
//
// Exit codes: 0 success, 2 configuration or usage error, 3 numerical abort.

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "resent/resent.h"

namespace {

using json = nlohmann::json;
namespace fs = std::filesystem;

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitNumerical = 3;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

int exit_code(resent_status s) {
  switch (s) {
    case RESENT_OK: return kExitOk;
    case RESENT_ERR_NUMERICAL: return kExitNumerical;
    case RESENT_ERR_INTERNAL: return 1;
    default: return kExitConfig;
  }
}

int report(resent_status s, const std::string& context) {
  std::cerr << "resent: " << context << ": " << resent_status_name(s) << ": "
            << resent_last_error() << "\n";
  return exit_code(s);
}

// Takes ownership of a string handed out by the library.
std::string take(char* s) {
  std::string out = s == nullptr ? std::string() : std::string(s);
  resent_free_string(s);
  return out;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UsageError("cannot read " + path);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << content;
}

std::vector<int> parse_counts(const std::string& text) {
  std::vector<int> counts;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      counts.push_back(std::stoi(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw UsageError("bad grid count '" + item + "'");
    }
  }
  if (counts.empty()) throw UsageError("empty grid specification");
  return counts;
}

json parse_params(const std::vector<std::string>& items) {
  json params = json::object();
  for (const auto& item : items) {
    const auto eq = item.find('=');
    if (eq == std::string::npos || eq == 0) throw UsageError("--param expects key=value, got " + item);
    try {
      std::size_t used = 0;
      const std::string v = item.substr(eq + 1);
      params[item.substr(0, eq)] = std::stod(v, &used);
      if (used != v.size()) throw std::invalid_argument(v);
    } catch (const std::exception&) {
      throw UsageError("bad numeric value in --param " + item);
    }
  }
  return params;
}

struct RunOptions {
  std::string config;
  std::optional<int> workers;
  std::optional<int> max_iters;
  std::optional<std::string> output_dir;
  std::optional<std::string> grid;
  bool quiet = false;
  int every = 100;
};

struct Progress {
  int every = 100;
  bool quiet = false;
};

void on_progress(const resent_record* r, void* user) {
  const auto* p = static_cast<const Progress*>(user);
  if (p->quiet) return;
  if (r->k == 1 || r->k % p->every == 0) {
    std::fprintf(stderr, "iter %6d  value %.12g  best %.12g  |s| %.3e%s\n", r->k, r->value,
                 r->best_value, r->subgrad_norm, r->gap_ok ? "" : "  (spectral gap warning)");
  }
}

int cmd_run(const RunOptions& o) {
  json config;
  try {
    config = json::parse(read_file(o.config));
  } catch (const json::exception& e) {
    throw UsageError(o.config + ": " + e.what());
  }
  if (!config.is_object()) throw UsageError(o.config + ": config must be a JSON object");
  if (o.workers) config["workers"] = *o.workers;
  if (o.max_iters) config["max_iters"] = *o.max_iters;
  if (o.output_dir) config["output_dir"] = *o.output_dir;
  if (o.grid) config["grid"] = parse_counts(*o.grid);
  const fs::path out_dir = config.value("output_dir", std::string("out"));

  Progress progress{std::max(1, o.every), o.quiet};
  resent_run* raw = nullptr;
  const resent_status s = resent_run_create(config.dump().c_str(), on_progress, &progress, &raw);
  std::unique_ptr<resent_run, decltype(&resent_run_free)> run(raw, resent_run_free);
  if (s != RESENT_OK && run == nullptr) return report(s, o.config);
  const std::string abort_message = s == RESENT_OK ? std::string() : resent_last_error();

  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw std::runtime_error("cannot create " + out_dir.string() + ": " + ec.message());

  char* text = nullptr;
  auto emit = [&](resent_status st, const char* name) {
    if (st != RESENT_OK) {
      std::cerr << "resent: " << name << ": " << resent_last_error() << "\n";
      return;
    }
    write_file(out_dir / name, take(text));
    text = nullptr;
  };
  emit(resent_run_iterations_csv(run.get(), &text), "iterations.csv");
  emit(resent_run_timing_csv(run.get(), &text), "timing.csv");
  emit(resent_run_summary_json(run.get(), &text), "summary.json");
  if (resent_run_record_count(run.get()) > 0) {
    emit(resent_run_best_metric_json(run.get(), &text), "best_metric.json");
  }
  emit(resent_run_convergence_svg(run.get(), &text), "convergence.svg");

  if (s != RESENT_OK) {
    std::cerr << "resent: run aborted: " << abort_message << "\n"
              << "resent: partial outputs written to " << out_dir.string() << "\n";
    return exit_code(s);
  }
  std::printf("best value %.15g at iteration %d (%zu evaluations); outputs in %s\n",
              resent_run_best_value(run.get()), resent_run_best_iteration(run.get()),
              resent_run_record_count(run.get()), out_dir.string().c_str());
  return kExitOk;
}

struct EvaluateOptions {
  std::string metric;
  std::string system;
  std::vector<std::string> params;
  std::optional<std::string> grid;
  bool no_refine = false;
  int workers = 0;
};

int cmd_evaluate(const EvaluateOptions& o) {
  const std::string text = read_file(o.metric);
  resent_metric* mraw = nullptr;
  resent_status s = resent_metric_from_json(text.c_str(), &mraw);
  if (s != RESENT_OK) return report(s, o.metric);
  std::unique_ptr<resent_metric, decltype(&resent_metric_free)> metric(mraw, resent_metric_free);

  char* origin_text = nullptr;
  s = resent_metric_origin_json(metric.get(), &origin_text);
  if (s != RESENT_OK) return report(s, o.metric);
  const json origin = json::parse(take(origin_text));

  std::string system = o.system;
  if (system.empty()) system = origin.value("system", std::string());
  if (system.empty()) throw UsageError("metric file names no system; pass --system");
  json params = origin.value("params", json::object());
  if (!o.params.empty() || !o.system.empty()) params = parse_params(o.params);

  resent_case* craw = nullptr;
  s = resent_case_create(system.c_str(), params.dump().c_str(), &craw);
  if (s != RESENT_OK) return report(s, system);
  std::unique_ptr<resent_case, decltype(&resent_case_free)> sys(craw, resent_case_free);

  json grid = json::object();
  if (o.grid) grid["counts"] = parse_counts(*o.grid);
  if (o.no_refine) grid["refine"] = false;
  grid["workers"] = o.workers;

  char* result = nullptr;
  s = resent_evaluate(sys.get(), metric.get(), grid.dump().c_str(), &result);
  if (s != RESENT_OK) return report(s, "evaluate");
  std::cout << json::parse(take(result)).dump(2) << "\n";
  return kExitOk;
}

int cmd_bounds(const std::string& system, const std::vector<std::string>& param_items) {
  const json params = parse_params(param_items);
  resent_case* craw = nullptr;
  resent_status s = resent_case_create(system.c_str(), params.dump().c_str(), &craw);
  if (s != RESENT_OK) return report(s, system);
  std::unique_ptr<resent_case, decltype(&resent_case_free)> sys(craw, resent_case_free);
  char* out = nullptr;
  s = resent_case_bounds_json(sys.get(), &out);
  if (s != RESENT_OK) return report(s, system);
  // Full precision for the closed-form values.
  const json j = json::parse(take(out));
  std::cout << "{\n  \"system\": " << j["system"].dump();
  for (const char* key : {"entropy", "lower", "upper"}) {
    if (j.contains(key)) {
      char buf[40];
      std::snprintf(buf, sizeof buf, "%.17g", j[key].get<double>());
      std::cout << ",\n  \"" << key << "\": " << buf;
    }
  }
  std::cout << ",\n  \"params\": " << j["params"].dump() << "\n}\n";
  return kExitOk;
}

int cmd_plot(const std::string& csv_path, const std::string& title, const std::string& out) {
  const std::string csv = read_file(csv_path);
  char* svg = nullptr;
  const resent_status s = resent_plot_svg_from_csv(csv.c_str(), title.c_str(), &svg);
  if (s != RESENT_OK) return report(s, csv_path);
  const std::string text = take(svg);
  if (out.empty() || out == "-") {
    std::cout << text;
  } else {
    write_file(out, text);
  }
  return kExitOk;
}

int cmd_systems() {
  char* out = nullptr;
  const resent_status s = resent_systems_json(&out);
  if (s != RESENT_OK) return report(s, "systems");
  for (const auto& name : json::parse(take(out))) std::cout << name.get<std::string>() << "\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Restoration-entropy upper bounds by Riemannian subgradient optimization"};
  app.require_subcommand(1);

  RunOptions run_opts;
  auto* run = app.add_subcommand("run", "Optimize a metric as described by a JSON config");
  run->add_option("config", run_opts.config, "Config file")->required();
  run->add_option("--workers", run_opts.workers, "Grid worker threads (0 = all cores)");
  run->add_option("--max-iters", run_opts.max_iters, "Number of subgradient steps");
  run->add_option("--output-dir", run_opts.output_dir, "Directory for the outputs");
  run->add_option("--grid", run_opts.grid, "Grid counts, comma separated");
  run->add_option("--progress-every", run_opts.every, "Progress line interval")->capture_default_str();
  run->add_flag("-q,--quiet", run_opts.quiet, "No progress output");

  EvaluateOptions eval_opts;
  auto* evaluate = app.add_subcommand("evaluate", "Entropy estimate of a stored metric");
  evaluate->add_option("metric", eval_opts.metric, "Metric file (best_metric.json format)")->required();
  evaluate->add_option("--system", eval_opts.system, "System name (default: from the file)");
  evaluate->add_option("--param", eval_opts.params, "System parameter override key=value");
  evaluate->add_option("--grid", eval_opts.grid, "Grid counts, comma separated");
  evaluate->add_flag("--no-refine", eval_opts.no_refine, "Skip the refinement pass");
  evaluate->add_option("--workers", eval_opts.workers, "Grid worker threads (0 = all cores)");

  std::string bounds_system;
  std::vector<std::string> bounds_params;
  auto* bounds = app.add_subcommand("bounds", "Closed-form entropy or bounds of a system");
  bounds->add_option("system", bounds_system, "System name")->required();
  bounds->add_option("--param", bounds_params, "System parameter override key=value");

  std::string plot_csv, plot_title, plot_out;
  auto* plot = app.add_subcommand("plot", "Render convergence.svg from iterations.csv");
  plot->add_option("csv", plot_csv, "iterations.csv")->required();
  plot->add_option("--title", plot_title, "Plot title (runs use the system name)");
  plot->add_option("-o,--output", plot_out, "Output file (default stdout)");

  auto* systems = app.add_subcommand("systems", "List registered systems");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }

  try {
    if (run->parsed()) return cmd_run(run_opts);
    if (evaluate->parsed()) return cmd_evaluate(eval_opts);
    if (bounds->parsed()) return cmd_bounds(bounds_system, bounds_params);
    if (plot->parsed()) return cmd_plot(plot_csv, plot_title, plot_out);
    if (systems->parsed()) return cmd_systems();
  } catch (const UsageError& e) {
    std::cerr << "resent: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "resent: " << e.what() << "\n";
    return 1;
  }
  return kExitConfig;
}
