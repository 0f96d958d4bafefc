#include "resent/report.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "resent/error.hpp"

namespace resent {

namespace {

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

[[noreturn]] void config_error(const std::string& what) { fail(ErrorCode::kConfig, what); }

template <typename T>
T get_as(const json& j, const char* key) {
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    config_error(std::string("config field '") + key + "': " + e.what());
  }
}

const char* kKnownKeys[] = {"system", "params",  "degree",  "include_constant",
                            "grid",   "refine",  "step",    "max_iters",
                            "initial", "workers", "output_dir", "seed",
                            "poly_frame"};

PolyFrame parse_frame(const json& f) {
  if (!f.is_object()) config_error("'poly_frame' must be an object {\"center\": [..], \"scale\": [..]}");
  for (const auto& [key, value] : f.items()) {
    if (key != "center" && key != "scale") config_error("unknown poly_frame field '" + key + "'");
  }
  PolyFrame frame;
  if (f.contains("center")) frame.center = get_as<std::vector<double>>(f, "center");
  if (f.contains("scale")) frame.scale = get_as<std::vector<double>>(f, "scale");
  for (double s : frame.scale) {
    if (!(s > 0.0)) config_error("poly_frame scale entries must be positive");
  }
  return frame;
}

json frame_json(const PolyFrame& f) {
  return {{"center", f.center}, {"scale", f.scale}};
}

}  // namespace

RunConfig parse_run_config(const json& j) {
  if (!j.is_object()) config_error("config must be a JSON object");
  for (const auto& [key, value] : j.items()) {
    if (std::find(std::begin(kKnownKeys), std::end(kKnownKeys), key) == std::end(kKnownKeys)) {
      config_error("unknown config field '" + key + "'");
    }
  }
  RunConfig c;
  if (!j.contains("system") || !j["system"].is_string() || j["system"].get<std::string>().empty()) {
    config_error("config needs a non-empty string field 'system'");
  }
  c.system = j["system"].get<std::string>();
  if (j.contains("params")) {
    if (!j["params"].is_object()) config_error("'params' must be an object of numbers");
    for (const auto& [key, value] : j["params"].items()) {
      if (!value.is_number()) config_error("parameter '" + key + "' must be a number");
      c.params[key] = value.get<double>();
    }
  }
  if (j.contains("degree")) {
    c.degree = get_as<int>(j, "degree");
    if (*c.degree < 0) config_error("'degree' must be nonnegative");
  }
  if (j.contains("include_constant")) c.include_constant = get_as<bool>(j, "include_constant");
  if (j.contains("poly_frame")) c.frame = parse_frame(j["poly_frame"]);
  if (j.contains("grid")) {
    c.grid = get_as<std::vector<int>>(j, "grid");
    for (int v : *c.grid) {
      if (v < 2) config_error("grid counts must be at least 2");
    }
  }
  if (j.contains("refine")) c.refine = get_as<bool>(j, "refine");
  if (j.contains("step")) {
    const json& s = j["step"];
    if (!s.is_object()) config_error("'step' must be an object {\"a\": .., \"b\": ..}");
    StepRule rule;
    if (s.contains("a")) rule.a = get_as<double>(s, "a");
    if (s.contains("b")) rule.b = get_as<double>(s, "b");
    if (!(rule.a > 0.0) || !(rule.b >= 0.0)) config_error("step rule needs a > 0 and b >= 0");
    c.step = rule;
  }
  if (j.contains("max_iters")) {
    c.max_iters = get_as<int>(j, "max_iters");
    if (*c.max_iters < 0) config_error("'max_iters' must be nonnegative");
  }
  if (j.contains("initial")) {
    if (!j["initial"].is_object()) config_error("'initial' must be an object");
    c.initial = j["initial"];
  }
  if (j.contains("workers")) {
    c.workers = get_as<int>(j, "workers");
    if (c.workers < 0) config_error("'workers' must be nonnegative");
  }
  if (j.contains("output_dir")) c.output_dir = get_as<std::string>(j, "output_dir");
  if (j.contains("seed")) c.seed = get_as<std::uint64_t>(j, "seed");
  return c;
}

SystemCase make_case(const RunConfig& config) {
  SystemCase c = make_case(config.system, config.params);
  if (config.grid && static_cast<int>(config.grid->size()) != c.dim()) {
    std::ostringstream os;
    os << "grid has " << config.grid->size() << " axes, system " << c.name << " has dimension "
       << c.dim();
    config_error(os.str());
  }
  const int degree = config.degree.value_or(c.defaults.degree);
  if (c.domain.is_cylinder() && (degree != 0 || config.include_constant)) {
    config_error("system " + c.name +
                 " lives on a cylinder; only constant metrics (degree 0, no constant term) "
                 "are supported");
  }
  for (const auto* v : {&config.frame.center, &config.frame.scale}) {
    if (!v->empty() && static_cast<int>(v->size()) != c.dim()) {
      config_error("poly_frame center/scale must have one entry per state variable");
    }
  }
  return c;
}

ConformalMetric metric_from_parts(int n, int degree, bool include_constant, const json& coeffs,
                                  const json& p_row_major, const PolyFrame& frame) {
  PolyBasis basis;
  try {
    basis = PolyBasis(n, degree, include_constant, frame);
  } catch (const Error& e) {
    config_error(std::string("invalid polynomial basis: ") + e.what());
  }
  std::vector<double> a;
  std::vector<double> p;
  try {
    a = coeffs.get<std::vector<double>>();
    p = p_row_major.get<std::vector<double>>();
  } catch (const json::exception& e) {
    config_error(std::string("metric arrays: ") + e.what());
  }
  if (static_cast<int>(a.size()) != basis.size()) {
    std::ostringstream os;
    os << "metric has " << a.size() << " coefficients, basis (n=" << n << ", d=" << degree
       << ") has " << basis.size();
    config_error(os.str());
  }
  if (static_cast<int>(p.size()) != n * n) {
    config_error("metric matrix must have n*n entries in row-major order");
  }
  Matrix pm(n, n);
  for (int i = 0; i < n; ++i) {
    for (int k = 0; k < n; ++k) pm(i, k) = p[i * n + k];
  }
  if ((pm - pm.transpose()).cwiseAbs().maxCoeff() > 1e-12 * std::max(1.0, pm.cwiseAbs().maxCoeff())) {
    config_error("metric matrix is not symmetric");
  }
  try {
    return {PolyCoeffs(basis, Eigen::Map<const Vector>(a.data(), static_cast<Eigen::Index>(a.size()))),
            SpdMatrix(pm)};
  } catch (const Error& e) {
    config_error(std::string("invalid metric: ") + e.what());
  }
}

RunSettings resolve_settings(const RunConfig& config, const SystemCase& c) {
  RunSettings s;
  s.degree = config.degree.value_or(c.defaults.degree);
  s.include_constant = config.include_constant;
  s.frame = config.frame;
  s.grid.counts = config.grid.value_or(c.defaults.grid);
  s.grid.refine = config.refine;
  s.grid.workers = config.workers;
  s.step = config.step.value_or(StepRule{c.defaults.step_a, c.defaults.step_b});
  s.max_iters = config.max_iters.value_or(c.defaults.max_iters);
  if (config.initial) {
    const json& init = *config.initial;
    if (!init.contains("coeffs") || !init.contains("p")) {
      config_error("'initial' needs 'coeffs' and 'p'");
    }
    s.initial = metric_from_parts(c.dim(), s.degree, s.include_constant, init["coeffs"], init["p"],
                                  s.frame);
  }
  return s;
}

json resolved_config_json(const RunConfig& config, const SystemCase& c) {
  const RunSettings s = resolve_settings(config, c);
  json j;
  j["system"] = c.name;
  j["params"] = c.params;
  j["degree"] = s.degree;
  j["include_constant"] = s.include_constant;
  if (!s.frame.is_identity()) j["poly_frame"] = frame_json(s.frame);
  j["grid"] = s.grid.counts;
  j["refine"] = s.grid.refine;
  j["step"] = {{"a", s.step.a}, {"b", s.step.b}};
  j["max_iters"] = s.max_iters;
  if (config.initial) j["initial"] = *config.initial;
  j["workers"] = config.workers;
  j["output_dir"] = config.output_dir;
  j["seed"] = config.seed;
  return j;
}

json metric_to_json(const SystemCase& c, const ConformalMetric& m, const GridConfig& grid) {
  const PolyBasis& b = m.coeffs.basis;
  json j;
  j["system"] = c.name;
  j["params"] = c.params;
  j["basis"] = {{"n", b.n_vars()},
                {"degree", b.degree()},
                {"include_constant", b.include_constant()},
                {"ordering", kOrderingTag},
                {"monomials", b.monomials()}};
  if (!b.frame().is_identity()) j["basis"]["frame"] = frame_json(b.frame());
  j["coeffs"] = std::vector<double>(m.coeffs.a.data(), m.coeffs.a.data() + m.coeffs.a.size());
  std::vector<double> p;
  const int n = m.dim();
  for (int i = 0; i < n; ++i) {
    for (int k = 0; k < n; ++k) p.push_back(m.p.matrix()(i, k));
  }
  j["p"] = p;
  j["grid"] = {{"counts", grid.counts}, {"refine", grid.refine}};
  return j;
}

MetricFile metric_from_json(const json& j) {
  if (!j.is_object()) config_error("metric file must be a JSON object");
  if (!j.contains("basis") || !j["basis"].is_object()) config_error("metric file needs 'basis'");
  const json& b = j["basis"];
  const std::string ordering = b.value("ordering", std::string());
  if (ordering != kOrderingTag) {
    config_error("metric basis ordering '" + ordering + "' is not '" + kOrderingTag +
                 "'; refusing to reinterpret coefficients");
  }
  MetricFile out;
  out.system = j.value("system", std::string());
  if (j.contains("params")) {
    for (const auto& [key, value] : j["params"].items()) out.params[key] = value.get<double>();
  }
  const int n = get_as<int>(b, "n");
  const int degree = get_as<int>(b, "degree");
  const bool include_constant = b.value("include_constant", false);
  if (n < 1 || degree < 0) config_error("metric basis has invalid n or degree");
  if (!j.contains("coeffs") || !j.contains("p")) config_error("metric file needs 'coeffs' and 'p'");
  const PolyFrame frame = b.contains("frame") ? parse_frame(b["frame"]) : PolyFrame{};
  out.metric = metric_from_parts(n, degree, include_constant, j["coeffs"], j["p"], frame);
  if (b.contains("monomials") &&
      b["monomials"].get<std::vector<std::vector<int>>>() != out.metric.coeffs.basis.monomials()) {
    config_error("metric basis monomials do not match the grlex-v1 ordering");
  }
  if (j.contains("grid")) {
    GridConfig g;
    g.counts = get_as<std::vector<int>>(j["grid"], "counts");
    g.refine = j["grid"].value("refine", true);
    out.grid = g;
  }
  return out;
}

std::string iterations_csv(const std::vector<IterationRecord>& records, int dim) {
  std::ostringstream os;
  os << "k,theta,value,best_value,k_star,subgrad_norm,gap_ok";
  for (int i = 1; i <= dim; ++i) os << ",x_star_" << i;
  os << "\n";
  for (const auto& r : records) {
    os << r.k << "," << fmt(r.theta) << "," << fmt(r.value) << "," << fmt(r.best_value) << ","
       << r.k_star << "," << fmt(r.subgrad_norm) << "," << (r.gap_ok ? 1 : 0);
    for (int i = 0; i < dim; ++i) os << "," << fmt(r.x_star(i));
    os << "\n";
  }
  return os.str();
}

std::string timing_csv(const std::vector<IterationRecord>& records) {
  std::ostringstream os;
  os << "k,wall_time_ms\n";
  for (const auto& r : records) os << r.k << "," << fmt(r.wall_time_ms) << "\n";
  return os.str();
}

json bounds_json(const SystemCase& c) {
  json j;
  j["system"] = c.name;
  j["params"] = c.params;
  if (c.reference.entropy) j["entropy"] = *c.reference.entropy;
  if (c.reference.lower) j["lower"] = *c.reference.lower;
  if (c.reference.upper) j["upper"] = *c.reference.upper;
  return j;
}

json summary_json(const RunConfig& config, const SystemCase& c, const RunResult& result) {
  json j;
  j["system"] = c.name;
  j["best_value"] = result.best_value;
  j["best_iteration"] = result.best_iteration;
  j["evaluations"] = result.records.size();
  j["steps"] = result.records.empty() ? 0 : result.records.size() - 1;
  if (!result.records.empty()) {
    j["initial_value"] = result.records.front().value;
    j["final_value"] = result.records.back().value;
  }
  int gap_warnings = 0;
  double total_ms = 0.0;
  for (const auto& r : result.records) {
    gap_warnings += r.gap_ok ? 0 : 1;
    total_ms += r.wall_time_ms;
  }
  j["gap_warnings"] = gap_warnings;
  j["wall_time_ms"] = total_ms;
  j["reference"] = bounds_json(c);
  j["stopped_on_zero_subgradient"] = result.stopped_on_zero_subgradient;
  j["aborted"] = result.abort_reason.has_value();
  if (result.abort_reason) j["abort_reason"] = *result.abort_reason;
  j["config"] = resolved_config_json(config, c);
  return j;
}

std::vector<ConvergencePoint> convergence_points(const std::vector<IterationRecord>& records) {
  std::vector<ConvergencePoint> out;
  out.reserve(records.size());
  for (const auto& r : records) out.push_back({r.k, r.value, r.best_value});
  return out;
}

std::vector<ConvergencePoint> parse_iterations_csv(const std::string& csv) {
  std::istringstream in(csv);
  std::string line;
  if (!std::getline(in, line)) config_error("iterations.csv is empty");
  std::vector<std::string> header;
  {
    std::istringstream h(line);
    std::string cell;
    while (std::getline(h, cell, ',')) header.push_back(cell);
  }
  auto column = [&](const std::string& name) {
    auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) config_error("iterations.csv lacks column '" + name + "'");
    return static_cast<std::size_t>(it - header.begin());
  };
  const std::size_t ck = column("k"), cv = column("value"), cb = column("best_value");
  std::vector<ConvergencePoint> out;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::istringstream row(line);
    std::string cell;
    while (std::getline(row, cell, ',')) cells.push_back(cell);
    if (cells.size() != header.size()) config_error("iterations.csv row has wrong column count");
    ConvergencePoint p;
    try {
      p.k = std::stoi(cells[ck]);
      p.value = std::stod(cells[cv]);
      p.best_value = std::stod(cells[cb]);
    } catch (const std::exception&) {
      config_error("iterations.csv has a malformed number: " + line);
    }
    out.push_back(p);
  }
  return out;
}

std::string render_convergence_svg(const std::vector<ConvergencePoint>& points,
                                   const std::string& title) {
  constexpr double kWidth = 720, kHeight = 480;
  constexpr double kLeft = 90, kRight = 20, kTop = 40, kBottom = 60;
  const double plot_w = kWidth - kLeft - kRight, plot_h = kHeight - kTop - kBottom;

  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\""
     << kHeight << "\" viewBox=\"0 0 " << kWidth << " " << kHeight << "\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << "<text x=\"" << kWidth / 2 << "\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" "
        "font-size=\"15\">"
     << title << "</text>\n";

  double kmax = 1.0, vmin = 0.0, vmax = 0.0;
  bool any = false;
  for (const auto& p : points) {
    if (!(p.value > 0.0)) continue;
    kmax = std::max(kmax, static_cast<double>(p.k));
    if (!any) {
      vmin = vmax = p.value;
      any = true;
    }
    vmin = std::min({vmin, p.value, p.best_value > 0 ? p.best_value : p.value});
    vmax = std::max(vmax, p.value);
  }
  if (!any) {
    os << "<text x=\"" << kWidth / 2 << "\" y=\"" << kHeight / 2
       << "\" text-anchor=\"middle\" font-family=\"sans-serif\">no positive values</text>\n</svg>\n";
    return os.str();
  }
  double lo = std::log10(vmin), hi = std::log10(vmax);
  if (hi - lo < 1e-12) {
    lo -= 0.01;
    hi += 0.01;
  }
  const double pad = 0.05 * (hi - lo);
  lo -= pad;
  hi += pad;
  const double kx = std::log10(std::max(kmax, 10.0));

  auto sx = [&](double k) { return kLeft + plot_w * std::log10(k) / kx; };
  auto sy = [&](double v) { return kTop + plot_h * (1.0 - (std::log10(v) - lo) / (hi - lo)); };

  os << "<rect x=\"" << kLeft << "\" y=\"" << kTop << "\" width=\"" << plot_w << "\" height=\""
     << plot_h << "\" fill=\"none\" stroke=\"black\"/>\n";

  // Decade ticks on the iteration axis.
  for (double d = 1.0; d <= std::pow(10.0, kx) * 1.0000001; d *= 10.0) {
    const double x = sx(d);
    os << "<line x1=\"" << x << "\" y1=\"" << kTop + plot_h << "\" x2=\"" << x << "\" y2=\""
       << kTop + plot_h + 5 << "\" stroke=\"black\"/>\n";
    os << "<text x=\"" << x << "\" y=\"" << kTop + plot_h + 20
       << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">" << d
       << "</text>\n";
  }
  // Five ticks evenly spaced in log value.
  for (int t = 0; t <= 4; ++t) {
    const double lv = lo + (hi - lo) * t / 4.0;
    const double v = std::pow(10.0, lv);
    const double y = sy(v);
    char label[32];
    std::snprintf(label, sizeof label, "%.6g", v);
    os << "<line x1=\"" << kLeft - 5 << "\" y1=\"" << y << "\" x2=\"" << kLeft << "\" y2=\"" << y
       << "\" stroke=\"black\"/>\n";
    os << "<text x=\"" << kLeft - 8 << "\" y=\"" << y + 4
       << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"12\">" << label
       << "</text>\n";
  }
  os << "<text x=\"" << kLeft + plot_w / 2 << "\" y=\"" << kHeight - 15
     << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\">iteration</text>\n";
  os << "<text x=\"20\" y=\"" << kTop + plot_h / 2
     << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\" transform=\"rotate(-90 20 "
     << kTop + plot_h / 2 << ")\">entropy estimate</text>\n";

  auto polyline = [&](auto value_of, const char* colour) {
    os << "<polyline fill=\"none\" stroke=\"" << colour << "\" stroke-width=\"1.2\" points=\"";
    bool first = true;
    for (const auto& p : points) {
      const double v = value_of(p);
      if (!(v > 0.0) || p.k < 1) continue;
      os << (first ? "" : " ") << fmt(sx(p.k)) << "," << fmt(sy(v));
      first = false;
    }
    os << "\"/>\n";
  };
  polyline([](const ConvergencePoint& p) { return p.value; }, "#1f77b4");
  polyline([](const ConvergencePoint& p) { return p.best_value; }, "#d62728");

  os << "<text x=\"" << kLeft + plot_w - 10 << "\" y=\"" << kTop + 18
     << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"12\" fill=\"#1f77b4\">value</text>\n";
  os << "<text x=\"" << kLeft + plot_w - 10 << "\" y=\"" << kTop + 34
     << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"12\" fill=\"#d62728\">best value</text>\n";
  os << "</svg>\n";
  return os.str();
}

}  // namespace resent
