#include "ptsel/bench.hpp"

#include "ptsel/comparison.hpp"
#include "ptsel/field.hpp"
#include "ptsel/oracle.hpp"
#include "ptsel/rng.hpp"
#include "ptsel/selector.hpp"

#include <boost/math/distributions/students_t.hpp>
#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <memory>
#include <ostream>
#include <sstream>
#include <stdexcept>

#ifndef PTSEL_VERSION
#define PTSEL_VERSION "0.0.0"
#endif

namespace ptsel {

namespace {

namespace pt = boost::property_tree;
namespace fs = std::filesystem;

std::string fmt(double v)
{
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string trim(std::string s)
{
  auto b = s.find_first_not_of(" \t\r");
  auto e = s.find_last_not_of(" \t\r");
  return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
}

std::vector<double> parse_list(const std::string& s, const std::string& key)
{
  std::vector<double> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (item.empty())
      continue;
    std::size_t pos = 0;
    double v = 0;
    try {
      v = std::stod(item, &pos);
    } catch (const std::exception&) {
      pos = 0;
    }
    if (pos != item.size())
      throw std::invalid_argument("config: bad number '" + item + "' in " + key);
    out.push_back(v);
  }
  return out;
}

bool is_number(const std::string& s)
{
  if (s.empty())
    return false;
  char* end = nullptr;
  std::strtod(s.c_str(), &end);
  return end == s.c_str() + s.size();
}

template <class T>
T get_or(const pt::ptree& sec, const std::string& key, T def)
{
  auto v = sec.get_optional<std::string>(key);
  if (!v)
    return def;
  std::string s = trim(*v);
  std::istringstream is(s);
  T out{};
  is >> out;
  if (!is || !is.eof())
    throw std::invalid_argument("config: bad value '" + s + "' for " + key);
  return out;
}

std::string get_str(const pt::ptree& sec, const std::string& key, const std::string& def)
{
  auto v = sec.get_optional<std::string>(key);
  return v ? trim(*v) : def;
}

FamilyConfig parse_family_section(const pt::ptree& sec, const std::string& name)
{
  FamilyConfig fc;
  std::string def = name == "family" ? "main"
                    : name.size() > 7 && name[6] == '_' ? name.substr(7) : name;
  fc.label = get_str(sec, "label", def);
  fc.spec.family = parse_family(get_str(sec, "kind", "general"));
  fc.spec.profile = parse_profile(get_str(sec, "profile", "triweight"));
  fc.spec.order = get_or<int>(sec, "order", 0);
  fc.spec.sigma_ratio = get_or<double>(sec, "sigma_ratio", fc.spec.sigma_ratio);
  fc.spec.angle_density = get_or<double>(sec, "angle_density", fc.spec.angle_density);
  fc.spec.max_angles = get_or<int>(sec, "max_angles", fc.spec.max_angles);
  fc.spec.n_angles = get_or<int>(sec, "n_angles", 0);
  fc.spec.gamma = get_or<double>(sec, "gamma", 1.0);
  fc.variant = parse_variant(get_str(sec, "variant", "general"));
  fc.h_min_rule = get_str(sec, "h_min", "eps2");
  fc.h_max_rule = get_str(sec, "h_max", "half");
  fc.phi_rule = get_str(sec, "phi", fc.spec.family == Family::aniso_holder ? "aniso" : "none");
  fc.alpha_max = get_or<double>(sec, "alpha_max", 1.0);
  return fc;
}

double log_factor_value(LogFactor lf, double eps)
{
  switch (lf) {
  case LogFactor::none:
    return 1.0;
  case LogFactor::sqrt_log:
    return std::sqrt(std::log(1.0 / eps));
  case LogFactor::sqrt_loglog:
    return std::sqrt(std::log(std::log(1.0 / eps)));
  case LogFactor::besov:
    break;
  }
  throw std::invalid_argument("rate_fit: the Besov log factor needs the function parameters");
}

void ensure_dir(const fs::path& dir)
{
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec)
    throw std::runtime_error("cannot create directory " + dir.string() + ": " + ec.message());
}

std::ofstream open_out(const fs::path& path)
{
  std::ofstream os(path, std::ios::binary);
  if (!os)
    throw std::runtime_error("cannot open " + path.string() + " for writing");
  return os;
}

void check_written(std::ofstream& os, const fs::path& path)
{
  os.flush();
  if (!os)
    throw std::runtime_error("write failed: " + path.string());
}

// Everything about one family at one eps.
struct FamilyRun
{
  const FamilyConfig* fc = nullptr;
  FamilySpec spec;
  ThetaGrid theta;
  std::unique_ptr<ComparisonEngine> engine;
  ETable table;
  MajorantSpec mspec;
  std::vector<OracleReport> oracle;
  std::vector<double> err_r;   // per replication: mean over nodes of |err|^r
  double sigma_sum = 0.0;
  std::optional<SelectionResult> trace;
};

} // namespace

LogFactor parse_log_factor(std::string_view s)
{
  if (s == "none")
    return LogFactor::none;
  if (s == "sqrt_log")
    return LogFactor::sqrt_log;
  if (s == "sqrt_loglog")
    return LogFactor::sqrt_loglog;
  if (s == "besov")
    return LogFactor::besov;
  throw std::invalid_argument("unknown log factor '" + std::string(s) + "'");
}

std::string_view to_string(LogFactor f)
{
  switch (f) {
  case LogFactor::none:
    return "none";
  case LogFactor::sqrt_log:
    return "sqrt_log";
  case LogFactor::sqrt_loglog:
    return "sqrt_loglog";
  case LogFactor::besov:
    return "besov";
  }
  return "none";
}

ExperimentConfig parse_config(std::istream& is, const std::string& origin)
{
  pt::ptree tree;
  try {
    pt::read_ini(is, tree);
  } catch (const pt::ini_parser_error& e) {
    throw std::runtime_error(origin + ": " + e.message() + " (line " +
                             std::to_string(e.line()) + ")");
  }
  ExperimentConfig cfg;
  try {
    const pt::ptree empty;
    auto section = [&](const std::string& name) -> const pt::ptree& {
      auto it = tree.find(name);
      return it == tree.not_found() ? empty : it->second;
    };

    const auto& ex = section("experiment");
    cfg.name = get_str(ex, "name", cfg.name);
    cfg.seed = get_or<std::uint64_t>(ex, "seed", cfg.seed);
    cfg.reps = get_or<int>(ex, "reps", cfg.reps);
    cfg.r = get_or<int>(ex, "r", cfg.r);
    std::string risk = get_str(ex, "risk", "pointwise");
    if (risk != "pointwise" && risk != "global")
      throw std::invalid_argument("config: risk must be pointwise or global");
    cfg.global = risk == "global";
    cfg.out = get_str(ex, "out", cfg.name);

    const auto& fn = section("function");
    auto& f = cfg.function;
    f.kind = get_str(fn, "kind", f.kind);
    f.dim = get_or<int>(fn, "dim", f.dim);
    f.alpha = get_or<double>(fn, "alpha", f.alpha);
    if (auto v = fn.get_optional<std::string>("alpha_vec"))
      f.alpha_vec = parse_list(*v, "alpha_vec");
    f.L = get_or<double>(fn, "L", f.L);
    if (auto v = fn.get_optional<std::string>("omega"))
      f.omega = parse_list(*v, "omega");
    f.s = get_or<double>(fn, "s", f.s);
    f.p = get_or<double>(fn, "p", f.p);
    f.value = get_or<double>(fn, "value", f.value);
    f.inner = get_str(fn, "inner", f.inner);
    f.seed = get_or<std::uint64_t>(fn, "seed", f.seed);

    for (const auto& [name, sec] : tree)
      if (name.rfind("family", 0) == 0) {
        cfg.families.push_back(parse_family_section(sec, name));
        cfg.families.back().spec.dim = f.dim;
      }

    const auto& mj = section("majorant");
    cfg.e_source = get_str(mj, "e_source", cfg.e_source);
    cfg.e_reps = get_or<int>(mj, "e_reps", cfg.e_reps);

    const auto& gr = section("grid");
    cfg.n = get_or<long>(gr, "n", cfg.n);
    if (auto v = gr.get_optional<std::string>("x")) {
      auto xs = parse_list(*v, "x");
      if (static_cast<int>(xs.size()) != f.dim)
        throw std::invalid_argument("config: x needs " + std::to_string(f.dim) + " coordinates");
      for (std::size_t i = 0; i < xs.size(); ++i)
        cfg.x[i] = xs[i];
    }
    cfg.x_grid = get_or<int>(gr, "x_grid", cfg.x_grid);
    cfg.h_floor_cells = get_or<double>(gr, "h_floor_cells", cfg.h_floor_cells);

    const auto& ep = section("eps");
    if (auto v = ep.get_optional<std::string>("values")) {
      cfg.eps = parse_list(*v, "eps.values");
    } else if (ep.get_optional<std::string>("start")) {
      double start = get_or<double>(ep, "start", 0.2);
      double ratio = get_or<double>(ep, "ratio", 0.5);
      int count = get_or<int>(ep, "count", 5);
      for (int k = 0; k < count; ++k)
        cfg.eps.push_back(start * std::pow(ratio, k));
    }

    const auto& ft = section("fit");
    cfg.log_factor = parse_log_factor(get_str(ft, "log_factor", "none"));
    cfg.target = get_or<double>(ft, "target", 0.0);
    cfg.tolerance = get_or<double>(ft, "tolerance", 0.0);
  } catch (const std::exception& e) {
    throw std::runtime_error(origin + ": " + e.what());
  }
  return cfg;
}

ExperimentConfig load_config(const fs::path& path)
{
  std::ifstream is(path);
  if (!is)
    throw std::runtime_error("cannot open config " + path.string());
  return parse_config(is, path.string());
}

void validate_config(const ExperimentConfig& cfg)
{
  const int d = cfg.function.dim;
  if (d < 1 || d > kMaxDim)
    throw std::invalid_argument("config: dimension must be 1..3");
  if (cfg.families.empty())
    throw std::invalid_argument("config: no [family] section");
  if (cfg.reps < 50)
    throw std::invalid_argument("config: reps must be >= 50, got " + std::to_string(cfg.reps));
  if (cfg.r < 1)
    throw std::invalid_argument("config: r must be >= 1");
  if (cfg.e_source != "mc" && cfg.e_source != "bound")
    throw std::invalid_argument("config: e_source must be mc or bound");
  if (cfg.e_reps < 2)
    throw std::invalid_argument("config: e_reps must be >= 2");
  if (cfg.n < 8)
    throw std::invalid_argument("config: n must be >= 8");
  if (cfg.eps.empty())
    throw std::invalid_argument("config: empty eps grid");
  for (std::size_t i = 0; i < cfg.eps.size(); ++i) {
    if (!(cfg.eps[i] > 0) || !std::isfinite(cfg.eps[i]))
      throw std::invalid_argument("config: eps values must be positive");
    if (i > 0 && !(cfg.eps[i] < cfg.eps[i - 1]))
      throw std::invalid_argument("config: eps grid must be strictly decreasing");
  }
  if (cfg.global) {
    if (cfg.x_grid < 1)
      throw std::invalid_argument("config: global risk needs x_grid >= 1");
  } else {
    for (int i = 0; i < d; ++i)
      if (std::abs(cfg.x[i]) > 0.5)
        throw std::invalid_argument("config: x must lie in [-1/2, 1/2]^d");
  }
  for (const auto& fc : cfg.families) {
    if (fc.spec.dim != d)
      throw std::invalid_argument("config: family dimension differs from the function's");
    if (fc.h_min_rule != "eps2" && !is_number(fc.h_min_rule))
      throw std::invalid_argument("config: h_min must be eps2 or a number");
    if (fc.h_max_rule != "half" && fc.h_max_rule != "holder" && fc.h_max_rule != "besov" &&
        !is_number(fc.h_max_rule))
      throw std::invalid_argument("config: h_max must be half, holder, besov or a number");
    if (fc.phi_rule != "none" && fc.phi_rule != "aniso" && !is_number(fc.phi_rule))
      throw std::invalid_argument("config: phi must be none, aniso or a number");
    if (fc.phi_rule == "aniso")
      for (double e : cfg.eps)
        if (!(std::log(1.0 / e) > 1.0))
          throw std::invalid_argument("config: the aniso phi rule needs eps < 1/e");
  }
  for (const auto& fc : cfg.families)
    if (std::count_if(cfg.families.begin(), cfg.families.end(),
                      [&](const FamilyConfig& o) { return o.label == fc.label; }) > 1)
      throw std::invalid_argument("config: duplicate family label '" + fc.label + "'");
}

FamilySpec family_at(const ExperimentConfig& cfg, const FamilyConfig& fc, double eps)
{
  FamilySpec s = fc.spec;
  const double floor_h = cfg.h_floor_cells / static_cast<double>(cfg.n);
  double h_min = fc.h_min_rule == "eps2" ? eps * eps : std::stod(fc.h_min_rule);
  h_min = std::min(std::max(h_min, floor_h), 0.5);

  double h_max = 0.5;
  if (fc.h_max_rule == "holder") {
    h_max = std::pow(eps, 2.0 / (2.0 * fc.alpha_max + 1.0));
  } else if (fc.h_max_rule == "besov") {
    const auto& f = cfg.function;
    if (besov_case(f.s, f.p, cfg.r, f.dim) > 0)
      h_max = std::pow(eps, 2.0 / (2.0 * f.s + f.dim));
  } else if (fc.h_max_rule != "half") {
    h_max = std::stod(fc.h_max_rule);
  }
  s.h_min = h_min;
  s.h_max = std::min(std::max(h_max, h_min), 0.5);

  if (fc.phi_rule == "aniso") {
    double ll = std::log(std::log(1.0 / eps));
    s.phi = std::pow(eps * std::sqrt(ll), 2.0 * s.gamma / (2.0 * s.gamma + 1.0));
  } else if (fc.phi_rule != "none") {
    s.phi = std::stod(fc.phi_rule);
  }
  return s;
}

int besov_case(double s, double p, int r, int d)
{
  double lhs = s * p, rhs = d * (r - p) / 2.0;
  return lhs > rhs ? 1 : (lhs == rhs ? 0 : -1);
}

BesovRate besov_rate(double s, double p, int r, int d)
{
  BesovRate b;
  b.regime = besov_case(s, p, r, d);
  if (b.regime >= 0) {
    b.exponent = s / (s + d / 2.0);
    b.log_power = b.regime == 0 ? 1.0 / r : 0.0;
  } else {
    b.exponent = (s - d * (1.0 / p - 1.0 / r)) / (s - d * (1.0 / p - 0.5));
  }
  return b;
}

RateFit rate_fit(const std::vector<double>& eps, const std::vector<double>& risk,
                 LogFactor lf, double log_power)
{
  const std::size_t m = eps.size();
  if (risk.size() != m)
    throw std::invalid_argument("rate_fit: eps and risk sizes differ");
  if (m < 4)
    throw std::invalid_argument("rate_fit: need at least 4 points, got " + std::to_string(m));
  RateFit f;
  for (std::size_t i = 0; i < m; ++i) {
    if (!(eps[i] > 0) || !(risk[i] > 0) || !std::isfinite(risk[i]))
      throw std::invalid_argument("rate_fit: eps and risks must be positive and finite");
    f.x.push_back(std::log(eps[i] * log_factor_value(lf, eps[i])));
    double y = std::log(risk[i]);
    if (log_power != 0.0)
      y -= log_power * std::log(std::log(1.0 / eps[i]));
    f.y.push_back(y);
  }
  if (std::all_of(risk.begin(), risk.end(), [&](double v) { return v == risk[0]; }))
    throw std::invalid_argument("rate_fit: degenerate (constant) risks");
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < m; ++i) {
    mx += f.x[i];
    my += f.y[i];
  }
  mx /= m;
  my /= m;
  double sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < m; ++i) {
    sxx += (f.x[i] - mx) * (f.x[i] - mx);
    sxy += (f.x[i] - mx) * (f.y[i] - my);
  }
  if (!(sxx > 0))
    throw std::invalid_argument("rate_fit: eps values give no spread in the regressor");
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  double sse = 0;
  for (std::size_t i = 0; i < m; ++i) {
    double res = f.y[i] - (f.intercept + f.slope * f.x[i]);
    f.residuals.push_back(res);
    sse += res * res;
  }
  f.se = std::sqrt(sse / (m - 2) / sxx);
  boost::math::students_t dist(static_cast<double>(m - 2));
  double t = boost::math::quantile(dist, 0.975);
  f.ci_lo = f.slope - t * f.se;
  f.ci_hi = f.slope + t * f.se;
  return f;
}

std::pair<LogFactor, double> resolved_log_factor(const ExperimentConfig& cfg)
{
  if (cfg.log_factor != LogFactor::besov)
    return {cfg.log_factor, 0.0};
  const auto& f = cfg.function;
  auto b = besov_rate(f.s, f.p, cfg.r, f.dim);
  return {b.regime > 0 ? LogFactor::none : LogFactor::sqrt_log, b.log_power};
}

RateFit rate_fit(const RiskReport& report, const ExperimentConfig& cfg)
{
  std::vector<double> e, r;
  for (const auto& p : report.points) {
    e.push_back(p.eps);
    r.push_back(p.risk);
  }
  auto [lf, b] = resolved_log_factor(cfg);
  return rate_fit(e, r, lf, b);
}

std::vector<Point> experiment_points(const ExperimentConfig& cfg)
{
  const int d = cfg.function.dim;
  if (!cfg.global)
    return {cfg.x};
  const int m = cfg.x_grid;
  std::vector<Point> pts;
  long total = 1;
  for (int i = 0; i < d; ++i)
    total *= m;
  for (long k = 0; k < total; ++k) {
    Point p{0, 0, 0};
    long rem = k;
    for (int i = d - 1; i >= 0; --i) {
      p[i] = -0.5 + (static_cast<double>(rem % m) + 0.5) / m;
      rem /= m;
    }
    pts.push_back(p);
  }
  return pts;
}

std::string csv_field(const std::string& s)
{
  if (s.find_first_of(",\"\r\n") == std::string::npos)
    return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"')
      out += '"';
    out += c;
  }
  return out + "\"";
}

namespace {

double grid_margin(const std::vector<FamilyRun>& runs)
{
  double m = 0.0;
  for (const auto& fr : runs)
    m = std::max(m, theta_margin(fr.theta));
  return m;
}

// Spacing exactly 1/n0 with the margin rounded up to whole cells.
Grid resolution_grid(int d, long n0, double margin)
{
  const long extra = static_cast<long>(std::ceil(margin * n0 - 1e-9));
  return make_grid(d, n0 + 2 * extra, static_cast<double>(extra) / n0);
}

void write_risk_csv(const fs::path& path, const RiskReport& rep, const ExperimentConfig& cfg)
{
  auto os = open_out(path);
  auto [lf, b] = resolved_log_factor(cfg);
  const bool fitted = !rep.fit.x.empty();
  os << "eps,log_x,risk,se,oracle,ratio,fitted,reps,theta_size,h_min,h_max,"
        "mean_sigma_tilde,e_source,C_variant\r\n";
  for (std::size_t i = 0; i < rep.points.size(); ++i) {
    const auto& p = rep.points[i];
    double x = std::log(p.eps * (lf == LogFactor::besov ? 1.0 : log_factor_value(lf, p.eps)));
    std::string fit_col;
    if (fitted) {
      double y = rep.fit.intercept + rep.fit.slope * x;
      if (b != 0.0)
        y += b * std::log(std::log(1.0 / p.eps));
      fit_col = fmt(std::exp(y));
    }
    os << fmt(p.eps) << ',' << fmt(x) << ',' << fmt(p.risk) << ',' << fmt(p.se) << ','
       << (p.oracle_defined ? fmt(p.oracle) : std::string()) << ','
       << (p.oracle_defined ? fmt(p.ratio) : std::string()) << ',' << fit_col << ','
       << p.reps << ',' << p.theta_size << ',' << fmt(p.h_min) << ',' << fmt(p.h_max) << ','
       << fmt(p.mean_sigma_tilde) << ',' << csv_field(p.e_source) << ','
       << fmt(p.C_variant) << "\r\n";
  }
  check_written(os, path);
}

void write_fit_csv(const fs::path& path, const std::vector<RiskReport>& reps,
                   const ExperimentConfig& cfg)
{
  auto os = open_out(path);
  auto [lf, b] = resolved_log_factor(cfg);
  os << "family,log_factor,log_power,slope,intercept,se,ci_lo,ci_hi,target,tolerance,points\r\n";
  for (const auto& r : reps) {
    if (r.fit.x.empty())
      continue;
    os << csv_field(r.family) << ',' << to_string(lf) << ',' << fmt(b) << ','
       << fmt(r.fit.slope) << ',' << fmt(r.fit.intercept) << ',' << fmt(r.fit.se) << ','
       << fmt(r.fit.ci_lo) << ',' << fmt(r.fit.ci_hi) << ',' << fmt(cfg.target) << ','
       << fmt(cfg.tolerance) << ',' << r.fit.x.size() << "\r\n";
  }
  check_written(os, path);
}

nlohmann::json majorant_json(const FamilyRun& fr, double eps)
{
  const auto& m = fr.mspec;
  return {{"family", fr.fc->label},
          {"eps", eps},
          {"variant", std::string(to_string(m.variant))},
          {"e_source", m.e_source},
          {"fallback_used", m.fallback_used},
          {"c_e", m.c_e},
          {"C_e", m.C_e},
          {"kappa0", m.kappa0},
          {"kappa1", m.kappa1},
          {"C_variant", m.C_variant},
          {"sigma_min", m.sigma_min},
          {"sigma_max", m.sigma_max},
          {"e_reps", fr.table.reps},
          {"e_seed", fr.table.seed},
          {"e_se_warning", fr.table.se_warning},
          {"theta_size", fr.theta.size()},
          {"h_min", fr.spec.h_min},
          {"h_max", fr.spec.h_max},
          {"phi", fr.spec.phi}};
}

} // namespace

std::vector<RiskReport> run_risks(const ExperimentConfig& cfg, const RunOptions& opt)
{
  validate_config(cfg);
  const int d = cfg.function.dim;
  const TestFunction F = make_function(cfg.function);
  const auto points = experiment_points(cfg);
  const std::size_t nf = cfg.families.size();

  std::vector<RiskReport> reports(nf);
  for (std::size_t f = 0; f < nf; ++f)
    reports[f].family = cfg.families[f].label;

  nlohmann::json prov_majorants = nlohmann::json::array();
  if (opt.write)
    ensure_dir(cfg.out);

  for (std::size_t ei = 0; ei < cfg.eps.size(); ++ei) {
    const double eps = cfg.eps[ei];
    std::vector<FamilyRun> runs(nf);
    for (std::size_t f = 0; f < nf; ++f) {
      runs[f].fc = &cfg.families[f];
      runs[f].spec = family_at(cfg, cfg.families[f], eps);
      runs[f].theta = make_theta_grid(runs[f].spec);
    }
    const Grid grid = resolution_grid(d, cfg.n, grid_margin(runs));
    const auto signal = signal_increments(F, grid);

    std::vector<Index> nodes;
    std::vector<double> truth;
    for (const auto& p : points) {
      nodes.push_back(grid.nearest_node(p));
      truth.push_back(F(grid.point(nodes.back())));
    }
    std::vector<Point> node_points;
    for (const auto& nd : nodes)
      node_points.push_back(grid.point(nd));

    for (std::size_t f = 0; f < nf; ++f) {
      auto& fr = runs[f];
      fr.engine = std::make_unique<ComparisonEngine>(fr.theta, grid);
      fr.table = e_mc(*fr.engine, cfg.e_reps,
                      derive_seed(derive_seed(cfg.seed, ei, StreamRole::probe), f,
                                  StreamRole::noise));
      if (cfg.e_source == "bound") {
        calibrate_bound(MajorantVariant::general, fr.table, fr.theta, eps);
        fr.table.e_hat = fr.table.bound;
        fr.table.source = "bound";
      }
      fr.mspec = make_majorant(fr.fc->variant, fr.table, fr.theta, cfg.r, eps);
      fr.oracle = oracle_reports(signal, F, *fr.engine, fr.mspec, eps, node_points);
      fr.err_r.assign(cfg.reps, 0.0);
      if (opt.log)
        *opt.log << cfg.name << ": eps " << fmt(eps) << " family " << fr.fc->label
                 << " |Theta| " << fr.theta.size() << " Q source " << fr.mspec.e_source
                 << '\n';
    }

    const std::uint64_t eps_seed = derive_seed(cfg.seed, ei, StreamRole::observation);
    for (int rep = 0; rep < cfg.reps; ++rep) {
      const std::uint64_t rep_seed = derive_seed(eps_seed, rep, StreamRole::observation);
      try {
        ObservationField field = sample_field(signal, eps, grid, rep_seed, F.id());
        for (auto& fr : runs) {
          auto res = select_nodes(field, *fr.engine, fr.mspec, nodes);
          double acc = 0.0, sig = 0.0;
          for (std::size_t k = 0; k < res.size(); ++k) {
            acc += std::pow(std::abs(res[k].estimate - truth[k]), cfg.r);
            sig += fr.theta.sigma_tilde(res[k].mu_hat);
          }
          fr.err_r[rep] = acc / res.size();
          fr.sigma_sum += sig / res.size();
          if (rep == 0)
            fr.trace = std::move(res.front());
        }
      } catch (const std::exception& e) {
        throw std::runtime_error(cfg.name + ": replication " + std::to_string(rep) + " at eps " +
                                 fmt(eps) + " (seed " + std::to_string(rep_seed) +
                                 ") failed: " + e.what());
      }
    }

    for (std::size_t f = 0; f < nf; ++f) {
      auto& fr = runs[f];
      RiskPoint p;
      p.eps = eps;
      p.reps = cfg.reps;
      double mean = 0.0;
      for (double v : fr.err_r)
        mean += v;
      mean /= cfg.reps;
      double var = 0.0;
      for (double v : fr.err_r)
        var += (v - mean) * (v - mean);
      var /= (cfg.reps - 1);
      p.risk = std::pow(mean, 1.0 / cfg.r);
      double se_mean = std::sqrt(var / cfg.reps);
      p.se = p.risk > 0 ? se_mean / (cfg.r * std::pow(p.risk, cfg.r - 1)) : se_mean;

      p.oracle_defined = std::all_of(fr.oracle.begin(), fr.oracle.end(),
                                     [](const OracleReport& o) { return o.mu_star.has_value(); });
      if (p.oracle_defined) {
        double acc = 0.0;
        for (const auto& o : fr.oracle)
          acc += std::pow(o.bound, cfg.r);
        p.oracle = std::pow(acc / fr.oracle.size(), 1.0 / cfg.r);
        p.ratio = p.oracle > 0 ? p.risk / p.oracle : 0.0;
      }
      p.theta_size = fr.theta.size();
      p.h_min = fr.spec.h_min;
      p.h_max = fr.spec.h_max;
      p.mean_sigma_tilde = fr.sigma_sum / cfg.reps;
      p.e_source = fr.mspec.e_source;
      p.C_variant = fr.mspec.C_variant;
      reports[f].points.push_back(p);

      if (opt.write) {
        const std::string tag = fr.fc->label + "_e" + std::to_string(ei);
        write_etable_csv(cfg.out / ("etable_" + tag + ".csv"), fr.table);
        write_trace_csv(cfg.out / ("trace_" + tag + ".csv"), *fr.trace, fr.theta);
        auto path = cfg.out / ("oracle_" + tag + ".json");
        auto os = open_out(path);
        if (fr.oracle.size() == 1) {
          write_oracle_json(os, fr.oracle.front(), fr.theta);
        } else {
          os << "[\n";
          for (std::size_t k = 0; k < fr.oracle.size(); ++k) {
            write_oracle_json(os, fr.oracle[k], fr.theta);
            if (k + 1 < fr.oracle.size())
              os << ",\n";
          }
          os << "]\n";
        }
        check_written(os, path);
        prov_majorants.push_back(majorant_json(fr, eps));
      }
      if (opt.log)
        *opt.log << cfg.name << ": eps " << fmt(eps) << " family " << fr.fc->label << " risk "
                 << fmt(p.risk) << " se " << fmt(p.se) << " oracle "
                 << (p.oracle_defined ? fmt(p.oracle) : std::string("undefined")) << '\n';
    }
  }

  for (auto& rep : reports)
    if (rep.points.size() >= 4)
      rep.fit = rate_fit(rep, cfg);

  if (opt.write) {
    for (const auto& rep : reports)
      write_risk_csv(cfg.out / ("risk_" + rep.family + ".csv"), rep, cfg);
    write_fit_csv(cfg.out / "fit.csv", reports, cfg);

    nlohmann::json prov;
    prov["name"] = cfg.name;
    prov["version"] = PTSEL_VERSION;
    prov["seed"] = cfg.seed;
    prov["reps"] = cfg.reps;
    prov["r"] = cfg.r;
    prov["risk"] = cfg.global ? "global" : "pointwise";
    prov["n"] = cfg.n;
    prov["eps"] = cfg.eps;
    prov["e_source"] = cfg.e_source;
    prov["e_reps"] = cfg.e_reps;
    prov["function"] = {{"kind", cfg.function.kind}, {"dim", cfg.function.dim},
                        {"id", F.id()},              {"seed", cfg.function.seed}};
    prov["seed_derivation"] =
        "observation seed = derive(derive(seed, eps index, observation), rep, observation); "
        "e table seed = derive(derive(seed, eps index, probe), family index, noise)";
    prov["majorants"] = prov_majorants;
    auto path = cfg.out / "provenance.json";
    auto os = open_out(path);
    os << prov.dump(2) << '\n';
    check_written(os, path);
  }
  return reports;
}

RiskReport pointwise_risk(ExperimentConfig cfg)
{
  cfg.global = false;
  cfg.families.resize(std::min<std::size_t>(cfg.families.size(), 1));
  return run_risks(cfg, {false, nullptr}).front();
}

RiskReport global_risk(ExperimentConfig cfg)
{
  cfg.global = true;
  if (cfg.x_grid < 32)
    throw std::invalid_argument("global_risk: x grid needs >= 32 nodes per axis");
  cfg.families.resize(std::min<std::size_t>(cfg.families.size(), 1));
  return run_risks(cfg, {false, nullptr}).front();
}

std::vector<RiskReport> run_experiment(const ExperimentConfig& cfg, std::ostream* log)
{
  return run_risks(cfg, {true, log});
}

std::vector<RiskReport> run_experiment(const fs::path& config_path, std::ostream* log)
{
  return run_experiment(load_config(config_path), log);
}

void dry_run(const ExperimentConfig& cfg, std::ostream& os)
{
  validate_config(cfg);
  const int d = cfg.function.dim;
  os << "experiment " << cfg.name << ": d = " << d << ", n = " << cfg.n << ", reps = "
     << cfg.reps << ", " << (cfg.global ? "global" : "pointwise") << " risk, "
     << experiment_points(cfg).size() << " x node(s)\n";
  for (double eps : cfg.eps) {
    double margin = 0.0;
    for (const auto& fc : cfg.families) {
      auto spec = family_at(cfg, fc, eps);
      auto theta = make_theta_grid(spec);
      margin = std::max(margin, theta_margin(theta));
      os << "  eps " << fmt(eps) << "  " << fc.label << " (" << to_string(spec.family)
         << "): |Theta| = " << theta.size() << ", levels = " << theta.levels().size()
         << ", h in [" << fmt(spec.h_min) << ", " << fmt(spec.h_max) << "]\n";
    }
    Grid g = resolution_grid(d, cfg.n, margin);
    os << "  eps " << fmt(eps) << "  grid: " << g.size() << " cells, margin " << fmt(margin)
       << '\n';
  }
}

} // namespace ptsel
