#include "ptsel/majorant.hpp"

#include "ptsel/field.hpp"
#include "ptsel/rng.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace ptsel {

namespace {

constexpr double kRangeTol = 1e-9;

void check_lower(double sigma, double lo, const char* what)
{
  if (!(sigma >= lo * (1.0 - kRangeTol)))
    throw std::domain_error(std::string(what) + ": sigma below sigma_min");
}

} // namespace

MajorantVariant parse_variant(std::string_view name)
{
  if (name == "general")
    return MajorantVariant::general;
  if (name == "single-index" || name == "si")
    return MajorantVariant::single_index;
  if (name == "aniso-holder" || name == "ah")
    return MajorantVariant::aniso_holder;
  if (name == "besov")
    return MajorantVariant::besov;
  if (name == "mixed")
    return MajorantVariant::mixed;
  throw std::invalid_argument("unknown majorant variant: " + std::string(name));
}

std::string_view to_string(MajorantVariant v)
{
  switch (v) {
    case MajorantVariant::general: return "general";
    case MajorantVariant::single_index: return "single-index";
    case MajorantVariant::aniso_holder: return "aniso-holder";
    case MajorantVariant::besov: return "besov";
    case MajorantVariant::mixed: return "mixed";
  }
  return "?";
}

void for_each_noise_table(const ComparisonEngine& engine, int reps, std::uint64_t seed,
                          const Index& node,
                          const std::function<void(int, const EstimateTable&)>& fn)
{
  const Grid& g = engine.grid();
  std::vector<double> noise(g.size());
  for (int rep = 0; rep < reps; ++rep) {
    fill_noise(noise, g.cell_volume(), derive_seed(seed, rep, StreamRole::noise));
    fn(rep, engine.evaluate(noise, node));
  }
}

ETable e_mc(const ComparisonEngine& engine, int reps, std::uint64_t seed,
            double target_rel_se)
{
  if (reps < 2)
    throw std::invalid_argument("e_mc: reps must be >= 2");
  const ThetaGrid& th = engine.theta();
  const std::size_t nt = th.size(), nl = th.levels().size();
  const auto& order = th.canonical_order();

  Eigen::MatrixXd sum = Eigen::MatrixXd::Zero(nt, nl);
  Eigen::MatrixXd sum2 = Eigen::MatrixXd::Zero(nt, nl);
  Eigen::MatrixXd run(nt, nl);
  const Index centre = engine.grid().nearest_node(Point{0, 0, 0});

  for_each_noise_table(engine, reps, seed, centre, [&](int, const EstimateTable& t) {
    for (std::size_t mu = 0; mu < nt; ++mu) {
      double m = 0.0;
      std::size_t k = 0;
      for (std::size_t l = 0; l < nl; ++l) {
        while (k < nt && th.level_of(order[k]) <= l) {
          const std::size_t nu = order[k++];
          m = std::max(m, std::abs(t.pair(mu, nu) - t.single(nu)));
        }
        run(mu, l) = m;
      }
    }
    sum += run;
    sum2 += run.cwiseProduct(run);
  });

  ETable out;
  out.sigma = th.levels();
  out.reps = reps;
  out.seed = seed;
  out.e_raw.resize(nl);
  out.se.resize(nl);
  out.se_warning = reps < 100;
  const double n = reps;
  for (std::size_t l = 0; l < nl; ++l) {
    std::size_t best = 0;
    for (std::size_t mu = 1; mu < nt; ++mu)
      if (sum(mu, l) > sum(best, l))
        best = mu;
    const double mean = sum(best, l) / n;
    const double var = std::max(0.0, (sum2(best, l) - n * mean * mean) / (n - 1.0));
    out.e_raw[l] = mean;
    out.se[l] = std::sqrt(var / n);
    if (mean > 0 && out.se[l] > target_rel_se * mean)
      out.se_warning = true;
  }
  out.e_hat = isotonic_increasing(out.e_raw);
  return out;
}

std::vector<double> isotonic_increasing(const std::vector<double>& y,
                                        const std::vector<double>& w)
{
  if (!w.empty() && w.size() != y.size())
    throw std::invalid_argument("isotonic_increasing: weight size mismatch");
  struct Block
  {
    double mean, weight;
    std::size_t count;
  };
  std::vector<Block> blocks;
  for (std::size_t i = 0; i < y.size(); ++i) {
    blocks.push_back({y[i], w.empty() ? 1.0 : w[i], 1});
    while (blocks.size() > 1 && blocks[blocks.size() - 2].mean > blocks.back().mean) {
      Block b = blocks.back();
      blocks.pop_back();
      Block& a = blocks.back();
      const double tw = a.weight + b.weight;
      a.mean = (a.mean * a.weight + b.mean * b.weight) / tw;
      a.weight = tw;
      a.count += b.count;
    }
  }
  std::vector<double> out;
  out.reserve(y.size());
  for (const auto& b : blocks)
    out.insert(out.end(), b.count, b.mean);
  return out;
}

double e_shape(MajorantVariant v, double sigma, const BoundCalibration& c)
{
  switch (v) {
    case MajorantVariant::single_index:
      if (sigma < 1.0)
        throw std::domain_error("single-index bound needs sigma >= 1");
      return sigma * std::sqrt(std::log(sigma));
    case MajorantVariant::aniso_holder: {
      if (!(c.h_ratio > std::exp(1.0)))
        throw std::domain_error("anisotropic bound needs h_max / h_min > e");
      return sigma * (std::sqrt(std::log(std::log(c.h_ratio))) + 1.0);
    }
    case MajorantVariant::besov:
      check_lower(sigma, c.sigma_min, "besov bound");
      return sigma * std::sqrt(std::log1p(std::max(0.0, std::log(sigma / c.sigma_min))));
    case MajorantVariant::mixed:
      if (!(c.eps > 0 && c.eps < 1))
        throw std::domain_error("mixed bound needs eps in (0, 1)");
      return sigma * std::sqrt(1.0 - std::log(c.eps));
    case MajorantVariant::general:
      check_lower(sigma, c.sigma_min, "general bound");
      return sigma * std::sqrt(1.0 + std::max(0.0, std::log(sigma / c.sigma_min)));
  }
  return 0.0;
}

double e_bound(MajorantVariant v, double sigma, const BoundCalibration& c)
{
  if (!(sigma >= c.sigma_min * (1.0 - kRangeTol) && sigma <= c.sigma_max * (1.0 + kRangeTol)))
    throw std::domain_error("e_bound: sigma outside [sigma_min, sigma_max]");
  return c.C * std::max(e_shape(v, sigma, c), c.floor);
}

BoundCalibration calibrate_bound(MajorantVariant v, ETable& table, const ThetaGrid& theta,
                                 double eps)
{
  if (table.sigma.empty())
    throw std::invalid_argument("calibrate_bound: empty table");
  BoundCalibration c;
  c.variant = v;
  c.sigma_min = table.sigma.front();
  c.sigma_max = table.sigma.back();
  c.h_ratio = theta.spec().h_max / theta.spec().h_min;
  c.eps = eps;
  c.C = 1.0;
  c.floor = c.sigma_min;
  double ratio = 0.0;
  for (std::size_t l = 0; l < table.sigma.size(); ++l)
    ratio = std::max(ratio, table.e_hat[l] / std::max(e_shape(v, table.sigma[l], c), c.floor));
  c.C = 1.1 * ratio;
  table.bound.resize(table.sigma.size());
  for (std::size_t l = 0; l < table.sigma.size(); ++l)
    table.bound[l] = e_bound(v, table.sigma[l], c);
  return c;
}

EFunction e_from_table(const ETable& table)
{
  if (table.sigma.empty() || table.sigma.size() != table.e_hat.size())
    throw std::invalid_argument("e_from_table: malformed table");
  auto s = table.sigma;
  auto e = table.e_hat;
  EFunction out;
  out.source = table.source;
  out.f = [s, e](double x) {
    if (x <= s.front())
      return e.front() * x / s.front();
    if (x >= s.back())
      return e.back() * x / s.back();
    const auto it = std::upper_bound(s.begin(), s.end(), x);
    const std::size_t j = it - s.begin();
    const double t = (x - s[j - 1]) / (s[j] - s[j - 1]);
    return e[j - 1] + t * (e[j] - e[j - 1]);
  };
  return out;
}

ECondition check_E_condition(const EFunction& e, const std::vector<double>& levels)
{
  ECondition out;
  if (levels.empty())
    throw std::invalid_argument("check_E_condition: no levels");
  const double top = levels.back() * (1.0 + kRangeTol);
  out.c_e = std::numeric_limits<double>::infinity();
  out.C_e = 0.0;
  for (double s : levels) {
    if (2.0 * s > top)
      break;
    const double r = e(2.0 * s) / e(s);
    if (r < out.c_e) {
      out.c_e = r;
      out.worst_sigma = s;
    }
    out.C_e = std::max(out.C_e, r);
  }
  if (out.C_e == 0.0) {
    out.vacuous = true;
    out.c_e = out.C_e = 2.0;
    out.worst_sigma = levels.front();
  }
  out.ok = out.c_e > 1.0 && std::isfinite(out.C_e);
  return out;
}

void set_general_kappas(MajorantSpec& spec)
{
  spec.kappa0 = 2.0 * spec.C_e;
  spec.kappa1 = 128.0 * spec.r * std::max(1.0, std::log(spec.C_e) / std::log(2.0));
}

MajorantSpec make_majorant(MajorantVariant v, ETable& table, const ThetaGrid& theta, int r,
                           double eps)
{
  MajorantSpec spec;
  spec.variant = v;
  spec.r = r;
  spec.eps = eps;
  spec.sigma_min = theta.sigma_min();
  spec.sigma_max = theta.sigma_max();
  spec.h_ratio = theta.spec().h_max / theta.spec().h_min;

  // e from the table, with the generic fallback when doubling fails.
  spec.e = e_from_table(table);
  spec.e_source = table.source;
  ECondition cond = check_E_condition(spec.e, theta.levels());
  if (!cond.ok) {
    BoundCalibration g = calibrate_bound(MajorantVariant::general, table, theta, eps);
    spec.e = EFunction{[g](double s) { return e_bound(MajorantVariant::general, s, g); },
                       "fallback"};
    spec.e_source = "fallback";
    spec.fallback_used = true;
    cond = check_E_condition(spec.e, theta.levels());
  }
  spec.c_e = cond.c_e;
  spec.C_e = cond.C_e;
  set_general_kappas(spec);

  switch (v) {
    case MajorantVariant::general:
      break;
    case MajorantVariant::single_index: {
      const double lsm = std::log(spec.sigma_min);
      if (!(lsm > 0))
        throw std::domain_error("single-index majorant needs sigma_min > 1");
      spec.c_e = 2.0;
      spec.C_e = 2.0 * (1.0 + std::sqrt(std::log(2.0) / lsm));
      spec.kappa0 = 4.0 * (1.0 + std::sqrt(std::log(2.0) / lsm));
      spec.kappa1 = 320.0 * r;
      BoundCalibration c = calibrate_bound(v, table, theta, eps);
      spec.C_variant = c.C;
      spec.e = EFunction{[c](double s) { return e_bound(MajorantVariant::single_index, s, c); },
                         "single-index bound"};
      break;
    }
    case MajorantVariant::aniso_holder: {
      BoundCalibration c = calibrate_bound(v, table, theta, eps);
      // C1 sigma sqrt(lnln) equals the calibrated bound on every level.
      const double ll = std::sqrt(std::log(std::log(spec.h_ratio)));
      spec.C_variant = c.C * (ll + 1.0) / ll;
      spec.c_e = spec.C_e = 2.0;
      spec.e = EFunction{[c](double s) { return e_bound(MajorantVariant::aniso_holder, s, c); },
                         "aniso-holder bound"};
      break;
    }
    case MajorantVariant::besov: {
      BoundCalibration c = calibrate_bound(v, table, theta, eps);
      spec.e = EFunction{[c](double s) { return e_bound(MajorantVariant::besov, s, c); },
                         "besov bound"};
      // c3 sigma >= e(sigma) on every level, so C sigma sqrt(1 + kappa1 ln z)
      // dominates kappa0 e(sigma) + sigma sqrt(1 + kappa1 ln z).
      double c3 = 0.0;
      for (double s : theta.levels())
        c3 = std::max(c3, spec.e(s) / s);
      spec.C_variant = spec.kappa0 * c3 + 1.0;
      break;
    }
    case MajorantVariant::mixed: {
      if (!(eps > 0 && eps < 1))
        throw std::domain_error("mixed majorant needs eps in (0, 1)");
      double cm = 0.0;
      const double le = std::sqrt(1.0 - std::log(eps));
      for (double s : theta.levels())
        cm = std::max(cm, spec.e(s) / (s * le));
      const double lz = std::log(spec.sigma_max / spec.sigma_min);
      spec.C_variant =
        spec.kappa0 * cm + std::sqrt(std::max(1.0, spec.kappa1) * (1.0 + lz) / (1.0 - std::log(eps)));
      break;
    }
  }
  return spec;
}

double majorant_Q(double sigma, const MajorantSpec& s)
{
  if (!(sigma >= s.sigma_min * (1.0 - kRangeTol) && sigma <= s.sigma_max * (1.0 + kRangeTol)))
    throw std::out_of_range("majorant_Q: sigma outside [sigma_min, sigma_max]");
  const double z = std::max(1.0, sigma / s.sigma_min);
  const double tail = std::sqrt(1.0 + s.kappa1 * std::log(z));
  switch (s.variant) {
    case MajorantVariant::general:
      return s.kappa0 * s.e(sigma) + sigma * tail;
    case MajorantVariant::single_index:
      return sigma * (s.kappa0 * s.C_variant * std::sqrt(std::log(sigma)) + tail);
    case MajorantVariant::aniso_holder:
      return sigma * (1.0 + 4.0 * s.C_variant * std::sqrt(std::log(std::log(s.h_ratio))));
    case MajorantVariant::besov:
      return s.C_variant * sigma * tail;
    case MajorantVariant::mixed:
      return s.C_variant * sigma * std::sqrt(1.0 - std::log(s.eps));
  }
  return 0.0;
}

void write_etable_csv(const std::filesystem::path& path, const ETable& t)
{
  std::ofstream os(path);
  if (!os)
    throw std::runtime_error("cannot open " + path.string());
  os << "sigma,e_hat,se,bound\r\n";
  char buf[128];
  for (std::size_t l = 0; l < t.sigma.size(); ++l) {
    const double b = l < t.bound.size() ? t.bound[l] : std::nan("");
    std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g\r\n", t.sigma[l], t.e_hat[l],
                  t.se[l], b);
    os << buf;
  }
  if (!os)
    throw std::runtime_error("write failed: " + path.string());
}

ETable read_etable_csv(const std::filesystem::path& path)
{
  std::ifstream is(path);
  if (!is)
    throw std::runtime_error("cannot open " + path.string());
  std::string line;
  std::getline(is, line);
  if (line.rfind("sigma,e_hat,se,bound", 0) != 0)
    throw std::runtime_error("unexpected ETable header in " + path.string());
  ETable t;
  t.source = "csv";
  while (std::getline(is, line)) {
    if (!line.empty() && line.back() == '\r')
      line.pop_back();
    if (line.empty())
      continue;
    std::stringstream ss(line);
    std::string cell;
    double v[4];
    for (int k = 0; k < 4; ++k) {
      if (!std::getline(ss, cell, ','))
        throw std::runtime_error("short ETable row in " + path.string());
      v[k] = std::strtod(cell.c_str(), nullptr);
    }
    t.sigma.push_back(v[0]);
    t.e_hat.push_back(v[1]);
    t.se.push_back(v[2]);
    if (!std::isnan(v[3]))
      t.bound.push_back(v[3]);
  }
  if (!t.bound.empty() && t.bound.size() != t.sigma.size())
    t.bound.clear();
  t.e_raw = t.e_hat;
  for (std::size_t l = 1; l < t.sigma.size(); ++l)
    if (!(t.sigma[l] > t.sigma[l - 1]))
      throw std::runtime_error("ETable sigma column must be increasing");
  return t;
}

} // namespace ptsel
