#include "ptsel/oracle.hpp"

#include "ptsel/linear_est.hpp"
#include "ptsel/stencil.hpp"

#include <json.hpp>

#include <cmath>
#include <ostream>
#include <stdexcept>

namespace ptsel {

namespace {

void check_inside(const Point& y, const Stencil& s, const Grid& g, const char* what)
{
  const double half = g.half_extent();
  for (int i = 0; i < g.dim(); ++i) {
    const double r = s.radius[i] * g.spacing();
    if (y[i] - r < -half - 1e-12 || y[i] + r > half + 1e-12)
      throw std::out_of_range(std::string(what) + ": kernel support leaves D");
  }
}

// sum_k w[k] F(y + k spacing)
double lattice_apply(const TestFunction& F, const Stencil& s, const Point& y, double spacing)
{
  double acc = 0.0;
  for (std::size_t f = 0; f < s.size(); ++f) {
    if (s.w[f] == 0.0)
      continue;
    const Index k = s.offset(f);
    Point t = y;
    for (int i = 0; i < s.dim; ++i)
      t[i] += k[i] * spacing;
    acc += s.w[f] * F(t);
  }
  return acc;
}

double l2(const std::vector<double>& v)
{
  double s = 0.0;
  for (double x : v)
    s += x * x;
  return std::sqrt(s);
}

} // namespace

double bias(const TestFunction& F, const KernelParam& mu, const Point& y, const Grid& grid)
{
  const Stencil s = tabulate_stencil(mu, grid.spacing());
  check_inside(y, s, grid, "bias");
  return lattice_apply(F, s, y, grid.spacing()) - F(y);
}

AuxBiasDelta bias_aux_delta(const TestFunction& F, const KernelParam& mu,
                            const KernelParam& nu, const Point& x, const Grid& grid)
{
  const double dx = grid.spacing();
  const Stencil wm = tabulate_stencil(mu, dx);
  const Stencil wn = tabulate_stencil(nu, dx);
  const Stencil aux = convolve_stencils(wm, wn);
  check_inside(x, aux, grid, "bias_aux_delta");

  AuxBiasDelta out;
  out.direct = lattice_apply(F, aux, x, dx) - lattice_apply(F, wn, x, dx);
  double acc = 0.0;
  for (std::size_t f = 0; f < wn.size(); ++f) {
    if (wn.w[f] == 0.0)
      continue;
    const Index j = wn.offset(f);
    Point y = x;
    for (int i = 0; i < wn.dim; ++i)
      y[i] += j[i] * dx;
    acc += wn.w[f] * (lattice_apply(F, wm, y, dx) - F(y));
  }
  out.smoothed = acc;
  return out;
}

double integrated_bias(const TestFunction& F, const KernelParam& mu, const ThetaGrid& theta,
                       const Point& x, const Grid& grid)
{
  double out = std::abs(bias(F, mu, x, grid));
  for (const auto& nu : theta.params())
    out = std::max(out, std::abs(bias_aux_delta(F, mu, nu, x, grid).direct));
  return out;
}

void oracle_biases(std::span<const double> signal, const TestFunction& F,
                   const ComparisonEngine& engine, const Index& node, std::vector<double>& b,
                   std::vector<double>& bt)
{
  const EstimateTable t = engine.evaluate(signal, node);
  const double fx = F(engine.grid().point(node));
  const std::size_t n = engine.theta().size();
  b.resize(n);
  bt.resize(n);
  for (std::size_t mu = 0; mu < n; ++mu) {
    b[mu] = t.single(mu) - fx;
    double m = std::abs(b[mu]);
    for (std::size_t nu = 0; nu < n; ++nu)
      m = std::max(m, std::abs(t.pair(mu, nu) - t.single(nu)));
    bt[mu] = m;
  }
}

void theta_F(const ThetaGrid& theta, std::span<const double> int_bias,
             std::span<const double> eps_q, std::vector<bool>& good, std::vector<bool>& member,
             std::optional<std::size_t>& mu_star)
{
  const std::size_t n = theta.size(), nl = theta.levels().size();
  good.assign(n, false);
  std::vector<bool> level_ok(nl, false);
  for (std::size_t mu = 0; mu < n; ++mu) {
    good[mu] = int_bias[mu] <= 0.25 * eps_q[mu];
    if (good[mu])
      level_ok[theta.level_of(mu)] = true;
  }
  // suffix_ok[l]: every level >= l is populated by a good theta.
  std::vector<bool> suffix_ok(nl + 1, true);
  for (std::size_t l = nl; l-- > 0;)
    suffix_ok[l] = suffix_ok[l + 1] && level_ok[l];
  member.assign(n, false);
  mu_star.reset();
  for (std::size_t mu = 0; mu < n; ++mu)
    member[mu] = suffix_ok[theta.level_of(mu)];
  for (std::size_t mu : theta.canonical_order())
    if (member[mu]) {
      mu_star = mu;
      break;
    }
}

std::vector<OracleReport> oracle_reports(std::span<const double> signal, const TestFunction& F,
                                         const ComparisonEngine& engine,
                                         const MajorantSpec& spec, double eps,
                                         const std::vector<Point>& xs)
{
  const ThetaGrid& theta = engine.theta();
  std::vector<double> eps_q(theta.size());
  for (std::size_t mu = 0; mu < theta.size(); ++mu)
    eps_q[mu] = eps * majorant_Q(theta.sigma_tilde(mu), spec);

  std::vector<OracleReport> out;
  out.reserve(xs.size());
  for (const Point& x : xs) {
    OracleReport r;
    r.eps = eps;
    r.x = x;
    r.node = snap_to_node(engine.grid(), x);
    r.theta_id = std::string(to_string(theta.spec().family)) + "/" +
                 std::to_string(theta.size());
    oracle_biases(signal, F, engine, r.node, r.bias, r.int_bias);
    theta_F(theta, r.int_bias, eps_q, r.good, r.member, r.mu_star);
    if (r.mu_star)
      r.bound = eps_q[*r.mu_star];
    out.push_back(std::move(r));
  }
  return out;
}

OracleReport oracle_report(std::span<const double> signal, const TestFunction& F,
                           const ComparisonEngine& engine, const MajorantSpec& spec, double eps,
                           const Point& x)
{
  return oracle_reports(signal, F, engine, spec, eps, {x}).front();
}

void write_oracle_json(std::ostream& os, const OracleReport& r, const ThetaGrid& theta)
{
  using nlohmann::json;
  const int d = theta.spec().dim;
  json j;
  j["eps"] = r.eps;
  j["x"] = std::vector<double>(r.x.begin(), r.x.begin() + d);
  j["node"] = std::vector<long>(r.node.begin(), r.node.begin() + d);
  j["theta_id"] = r.theta_id;
  j["mu_star"] = r.mu_star ? json(*r.mu_star) : json(nullptr);
  j["bound"] = r.bound;
  json rows = json::array();
  for (std::size_t mu = 0; mu < r.bias.size(); ++mu) {
    const auto& p = theta[mu];
    rows.push_back({{"mu", mu},
                    {"h", std::vector<double>(p.h.begin(), p.h.begin() + d)},
                    {"angle", p.angle},
                    {"sigma_tilde", theta.sigma_tilde(mu)},
                    {"bias", r.bias[mu]},
                    {"integrated_bias", r.int_bias[mu]},
                    {"good", static_cast<bool>(r.good[mu])},
                    {"member", static_cast<bool>(r.member[mu])}});
  }
  j["rows"] = std::move(rows);
  os << j.dump(2) << '\n';
}

SemimetricReport semimetric_check(const ThetaGrid& theta,
                                  const std::vector<std::array<std::size_t, 4>>& quads,
                                  const Grid& grid)
{
  const double dx = grid.spacing();
  const double vol = grid.cell_volume();
  const int d = theta.spec().dim;
  const std::size_t n = theta.size();
  std::vector<Stencil> w(n);
  std::vector<double> norm(n), st_lat(n);
  for (std::size_t i = 0; i < n; ++i) {
    w[i] = tabulate_stencil(theta[i], dx);
    norm[i] = l2(w[i].w);
  }
  double mass = 0.0;
  for (const auto& s : w) {
    double m = 0.0;
    for (double v : s.w)
      m += std::abs(v);
    mass = std::max(mass, m);
  }
  for (std::size_t i = 0; i < n; ++i)
    st_lat[i] = std::max(mass, 1.0) * norm[i] / std::sqrt(vol);

  auto rb_ru = [&](std::size_t a, std::size_t b) {
    Index R;
    for (int i = 0; i < 3; ++i)
      R[i] = std::max(w[a].radius[i], w[b].radius[i]);
    auto ea = embed_stencil(w[a], R);
    auto eb = embed_stencil(w[b], R);
    double s = 0.0;
    for (std::size_t k = 0; k < ea.size(); ++k) {
      const double v = ea[k] / norm[a] - eb[k] / norm[b];
      s += v * v;
    }
    return std::sqrt(s) + std::abs(1.0 - norm[a] / norm[b]);
  };

  const double M = theta.base()->grad_bound();
  const double hmin = theta.spec().h_min;
  SemimetricReport rep;
  for (const auto& q : quads) {
    SemimetricCase c{q[0], q[1], q[2], q[3]};
    const Stencil a1 = convolve_stencils(w[c.nu], w[c.mu]);
    const Stencil a2 = convolve_stencils(w[c.nu2], w[c.mu2]);
    Index R;
    for (int i = 0; i < 3; ++i)
      R[i] = std::max(a1.radius[i], a2.radius[i]);
    auto e1 = embed_stencil(a1, R), e2 = embed_stencil(a2, R);
    auto f1 = embed_stencil(w[c.nu], R), f2 = embed_stencil(w[c.nu2], R);
    double s = 0.0;
    for (std::size_t k = 0; k < e1.size(); ++k) {
      const double v = (e1[k] - f1[k]) - (e2[k] - f2[k]);
      s += v * v;
    }
    c.exact = std::sqrt(s / vol);
    c.general = 2.0 * st_lat[c.nu] * rb_ru(c.nu, c.nu2) + st_lat[c.mu] * rb_ru(c.mu, c.mu2);
    if (c.mu == c.mu2) {
      const auto& p = theta[c.nu];
      const auto& p2 = theta[c.nu2];
      double sq = 0.0, ratio = 1.0;
      for (int i = 0; i < d; ++i) {
        sq += std::pow(1.0 - p.h[i] / p2.h[i], 2);
        ratio *= p2.h[i] / p.h[i];
      }
      c.parametric = 2.0 * theta.sigma_tilde(c.nu) *
                     (M * std::sqrt(sq) + 2.0 * std::abs(1.0 - ratio) +
                      M * d / hmin * rotation_distance(p, p2));
      if (c.parametric > 0)
        rep.max_excess_parametric =
          std::max(rep.max_excess_parametric, (c.exact - c.parametric) / c.parametric);
      else if (c.exact > 0)
        rep.max_excess_parametric = std::numeric_limits<double>::infinity();
    }
    if (c.general > 0)
      rep.max_excess_general = std::max(rep.max_excess_general, (c.exact - c.general) / c.general);
    else if (c.exact > 1e-12)
      rep.max_excess_general = std::numeric_limits<double>::infinity();
    rep.cases.push_back(c);
  }
  return rep;
}

} // namespace ptsel
