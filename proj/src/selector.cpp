#include "ptsel/selector.hpp"

#include "ptsel/linear_est.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <ostream>
#include <stdexcept>

namespace ptsel {

namespace {

constexpr double kTieRel = 1e-12;

void check_spec(const ThetaGrid& theta, const MajorantSpec& spec)
{
  if (theta.size() == 0)
    throw std::invalid_argument("select: empty Theta");
  if (std::abs(spec.sigma_min - theta.sigma_min()) > 1e-9 * theta.sigma_min())
    throw std::invalid_argument("select: majorant sigma_min differs from Theta's");
}

} // namespace

std::vector<double> threshold_table(const ThetaGrid& theta, const MajorantSpec& spec,
                                    double eps)
{
  std::vector<double> out(theta.size());
  for (std::size_t mu = 0; mu < theta.size(); ++mu)
    out[mu] = eps * majorant_Q(theta.sigma_tilde(mu), spec);
  return out;
}

double r_hat(const EstimateTable& t, std::size_t mu, const ThetaGrid& theta,
             std::span<const double> eps_q)
{
  const std::size_t lm = theta.level_of(mu);
  double best = -std::numeric_limits<double>::infinity();
  for (std::size_t nu = 0; nu < theta.size(); ++nu) {
    if (theta.level_of(nu) < lm)
      continue;
    best = std::max(best, std::abs(t.pair(mu, nu) - t.single(nu)) - 0.5 * eps_q[nu]);
  }
  return best;
}

SelectionResult select(const EstimateTable& t, const ThetaGrid& theta,
                       std::span<const double> eps_q, double delta)
{
  const std::size_t n = theta.size();
  if (n == 0)
    throw std::invalid_argument("select: empty Theta");
  if (eps_q.size() != n)
    throw std::invalid_argument("select: threshold table size mismatch");
  if (!t.single.allFinite() || !t.pair.allFinite())
    throw std::domain_error("select: non-finite estimate (corrupt field?)");

  SelectionResult res;
  res.node = t.node;
  res.delta = delta;
  res.rows.resize(n);
  for (std::size_t mu = 0; mu < n; ++mu) {
    const double r = r_hat(t, mu, theta, eps_q);
    res.rows[mu] = {mu, theta.sigma_tilde(mu), r, r + eps_q[mu]};
  }
  const double scale = t.single.cwiseAbs().maxCoeff();
  bool first = true;
  double best = 0.0;
  for (std::size_t mu : theta.canonical_order()) {
    const double c = res.rows[mu].criterion;
    if (first || c < best - kTieRel * std::max(std::abs(best), scale)) {
      best = c;
      res.mu_hat = mu;
      res.argmin_trace.emplace_back(mu, c);
      first = false;
    }
  }
  res.estimate = t.single(res.mu_hat);
  return res;
}

std::vector<SelectionResult> select_nodes(const ObservationField& field,
                                          const ComparisonEngine& engine,
                                          const MajorantSpec& spec,
                                          const std::vector<Index>& nodes)
{
  const ThetaGrid& theta = engine.theta();
  check_spec(theta, spec);
  const auto eps_q = threshold_table(theta, spec, field.eps);
  const double delta = 0.25 * field.eps * majorant_Q(theta.sigma_min(), spec);
  const auto tables = engine.evaluate(field.increments, nodes);
  std::vector<SelectionResult> out;
  out.reserve(tables.size());
  for (const auto& t : tables)
    out.push_back(select(t, theta, eps_q, delta));
  return out;
}

SelectionResult select(const ObservationField& field, const ComparisonEngine& engine,
                       const MajorantSpec& spec, const Point& x)
{
  return select_nodes(field, engine, spec, {snap_to_node(field.grid, x)}).front();
}

void write_trace_csv(std::ostream& os, const SelectionResult& r, const ThetaGrid& theta)
{
  const int d = theta.spec().dim;
  os << "mu_id";
  for (int i = 0; i < d; ++i)
    os << ",h" << (i + 1);
  os << ",angle,sigma_tilde,r_hat,criterion,selected\r\n";
  char buf[64];
  auto num = [&](double v) {
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return std::string(buf);
  };
  for (std::size_t mu = 0; mu < r.rows.size(); ++mu) {
    const auto& p = theta[mu];
    os << mu;
    for (int i = 0; i < d; ++i)
      os << ',' << num(p.h[i]);
    os << ',' << num(p.angle) << ',' << num(r.rows[mu].sigma_tilde) << ','
       << num(r.rows[mu].r_hat) << ',' << num(r.rows[mu].criterion) << ','
       << (mu == r.mu_hat ? 1 : 0) << "\r\n";
  }
}

void write_trace_csv(const std::filesystem::path& path, const SelectionResult& r,
                     const ThetaGrid& theta)
{
  std::ofstream os(path, std::ios::binary);
  if (!os)
    throw std::runtime_error("cannot open " + path.string());
  write_trace_csv(os, r, theta);
}

} // namespace ptsel
