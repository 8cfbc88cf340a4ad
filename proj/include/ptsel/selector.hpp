#pragma once

#include "ptsel/comparison.hpp"
#include "ptsel/field.hpp"
#include "ptsel/majorant.hpp"
#include "ptsel/theta_grid.hpp"

#include <filesystem>
#include <iosfwd>
#include <span>
#include <vector>

namespace ptsel {

struct SelectionRow
{
  std::size_t mu = 0;
  double sigma_tilde = 0.0;
  double r_hat = 0.0;
  double criterion = 0.0; // r_hat + eps Q(sigma-tilde)
};

struct SelectionResult
{
  std::size_t mu_hat = 0;
  double estimate = 0.0;
  double delta = 0.0; // eps Q(sigma_min) / 4
  Index node{0, 0, 0};
  std::vector<SelectionRow> rows; // indexed by mu
  /// Running argmin along the canonical order: (mu, criterion) at each improvement.
  std::vector<std::pair<std::size_t, double>> argmin_trace;
};

/// eps Q(sigma-tilde_mu) for every mu of theta.
std::vector<double> threshold_table(const ThetaGrid& theta, const MajorantSpec& spec,
                                    double eps);

/// max over nu with sigma-tilde_nu >= sigma-tilde_mu of
/// |F-hat_{mu,nu} - F-hat_nu| - eps_q[nu] / 2.
double r_hat(const EstimateTable& t, std::size_t mu, const ThetaGrid& theta,
             std::span<const double> eps_q);

/// Exact argmin of r_hat + eps_q; ties (within 1e-12 of max(|criterion|, max |F-hat_nu|))
/// go to the earlier
/// element of the canonical order (smallest sigma-tilde, then h, then angle).
/// Throws std::domain_error on non-finite estimates.
SelectionResult select(const EstimateTable& t, const ThetaGrid& theta,
                       std::span<const double> eps_q, double delta);

/// Selection at the node nearest to x. spec.sigma_min must equal theta's.
SelectionResult select(const ObservationField& field, const ComparisonEngine& engine,
                       const MajorantSpec& spec, const Point& x);

/// Selections at several nodes from one pass of the engine.
std::vector<SelectionResult> select_nodes(const ObservationField& field,
                                          const ComparisonEngine& engine,
                                          const MajorantSpec& spec,
                                          const std::vector<Index>& nodes);

/// Columns: mu_id, h1..hd, angle, sigma_tilde, r_hat, criterion, selected.
void write_trace_csv(std::ostream& os, const SelectionResult& r, const ThetaGrid& theta);
void write_trace_csv(const std::filesystem::path& path, const SelectionResult& r,
                     const ThetaGrid& theta);

} // namespace ptsel
