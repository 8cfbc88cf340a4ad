#pragma once

#include "ptsel/field.hpp"
#include "ptsel/grid.hpp"
#include "ptsel/kernel_param.hpp"
#include "ptsel/stencil.hpp"

#include <span>
#include <vector>

namespace ptsel {

/// Inclusive box of grid nodes.
struct NodeBox
{
  int dim = 1;
  Index lo{0, 0, 0};
  Index hi{0, 0, 0};

  long extent(int i) const { return i < dim ? hi[i] - lo[i] + 1 : 1; }
  std::size_t size() const;
  bool contains(const Index& k) const;
  std::size_t flatten(const Index& k) const; // k absolute, inside the box
  Index unflatten(std::size_t flat) const;
};

/// F-hat_mu on every node of D1, the nodes where the whole stencil fits.
struct EstimateField
{
  KernelParam mu;
  Grid grid;
  Stencil stencil;
  NodeBox region;
  std::vector<double> values;

  double at(const Index& node) const;
};

/// Node of x in D0; throws std::invalid_argument if x is outside D0.
Index snap_to_node(const Grid& grid, const Point& x);

/// sum_k w[k] y[node + k] / cell_volume; throws std::out_of_range on support overflow.
double apply_stencil(std::span<const double> increments, const Grid& grid,
                     const Stencil& w, const Index& node);

double estimate(const ObservationField& field, const KernelParam& mu, const Point& x);

/// Uses the separable factorization when available (cost linear in grid size),
/// FFT correlation otherwise.
EstimateField estimate_field(const ObservationField& field, const KernelParam& mu);

/// F-hat_{mu,nu}(x) by smoothing F-hat_mu with K_nu.
double estimate_aux(const ObservationField& field, const KernelParam& mu,
                    const KernelParam& nu, const Point& x);
double estimate_aux(const EstimateField& mu_field, const Stencil& nu, const Point& x);

/// F-hat_{mu,nu}(x) as the direct sum against the auxiliary kernel.
double estimate_aux_direct(const ObservationField& field, const AuxKernel& aux,
                           const Point& x);

} // namespace ptsel
