#pragma once

#include "ptsel/grid.hpp"

#include <functional>
#include <string>
#include <vector>

namespace ptsel {

enum class FunctionClass
{
  constant,
  holder_1d,
  single_index,
  aniso_holder,
  besov,
  custom,
};

/// Class tag and smoothness parameters attached to a test function.
struct ClassParams
{
  FunctionClass cls = FunctionClass::custom;
  double alpha = 0.0;              // scalar Hölder exponent
  std::vector<double> alpha_vec;   // per-axis exponents
  double L = 0.0;
  std::vector<double> omega;       // single-index direction
  double s = 0.0;                  // Besov smoothness
  double p = 0.0;                  // Besov integrability
};

/// Bounded continuous F on D with class metadata.
class TestFunction
{
public:
  using Eval = std::function<double(const Point&)>;

  TestFunction() = default;
  TestFunction(int dim, Eval f, ClassParams params, std::string id,
               std::string notes = {})
    : dim_(dim)
    , f_(std::move(f))
    , params_(std::move(params))
    , id_(std::move(id))
    , notes_(std::move(notes))
  {}

  double operator()(const Point& t) const { return f_(t); }
  int dim() const { return dim_; }
  const ClassParams& params() const { return params_; }
  const std::string& id() const { return id_; }
  const std::string& notes() const { return notes_; }

private:
  int dim_ = 1;
  Eval f_;
  ClassParams params_;
  std::string id_;
  std::string notes_;
};

TestFunction constant_function(int dim, double c);

} // namespace ptsel
