#pragma once

#include "storylogic/autograd.hpp"
#include "storylogic/params.hpp"

#include <cstdint>
#include <functional>
#include <string>

namespace storylogic {

struct GradCheckOptions {
  double eps = 1e-4;
  // Denominator floor: relative error is |analytic - numeric| / max(|numeric|, floor).
  double floor = 1e-6;
  // Coordinates sampled per parameter; 0 checks every coordinate.
  std::size_t samples_per_param = 0;
  std::uint64_t seed = 7;
};

struct GradCheckReport {
  double max_relative_error = 0.0;
  std::size_t coordinates = 0;
  std::string worst_parameter;
  Eigen::Index worst_index = -1;
  double worst_analytic = 0.0;
  double worst_numeric = 0.0;
};

// Builds the loss on a fresh graph; must be deterministic.
using LossBuilder = std::function<ad::Var(ad::Graph<double>&)>;

// Central differences against reverse-mode gradients for every trainable
// parameter of `store`.
GradCheckReport grad_check(ParamStore<double>& store, const LossBuilder& loss,
                           const GradCheckOptions& options = {});

// Compares a precomputed analytic gradient against central differences of
// `evaluate` (which reads the current values in `store`).
GradCheckReport compare_gradients(ParamStore<double>& store,
                                  const std::function<double()>& evaluate,
                                  const GradientSet<double>& analytic,
                                  const GradCheckOptions& options = {});

}  // namespace storylogic
