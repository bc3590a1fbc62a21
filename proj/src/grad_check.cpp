#include "storylogic/grad_check.hpp"

#include "storylogic/error.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

namespace storylogic {

GradCheckReport compare_gradients(ParamStore<double>& store,
                                  const std::function<double()>& evaluate,
                                  const GradientSet<double>& analytic,
                                  const GradCheckOptions& options) {
  GradCheckReport report;
  std::mt19937_64 rng(options.seed);
  for (std::size_t s = 0; s < store.size(); ++s) {
    auto& p = store[s];
    if (!p.trainable) continue;
    std::vector<Eigen::Index> coords(static_cast<std::size_t>(p.value.size()));
    std::iota(coords.begin(), coords.end(), Eigen::Index{0});
    if (options.samples_per_param > 0 && coords.size() > options.samples_per_param) {
      std::shuffle(coords.begin(), coords.end(), rng);
      coords.resize(options.samples_per_param);
    }
    for (Eigen::Index i : coords) {
      double& x = p.value.data()[i];
      const double saved = x;
      x = saved + options.eps;
      const double up = evaluate();
      x = saved - options.eps;
      const double down = evaluate();
      x = saved;
      if (!std::isfinite(up) || !std::isfinite(down)) {
        throw NumericError("grad_check: non-finite loss while perturbing " + p.name);
      }
      const double numeric = (up - down) / (2.0 * options.eps);
      const double exact = analytic.touched(s) ? analytic.slot(s).data()[i] : 0.0;
      if (!std::isfinite(exact)) {
        throw NumericError("grad_check: non-finite analytic gradient in " + p.name);
      }
      const double rel =
          std::abs(exact - numeric) / std::max(std::abs(numeric), options.floor);
      ++report.coordinates;
      if (rel > report.max_relative_error || report.worst_index < 0) {
        report.max_relative_error = std::max(rel, report.max_relative_error);
        report.worst_parameter = p.name;
        report.worst_index = i;
        report.worst_analytic = exact;
        report.worst_numeric = numeric;
      }
    }
  }
  return report;
}

GradCheckReport grad_check(ParamStore<double>& store, const LossBuilder& loss,
                           const GradCheckOptions& options) {
  GradientSet<double> grads(store);
  {
    ad::Graph<double> g(&grads);
    const ad::Var out = loss(g);
    if (!std::isfinite(g.scalar(out))) throw NumericError("grad_check: non-finite loss");
    g.backward(out);
  }
  auto evaluate = [&] {
    ad::Graph<double> g;
    return g.scalar(loss(g));
  };
  return compare_gradients(store, evaluate, grads, options);
}

}  // namespace storylogic
