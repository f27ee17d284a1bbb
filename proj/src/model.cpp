// Apache License, Version 2.0, refer to LICENSE.txt

#include "cvb/model.hpp"

#include <cmath>

namespace cvb {

double CollapsedModel::mean_field(const LogitTable&, const LogitTable&) const {
  throw NotSupported("mean-field bound is not supported by this model");
}

double CollapsedModel::posterior_kl(const LogitTable&, const LogitTable&) const {
  throw NotSupported("implicit-posterior KL is not supported by this model");
}

void CollapsedModel::check_state(const LogitTable& state) const {
  if (!(state.layout() == layout())) {
    throw std::invalid_argument("state layout does not match the model");
  }
}

BoundReport mean_field_bound(const CollapsedModel& model,
                             const LogitTable& state, const LogitTable& aux) {
  if (!model.supports_mean_field()) {
    throw NotSupported("mean-field bound is not supported by this model");
  }
  BoundReport report;
  report.klc = model.bound(state);
  report.mf = model.mean_field(state, aux);
  report.kl_gap = model.posterior_kl(state, aux);
  return report;
}

Curvature directional_curvature(const CollapsedModel& model,
                                const LogitTable& state,
                                std::span<const double> direction, double h) {
  if (!(h >= 1e-5 && h <= 1e-3)) {
    throw std::invalid_argument("directional_curvature: h must lie in [1e-5, 1e-3]");
  }
  const LogitTable plus = state.shifted(direction, h);
  const LogitTable minus = state.shifted(direction, -h);
  const double h2 = h * h;

  Curvature out;
  const double f0 = model.bound(state);
  out.klc_second = (model.bound(plus) - 2.0 * f0 + model.bound(minus)) / h2;

  const double m0 = model.mean_field(state, state);
  out.mf_second = (model.mean_field(plus, state) - 2.0 * m0 +
                   model.mean_field(minus, state)) / h2;
  return out;
}

}  // namespace cvb
