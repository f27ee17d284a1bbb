// Apache License, Version 2.0, refer to LICENSE.txt

#ifndef CVB_MODEL_HPP_
#define CVB_MODEL_HPP_

#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "cvb/expfam.hpp"

namespace cvb {

// Raised when a model is asked for a capability it does not provide.
class NotSupported : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// Gradients of the collapsed bound for one state, both flattened row-major
// over the state's layout.
//
//   natural:  gradient with respect to the responsibilities r, which is the
//             natural gradient with respect to the logits rho.
//   ordinary: gradient with respect to rho (softmax chain rule applied).
struct GradientPair {
  std::vector<double> ordinary;
  std::vector<double> natural;
};

struct BoundReport {
  double klc = 0.0;
  std::optional<double> mf;
  std::optional<double> kl_gap;
};

// A conjugate-exponential model whose parameters have been marginalized
// analytically, leaving a bound over the factorized categorical q(Z) only.
// Instances are immutable; every member is safe to call concurrently.
class CollapsedModel {
 public:
  virtual ~CollapsedModel() = default;

  virtual const RowLayout& layout() const = 0;

  // Collapsed bound L_KL at `state`.
  virtual double bound(const LogitTable& state) const = 0;

  virtual GradientPair gradients(const LogitTable& state) const = 0;

  // Mean-field bound with q(Z) from `state` and the collapsed variables fixed
  // at the implicit posterior q*(X) computed from `aux`.
  virtual double mean_field(const LogitTable& state,
                            const LogitTable& aux) const;

  // KL(q*(aux) || q*(state)); equals bound(state) - mean_field(state, aux).
  virtual double posterior_kl(const LogitTable& state,
                              const LogitTable& aux) const;

  virtual bool supports_mean_field() const { return false; }

 protected:
  // Throws std::invalid_argument unless the state's layout matches the model.
  void check_state(const LogitTable& state) const;
};

BoundReport mean_field_bound(const CollapsedModel& model,
                             const LogitTable& state, const LogitTable& aux);

struct Curvature {
  double klc_second = 0.0;
  double mf_second = 0.0;
};

// Second directional derivatives of L_KL and of L_MF (q(X) held at
// q*(state)) along `direction`, by central differences with step h.
Curvature directional_curvature(const CollapsedModel& model,
                                const LogitTable& state,
                                std::span<const double> direction, double h);

}  // namespace cvb

#endif  // CVB_MODEL_HPP_
