// Apache License, Version 2.0, refer to LICENSE.txt

#ifndef CVB_MOG_HPP_
#define CVB_MOG_HPP_

#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "cvb/expfam.hpp"
#include "cvb/model.hpp"

namespace cvb {

// N observations of dimension D, one per row.
struct MogData {
  Eigen::MatrixXd Y;

  std::size_t size() const { return static_cast<std::size_t>(Y.rows()); }
  std::size_t dim() const { return static_cast<std::size_t>(Y.cols()); }
  void validate() const;
};

// Symmetric Dirichlet(alpha) over K mixing proportions and a shared
// Gauss-Wishart prior over each component's (mean, precision).
struct MogPriors {
  double alpha = 1.0;
  GaussWishartParams gw0;
  std::size_t K = 1;

  void validate() const;
};

// Weak data-scaled defaults: alpha = 1e-3, m0 = data mean, kappa0 = 1e-2,
// nu0 = D, S0 = D * diag(data covariance).
MogPriors default_mog_priors(const MogData& data, std::size_t K);

// Responsibility-weighted statistics:
//   r_hat[k] = sum_n r_nk,  y_bar.row(k) = sum_n r_nk y_n,
//   C[k] = sum_n r_nk y_n y_n^T.
struct MogStats {
  Eigen::VectorXd r_hat;
  Eigen::MatrixXd y_bar;
  std::vector<Eigen::MatrixXd> C;
};

MogStats mog_stats(const MogData& data, std::span<const double> r,
                   std::size_t K);

// Implicit posterior q*(pi, eta) = Dir(alpha_k) x prod_k GW(m_k, kappa_k,
// nu_k, S_k).
struct MogPosterior {
  DirichletParams alpha_k;
  std::vector<GaussWishartParams> components;
  MogStats stats;
};

// Throws NumericalError naming the component whose S_k is not positive
// definite.
MogPosterior mog_posterior(const MogPriors& priors, const MogStats& stats);

double mog_bound(const MogPriors& priors, const MogData& data,
                 const LogitTable& state);
GradientPair mog_gradient(const MogPriors& priors, const MogData& data,
                          const LogitTable& state);

class MogModel final : public CollapsedModel {
 public:
  MogModel(MogData data, MogPriors priors);

  const RowLayout& layout() const override { return layout_; }
  double bound(const LogitTable& state) const override;
  GradientPair gradients(const LogitTable& state) const override;
  double mean_field(const LogitTable& state,
                    const LogitTable& aux) const override;
  double posterior_kl(const LogitTable& state,
                      const LogitTable& aux) const override;
  bool supports_mean_field() const override { return true; }

  MogPosterior posterior(const LogitTable& state) const;

  const MogData& data() const { return data_; }
  const MogPriors& priors() const { return priors_; }

 private:
  MogData data_;
  MogPriors priors_;
  RowLayout layout_;
};

}  // namespace cvb

#endif  // CVB_MOG_HPP_
