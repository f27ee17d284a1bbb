// Apache License, Version 2.0, refer to LICENSE.txt

#include "cvb/mog.hpp"

#include <cmath>
#include <numbers>
#include <string>

namespace cvb {

namespace {

// Cholesky factor and log-determinant of one component's S_k.
struct Factor {
  Eigen::LLT<Eigen::MatrixXd> llt;
  double log_det = 0.0;
};

Factor factorize(const Eigen::MatrixXd& s, std::size_t k) {
  Factor f{Eigen::LLT<Eigen::MatrixXd>(s), 0.0};
  if (f.llt.info() != Eigen::Success) {
    throw NumericalError("mog: scatter matrix S_" + std::to_string(k) +
                         " is not positive definite");
  }
  const auto& l = f.llt.matrixLLT();
  for (Eigen::Index i = 0; i < l.rows(); ++i) f.log_det += 2.0 * std::log(l(i, i));
  return f;
}

std::vector<Factor> factorize_all(const MogPosterior& post) {
  std::vector<Factor> out;
  out.reserve(post.components.size());
  for (std::size_t k = 0; k < post.components.size(); ++k) {
    out.push_back(factorize(post.components[k].S, k));
  }
  return out;
}

void check_dense(const LogitTable& state, const MogData& data, std::size_t K) {
  if (state.rows() != data.size() || state.layout().uniform_width() != K) {
    throw std::invalid_argument("mog: state must be an N x K table");
  }
}

double mahalanobis(const Factor& f, const Eigen::VectorXd& diff) {
  return diff.dot(f.llt.solve(diff));
}

}  // namespace

void MogData::validate() const {
  if (Y.rows() < 1 || Y.cols() < 1) {
    throw std::invalid_argument("MogData: need at least one observation and one dimension");
  }
  if (!Y.allFinite()) throw std::invalid_argument("MogData: non-finite entry");
}

void MogPriors::validate() const {
  if (!(alpha > 0.0) || !std::isfinite(alpha)) {
    throw std::invalid_argument("MogPriors: alpha must be positive");
  }
  if (K < 1) throw std::invalid_argument("MogPriors: K must be at least 1");
  gw0.validate();
}

MogPriors default_mog_priors(const MogData& data, std::size_t K) {
  data.validate();
  const auto d = static_cast<Eigen::Index>(data.dim());
  const Eigen::VectorXd mean = data.Y.colwise().mean().transpose();
  Eigen::VectorXd var = Eigen::VectorXd::Zero(d);
  for (Eigen::Index n = 0; n < data.Y.rows(); ++n) {
    var += (data.Y.row(n).transpose() - mean).cwiseAbs2();
  }
  var /= static_cast<double>(data.Y.rows());
  for (Eigen::Index j = 0; j < d; ++j) {
    if (!(var(j) > 0.0)) var(j) = 1.0;
  }

  MogPriors p;
  p.alpha = 1e-3;
  p.K = K;
  p.gw0.m = mean;
  p.gw0.kappa = 1e-2;
  p.gw0.nu = static_cast<double>(d);
  p.gw0.S = (static_cast<double>(d) * var).asDiagonal();
  return p;
}

MogStats mog_stats(const MogData& data, std::span<const double> r,
                   std::size_t K) {
  const std::size_t N = data.size();
  const auto D = static_cast<Eigen::Index>(data.dim());
  if (r.size() != N * K) throw std::invalid_argument("mog_stats: shape mismatch");

  MogStats s;
  s.r_hat = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(K));
  s.y_bar = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(K), D);
  s.C.assign(K, Eigen::MatrixXd::Zero(D, D));
  for (std::size_t n = 0; n < N; ++n) {
    const Eigen::VectorXd y = data.Y.row(static_cast<Eigen::Index>(n)).transpose();
    const Eigen::MatrixXd outer = y * y.transpose();
    for (std::size_t k = 0; k < K; ++k) {
      const double w = r[n * K + k];
      const auto kk = static_cast<Eigen::Index>(k);
      s.r_hat(kk) += w;
      s.y_bar.row(kk) += w * y.transpose();
      s.C[k] += w * outer;
    }
  }
  return s;
}

MogPosterior mog_posterior(const MogPriors& priors, const MogStats& stats) {
  const std::size_t K = static_cast<std::size_t>(stats.r_hat.size());
  const auto& gw0 = priors.gw0;
  const Eigen::MatrixXd prior_outer = gw0.kappa * gw0.m * gw0.m.transpose();

  std::vector<double> alpha(K);
  std::vector<GaussWishartParams> comps(K);
  for (std::size_t k = 0; k < K; ++k) {
    const auto kk = static_cast<Eigen::Index>(k);
    const double rk = stats.r_hat(kk);
    alpha[k] = priors.alpha + rk;
    auto& c = comps[k];
    c.kappa = gw0.kappa + rk;
    c.nu = gw0.nu + rk;
    c.m = (gw0.kappa * gw0.m + stats.y_bar.row(kk).transpose()) / c.kappa;
    Eigen::MatrixXd S = gw0.S + stats.C[k] + prior_outer -
                        c.kappa * c.m * c.m.transpose();
    c.S = 0.5 * (S + S.transpose());
    Eigen::LLT<Eigen::MatrixXd> llt(c.S);
    if (llt.info() != Eigen::Success) {
      throw NumericalError("mog_posterior: S_" + std::to_string(k) +
                           " lost positive definiteness (r_hat = " +
                           std::to_string(rk) + ")");
    }
  }
  return MogPosterior{DirichletParams(std::move(alpha)), std::move(comps), stats};
}

double mog_bound(const MogPriors& priors, const MogData& data,
                 const LogitTable& state) {
  const std::size_t K = priors.K;
  check_dense(state, data, K);
  const auto post = mog_posterior(priors, mog_stats(data, state.r(), K));
  const auto factors = factorize_all(post);

  const double N = static_cast<double>(data.size());
  const double D = static_cast<double>(data.dim());
  const double prior_gw = ln_gauss_wishart_norm(priors.gw0);

  double value = -0.5 * N * D * std::log(2.0 * std::numbers::pi);
  value += ln_dirichlet_norm(DirichletParams::symmetric(K, priors.alpha));
  value -= ln_dirichlet_norm(post.alpha_k);
  value += static_cast<double>(K) * prior_gw;
  for (std::size_t k = 0; k < K; ++k) {
    const auto& c = post.components[k];
    value -= ln_gauss_wishart_norm(factors[k].log_det, c.nu, c.kappa, data.dim());
  }
  value += state.entropy();
  return value;
}

GradientPair mog_gradient(const MogPriors& priors, const MogData& data,
                          const LogitTable& state) {
  const std::size_t K = priors.K;
  const std::size_t N = data.size();
  check_dense(state, data, K);
  const auto post = mog_posterior(priors, mog_stats(data, state.r(), K));
  const auto factors = factorize_all(post);
  const double D = static_cast<double>(data.dim());

  // Per-component part of dL/dr_nk that does not depend on n.
  std::vector<double> base(K);
  for (std::size_t k = 0; k < K; ++k) {
    const auto& c = post.components[k];
    base[k] = -0.5 * D / c.kappa - 0.5 * factors[k].log_det +
              digamma(post.alpha_k[k]) + 0.5 * multi_digamma_sum(c.nu, data.dim()) -
              1.0;
  }

  GradientPair g;
  g.natural.resize(N * K);
  const auto log_r = state.log_r();
  for (std::size_t n = 0; n < N; ++n) {
    const Eigen::VectorXd y = data.Y.row(static_cast<Eigen::Index>(n)).transpose();
    for (std::size_t k = 0; k < K; ++k) {
      const auto& c = post.components[k];
      const double quad = mahalanobis(factors[k], y - c.m);
      g.natural[n * K + k] = base[k] - log_r[n * K + k] - 0.5 * c.nu * quad;
    }
  }
  g.ordinary = softmax_chain(state.layout(), state.r(), g.natural);
  return g;
}

// ---------------------------------------------------------------------------

MogModel::MogModel(MogData data, MogPriors priors)
    : data_(std::move(data)), priors_(std::move(priors)) {
  data_.validate();
  priors_.validate();
  if (priors_.gw0.dim() != data_.dim()) {
    throw std::invalid_argument("MogModel: prior dimension does not match data");
  }
  layout_ = RowLayout::dense(data_.size(), priors_.K);
}

double MogModel::bound(const LogitTable& state) const {
  check_state(state);
  return mog_bound(priors_, data_, state);
}

GradientPair MogModel::gradients(const LogitTable& state) const {
  check_state(state);
  return mog_gradient(priors_, data_, state);
}

MogPosterior MogModel::posterior(const LogitTable& state) const {
  check_state(state);
  return mog_posterior(priors_, mog_stats(data_, state.r(), priors_.K));
}

double MogModel::mean_field(const LogitTable& state,
                            const LogitTable& aux) const {
  check_state(state);
  const auto q = posterior(aux);
  const auto factors = factorize_all(q);
  const std::size_t K = priors_.K;
  const std::size_t N = data_.size();
  const std::size_t dim = data_.dim();
  const double D = static_cast<double>(dim);

  const auto e_log_pi = dirichlet_expected_log(q.alpha_k);
  std::vector<double> base(K);
  for (std::size_t k = 0; k < K; ++k) {
    const auto& c = q.components[k];
    const double e_logdet =
        multi_digamma_sum(c.nu, dim) + D * std::numbers::ln2 - factors[k].log_det;
    base[k] = e_log_pi[k] + 0.5 * e_logdet - 0.5 * D / c.kappa -
              0.5 * D * std::log(2.0 * std::numbers::pi);
  }

  // E_q(X)[L_1] with q(Z) from state.
  double value = state.entropy();
  const auto r = state.r();
  for (std::size_t n = 0; n < N; ++n) {
    const Eigen::VectorXd y = data_.Y.row(static_cast<Eigen::Index>(n)).transpose();
    for (std::size_t k = 0; k < K; ++k) {
      const auto& c = q.components[k];
      const double quad = mahalanobis(factors[k], y - c.m);
      value += r[n * K + k] * (base[k] - 0.5 * c.nu * quad);
    }
  }

  // + E[ln p(X)] - E[ln q(X)]
  value -= kl_dirichlet(q.alpha_k, DirichletParams::symmetric(K, priors_.alpha));
  for (const auto& c : q.components) value -= kl_gauss_wishart(c, priors_.gw0);
  return value;
}

double MogModel::posterior_kl(const LogitTable& state,
                              const LogitTable& aux) const {
  const auto p = posterior(aux);
  const auto q = posterior(state);
  double kl = kl_dirichlet(p.alpha_k, q.alpha_k);
  for (std::size_t k = 0; k < priors_.K; ++k) {
    kl += kl_gauss_wishart(p.components[k], q.components[k]);
  }
  return kl;
}

}  // namespace cvb
