// Apache License, Version 2.0, refer to LICENSE.txt

#include "cvb/expfam.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include <boost/math/special_functions/digamma.hpp>
#include <boost/math/special_functions/gamma.hpp>

namespace cvb {

namespace {

void require_positive_finite(double x, const char* what) {
  if (!(x > 0.0) || !std::isfinite(x)) {
    throw std::domain_error(std::string(what) +
                            ": argument must be positive and finite, got " +
                            std::to_string(x));
  }
}

// Cholesky of an SPD matrix; throws NumericalError with the failing context.
Eigen::LLT<Eigen::MatrixXd> cholesky(const Eigen::MatrixXd& s,
                                     const char* what) {
  Eigen::LLT<Eigen::MatrixXd> llt(s);
  if (llt.info() != Eigen::Success) {
    throw NumericalError(std::string(what) + ": matrix is not positive definite");
  }
  return llt;
}

double log_det(const Eigen::LLT<Eigen::MatrixXd>& llt) {
  const auto& l = llt.matrixLLT();
  double acc = 0.0;
  for (Eigen::Index i = 0; i < l.rows(); ++i) acc += std::log(l(i, i));
  return 2.0 * acc;
}

}  // namespace

double ln_gamma(double x) {
  require_positive_finite(x, "ln_gamma");
  return boost::math::lgamma(x);
}

double digamma(double x) {
  require_positive_finite(x, "digamma");
  return boost::math::digamma(x);
}

// ---------------------------------------------------------------------------

DirichletParams::DirichletParams(std::vector<double> concentration)
    : concentration_(std::move(concentration)) {
  if (concentration_.empty()) {
    throw std::invalid_argument("DirichletParams: empty concentration vector");
  }
  for (double a : concentration_) {
    if (!(a > 0.0) || !std::isfinite(a)) {
      throw std::invalid_argument(
          "DirichletParams: concentrations must be positive and finite");
    }
  }
}

DirichletParams DirichletParams::symmetric(std::size_t k, double alpha) {
  return DirichletParams(std::vector<double>(k, alpha));
}

double DirichletParams::total() const {
  return std::accumulate(concentration_.begin(), concentration_.end(), 0.0);
}

void GaussWishartParams::validate() const {
  const auto d = m.size();
  if (d < 1) throw std::invalid_argument("GaussWishartParams: empty location");
  if (S.rows() != d || S.cols() != d) {
    throw std::invalid_argument("GaussWishartParams: S must be D x D");
  }
  if (!(kappa > 0.0) || !std::isfinite(kappa)) {
    throw std::invalid_argument("GaussWishartParams: kappa must be positive");
  }
  if (!(nu > static_cast<double>(d) - 1.0) || !std::isfinite(nu)) {
    throw std::invalid_argument("GaussWishartParams: nu must exceed D - 1");
  }
  if (!m.allFinite() || !S.allFinite()) {
    throw std::invalid_argument("GaussWishartParams: non-finite entries");
  }
  const double scale = std::max(1.0, S.cwiseAbs().maxCoeff());
  if ((S - S.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale) {
    throw std::invalid_argument("GaussWishartParams: S is not symmetric");
  }
  cholesky(S, "GaussWishartParams");
}

// ---------------------------------------------------------------------------

double ln_dirichlet_norm(std::span<const double> concentration) {
  double total = 0.0;
  double acc = 0.0;
  for (double a : concentration) {
    total += a;
    acc += ln_gamma(a);
  }
  return ln_gamma(total) - acc;
}

double ln_dirichlet_norm(const DirichletParams& p) {
  return ln_dirichlet_norm(std::span<const double>(p.concentration()));
}

double ln_gauss_wishart_norm(double log_det_s, double nu, double kappa,
                             std::size_t dim) {
  const double d = static_cast<double>(dim);
  double value = 0.5 * nu * log_det_s - 0.5 * (nu + 1.0) * d * std::numbers::ln2 -
                 0.25 * d * (d + 1.0) * std::log(std::numbers::pi) +
                 0.5 * d * std::log(kappa);
  for (std::size_t j = 1; j <= dim; ++j) {
    value -= ln_gamma(0.5 * (nu + 1.0 - static_cast<double>(j)));
  }
  return value;
}

double ln_gauss_wishart_norm(const GaussWishartParams& p) {
  p.validate();
  const auto llt = cholesky(p.S, "ln_gauss_wishart_norm");
  return ln_gauss_wishart_norm(log_det(llt), p.nu, p.kappa, p.dim());
}

double multi_digamma_sum(double nu, std::size_t dim) {
  double acc = 0.0;
  for (std::size_t j = 1; j <= dim; ++j) {
    acc += digamma(0.5 * (nu + 1.0 - static_cast<double>(j)));
  }
  return acc;
}

std::vector<double> dirichlet_expected_log(const DirichletParams& p) {
  const double psi_total = digamma(p.total());
  std::vector<double> out(p.size());
  for (std::size_t k = 0; k < p.size(); ++k) {
    out[k] = digamma(p[k]) - psi_total;
  }
  return out;
}

double kl_dirichlet(const DirichletParams& a, const DirichletParams& b) {
  if (a.size() != b.size()) {
    throw std::invalid_argument("kl_dirichlet: dimension mismatch");
  }
  const auto e_log = dirichlet_expected_log(a);
  double kl = ln_dirichlet_norm(a) - ln_dirichlet_norm(b);
  for (std::size_t k = 0; k < a.size(); ++k) {
    kl += (a[k] - b[k]) * e_log[k];
  }
  return kl;
}

double kl_gauss_wishart(const GaussWishartParams& a,
                        const GaussWishartParams& b) {
  if (a.dim() != b.dim()) {
    throw std::invalid_argument("kl_gauss_wishart: dimension mismatch");
  }
  const std::size_t dim = a.dim();
  const double d = static_cast<double>(dim);
  const auto llt_a = cholesky(a.S, "kl_gauss_wishart");
  const auto llt_b = cholesky(b.S, "kl_gauss_wishart");
  const double logdet_a = log_det(llt_a);
  const double logdet_b = log_det(llt_b);

  // E_a[ln|Lambda|]
  const double e_logdet =
      multi_digamma_sum(a.nu, dim) + d * std::numbers::ln2 - logdet_a;
  const Eigen::VectorXd delta = a.m - b.m;
  const double quad = delta.dot(llt_a.solve(delta));
  const double trace = llt_a.solve(b.S).trace();

  double kl = ln_gauss_wishart_norm(logdet_a, a.nu, a.kappa, dim) -
              ln_gauss_wishart_norm(logdet_b, b.nu, b.kappa, dim);
  kl += 0.5 * (a.nu - b.nu) * e_logdet;
  kl -= 0.5 * (d + a.nu * d);
  kl += 0.5 * (b.kappa * d / a.kappa + b.kappa * a.nu * quad + a.nu * trace);
  return kl;
}

// ---------------------------------------------------------------------------

RowLayout RowLayout::dense(std::size_t rows, std::size_t width) {
  if (width == 0) throw std::invalid_argument("RowLayout: zero row width");
  RowLayout layout;
  layout.offsets_.resize(rows + 1);
  for (std::size_t i = 0; i <= rows; ++i) layout.offsets_[i] = i * width;
  layout.uniform_width_ = width;
  return layout;
}

RowLayout RowLayout::ragged(std::span<const std::size_t> widths) {
  RowLayout layout;
  layout.offsets_.resize(widths.size() + 1);
  layout.offsets_[0] = 0;
  bool uniform = !widths.empty();
  for (std::size_t i = 0; i < widths.size(); ++i) {
    if (widths[i] == 0) throw std::invalid_argument("RowLayout: zero row width");
    layout.offsets_[i + 1] = layout.offsets_[i] + widths[i];
    uniform = uniform && widths[i] == widths[0];
  }
  layout.uniform_width_ = uniform ? widths[0] : 0;
  return layout;
}

void softmax_rows(const RowLayout& layout, std::span<const double> rho,
                  std::span<double> r, std::span<double> log_r) {
  if (rho.size() != layout.size() || r.size() != layout.size() ||
      (!log_r.empty() && log_r.size() != layout.size())) {
    throw std::invalid_argument("softmax_rows: shape mismatch");
  }
  for (std::size_t i = 0; i < layout.rows(); ++i) {
    const std::size_t off = layout.offset(i);
    const std::size_t w = layout.width(i);
    double mx = rho[off];
    for (std::size_t k = 1; k < w; ++k) mx = std::max(mx, rho[off + k]);
    double z = 0.0;
    for (std::size_t k = 0; k < w; ++k) {
      r[off + k] = std::exp(rho[off + k] - mx);
      z += r[off + k];
    }
    const double log_z = std::log(z) + mx;
    for (std::size_t k = 0; k < w; ++k) {
      r[off + k] /= z;
      if (!log_r.empty()) log_r[off + k] = rho[off + k] - log_z;
    }
  }
}

std::vector<double> softmax_rows(const RowLayout& layout,
                                 std::span<const double> rho) {
  std::vector<double> r(layout.size());
  softmax_rows(layout, rho, r);
  return r;
}

std::vector<double> softmax_chain(const RowLayout& layout,
                                  std::span<const double> r,
                                  std::span<const double> g_r) {
  if (r.size() != layout.size() || g_r.size() != layout.size()) {
    throw std::invalid_argument("softmax_chain: shape mismatch");
  }
  std::vector<double> out(layout.size());
  for (std::size_t i = 0; i < layout.rows(); ++i) {
    const std::size_t off = layout.offset(i);
    const std::size_t w = layout.width(i);
    double mean = 0.0;
    for (std::size_t k = 0; k < w; ++k) mean += r[off + k] * g_r[off + k];
    for (std::size_t k = 0; k < w; ++k) {
      out[off + k] = r[off + k] * (g_r[off + k] - mean);
    }
  }
  return out;
}

double categorical_entropy(std::span<const double> r) {
  double h = 0.0;
  for (double p : r) {
    if (p > 0.0) h -= p * std::log(std::clamp(p, 1e-300, 1.0));
  }
  return h;
}

// ---------------------------------------------------------------------------

LogitTable::LogitTable(RowLayout layout, std::vector<double> rho)
    : layout_(std::move(layout)), rho_(std::move(rho)) {
  if (rho_.size() != layout_.size()) {
    throw std::invalid_argument("LogitTable: logit count does not match layout");
  }
  for (double v : rho_) {
    if (!std::isfinite(v)) {
      throw std::invalid_argument("LogitTable: non-finite logit");
    }
  }
  r_.resize(rho_.size());
  log_r_.resize(rho_.size());
  softmax_rows(layout_, rho_, r_, log_r_);
}

LogitTable LogitTable::uniform(const RowLayout& layout) {
  return LogitTable(layout, std::vector<double>(layout.size(), 0.0));
}

LogitTable LogitTable::shifted(std::span<const double> direction,
                               double step) const {
  if (direction.size() != rho_.size()) {
    throw std::invalid_argument("LogitTable::shifted: length mismatch");
  }
  std::vector<double> rho(rho_);
  for (std::size_t i = 0; i < rho.size(); ++i) rho[i] += step * direction[i];
  return LogitTable(layout_, std::move(rho));
}

LogitTable LogitTable::recentered() const {
  std::vector<double> rho(rho_);
  for (std::size_t i = 0; i < layout_.rows(); ++i) {
    const std::size_t off = layout_.offset(i);
    const std::size_t w = layout_.width(i);
    const double mx = *std::max_element(rho.begin() + off, rho.begin() + off + w);
    for (std::size_t k = 0; k < w; ++k) rho[off + k] -= mx;
  }
  return LogitTable(layout_, std::move(rho));
}

double LogitTable::entropy() const {
  double h = 0.0;
  for (std::size_t i = 0; i < r_.size(); ++i) h -= r_[i] * log_r_[i];
  return h;
}

}  // namespace cvb
